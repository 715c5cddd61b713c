use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use curveflow_core::analysis::{
    circle_extinction_time, circle_radius_exact, circle_rate, decay_envelope, run_checks, CheckStatus, CurveMeta,
    DiagnosticsReport,
};
use curveflow_core::config::{curve_source, flow_values, Cli, Command, GradientArgs, OracleArgs, RunConfig, VerifyArgs};
use curveflow_core::flow::{evolve, Outcome, StepControl};
use curveflow_core::gradient::{circulant_velocity, flow_velocity};
use curveflow_core::render::render_frames;
use curveflow_core::{io, DiscreteCurve, Error, FlowParams, Result};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Evolve(args) => RunConfig::from_args(args).and_then(|cfg| run_evolve(&cfg)),
        Command::Gradient(args) => run_gradient(&args),
        Command::Verify(args) => run_verify(&args),
        Command::CircleOracle(args) => run_oracle(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("curveflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[derive(Serialize)]
struct Summary {
    curve: String,
    lambda: f64,
    a: f64,
    samples: usize,
    status: &'static str,
    t_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    extinction_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_extinction_time: Option<f64>,
    initial_length: f64,
    final_length: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    stored_states: usize,
    checks_passed: bool,
}

fn run_evolve(cfg: &RunConfig) -> Result<u8> {
    let curve0 = cfg.source.build()?;
    let params = cfg.flow_params(&curve0)?;
    let meta = cfg.source.meta();
    let traj = evolve(&curve0, &params, &cfg.ctrl, cfg.t_end, cfg.stride)?;
    let report = run_checks(&traj, &params, &meta)?;

    let dir = &cfg.out_dir;
    io::write_trajectory(&traj, dir, cfg.points_every)?;
    io::write_report(&report, &dir.join(io::REPORT_FILE), cfg.timings)?;
    if cfg.frames {
        render_frames(&traj, &dir.join("frames"), &cfg.render)?;
    }
    let status = match traj.outcome {
        Outcome::Completed => "completed",
        Outcome::Extinct { .. } => "extinct",
        Outcome::StepLimit => "step_limit",
    };
    let summary = Summary {
        curve: meta.label.clone(),
        lambda: params.lambda(),
        a: params.a,
        samples: curve0.len(),
        status,
        t_final: traj.last().t,
        extinction_time: traj.extinction_time(),
        predicted_extinction_time: meta.circle_radius.and_then(|r| circle_extinction_time(r, &params)),
        initial_length: traj.diagnostics[0].length,
        final_length: traj.diagnostics.last().map(|d| d.length).unwrap_or(0.0),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        stored_states: traj.states.len(),
        checks_passed: report.passed(),
    };
    io::write_json(&summary, &dir.join(io::SUMMARY_FILE))?;

    println!(
        "{status} at t = {} after {} steps ({} stored); length {:.6e} -> {:.6e}",
        summary.t_final, summary.accepted_steps, summary.stored_states, summary.initial_length, summary.final_length
    );
    if let (Some(t), Some(p)) = (summary.extinction_time, summary.predicted_extinction_time) {
        println!("extinction time {t:.6} (circle prediction {p:.6})");
    }
    print_report(&report);
    println!("outputs written to {}", dir.display());
    Ok(0)
}

fn print_report(report: &DiagnosticsReport) {
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "n/a ",
            CheckStatus::Skipped => "skip",
        };
        println!("  [{tag}] {:<22} margin {:>13.6e}  {}", c.name, c.margin, c.detail);
    }
}

#[derive(Serialize)]
struct VelocityOutput {
    lambda: f64,
    a: f64,
    length: f64,
    circulant: bool,
    velocity: Vec<[f64; 2]>,
}

fn run_gradient(args: &GradientArgs) -> Result<u8> {
    let source = curve_source(&args.curve)?;
    let (lambda, a) = flow_values(&args.flow)?;
    let curve = source.build()?;
    let params = FlowParams::new(lambda, a)?;
    let v = if args.circulant {
        circulant_velocity(&curve, &params)?
    } else {
        flow_velocity(&curve, &params)
    };
    let out = VelocityOutput {
        lambda,
        a,
        length: curve.length(),
        circulant: args.circulant,
        velocity: v.iter().map(|p| p.to_array()).collect(),
    };
    match &args.out {
        Some(path) => io::write_json(&out, path)?,
        None => println!("{}", serde_json::to_string(&out).expect("finite values serialize")),
    }
    Ok(0)
}

fn verify_case(name: &str, curve: &DiscreteCurve, meta: CurveMeta, lambda: f64, t_end: f64) -> Result<DiagnosticsReport> {
    let params = FlowParams::new(lambda, 2.0)?.relative_to(curve)?;
    let traj = evolve(curve, &params, &StepControl::for_lambda(lambda), t_end, 1)?;
    let mut report = run_checks(&traj, &params, &meta)?;
    report.curve.label = format!("{name} lambda={lambda}");
    Ok(report)
}

fn run_verify(args: &VerifyArgs) -> Result<u8> {
    let n = args.n;
    let shapes: Vec<(&str, DiscreteCurve, CurveMeta)> = vec![
        ("circle", DiscreteCurve::circle(1.0, n)?, CurveMeta::circle("circle", 1.0)),
        ("ellipse", DiscreteCurve::ellipse(2.0, 1.0, n)?, CurveMeta::new("ellipse")),
        ("star", DiscreteCurve::star(3, 0.3, n)?, CurveMeta::new("star")),
    ];
    let mut cases = Vec::new();
    for &lambda in &args.lambdas {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Usage(format!("kernel widths must be positive, got {lambda}")));
        }
        for (name, curve, meta) in &shapes {
            cases.push((*name, curve, meta.clone(), lambda));
        }
    }
    let reports: Vec<Result<DiagnosticsReport>> = cases
        .par_iter()
        .map(|(name, curve, meta, lambda)| verify_case(name, curve, meta.clone(), *lambda, args.t_end))
        .collect();

    let mut all_passed = true;
    for (k, report) in reports.into_iter().enumerate() {
        let report = report?;
        println!("{}: {}", report.curve.label, if report.passed() { "ok" } else { "FAILED" });
        print_report(&report);
        all_passed &= report.passed();
        if let Some(dir) = &args.out {
            io::write_report(&report, &dir.join(format!("report_{k:02}.json")), false)?;
        }
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn run_oracle(args: &OracleArgs) -> Result<u8> {
    let params = FlowParams::new(args.lambda, args.a)?;
    if !(args.radius > 0.0 && args.radius.is_finite()) {
        return Err(Error::Usage(format!("--radius must be positive, got {}", args.radius)));
    }
    let r0 = args.radius;
    println!("b = {:.16e}", circle_rate(&params));
    if let Some(t) = circle_extinction_time(r0, &params) {
        println!("extinction_time = {t:.16e}");
    }
    for &t in &args.times {
        let r = circle_radius_exact(r0, t, &params);
        println!(
            "t = {t}: radius = {r:.16e}, length = {:.16e}, decay_envelope = {:.16e}",
            std::f64::consts::TAU * r,
            decay_envelope(std::f64::consts::TAU * r0, t, args.lambda)
        );
    }
    Ok(0)
}
