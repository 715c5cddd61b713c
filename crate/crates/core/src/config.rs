//! Command-line surface and run configuration.
//!
//! Every `evolve` flag can also be given in a flat `key = value` file passed
//! with `--config`; keys are the long flag names without dashes
//! (`t-end = 2`, `lambda = 0.1`, `frames = true`). Flags on the command line
//! win over the file. The default output directory comes from
//! [`OUT_DIR_ENV`] when `--out` is not given.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::CurveMeta;
use crate::curve::DiscreteCurve;
use crate::error::{Error, Result};
use crate::flow::StepControl;
use crate::gradient::{FlowParams, DEFAULT_RELATIVE_EXTINCTION};
use crate::io::read_curve;
use crate::render::RenderOptions;

pub const OUT_DIR_ENV: &str = "CURVEFLOW_OUT";
pub const DEFAULT_OUT_DIR: &str = "curveflow-out";
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_A: f64 = 2.0;
pub const DEFAULT_N: usize = 512;
pub const DEFAULT_T_END: f64 = 1.0;

#[derive(Debug, Parser)]
#[command(name = "curveflow", version, about = "Sobolev gradient flow of length for closed plane curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the flow and write trajectory, diagnostics, report, and frames.
    Evolve(EvolveArgs),
    /// Print the velocity field of a curve as JSON.
    Gradient(GradientArgs),
    /// Run the invariant checks over the built-in corpus.
    Verify(VerifyArgs),
    /// Print closed-form circle values.
    CircleOracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Circle,
    Ellipse,
    Star,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CurveArgs {
    /// Built-in initial curve.
    #[arg(long, value_enum)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Semi-axis along x.
    #[arg(long)]
    pub axis_a: Option<f64>,
    /// Semi-axis along y.
    #[arg(long)]
    pub axis_b: Option<f64>,
    #[arg(long)]
    pub lobes: Option<u32>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// JSON curve file `{"points": [[x, y], ...]}` instead of a built-in shape.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Number of samples for built-in shapes.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FlowArgs {
    /// Kernel width λ > 0.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Homogeneity exponent a.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub dt_init: Option<f64>,
    #[arg(long)]
    pub dt_min: Option<f64>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Store every k-th accepted step.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Attach point data to every k-th stored record (0: never).
    #[arg(long)]
    pub points_every: Option<usize>,
    /// Extinction threshold relative to the initial length.
    #[arg(long)]
    pub extinction_eps: Option<f64>,
    /// Redistribute points to constant speed every k accepted steps.
    #[arg(long)]
    pub resample_every: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write SVG frames.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub frames: Option<bool>,
    /// Draw frames centered and divided by length.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rescaled: Option<bool>,
    #[arg(long)]
    pub frame_size: Option<u32>,
    /// Include per-check runtimes in the report.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timings: Option<bool>,
    /// Flat `key = value` file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GradientArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Use the constant-speed FFT path (velocity at resampled stations).
    #[arg(long)]
    pub circulant: bool,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Kernel widths to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
    pub lambdas: Vec<f64>,
    /// Directory for one report per case.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_A, allow_negative_numbers = true)]
    pub a: f64,
    /// Times at which to print the radius.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
    pub times: Vec<f64>,
}

/// Where the initial curve comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Circle { radius: f64, n: usize },
    Ellipse { a: f64, b: f64, n: usize },
    Star { lobes: u32, amplitude: f64, n: usize },
    File(PathBuf),
}

impl CurveSource {
    pub fn build(&self) -> Result<DiscreteCurve> {
        match self {
            CurveSource::Circle { radius, n } => DiscreteCurve::circle(*radius, *n),
            CurveSource::Ellipse { a, b, n } => DiscreteCurve::ellipse(*a, *b, *n),
            CurveSource::Star { lobes, amplitude, n } => DiscreteCurve::star(*lobes, *amplitude, *n),
            CurveSource::File(path) => read_curve(path),
        }
    }

    pub fn meta(&self) -> CurveMeta {
        match self {
            CurveSource::Circle { radius, n } => CurveMeta::circle(format!("circle(r={radius}, n={n})"), *radius),
            CurveSource::Ellipse { a, b, n } => CurveMeta::new(format!("ellipse({a}, {b}, n={n})")),
            CurveSource::Star { lobes, amplitude, n } => {
                CurveMeta::new(format!("star({lobes}, {amplitude}, n={n})"))
            }
            CurveSource::File(path) => CurveMeta::new(path.display().to_string()),
        }
    }
}

/// Fully resolved `evolve` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: CurveSource,
    pub lambda: f64,
    pub a: f64,
    /// Extinction threshold relative to the initial length.
    pub extinction_rel: f64,
    pub ctrl: StepControl,
    pub t_end: f64,
    pub stride: usize,
    pub points_every: usize,
    pub out_dir: PathBuf,
    pub frames: bool,
    pub render: RenderOptions,
    pub timings: bool,
}

impl RunConfig {
    /// Flow parameters with the extinction threshold scaled to `curve0`.
    pub fn flow_params(&self, curve0: &DiscreteCurve) -> Result<FlowParams> {
        let p = FlowParams::new(self.lambda, self.a)?;
        let l0 = curve0.length();
        if !(l0 > 0.0) {
            return Err(Error::DegenerateCurve { length: l0 });
        }
        p.with_extinction_eps(self.extinction_rel * l0)
    }
}

/// Parse an `evolve` command line (including the program name).
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    match cli.command {
        Command::Evolve(args) => RunConfig::from_args(args),
        _ => Err(Error::Usage("expected the `evolve` subcommand".into())),
    }
}

/// `key = value` pairs; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!("{source}:{}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Usage(format!("{source}:{}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(out)
}

/// Fills unset flags from a config file, consuming keys as it goes.
struct FileValues {
    source: String,
    values: BTreeMap<String, String>,
}

impl FileValues {
    fn fill<T: FromStr>(&mut self, slot: &mut Option<T>, key: &str) -> Result<()> {
        if let Some(raw) = self.values.remove(key) {
            if slot.is_none() {
                let v = raw
                    .parse()
                    .map_err(|_| Error::Usage(format!("{}: cannot parse `{key} = {raw}`", self.source)))?;
                *slot = Some(v);
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(Error::Usage(format!("{}: unknown key `{k}`", self.source))),
            None => Ok(()),
        }
    }
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Shape as ValueEnum>::from_str(s, true)
    }
}

fn merge_file(args: &mut EvolveArgs, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    let mut f = FileValues { values: parse_config_file(&text, &source)?, source };
    let c = &mut args.curve;
    f.fill(&mut c.shape, "shape")?;
    f.fill(&mut c.radius, "radius")?;
    f.fill(&mut c.axis_a, "axis-a")?;
    f.fill(&mut c.axis_b, "axis-b")?;
    f.fill(&mut c.lobes, "lobes")?;
    f.fill(&mut c.amplitude, "amplitude")?;
    f.fill(&mut c.input, "input")?;
    f.fill(&mut c.n, "n")?;
    f.fill(&mut args.flow.lambda, "lambda")?;
    f.fill(&mut args.flow.a, "a")?;
    f.fill(&mut args.t_end, "t-end")?;
    f.fill(&mut args.rel_tol, "rel-tol")?;
    f.fill(&mut args.dt_init, "dt-init")?;
    f.fill(&mut args.dt_min, "dt-min")?;
    f.fill(&mut args.dt_max, "dt-max")?;
    f.fill(&mut args.max_steps, "max-steps")?;
    f.fill(&mut args.stride, "stride")?;
    f.fill(&mut args.points_every, "points-every")?;
    f.fill(&mut args.extinction_eps, "extinction-eps")?;
    f.fill(&mut args.resample_every, "resample-every")?;
    f.fill(&mut args.out, "out")?;
    f.fill(&mut args.frames, "frames")?;
    f.fill(&mut args.rescaled, "rescaled")?;
    f.fill(&mut args.frame_size, "frame-size")?;
    f.fill(&mut args.timings, "timings")?;
    f.finish()
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

/// Resolve the initial-curve flags. Exactly one source must be given; a bare
/// command line defaults to the unit circle.
pub fn curve_source(c: &CurveArgs) -> Result<CurveSource> {
    let n = c.n.unwrap_or(DEFAULT_N);
    let shape_params = c.radius.is_some()
        || c.axis_a.is_some()
        || c.axis_b.is_some()
        || c.lobes.is_some()
        || c.amplitude.is_some();
    if let Some(path) = &c.input {
        if c.shape.is_some() || shape_params || c.n.is_some() {
            return Err(usage("--input conflicts with built-in shape flags (--shape, --n, ...)"));
        }
        return Ok(CurveSource::File(path.clone()));
    }
    let reject = |flag: &str, set: bool, shape: &str| -> Result<()> {
        if set {
            Err(usage(format!("--{flag} does not apply to --shape {shape}")))
        } else {
            Ok(())
        }
    };
    match c.shape.unwrap_or(Shape::Circle) {
        Shape::Circle => {
            reject("axis-a", c.axis_a.is_some(), "circle")?;
            reject("axis-b", c.axis_b.is_some(), "circle")?;
            reject("lobes", c.lobes.is_some(), "circle")?;
            reject("amplitude", c.amplitude.is_some(), "circle")?;
            Ok(CurveSource::Circle { radius: positive("radius", c.radius.unwrap_or(1.0))?, n })
        }
        Shape::Ellipse => {
            reject("radius", c.radius.is_some(), "ellipse")?;
            reject("lobes", c.lobes.is_some(), "ellipse")?;
            reject("amplitude", c.amplitude.is_some(), "ellipse")?;
            Ok(CurveSource::Ellipse {
                a: positive("axis-a", c.axis_a.unwrap_or(2.0))?,
                b: positive("axis-b", c.axis_b.unwrap_or(1.0))?,
                n,
            })
        }
        Shape::Star => {
            reject("radius", c.radius.is_some(), "star")?;
            reject("axis-a", c.axis_a.is_some(), "star")?;
            reject("axis-b", c.axis_b.is_some(), "star")?;
            Ok(CurveSource::Star { lobes: c.lobes.unwrap_or(3), amplitude: c.amplitude.unwrap_or(0.3), n })
        }
    }
}

/// Resolve λ and a, rejecting values outside the metric family.
pub fn flow_values(f: &FlowArgs) -> Result<(f64, f64)> {
    let lambda = positive("lambda", f.lambda.unwrap_or(DEFAULT_LAMBDA))?;
    let a = f.a.unwrap_or(DEFAULT_A);
    if !a.is_finite() {
        return Err(usage(format!("--a must be finite, got {a}")));
    }
    Ok((lambda, a))
}

impl RunConfig {
    pub fn from_args(mut args: EvolveArgs) -> Result<RunConfig> {
        if let Some(path) = args.config.clone() {
            merge_file(&mut args, &path)?;
        }
        let source = curve_source(&args.curve)?;
        let (lambda, a) = flow_values(&args.flow)?;

        let mut ctrl = StepControl::for_lambda(lambda);
        if let Some(v) = args.rel_tol {
            ctrl.rel_tol = positive("rel-tol", v)?;
        }
        if let Some(v) = args.dt_init {
            ctrl.dt_init = positive("dt-init", v)?;
            ctrl.dt_min = ctrl.dt_min.min(ctrl.dt_init);
            ctrl.dt_max = ctrl.dt_max.max(ctrl.dt_init);
        }
        if let Some(v) = args.dt_min {
            ctrl.dt_min = positive("dt-min", v)?;
        }
        if let Some(v) = args.dt_max {
            ctrl.dt_max = positive("dt-max", v)?;
        }
        if args.dt_init.is_none() {
            ctrl.dt_init = ctrl.dt_init.clamp(ctrl.dt_min, ctrl.dt_max.max(ctrl.dt_min));
        }
        if let Some(v) = args.max_steps {
            ctrl.max_steps = v;
        }
        ctrl.resample_every = args.resample_every;
        ctrl.validate().map_err(|e| usage(e.to_string()))?;

        let t_end = args.t_end.unwrap_or(DEFAULT_T_END);
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(usage(format!("--t-end must be finite and non-negative, got {t_end}")));
        }
        let stride = args.stride.unwrap_or(1);
        if stride == 0 {
            return Err(usage("--stride must be at least 1"));
        }
        let extinction_rel = positive("extinction-eps", args.extinction_eps.unwrap_or(DEFAULT_RELATIVE_EXTINCTION))?;
        let frame_size = args.frame_size.unwrap_or(RenderOptions::default().size);
        if frame_size == 0 {
            return Err(usage("--frame-size must be positive"));
        }
        let out_dir = args
            .out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        Ok(RunConfig {
            source,
            lambda,
            a,
            extinction_rel,
            ctrl,
            t_end,
            stride,
            points_every: args.points_every.unwrap_or(1),
            out_dir,
            frames: args.frames.unwrap_or(false),
            render: RenderOptions { size: frame_size, rescaled: args.rescaled.unwrap_or(false) },
            timings: args.timings.unwrap_or(false),
        })
    }
}
