//! SVG frames: one file per stored state plus an overlay of all of them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::rescaled;
use crate::curve::DiscreteCurve;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::io::write_text;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Width and height of each frame in pixels.
    pub size: u32,
    /// Center each state on its centroid and divide by its length.
    pub rescaled: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { size: 512, rescaled: false }
    }
}

#[derive(Debug, Clone, Copy)]
struct ViewBox {
    x0: f64,
    y0: f64,
    side: f64,
}

impl ViewBox {
    /// Square box around all curves, padded by 5%.
    fn around<'a>(curves: impl Iterator<Item = &'a DiscreteCurve>) -> ViewBox {
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in curves {
            for p in c.points() {
                lo_x = lo_x.min(p.x);
                hi_x = hi_x.max(p.x);
                lo_y = lo_y.min(p.y);
                hi_y = hi_y.max(p.y);
            }
        }
        if !lo_x.is_finite() {
            return ViewBox { x0: -1.0, y0: -1.0, side: 2.0 };
        }
        let side = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12) * 1.1;
        let (cx, cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
        ViewBox { x0: cx - side / 2.0, y0: cy - side / 2.0, side }
    }
}

fn path_data(curve: &DiscreteCurve, vb: &ViewBox) -> String {
    let mut d = String::new();
    for (i, p) in curve.points().iter().enumerate() {
        // SVG y axis points down
        let y = vb.y0 + vb.side - (p.y - vb.y0);
        let _ = write!(d, "{}{:.6} {:.6} ", if i == 0 { "M" } else { "L" }, p.x, y);
    }
    d.push('Z');
    d
}

fn document(vb: &ViewBox, size: u32, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size}\" height=\"{size}\" \
         viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n\
         <rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"white\"/>\n{body}</svg>\n",
        vb.x0, vb.y0, vb.side, vb.side, vb.x0, vb.y0, vb.side, vb.side
    )
}

fn colour(k: usize, count: usize) -> String {
    let w = if count > 1 { k as f64 / (count - 1) as f64 } else { 0.0 };
    let r = (30.0 + 200.0 * w).round() as u8;
    let b = (200.0 - 170.0 * w).round() as u8;
    format!("#{r:02x}30{b:02x}")
}

/// Curves to draw, with their times. Degenerate states cannot be rescaled
/// and are dropped in that mode.
fn drawable(traj: &Trajectory, opts: &RenderOptions) -> Vec<(f64, DiscreteCurve)> {
    traj.states
        .iter()
        .filter_map(|s| {
            if opts.rescaled {
                rescaled(&s.curve).map(|c| (s.t, c))
            } else {
                Some((s.t, s.curve.clone()))
            }
        })
        .collect()
}

/// Write `frame_NNNN.svg` for every stored state and `overlay.svg` into `dir`.
pub fn render_frames(traj: &Trajectory, dir: &Path, opts: &RenderOptions) -> Result<Vec<PathBuf>> {
    if opts.size == 0 {
        return Err(Error::InvalidArgument("frame size must be positive".into()));
    }
    let curves = drawable(traj, opts);
    let vb = ViewBox::around(curves.iter().map(|(_, c)| c));
    let stroke = vb.side / 300.0;
    let mut written = Vec::with_capacity(curves.len() + 1);
    let mut overlay = String::new();
    for (k, (t, c)) in curves.iter().enumerate() {
        let path = path_data(c, &vb);
        let body = format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke:.6}\"/>\n\
             <!-- t = {t} -->\n"
        );
        let file = dir.join(format!("frame_{k:04}.svg"));
        write_text(&file, &document(&vb, opts.size, &body))?;
        written.push(file);
        let _ = writeln!(
            overlay,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{stroke:.6}\"/>",
            colour(k, curves.len())
        );
    }
    let file = dir.join("overlay.svg");
    write_text(&file, &document(&vb, opts.size, &overlay))?;
    written.push(file);
    Ok(written)
}
