//! SVG snapshot rendering: region outline, bar traces, current bars, and
//! per-agent shading proportional to the unswept workload fraction.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::cli::output::SeriesRow;
use crate::region::{RegionSpec, Trace};
use crate::sweep::SweepOutcome;

const PALETTE: &[&str] = &[
    "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

struct Frame<'a> {
    rows: &'a [SeriesRow],
    traces: &'a [Trace],
    region: &'a RegionSpec,
    l: f64,
    v: f64,
    epsilon: f64,
    x_min: f64,
    scale: f64,
    height_px: f64,
}

impl Frame<'_> {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.x_min) * self.scale + 10.0,
            self.height_px - y * self.scale + 10.0,
        )
    }

    fn polyline_points(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::new();
        for (x, y) in pts {
            let (px, py) = self.px(*x, *y);
            let _ = write!(s, "{px:.2},{py:.2} ");
        }
        s.trim_end().to_string()
    }

    fn render(&self, row: &SeriesRow) -> String {
        let n = row.m.len();
        let y_bar = (self.v * row.t).min(self.l - self.epsilon);
        let y_top = y_bar + self.epsilon;
        let width_px = (row.x[n] - row.x[0] + 12.0) * self.scale;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            width_px,
            self.height_px + 20.0,
            width_px,
            self.height_px + 20.0
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

        // Subregion fill: trace-bounded area up to the bar top, shaded by
        // the fraction of allocated workload still unswept.
        for i in 0..n {
            let frac = if row.m[i] > 0.0 {
                (row.residuals[i] / row.m[i]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut pts: Vec<(f64, f64)> = self.traces[i]
                .samples()
                .filter(|(y, _)| *y <= y_bar + 1e-12)
                .map(|(y, x)| (x, y))
                .collect();
            pts.push((row.x[i], y_top));
            pts.push((row.x[i + 1], y_top));
            let mut right: Vec<(f64, f64)> = self.traces[i + 1]
                .samples()
                .filter(|(y, _)| *y <= y_bar + 1e-12)
                .map(|(y, x)| (x, y))
                .collect();
            right.reverse();
            pts.extend(right);
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{}" fill-opacity="{:.3}" stroke="none"/>"#,
                self.polyline_points(&pts),
                PALETTE[i % PALETTE.len()],
                0.08 + 0.55 * frac
            );
        }

        // Traces.
        for trace in self.traces {
            let pts: Vec<(f64, f64)> = trace
                .samples()
                .filter(|(y, _)| *y <= y_bar + 1e-12)
                .map(|(y, x)| (x, y))
                .collect();
            if pts.len() > 1 {
                let _ = writeln!(
                    svg,
                    r##"<polyline points="{}" fill="none" stroke="#333" stroke-width="1"/>"##,
                    self.polyline_points(&pts)
                );
            }
        }

        // Region outline: left curve up, top edge, right curve down.
        let mut outline: Vec<(f64, f64)> = (0..=200)
            .map(|k| {
                let y = self.l * k as f64 / 200.0;
                (self.region.left.value_at(y).unwrap_or(row.x[0]), y)
            })
            .collect();
        outline.extend((0..=200).rev().map(|k| {
            let y = self.l * k as f64 / 200.0;
            (self.region.right.value_at(y).unwrap_or(row.x[row.x.len() - 1]), y)
        }));
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            self.polyline_points(&outline)
        );

        // Current bars.
        for &x in &row.x {
            let (x0, y0) = self.px(x, y_bar);
            let (_, y1) = self.px(x, y_top);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#c00" stroke-width="3" stroke-linecap="round"/>"##
            );
        }

        let _ = writeln!(
            svg,
            r#"<text x="12" y="16" font-family="monospace" font-size="12">t = {:.3}</text>"#,
            row.t
        );
        let _ = writeln!(svg, "</svg>");
        svg
    }
}

/// Writes one SVG per selected row into `dir/frames/`.
pub fn write_frames(
    dir: &Path,
    outcome: &SweepOutcome,
    region: &RegionSpec,
    rows: &[SeriesRow],
    indices: &[usize],
    v: f64,
    epsilon: f64,
) -> io::Result<Vec<PathBuf>> {
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir)?;
    let l = region.length_l;
    let n = outcome.history.n;
    let x_min = rows
        .iter()
        .map(|r| r.x[0])
        .fold(f64::INFINITY, f64::min);
    let x_max = rows
        .iter()
        .map(|r| r.x[n])
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = 600.0 / (x_max - x_min).max(l).max(1.0);
    let frame = Frame {
        rows,
        traces: &outcome.history.traces,
        region,
        l,
        v,
        epsilon,
        x_min,
        scale,
        height_px: l * scale,
    };
    let mut written = Vec::new();
    for &k in indices {
        let path = frames_dir.join(format!("frame_{k:06}.svg"));
        std::fs::write(&path, frame.render(&frame.rows[k]))?;
        written.push(path);
    }
    Ok(written)
}
