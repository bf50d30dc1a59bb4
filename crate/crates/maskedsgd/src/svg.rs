//! Standalone SVG line plots of convergence curves.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{HarnessError, Result};
use crate::experiment::ExperimentResult;

/// Stand-in for nonpositive values on a log axis.
pub const LOG_FLOOR: f64 = 1e-30;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, log_y: bool) -> Self {
        Self {
            title: title.into(),
            x_label: "iteration k".into(),
            y_label: "mean relative error".into(),
            log_y,
            series: Vec::new(),
        }
    }

    /// Mean curve of `result`, plus its bound overlay if present.
    pub fn add_result(&mut self, label: &str, result: &ExperimentResult) {
        let xs = result.iterations.iter().map(|&k| k as f64);
        self.series.push(Series {
            label: label.to_string(),
            points: xs
                .clone()
                .zip(result.mean_relative_error.iter().copied())
                .collect(),
            dashed: false,
        });
        if let Some(b) = &result.bound_overlay {
            self.series.push(Series {
                label: format!("{label} bound"),
                points: xs.zip(b.iter().copied()).collect(),
                dashed: true,
            });
        }
    }

    pub fn render(&self) -> String {
        let mut clamped = 0usize;
        let transformed: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .map(|&(x, y)| {
                        if self.log_y {
                            let y = if y > 0.0 && y.is_finite() {
                                y
                            } else {
                                clamped += 1;
                                LOG_FLOOR
                            };
                            (x, y.log10())
                        } else {
                            (x, y)
                        }
                    })
                    .collect()
            })
            .collect();
        if clamped > 0 {
            warn!("{clamped} nonpositive or non-finite values clamped to {LOG_FLOOR:e} on the log axis");
        }

        let finite = transformed
            .iter()
            .flatten()
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = finite.fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil();
        }
        if y1 == y0 {
            y0 -= 1.0;
            y1 += 1.0;
        }

        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
        );
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        for t in 0..=4 {
            let x = x0 + (x1 - x0) * t as f64 / 4.0;
            let px = sx(x);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                fmt_tick(x)
            );
        }
        for y in y_ticks(y0, y1, self.log_y) {
            let py = sy(y);
            let label = if self.log_y {
                format!("1e{}", y as i64)
            } else {
                fmt_tick(y)
            };
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let y_label = if self.log_y {
            format!("{} (log scale)", self.y_label)
        } else {
            self.y_label.clone()
        };
        let _ = writeln!(
            out,
            r#"<text x="20" y="{0:.2}" text-anchor="middle" transform="rotate(-90 20 {0:.2})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&y_label)
        );

        for (i, (s, pts)) in self.series.iter().zip(&transformed).enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let mut coords = String::new();
            for (j, &(x, y)) in pts.iter().enumerate() {
                if j > 0 {
                    coords.push(' ');
                }
                let _ = write!(coords, "{:.2},{:.2}", sx(x), sy(y));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{coords}"/>"#
            );
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        if clamped > 0 {
            let _ = writeln!(
                out,
                r#"<text class="warning" x="{LEFT}" y="{:.2}" fill="red">warning: {clamped} nonpositive values clamped to {LOG_FLOOR:e}</text>"#,
                HEIGHT - 2.0
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn y_ticks(y0: f64, y1: f64, log_y: bool) -> Vec<f64> {
    if log_y {
        let span = (y1 - y0) as i64;
        let step = (span / 8).max(1);
        (0..=span / step).map(|i| y0 + (i * step) as f64).collect()
    } else {
        (0..=4).map(|i| y0 + (y1 - y0) * i as f64 / 4.0).collect()
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn emit_svg_plot(result: &ExperimentResult, path: &Path, log_y: bool) -> Result<()> {
    let mut plot = Plot::new("convergence", log_y);
    plot.add_result("mean", result);
    write_plot(&plot, path)
}

pub fn write_plot(plot: &Plot, path: &Path) -> Result<()> {
    if plot.series.iter().all(|s| s.points.is_empty()) {
        return Err(HarnessError::config("nothing to plot"));
    }
    std::fs::write(path, plot.render()).map_err(|e| HarnessError::io(path, e))
}
