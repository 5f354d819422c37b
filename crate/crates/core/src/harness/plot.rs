//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textfmt::write_atomic;

use super::log::EpisodeLog;

const W: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const GAP: f64 = 50.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
    /// dashed horizontal reference lines
    pub hlines: Vec<(f64, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub panels: Vec<Panel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Velocity,
    Input,
    Residual,
}

impl PlotKind {
    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::Velocity => "velocity.svg",
            PlotKind::Input => "input.svg",
            PlotKind::Residual => "residual.svg",
        }
    }
}

/// Learning residual next to the H-LIP discrepancy, per training sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualData {
    pub eps: Vec<[f64; 2]>,
    pub w_m: Vec<[f64; 2]>,
    pub dstar: [f64; 2],
}

/// What a plot needs besides the episode logs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotContext {
    pub u_bounds: (f64, f64),
    pub v_d: f64,
    pub period: f64,
    pub residual: ResidualData,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let pad = lo.abs().max(1.0) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(fig: &Figure) -> Result<String> {
    if fig.panels.is_empty() || fig.panels.iter().all(|p| p.series.iter().all(|s| s.points.is_empty())) {
        return Err(Error::usage("nothing to plot"));
    }
    let pts = || fig.panels.iter().flat_map(|p| &p.series).flat_map(|s| &s.points);
    let (x0, x1) = nice_range(
        pts().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let height = TOP + fig.panels.len() as f64 * (PANEL_H + GAP) + 10.0;
    let pw = W - LEFT - RIGHT;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(&fig.title));
    for (pi, panel) in fig.panels.iter().enumerate() {
        let top = TOP + pi as f64 * (PANEL_H + GAP);
        let ys = panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(panel.hlines.iter().map(|h| h.0));
        let (ylo, yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        let (y0, y1) = nice_range(ylo, yhi);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{top}" width="{pw}" height="{PANEL_H}" fill="none" stroke="black"/>"#);
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{y2:.2}" stroke="#ddd"/><text x="{x:.2}" y="{ty:.2}" text-anchor="middle">{}</text>"##,
                fmt_tick(t),
                x = sx(t),
                y = top,
                y2 = top + PANEL_H,
                ty = top + PANEL_H + 15.0
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{x2:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{}</text>"##,
                fmt_tick(t),
                y = sy(t),
                x2 = LEFT + pw,
                tx = LEFT - 6.0,
                ty = sy(t) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            top + PANEL_H / 2.0,
            esc(&panel.y_label)
        );
        if pi + 1 == fig.panels.len() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                LEFT + pw / 2.0,
                top + PANEL_H + 34.0,
                esc(&fig.x_label)
            );
        }
        for (y, label) in &panel.hlines {
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT}" y1="{yy:.2}" x2="{x2:.2}" y2="{yy:.2}" stroke="black" stroke-dasharray="6,4"/><text x="{tx:.2}" y="{ty:.2}">{}</text>"#,
                esc(label),
                yy = sy(*y),
                x2 = LEFT + pw,
                tx = LEFT + pw + 6.0,
                ty = sy(*y) + 4.0
            );
        }
        for (si, series) in panel.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let path: Vec<String> = series.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            if path.len() == 1 {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(series.points[0].0), sy(series.points[0].1));
            } else if !path.is_empty() {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            }
            let ly = top + 14.0 + 16.0 * si as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{a:.2}" y1="{ly:.2}" x2="{b:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{c:.2}" y="{ty:.2}">{}</text>"#,
                esc(&series.label),
                a = LEFT + pw + 6.0,
                b = LEFT + pw + 26.0,
                c = LEFT + pw + 30.0,
                ty = ly + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Builds the figure of the given kind from episode logs.
pub fn figure(logs: &[EpisodeLog], kind: PlotKind, ctx: &PlotContext) -> Figure {
    match kind {
        PlotKind::Velocity => Figure {
            title: "Horizontal COM velocity".into(),
            x_label: "time (s)".into(),
            panels: vec![Panel {
                y_label: "v (m/s)".into(),
                series: logs
                    .iter()
                    .map(|l| Series {
                        label: l.controller.clone(),
                        points: if l.trace.is_empty() {
                            l.steps.iter().map(|s| ((s.k + 1) as f64 * ctx.period, s.x_pre.v)).collect()
                        } else {
                            l.trace.iter().map(|t| (t.time, t.vx)).collect()
                        },
                    })
                    .collect(),
                hlines: vec![(ctx.v_d, "v_d".into())],
            }],
        },
        PlotKind::Input => Figure {
            title: "Step size".into(),
            x_label: "step".into(),
            panels: vec![Panel {
                y_label: "u (m)".into(),
                series: logs
                    .iter()
                    .map(|l| Series {
                        label: l.controller.clone(),
                        points: l.steps.iter().map(|s| (s.k as f64, s.u_cmd)).collect(),
                    })
                    .collect(),
                hlines: vec![(ctx.u_bounds.0, "U min".into()), (ctx.u_bounds.1, "U max".into())],
            }],
        },
        PlotKind::Residual => {
            let r = &ctx.residual;
            let panel = |i: usize, unit: &str, name: &str| Panel {
                y_label: format!("{name} ({unit})"),
                series: vec![
                    Series {
                        label: "learned".into(),
                        points: r.eps.iter().enumerate().map(|(j, e)| (j as f64, e[i])).collect(),
                    },
                    Series {
                        label: "H-LIP".into(),
                        points: r.w_m.iter().enumerate().map(|(j, e)| (j as f64, e[i])).collect(),
                    },
                ],
                hlines: vec![(r.dstar[i], "+d*".into()), (-r.dstar[i], "-d*".into())],
            };
            Figure {
                title: "Step-to-step model residuals".into(),
                x_label: "sample".into(),
                panels: vec![panel(0, "m", "p residual"), panel(1, "m/s", "v residual")],
            }
        }
    }
}

pub fn emit_plot(logs: &[EpisodeLog], kind: PlotKind, ctx: &PlotContext, path: &Path) -> Result<()> {
    let svg = render_svg(&figure(logs, kind, ctx))?;
    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::StepLog;
    use crate::hlip::DiscreteState;
    use nalgebra::Vector2;

    fn log(name: &str, us: &[f64]) -> EpisodeLog {
        EpisodeLog {
            controller: name.into(),
            steps: us
                .iter()
                .enumerate()
                .map(|(k, &u)| StepLog {
                    k,
                    x_pre: DiscreteState::new(0.1, 1.0),
                    u_cmd: u,
                    u_real: u,
                    u_e: u - 0.4,
                    e: Vector2::zeros(),
                    w_hat: Vector2::zeros(),
                    push_force: 0.0,
                    margin_u: 0.0,
                    margin_xp: 0.0,
                    margin_xv: 0.0,
                })
                .collect(),
            ..Default::default()
        }
    }

    fn ctx() -> PlotContext {
        PlotContext { u_bounds: (-0.7, 0.7), v_d: 1.0, period: 0.4, residual: ResidualData::default() }
    }

    #[test]
    fn input_plot_has_bounds_and_one_series_per_controller() {
        let logs = [log("sls", &[0.4, 0.6, 0.5]), log("deadbeat", &[0.4, 0.8, 0.3])];
        let svg = render_svg(&figure(&logs, PlotKind::Input, &ctx())).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("U min") && svg.contains("U max"));
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg, render_svg(&figure(&logs, PlotKind::Input, &ctx())).unwrap());
    }

    #[test]
    fn single_point_and_residual() {
        let svg = render_svg(&figure(&[log("sls", &[0.4])], PlotKind::Velocity, &ctx())).unwrap();
        assert!(svg.contains("<circle"));
        let mut c = ctx();
        c.residual = ResidualData { eps: vec![[0.01, -0.02]; 3], w_m: vec![[0.05, 0.1]; 3], dstar: [0.01, 0.02] };
        let svg = render_svg(&figure(&[], PlotKind::Residual, &c)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("+d*"));
        assert!(render_svg(&figure(&[], PlotKind::Input, &ctx())).is_err());
    }

    #[test]
    fn tick_values() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
        assert_eq!(fmt_tick(-0.0), "0");
    }
}
