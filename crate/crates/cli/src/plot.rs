//! SVG renderings and the CSV data behind them.
//!
//! Every figure is written together with a CSV holding the plotted values
//! so it can be redrawn with other tools.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mcgpmp::usv::MissionLog;
use mcgpmp::{PlanResult, PlanningFields};

use crate::bench::BenchReport;
use crate::error::{CliError, CliResult};
use crate::scenario::LoadedScenario;

const PALETTE: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

/// A polyline drawn over the map.
pub struct PathLayer<'a> {
    pub label: String,
    pub color: &'a str,
    pub points: &'a [[f64; 2]],
    pub dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Map overlay: obstacles, an optional current quiver, start/goal markers
/// and the given paths. North is up.
pub fn overlay_svg(
    fields: &PlanningFields,
    start: [f64; 2],
    goal: [f64; 2],
    layers: &[PathLayer],
    quiver: bool,
) -> String {
    let shape = fields.grid.shape();
    let (lo, hi) = shape.extent();
    let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
    let scale = 600.0 / w.max(h);
    let (pw, ph) = (w * scale, h * scale);
    let tx = |p: [f64; 2]| ((p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {pw:.1} {:.1}">"#,
        pw,
        ph + 20.0 * (layers.len() as f64 + 1.0),
        ph + 20.0 * (layers.len() as f64 + 1.0),
    );
    let _ = writeln!(s, r#"<rect width="{pw:.1}" height="{ph:.1}" fill="white" stroke="black"/>"#);

    // Obstacles as horizontal runs of occupied cells.
    let cs = shape.cell_size;
    let _ = writeln!(s, r##"<g fill="#444">"##);
    for iy in 0..shape.height {
        let mut ix = 0;
        while ix < shape.width {
            if !fields.grid.is_occupied(ix, iy) {
                ix += 1;
                continue;
            }
            let x0 = ix;
            while ix < shape.width && fields.grid.is_occupied(ix, iy) {
                ix += 1;
            }
            let (x, y) = tx([lo[0] + x0 as f64 * cs, lo[1] + (iy + 1) as f64 * cs]);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#,
                (ix - x0) as f64 * cs * scale,
                cs * scale
            );
        }
    }
    s.push_str("</g>\n");

    if quiver && !fields.env.is_calm() {
        let n = 20;
        let vmax = fields.env.max_current().max(1e-9);
        let arrow = 0.8 * pw / n as f64;
        let _ = writeln!(s, r##"<g stroke="#3a7bd5" stroke-width="1">"##);
        for j in 0..n {
            for i in 0..n {
                let ix = (2 * i + 1) * shape.width / (2 * n);
                let iy = (2 * j + 1) * shape.height / (2 * n);
                let c = fields.env.current_at_cell(ix, iy);
                let (x, y) = tx(shape.cell_center(ix, iy));
                let (dx, dy) = (c[0] / vmax * arrow, -c[1] / vmax * arrow);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{:.2}"/><circle cx="{:.2}" cy="{:.2}" r="1.2" fill="#3a7bd5"/>"##,
                    x + dx,
                    y + dy,
                    x + dx,
                    y + dy
                );
            }
        }
        s.push_str("</g>\n");
    }

    for layer in layers {
        if layer.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = layer
            .points
            .iter()
            .map(|&p| {
                let (x, y) = tx(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let dash = if layer.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            layer.color,
            pts.join(" ")
        );
    }
    for (p, color) in [(start, "green"), (goal, "red")] {
        let (x, y) = tx(p);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{color}"/>"#);
    }
    for (k, layer) in layers.iter().enumerate() {
        let y = ph + 16.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="8" y1="{:.1}" x2="28" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="34" y="{:.1}" font-size="12" font-family="sans-serif">{}</text>"#,
            y - 4.0,
            y - 4.0,
            layer.color,
            y,
            escape(&layer.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One line series of a chart.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// A plain x/y line chart with the value ranges printed on the axes.
pub fn line_chart(title: &str, xlabel: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 240.0, 48.0);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m + (y0 - y) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="18" font-size="13">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{}">{x0:.3}</text><text x="{}" y="{}" text-anchor="end">{x1:.3}</text><text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        h - m + 14.0,
        w - m,
        h - m + 14.0,
        w / 2.0,
        h - 8.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text><text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#,
        m - 4.0,
        h - m,
        m - 4.0,
        m + 4.0
    );
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            ser.color,
            pts.join(" ")
        );
        if ser.points.len() < 30 {
            for &(x, y) in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    px(x),
                    py(y),
                    ser.color
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}" text-anchor="end">{}</text>"#,
            w - m,
            m + 14.0 * k as f64,
            ser.color,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn xy_csv(points: &[[f64; 2]]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p[0], p[1]);
    }
    s
}

/// One overlay SVG and one path CSV per report row that has a path.
/// Returns the files written.
pub fn write_report_plots(
    report: &BenchReport,
    scenarios: &[LoadedScenario],
    dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(CliError::Usage("the report has no rows to plot".into()));
    }
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for (k, row) in report.rows.iter().enumerate() {
        if row.path.is_empty() {
            continue;
        }
        let ls = scenarios
            .iter()
            .find(|ls| ls.scenario.name == row.scenario)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "report row for '{}' has no matching scenario file",
                    row.scenario
                ))
            })?;
        let stem = format!("{}-{}", row.scenario, row.planner);
        let layer = PathLayer {
            label: row.planner.to_string(),
            color: PALETTE[k % PALETTE.len()],
            points: &row.path,
            dashed: false,
        };
        let s = &ls.scenario;
        let svg = dir.join(format!("{stem}.svg"));
        write_file(
            &svg,
            &overlay_svg(&ls.fields, s.start, s.goal, &[layer], true),
        )?;
        let csv = dir.join(format!("{stem}.csv"));
        write_file(&csv, &xy_csv(&row.path))?;
        written.extend([svg, csv]);
    }
    Ok(written)
}

/// Overlay, dense-path CSV and the length-per-iteration curve of a
/// replanning run.
pub fn write_plan_plots(
    plan: &PlanResult,
    ls: &LoadedScenario,
    dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let s = &ls.scenario;
    let stem = &s.name;
    let positions = plan.positions();
    let overlay = dir.join(format!("{stem}-plan.svg"));
    write_file(
        &overlay,
        &overlay_svg(
            &ls.fields,
            s.start,
            s.goal,
            &[PathLayer {
                label: format!("mc-gpmp2-star ({:.1} m)", plan.length),
                color: PALETTE[0],
                points: &positions,
                dashed: false,
            }],
            true,
        ),
    )?;
    let path_csv = dir.join(format!("{stem}-plan.csv"));
    let mut buf = Vec::new();
    plan.write_path_csv(&mut buf)?;
    write_file(&path_csv, &String::from_utf8_lossy(&buf))?;

    let replans_csv = dir.join(format!("{stem}-replans.csv"));
    write_file(&replans_csv, &replan_csv(plan))?;
    let mut best = f64::INFINITY;
    let curve: Vec<(f64, f64)> = plan
        .replans
        .iter()
        .filter_map(|r| {
            if r.accepted {
                best = r.length.unwrap_or(best);
            }
            best.is_finite().then_some((r.iteration as f64, best))
        })
        .collect();
    let raw: Vec<(f64, f64)> = plan
        .replans
        .iter()
        .filter_map(|r| r.length.map(|l| (r.iteration as f64, l)))
        .collect();
    let chart = dir.join(format!("{stem}-replans.svg"));
    write_file(
        &chart,
        &line_chart(
            "path length per planning iteration (m)",
            "iteration",
            &[
                Series {
                    label: "accepted",
                    color: PALETTE[0],
                    points: curve,
                },
                Series {
                    label: "candidate",
                    color: "#999",
                    points: raw,
                },
            ],
        ),
    )?;
    Ok(vec![overlay, path_csv, replans_csv, chart])
}

/// `iteration,graph_seed,length,objective,collision_free,min_clearance,lm_iterations,accepted`
/// with values formatted exactly as in the plan's JSON.
pub fn replan_csv(plan: &PlanResult) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut s = String::from(
        "iteration,graph_seed,length,objective,collision_free,min_clearance,lm_iterations,accepted\n",
    );
    for r in &plan.replans {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.graph_seed,
            opt(r.length),
            opt(r.objective),
            r.collision_free,
            opt(r.min_clearance),
            r.lm_iterations,
            r.accepted
        );
    }
    s
}

/// Planned versus travelled track, the mission CSV and a time-series chart
/// of cross-track error, heading and speed.
pub fn write_mission_plots(
    log: &MissionLog,
    planned: &[[f64; 2]],
    ls: &LoadedScenario,
    dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let s = &ls.scenario;
    let stem = &s.name;
    let travelled: Vec<[f64; 2]> = log.records.iter().map(|r| [r.east, r.north]).collect();
    let overlay = dir.join(format!("{stem}-mission.svg"));
    write_file(
        &overlay,
        &overlay_svg(
            &ls.fields,
            s.start,
            s.goal,
            &[
                PathLayer {
                    label: "planned".into(),
                    color: PALETTE[0],
                    points: planned,
                    dashed: true,
                },
                PathLayer {
                    label: "travelled".into(),
                    color: PALETTE[1],
                    points: &travelled,
                    dashed: false,
                },
            ],
            true,
        ),
    )?;
    let csv = dir.join(format!("{stem}-mission.csv"));
    let mut buf = Vec::new();
    log.write_csv(&mut buf)?;
    write_file(&csv, &String::from_utf8_lossy(&buf))?;

    // Thin long logs so the charts stay small.
    let stride = (log.records.len() / 2000).max(1);
    let pick = |f: &dyn Fn(&mcgpmp::usv::MissionRecord) -> f64| -> Vec<(f64, f64)> {
        log.records.iter().step_by(stride).map(|r| (r.t, f(r))).collect()
    };
    let charts = [
        (
            "cross-track error (m)",
            vec![Series {
                label: "cross-track",
                color: PALETTE[0],
                points: pick(&|r| r.cross_track),
            }],
        ),
        (
            "heading (rad)",
            vec![
                Series {
                    label: "psi",
                    color: PALETTE[1],
                    points: pick(&|r| r.psi),
                },
                Series {
                    label: "psi_d",
                    color: PALETTE[0],
                    points: pick(&|r| r.psi_d),
                },
            ],
        ),
        (
            "speed (m/s)",
            vec![
                Series {
                    label: "V",
                    color: PALETTE[1],
                    points: pick(&|r| r.speed),
                },
                Series {
                    label: "V_d",
                    color: PALETTE[0],
                    points: pick(&|r| r.speed_d),
                },
            ],
        ),
    ];
    let mut out = vec![overlay, csv];
    for (k, (title, series)) in charts.iter().enumerate() {
        let name = ["cross-track", "heading", "speed"][k];
        let p = dir.join(format!("{stem}-mission-{name}.svg"));
        write_file(&p, &line_chart(title, "t (s)", series))?;
        out.push(p);
    }
    Ok(out)
}
