//! Hand-written SVG plots. Output depends only on the inputs, so reruns are
//! byte-identical.

use std::fmt::Write;

use swarm_core::policy::{LogRow, Outcome};
use swarm_core::{ChannelConfig, GridPosition};

const K_COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
const MARGIN: f64 = 40.0;

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Channel outline, waypoints, the trajectory coloured by transducer, and an
/// optional outcome annotation. Grid `y` points up.
pub fn trajectory_svg(
    channel: &ChannelConfig,
    waypoints: &[GridPosition],
    rows: &[LogRow],
    outcome: Option<Outcome>,
    title: &str,
) -> String {
    let side = 600.0;
    let max = channel.max_coord();
    let s = side / max;
    let px = |p: GridPosition| (MARGIN + p.x * s, MARGIN + (max - p.y) * s);
    let (w, h) = (side + 2.0 * MARGIN + 110.0, side + 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{side:.0}" height="{side:.0}" fill="none" stroke="black" stroke-width="2"/>"#
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{:.0}">{}</text>"#, MARGIN - 12.0, escape(title));

    let _ = writeln!(out, r##"<g fill="none" stroke="#999" stroke-width="1">"##);
    for p in waypoints {
        let (x, y) = px(*p);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
    }
    let _ = writeln!(out, "</g>");

    // Runs of consecutive steps with the same transducer become one polyline.
    let mut i = 0;
    while i + 1 < rows.len() {
        let k = rows[i].k;
        let mut j = i;
        while j + 1 < rows.len() && rows[j].k == k {
            j += 1;
        }
        let pts: Vec<String> = rows[i..=j]
            .iter()
            .map(|r| {
                let (x, y) = px(GridPosition::new(r.x, r.y));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = K_COLORS[(k as usize).clamp(1, 4) - 1];
        let _ =
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        i = j;
    }
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let (x, y) = px(GridPosition::new(first.x, first.y));
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="black"/>"#);
        let (x, y) = px(GridPosition::new(last.x, last.y));
        let _ = writeln!(out, r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="black"/>"#, x - 4.0, y - 4.0);
    }

    let lx = MARGIN + side + 20.0;
    for (i, c) in K_COLORS.iter().enumerate() {
        let y = MARGIN + 20.0 * i as f64;
        let _ =
            writeln!(out, r#"<line x1="{lx}" y1="{y}" x2="{:.0}" y2="{y}" stroke="{c}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{:.0}" y="{:.0}">PZT {}</text>"#, lx + 26.0, y + 4.0, i + 1);
    }
    let _ = writeln!(out, r#"<text x="{lx}" y="{:.0}">steps: {}</text>"#, MARGIN + 100.0, rows.len());
    if let Some(o) = outcome {
        let _ = writeln!(out, r#"<text x="{lx}" y="{:.0}" font-weight="bold">{o}</text>"#, MARGIN + 120.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Centred moving average over `window` samples (shorter at the ends).
fn smooth(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..v.len())
        .map(|i| {
            let (a, b) = (i.saturating_sub(half), (i + half + 1).min(v.len()));
            v[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Local and global prediction error per control step: raw values faint,
/// moving averages bold.
pub fn error_svg(rows: &[LogRow], title: &str) -> String {
    let (pw, ph) = (800.0, 360.0);
    let (w, h) = (pw + 2.0 * MARGIN + 20.0, ph + 2.0 * MARGIN + 20.0);
    let local: Vec<f64> = rows.iter().map(|r| r.err_local).collect();
    let global: Vec<f64> = rows.iter().map(|r| r.err_global).collect();
    let mut all: Vec<f64> = local.iter().chain(&global).copied().filter(|v| v.is_finite()).collect();
    all.sort_by(f64::total_cmp);
    let top = all.get(((all.len() as f64) * 0.99) as usize).or(all.last()).copied().unwrap_or(1.0).max(1e-9) * 1.1;
    let n = rows.len().max(2) as f64 - 1.0;
    let x0 = MARGIN + 20.0;
    let px = |i: usize, v: f64| (x0 + pw * i as f64 / n, MARGIN + ph * (1.0 - (v / top).clamp(0.0, 1.0)));

    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(out, r#"<text x="{x0}" y="{:.0}">{}</text>"#, MARGIN - 12.0, escape(title));
    let _ =
        writeln!(out, r#"<rect x="{x0}" y="{MARGIN}" width="{pw:.0}" height="{ph:.0}" fill="none" stroke="black"/>"#);
    for t in 0..=4 {
        let v = top * t as f64 / 4.0;
        let (_, y) = px(0, v);
        let _ = writeln!(out, r#"<text x="{:.0}" y="{:.1}" text-anchor="end">{v:.0}</text>"#, x0 - 4.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{x0}" y="{:.0}">0</text>"#, MARGIN + ph + 16.0);
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" text-anchor="end">step {}</text>"#,
        x0 + pw,
        MARGIN + ph + 16.0,
        rows.len().saturating_sub(1)
    );
    let window = 36;
    for (name, series, color) in [("local", &local, "#d62728"), ("global", &global, "#1f77b4")] {
        for (data, width, opacity) in [(series.clone(), 0.6, 0.25), (smooth(series, window), 2.0, 1.0)] {
            let pts: Vec<String> = data
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let (x, y) = px(i, v);
                    format!("{x:.1},{y:.1}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}"/>"#,
                pts.join(" ")
            );
        }
        let ly = if name == "local" { MARGIN + 14.0 } else { MARGIN + 30.0 };
        let _ = writeln!(
            out,
            r#"<line x1="{:.0}" y1="{ly}" x2="{:.0}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x0 + pw - 150.0,
            x0 + pw - 130.0
        );
        let _ = writeln!(out, r#"<text x="{:.0}" y="{:.0}">{name} error (cells/s)</text>"#, x0 + pw - 124.0, ly + 4.0);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, k: u8, x: f64, y: f64) -> LogRow {
        LogRow {
            n,
            t_s: 0.0,
            x,
            y,
            tx: 0.0,
            ty: 0.0,
            k,
            pred_dx: 0.0,
            pred_dy: 0.0,
            obs_dx: 0.0,
            obs_dy: 0.0,
            err_local: n as f64,
            err_global: 2.0,
            cursor: 0,
        }
    }

    #[test]
    fn trajectory_groups_runs_by_transducer() {
        let rows = vec![row(0, 1, 10.0, 10.0), row(1, 1, 20.0, 10.0), row(2, 3, 30.0, 10.0), row(3, 3, 30.0, 20.0)];
        let svg = trajectory_svg(
            &ChannelConfig::default(),
            &[GridPosition::new(30.0, 20.0)],
            &rows,
            Some(Outcome::Success),
            "t",
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(K_COLORS[0]) && svg.contains(K_COLORS[2]));
        assert!(svg.contains(">success<"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn y_axis_points_up() {
        let ch = ChannelConfig::default();
        let rows = vec![row(0, 3, 0.0, 0.0), row(1, 3, 0.0, ch.max_coord())];
        let svg = trajectory_svg(&ch, &[], &rows, None, "t");
        assert!(svg.contains(r#"points="40.00,640.00 40.00,40.00""#), "{svg}");
    }

    #[test]
    fn error_plot_has_two_series_and_is_deterministic() {
        let rows: Vec<LogRow> = (0..100).map(|i| row(i, 1, 0.0, 0.0)).collect();
        let a = error_svg(&rows, "e");
        assert_eq!(a, error_svg(&rows, "e"));
        assert_eq!(a.matches("<polyline").count(), 4);
        assert!(a.contains("local error") && a.contains("global error"));
    }

    #[test]
    fn moving_average() {
        assert_eq!(smooth(&[0.0, 3.0, 6.0], 3), vec![1.5, 3.0, 4.5]);
    }
}
