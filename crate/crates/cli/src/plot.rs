//! Minimal SVG learning-curve renderer.

use std::fmt::Write as _;

use qsc_core::trainer::{moving_average, RunReport, MOVING_AVERAGE_WINDOW};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("cannot plot a report without episodes")]
pub struct EmptyReport;

/// Per-episode final QFI as dots plus the windowed moving average as a line.
pub fn learning_curve_svg(report: &RunReport) -> Result<String, EmptyReport> {
    let finals = report.final_qfis();
    let smooth = moving_average(&finals, MOVING_AVERAGE_WINDOW).map_err(|_| EmptyReport)?;
    let n = finals.len();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let span = (n.max(2) - 1) as f64;
    let x = |i: usize| LEFT + plot_w * i as f64 / span;
    let y = |q: f64| TOP + plot_h * (1.0 - q.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle">{} seed {}: final QFI per episode</text>"#,
        WIDTH / 2.0,
        report.agent,
        report.seed
    );

    // Axes, y ticks at quarter steps, x ticks at fifths of the run.
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} V{} H{}" stroke="black" fill="none"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for k in 0..=4 {
        let q = k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{q:.2}</text>"##,
            LEFT + plot_w,
            y(q),
            y(q),
            LEFT - 6.0,
            y(q) + 4.0
        );
    }
    for k in 0..=5 {
        let i = ((n - 1) as f64 * k as f64 / 5.0).round() as usize;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{i}</text>"#,
            x(i),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">episode</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">QFI</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let _ = writeln!(svg, r##"<g fill="#4a78b5" fill-opacity="0.35">"##);
    for (i, &q) in finals.iter().enumerate() {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, x(i), y(q));
    }
    let _ = writeln!(svg, "</g>");

    let points: Vec<String> = smooth
        .iter()
        .enumerate()
        .map(|(i, &q)| format!("{:.2},{:.2}", x(i), y(q)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#d1495b" stroke-width="2" points="{}"/>"##,
        points.join(" ")
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#d1495b">moving average ({MOVING_AVERAGE_WINDOW})</text>"##,
        LEFT + plot_w,
        TOP + 12.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
