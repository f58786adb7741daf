//! Self-contained SVG rendering of a K3 sweep: the exact curve, sampled
//! estimates with error bars, and the two reference bounds. No external
//! assets and no timestamps, so identical inputs give identical bytes.

use lgi_core::SweepResult;
use std::f64::consts::PI;
use std::fmt::Write;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 58.0;

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_hi - self.x_lo).max(1e-12);
        MARGIN_L + (v - self.x_lo) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_hi - self.y_lo).max(1e-12);
        HEIGHT - MARGIN_B - (v - self.y_lo) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

/// Renders the sweep. `exact_curve` supplies the reference line as
/// (tau_angle, k3) samples; pass the same rule's exact values.
pub fn render_sweep(result: &SweepResult, exact_curve: &[(f64, f64)]) -> String {
    let xs: Vec<f64> = result
        .points
        .iter()
        .map(|p| p.tau_angle)
        .chain(exact_curve.iter().map(|&(x, _)| x))
        .collect();
    let x_lo = xs.iter().cloned().fold(f64::MAX, f64::min);
    let x_hi = xs.iter().cloned().fold(f64::MIN, f64::max);
    let data_y: Vec<f64> = result
        .points
        .iter()
        .flat_map(|p| [p.k3 - p.k3_stderr, p.k3 + p.k3_stderr])
        .chain(exact_curve.iter().map(|&(_, y)| y))
        .chain([1.0, 1.5]) // keep both bounds visible
        .collect();
    let y_lo = data_y.iter().cloned().fold(f64::MAX, f64::min) - 0.2;
    let y_hi = data_y.iter().cloned().fold(f64::MIN, f64::max) + 0.2;
    let f = Frame {
        x_lo,
        x_hi: if x_hi > x_lo { x_hi } else { x_lo + 1.0 },
        y_lo,
        y_hi,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // axes frame
    let _ = writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN_L,
        MARGIN_T,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    // x ticks: five evenly spaced, labeled in units of pi
    for k in 0..5 {
        let v = f.x_lo + (f.x_hi - f.x_lo) * k as f64 / 4.0;
        let px = f.x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{:.2}&#960;</text>"#,
            HEIGHT - MARGIN_B + 22.0,
            v / PI
        );
    }
    // y ticks at half-integers inside the domain
    let mut yt = (f.y_lo * 2.0).ceil() / 2.0;
    while yt <= f.y_hi {
        let py = f.y(yt);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="black"/>"#,
            MARGIN_L - 6.0,
            MARGIN_L
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="end">{yt:.1}</text>"#,
            MARGIN_L - 10.0,
            py + 4.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="lightgray" stroke-width="0.5"/>"#,
            MARGIN_L,
            WIDTH - MARGIN_R
        );
        yt += 0.5;
    }

    // reference bounds: classical at 1, eigenspace-rule ceiling at 1.5
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="orange" stroke-width="1.5"/>"#,
        MARGIN_L,
        f.y(1.0),
        WIDTH - MARGIN_R,
        f.y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="blueviolet" stroke-width="1.5"/>"#,
        MARGIN_L,
        f.y(1.5),
        WIDTH - MARGIN_R,
        f.y(1.5)
    );

    // exact curve
    if exact_curve.len() > 1 {
        let path: Vec<String> = exact_curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.x(x), f.y(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
            path.join(" ")
        );
    }

    // sampled points with error bars
    for p in &result.points {
        let px = f.x(p.tau_angle);
        if p.k3_stderr > 0.0 {
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="red" stroke-width="1"/>"#,
                f.y(p.k3 - p.k3_stderr),
                f.y(p.k3 + p.k3_stderr)
            );
        }
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{:.2}" r="3" fill="red"/>"#,
            f.y(p.k3)
        );
    }

    // labels and legend
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="15" text-anchor="middle">K3 vs &#937;&#964; ({})</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        MARGIN_T - 14.0,
        result.rule.name()
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">&#937;&#964; / &#960;</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="14" transform="rotate(-90 20 {:.1})" text-anchor="middle">K3</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let lx = MARGIN_L + 12.0;
    let mut ly = MARGIN_T + 18.0;
    for (color, label) in [
        ("black", "exact"),
        ("red", "sampled"),
        ("orange", "classical bound (1.0)"),
        ("blueviolet", "Luders bound (1.5)"),
    ] {
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 24.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="12">{label}</text>"#,
            lx + 30.0
        );
        ly += 16.0;
    }

    s.push_str("</svg>\n");
    s
}
