use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::activation::{derivative, eval, ActivationKind};
use crate::error::Result;

pub const PLOT_RANGE: (f64, f64) = (-6.0, 6.0);
pub const PLOT_SAMPLES: usize = 601;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// `(x, f(x), f'(x))` on an even grid over [`PLOT_RANGE`].
pub fn curve_samples(kind: ActivationKind) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = PLOT_RANGE;
    (0..PLOT_SAMPLES)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (PLOT_SAMPLES - 1) as f64;
            (x, eval(kind, x).unwrap(), derivative(kind, x).unwrap())
        })
        .collect()
}

struct Series<'a> {
    label: String,
    color: &'a str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

fn render(title: &str, series: &[Series]) -> String {
    let (x0, x1) = PLOT_RANGE;
    let (mut y0, mut y1) = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold((0.0f64, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let pad = 0.05 * (y1 - y0).max(1e-9);
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // gridlines at integer x and at y ticks
    for xi in (x0 as i64)..=(x1 as i64) {
        let x = px(xi as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
            MARGIN,
            HEIGHT - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{xi}</text>"#,
            HEIGHT - MARGIN + 15.0
        );
    }
    let step = nice_step((y1 - y0) / 8.0);
    let mut t = (y0 / step).ceil() * step;
    while t <= y1 {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            WIDTH - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN - 5.0,
            y + 4.0,
            fmt_tick(t, step)
        );
        t += step;
    }
    // axes through the origin
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        py(0.0),
        WIDTH - MARGIN,
        py(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{MARGIN}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        px(0.0),
        px(0.0),
        HEIGHT - MARGIN
    );
    for (i, ser) in series.iter().enumerate() {
        let mut pts = String::new();
        for &(x, y) in &ser.points {
            let _ = write!(pts, "{:.3},{:.3} ", px(x), py(y));
        }
        let dash = if ser.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            ser.color,
            pts.trim_end()
        );
        let ly = MARGIN + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            MARGIN + 10.0,
            MARGIN + 35.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN + 40.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(t: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if t.abs() < step * 1e-9 { 0.0 } else { t };
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG of one activation and its derivative.
pub fn activation_svg(kind: ActivationKind) -> String {
    let samples = curve_samples(kind);
    render(
        &format!("{kind} and its derivative"),
        &[
            Series {
                label: format!("{kind}(x)"),
                color: COLORS[0],
                dashed: false,
                points: samples.iter().map(|p| (p.0, p.1)).collect(),
            },
            Series {
                label: format!("{kind}'(x)"),
                color: COLORS[1],
                dashed: true,
                points: samples.iter().map(|p| (p.0, p.2)).collect(),
            },
        ],
    )
}

/// SVG overlaying CoLU, Mish and Swish.
pub fn overlay_svg() -> String {
    let kinds = [ActivationKind::Colu, ActivationKind::Mish, ActivationKind::Swish];
    let series: Vec<Series> = kinds
        .iter()
        .zip(COLORS)
        .map(|(&k, color)| Series {
            label: k.to_string(),
            color,
            dashed: false,
            points: curve_samples(k).iter().map(|p| (p.0, p.1)).collect(),
        })
        .collect();
    render("CoLU, Mish and Swish", &series)
}

/// Writes `<id>.svg` for every kind in [`ActivationKind::ALL`] and
/// `colu_mish_swish.svg` into `dir`, creating it if needed.
pub fn emit_activation_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for kind in ActivationKind::ALL {
        let path = dir.join(format!("{}.svg", kind.id()));
        fs::write(&path, activation_svg(kind))?;
        written.push(path);
    }
    let path = dir.join("colu_mish_swish.svg");
    fs::write(&path, overlay_svg())?;
    written.push(path);
    Ok(written)
}
