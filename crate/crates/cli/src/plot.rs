//! Deterministic SVG learning-curve chart.
//!
//! Output depends only on the input series: fixed canvas, fixed palette,
//! coordinates printed with fixed precision. Identical inputs therefore
//! produce byte-identical files. Each series draws one shaded band (mean
//! plus/minus one standard deviation) and exactly one polyline for the mean.

use almask_core::harness::CurvePoint;

use crate::error::{CliError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Frame {
    x_min: f64,
    x_max: f64,
}

impl Frame {
    fn x(&self, labels: f64) -> f64 {
        let span = self.x_max - self.x_min;
        MARGIN_L + (labels - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    // accuracy axis is fixed to [0, 1]
    fn y(&self, acc: f64) -> f64 {
        let clamped = acc.clamp(0.0, 1.0);
        HEIGHT - MARGIN_B - clamped * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

/// Render one or more named curves. Names become the legend.
pub fn render_svg(series: &[(String, Vec<CurvePoint>)]) -> Result<String> {
    if series.is_empty() || series.iter().any(|(_, c)| c.is_empty()) {
        return Err(CliError::Runtime("nothing to plot".into()));
    }
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.labels as f64))
        .collect();
    let mut x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if x_min == x_max {
        x_min -= 1.0;
        x_max += 1.0;
    }
    let frame = Frame { x_min, x_max };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    let x0 = fmt(MARGIN_L);
    let x1 = fmt(WIDTH - MARGIN_R);
    let y0 = fmt(HEIGHT - MARGIN_B);
    let y1 = fmt(MARGIN_T);
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));

    // y ticks every 0.2 accuracy
    for i in 0..=5 {
        let acc = f64::from(i) * 0.2;
        let y = fmt(frame.y(acc));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>\n",
            fmt(MARGIN_L - 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" font-size=\"12\" text-anchor=\"end\" \
             dominant-baseline=\"middle\">{acc:.1}</text>\n",
            fmt(MARGIN_L - 9.0)
        ));
    }

    // x ticks at every distinct labeled count
    let mut ticks: Vec<usize> = series
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.labels))
        .collect();
    ticks.sort_unstable();
    ticks.dedup();
    for t in &ticks {
        let x = fmt(frame.x(*t as f64));
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt(HEIGHT - MARGIN_B + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{t}</text>\n",
            fmt(HEIGHT - MARGIN_B + 20.0)
        ));
    }

    // axis titles
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">labeled samples</text>\n",
        fmt((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        fmt(HEIGHT - 15.0)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {})\">accuracy</text>\n",
        fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2.0),
        fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2.0)
    ));

    // bands first so every mean line stays visible
    for (i, (_, curve)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, p) in curve.iter().enumerate() {
            let cmd = if j == 0 { 'M' } else { 'L' };
            d.push_str(&format!(
                "{cmd}{},{} ",
                fmt(frame.x(p.labels as f64)),
                fmt(frame.y(p.mean_acc - p.std_acc))
            ));
        }
        for p in curve.iter().rev() {
            d.push_str(&format!(
                "L{},{} ",
                fmt(frame.x(p.labels as f64)),
                fmt(frame.y(p.mean_acc + p.std_acc))
            ));
        }
        d.push('Z');
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
        ));
    }

    // mean lines: one polyline per series
    for (i, (_, curve)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .iter()
            .map(|p| format!("{},{}", fmt(frame.x(p.labels as f64)), fmt(frame.y(p.mean_acc))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
    }

    // legend, top left inside the frame
    for (i, (name, _)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 14.0 + 18.0 * i as f64;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            fmt(MARGIN_L + 10.0),
            fmt(y),
            fmt(MARGIN_L + 34.0),
            fmt(y)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" dominant-baseline=\"middle\">{}</text>\n",
            fmt(MARGIN_L + 40.0),
            fmt(y),
            xml_escape(name)
        ));
    }

    out.push_str("</svg>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
