//! Minimal static SVG line charts for sweep results. Convenience output
//! only; nothing downstream parses these.

use std::fmt::Write as _;

/// Renders mean +/- std against the sweep value. Points whose mean is NaN
/// are skipped.
pub fn line_chart_svg(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const ML: f64 = 70.0; // margins
    const MR: f64 = 25.0;
    const MT: f64 = 45.0;
    const MB: f64 = 55.0;

    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .copied()
        .filter(|(_, m, _)| m.is_finite())
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        W / 2.0
    );

    if data.is_empty() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#666\">no data</text>",
            W / 2.0,
            H / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let (xmin, xmax) = bounds(data.iter().map(|p| p.0));
    let (ymin, ymax) = bounds(
        data.iter()
            .flat_map(|(_, m, s)| [m - s, m + s])
            .filter(|v| v.is_finite()),
    );
    let xspan = (xmax - xmin).max(1e-12);
    let yspan = (ymax - ymin).max(1e-12);
    let sx = |x: f64| ML + (x - xmin) / xspan * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - ymin) / yspan * (H - MT - MB);

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    for (value, x) in [(xmin, ML), (xmax, W - MR)] {
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{value:.4}</text>",
            H - MB + 18.0
        );
    }
    for (value, y) in [(ymin, H - MB), (ymax, MT)] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{value:.4}</text>",
            ML - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{xlabel}</text>",
        (ML + W - MR) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{ylabel}</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    );

    // Error bars, line, and markers.
    for &(x, mean, std) in &data {
        if std > 0.0 {
            let _ = writeln!(
                svg,
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#7799cc\" stroke-width=\"1.5\"/>",
                sx(x),
                sy(mean - std),
                sy(mean + std)
            );
        }
    }
    let path: Vec<String> = data
        .iter()
        .map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#2255aa\" stroke-width=\"2\"/>",
        path.join(" ")
    );
    for &(x, m, _) in &data {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#2255aa\"/>",
            sx(x),
            sy(m)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        (0.0, 1.0)
    } else {
        (min, max)
    }
}
