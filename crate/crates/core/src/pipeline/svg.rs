use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_Y: f64 = 50.0;
const COLORS: [&str; 4] = ["#222222", "#1f77b4", "#ff7f0e", "#2ca02c"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line chart of several equally long series against their index.
///
/// Each value is drawn as one `<circle>` whose `class` is the series name,
/// joined by a polyline of the same color.
pub fn render_svg(title: &str, series: &[(String, Vec<f64>)]) -> String {
    let n = series.first().map_or(0, |(_, v)| v.len());
    let finite = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let hi = if hi > lo { hi } else { lo + 1.0 };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let x = |i: usize| {
        MARGIN_LEFT
            + if n > 1 {
                plot_w * i as f64 / (n - 1) as f64
            } else {
                plot_w / 2.0
            }
    };
    let y = |v: f64| MARGIN_Y + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();

    let (x0, x1, y0, y1) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_Y, MARGIN_Y + plot_h);
    writeln!(out, r##"<g stroke="#888" stroke-width="1">"##).unwrap();
    writeln!(
        out,
        r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#
    )
    .unwrap();
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        let yy = y(v);
        writeln!(out, r#"<line x1="{}" y1="{yy:.2}" x2="{x0}" y2="{yy:.2}"/>"#, x0 - 5.0).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            x0 - 8.0,
            y(v) + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">tweet</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">retweets</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();

    for (k, (name, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let name = escape(name);
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        for (i, &v) in values.iter().enumerate() {
            let cy = if v.is_finite() { y(v) } else { y1 };
            writeln!(
                out,
                r#"<circle class="{name}" cx="{:.2}" cy="{cy:.2}" r="3" fill="{color}"/>"#,
                x(i)
            )
            .unwrap();
        }
        let ly = MARGIN_Y + 20.0 * k as f64;
        writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#,
            x1 + 20.0,
            ly - 10.0
        )
        .unwrap();
        writeln!(out, r#"<text x="{}" y="{ly}">{name}</text>"#, x1 + 38.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
