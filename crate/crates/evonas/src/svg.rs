//! Hand-rolled grouped bar charts. No plotting dependency: the charts must
//! be byte-identical across runs and platforms, so everything is formatted
//! from f64 with fixed precision and fixed layout arithmetic.

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn fmt(v: f64) -> String {
    // Two decimals is enough for pixel coordinates and keeps output stable.
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 10_000.0 {
        format!("{v:.3e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders one grouped bar chart: one bar group per x label, one bar per
/// series inside each group, with y axis scaled to the data.
pub(crate) fn grouped_bars(
    title: &str,
    x_title: &str,
    labels: &[String],
    series: &[(String, &'static str, Vec<f64>)],
) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max_val = series
        .iter()
        .flat_map(|(_, _, vs)| vs.iter().copied())
        .fold(0.0f64, f64::max);
    let y_max = if max_val > 0.0 { max_val * 1.08 } else { 1.0 };

    let mut s = String::with_capacity(16 * 1024);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"26\" font-size=\"17\" text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape(title)
    ));

    // y gridlines and tick labels
    for tick in 0..=4 {
        let frac = tick as f64 / 4.0;
        let v = y_max * frac;
        let y = MARGIN_TOP + plot_h * (1.0 - frac);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(y),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(y)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + 4.0),
            fmt_tick(v)
        ));
    }

    // bars
    if !labels.is_empty() && !series.is_empty() {
        let group_w = plot_w / labels.len() as f64;
        let bar_w = group_w * 0.8 / series.len() as f64;
        for (gi, label) in labels.iter().enumerate() {
            let group_x = MARGIN_LEFT + group_w * gi as f64 + group_w * 0.1;
            for (si, (_, color, values)) in series.iter().enumerate() {
                let v = values.get(gi).copied().unwrap_or(0.0).max(0.0);
                let h = plot_h * (v / y_max).min(1.0);
                let x = group_x + bar_w * si as f64;
                let y = MARGIN_TOP + plot_h - h;
                s.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                    fmt(x),
                    fmt(y),
                    fmt(bar_w),
                    fmt(h),
                    color
                ));
            }
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                fmt(group_x + group_w * 0.4),
                fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
                escape(label)
            ));
        }
    }

    // axes
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(HEIGHT - MARGIN_BOTTOM),
        fmt(WIDTH - MARGIN_RIGHT),
        fmt(HEIGHT - MARGIN_BOTTOM)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fmt(MARGIN_LEFT + plot_w / 2.0),
        fmt(HEIGHT - 14.0),
        escape(x_title)
    ));

    // legend, top right
    for (si, (name, color, _)) in series.iter().enumerate() {
        let x = WIDTH - MARGIN_RIGHT - 130.0;
        let y = MARGIN_TOP + 18.0 * si as f64;
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            fmt(x),
            fmt(y),
            color
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            fmt(x + 18.0),
            fmt(y + 10.0),
            escape(name)
        ));
    }

    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
