//! Minimal standalone SVG plots: no display dependency, deterministic
//! output bytes.

use crate::report::fmt;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_points(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            if x.is_finite() {
                f.x_min = f.x_min.min(x);
                f.x_max = f.x_max.max(x);
            }
            if y.is_finite() {
                f.y_min = f.y_min.min(y);
                f.y_max = f.y_max.max(y);
            }
        }
        if !f.x_min.is_finite() || f.x_min == f.x_max {
            f.x_min -= 0.5;
            f.x_max += 0.5;
        }
        if !f.y_min.is_finite() || f.y_min == f.y_max {
            f.y_min -= 0.5;
            f.y_max += 0.5;
        }
        f
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (W - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (H - 2.0 * MARGIN)
    }
}

fn header(title: &str, xlabel: &str, ylabel: &str, frame: &Frame) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN,
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        W / 2.0,
        H - 14.0,
        xml_escape(xlabel)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        xml_escape(ylabel)
    ));
    // corner ticks
    for (x, y, label) in [
        (frame.x_min, frame.y_min, true),
        (frame.x_max, frame.y_min, true),
    ] {
        let _ = y;
        let _ = label;
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            frame.sx(x),
            H - MARGIN + 16.0,
            fmt(x)
        ));
    }
    for y in [frame.y_min, frame.y_max] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            MARGIN - 6.0,
            frame.sy(y) + 4.0,
            fmt(y)
        ));
    }
    s
}

const COLORS: &[&str] = &["#1f6fb2", "#d1495b", "#3a7d44", "#8d5a97", "#c77d1e"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polyline plot, one series per label.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let frame = Frame::from_points(series.iter().flat_map(|(_, pts)| pts.iter().copied()));
    let mut s = header(title, xlabel, ylabel, &frame);
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", frame.sx(*x), frame.sy(*y)))
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            W - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64,
            xml_escape(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars at integer x positions.
pub fn bar_plot(title: &str, xlabel: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let pts = bars
        .iter()
        .enumerate()
        .map(|(i, (_, v))| (i as f64, *v))
        .chain(std::iter::once((-0.5, 0.0)))
        .chain(std::iter::once((bars.len() as f64 - 0.5, 0.0)));
    let frame = Frame::from_points(pts);
    let mut s = header(title, xlabel, ylabel, &frame);
    let width = ((W - 2.0 * MARGIN) / bars.len() as f64 * 0.8).min(48.0);
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = frame.sx(i as f64) - width / 2.0;
        let y0 = frame.sy(0.0f64.max(frame.y_min));
        let y1 = frame.sy(*v);
        let (top, height) = if y1 < y0 { (y1, y0 - y1) } else { (y0, y1 - y0) };
        s.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"{}\"/>\n",
            COLORS[0]
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
            frame.sx(i as f64),
            H - MARGIN + 28.0,
            xml_escape(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}
