//! Minimal deterministic SVG line charts.
//!
//! Fixed layout, fixed float formatting, no timestamps or randomness, so a
//! rerun with identical data produces identical bytes.

pub struct Curve {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Fixed y range (accuracy panels pin [0, 1.05]).
    pub y_range: (f64, f64),
    pub curves: Vec<Curve>,
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 340.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

fn fmt(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn x_range(curves: &[Curve]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in curves {
        for &(x, _) in &c.points {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn render_panel(out: &mut String, panel: &Panel, x0: f64) {
    let (xlo, xhi) = x_range(&panel.curves);
    let (ylo, yhi) = panel.y_range;
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| x0 + MARGIN_L + (x - xlo) / (xhi - xlo) * plot_w;
    let py = |y: f64| MARGIN_T + (1.0 - (y - ylo) / (yhi - ylo)) * plot_h;

    // Frame and title.
    out.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        x0 + MARGIN_L,
        MARGIN_T
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
        x0 + MARGIN_L + plot_w / 2.0,
        panel.title
    ));

    // Ticks: five per axis.
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let xv = xlo + f * (xhi - xlo);
        let yv = ylo + f * (yhi - ylo);
        let xp = px(xv);
        let yp = py(yv);
        out.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{xp:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            MARGIN_T + plot_h + 16.0,
            fmt(xv)
        ));
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{:.1}\" y2=\"{yp:.1}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            x0 + MARGIN_L - 4.0,
            x0 + MARGIN_L
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">{}</text>\n",
            x0 + MARGIN_L - 7.0,
            yp + 3.5,
            fmt(yv)
        ));
    }

    // Axis labels.
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
        x0 + MARGIN_L + plot_w / 2.0,
        PANEL_H - 10.0,
        panel.x_label
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>\n",
        x0 + 14.0,
        MARGIN_T + plot_h / 2.0,
        x0 + 14.0,
        MARGIN_T + plot_h / 2.0,
        panel.y_label
    ));

    // Curves.
    for c in &panel.curves {
        if c.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y.clamp(ylo, yhi))))
            .collect();
        let dash = if c.dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash} points=\"{}\"/>\n",
            c.color,
            pts.join(" ")
        ));
        for &(x, y) in &c.points {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"{}\"/>\n",
                px(x),
                py(y.clamp(ylo, yhi)),
                c.color
            ));
        }
    }

    // Legend, bottom-right inside the frame.
    let legend_x = x0 + MARGIN_L + plot_w - 120.0;
    let mut legend_y = MARGIN_T + plot_h - 10.0 - 13.0 * panel.curves.len() as f64;
    for c in &panel.curves {
        let dash = if c.dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        out.push_str(&format!(
            "<line x1=\"{legend_x:.1}\" y1=\"{legend_y:.1}\" x2=\"{:.1}\" y2=\"{legend_y:.1}\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
            legend_x + 22.0,
            c.color
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" font-family=\"sans-serif\">{}</text>\n",
            legend_x + 27.0,
            legend_y + 3.5,
            c.label
        ));
        legend_y += 13.0;
    }
}

/// Renders panels side by side into one standalone SVG document.
pub fn render(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{PANEL_H:.0}\" viewBox=\"0 0 {width:.0} {PANEL_H:.0}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_panel() -> Panel {
        Panel {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            y_range: (0.0, 1.05),
            curves: vec![Curve {
                label: "c".into(),
                color: "#d62728",
                dashed: false,
                points: vec![(0.0, 0.1), (1.0, 0.9), (2.0, 0.5)],
            }],
        }
    }

    #[test]
    fn render_is_deterministic_and_wellformed() {
        let a = render(&[demo_panel()]);
        let b = render(&[demo_panel()]);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn number_formatting_is_trimmed() {
        assert_eq!(fmt(1.0), "1");
        assert_eq!(fmt(0.25), "0.25");
        assert_eq!(fmt(0.2), "0.2");
        assert_eq!(fmt(-0.0), "0");
    }
}
