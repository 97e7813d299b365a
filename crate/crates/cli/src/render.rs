//! Aligned plain-text tables and a small SVG bar chart.

use std::fmt::Write as _;

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = width[i] - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

pub fn mean_sd(mean: Option<f64>, sd: Option<f64>, digits: usize) -> String {
    match (mean, sd) {
        (Some(m), Some(s)) => format!("{m:.digits$} ± {s:.digits$}"),
        (Some(m), None) => format!("{m:.digits$}"),
        _ => "n/a".into(),
    }
}

pub fn p_value(p: Option<f64>) -> String {
    match p {
        Some(p) if p < 1e-4 => format!("{p:.1e}"),
        Some(p) => format!("{p:.4}"),
        None => "n/a".into(),
    }
}

pub fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Bar {
    pub label: String,
    pub value: Option<f64>,
    pub error: Option<f64>,
}

pub struct BarGroup {
    pub label: String,
    pub bars: Vec<Bar>,
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

/// Grouped bar chart on a 0-100 axis with SD whiskers.
pub fn grouped_bars_svg(title: &str, y_label: &str, groups: &[BarGroup]) -> String {
    let per_group = groups.iter().map(|g| g.bars.len()).max().unwrap_or(0).max(1);
    let bar_w = 18.0;
    let gap = 24.0;
    let left = 60.0;
    let top = 40.0;
    let plot_h = 240.0;
    let group_w = per_group as f64 * bar_w + gap;
    let plot_w = groups.len() as f64 * group_w + gap;
    let legend_w = 120.0;
    let width = left + plot_w + legend_w;
    let height = top + plot_h + 60.0;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 100.0) / 100.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, escape(title));
    for tick in (0..=100).step_by(25) {
        let ty = y(tick as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{ty}" x2="{}" y2="{ty}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{tick}</text>"##,
            left + plot_w,
            left - 6.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_label)
    );
    for (gi, g) in groups.iter().enumerate() {
        let gx = left + gap + gi as f64 * group_w;
        for (bi, b) in g.bars.iter().enumerate() {
            let x = gx + bi as f64 * bar_w;
            let colour = PALETTE[bi % PALETTE.len()];
            if let Some(v) = b.value {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{}" width="{}" height="{}" fill="{colour}"><title>{}: {v:.1}</title></rect>"#,
                    y(v),
                    bar_w - 2.0,
                    y(0.0) - y(v),
                    escape(&b.label)
                );
                if let Some(e) = b.error {
                    let cx = x + (bar_w - 2.0) / 2.0;
                    let _ = writeln!(s, r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="black"/>"#, y(v - e), y(v + e));
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            gx + per_group as f64 * bar_w / 2.0,
            top + plot_h + 18.0,
            escape(&g.label)
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, y(0.0), left + plot_w, y(0.0));
    if let Some(first) = groups.first() {
        for (bi, b) in first.bars.iter().enumerate() {
            let ly = top + 10.0 + bi as f64 * 16.0;
            let lx = left + plot_w + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                ly - 9.0,
                PALETTE[bi % PALETTE.len()],
                lx + 14.0,
                ly,
                escape(&b.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = text_table(&["name", "value"], &[vec!["a".into(), "1.5".into()], vec!["long name".into(), "10".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "name       value");
        assert_eq!(lines[2], "a            1.5");
        assert_eq!(lines[3], "long name     10");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = grouped_bars_svg(
            "t <1>",
            "acc",
            &[BarGroup {
                label: "theta".into(),
                bars: vec![
                    Bar { label: "LDA".into(), value: Some(80.0), error: Some(5.0) },
                    Bar { label: "SVM".into(), value: None, error: None },
                ],
            }],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg.matches("<rect").count(), 1 + 1 + 2);
    }

    #[test]
    fn number_formats() {
        assert_eq!(mean_sd(Some(81.25), Some(9.5), 1), "81.2 ± 9.5");
        assert_eq!(mean_sd(None, None, 1), "n/a");
        assert_eq!(p_value(Some(0.01234)), "0.0123");
        assert_eq!(p_value(Some(3e-6)), "3.0e-6");
    }
}
