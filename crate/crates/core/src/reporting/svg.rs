//! Minimal static SVG charts. Output depends only on the inputs.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

/// One named data series; `None` marks a missing point.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

struct Canvas {
    out: String,
    y_max: f64,
}

impl Canvas {
    fn new(title: &str, y_label: &str, y_max: f64) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + Self::plot_h() / 2.0,
            escape(y_label)
        );
        let mut c = Canvas { out, y_max };
        c.axes();
        c
    }

    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn y(&self, v: f64) -> f64 {
        TOP + Self::plot_h() * (1.0 - (v / self.y_max).clamp(0.0, 1.0))
    }

    fn axes(&mut self) {
        for i in 0..=5 {
            let v = self.y_max * i as f64 / 5.0;
            let y = self.y(v);
            let _ = writeln!(
                self.out,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT + Self::plot_w()
            );
            let _ = writeln!(
                self.out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                trim_number(v)
            );
        }
        let _ = writeln!(
            self.out,
            r##"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##,
            TOP + Self::plot_h(),
            LEFT + Self::plot_w(),
            TOP + Self::plot_h()
        );
    }

    fn x_label(&mut self, x: f64, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + Self::plot_h() + 18.0,
            escape(text)
        );
    }

    fn x_title(&mut self, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + Self::plot_w() / 2.0,
            HEIGHT - 12.0,
            escape(text)
        );
    }

    fn legend(&mut self, names: &[&str]) {
        let x = WIDTH - RIGHT + 16.0;
        for (i, name) in names.iter().enumerate() {
            let y = TOP + 18.0 * i as f64;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#,
                color(i)
            );
            let _ = writeln!(
                self.out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 18.0,
                y + 10.0,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Side-by-side bars per category, one bar per series.
pub fn grouped_bars(title: &str, y_label: &str, categories: &[String], series: &[Series], y_max: f64) -> String {
    let mut c = Canvas::new(title, y_label, y_max);
    let slot = Canvas::plot_w() / categories.len().max(1) as f64;
    let bar = slot * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let x0 = LEFT + slot * ci as f64 + slot * 0.1;
        for (si, s) in series.iter().enumerate() {
            if let Some(Some(v)) = s.values.get(ci) {
                let y = c.y(*v);
                let _ = writeln!(
                    c.out,
                    r#"<rect x="{:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{}"><title>{}: {v:.2}</title></rect>"#,
                    x0 + bar * si as f64,
                    TOP + Canvas::plot_h() - y,
                    color(si),
                    escape(&s.name)
                );
            }
        }
        c.x_label(LEFT + slot * (ci as f64 + 0.5), cat);
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    c.legend(&names);
    c.finish()
}

/// One bar per category, stacked from the series values (fractions of 1).
pub fn stacked_bars(title: &str, categories: &[String], stacks: &[Series]) -> String {
    let mut c = Canvas::new(title, "fraction", 1.0);
    let slot = Canvas::plot_w() / categories.len().max(1) as f64;
    let bar = slot * 0.6;
    for (ci, cat) in categories.iter().enumerate() {
        let x = LEFT + slot * ci as f64 + slot * 0.2;
        let mut acc = 0.0;
        for (si, s) in stacks.iter().enumerate() {
            let v = s.values.get(ci).copied().flatten().unwrap_or(0.0);
            if v <= 0.0 {
                continue;
            }
            let y_top = c.y(acc + v);
            let y_bottom = c.y(acc);
            let _ = writeln!(
                c.out,
                r#"<rect x="{x:.2}" y="{y_top:.2}" width="{bar:.2}" height="{:.2}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                y_bottom - y_top,
                color(si),
                escape(&s.name)
            );
            acc += v;
        }
        c.x_label(LEFT + slot * (ci as f64 + 0.5), cat);
    }
    let names: Vec<&str> = stacks.iter().map(|s| s.name.as_str()).collect();
    c.legend(&names);
    c.finish()
}

/// Polylines over numeric x positions; gaps where values are missing.
pub fn line_chart(title: &str, x_title: &str, y_label: &str, xs: &[f64], series: &[Series], y_max: f64) -> String {
    let mut c = Canvas::new(title, y_label, y_max);
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| LEFT + 20.0 + (Canvas::plot_w() - 40.0) * (x - if lo.is_finite() { lo } else { 0.0 }) / span;
    for &x in xs {
        c.x_label(px(x), &trim_number(x));
    }
    c.x_title(x_title);
    for (si, s) in series.iter().enumerate() {
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (i, &x) in xs.iter().enumerate() {
            match s.values.get(i).copied().flatten() {
                Some(v) => runs.last_mut().expect("non-empty").push((px(x), c.y(v))),
                None => runs.push(Vec::new()),
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let points: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                c.out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                points.join(" "),
                color(si)
            );
            for (x, y) in run {
                let _ = writeln!(c.out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#, color(si));
            }
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    c.legend(&names);
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str, v: &[Option<f64>]) -> Series {
        Series {
            name: name.into(),
            values: v.to_vec(),
        }
    }

    #[test]
    fn charts_are_well_formed_xml() {
        let cats = vec!["L1".to_string(), "L2 <&>".to_string()];
        let docs = [
            grouped_bars("acc", "%", &cats, &[s("a\"b", &[Some(50.0), None])], 100.0),
            stacked_bars("dist", &cats, &[s("Negative", &[Some(0.5), Some(1.0)]), s("Positive", &[Some(0.5), None])]),
            line_chart("curve", "width", "%", &[400.0, 800.0, 1200.0], &[s("L7", &[Some(90.0), None, Some(0.0)])], 100.0),
            line_chart("empty", "x", "y", &[], &[], 100.0),
        ];
        for doc in docs {
            let parsed = roxmltree::Document::parse(&doc).unwrap();
            assert_eq!(parsed.root_element().tag_name().name(), "svg");
        }
    }

    #[test]
    fn trims_numbers() {
        assert_eq!(trim_number(100.0), "100");
        assert_eq!(trim_number(0.25), "0.25");
        assert_eq!(trim_number(0.5), "0.5");
    }
}
