//! Valence/arousal scatter as CSV and a dependency-free SVG.

use std::fmt::Write as _;

use dser_core::EmotionTriple;

pub struct ScatterPoint {
    pub id: String,
    pub gold: EmotionTriple,
    pub pred: EmotionTriple,
}

pub const SCATTER_CSV_HEADER: &str = "id,gold_v,gold_a,pred_v,pred_a";

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut out = format!("{SCATTER_CSV_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?}",
            p.id, p.gold.valence, p.gold.arousal, p.pred.valence, p.pred.arousal
        );
    }
    out
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

/// Maps [-1, 1] onto the plot area; arousal grows upwards.
fn to_px(v: f64, a: f64) -> (f64, f64) {
    let span = SIZE - 2.0 * MARGIN;
    let x = MARGIN + (v.clamp(-1.0, 1.0) + 1.0) / 2.0 * span;
    let y = SIZE - MARGIN - (a.clamp(-1.0, 1.0) + 1.0) / 2.0 * span;
    (x, y)
}

pub fn scatter_svg(points: &[ScatterPoint]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let (x0, y0) = to_px(-1.0, -1.0);
    let (x1, y1) = to_px(1.0, 1.0);
    let (cx, cy) = to_px(0.0, 0.0);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{cy}" x2="{x1}" y2="{cy}" stroke="grey" stroke-dasharray="4 4"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{cx}" y1="{y0}" x2="{cx}" y2="{y1}" stroke="grey" stroke-dasharray="4 4"/>"#
    );
    for (v, label) in [(-1.0, "-1"), (0.0, "0"), (1.0, "1")] {
        let (x, _) = to_px(v, -1.0);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-size="11" text-anchor="middle">{label}</text>"#,
            y0 + 15.0
        );
        let (_, y) = to_px(-1.0, v);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{label}</text>"#,
            x0 - 5.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{cx}" y="{}" font-size="12" text-anchor="middle">valence</text>"#,
        SIZE - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{cy}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {cy})">arousal</text>"#
    );

    for (class, color, pick) in [
        (
            "gold",
            "#1f77b4",
            (|p: &ScatterPoint| p.gold) as fn(&ScatterPoint) -> EmotionTriple,
        ),
        ("pred", "#d62728", |p: &ScatterPoint| p.pred),
    ] {
        let _ = writeln!(
            s,
            r#"<g class="{class}" fill="{color}" fill-opacity="0.6">"#
        );
        for p in points {
            let t = pick(p);
            let (x, y) = to_px(t.valence, t.arousal);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="18" r="4" fill="#1f77b4"/>"##,
        x0 + 5.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-size="11">gold</text>"#,
        x0 + 12.0
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="18" r="4" fill="#d62728"/>"##,
        x0 + 60.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-size="11">predicted</text>"#,
        x0 + 67.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(id: &str, v: f64, a: f64) -> ScatterPoint {
        let t = EmotionTriple::new(v, a, 0.0);
        ScatterPoint {
            id: id.into(),
            gold: t,
            pred: t,
        }
    }

    #[test]
    fn corners_map_to_plot_area() {
        assert_eq!(to_px(-1.0, -1.0), (MARGIN, SIZE - MARGIN));
        assert_eq!(to_px(1.0, 1.0), (SIZE - MARGIN, MARGIN));
    }

    #[test]
    fn identical_series_coincide() {
        let pts = [point("a", 0.5, -0.5), point("b", -1.0, 1.0)];
        let svg = scatter_svg(&pts);
        let gold = svg
            .split(r#"<g class="gold""#)
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        let pred = svg
            .split(r#"<g class="pred""#)
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        let circles = |g: &str| g.lines().skip(1).map(str::to_string).collect::<Vec<_>>();
        assert_eq!(circles(gold), circles(pred));
        assert_eq!(circles(gold).len(), 2);
        assert_eq!(scatter_csv(&pts).lines().count(), 3);
    }
}
