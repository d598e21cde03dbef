//! Plain SVG figures: thickness profile, cross-section overview and the
//! group p-value map.

use std::fmt::Write;

use ccmorph::morphometry::ThicknessProfile;
use ccmorph::stats::{PositionStat, ScalarSummary};
use ccmorph::subseg::SubsegResult;
use ccmorph::{Polyline, Vec2};

const SEGMENT_COLOURS: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
];

/// Maps a data rectangle onto a pixel rectangle with y pointing up.
struct Frame {
    lo: Vec2,
    scale: Vec2,
    origin: Vec2,
    height: f64,
}

impl Frame {
    fn new(lo: Vec2, hi: Vec2, origin: Vec2, size: Vec2, keep_aspect: bool) -> Self {
        let span = Vec2::new((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
        let mut scale = Vec2::new(size.x / span.x, size.y / span.y);
        if keep_aspect {
            let s = scale.x.min(scale.y);
            scale = Vec2::new(s, s);
        }
        Self {
            lo,
            scale,
            origin,
            height: size.y,
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            self.origin.x + (p.x - self.lo.x) * self.scale.x,
            self.origin.y + self.height - (p.y - self.lo.y) * self.scale.y,
        )
    }

    fn path(&self, pts: &[Vec2], closed: bool) -> String {
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { 'M' } else { 'L' });
        }
        if closed {
            d.push('Z');
        }
        d.trim_end().to_string()
    }
}

fn bounds(sets: &[&[Vec2]]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in sets.iter().flat_map(|s| s.iter()) {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.x.is_finite() {
        return (Vec2::zero(), Vec2::new(1.0, 1.0));
    }
    (lo, hi)
}

fn open(w: u32, h: u32) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Thickness against position along the intercallosal line; invalid
/// samples leave gaps.
pub fn thickness_plot(title: &str, profile: &ThicknessProfile<f64>) -> String {
    let (w, h) = (640u32, 360u32);
    let valid: Vec<f64> = profile.thickness.iter().flatten().copied().collect();
    let top = valid.iter().copied().fold(0.0, f64::max).max(1e-3) * 1.1;
    let frame = Frame::new(
        Vec2::zero(),
        Vec2::new(1.0, top),
        Vec2::new(60.0, 30.0),
        Vec2::new(560.0, 280.0),
        false,
    );
    let mut s = open(w, h);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>",
        w / 2,
        escape(title)
    );
    let (x0, y0) = frame.map(Vec2::zero());
    let (x1, y1) = frame.map(Vec2::new(1.0, top));
    let _ = writeln!(
        s,
        "<path d=\"M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}\" fill=\"none\" stroke=\"black\"/>"
    );
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let (_, y) = frame.map(Vec2::new(0.0, v));
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.1}</text>",
            x0 - 6.0,
            y + 4.0
        );
        let f = k as f64 / 4.0;
        let (x, _) = frame.map(Vec2::new(f, 0.0));
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{f:.2}</text>",
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">position (anterior → posterior)</text>",
        w / 2,
        h - 8
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">thickness (mm)</text>",
        h / 2,
        h / 2
    );
    let mut runs: Vec<Vec<Vec2>> = vec![Vec::new()];
    for (x, t) in profile.positions.iter().zip(&profile.thickness) {
        match t {
            Some(t) => runs.last_mut().unwrap().push(Vec2::new(*x, *t)),
            None if !runs.last().unwrap().is_empty() => runs.push(Vec::new()),
            None => {}
        }
    }
    for run in runs.iter().filter(|r| !r.is_empty()) {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\"/>",
            frame.path(run, false)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Contour, intercallosal line, thickness paths and (optionally) one
/// sub-segmentation's cuts.
pub fn cross_section(
    contour: &Polyline,
    line: &Polyline,
    profile: &ThicknessProfile<f64>,
    subseg: Option<&SubsegResult<f64>>,
) -> String {
    let (w, h) = (640u32, 400u32);
    let (lo, hi) = bounds(&[&contour.points]);
    let frame = Frame::new(lo, hi, Vec2::new(20.0, 20.0), Vec2::new(600.0, 360.0), true);
    let mut s = open(w, h);
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"#eeeeee\" stroke=\"black\"/>",
        frame.path(&contour.points, true)
    );
    for p in profile.paths.iter().flatten() {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"#76b7b2\" stroke-width=\"0.8\"/>",
            frame.path(&p.points, false)
        );
    }
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"none\" stroke=\"#e15759\" stroke-width=\"2\"/>",
        frame.path(&line.points, false)
    );
    if let Some(r) = subseg {
        for (i, c) in r.cuts.iter().enumerate() {
            if let Some((a, b)) = c {
                let _ = writeln!(
                    s,
                    "<path d=\"{}\" stroke=\"{}\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/>",
                    frame.path(&[*a, *b], false),
                    SEGMENT_COLOURS[i % SEGMENT_COLOURS.len()]
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"24\" y=\"{}\">cuts: {}</text>",
            h - 8,
            r.scheme.kind
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Colour for an adjusted p-value on a log scale: grey at p = 1 through
/// yellow to red at p ≤ 1e-4.
pub fn p_colour(p: f64) -> String {
    let t = (-p.max(1e-300).log10() / 4.0).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, f: f64| (a + (b - a) * f).round() as u8;
    let (r, g, b) = if t < 0.5 {
        let f = t / 0.5;
        (
            lerp(200.0, 255.0, f),
            lerp(200.0, 210.0, f),
            lerp(200.0, 60.0, f),
        )
    } else {
        let f = (t - 0.5) / 0.5;
        (
            lerp(255.0, 200.0, f),
            lerp(210.0, 20.0, f),
            lerp(60.0, 30.0, f),
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Group map: the template midline (or a straight bar when no template is
/// available) coloured per position by adjusted p, the template contour,
/// a colour legend, and a table of scalar effects.
pub fn p_map(
    template: Option<(&Polyline, &Polyline)>,
    stats: &[PositionStat],
    q: f64,
    effects: &[ScalarSummary],
) -> String {
    let n = stats.len();
    let rows = effects.len() as u32;
    let (w, h) = (720u32, 420 + 18 * (rows + 1) * u32::from(rows > 0));
    let mut s = open(w, h);
    let significant = stats.iter().filter(|st| st.p_adj < q).count();
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">group effect on thickness: {significant} of {n} positions with adjusted p &lt; {q}</text>",
        w / 2
    );
    // the midline has one more point than positions at each end
    let (contour, line): (Option<&Polyline>, Polyline) = match template {
        Some((c, l)) if l.len() == n + 2 => (Some(c), l.clone()),
        _ => (
            None,
            Polyline::open(
                (0..n + 2)
                    .map(|i| Vec2::new(1.0 - i as f64 / (n + 1) as f64, 0.0))
                    .collect(),
            ),
        ),
    };
    let (lo, hi) = match contour {
        Some(c) => bounds(&[&c.points, &line.points]),
        None => (Vec2::new(0.0, -0.1), Vec2::new(1.0, 0.1)),
    };
    let frame = Frame::new(lo, hi, Vec2::new(40.0, 40.0), Vec2::new(640.0, 300.0), true);
    if let Some(c) = contour {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"#f4f4f4\" stroke=\"black\"/>",
            frame.path(&c.points, true)
        );
    }
    let pts = &line.points;
    for (k, st) in stats.iter().enumerate() {
        let p = pts[k + 1];
        let a = pts[k].lerp(p, 0.5);
        let b = p.lerp(pts[k + 2], 0.5);
        let _ = writeln!(
            s,
            "<path d=\"{}\" stroke=\"{}\" stroke-width=\"8\" stroke-linecap=\"butt\"><title>position {} beta {:.4} p_adj {:.3e}</title></path>",
            frame.path(&[a, p, b], false),
            p_colour(st.p_adj),
            st.position,
            st.beta,
            st.p_adj
        );
    }
    let ly = 370.0;
    for i in 0..=40 {
        let p = 10f64.powf(-4.0 * i as f64 / 40.0);
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{ly}\" width=\"8\" height=\"12\" fill=\"{}\"/>",
            200.0 + 8.0 * i as f64,
            p_colour(p)
        );
    }
    for (i, label) in ["1", "0.1", "0.01", "1e-3", "≤1e-4"].iter().enumerate() {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>",
            204.0 + 80.0 * i as f64,
            ly + 28.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"190\" y=\"{:.1}\" text-anchor=\"end\">adjusted p</text>",
        ly + 10.0
    );
    if !effects.is_empty() {
        let y0 = 430.0;
        let cols = [40.0, 220.0, 320.0, 420.0, 520.0, 620.0];
        for (x, head) in
            cols.iter()
                .zip(["measure", "patients", "controls", "beta", "p", "rank-sum p"])
        {
            let _ = writeln!(
                s,
                "<text x=\"{x}\" y=\"{y0}\" font-weight=\"bold\">{head}</text>"
            );
        }
        for (r, e) in effects.iter().enumerate() {
            let y = y0 + 18.0 * (r + 1) as f64;
            let cells = [
                escape(&e.measure),
                format!("{:.3} ({})", e.mean_patient, e.n_patient),
                format!("{:.3} ({})", e.mean_control, e.n_control),
                format!("{:.4}", e.beta),
                format!("{:.3e}", e.p),
                format!("{:.3e}", e.ranksum_p),
            ];
            for (x, c) in cols.iter().zip(cells) {
                let _ = writeln!(s, "<text x=\"{x}\" y=\"{y}\">{c}</text>");
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_scale_ends() {
        assert_eq!(p_colour(1.0), "#c8c8c8");
        assert_eq!(p_colour(1e-4), "#c8141e");
        assert_eq!(p_colour(1e-9), p_colour(1e-4));
    }

    #[test]
    fn p_map_colours_every_position() {
        let stats: Vec<PositionStat> = (0..10)
            .map(|i| PositionStat {
                position: i,
                beta: 0.0,
                p: 0.5,
                p_adj: if i == 4 { 1e-5 } else { 1.0 },
                n: 20,
            })
            .collect();
        let svg = p_map(None, &stats, 0.05, &[]);
        assert_eq!(svg.matches("<title>position").count(), 10);
        assert_eq!(svg.matches("#c8141e").count(), 1 + 1);
        assert!(svg.contains("1 of 10 positions"));
    }
}
