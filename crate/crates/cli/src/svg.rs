//! Minimal static line charts.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_T: f64 = 34.0;
const GAP: f64 = 28.0;
const LEGEND_H: f64 = 22.0;

pub struct Series {
    pub name: String,
    /// `(x index, y)`; x indexes into the shared category labels.
    pub points: Vec<(usize, f64)>,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub x_categories: Vec<String>,
    pub y_label: String,
    /// Names in legend order; series colors follow this order.
    pub legend: Vec<String>,
    /// Grid of panels, row-major.
    pub panels: Vec<Vec<Panel>>,
    pub reference_line: Option<f64>,
    pub y_range: (f64, f64),
    /// Text placed in a `<metadata>` element.
    pub metadata: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly five round tick values spanning `(lo, hi)`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    // Index-based with decimal snapping, so ticks do not drift past the range.
    let scale = 10f64.powi((2 - step.log10().floor() as i32).max(0));
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last)
        .map(|k| {
            let t = (k as f64 * step * scale).round() / scale;
            if t == 0.0 { 0.0 } else { t }
        })
        .collect()
}

impl Chart {
    pub fn render(&self) -> String {
        let rows = self.panels.len().max(1);
        let cols = self.panels.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let cell_w = MARGIN_L + PANEL_W + GAP;
        let cell_h = MARGIN_T + PANEL_H + GAP + 14.0;
        let width = cols as f64 * cell_w + GAP;
        let height = 40.0 + rows as f64 * cell_h + LEGEND_H * 2.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, "<metadata>{}</metadata>", esc(&self.metadata));
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            width / 2.0,
            esc(&self.title)
        );
        let (y0, y1) = self.y_range;
        for (ri, row) in self.panels.iter().enumerate() {
            for (ci, panel) in row.iter().enumerate() {
                let ox = GAP + ci as f64 * cell_w + MARGIN_L;
                let oy = 40.0 + ri as f64 * cell_h + MARGIN_T;
                self.render_panel(&mut s, panel, ox, oy, y0, y1);
            }
        }
        let ly = height - LEGEND_H;
        let _ = writeln!(s, r#"<g class="legend">"#);
        let mut lx = GAP + MARGIN_L;
        for (i, name) in self.legend.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                s,
                r#"<g class="legend-entry"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
                lx + 18.0,
                lx + 22.0,
                ly + 4.0,
                esc(name)
            );
            lx += 30.0 + 6.5 * name.len() as f64;
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }

    fn render_panel(&self, s: &mut String, panel: &Panel, ox: f64, oy: f64, y0: f64, y1: f64) {
        let n_x = self.x_categories.len().max(1);
        let px = |i: usize| {
            if n_x == 1 {
                ox + PANEL_W / 2.0
            } else {
                ox + 12.0 + (PANEL_W - 24.0) * i as f64 / (n_x - 1) as f64
            }
        };
        let py = |y: f64| oy + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
        let _ = writeln!(s, r#"<g class="panel">"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            ox + PANEL_W / 2.0,
            oy - 10.0,
            esc(&panel.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#333"/>"##
        );
        for t in ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{ox:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#eee"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                ox + PANEL_W,
                ox - 4.0,
                y + 4.0,
                trim_number(t)
            );
        }
        for (i, label) in self.x_categories.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(i),
                oy + PANEL_H + 14.0,
                esc(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            ox + PANEL_W / 2.0,
            oy + PANEL_H + 28.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            ox - 38.0,
            oy + PANEL_H / 2.0,
            esc(&self.y_label)
        );
        if let Some(r) = self.reference_line {
            let y = py(r);
            let _ = writeln!(
                s,
                r##"<line class="reference-line" data-value="{r}" x1="{ox:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#c00" stroke-dasharray="4 3"/>"##,
                ox + PANEL_W
            );
        }
        for series in &panel.series {
            let idx = self.legend.iter().position(|n| n == &series.name).unwrap_or(0);
            let color = PALETTE[idx % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(_, y)| y.is_finite())
                .map(|&(i, y)| format!("{:.1},{:.1}", px(i), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<g class="series" data-name="{}"><polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                esc(&series.name),
                pts.join(" ")
            );
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(s, "</g>");
    }
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}
