//! Static SVG forest plot of an effect table: one row per estimate with a
//! point marker, an interval whisker and a dashed zero line.

use std::fmt::Write;

use medrule_core::effects::EffectEstimate;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlotError {
    #[error("effect table is empty")]
    EmptyTable,
    #[error("estimate {0} has a non-finite value")]
    NonFinite(usize),
}

const WIDTH: f64 = 760.0;
const LABEL_W: f64 = 300.0;
const RIGHT_PAD: f64 = 30.0;
const TOP: f64 = 50.0;
const ROW_H: f64 = 30.0;
const AXIS_H: f64 = 50.0;

/// Horizontal layout of the data region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub lo: f64,
    pub hi: f64,
}

impl Scale {
    /// Covers every interval and zero, padded by 5% on each side.
    pub fn fit(effects: &[EffectEstimate]) -> Scale {
        let lo = effects.iter().map(|e| e.ci_low).fold(0.0, f64::min);
        let hi = effects.iter().map(|e| e.ci_high).fold(0.0, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        Scale {
            lo: lo - 0.05 * span,
            hi: hi + 0.05 * span,
        }
    }

    pub fn x(&self, v: f64) -> f64 {
        LABEL_W + (v - self.lo) / (self.hi - self.lo) * (WIDTH - LABEL_W - RIGHT_PAD)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn label(e: &EffectEstimate) -> String {
    let c = match e.contrast {
        medrule_core::effects::Contrast::Indirect => "Indirect",
        medrule_core::effects::Contrast::Direct => "Direct",
        medrule_core::effects::Contrast::Total => "Total",
    };
    format!("{c}: {}", e.rule)
}

/// Renders the plot. Output is a pure function of the table.
pub fn render_forest_plot(effects: &[EffectEstimate]) -> Result<String, PlotError> {
    if effects.is_empty() {
        return Err(PlotError::EmptyTable);
    }
    for (k, e) in effects.iter().enumerate() {
        if ![e.estimate, e.ci_low, e.ci_high].iter().all(|v| v.is_finite()) {
            return Err(PlotError::NonFinite(k));
        }
    }
    let scale = Scale::fit(effects);
    let height = TOP + ROW_H * effects.len() as f64 + AXIS_H;
    let bottom = TOP + ROW_H * effects.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">Population interventional effects by rule type</text>"#,
        WIDTH / 2.0
    );
    let zx = scale.x(0.0);
    let _ = writeln!(
        s,
        r##"<line class="zero" x1="{zx:.2}" y1="{:.2}" x2="{zx:.2}" y2="{bottom:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        TOP - 10.0
    );
    for (k, e) in effects.iter().enumerate() {
        let y = TOP + ROW_H * (k as f64 + 0.5);
        let (x0, x1, xm) = (scale.x(e.ci_low), scale.x(e.ci_high), scale.x(e.estimate));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LABEL_W - 12.0,
            y + 4.0,
            escape(&label(e))
        );
        let _ = writeln!(s, r#"<g class="row">"#);
        let _ = writeln!(
            s,
            r#"<line class="whisker" x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="black" stroke-width="1.5"/>"#
        );
        for cx in [x0, x1] {
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
                y - 5.0,
                y + 5.0
            );
        }
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{xm:.2}" cy="{y:.2}" r="4.5" fill="black"><title>{:.4} ({:.4}, {:.4})</title></circle>"#,
            e.estimate, e.ci_low, e.ci_high
        );
        let _ = writeln!(s, "</g>");
    }
    // Axis with five ticks.
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="black"/>"#,
        scale.x(scale.lo),
        scale.x(scale.hi)
    );
    for t in 0..5 {
        let v = scale.lo + (scale.hi - scale.lo) * t as f64 / 4.0;
        let x = scale.x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{v:.3}</text>"#,
            bottom + 5.0,
            bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Effect (risk difference)</text>"#,
        (LABEL_W + WIDTH - RIGHT_PAD) / 2.0,
        bottom + 40.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}
