//! Static SVG rendering of result tables.
//!
//! Line plots draw one `<polyline>` per series from the mean rows; the x
//! axis is the first of `n`, `k`, `d`, `snr_db` that varies. Points with no
//! x value (the infinite-level reference of a bit sweep) are drawn as a
//! dashed horizontal line. Heatmaps draw one `<rect class="cell">` per
//! `(Δr, Δi)` pair.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::table::{ResultTable, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LineLogLog,
    LineLinear,
    Heatmap,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum XAxis {
    N,
    K,
    D,
    Snr,
}

impl XAxis {
    fn of(self, r: &Row) -> Option<f64> {
        match self {
            Self::N => Some(r.n as f64),
            Self::K => r.k.map(f64::from),
            Self::D => Some(r.d as f64),
            Self::Snr => r.snr_db,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::N => "n",
            Self::K => "k",
            Self::D => "d",
            Self::Snr => "SNR (dB)",
        }
    }
}

fn checked_means(table: &ResultTable) -> Result<Vec<&Row>> {
    let rows: Vec<&Row> = table.means().collect();
    let first = rows.first().ok_or(Error::EmptyTable)?;
    if let Some(other) = rows.iter().find(|r| r.metric != first.metric) {
        return Err(Error::MixedMetrics(first.metric.clone(), other.metric.clone()));
    }
    Ok(rows)
}

fn distinct<T: PartialEq>(vals: impl Iterator<Item = T>) -> usize {
    let mut seen: Vec<T> = Vec::new();
    for v in vals {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen.len()
}

fn choose_x(rows: &[&Row]) -> XAxis {
    [XAxis::N, XAxis::K, XAxis::D, XAxis::Snr]
        .into_iter()
        .find(|ax| distinct(rows.iter().filter_map(|r| ax.of(r).map(f64::to_bits))) > 1)
        .unwrap_or(XAxis::N)
}

/// Series label from the columns that vary across the table, except `x`.
fn series_key(r: &Row, rows: &[&Row], x: XAxis) -> String {
    let mut parts = vec![r.estimator.clone()];
    if distinct(rows.iter().map(|q| q.ruler.as_str())) > 1 {
        parts.push(r.ruler.clone());
    }
    if x != XAxis::D && distinct(rows.iter().map(|q| q.d)) > 1 {
        parts.push(format!("d={}", r.d));
    }
    if x != XAxis::N && distinct(rows.iter().map(|q| q.n)) > 1 {
        parts.push(format!("n={}", r.n));
    }
    if x != XAxis::K && distinct(rows.iter().map(|q| q.k)) > 1 {
        parts.push(r.k.map_or("k=inf".into(), |k| format!("k={k}")));
    }
    let fixed_levels = rows.iter().all(|q| q.k.is_none());
    if fixed_levels && distinct(rows.iter().map(|q| (q.delta_r.to_bits(), q.delta_i.to_bits()))) > 1 {
        parts.push(format!("Δ=({},{})", r.delta_r, r.delta_i));
    }
    if x != XAxis::Snr && distinct(rows.iter().map(|q| q.snr_db.map(f64::to_bits))) > 1 {
        parts.push(r.snr_db.map_or(String::new(), |s| format!("{s} dB")));
    }
    parts.join(" ")
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px0: f64,
    px1: f64,
}

impl Scale {
    fn new(vals: impl Iterator<Item = f64>, log: bool, px0: f64, px1: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log, px0, px1 }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px0 + (v - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let t: Vec<f64> = (a..=b)
                .map(|e| 10f64.powi(e))
                .filter(|v| (self.lo - 1e-9..=self.hi + 1e-9).contains(&v.log10()))
                .collect();
            if t.len() >= 2 {
                return t;
            }
            return vec![10f64.powf(self.lo), 10f64.powf(self.hi)];
        }
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{LEFT}" y="18" font-size="14">{}</text>"#, escape(title));
}

fn axes(out: &mut String, xs: &Scale, ys: &Scale, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for t in xs.ticks() {
        let px = xs.map(t);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, fmt_tick(t));
    }
    for t in ys.ticks() {
        let py = ys.map(t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, fmt_tick(t));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

/// Label, (x, y) points and an optional reference level.
type Series = (String, Vec<(f64, f64)>, Option<f64>);

fn line_plot(table: &ResultTable, log: bool) -> Result<String> {
    let rows = checked_means(table)?;
    let x = choose_x(&rows);
    let usable = |v: f64| v.is_finite() && (!log || v > 0.0);

    let mut series: BTreeMap<usize, Series> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for r in &rows {
        let key = series_key(r, &rows, x);
        let idx = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key.clone());
                order.len() - 1
            }
        };
        let entry = series.entry(idx).or_insert_with(|| (key, Vec::new(), None));
        if !usable(r.value) {
            continue;
        }
        match x.of(r) {
            Some(xv) if usable(xv) => entry.1.push((xv, r.value)),
            Some(_) => {}
            None => entry.2 = Some(r.value),
        }
    }
    for s in series.values_mut() {
        s.1.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let xs = Scale::new(series.values().flat_map(|s| s.1.iter().map(|p| p.0)), log, LEFT, W - RIGHT);
    let yvals = series
        .values()
        .flat_map(|s| s.1.iter().map(|p| p.1).chain(s.2));
    let ys = Scale::new(yvals, log, H - BOTTOM, TOP);

    let mut out = String::new();
    header(&mut out, &format!("{} {}", rows[0].experiment, rows[0].metric));
    axes(&mut out, &xs, &ys, x.label(), &rows[0].metric);
    for (i, (label, pts, reference)) in series.values().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(a, b)| format!("{:.2},{:.2}", xs.map(a), ys.map(b)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
            for &(a, b) in pts {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, xs.map(a), ys.map(b));
            }
        }
        if let Some(v) = reference {
            let py = ys.map(*v);
            let _ = writeln!(
                out,
                r#"<line class="reference" x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="{color}" stroke-dasharray="5,4"/>"#,
                W - RIGHT
            );
        }
        let ly = TOP + 16.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn color_ramp(t: f64) -> String {
    // dark blue to yellow
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(0x2c, 0xfd), lerp(0x1e, 0xe7), lerp(0x6b, 0x25))
}

fn heatmap(table: &ResultTable) -> Result<String> {
    let rows = checked_means(table)?;
    // first series only
    let first = rows[0];
    let cells: Vec<&Row> = rows
        .iter()
        .copied()
        .filter(|r| r.estimator == first.estimator && r.ruler == first.ruler && r.n == first.n && r.d == first.d)
        .collect();
    let mut dr: Vec<f64> = cells.iter().map(|r| r.delta_r).collect();
    let mut di: Vec<f64> = cells.iter().map(|r| r.delta_i).collect();
    for v in [&mut dr, &mut di] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let finite: Vec<f64> = cells.iter().map(|r| r.value).filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let cw = (x1 - x0) / dr.len() as f64;
    let ch = (y0 - y1) / di.len() as f64;
    let mut out = String::new();
    header(
        &mut out,
        &format!("{} {} {} {}", first.experiment, first.estimator, first.ruler, first.metric),
    );
    for r in &cells {
        let i = dr.iter().position(|v| *v == r.delta_r).unwrap();
        let j = di.iter().position(|v| *v == r.delta_i).unwrap();
        let fill = if r.value.is_finite() {
            color_ramp((r.value - lo) / span)
        } else {
            "#cccccc".into()
        };
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>Δr={} Δi={}: {}</title></rect>"#,
            x0 + i as f64 * cw,
            y0 - (j + 1) as f64 * ch,
            cw,
            ch,
            r.delta_r,
            r.delta_i,
            r.value
        );
    }
    for (i, v) in dr.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, x0 + (i as f64 + 0.5) * cw, y0 + 18.0, fmt_tick(*v));
    }
    for (j, v) in di.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y0 - (j as f64 + 0.5) * ch + 4.0, fmt_tick(*v));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">Δr</text>"#, (x0 + x1) / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="16" y="{:.2}" text-anchor="middle">Δi</text>"#, (y0 + y1) / 2.0);
    // color bar
    let bx = x1 + 30.0;
    for s in 0..20 {
        let t = s as f64 / 19.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            y0 - (s + 1) as f64 * (y0 - y1) / 20.0,
            (y0 - y1) / 20.0,
            color_ramp(t)
        );
    }
    let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}">{}</text>"#, bx + 22.0, y0, fmt_tick(lo));
    let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}">{}</text>"#, bx + 22.0, y1 + 8.0, fmt_tick(hi));
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(table: &ResultTable, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::LineLogLog => line_plot(table, true),
        PlotKind::LineLinear => line_plot(table, false),
        PlotKind::Heatmap => heatmap(table),
    }
}
