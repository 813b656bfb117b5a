//! Minimal SVG line plots, always drawn from a CSV file on disk.

use std::fmt::Write as _;
use std::path::Path;

use super::table::{parse_real, Table};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl LinePlot {
    /// Points with non-finite coordinates, or non-positive `y` on a log
    /// axis, are left out.
    pub fn to_svg(&self) -> String {
        let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0);
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().copied()).filter(keep).collect();

        let (mut x0, mut x1) = bounds(all.iter().map(|p| p.0));
        let (mut y0, mut y1) = bounds(all.iter().map(|p| ty(p.1)));
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil();
        }
        if x1 <= x0 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 <= y0 {
            y0 -= 1.0;
            y1 += 1.0;
        }
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + (1.0 - (ty(y) - y0) / (y1 - y0)) * plot_h;
        let sy_raw = |v: f64| MARGIN_TOP + (1.0 - (v - y0) / (y1 - y0)) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        for x in ticks(x0, x1) {
            let px = sx(x);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.1}" y1="{MARGIN_TOP}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                MARGIN_TOP + plot_h,
                MARGIN_TOP + plot_h + 16.0,
                tick_label(x)
            );
        }
        let y_ticks: Vec<f64> =
            if self.log_y { (y0 as i32..=y1 as i32).map(f64::from).collect() } else { ticks(y0, y1) };
        for v in y_ticks {
            let py = sy_raw(v);
            let label = if self.log_y { format!("1e{}", v as i32) } else { tick_label(v) };
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                MARGIN_LEFT + plot_w,
                MARGIN_LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> =
                s.points.iter().copied().filter(keep).map(|(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    pts.join(" ")
                );
                for p in &pts {
                    let (cx, cy) = p.split_once(',').expect("point pair");
                    let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Vec::new();
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn column(table: &Table, name: &str, path: &Path) -> Result<usize> {
    table.column(name).ok_or_else(|| Error::Io(format!("{}: no `{name}` column", path.display())))
}

fn real(s: &str, path: &Path) -> Result<f64> {
    parse_real(s).ok_or_else(|| Error::Io(format!("{}: `{s}` is not a number", path.display())))
}

/// Groups rows into series keyed by `key`, in order of first appearance.
fn group(
    table: &Table,
    key: impl Fn(&[String]) -> String,
    point: impl Fn(&[String]) -> Result<(f64, f64)>,
) -> Result<Vec<Series>> {
    let mut series: Vec<Series> = Vec::new();
    for row in &table.rows {
        let name = key(row);
        let p = point(row)?;
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push(p),
            None => series.push(Series { name, points: vec![p] }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

pub fn plot_ser_sweep(csv: &Path, svg: &Path) -> Result<()> {
    let t = Table::read(csv)?;
    let (scheme, snr, ser) = (column(&t, "scheme", csv)?, column(&t, "snr_db", csv)?, column(&t, "ser", csv)?);
    let series = group(&t, |r| r[scheme].clone(), |r| Ok((real(&r[snr], csv)?, real(&r[ser], csv)?)))?;
    LinePlot { title: "SER vs SNR".into(), x_label: "SNR (dB)".into(), y_label: "SER".into(), log_y: true, series }
        .write(svg)
}

pub fn plot_block_sweep(csv: &Path, svg: &Path) -> Result<()> {
    let t = Table::read(csv)?;
    let scheme = column(&t, "scheme", csv)?;
    let n = column(&t, "n_block", csv)?;
    let snr = column(&t, "snr_db", csv)?;
    let ser = column(&t, "ser", csv)?;
    let several_snr = {
        let mut v: Vec<&String> = t.rows.iter().map(|r| &r[snr]).collect();
        v.sort();
        v.dedup();
        v.len() > 1
    };
    let series = group(
        &t,
        |r| if several_snr { format!("{} @ {} dB", r[scheme], r[snr]) } else { r[scheme].clone() },
        |r| Ok((real(&r[n], csv)?, real(&r[ser], csv)?)),
    )?;
    LinePlot {
        title: "SER vs block length".into(),
        x_label: "block length N".into(),
        y_label: "SER".into(),
        log_y: true,
        series,
    }
    .write(svg)
}

pub fn plot_timing(csv: &Path, svg: &Path) -> Result<()> {
    let t = Table::read(csv)?;
    let k = column(&t, "k", csv)?;
    let n_t = column(&t, "n_t", csv)?;
    let n = column(&t, "n_block", csv)?;
    let scheme = column(&t, "scheme", csv)?;
    let mean = column(&t, "mean_solve_ms", csv)?;
    let series =
        group(&t, |r| format!("{} {}x{}", r[scheme], r[k], r[n_t]), |r| Ok((real(&r[n], csv)?, real(&r[mean], csv)?)))?;
    LinePlot {
        title: "QP solve time vs block length".into(),
        x_label: "block length N".into(),
        y_label: "solve time (ms)".into(),
        log_y: true,
        series,
    }
    .write(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_skips_zero_on_log_axis() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y: true,
            series: vec![Series { name: "a<b".into(), points: vec![(0.0, 0.1), (10.0, 0.0), (20.0, 1e-3)] }],
        };
        let svg = plot.to_svg();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("1e-3"));
    }

    #[test]
    fn ticks_cover_range() {
        assert_eq!(ticks(0.0, 30.0), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
    }
}
