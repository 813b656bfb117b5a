//! CSV tables. Reals are written like C's `%.6e`, lines end in LF.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{SerCurve, TimingRow};

pub const SER_SWEEP_HEADER: [&str; 6] = ["scheme", "snr_db", "symbols", "errors", "ser", "mean_solve_ms"];
pub const BLOCK_SWEEP_HEADER: [&str; 6] = ["scheme", "n_block", "snr_db", "symbols", "errors", "ser"];
pub const TIMING_HEADER: [&str; 6] = ["k", "n_t", "n_block", "scheme", "mean_solve_ms", "std_solve_ms"];

/// `printf("%.6e", x)`: `1.000000e+00`, `-2.500000e-07`, `inf`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Inverse of [`format_real`].
pub fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_ser_sweep(path: &Path, curve: &SerCurve) -> Result<()> {
    let rows = curve
        .points
        .iter()
        .map(|p| {
            vec![
                p.scheme.clone(),
                format_real(p.snr_db),
                p.count.symbols.to_string(),
                p.count.errors.to_string(),
                format_real(p.count.ser()),
                format_real(p.mean_solve_ms),
            ]
        })
        .collect();
    write_rows(path, &SER_SWEEP_HEADER, rows)
}

/// Rows ordered by scheme, then block length, then SNR.
pub fn write_block_sweep(path: &Path, curves: &[SerCurve]) -> Result<()> {
    let mut schemes: Vec<&str> = Vec::new();
    for p in curves.iter().flat_map(|c| &c.points) {
        if !schemes.contains(&p.scheme.as_str()) {
            schemes.push(&p.scheme);
        }
    }
    let mut rows = Vec::new();
    for scheme in schemes {
        for curve in curves {
            for p in curve.points.iter().filter(|p| p.scheme == scheme) {
                rows.push(vec![
                    p.scheme.clone(),
                    curve.n_block.to_string(),
                    format_real(p.snr_db),
                    p.count.symbols.to_string(),
                    p.count.errors.to_string(),
                    format_real(p.count.ser()),
                ]);
            }
        }
    }
    write_rows(path, &BLOCK_SWEEP_HEADER, rows)
}

pub fn write_timing(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.n_t.to_string(),
                r.n_block.to_string(),
                r.scheme.to_string(),
                format_real(r.mean_ms),
                format_real(r.std_ms),
            ]
        })
        .collect();
    write_rows(path, &TIMING_HEADER, rows)
}

/// A CSV file read back as a header and string records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
        let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| io_err(path, e))?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(format_real(1.0), "1.000000e+00");
        assert_eq!(format_real(0.0), "0.000000e+00");
        assert_eq!(format_real(-2.5e-7), "-2.500000e-07");
        assert_eq!(format_real(1.234567891e123), "1.234568e+123");
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(parse_real("inf"), Some(f64::INFINITY));
        assert_eq!(parse_real("4.500000e-04"), Some(4.5e-4));
    }
}
