//! Unit-energy PSK and square-QAM constellations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Distance below which a complex value is accepted as a constellation point.
const POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationKind {
    Psk,
    Qam,
}

/// A normalized constellation. Average symbol energy is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulation {
    kind: ModulationKind,
    order: u32,
}

impl Modulation {
    pub const QPSK: Modulation = Modulation { kind: ModulationKind::Psk, order: 4 };
    pub const PSK8: Modulation = Modulation { kind: ModulationKind::Psk, order: 8 };
    pub const PSK16: Modulation = Modulation { kind: ModulationKind::Psk, order: 16 };
    pub const QAM16: Modulation = Modulation { kind: ModulationKind::Qam, order: 16 };
    pub const QAM64: Modulation = Modulation { kind: ModulationKind::Qam, order: 64 };

    pub fn psk(order: u32) -> Result<Self> {
        match order {
            0..=3 => Err(Error::PskOrderTooLow(order)),
            4 | 8 | 16 => Ok(Modulation { kind: ModulationKind::Psk, order }),
            _ => Err(Error::UnsupportedModulation(format!("{order}PSK"))),
        }
    }

    pub fn qam(order: u32) -> Result<Self> {
        match order {
            16 | 64 => Ok(Modulation { kind: ModulationKind::Qam, order }),
            _ => Err(Error::UnsupportedModulation(format!("{order}QAM"))),
        }
    }

    pub fn kind(&self) -> ModulationKind {
        self.kind
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_psk(&self) -> bool {
        self.kind == ModulationKind::Psk
    }

    pub fn is_qam(&self) -> bool {
        self.kind == ModulationKind::Qam
    }

    /// Levels per real dimension of a square QAM (4 for 16QAM).
    fn qam_side(&self) -> u32 {
        (self.order as f64).sqrt().round() as u32
    }

    /// QAM grid half-spacing `g`: components take values in {±1, ±3, ...}·g.
    pub fn qam_spacing(&self) -> f64 {
        (3.0 / (2.0 * (self.order as f64 - 1.0))).sqrt()
    }

    /// Largest component magnitude of a QAM point, `(side - 1)·g`.
    pub fn qam_max_component(&self) -> f64 {
        (self.qam_side() - 1) as f64 * self.qam_spacing()
    }

    /// All constellation points in index order.
    pub fn points(&self) -> Vec<Complex64> {
        (0..self.order as usize).map(|i| self.point(i)).collect()
    }

    /// The point with index `i`. PSK points sit at angle `π/M + 2πi/M`;
    /// QAM points are enumerated row by row (real part fastest).
    pub fn point(&self, i: usize) -> Complex64 {
        assert!(i < self.order as usize, "symbol index {i} out of range");
        match self.kind {
            ModulationKind::Psk => {
                let m = self.order as f64;
                Complex64::from_polar(1.0, PI / m + 2.0 * PI * i as f64 / m)
            }
            ModulationKind::Qam => {
                let side = self.qam_side() as usize;
                let g = self.qam_spacing();
                let level = |j: usize| (2.0 * j as f64 - (side as f64 - 1.0)) * g;
                Complex64::new(level(i % side), level(i / side))
            }
        }
    }

    /// Index of the constellation point nearest to `y`.
    ///
    /// PSK decides on phase alone, so the amplitude of `y` is irrelevant.
    /// QAM decides on the nominal grid; callers divide by any block
    /// normalization factor first.
    pub fn detect(&self, y: Complex64) -> usize {
        match self.kind {
            ModulationKind::Psk => {
                let m = self.order as f64;
                let sector = ((y.arg() - PI / m) * m / (2.0 * PI)).round();
                sector.rem_euclid(m) as usize
            }
            ModulationKind::Qam => {
                let side = self.qam_side() as usize;
                let g = self.qam_spacing();
                let slice = |v: f64| {
                    let j = ((v / g + side as f64 - 1.0) / 2.0).round();
                    j.clamp(0.0, side as f64 - 1.0) as usize
                };
                slice(y.re) + side * slice(y.im)
            }
        }
    }

    /// Index of `s` if it is a constellation point.
    pub fn index_of(&self, s: Complex64) -> Option<usize> {
        let i = self.detect(s);
        ((self.point(i) - s).norm() <= POINT_TOL).then_some(i)
    }

    pub fn check_point(&self, s: Complex64) -> Result<usize> {
        self.index_of(s).ok_or_else(|| Error::NotAConstellationPoint {
            re: s.re,
            im: s.im,
            modulation: self.to_string(),
        })
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.order) {
            (ModulationKind::Psk, 4) => write!(f, "QPSK"),
            (ModulationKind::Psk, m) => write!(f, "{m}PSK"),
            (ModulationKind::Qam, m) => write!(f, "{m}QAM"),
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "qpsk" {
            return Modulation::psk(4);
        }
        let parse = |digits: &str| digits.parse::<u32>().map_err(|_| Error::UnsupportedModulation(s.to_string()));
        if let Some(d) = lower.strip_suffix("psk") {
            Modulation::psk(parse(d)?)
        } else if let Some(d) = lower.strip_suffix("qam") {
            Modulation::qam(parse(d)?)
        } else {
            Err(Error::UnsupportedModulation(s.to_string()))
        }
    }
}
