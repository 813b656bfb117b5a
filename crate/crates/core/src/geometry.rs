//! Decision-boundary geometry of individual symbols.
//!
//! Every symbol `s` is split into two components `s_A + s_B` that run along
//! its decision boundaries. A noiseless received value `r` is then described
//! by the two real coefficients `(α_A, α_B)` with `r = α_A·s_A + α_B·s_B`;
//! larger coefficients mean a larger distance from the boundaries.
//!
//! The per-slot matrix `M` maps the real expansion of the transmit vector to
//! the stacked coefficient vector `[α_{1,A} .. α_{K,A}, α_{1,B} .. α_{K,B}]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::Modulation;

/// Smallest admissible |Re(s_A)Im(s_B) − Im(s_A)Re(s_B)|.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// A symbol split along its two decision boundaries.
///
/// For PSK, `a` runs along the clockwise boundary and `b` along the
/// counter-clockwise one. For QAM, `a` is the real part and `b` the
/// imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDecomposition {
    pub a: Complex64,
    pub b: Complex64,
}

impl SymbolDecomposition {
    pub fn recompose(&self) -> Complex64 {
        self.a + self.b
    }

    /// `Re(a)Im(b) − Im(a)Re(b)`, the determinant of the 2×2 basis.
    pub fn determinant(&self) -> f64 {
        self.a.re * self.b.im - self.a.im * self.b.re
    }

    fn checked_determinant(&self) -> Result<f64> {
        let det = self.determinant();
        if det.abs() < DEGENERACY_TOL {
            Err(Error::DegenerateDecomposition { det })
        } else {
            Ok(det)
        }
    }
}

pub fn decompose_psk(s: Complex64, order: u32) -> Result<SymbolDecomposition> {
    if order < 4 {
        return Err(Error::PskOrderTooLow(order));
    }
    let r = s.norm();
    if r < DEGENERACY_TOL {
        return Err(Error::DegenerateDecomposition { det: 0.0 });
    }
    let half = PI / order as f64;
    // a·e^{-jπ/M} + b·e^{jπ/M} = |s| forces a = b = |s| / (2 cos(π/M)).
    let len = r / (2.0 * half.cos());
    let phi = s.arg();
    Ok(SymbolDecomposition { a: Complex64::from_polar(len, phi - half), b: Complex64::from_polar(len, phi + half) })
}

/// Real/imaginary split. Symbols on an axis have no second boundary
/// direction and are rejected.
pub fn decompose_qam(s: Complex64) -> Result<SymbolDecomposition> {
    let dec = SymbolDecomposition { a: Complex64::new(s.re, 0.0), b: Complex64::new(0.0, s.im) };
    dec.checked_determinant()?;
    Ok(dec)
}

pub fn decompose(s: Complex64, modulation: Modulation) -> Result<SymbolDecomposition> {
    if modulation.is_psk() {
        decompose_psk(s, modulation.order())
    } else {
        decompose_qam(s)
    }
}

/// CI eligibility of one user's two components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentEligibility {
    pub real: bool,
    pub imag: bool,
}

/// The four QAM point types of a constellation quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QamPointType {
    /// Inner point, both components locked.
    A,
    /// Real component on the outer edge.
    B,
    /// Imaginary component on the outer edge.
    C,
    /// Corner point.
    D,
}

impl ComponentEligibility {
    pub fn point_type(&self) -> QamPointType {
        match (self.real, self.imag) {
            (false, false) => QamPointType::A,
            (true, false) => QamPointType::B,
            (false, true) => QamPointType::C,
            (true, true) => QamPointType::D,
        }
    }
}

/// A component can grow past its nominal value only on the outer edge of the
/// grid.
pub fn classify_qam(s: Complex64, modulation: Modulation) -> ComponentEligibility {
    let edge = modulation.qam_max_component();
    let tol = 1e-9 * edge.max(1.0);
    ComponentEligibility { real: (s.re.abs() - edge).abs() <= tol, imag: (s.im.abs() - edge).abs() <= tol }
}

/// Per-user eligibility flags: every component for PSK, the outer-edge
/// components for QAM.
pub fn eligibility(s: Complex64, modulation: Modulation) -> ComponentEligibility {
    if modulation.is_psk() {
        ComponentEligibility { real: true, imag: true }
    } else {
        classify_qam(s, modulation)
    }
}

/// Solves `r = α_A·s_A + α_B·s_B` for the real pair `(α_A, α_B)`.
pub fn scaling_from_received(r: Complex64, dec: &SymbolDecomposition) -> Result<(f64, f64)> {
    let det = dec.checked_determinant()?;
    let alpha_a = (dec.b.im * r.re - dec.b.re * r.im) / det;
    let alpha_b = (dec.a.re * r.im - dec.a.im * r.re) / det;
    Ok((alpha_a, alpha_b))
}

/// The two rows `(j_k, l_k)` of `M` for one user, each of length `2·N_T`.
///
/// With `x_E = [Re(x); Im(x)]` the real expansion of the transmit vector,
/// `j_k·x_E = α_A` and `l_k·x_E = α_B` for the received value `h^T x`.
pub fn m_rows(h: &[Complex64], dec: &SymbolDecomposition) -> Result<(DVector<f64>, DVector<f64>)> {
    let det = dec.checked_determinant()?;
    let nt = h.len();
    let (a, b) = (dec.a, dec.b);
    let mut j = DVector::zeros(2 * nt);
    let mut l = DVector::zeros(2 * nt);
    for (i, hi) in h.iter().enumerate() {
        j[i] = (b.im * hi.re - b.re * hi.im) / det;
        j[nt + i] = -(b.im * hi.im + b.re * hi.re) / det;
        l[i] = (a.re * hi.im - a.im * hi.re) / det;
        l[nt + i] = (a.re * hi.re + a.im * hi.im) / det;
    }
    Ok((j, l))
}

/// Stacks the per-user rows into `M` (2K × 2N_T): all `j_k` first, then all
/// `l_k`.
pub fn build_m(h: &DMatrix<Complex64>, symbols: &[Complex64], modulation: Modulation) -> Result<DMatrix<f64>> {
    let (k, nt) = h.shape();
    assert_eq!(symbols.len(), k, "one symbol per user");
    let mut m = DMatrix::zeros(2 * k, 2 * nt);
    for (user, &s) in symbols.iter().enumerate() {
        let dec = decompose(s, modulation)?;
        let row: Vec<Complex64> = h.row(user).iter().copied().collect();
        let (j, l) = m_rows(&row, &dec)?;
        m.row_mut(user).copy_from(&j.transpose());
        m.row_mut(k + user).copy_from(&l.transpose());
    }
    Ok(m)
}

/// `[Re(v); Im(v)]`.
pub fn stack_real(v: &[Complex64]) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// `P = [I; 0]`, size 2n × n.
pub fn select_p(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// `Q = [0; I]`, size 2n × n.
pub fn select_q(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, n, |i, j| if i == n + j { 1.0 } else { 0.0 })
}

/// `T = [[0, I], [−I, 0]]`, size 2k × 2k.
pub fn rotation_t(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * k, 2 * k, |i, j| {
        if i < k && j == i + k {
            1.0
        } else if i >= k && j + k == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// `c_E = T·s_E = [Im(s); −Re(s)]`.
pub fn companion(s_e: &DVector<f64>) -> DVector<f64> {
    let k = s_e.len() / 2;
    DVector::from_fn(2 * k, |i, _| if i < k { s_e[k + i] } else { -s_e[i - k] })
}

/// Real expansion of one symbol slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotExpansion {
    pub s_e: DVector<f64>,
    pub c_e: DVector<f64>,
}

impl SlotExpansion {
    pub fn new(symbols: &[Complex64]) -> Self {
        let s_e = stack_real(symbols);
        let c_e = companion(&s_e);
        SlotExpansion { s_e, c_e }
    }
}

/// `Ŵ = [Re(W), −Im(W)]` (N_T × 2K).
pub fn w_hat_from_complex(w: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (nt, k) = w.shape();
    DMatrix::from_fn(nt, 2 * k, |i, j| if j < k { w[(i, j)].re } else { -w[(i, j - k)].im })
}

/// `W = Ŵ·P̂ − j·Ŵ·Q̂`.
pub fn complex_from_w_hat(w_hat: &DMatrix<f64>) -> DMatrix<Complex64> {
    let (nt, two_k) = w_hat.shape();
    let k = two_k / 2;
    DMatrix::from_fn(nt, k, |i, j| Complex64::new(w_hat[(i, j)], -w_hat[(i, k + j)]))
}

/// `W_E = [[Re W, −Im W], [Im W, Re W]]` (2N_T × 2K).
pub fn expand_precoder(w: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (nt, k) = w.shape();
    DMatrix::from_fn(2 * nt, 2 * k, |i, j| {
        let (r, c) = (i % nt, j % k);
        let z = w[(r, c)];
        match (i < nt, j < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
