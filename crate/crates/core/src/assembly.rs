//! Block-level problem assembly.
//!
//! For a block of `N` symbol slots this builds the per-slot matrices
//! `A^n = M^n·P`, `B^n = M^n·Q`, the symbol Gram matrix
//! `D = Σ_n (s_E^n s_E^nᵀ + c_E^n c_E^nᵀ)`, the bilinear coefficients
//! `p, f, g, q`, and the dual matrix `U` whose blocks are
//!
//! ```text
//! U_{m,n} = p_{m,n} A^m A^nᵀ + f_{m,n} A^m B^nᵀ + g_{m,n} B^m A^nᵀ + q_{m,n} B^m B^nᵀ
//! ```
//!
//! Given a dual vector `δ_E` with `1ᵀδ_E = 1`, [`recover_precoder`] returns
//! the real precoder `Ŵ = (1/2μ)·Σ_n [A^nᵀ δ^n s_E^nᵀ + B^nᵀ δ^n c_E^nᵀ]·D⁻¹`
//! with `μ = sqrt(δ_Eᵀ U δ_E / (4 N p0))`, which makes the block power
//! constraint hold with equality.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{self, SlotExpansion};
use crate::modulation::Modulation;
use crate::qp::{QpProblem, SignSet};

/// Largest accepted condition number of `D` for a direct inverse.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;
/// Dual energies at or below this cannot be turned into a precoder.
pub const ZERO_DUAL_TOL: f64 = 1e-14;

/// One coherence-interval instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProblem {
    /// Channel, K × N_T; row `k` is `h_kᵀ`.
    pub h: DMatrix<Complex64>,
    /// Symbols, K × N; column `n` is slot `n`.
    pub s: DMatrix<Complex64>,
    /// Power budget per slot.
    pub p0: f64,
    pub modulation: Modulation,
}

impl BlockProblem {
    pub fn new(h: DMatrix<Complex64>, s: DMatrix<Complex64>, p0: f64, modulation: Modulation) -> Result<Self> {
        let (k, nt) = h.shape();
        if k == 0 || k > nt {
            return Err(Error::InvalidProblem(format!("need 1 <= K <= N_T, got K={k}, N_T={nt}")));
        }
        if s.nrows() != k || s.ncols() == 0 {
            return Err(Error::InvalidProblem(format!(
                "symbol block is {}x{}, expected {k} rows and at least one slot",
                s.nrows(),
                s.ncols()
            )));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(Error::InvalidProblem(format!("p0 must be positive, got {p0}")));
        }
        for &sym in s.iter() {
            modulation.check_point(sym)?;
        }
        Ok(BlockProblem { h, s, p0, modulation })
    }

    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn slots(&self) -> usize {
        self.s.ncols()
    }

    pub fn slot_symbols(&self, n: usize) -> Vec<Complex64> {
        self.s.column(n).iter().copied().collect()
    }

    /// The single-slot problem for slot `n`.
    pub fn slot_problem(&self, n: usize) -> BlockProblem {
        BlockProblem {
            h: self.h.clone(),
            s: self.s.columns(n, 1).into_owned(),
            p0: self.p0,
            modulation: self.modulation,
        }
    }

    /// Total energy `Σ_n ‖W s^n‖²` of `W` over this block.
    pub fn block_power(&self, w: &DMatrix<Complex64>) -> f64 {
        (w * &self.s).norm_squared()
    }
}

/// Per-slot real quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGeometry {
    pub m: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s_e: DVector<f64>,
    pub c_e: DVector<f64>,
    /// CI-eligible flag per index of the 2K coefficient vector.
    pub eligible: Vec<bool>,
}

impl SlotGeometry {
    /// Coefficient vector `A·Ŵ·s_E + B·Ŵ·c_E` achieved by a real precoder.
    pub fn scaling(&self, w_hat: &DMatrix<f64>) -> DVector<f64> {
        &self.a * (w_hat * &self.s_e) + &self.b * (w_hat * &self.c_e)
    }
}

pub fn build_slot_geometry(block: &BlockProblem, n: usize) -> Result<SlotGeometry> {
    assert!(n < block.slots(), "slot {n} out of range");
    let k = block.users();
    let nt = block.antennas();
    let symbols = block.slot_symbols(n);
    let m = geometry::build_m(&block.h, &symbols, block.modulation)?;
    // M·P and M·Q are the left and right column halves of M.
    let a = m.columns(0, nt).into_owned();
    let b = m.columns(nt, nt).into_owned();
    let SlotExpansion { s_e, c_e } = SlotExpansion::new(&symbols);
    let mut eligible = vec![false; 2 * k];
    for (user, &sym) in symbols.iter().enumerate() {
        let e = geometry::eligibility(sym, block.modulation);
        eligible[user] = e.real;
        eligible[k + user] = e.imag;
    }
    Ok(SlotGeometry { m, a, b, s_e, c_e, eligible })
}

/// How to invert `D` when its condition number exceeds
/// [`GRAM_CONDITION_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramPolicy {
    /// Refuse with [`Error::SingularGram`].
    Strict,
    /// Use the Moore-Penrose pseudo-inverse. This covers blocks shorter than
    /// the number of users, including the single-slot case.
    #[default]
    PseudoInverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramInverse {
    pub d: DMatrix<f64>,
    pub d_inv: DMatrix<f64>,
    pub condition: f64,
    pub rank: usize,
    pub pseudo: bool,
}

pub fn build_gram(slots: &[SlotGeometry], policy: GramPolicy) -> Result<GramInverse> {
    let dim = slots.first().map(|s| s.s_e.len()).unwrap_or(0);
    let mut d = DMatrix::zeros(dim, dim);
    for slot in slots {
        d.ger(1.0, &slot.s_e, &slot.s_e, 1.0);
        d.ger(1.0, &slot.c_e, &slot.c_e, 1.0);
    }
    let eig = SymmetricEigen::new(d.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let cutoff = GRAM_CONDITION_LIMIT.recip() * lmax;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();

    if condition <= GRAM_CONDITION_LIMIT {
        if let Some(chol) = Cholesky::new(d.clone()) {
            let d_inv = symmetrize(chol.inverse());
            return Ok(GramInverse { d, d_inv, condition, rank, pseudo: false });
        }
    }
    match policy {
        GramPolicy::Strict => Err(Error::SingularGram { condition }),
        GramPolicy::PseudoInverse => {
            if lmax <= 0.0 {
                return Err(Error::SingularGram { condition });
            }
            let inv_vals = eig.eigenvalues.map(|l| if l > cutoff { l.recip() } else { 0.0 });
            let v = &eig.eigenvectors;
            let d_inv = symmetrize(v * DMatrix::from_diagonal(&inv_vals) * v.transpose());
            Ok(GramInverse { d, d_inv, condition, rank, pseudo: true })
        }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// The four N × N bilinear coefficient matrices, indexed `[(m, n)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    /// `p_{m,n} = s_E^nᵀ D⁻¹ s_E^m`
    pub p: DMatrix<f64>,
    /// `f_{m,n} = c_E^nᵀ D⁻¹ s_E^m`
    pub f: DMatrix<f64>,
    /// `g_{m,n} = s_E^nᵀ D⁻¹ c_E^m`
    pub g: DMatrix<f64>,
    /// `q_{m,n} = c_E^nᵀ D⁻¹ c_E^m`
    pub q: DMatrix<f64>,
}

pub fn build_coeffs(slots: &[SlotGeometry], gram: &GramInverse) -> Coefficients {
    let n = slots.len();
    let dim = gram.d.nrows();
    let s = DMatrix::from_fn(dim, n, |i, j| slots[j].s_e[i]);
    let c = DMatrix::from_fn(dim, n, |i, j| slots[j].c_e[i]);
    let dinv_s = &gram.d_inv * &s;
    let dinv_c = &gram.d_inv * &c;
    // (Sᵀ D⁻¹ S)_{n,m} = s_nᵀ D⁻¹ s_m = p_{m,n}; the transposes follow.
    let p = (s.transpose() * &dinv_s).transpose();
    let f = (c.transpose() * &dinv_s).transpose();
    let g = (s.transpose() * &dinv_c).transpose();
    let q = (c.transpose() * &dinv_c).transpose();
    Coefficients { p, f, g, q }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGeometry {
    pub slots: Vec<SlotGeometry>,
    pub gram: GramInverse,
    pub coeffs: Coefficients,
}

impl BlockGeometry {
    pub fn users(&self) -> usize {
        self.gram.d.nrows() / 2
    }

    pub fn antennas(&self) -> usize {
        self.slots[0].a.ncols()
    }

    /// Dual dimension `2NK`.
    pub fn dual_dim(&self) -> usize {
        self.slots.len() * self.gram.d.nrows()
    }

    /// Sign-constrained dual indices: every index for PSK, the CI-eligible
    /// ones for QAM. Index `n·2K + k` belongs to component `k` of slot `n`.
    pub fn sign_set(&self) -> SignSet {
        SignSet::from_mask(self.slots.iter().flat_map(|s| s.eligible.iter().copied()).collect())
    }

    /// Splits a dual vector into its per-slot parts `δ^n`.
    pub fn split_dual<'a>(&self, delta: &'a DVector<f64>) -> impl Iterator<Item = DVector<f64>> + 'a {
        let two_k = self.gram.d.nrows();
        (0..self.slots.len()).map(move |n| delta.rows(n * two_k, two_k).into_owned())
    }
}

pub fn build_geometry(block: &BlockProblem, policy: GramPolicy) -> Result<BlockGeometry> {
    let slots = (0..block.slots()).map(|n| build_slot_geometry(block, n)).collect::<Result<Vec<_>>>()?;
    let gram = build_gram(&slots, policy)?;
    let coeffs = build_coeffs(&slots, &gram);
    Ok(BlockGeometry { slots, gram, coeffs })
}

/// The dual QP `min δᵀUδ` over the (partial) simplex, with the data needed
/// to scale its solution back into a precoder.
#[derive(Debug, Clone)]
pub struct DualQp {
    pub problem: QpProblem,
    pub n_slots: usize,
    pub p0: f64,
}

impl DualQp {
    pub fn u(&self) -> &DMatrix<f64> {
        &self.problem.u
    }

    pub fn sign_set(&self) -> &SignSet {
        &self.problem.sign_set
    }
}

pub fn build_u(geometry: &BlockGeometry, p0: f64) -> DualQp {
    let n = geometry.slots.len();
    let two_k = geometry.gram.d.nrows();
    let c = &geometry.coeffs;
    let mut u = DMatrix::zeros(n * two_k, n * two_k);
    for (mi, sm) in geometry.slots.iter().enumerate() {
        for (ni, sn) in geometry.slots.iter().enumerate() {
            let left = &sn.a * c.p[(mi, ni)] + &sn.b * c.f[(mi, ni)];
            let right = &sn.a * c.g[(mi, ni)] + &sn.b * c.q[(mi, ni)];
            let block = &sm.a * left.transpose() + &sm.b * right.transpose();
            u.view_mut((mi * two_k, ni * two_k), (two_k, two_k)).copy_from(&block);
        }
    }
    let sign_set = geometry.sign_set();
    DualQp { problem: QpProblem { u, sign_set }, n_slots: n, p0 }
}

/// The matrices `F = Σ_l F^l` and `G = Σ_l G^l` from the expansion of the
/// block power in terms of the dual vector. They always sum to `U`; they are
/// built only to check that identity.
pub fn build_f_g(geometry: &BlockGeometry) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = geometry.slots.len();
    let two_k = geometry.gram.d.nrows();
    let Coefficients { p, f, g, q } = &geometry.coeffs;
    let mut big_f = DMatrix::zeros(n * two_k, n * two_k);
    let mut big_g = DMatrix::zeros(n * two_k, n * two_k);
    for (mi, sm) in geometry.slots.iter().enumerate() {
        for (ni, sn) in geometry.slots.iter().enumerate() {
            let aa = &sm.a * sn.a.transpose();
            let ab = &sm.a * sn.b.transpose();
            let ba = &sm.b * sn.a.transpose();
            let bb = &sm.b * sn.b.transpose();
            let mut fb = DMatrix::zeros(two_k, two_k);
            let mut gb = DMatrix::zeros(two_k, two_k);
            for l in 0..n {
                fb += &aa * (p[(l, ni)] * p[(mi, l)])
                    + &ab * (f[(l, ni)] * p[(mi, l)])
                    + &ba * (p[(l, ni)] * g[(mi, l)])
                    + &bb * (f[(l, ni)] * g[(mi, l)]);
                gb += &aa * (g[(l, ni)] * f[(mi, l)])
                    + &ab * (q[(l, ni)] * f[(mi, l)])
                    + &ba * (g[(l, ni)] * q[(mi, l)])
                    + &bb * (q[(l, ni)] * q[(mi, l)]);
            }
            big_f.view_mut((mi * two_k, ni * two_k), (two_k, two_k)).copy_from(&fb);
            big_g.view_mut((mi * two_k, ni * two_k), (two_k, two_k)).copy_from(&gb);
        }
    }
    (big_f, big_g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub pg_residual: f64,
    pub objective: f64,
}

/// A precoder recovered from a dual solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeResult {
    /// Complex precoder, N_T × K.
    pub w: DMatrix<Complex64>,
    /// `[Re W, −Im W]`, N_T × 2K.
    pub w_hat: DMatrix<f64>,
    /// Smallest achieved scaling coefficient over the block. For QAM this is
    /// the block normalization factor handed to the receivers.
    pub t_star: f64,
    pub mu: f64,
    pub delta_e: DVector<f64>,
    pub block_power: f64,
    /// Achieved coefficient vectors, one per slot.
    pub scaling: Vec<DVector<f64>>,
    pub solve: Option<SolveStats>,
}

/// `X = Σ_n [A^nᵀ δ^n s_E^nᵀ + B^nᵀ δ^n c_E^nᵀ]`, the N_T × 2K matrix that
/// the dual vector induces through stationarity.
pub fn dual_image(geometry: &BlockGeometry, delta: &DVector<f64>) -> DMatrix<f64> {
    let nt = geometry.antennas();
    let two_k = geometry.gram.d.nrows();
    let mut x = DMatrix::zeros(nt, two_k);
    for (slot, d) in geometry.slots.iter().zip(geometry.split_dual(delta)) {
        let ad = slot.a.transpose() * &d;
        let bd = slot.b.transpose() * &d;
        x.ger(1.0, &ad, &slot.s_e, 1.0);
        x.ger(1.0, &bd, &slot.c_e, 1.0);
    }
    x
}

pub fn recover_precoder(
    delta: &DVector<f64>,
    geometry: &BlockGeometry,
    dual: &DualQp,
    block: &BlockProblem,
) -> Result<PrecodeResult> {
    assert_eq!(delta.len(), geometry.dual_dim(), "dual vector dimension");
    let energy = delta.dot(&(dual.u() * delta));
    if !(energy > ZERO_DUAL_TOL) {
        return Err(Error::ZeroDual { energy });
    }
    let n = dual.n_slots as f64;
    let mu = (energy / (4.0 * n * dual.p0)).sqrt();
    let w_hat = dual_image(geometry, delta) * &geometry.gram.d_inv / (2.0 * mu);
    let w = geometry::complex_from_w_hat(&w_hat);
    let scaling: Vec<DVector<f64>> = geometry.slots.iter().map(|s| s.scaling(&w_hat)).collect();
    let t_star = scaling.iter().map(|a| a.min()).fold(f64::INFINITY, f64::min);
    let block_power = block.block_power(&w);
    Ok(PrecodeResult { w, w_hat, t_star, mu, delta_e: delta.clone(), block_power, scaling, solve: None })
}
