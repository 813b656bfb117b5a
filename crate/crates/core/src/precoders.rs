//! Precoder constructors: CI-BLP, CI-SLP and block-normalized ZF/RZF.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::assembly::{
    build_geometry, build_u, recover_precoder, BlockGeometry, BlockProblem, DualQp, GramPolicy, PrecodeResult,
    SolveStats,
};
use crate::error::{Error, Result};
use crate::modulation::Modulation;
use crate::qp::{solve_pg, QpSolution, SolverConfig};

/// Largest accepted condition number of `H Hᴴ` for zero-forcing.
pub const CHANNEL_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecoderKind {
    CiBlp,
    CiSlp,
    Zf,
    /// Regularized ZF with loading `K/ρ`; `ρ = ∞` is plain ZF.
    Rzf(f64),
}

impl PrecoderKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            PrecoderKind::Rzf(rho) if !(*rho > 0.0) => {
                Err(Error::InvalidConfig(format!("rzf rho must be positive, got {rho}")))
            }
            _ => Ok(()),
        }
    }

    /// Scheme label used in tables: `ci-blp`, `ci-slp`, `zf`, `rzf`.
    pub fn label(&self) -> &'static str {
        match self {
            PrecoderKind::CiBlp => "ci-blp",
            PrecoderKind::CiSlp => "ci-slp",
            PrecoderKind::Zf => "zf",
            PrecoderKind::Rzf(_) => "rzf",
        }
    }

    pub fn is_ci(&self) -> bool {
        matches!(self, PrecoderKind::CiBlp | PrecoderKind::CiSlp)
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses a scheme label. `rzf` gets `ρ = 1`; callers substitute the
/// operating SNR where appropriate.
impl FromStr for PrecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "ci-blp" | "ciblp" | "blp" => Ok(PrecoderKind::CiBlp),
            "ci-slp" | "cislp" | "slp" => Ok(PrecoderKind::CiSlp),
            "zf" => Ok(PrecoderKind::Zf),
            "rzf" => Ok(PrecoderKind::Rzf(1.0)),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CiOptions {
    pub solver: SolverConfig,
    pub gram: GramPolicy,
}

/// A CI problem assembled up to the QP, so that the solve can be timed or
/// repeated on its own.
#[derive(Debug, Clone)]
pub struct PreparedCi {
    pub geometry: BlockGeometry,
    pub dual: DualQp,
}

pub fn prepare_ci(block: &BlockProblem, gram: GramPolicy) -> Result<PreparedCi> {
    let geometry = build_geometry(block, gram)?;
    let dual = build_u(&geometry, block.p0);
    Ok(PreparedCi { geometry, dual })
}

impl PreparedCi {
    pub fn solve(&self, solver: &SolverConfig) -> Result<QpSolution> {
        solve_pg(&self.dual.problem, solver)
    }

    pub fn finish(&self, block: &BlockProblem, solution: &QpSolution) -> Result<PrecodeResult> {
        let mut result = recover_precoder(&solution.x, &self.geometry, &self.dual, block)?;
        result.solve = Some(SolveStats {
            iterations: solution.iterations,
            pg_residual: solution.pg_residual,
            objective: solution.objective,
        });
        Ok(result)
    }
}

/// CI-BLP over the whole block. PSK constrains every dual entry; QAM leaves
/// the boundary-locked components free, and `t_star` is the block-constant
/// normalization the receivers divide by.
pub fn ci_blp(block: &BlockProblem, opts: &CiOptions) -> Result<PrecodeResult> {
    let prepared = prepare_ci(block, opts.gram)?;
    let solution = prepared.solve(&opts.solver)?;
    prepared.finish(block, &solution)
}

/// CI-SLP for one symbol vector: CI-BLP on a single-slot block.
pub fn ci_slp(
    h: &DMatrix<Complex64>,
    s_n: &[Complex64],
    p0: f64,
    modulation: Modulation,
    opts: &CiOptions,
) -> Result<PrecodeResult> {
    let s = DMatrix::from_column_slice(s_n.len(), 1, s_n);
    let block = BlockProblem::new(h.clone(), s, p0, modulation)?;
    ci_blp(&block, opts)
}

/// CI-SLP applied slot by slot over a block.
pub fn ci_slp_block(block: &BlockProblem, opts: &CiOptions) -> Result<Vec<PrecodeResult>> {
    (0..block.slots()).map(|n| ci_blp(&block.slot_problem(n), opts)).collect()
}

/// A block-normalized linear precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPrecoder {
    pub w: DMatrix<Complex64>,
    /// Block normalization `f = sqrt(Σ_n ‖W_u s^n‖² / (N p0))`.
    pub scaling: f64,
    /// Real gain a QAM receiver divides by: the mean of `Re (H W)_kk`.
    pub gain: f64,
}

pub fn zf(block: &BlockProblem) -> Result<LinearPrecoder> {
    let gram = channel_gram(&block.h);
    check_condition(&gram)?;
    let inv = hermitian_inverse(gram)?;
    normalize(block, block.h.adjoint() * inv)
}

pub fn rzf(block: &BlockProblem, rho: f64) -> Result<LinearPrecoder> {
    PrecoderKind::Rzf(rho).validate()?;
    let k = block.users();
    let loaded = channel_gram(&block.h) + DMatrix::identity(k, k) * Complex64::new(k as f64 / rho, 0.0);
    let inv = hermitian_inverse(loaded)?;
    normalize(block, block.h.adjoint() * inv)
}

fn channel_gram(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    h * h.adjoint()
}

fn check_condition(gram: &DMatrix<Complex64>) -> Result<()> {
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if condition > CHANNEL_CONDITION_LIMIT {
        return Err(Error::RankDeficientChannel { condition });
    }
    Ok(())
}

fn hermitian_inverse(m: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    Cholesky::new(m).map(|c| c.inverse()).ok_or(Error::RankDeficientChannel { condition: f64::INFINITY })
}

fn normalize(block: &BlockProblem, w_unnormalized: DMatrix<Complex64>) -> Result<LinearPrecoder> {
    let energy = block.block_power(&w_unnormalized);
    let scaling = (energy / (block.slots() as f64 * block.p0)).sqrt();
    let w = w_unnormalized / Complex64::new(scaling, 0.0);
    let hw = &block.h * &w;
    let k = block.users();
    let gain = (0..k).map(|i| hw[(i, i)].re).sum::<f64>() / k as f64;
    Ok(LinearPrecoder { w, scaling, gain })
}
