//! The invariant battery behind `ciblp validate`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{build_f_g, build_geometry, build_u, recover_precoder, BlockProblem, GramPolicy};
use crate::error::Error;
use crate::kkt::{kkt_certificate, KktReport, KktThresholds};
use crate::modulation::Modulation;
use crate::precoders::{ci_blp, ci_slp, CiOptions};
use crate::qp::{project_partial_simplex, solve_fw, solve_pg, QpProblem, SignSet, SolverConfig};
use crate::sim::{gen_channel, gen_symbols};

/// Fraction of the largest vertex objective `max U_ii` below which solver
/// objectives are compared in absolute terms.
const OBJECTIVE_FLOOR: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-10;
const ORACLE_MAX_ITER: usize = 1_000_000;

/// A deliberate defect, used to show that the battery can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds an antisymmetric perturbation to every dual matrix `U`.
    AsymmetricU,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "asymmetric-u" => Ok(Fault::AsymmetricU),
            other => Err(format!("unknown fault `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Random CI-BLP instances.
    pub instances: usize,
    pub projection_cases: usize,
    pub solver_cases: usize,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { seed: 2024, instances: 120, projection_cases: 1000, solver_cases: 100, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// KKT report of every CI-BLP solve in the battery.
    pub kkt: Vec<KktReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<4} {:<28} cases={:<5} residual={:.3e} threshold={:.0e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.residual,
                c.threshold
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

/// A random block with `K ∈ 1..=4`, `N_T ∈ K..=6`, `N ∈ K..=8` and
/// QPSK, 8PSK or 16QAM symbols.
pub fn random_block<R: Rng>(rng: &mut R) -> BlockProblem {
    let k = rng.random_range(1..=4);
    let n_t = rng.random_range(k..=6);
    let n = rng.random_range(k..=8);
    let modulation = [Modulation::QPSK, Modulation::PSK8, Modulation::QAM16][rng.random_range(0..3)];
    let h = gen_channel(k, n_t, rng);
    let s = gen_symbols(modulation, k, n, rng).map(|i| modulation.point(i));
    BlockProblem::new(h, s, 1.0, modulation).expect("generated block is valid")
}

fn corrupt(u: &mut DMatrix<f64>) {
    if u.nrows() < 2 {
        u[(0, 0)] = -u[(0, 0)].abs() - 1.0;
        return;
    }
    let bump = 0.1 * u.norm().max(1.0);
    u[(0, 1)] += bump;
    u[(1, 0)] -= bump;
}

pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    let ci = CiOptions::default();

    checks.push(Check { name: "golden-instance", cases: 1, residual: golden_error(opts.fault), threshold: 1e-8 });

    let mut symmetry: f64 = 0.0;
    let mut split: f64 = 0.0;
    let mut kkt = Vec::new();
    let mut solve_failures = 0usize;
    for _ in 0..opts.instances {
        let block = random_block(&mut rng);
        let geometry = build_geometry(&block, GramPolicy::PseudoInverse).expect("random block geometry");
        let mut dual = build_u(&geometry, block.p0);
        if opts.fault == Some(Fault::AsymmetricU) {
            corrupt(&mut dual.problem.u);
        }
        let u = dual.u();
        let scale = u.norm().max(f64::MIN_POSITIVE);
        let asym = (u - u.transpose()).norm() / scale;
        let eig = SymmetricEigen::new((u + u.transpose()) * 0.5);
        let negative = (-eig.eigenvalues.min()).max(0.0) / eig.eigenvalues.max().max(f64::MIN_POSITIVE);
        symmetry = symmetry.max(asym).max(negative);

        let (f, g) = build_f_g(&geometry);
        split = split.max((f + g - u).norm() / scale);

        let solved =
            solve_pg(&dual.problem, &ci.solver).and_then(|sol| recover_precoder(&sol.x, &geometry, &dual, &block));
        match solved {
            Ok(result) => kkt.push(kkt_certificate(&block, &geometry, &result)),
            Err(_) => solve_failures += 1,
        }
    }
    let n = opts.instances;
    checks.push(Check { name: "u-symmetric-psd", cases: n, residual: symmetry, threshold: 1e-10 });
    checks.push(Check { name: "f-plus-g-split", cases: n, residual: split, threshold: 1e-10 });
    checks.push(Check { name: "ci-blp-solves", cases: n, residual: solve_failures as f64, threshold: 0.0 });

    let th = KktThresholds::default();
    let worst = |f: fn(&KktReport) -> f64| kkt.iter().map(f).fold(0.0, f64::max);
    type Field = fn(&KktReport) -> f64;
    let kkt_checks: [(&'static str, Field, f64); 5] = [
        ("kkt-stationarity", |r| r.stationarity, th.stationarity),
        ("kkt-dual-feasibility", |r| r.dual_feasibility, th.dual_feasibility),
        ("kkt-primal-feasibility", |r| r.primal_feasibility, th.primal_feasibility),
        ("kkt-complementary-slackness", |r| r.complementary_slackness, th.complementary_slackness),
        ("power-activeness", |r| r.power_activeness, th.power_activeness),
    ];
    for (name, get, threshold) in kkt_checks {
        let residual = if kkt.is_empty() { f64::INFINITY } else { worst(get) };
        checks.push(Check { name, cases: kkt.len(), residual, threshold });
    }

    checks.push(Check {
        name: "projection-vs-enumeration",
        cases: opts.projection_cases,
        residual: projection_error(&mut rng, opts.projection_cases),
        threshold: 1e-9,
    });
    checks.push(Check {
        name: "pg-vs-frank-wolfe",
        cases: opts.solver_cases,
        residual: solver_disagreement(&mut rng, opts.solver_cases),
        threshold: 1e-6,
    });
    checks.push(Check { name: "n1-reduction", cases: 20, residual: n1_gap(&mut rng, 20, &ci), threshold: 1e-8 });

    ValidationReport { checks, kkt }
}

/// Largest deviation from the hand-derived scalar solution
/// `δ = [1/2, 1/2]`, `μ = 1/2`, `W = 1`, `t* = 1`.
fn golden_error(fault: Option<Fault>) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let block = BlockProblem::new(
        DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        DMatrix::from_element(1, 1, Complex64::new(r, r)),
        1.0,
        Modulation::QPSK,
    )
    .expect("scalar block");
    let geometry = build_geometry(&block, GramPolicy::Strict).expect("scalar geometry");
    let mut dual = build_u(&geometry, 1.0);
    if fault == Some(Fault::AsymmetricU) {
        corrupt(&mut dual.problem.u);
    }
    let Ok(sol) = solve_pg(&dual.problem, &SolverConfig::default()) else {
        return f64::INFINITY;
    };
    let Ok(res) = recover_precoder(&sol.x, &geometry, &dual, &block) else {
        return f64::INFINITY;
    };
    [
        (res.delta_e[0] - 0.5).abs(),
        (res.delta_e[1] - 0.5).abs(),
        (res.mu - 0.5).abs(),
        (res.w[(0, 0)] - Complex64::new(1.0, 0.0)).norm(),
        (res.t_star - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Exact projection by enumerating which sign-constrained entries are zero.
pub fn projection_by_enumeration(v: &DVector<f64>, sign_set: &SignSet) -> DVector<f64> {
    let n = v.len();
    let signed: Vec<usize> = sign_set.indices().collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << signed.len()) {
        let zero = |i: usize| signed.iter().position(|&j| j == i).is_some_and(|p| mask & (1 << p) != 0);
        let free: Vec<usize> = (0..n).filter(|&i| !zero(i)).collect();
        if free.is_empty() {
            continue;
        }
        let theta = (free.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / free.len() as f64;
        let mut x = DVector::zeros(n);
        for &i in &free {
            x[i] = v[i] - theta;
        }
        if signed.iter().any(|&i| x[i] < -1e-12) {
            continue;
        }
        let d = (&x - v).norm_squared();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("feasible set is nonempty").1
}

fn random_sign_set<R: Rng>(rng: &mut R, n: usize) -> SignSet {
    let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
    if mask.iter().all(|m| !m) {
        mask[0] = true;
    }
    SignSet::from_mask(mask)
}

fn projection_error<R: Rng>(rng: &mut R, cases: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let v = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let sign = random_sign_set(rng, n);
        let fast = project_partial_simplex(&v, &sign);
        let slow = projection_by_enumeration(&v, &sign);
        worst = worst.max((fast - slow).norm());
    }
    worst
}

/// Random PSD matrix `BᵀB` with `B` of random rank.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let rank = rng.random_range(1..=n);
    let b = DMatrix::from_fn(rank, n, |_, _| rng.random_range(-1.0..1.0));
    b.transpose() * b
}

fn solver_disagreement<R: Rng>(rng: &mut R, cases: usize) -> f64 {
    let cfg = SolverConfig::default();
    // The oracle runs tighter than the agreement it is asked to certify.
    let oracle = SolverConfig { tol: ORACLE_TOL, max_iter: Some(ORACLE_MAX_ITER), ..cfg.clone() };
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=64);
        let problem = QpProblem::simplex(random_psd(rng, n));
        let pg = solve_pg(&problem, &cfg);
        // A stalled oracle still offers its best iterate; the objective gap
        // decides whether it is close enough.
        let fw = match solve_fw(&problem, &oracle) {
            Err(Error::MaxIterExceeded { best }) => Ok(*best),
            other => other,
        };
        // Many random instances have a zero optimum, so the gap is taken
        // relative to the objective or a small fraction of the vertex value.
        let floor = OBJECTIVE_FLOOR * problem.u.diagonal().max();
        let gap = match (pg, fw) {
            (Ok(a), Ok(b)) => {
                (a.objective - b.objective).abs() / a.objective.abs().max(b.objective.abs()).max(floor).max(1e-300)
            }
            _ => f64::INFINITY,
        };
        worst = worst.max(gap);
    }
    worst
}

fn n1_gap<R: Rng>(rng: &mut R, cases: usize, ci: &CiOptions) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let block = random_block(rng).slot_problem(0);
        let symbols = block.slot_symbols(0);
        let gap = match (ci_blp(&block, ci), ci_slp(&block.h, &symbols, block.p0, block.modulation, ci)) {
            (Ok(a), Ok(b)) => (a.w - b.w).norm(),
            _ => f64::INFINITY,
        };
        worst = worst.max(gap);
    }
    worst
}
