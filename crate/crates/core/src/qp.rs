//! Quadratic programs `min xᵀUx` subject to `1ᵀx = 1` and `x_m ≥ 0` for the
//! indices in a sign set.
//!
//! With every index sign-constrained the feasible set is the probability
//! simplex; with some indices free it is a partial simplex (an unbounded
//! polyhedron). [`solve_pg`] handles both. [`solve_fw`] is an independent
//! pairwise Frank-Wolfe solver for the full simplex, used to cross-check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Width of the final bracket on the projection shift θ.
const BISECTION_TOL: f64 = 1e-12;
const POWER_ITER_TOL: f64 = 1e-6;
const POWER_ITER_MAX: usize = 500;
const POWER_ITER_SEED: u64 = 0x5eed_c1b1;
/// Margin applied to the power-iteration estimate, which approaches λ_max
/// from below.
const LIPSCHITZ_MARGIN: f64 = 1.01;
/// Support polishing is attempted once the projected-gradient residual is
/// below this, even without convergence.
const POLISH_ENTRY: f64 = 1e-4;
const POLISH_ROUNDS: usize = 4;
const POLISH_RANK_TOL: f64 = 1e-13;
/// Relative objective increase tolerated when accepting a polished point.
const POLISH_SLACK: f64 = 1e-12;
/// Frank-Wolfe converges sublinearly on flat faces, so it gets a larger
/// default budget and checks its residual every few steps.
const FW_ITER_FACTOR: usize = 20;
const FW_CHECK_EVERY: usize = 8;

/// Indices whose variables must stay nonnegative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSet(Vec<bool>);

impl SignSet {
    pub fn full(n: usize) -> Self {
        SignSet(vec![true; n])
    }

    pub fn empty(n: usize) -> Self {
        SignSet(vec![false; n])
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        SignSet(mask)
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; n];
        for i in indices {
            mask[i] = true;
        }
        SignSet(mask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn mask(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub u: DMatrix<f64>,
    pub sign_set: SignSet,
}

impl QpProblem {
    pub fn new(u: DMatrix<f64>, sign_set: SignSet) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::InvalidConfig(format!("U is {}x{}", u.nrows(), u.ncols())));
        }
        if sign_set.len() != u.nrows() {
            return Err(Error::InvalidConfig(format!(
                "sign set has {} entries for a {}-dimensional problem",
                sign_set.len(),
                u.nrows()
            )));
        }
        Ok(QpProblem { u, sign_set })
    }

    pub fn simplex(u: DMatrix<f64>) -> Self {
        let n = u.nrows();
        QpProblem { u, sign_set: SignSet::full(n) }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.u * x))
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x.sum() - 1.0).abs() <= tol && self.sign_set.indices().all(|i| x[i] >= -tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `‖x − Π(x − ∇f(x)/L)‖` at exit.
    pub pg_residual: f64,
    /// Objective after every iteration, when requested.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Fixed step `1/L` with `L` from power iteration on `2U`.
    Lipschitz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    /// Defaults to `50·n + 5000`.
    pub max_iter: Option<usize>,
    pub step: StepPolicy,
    pub accelerate: bool,
    /// Refine the projected-gradient point with a Newton step on its support.
    pub polish: bool,
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: None,
            step: StepPolicy::Lipschitz,
            accelerate: true,
            polish: true,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn iteration_limit(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(50 * n + 5000)
    }
}

/// Euclidean projection onto `{x : 1ᵀx = 1, x_m ≥ 0 for m in sign_set}`.
///
/// The projection is `x_m = max(v_m − θ, 0)` on the sign set and `v_m − θ`
/// elsewhere, with θ the root of `Σ x_m(θ) = 1`. θ is bracketed by
/// bisection and then recomputed exactly from the identified support.
pub fn project_partial_simplex(v: &DVector<f64>, sign_set: &SignSet) -> DVector<f64> {
    let n = v.len();
    assert_eq!(n, sign_set.len(), "sign set dimension");
    assert!(n > 0, "empty projection");
    let mask = sign_set.mask();
    let mass = |theta: f64| -> f64 {
        v.iter().zip(mask).map(|(&vi, &signed)| if signed { (vi - theta).max(0.0) } else { vi - theta }).sum()
    };

    let vmin = v.min();
    let vmax = v.max();
    // mass(lo) >= 1 since every term is at least 1/n; mass(vmax) <= 0 < 1
    // unless the set is all-signed, where it is exactly 0.
    let mut lo = vmin - 1.0 / n as f64;
    let mut hi = vmax;
    let scale = 1.0 + vmax.abs().max(vmin.abs());
    while hi - lo > BISECTION_TOL * scale {
        let mid = 0.5 * (lo + hi);
        if mass(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);

    // Exact shift on the support picked out by the bracket.
    let support = |i: usize| !mask[i] || v[i] > theta;
    let (count, total) = (0..n).filter(|&i| support(i)).fold((0usize, 0.0), |(c, s), i| (c + 1, s + v[i]));
    let exact = if count > 0 { (total - 1.0) / count as f64 } else { theta };
    let consistent =
        count > 0 && (0..n).all(|i| !mask[i] || (v[i] > exact) == support(i) || (v[i] - exact).abs() <= 1e-12 * scale);
    let theta = if consistent { exact } else { theta };

    DVector::from_iterator(
        n,
        v.iter().zip(mask).map(|(&vi, &signed)| if signed { (vi - theta).max(0.0) } else { vi - theta }),
    )
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from a
/// fixed pseudo-random start.
pub fn largest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITER_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let av = a * &v;
        let next = v.dot(&av);
        let norm = av.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = av / norm;
        if (next - lambda).abs() <= POWER_ITER_TOL * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn pg_residual(x: &DVector<f64>, grad: &DVector<f64>, lipschitz: f64, sign_set: &SignSet) -> f64 {
    let step = x - grad / lipschitz;
    (x - project_partial_simplex(&step, sign_set)).norm()
}

fn uniform_start(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / n as f64)
}

pub fn solve_pg(problem: &QpProblem, config: &SolverConfig) -> Result<QpSolution> {
    solve_pg_from(problem, config, uniform_start(problem.dim()))
}

/// Projected gradient from a given start (projected onto the feasible set
/// first). With acceleration on, FISTA momentum is used and reset whenever
/// the objective would increase, so accepted iterates never raise the
/// objective. When the plain step stops descending the iteration has hit
/// rounding and stops early. The result is then polished on its support
/// when `config.polish` is set.
pub fn solve_pg_from(problem: &QpProblem, config: &SolverConfig, start: DVector<f64>) -> Result<QpSolution> {
    config.validate()?;
    let n = problem.dim();
    let u = &problem.u;
    let sign = &problem.sign_set;
    let limit = config.iteration_limit(n);

    let mut x = project_partial_simplex(&start, sign);
    let mut ux = u * &x;
    let mut fx = x.dot(&ux);
    let mut history = Vec::new();

    let lipschitz = 2.0 * largest_eigenvalue(u) * LIPSCHITZ_MARGIN;
    if lipschitz <= f64::MIN_POSITIVE {
        return Ok(QpSolution { x, objective: fx, iterations: 0, pg_residual: 0.0, history });
    }
    let step = 2.0 / lipschitz;

    let mut y = x.clone();
    let mut uy = ux.clone();
    let mut momentum = 1.0_f64;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < limit {
        iterations += 1;
        let mut z = project_partial_simplex(&(&y - &uy * step), sign);
        let mut uz = u * &z;
        let mut fz = z.dot(&uz);
        let mut step_residual = (&z - &y).norm();

        if fz > fx {
            momentum = 1.0;
            z = project_partial_simplex(&(&x - &ux * step), sign);
            uz = u * &z;
            fz = z.dot(&uz);
            if fz > fx {
                // A 1/L step cannot ascend in exact arithmetic.
                break;
            }
            step_residual = (&z - &x).norm();
        }

        if config.record_history {
            history.push(fz);
        }

        if step_residual <= config.tol && pg_residual(&z, &(&uz * 2.0), lipschitz, sign) <= config.tol {
            x = z;
            ux = uz;
            fx = fz;
            converged = true;
            break;
        }

        if config.accelerate {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            y = &z + (&z - &x) * beta;
            uy = &uz + (&uz - &ux) * beta;
            momentum = next;
        } else {
            y = z.clone();
            uy = uz.clone();
        }
        x = z;
        ux = uz;
        fx = fz;
    }

    let mut residual = pg_residual(&x, &(&ux * 2.0), lipschitz, sign);
    if config.polish && (converged || residual <= POLISH_ENTRY) {
        if let Some((px, pux)) = polish(u, sign, &x, &ux) {
            let pf = px.dot(&pux);
            let pres = pg_residual(&px, &(&pux * 2.0), lipschitz, sign);
            if pf <= fx + POLISH_SLACK * fx.abs() && pres <= residual.max(config.tol) {
                x = px;
                fx = pf;
                residual = pres;
            }
        }
    }

    let best = QpSolution { x, objective: fx, iterations, pg_residual: residual, history };
    if residual <= config.tol {
        Ok(best)
    } else {
        Err(Error::MaxIterExceeded { best: Box::new(best) })
    }
}

/// Newton step on the support of `x`: solves
/// `min zᵀUz` s.t. `1ᵀz = 1`, `z_i = 0` off the support, through its KKT
/// system. Sign-constrained entries that turn negative leave the support and
/// the system is solved again. Returns `None` if no consistent support is
/// found within a few rounds.
fn polish(
    u: &DMatrix<f64>,
    sign: &SignSet,
    x: &DVector<f64>,
    ux: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = x.len();
    let mut support: Vec<usize> = (0..n).filter(|&i| !sign.contains(i) || x[i] > 0.0).collect();
    for _ in 0..POLISH_ROUNDS {
        let m = support.len();
        if m == 0 {
            return None;
        }
        // [2U_SS 1; 1ᵀ 0] [Δ; −λ] = [−2(Ux)_S; 1 − 1ᵀx_S]
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        let mut mass = 0.0;
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = 2.0 * u[(i, j)];
            }
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            mass += x[i];
        }
        // Off-support entries drop to zero, so (Ux)_S loses their share.
        let mut ux_s = DVector::from_iterator(m, support.iter().map(|&i| ux[i]));
        for j in (0..n).filter(|j| !support.contains(j) && x[*j] != 0.0) {
            for (a, &i) in support.iter().enumerate() {
                ux_s[a] -= u[(i, j)] * x[j];
            }
        }
        for a in 0..m {
            rhs[a] = -2.0 * ux_s[a];
        }
        rhs[m] = 1.0 - mass;
        let sol = symmetric_pinv_solve(kkt, &rhs);

        let mut z = DVector::zeros(n);
        let mut dropped = Vec::new();
        for (a, &i) in support.iter().enumerate() {
            z[i] = x[i] + sol[a];
            if sign.contains(i) && z[i] < 0.0 {
                dropped.push(i);
            }
        }
        if dropped.is_empty() {
            let uz = u * &z;
            return Some((z, uz));
        }
        support.retain(|i| !dropped.contains(i));
    }
    None
}

/// Minimum-norm least-squares solution of a symmetric system, discarding
/// eigenvalues below `POLISH_RANK_TOL` of the largest.
fn symmetric_pinv_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m);
    let cutoff = POLISH_RANK_TOL * eig.eigenvalues.amax();
    let mut coords = eig.eigenvectors.tr_mul(rhs);
    for (c, &l) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
        *c = if l.abs() > cutoff { *c / l } else { 0.0 };
    }
    &eig.eigenvectors * coords
}

/// Pairwise Frank-Wolfe with exact line search over the full simplex.
pub fn solve_fw(problem: &QpProblem, config: &SolverConfig) -> Result<QpSolution> {
    config.validate()?;
    if !problem.sign_set.is_full() {
        return Err(Error::NotSimplex);
    }
    let n = problem.dim();
    let u = &problem.u;
    let sign = &problem.sign_set;
    let limit = config.max_iter.unwrap_or(FW_ITER_FACTOR * config.iteration_limit(n));
    let lipschitz = 2.0 * largest_eigenvalue(u) * LIPSCHITZ_MARGIN;

    let mut x = uniform_start(n);
    let mut ux = u * &x;
    let mut history = Vec::new();
    if lipschitz <= f64::MIN_POSITIVE {
        let objective = x.dot(&ux);
        return Ok(QpSolution { x, objective, iterations: 0, pg_residual: 0.0, history });
    }

    let mut residual = pg_residual(&x, &(&ux * 2.0), lipschitz, sign);
    let mut iterations = 0;
    while residual > config.tol && iterations < limit {
        iterations += 1;
        if iterations % 512 == 0 {
            ux = u * &x;
        }
        // Pairwise step: move mass from the worst support vertex to the best vertex.
        let grad = &ux * 2.0;
        let toward = grad.imin();
        let away = (0..n)
            .filter(|&i| x[i] > 0.0)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]))
            .expect("simplex iterate has support");
        if toward == away {
            break;
        }
        let slope = grad[toward] - grad[away];
        if slope >= 0.0 {
            break;
        }
        let curvature = u[(toward, toward)] - 2.0 * u[(toward, away)] + u[(away, away)];
        let max_step = x[away];
        let gamma = if curvature > 0.0 { (-slope / (2.0 * curvature)).min(max_step) } else { max_step };
        x[toward] += gamma;
        x[away] = if gamma == max_step { 0.0 } else { (x[away] - gamma).max(0.0) };
        ux += (u.column(toward) - u.column(away)) * gamma;
        if config.record_history {
            history.push(x.dot(&ux));
        }
        if iterations % FW_CHECK_EVERY == 0 {
            residual = pg_residual(&x, &(&ux * 2.0), lipschitz, sign);
        }
    }

    ux = u * &x;
    let objective = x.dot(&ux);
    residual = pg_residual(&x, &(&ux * 2.0), lipschitz, sign);
    let sol = QpSolution { x, objective, iterations, pg_residual: residual, history };
    if residual <= config.tol {
        Ok(sol)
    } else {
        Err(Error::MaxIterExceeded { best: Box::new(sol) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn projection_two_point() {
        // θ = 0.1 found by a fine grid over the 1-simplex.
        let v = vec(&[0.5, 0.7]);
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let a = i as f64 / 100_000.0;
            let d = (a - 0.5).powi(2) + (1.0 - a - 0.7).powi(2);
            if d < best.0 {
                best = (d, a);
            }
        }
        assert!((best.1 - 0.4).abs() < 1e-5);
        let x = project_partial_simplex(&v, &SignSet::full(2));
        assert!((x - vec(&[0.4, 0.6])).norm() < 1e-12);
    }

    #[test]
    fn projection_free_is_mean_shift() {
        let v = vec(&[0.3, -1.2, 2.5, 0.0]);
        let shift = (v.sum() - 1.0) / 4.0;
        let x = project_partial_simplex(&v, &SignSet::empty(4));
        assert!((x - v.add_scalar(-shift)).norm() < 1e-12);
    }

    #[test]
    fn projection_idempotent() {
        let v = vec(&[0.2, 0.3, 0.5]);
        let x = project_partial_simplex(&v, &SignSet::full(3));
        assert!((x - &v).norm() < 1e-14);
        let sign = SignSet::from_indices(3, [0]);
        let w = vec(&[0.0, -0.5, 1.5]);
        assert!((project_partial_simplex(&w, &sign) - &w).norm() < 1e-14);
    }

    #[test]
    fn projection_singleton() {
        let x = project_partial_simplex(&vec(&[-3.0]), &SignSet::full(1));
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn pg_symmetric_instance() {
        let p = QpProblem::simplex(DMatrix::identity(2, 2) * 2.0);
        let sol = solve_pg(&p, &SolverConfig::default()).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pg_diagonal_instance() {
        // a x² + b (1 − x)² is minimized at x = b / (a + b).
        let p = QpProblem::simplex(DMatrix::from_diagonal(&vec(&[1.0, 100.0])));
        let sol = solve_pg(&p, &SolverConfig::default()).unwrap();
        assert!((sol.x[0] - 100.0 / 101.0).abs() < 1e-8);
        assert!((sol.x[1] - 1.0 / 101.0).abs() < 1e-8);
    }

    #[test]
    fn pg_zero_matrix_keeps_start() {
        let p = QpProblem::simplex(DMatrix::zeros(3, 3));
        let start = vec(&[0.2, 0.5, 0.3]);
        let sol = solve_pg_from(&p, &SolverConfig::default(), start.clone()).unwrap();
        assert!((sol.x - start).norm() < 1e-15);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn fw_instances() {
        let cfg = SolverConfig::default();
        let sol = solve_fw(&QpProblem::simplex(DMatrix::identity(2, 2) * 2.0), &cfg).unwrap();
        assert!((sol.x - vec(&[0.5, 0.5])).norm() < 1e-8);
        let sol = solve_fw(&QpProblem::simplex(DMatrix::from_element(1, 1, 3.0)), &cfg).unwrap();
        assert_eq!(sol.x[0], 1.0);
    }

    #[test]
    fn fw_rejects_partial_sign_set() {
        let p = QpProblem::new(DMatrix::identity(2, 2), SignSet::from_indices(2, [0])).unwrap();
        assert!(matches!(solve_fw(&p, &SolverConfig::default()), Err(Error::NotSimplex)));
    }

    #[test]
    fn max_iter_carries_best_iterate() {
        let p = QpProblem::simplex(DMatrix::from_diagonal(&vec(&[1.0, 1e4, 3.0])));
        let cfg =
            SolverConfig { max_iter: Some(1), accelerate: false, polish: false, tol: 1e-14, ..Default::default() };
        match solve_pg(&p, &cfg) {
            Err(Error::MaxIterExceeded { best }) => {
                assert_eq!(best.iterations, 1);
                assert!(p.is_feasible(&best.x, 1e-12));
            }
            other => panic!("expected MaxIterExceeded, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = QpProblem::simplex(DMatrix::identity(2, 2));
        let cfg = SolverConfig { tol: 0.0, ..Default::default() };
        assert!(matches!(solve_pg(&p, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn power_iteration_diagonal() {
        let a = DMatrix::from_diagonal(&vec(&[1.0, 7.0, 3.0]));
        assert!((largest_eigenvalue(&a) - 7.0).abs() < 1e-4);
    }
}
