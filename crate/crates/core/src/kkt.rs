//! Optimality certificate for a recovered precoder.
//!
//! The primal problem maximizes `t` subject to `α_k^n ≥ t` on CI-eligible
//! indices, `α_k^n = t` on locked QAM indices, and the block power budget.
//! At an optimum the dual vector and `μ` satisfy stationarity
//! `2μ·Ŵ·D = Σ_n [A^nᵀ δ^n s_E^nᵀ + B^nᵀ δ^n c_E^nᵀ]`, sign feasibility,
//! complementary slackness and an active power constraint. The report
//! measures how far a [`PrecodeResult`] is from each of these.

use crate::assembly::{dual_image, BlockGeometry, BlockProblem, PrecodeResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `‖2μŴD − X(δ)‖_F` relative to the larger of the two terms.
    pub stationarity: f64,
    /// Largest negative sign-set entry of `δ_E`, or `|1ᵀδ_E − 1|`.
    pub dual_feasibility: f64,
    /// Constraint violation relative to `t` (coefficients) and `N·p0` (power).
    pub primal_feasibility: f64,
    /// `max |δ_m (t − α_m)| / t` over the sign set.
    pub complementary_slackness: f64,
    /// `|μ (Σ‖W s^n‖² − N p0)|`.
    pub power_slackness: f64,
    /// `|Σ‖W s^n‖² − N p0| / (N p0)`.
    pub power_activeness: f64,
    /// Relative gap between `t*` and the dual value `2μ N p0`.
    pub duality_gap: f64,
}

/// Acceptance thresholds for a [`KktReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktThresholds {
    pub stationarity: f64,
    pub dual_feasibility: f64,
    pub primal_feasibility: f64,
    pub complementary_slackness: f64,
    pub power_activeness: f64,
}

impl Default for KktThresholds {
    fn default() -> Self {
        KktThresholds {
            stationarity: 1e-6,
            dual_feasibility: 1e-8,
            primal_feasibility: 1e-8,
            complementary_slackness: 1e-6,
            power_activeness: 1e-6,
        }
    }
}

impl KktReport {
    pub fn passes(&self, th: &KktThresholds) -> bool {
        self.failures(th).is_empty()
    }

    /// Names of the checks that exceed their threshold.
    pub fn failures(&self, th: &KktThresholds) -> Vec<&'static str> {
        let checks = [
            ("stationarity", self.stationarity, th.stationarity),
            ("dual_feasibility", self.dual_feasibility, th.dual_feasibility),
            ("primal_feasibility", self.primal_feasibility, th.primal_feasibility),
            ("complementary_slackness", self.complementary_slackness, th.complementary_slackness),
            ("power_activeness", self.power_activeness, th.power_activeness),
        ];
        checks.into_iter().filter(|(_, value, limit)| !(value <= limit)).map(|(name, _, _)| name).collect()
    }
}

pub fn kkt_certificate(block: &BlockProblem, geometry: &BlockGeometry, result: &PrecodeResult) -> KktReport {
    let delta = &result.delta_e;
    let mu = result.mu;
    let t = result.t_star;
    let budget = block.slots() as f64 * block.p0;
    let sign_set = geometry.sign_set();

    let image = dual_image(geometry, delta);
    let grad_power = &result.w_hat * &geometry.gram.d * (2.0 * mu);
    let scale = image.norm().max(grad_power.norm()).max(f64::MIN_POSITIVE);
    let stationarity = (&grad_power - &image).norm() / scale;

    let sign_violation = sign_set.indices().map(|m| (-delta[m]).max(0.0)).fold(0.0, f64::max);
    let dual_feasibility = sign_violation.max((delta.sum() - 1.0).abs());

    let power = block.block_power(&result.w);
    let t_scale = t.abs().max(f64::MIN_POSITIVE);
    let two_k = geometry.gram.d.nrows();
    let mut coeff_violation: f64 = 0.0;
    let mut slackness: f64 = 0.0;
    for (n, slot) in geometry.slots.iter().enumerate() {
        let alpha = slot.scaling(&result.w_hat);
        for k in 0..two_k {
            let idx = n * two_k + k;
            let gap = t - alpha[k];
            if slot.eligible[k] {
                coeff_violation = coeff_violation.max(gap.max(0.0) / t_scale);
            } else {
                coeff_violation = coeff_violation.max(gap.abs() / t_scale);
            }
            if sign_set.contains(idx) {
                slackness = slackness.max((delta[idx] * gap).abs() / t_scale);
            }
        }
    }
    let power_violation = ((power - budget) / budget).max(0.0);

    KktReport {
        stationarity,
        dual_feasibility,
        primal_feasibility: coeff_violation.max(power_violation),
        complementary_slackness: slackness,
        power_slackness: (mu * (power - budget)).abs(),
        power_activeness: (power - budget).abs() / budget,
        duality_gap: (t - 2.0 * mu * budget).abs() / t_scale,
    }
}
