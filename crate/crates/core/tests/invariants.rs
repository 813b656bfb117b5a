//! Structural invariants of CI-BLP, each checked against an oracle built
//! here from the received signal or from brute force.

mod common;

use ciblp::assembly::{build_f_g, build_geometry, build_u, BlockProblem, GramPolicy};
use ciblp::geometry::w_hat_from_complex;
use ciblp::kkt::{kkt_certificate, KktThresholds};
use ciblp::precoders::{ci_blp, CiOptions};
use ciblp::qp::{project_partial_simplex, solve_pg, QpProblem, SignSet, SolverConfig};
use ciblp::sim::{gen_channel, gen_symbols};
use ciblp::Modulation;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{alpha_oracle, power_dual, projection_oracle};

const MODULATIONS: [Modulation; 4] = [Modulation::QPSK, Modulation::PSK8, Modulation::QAM16, Modulation::QAM64];

fn block(seed: u64, k: usize, n_t: usize, n: usize, modulation: Modulation, p0: f64) -> BlockProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = gen_channel(k, n_t, &mut rng);
    let s = gen_symbols(modulation, k, n, &mut rng).map(|i| modulation.point(i));
    BlockProblem::new(h, s, p0, modulation).unwrap()
}

/// Random block with `K ≤ N_T` and `N ≥ K`, so the Gram matrix is regular.
fn arb_block() -> impl Strategy<Value = BlockProblem> {
    (any::<u64>(), 1usize..=3, 0usize..=2, 0usize..=4, 0usize..4)
        .prop_map(|(seed, k, extra_t, extra_n, m)| block(seed, k, k + extra_t, k + extra_n, MODULATIONS[m], 1.0))
}

fn random_precoder(seed: u64, n_t: usize, k: usize) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n_t, k, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn scaling_coefficients_match_received_signal(b in arb_block(), wseed in any::<u64>()) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let k = b.users();
        let w = random_precoder(wseed, b.antennas(), k);
        let w_hat = w_hat_from_complex(&w);
        let rx = &b.h * &w * &b.s;
        for (n, slot) in geometry.slots.iter().enumerate() {
            let alpha = slot.scaling(&w_hat);
            for user in 0..k {
                let (aa, ab) = alpha_oracle(rx[(user, n)], b.s[(user, n)], b.modulation);
                prop_assert!((alpha[user] - aa).abs() < 1e-9 * (1.0 + aa.abs()));
                prop_assert!((alpha[k + user] - ab).abs() < 1e-9 * (1.0 + ab.abs()));
            }
        }
    }

    #[test]
    fn dual_matrix_is_the_power_dual(b in arb_block(), dseed in any::<u64>()) {
        // Collinear symbol vectors can still leave D singular.
        let geometry = build_geometry(&b, GramPolicy::Strict);
        prop_assume!(geometry.is_ok());
        let geometry = geometry.unwrap();
        let dual = build_u(&geometry, b.p0);
        let mut rng = ChaCha8Rng::seed_from_u64(dseed);
        let delta = DVector::from_fn(geometry.dual_dim(), |_, _| rng.random_range(-1.0..1.0));

        let expected = power_dual(&b, &delta);
        let got = delta.dot(&(dual.u() * &delta));
        prop_assert!((got - expected).abs() <= 1e-8 * expected.abs().max(1.0), "{got} vs {expected}");
    }

    #[test]
    fn f_plus_g_is_u(b in arb_block()) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let u = build_u(&geometry, b.p0).problem.u;
        let (f, g) = build_f_g(&geometry);
        prop_assert!((f + g - &u).norm() <= 1e-10 * u.norm().max(1.0));
    }

    #[test]
    fn solutions_certify(b in arb_block()) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let res = ci_blp(&b, &CiOptions::default()).unwrap();
        let report = kkt_certificate(&b, &geometry, &res);
        prop_assert!(report.passes(&KktThresholds::default()), "{report:?}");
        prop_assert!(report.duality_gap < 1e-6, "{report:?}");
        let budget = b.slots() as f64 * b.p0;
        prop_assert!((res.block_power - budget).abs() <= 1e-9 * budget);
    }

    #[test]
    fn perturbed_dual_breaks_stationarity(b in arb_block(), pseed in any::<u64>()) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let mut res = ci_blp(&b, &CiOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        // Move mass between the two components of one user in one slot.
        // X(δ) then changes by a nonzero multiple of that user's two M rows,
        // so the fixed precoder can no longer be stationary.
        let k = b.users();
        let slot = rng.random_range(0..b.slots());
        let user = rng.random_range(0..k);
        let (i, j) = (slot * 2 * k + user, slot * 2 * k + k + user);
        let step = 0.05 + 0.2 * res.delta_e[i].abs();
        res.delta_e[i] -= step;
        res.delta_e[j] += step;
        let report = kkt_certificate(&b, &geometry, &res);
        prop_assert!(report.stationarity > 1e-4, "{report:?}");
    }

    #[test]
    fn power_budget_scales_precoder(b in arb_block()) {
        let doubled = BlockProblem::new(b.h.clone(), b.s.clone(), 2.0 * b.p0, b.modulation).unwrap();
        let base = ci_blp(&b, &CiOptions::default()).unwrap();
        let more = ci_blp(&doubled, &CiOptions::default()).unwrap();
        let r2 = 2f64.sqrt();
        prop_assert!((&more.w - &base.w * Complex64::new(r2, 0.0)).norm() <= 1e-6 * base.w.norm());
        prop_assert!((more.t_star - r2 * base.t_star).abs() <= 1e-7 * base.t_star);
        prop_assert!((&more.delta_e - &base.delta_e).norm() <= 1e-6);
    }

    #[test]
    fn single_user_has_closed_form(seed in any::<u64>(), n_t in 1usize..=4, n in 1usize..=6, m in 0usize..4) {
        let b = block(seed, 1, n_t, n, MODULATIONS[m], 0.7);
        let res = ci_blp(&b, &CiOptions::default()).unwrap();
        let energy: f64 = b.s.iter().map(|s| s.norm_sqr()).sum();
        let expected = b.h.norm() * (n as f64 * b.p0 / energy).sqrt();
        prop_assert!((res.t_star - expected).abs() <= 1e-7 * expected, "{} vs {expected}", res.t_star);
    }

    #[test]
    fn projection_matches_enumeration(
        v in proptest::collection::vec(-2.0f64..2.0, 1..=8),
        mask in proptest::collection::vec(any::<bool>(), 8),
    ) {
        let v = DVector::from_vec(v);
        let sign = &mask[..v.len()];
        let fast = project_partial_simplex(&v, &SignSet::from_mask(sign.to_vec()));
        let slow = projection_oracle(&v, sign);
        prop_assert!((fast - slow).norm() < 1e-9);
    }

    #[test]
    fn dual_solution_is_scale_covariant(b in arb_block(), c in 0.01f64..100.0) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let dual = build_u(&geometry, b.p0);
        let scaled = QpProblem::new(dual.problem.u.clone() * c, dual.problem.sign_set.clone()).unwrap();
        let cfg = SolverConfig::default();
        let x = solve_pg(&dual.problem, &cfg).unwrap();
        let y = solve_pg(&scaled, &cfg).unwrap();
        prop_assert!((y.objective - c * x.objective).abs() <= 1e-7 * c * x.objective.abs());
    }

    #[test]
    fn projected_gradient_never_ascends(b in arb_block()) {
        let geometry = build_geometry(&b, GramPolicy::default()).unwrap();
        let dual = build_u(&geometry, b.p0);
        let cfg = SolverConfig { record_history: true, ..Default::default() };
        let sol = solve_pg(&dual.problem, &cfg).unwrap();
        for pair in sol.history.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-15, "{} > {}", pair[1], pair[0]);
        }
    }
}

#[test]
fn single_slot_block_equals_slot_problem() {
    let b = block(17, 3, 4, 1, Modulation::PSK8, 1.0);
    let symbols = b.slot_symbols(0);
    let blp = ci_blp(&b, &CiOptions::default()).unwrap();
    let slp = ciblp::precoders::ci_slp(&b.h, &symbols, 1.0, b.modulation, &CiOptions::default()).unwrap();
    assert!((&blp.w - &slp.w).norm() < 1e-12);
}
