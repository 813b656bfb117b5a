use ciblp::precoders::PrecoderKind;
use ciblp::sim::{channel_rng, gen_channel, gen_noise, gen_symbols, run_ser_sweep, wilson_interval, SimConfig};
use ciblp::Modulation;

#[test]
fn channel_entries_are_circular_unit_gaussian() {
    let mut rng = channel_rng(123, 0);
    let h = gen_channel(50, 400, &mut rng);
    let n = h.len() as f64;
    let mean = h.iter().sum::<num_complex::Complex64>() / n;
    let power = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    let re2 = h.iter().map(|z| z.re * z.re).sum::<f64>() / n;
    let cross = h.iter().map(|z| z.re * z.im).sum::<f64>() / n;
    let pseudo = h.iter().map(|z| z * z).sum::<num_complex::Complex64>() / n;
    // 20 000 samples: standard errors near 0.007 for the means.
    assert!(mean.norm() < 0.03, "{mean}");
    assert!((power - 1.0).abs() < 0.04, "{power}");
    assert!((re2 - 0.5).abs() < 0.03, "{re2}");
    assert!(cross.abs() < 0.02, "{cross}");
    assert!(pseudo.norm() < 0.04, "{pseudo}");
}

#[test]
fn noise_is_unit_variance() {
    let mut rng = channel_rng(5, 3);
    let z = gen_noise(100, 200, &mut rng);
    let power = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / z.len() as f64;
    assert!((power - 1.0).abs() < 0.04, "{power}");
}

#[test]
fn symbols_are_uniform() {
    let m = Modulation::PSK8;
    let mut rng = channel_rng(8, 1);
    let s = gen_symbols(m, 40, 1000, &mut rng);
    let mut counts = [0usize; 8];
    for &i in s.iter() {
        counts[i] += 1;
    }
    // 5000 expected per point, standard deviation about 66.
    for c in counts {
        assert!((c as f64 - 5000.0).abs() < 350.0, "{counts:?}");
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a = gen_channel(2, 2, &mut channel_rng(1, 0));
    let b = gen_channel(2, 2, &mut channel_rng(1, 0));
    let c = gen_channel(2, 2, &mut channel_rng(1, 1));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

/// With overwhelming noise the detector output no longer depends on the
/// symbol sent, so the probability of a correct decision is exactly `1/M`.
#[test]
fn ser_saturates_at_chance() {
    for m in [Modulation::QPSK, Modulation::PSK8, Modulation::QAM16] {
        let mut cfg = SimConfig::new(2, 2, 4, m);
        cfg.snr_db = vec![-80.0];
        cfg.n_channels = 1000;
        cfg.schemes = vec![PrecoderKind::Zf, PrecoderKind::CiBlp];
        cfg.seed = 77;
        let curve = run_ser_sweep(&cfg).unwrap();
        let chance = 1.0 - 1.0 / m.order() as f64;
        for p in &curve.points {
            let se = (chance * (1.0 - chance) / p.count.symbols as f64).sqrt();
            assert!((p.count.ser() - chance).abs() < 4.0 * se, "{m} {}: {} vs {chance}", p.scheme, p.count.ser());
        }
    }
}

#[test]
fn noiseless_precoders_are_error_free() {
    for m in [Modulation::QPSK, Modulation::PSK8, Modulation::QAM16] {
        let mut cfg = SimConfig::new(3, 4, 5, m);
        cfg.snr_db = vec![f64::INFINITY];
        cfg.n_channels = 30;
        cfg.schemes = vec![PrecoderKind::CiBlp, PrecoderKind::CiSlp, PrecoderKind::Zf];
        let curve = run_ser_sweep(&cfg).unwrap();
        for p in &curve.points {
            assert_eq!(p.count.errors, 0, "{m} {}", p.scheme);
        }
    }
}

#[test]
fn schemes_see_the_same_symbols_and_noise() {
    let mut cfg = SimConfig::new(3, 3, 4, Modulation::QPSK);
    cfg.snr_db = vec![5.0, 15.0];
    cfg.n_channels = 20;
    cfg.schemes = vec![PrecoderKind::CiBlp, PrecoderKind::CiSlp, PrecoderKind::Zf, PrecoderKind::Rzf(1.0)];
    let curve = run_ser_sweep(&cfg).unwrap();
    assert!(curve.check_digests());
    assert_eq!(curve.digests.len(), 4);
    let symbols: Vec<u64> = curve.points.iter().map(|p| p.count.symbols).collect();
    assert!(symbols.iter().all(|&s| s == 3 * 4 * 20), "{symbols:?}");
}

/// CI-BLP is never worse than ZF on a sample path: the ZF precoder is
/// feasible for the CI-BLP problem, and the region every CI-BLP symbol lands
/// in contains the one ZF's lands in.
#[test]
fn ci_blp_dominates_zf_pathwise() {
    for m in [Modulation::QPSK, Modulation::QAM16] {
        let mut cfg = SimConfig::new(3, 3, 4, m);
        cfg.snr_db = vec![10.0];
        cfg.n_channels = 200;
        cfg.schemes = vec![PrecoderKind::CiBlp, PrecoderKind::Zf];
        let curve = run_ser_sweep(&cfg).unwrap();
        let blp = curve.point("ci-blp", 10.0).unwrap().count.errors;
        let zf = curve.point("zf", 10.0).unwrap().count.errors;
        assert!(blp <= zf, "{m}: {blp} > {zf}");
    }
}

#[test]
fn wilson_interval_matches_closed_form() {
    // 10 errors in 100 trials at z = 1.96.
    let z: f64 = 1.96;
    let (n, p) = (100.0_f64, 0.1_f64);
    let center = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let half = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    let (lo, hi) = wilson_interval(10, 100, z);
    assert!((lo - (center - half)).abs() < 1e-15 && (hi - (center + half)).abs() < 1e-15);
    assert!((lo - 0.0552285416).abs() < 1e-9, "{lo}");
    assert!((hi - 0.1743673044).abs() < 1e-9, "{hi}");
    assert_eq!(wilson_interval(0, 50, z).0, 0.0);
    assert_eq!(wilson_interval(50, 50, z).1, 1.0);
}
