//! Monte Carlo SER and solve-time experiments.
//!
//! Every channel draw owns a ChaCha8 stream derived from `(seed, channel)`,
//! so results do not depend on the number of worker threads. Within a block
//! all schemes see the same symbols and the same unit-variance noise, which
//! is scaled by `σ` for each SNR point.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::assembly::BlockProblem;
use crate::error::{Error, Result};
use crate::modulation::Modulation;
use crate::precoders::{ci_blp, prepare_ci, rzf, zf, CiOptions, PrecoderKind};

/// Largest tolerated fraction of blocks a scheme may fail to precode.
pub const MAX_FAILURE_RATE: f64 = 0.01;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Combined standard errors an SER increase must exceed to count as a
/// monotonicity violation.
pub const MONOTONE_SIGMAS: f64 = 3.0;

/// Loading parameter used for RZF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RzfRho {
    /// `ρ = p0/σ²` at each SNR point.
    OperatingSnr,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub k: usize,
    pub n_t: usize,
    pub n_block: usize,
    pub modulation: Modulation,
    /// SNR `p0/σ²` in dB. `+inf` means a noiseless channel.
    pub snr_db: Vec<f64>,
    pub n_channels: usize,
    pub n_blocks_per_channel: usize,
    /// The `ρ` inside `Rzf` is replaced according to `rzf_rho`.
    pub schemes: Vec<PrecoderKind>,
    pub seed: u64,
    pub p0: f64,
    pub rzf_rho: RzfRho,
    pub ci: CiOptions,
    /// Record precoder wall time. Off by default because timings break
    /// byte-identical reruns.
    pub record_solve_time: bool,
}

impl SimConfig {
    pub fn new(k: usize, n_t: usize, n_block: usize, modulation: Modulation) -> Self {
        SimConfig {
            k,
            n_t,
            n_block,
            modulation,
            snr_db: vec![10.0],
            n_channels: 10,
            n_blocks_per_channel: 1,
            schemes: vec![PrecoderKind::CiBlp, PrecoderKind::Zf],
            seed: 0,
            p0: 1.0,
            rzf_rho: RzfRho::OperatingSnr,
            ci: CiOptions::default(),
            record_solve_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::InvalidConfig(format!("`{key}`: {msg}")));
        if self.k == 0 {
            return bad("k", "must be at least 1".into());
        }
        if self.n_t < self.k {
            return bad("n_t", format!("must be at least k = {}", self.k));
        }
        if self.n_block == 0 {
            return bad("n_block", "must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("snr_db", "grid is empty".into());
        }
        if let Some(s) = self.snr_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return bad("snr_db", format!("invalid SNR {s}"));
        }
        if self.n_channels == 0 {
            return bad("n_channels", "must be at least 1".into());
        }
        if self.n_blocks_per_channel == 0 {
            return bad("n_blocks_per_channel", "must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes", "list is empty".into());
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return bad("p0", format!("must be positive, got {}", self.p0));
        }
        if let RzfRho::Fixed(rho) = self.rzf_rho {
            if !(rho > 0.0) {
                return bad("rzf_rho", format!("must be positive, got {rho}"));
            }
        }
        self.ci.solver.validate()
    }

    /// Noise variance at an SNR point.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.p0 / 10f64.powf(snr_db / 10.0)
    }

    fn resolve(&self, kind: PrecoderKind, snr_db: f64) -> PrecoderKind {
        match (kind, self.rzf_rho) {
            (PrecoderKind::Rzf(_), RzfRho::OperatingSnr) => PrecoderKind::Rzf(10f64.powf(snr_db / 10.0)),
            (PrecoderKind::Rzf(_), RzfRho::Fixed(rho)) => PrecoderKind::Rzf(rho),
            (other, _) => other,
        }
    }

    fn depends_on_snr(&self, kind: PrecoderKind) -> bool {
        matches!(kind, PrecoderKind::Rzf(_)) && self.rzf_rho == RzfRho::OperatingSnr
    }
}

/// Channel with i.i.d. `CN(0, 1)` entries.
pub fn gen_channel<R: Rng>(k: usize, n_t: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(k, n_t, |_, _| complex_normal(rng))
}

/// Uniform symbol indices, K × N.
pub fn gen_symbols<R: Rng>(modulation: Modulation, k: usize, n: usize, rng: &mut R) -> DMatrix<usize> {
    let order = modulation.order() as usize;
    DMatrix::from_fn(k, n, |_, _| rng.random_range(0..order))
}

/// `CN(0, 1)` noise, K × N.
pub fn gen_noise<R: Rng>(k: usize, n: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(k, n, |_, _| complex_normal(rng))
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// The stream for one channel draw.
pub fn channel_rng(seed: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel as u64);
    rng
}

/// The precoder a scheme applies to each slot of a block, with the real gain
/// a QAM receiver divides by.
#[derive(Debug, Clone)]
pub struct AppliedPrecoder {
    slots: Vec<(DMatrix<Complex64>, f64)>,
}

impl AppliedPrecoder {
    pub fn block(w: DMatrix<Complex64>, gain: f64) -> Self {
        AppliedPrecoder { slots: vec![(w, gain)] }
    }

    pub fn per_slot(slots: Vec<(DMatrix<Complex64>, f64)>) -> Self {
        AppliedPrecoder { slots }
    }

    pub fn slot(&self, n: usize) -> (&DMatrix<Complex64>, f64) {
        let (w, g) = if self.slots.len() == 1 { &self.slots[0] } else { &self.slots[n] };
        (w, *g)
    }
}

/// Builds the precoder `kind` applies to `block`.
pub fn apply_scheme(kind: PrecoderKind, block: &BlockProblem, ci: &CiOptions) -> Result<AppliedPrecoder> {
    match kind {
        PrecoderKind::CiBlp => {
            let r = ci_blp(block, ci)?;
            Ok(AppliedPrecoder::block(r.w, r.t_star))
        }
        PrecoderKind::CiSlp => {
            let slots = (0..block.slots())
                .map(|n| ci_blp(&block.slot_problem(n), ci).map(|r| (r.w, r.t_star)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AppliedPrecoder::per_slot(slots))
        }
        PrecoderKind::Zf => zf(block).map(|p| AppliedPrecoder::block(p.w, p.gain)),
        PrecoderKind::Rzf(rho) => rzf(block, rho).map(|p| AppliedPrecoder::block(p.w, p.gain)),
    }
}

/// Sends a block through `y = H W s + σ z` and detects every symbol.
/// QAM receivers divide by the precoder gain before slicing; PSK decides on
/// phase alone. Returns detected indices, K × N.
pub fn transmit_detect(
    block: &BlockProblem,
    precoder: &AppliedPrecoder,
    sigma: f64,
    unit_noise: &DMatrix<Complex64>,
) -> DMatrix<usize> {
    let (k, n) = block.s.shape();
    let mut detected = DMatrix::zeros(k, n);
    for slot in 0..n {
        let (w, gain) = precoder.slot(slot);
        let x = w * block.s.column(slot);
        let y = &block.h * x;
        for user in 0..k {
            let r = y[user] + unit_noise[(user, slot)] * sigma;
            let r = if block.modulation.is_qam() { r / gain } else { r };
            detected[(user, slot)] = block.modulation.detect(r);
        }
    }
    detected
}

/// Errors and total symbols at one (scheme, SNR) point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Count {
    pub errors: u64,
    pub symbols: u64,
}

impl Count {
    pub fn ser(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }

    /// 95% Wilson score interval.
    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.symbols, Z95)
    }

    pub fn std_error(&self) -> f64 {
        if self.symbols == 0 {
            return 0.0;
        }
        let p = self.ser();
        (p * (1.0 - p) / self.symbols as f64).sqrt()
    }
}

pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerPoint {
    pub scheme: String,
    pub snr_db: f64,
    pub count: Count,
    /// Mean precoder construction time per block in milliseconds, or 0 when
    /// timing is off.
    pub mean_solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeFailures {
    pub scheme: String,
    pub failures: usize,
    pub blocks: usize,
}

/// SER results for one block length, ordered by scheme then SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SerCurve {
    pub n_block: usize,
    pub points: Vec<SerPoint>,
    pub failures: Vec<SchemeFailures>,
    /// Digest of the symbols and noise offered to each scheme; all equal
    /// under common random numbers.
    pub digests: Vec<(String, u64)>,
}

impl SerCurve {
    pub fn point(&self, scheme: &str, snr_db: f64) -> Option<&SerPoint> {
        self.points.iter().find(|p| p.scheme == scheme && p.snr_db == snr_db)
    }

    /// Fails if some scheme's SER rises between SNR points by more than
    /// [`MONOTONE_SIGMAS`] combined standard errors.
    pub fn check_monotone(&self) -> Result<()> {
        let mut schemes: Vec<&str> = self.points.iter().map(|p| p.scheme.as_str()).collect();
        schemes.dedup();
        for scheme in schemes {
            let mut pts: Vec<&SerPoint> = self.points.iter().filter(|p| p.scheme == scheme).collect();
            pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
            for pair in pts.windows(2) {
                let (lo, hi) = (pair[0], pair[1]);
                let se = lo.count.std_error().hypot(hi.count.std_error());
                if hi.count.ser() > lo.count.ser() + MONOTONE_SIGMAS * se {
                    return Err(Error::NonMonotoneSer {
                        scheme: scheme.to_string(),
                        snr_lo: lo.snr_db,
                        snr_hi: hi.snr_db,
                        lo: lo.count.ser(),
                        hi: hi.count.ser(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn check_digests(&self) -> bool {
        self.digests.windows(2).all(|w| w[0].1 == w[1].1)
    }
}

#[derive(Debug, Clone)]
struct Tally {
    /// [scheme][snr]
    counts: Vec<Vec<Count>>,
    failures: Vec<usize>,
    solve_secs: Vec<f64>,
    solves: Vec<usize>,
    digests: Vec<u64>,
}

impl Tally {
    fn new(schemes: usize, snrs: usize) -> Self {
        Tally {
            counts: vec![vec![Count::default(); snrs]; schemes],
            failures: vec![0; schemes],
            solve_secs: vec![0.0; schemes],
            solves: vec![0; schemes],
            digests: vec![FNV_OFFSET; schemes],
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn digest_inputs(h: u64, symbols: &DMatrix<usize>, noise: &DMatrix<Complex64>) -> u64 {
    let h = symbols.iter().fold(h, |h, &s| fnv(h, &(s as u64).to_le_bytes()));
    noise.iter().fold(h, |h, z| fnv(fnv(h, &z.re.to_bits().to_le_bytes()), &z.im.to_bits().to_le_bytes()))
}

fn simulate_channel(cfg: &SimConfig, channel: usize) -> Result<Tally> {
    let mut rng = channel_rng(cfg.seed, channel);
    let h = gen_channel(cfg.k, cfg.n_t, &mut rng);
    let mut tally = Tally::new(cfg.schemes.len(), cfg.snr_db.len());
    let sigmas: Vec<f64> = cfg.snr_db.iter().map(|&s| cfg.noise_variance(s).sqrt()).collect();

    for _ in 0..cfg.n_blocks_per_channel {
        let idx = gen_symbols(cfg.modulation, cfg.k, cfg.n_block, &mut rng);
        let noise = gen_noise(cfg.k, cfg.n_block, &mut rng);
        let s = idx.map(|i| cfg.modulation.point(i));
        let block = BlockProblem::new(h.clone(), s, cfg.p0, cfg.modulation)?;

        for (si, &kind) in cfg.schemes.iter().enumerate() {
            tally.digests[si] = digest_inputs(tally.digests[si], &idx, &noise);
            match block_counts(
                cfg,
                kind,
                &block,
                &idx,
                &noise,
                &sigmas,
                &mut tally.solve_secs[si],
                &mut tally.solves[si],
            ) {
                Some(counts) => {
                    for (total, c) in tally.counts[si].iter_mut().zip(counts) {
                        total.errors += c.errors;
                        total.symbols += c.symbols;
                    }
                }
                // The whole block is dropped for this scheme so that every
                // SNR point covers the same blocks.
                None => tally.failures[si] += 1,
            }
        }
    }
    Ok(tally)
}

/// Per-SNR counts of one scheme on one block, or `None` if precoding failed.
#[allow(clippy::too_many_arguments)]
fn block_counts(
    cfg: &SimConfig,
    kind: PrecoderKind,
    block: &BlockProblem,
    idx: &DMatrix<usize>,
    noise: &DMatrix<Complex64>,
    sigmas: &[f64],
    solve_secs: &mut f64,
    solves: &mut usize,
) -> Option<Vec<Count>> {
    let mut precoder: Option<AppliedPrecoder> = None;
    let mut counts = Vec::with_capacity(sigmas.len());
    for (&snr, &sigma) in cfg.snr_db.iter().zip(sigmas) {
        if precoder.is_none() || cfg.depends_on_snr(kind) {
            let start = Instant::now();
            precoder = Some(apply_scheme(cfg.resolve(kind, snr), block, &cfg.ci).ok()?);
            if cfg.record_solve_time {
                *solve_secs += start.elapsed().as_secs_f64();
                *solves += 1;
            }
        }
        let detected = transmit_detect(block, precoder.as_ref()?, sigma, noise);
        let errors = detected.iter().zip(idx.iter()).filter(|(d, s)| d != s).count();
        counts.push(Count { errors: errors as u64, symbols: idx.len() as u64 });
    }
    Some(counts)
}

/// SER against SNR for every configured scheme.
pub fn run_ser_sweep(cfg: &SimConfig) -> Result<SerCurve> {
    cfg.validate()?;
    let tallies =
        (0..cfg.n_channels).into_par_iter().map(|c| simulate_channel(cfg, c)).collect::<Result<Vec<Tally>>>()?;

    let mut total = Tally::new(cfg.schemes.len(), cfg.snr_db.len());
    for t in &tallies {
        for si in 0..cfg.schemes.len() {
            for pi in 0..cfg.snr_db.len() {
                total.counts[si][pi].errors += t.counts[si][pi].errors;
                total.counts[si][pi].symbols += t.counts[si][pi].symbols;
            }
            total.failures[si] += t.failures[si];
            total.solve_secs[si] += t.solve_secs[si];
            total.solves[si] += t.solves[si];
            total.digests[si] = fnv(total.digests[si], &t.digests[si].to_le_bytes());
        }
    }

    let blocks = cfg.n_channels * cfg.n_blocks_per_channel;
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut digests = Vec::new();
    for (si, kind) in cfg.schemes.iter().enumerate() {
        let label = kind.label().to_string();
        let mean_solve_ms =
            if total.solves[si] > 0 { 1e3 * total.solve_secs[si] / total.solves[si] as f64 } else { 0.0 };
        for (pi, &snr) in cfg.snr_db.iter().enumerate() {
            points.push(SerPoint { scheme: label.clone(), snr_db: snr, count: total.counts[si][pi], mean_solve_ms });
        }
        failures.push(SchemeFailures { scheme: label.clone(), failures: total.failures[si], blocks });
        digests.push((label, total.digests[si]));
    }

    for f in &failures {
        if f.failures as f64 > MAX_FAILURE_RATE * blocks as f64 {
            return Err(Error::TooManyFailures { scheme: f.scheme.clone(), failures: f.failures, blocks });
        }
    }
    Ok(SerCurve { n_block: cfg.n_block, points, failures, digests })
}

/// SER for each block length in `n_blocks`, otherwise using `cfg` as is.
pub fn run_block_sweep(cfg: &SimConfig, n_blocks: &[usize]) -> Result<Vec<SerCurve>> {
    n_blocks.iter().map(|&n| run_ser_sweep(&SimConfig { n_block: n, ..cfg.clone() })).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub k: usize,
    pub n_t: usize,
    pub n_block: usize,
    /// `ci-blp`: one block solve; `ci-slp`: the N slot solves together;
    /// `ci-slp-slot`: a single slot solve.
    pub scheme: &'static str,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// QP solve time of CI-BLP against `N` CI-SLP solves, per system size and
/// block length. Only the QP solve is timed; assembly and recovery are not.
/// Runs sequentially on the calling thread.
pub fn run_timing(cfg: &SimConfig, systems: &[(usize, usize)], n_blocks: &[usize]) -> Result<Vec<TimingRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &(k, n_t) in systems {
        for &n in n_blocks {
            let sub = SimConfig { k, n_t, n_block: n, ..cfg.clone() };
            sub.validate()?;
            let mut blp = Vec::with_capacity(cfg.n_channels);
            let mut slp = Vec::with_capacity(cfg.n_channels);
            let mut slot = Vec::with_capacity(cfg.n_channels * n);
            // One untimed pass over the first channel warms caches.
            time_channel(&sub, 0)?;
            for c in 0..cfg.n_channels {
                let (b, per_slot) = time_channel(&sub, c)?;
                blp.push(b);
                slp.push(per_slot.iter().sum::<f64>());
                slot.extend(per_slot);
            }
            for (scheme, samples) in [("ci-blp", &blp), ("ci-slp", &slp), ("ci-slp-slot", &slot)] {
                let (mean, std) = mean_std(samples);
                rows.push(TimingRow { k, n_t, n_block: n, scheme, mean_ms: mean * 1e3, std_ms: std * 1e3 });
            }
        }
    }
    Ok(rows)
}

/// Block solve seconds and per-slot solve seconds for one channel draw.
fn time_channel(cfg: &SimConfig, channel: usize) -> Result<(f64, Vec<f64>)> {
    let mut rng = channel_rng(cfg.seed, channel);
    let h = gen_channel(cfg.k, cfg.n_t, &mut rng);
    let s = gen_symbols(cfg.modulation, cfg.k, cfg.n_block, &mut rng).map(|i| cfg.modulation.point(i));
    let block = BlockProblem::new(h, s, cfg.p0, cfg.modulation)?;

    let prepared = prepare_ci(&block, cfg.ci.gram)?;
    let start = Instant::now();
    prepared.solve(&cfg.ci.solver)?;
    let blp = start.elapsed().as_secs_f64();

    let mut slots = Vec::with_capacity(cfg.n_block);
    for n in 0..cfg.n_block {
        let prepared = prepare_ci(&block.slot_problem(n), cfg.ci.gram)?;
        let start = Instant::now();
        prepared.solve(&cfg.ci.solver)?;
        slots.push(start.elapsed().as_secs_f64());
    }
    Ok((blp, slots))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 10 errors in 100 trials: the textbook interval is [0.0552, 0.1744].
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.0552).abs() < 1e-4 && (hi - 0.1744).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.004);
    }

    #[test]
    fn channel_stream_is_reproducible() {
        let a = gen_channel(3, 4, &mut channel_rng(7, 2));
        let b = gen_channel(3, 4, &mut channel_rng(7, 2));
        let c = gen_channel(3, 4, &mut channel_rng(7, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_qam_with_unit_gain_is_min_distance() {
        let m = Modulation::QAM16;
        let h = DMatrix::identity(2, 2);
        let s = DMatrix::from_column_slice(2, 1, &[m.point(3), m.point(12)]);
        let block = BlockProblem::new(h, s, 1.0, m).unwrap();
        let p = AppliedPrecoder::block(DMatrix::identity(2, 2), 1.0);
        let det = transmit_detect(&block, &p, 0.0, &DMatrix::zeros(2, 1));
        assert_eq!(det[(0, 0)], 3);
        assert_eq!(det[(1, 0)], 12);
    }

    #[test]
    fn monotone_check_flags_large_rise() {
        let pt = |snr: f64, errors: u64| SerPoint {
            scheme: "zf".into(),
            snr_db: snr,
            count: Count { errors, symbols: 10_000 },
            mean_solve_ms: 0.0,
        };
        let curve = |pts| SerCurve { n_block: 1, points: pts, failures: vec![], digests: vec![] };
        assert!(curve(vec![pt(0.0, 500), pt(5.0, 510)]).check_monotone().is_ok());
        assert!(matches!(curve(vec![pt(0.0, 500), pt(5.0, 900)]).check_monotone(), Err(Error::NonMonotoneSer { .. })));
    }
}
