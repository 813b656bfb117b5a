//! A small QPSK SER sweep with 95% Wilson intervals.
//!
//! `ciblp ser-sweep` runs the same thing from a TOML file and writes the
//! CSV, plot and manifest.

use ciblp::precoders::PrecoderKind;
use ciblp::sim::{run_ser_sweep, SimConfig};
use ciblp::Modulation;

fn main() -> ciblp::Result<()> {
    let mut cfg = SimConfig::new(4, 4, 8, Modulation::QPSK);
    cfg.snr_db = vec![0.0, 10.0, 20.0];
    cfg.n_channels = 100;
    cfg.n_blocks_per_channel = 4;
    cfg.schemes = vec![PrecoderKind::CiBlp, PrecoderKind::Zf, PrecoderKind::Rzf(1.0)];
    cfg.seed = 42;

    let curve = run_ser_sweep(&cfg)?;
    assert!(curve.check_digests());
    println!("{:<7} {:>6} {:>11} {:>24}", "scheme", "snr", "ser", "95% interval");
    for p in &curve.points {
        let (lo, hi) = p.count.wilson();
        println!("{:<7} {:>6} {:>11.4e}   [{lo:.3e}, {hi:.3e}]", p.scheme, p.snr_db, p.count.ser());
    }
    for f in curve.failures.iter().filter(|f| f.failures > 0) {
        println!("{}: {} of {} blocks failed", f.scheme, f.failures, f.blocks);
    }
    Ok(())
}
