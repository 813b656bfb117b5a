//! QP solve time of one CI-BLP block against N CI-SLP slots.

use ciblp::sim::{run_timing, SimConfig};
use ciblp::Modulation;

fn main() -> ciblp::Result<()> {
    let mut cfg = SimConfig::new(4, 4, 1, Modulation::QPSK);
    cfg.n_channels = 10;
    let rows = run_timing(&cfg, &[(4, 4), (6, 6)], &[10, 20])?;
    println!("{:>2} {:>3} {:>3} {:<12} {:>10} {:>10}", "K", "N_T", "N", "scheme", "mean ms", "std ms");
    for r in rows {
        println!("{:>2} {:>3} {:>3} {:<12} {:>10.4} {:>10.4}", r.k, r.n_t, r.n_block, r.scheme, r.mean_ms, r.std_ms);
    }
    Ok(())
}
