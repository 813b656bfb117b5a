//! SER of CI-BLP as the block grows, at a fixed SNR. `N = 1` is CI-SLP.

use ciblp::precoders::PrecoderKind;
use ciblp::sim::{run_block_sweep, SimConfig};
use ciblp::Modulation;

fn main() -> ciblp::Result<()> {
    let mut cfg = SimConfig::new(4, 4, 1, Modulation::QPSK);
    cfg.snr_db = vec![15.0];
    cfg.n_channels = 200;
    cfg.schemes = vec![PrecoderKind::CiBlp];
    cfg.seed = 9;

    for curve in run_block_sweep(&cfg, &[1, 2, 4, 8, 16])? {
        let p = &curve.points[0];
        println!("N={:<3} symbols={:<7} ser={:.4e}", curve.n_block, p.count.symbols, p.count.ser());
    }
    Ok(())
}
