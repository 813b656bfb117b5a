//! CI-BLP, CI-SLP, ZF and RZF on the same QPSK block.
//!
//! The figure printed is the smallest useful amplitude: `t*` for the CI
//! schemes and the smallest `Re(H W)_kk` for the linear ones. RZF also leaks
//! interference, which this number does not show.

use ciblp::assembly::BlockProblem;
use ciblp::precoders::{ci_blp, ci_slp_block, rzf, zf, CiOptions};
use ciblp::sim::{channel_rng, gen_channel, gen_symbols};
use ciblp::Modulation;

fn main() -> ciblp::Result<()> {
    let (k, n_t, n) = (4, 4, 8);
    let modulation = Modulation::QPSK;
    let mut rng = channel_rng(1, 0);
    let h = gen_channel(k, n_t, &mut rng);
    let s = gen_symbols(modulation, k, n, &mut rng).map(|i| modulation.point(i));
    let block = BlockProblem::new(h, s, 1.0, modulation)?;
    let opts = CiOptions::default();

    let blp = ci_blp(&block, &opts)?;
    let slp = ci_slp_block(&block, &opts)?;
    let slp_worst = slp.iter().map(|r| r.t_star).fold(f64::INFINITY, f64::min);

    let linear_worst = |w: &nalgebra::DMatrix<num_complex::Complex64>| {
        let hw = &block.h * w;
        (0..k).map(|i| hw[(i, i)].re).fold(f64::INFINITY, f64::min)
    };
    let zf = zf(&block)?;
    let rzf = rzf(&block, 100.0)?;

    println!("{:<8} {:>10} {:>12}", "scheme", "min gain", "block power");
    println!("{:<8} {:>10.4} {:>12.6}", "ci-blp", blp.t_star, blp.block_power);
    println!("{:<8} {:>10.4} {:>12}", "ci-slp", slp_worst, "per slot");
    println!("{:<8} {:>10.4} {:>12.6}", "zf", linear_worst(&zf.w), block.block_power(&zf.w));
    println!("{:<8} {:>10.4} {:>12.6}", "rzf", linear_worst(&rzf.w), block.block_power(&rzf.w));
    Ok(())
}
