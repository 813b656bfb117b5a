//! 16QAM: only outer-edge components may be pushed outward.
//!
//! Locked components sit at exactly `α = t*`, so after dividing by `t*` the
//! receiver sees the grid value on those axes. Eligible components satisfy
//! `α ≥ t*`; with one precoder shared across the block some of them end up
//! strictly outside.
//!
//! Each locked component is one real equation on `H W`. Once a user has
//! about `2K` of them, `H W = t·I` is forced and CI-BLP coincides with
//! scaled ZF, so slack only shows for short blocks.

use ciblp::assembly::{build_geometry, BlockProblem, GramPolicy};
use ciblp::precoders::{ci_blp, CiOptions};
use ciblp::sim::{channel_rng, gen_channel, gen_symbols};
use ciblp::Modulation;

fn main() -> ciblp::Result<()> {
    let (k, n_t, n) = (4, 4, 5);
    let modulation = Modulation::QAM16;
    let mut rng = channel_rng(11, 0);
    let h = gen_channel(k, n_t, &mut rng);
    let s = gen_symbols(modulation, k, n, &mut rng).map(|i| modulation.point(i));
    let block = BlockProblem::new(h, s, 1.0, modulation)?;

    let res = ci_blp(&block, &CiOptions::default())?;
    let geometry = build_geometry(&block, GramPolicy::default())?;
    println!("t* = {:.6}", res.t_star);

    // Components are ordered [Re user 0, …, Re user K−1, Im user 0, …].
    let (mut locked, mut eligible) = (0, 0);
    println!("{:>4} {:>4} {:>4} {:>10}", "slot", "user", "axis", "alpha/t*");
    for (slot, geo) in geometry.slots.iter().enumerate() {
        for c in 0..2 * k {
            let ratio = res.scaling[slot][c] / res.t_star;
            if !geo.eligible[c] {
                locked += 1;
                assert!((ratio - 1.0).abs() < 1e-9);
                continue;
            }
            eligible += 1;
            if ratio > 1.0 + 1e-9 {
                let axis = if c < k { "re" } else { "im" };
                println!("{slot:>4} {:>4} {axis:>4} {ratio:>10.6}", c % k);
            }
        }
    }
    println!("{locked} locked components at alpha = t*, {eligible} eligible");
    Ok(())
}
