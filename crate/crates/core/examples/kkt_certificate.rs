//! Checks a CI-BLP solution against the optimality conditions of the
//! primal problem, then shows the certificate catching a scaled precoder.

use ciblp::assembly::{build_geometry, build_u, recover_precoder, BlockProblem, GramPolicy};
use ciblp::kkt::{kkt_certificate, KktThresholds};
use ciblp::qp::{solve_pg, SolverConfig};
use ciblp::sim::{channel_rng, gen_channel, gen_symbols};
use ciblp::Modulation;
use num_complex::Complex64;

fn main() -> ciblp::Result<()> {
    let modulation = Modulation::QPSK;
    let mut rng = channel_rng(5, 0);
    let h = gen_channel(4, 4, &mut rng);
    let s = gen_symbols(modulation, 4, 8, &mut rng).map(|i| modulation.point(i));
    let block = BlockProblem::new(h, s, 1.0, modulation)?;

    let geometry = build_geometry(&block, GramPolicy::default())?;
    let dual = build_u(&geometry, block.p0);
    let sol = solve_pg(&dual.problem, &SolverConfig::default())?;
    let mut res = recover_precoder(&sol.x, &geometry, &dual, &block)?;

    let th = KktThresholds::default();
    let report = kkt_certificate(&block, &geometry, &res);
    println!("{report:#?}");
    println!("passes: {}", report.passes(&th));

    // A precoder at 90% amplitude leaves power on the table.
    res.w *= Complex64::new(0.9, 0.0);
    res.w_hat *= 0.9;
    let shrunk = kkt_certificate(&block, &geometry, &res);
    println!("scaled by 0.9 fails: {:?}", shrunk.failures(&th));
    Ok(())
}
