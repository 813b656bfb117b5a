//! Projected gradient against pairwise Frank-Wolfe on random simplex QPs.

use ciblp::cli::validate::random_psd;
use ciblp::qp::{solve_fw, solve_pg, QpProblem, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ciblp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pg_cfg = SolverConfig::default();
    let fw_cfg = SolverConfig { tol: 1e-10, max_iter: Some(1_000_000), ..Default::default() };

    println!("{:>3} {:>16} {:>16} {:>6} {:>7}", "n", "pg objective", "fw objective", "pg it", "fw it");
    for _ in 0..10 {
        let n = rng.random_range(2..=32);
        let problem = QpProblem::simplex(random_psd(&mut rng, n));
        let pg = solve_pg(&problem, &pg_cfg)?;
        let fw = solve_fw(&problem, &fw_cfg)?;
        println!("{n:>3} {:>16.9e} {:>16.9e} {:>6} {:>7}", pg.objective, fw.objective, pg.iterations, fw.iterations);
    }
    Ok(())
}
