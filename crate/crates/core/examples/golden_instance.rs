//! The scalar QPSK instance: one antenna, one user, `h = 1`, `p0 = 1`.
//!
//! Both components of `s = (1 + j)/√2` are CI-eligible and symmetric, so
//! the dual splits evenly and the precoder is `W = 1` with `t* = 1`.

use ciblp::assembly::BlockProblem;
use ciblp::precoders::{ci_blp, CiOptions};
use ciblp::Modulation;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn main() -> ciblp::Result<()> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let block = BlockProblem::new(
        DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        DMatrix::from_element(1, 1, Complex64::new(r, r)),
        1.0,
        Modulation::QPSK,
    )?;

    let res = ci_blp(&block, &CiOptions::default())?;
    println!("W      = {:.12}", res.w[(0, 0)]);
    println!("t*     = {:.12}", res.t_star);
    println!("mu     = {:.12}", res.mu);
    println!("delta  = [{:.12}, {:.12}]", res.delta_e[0], res.delta_e[1]);
    println!("power  = {:.12}", res.block_power);
    Ok(())
}
