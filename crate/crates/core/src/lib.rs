//! Constructive-interference block-level precoding (CI-BLP) for the
//! multi-user MISO downlink.
//!
//! A single precoding matrix is optimized for a whole block of symbol slots
//! so that the smallest constructive-interference scaling coefficient over
//! the block is maximized under a block power budget. The problem is solved
//! through its dual, a quadratic program over a (partial) simplex, and the
//! precoder is recovered in closed form from the dual solution.
//!
//! Module map:
//!
//! * [`modulation`], [`geometry`]: constellations, decision-boundary
//!   decompositions, the per-slot matrix `M`.
//! * [`assembly`]: block matrices `D`, `p/f/g/q`, the dual matrix `U`, and
//!   precoder recovery.
//! * [`qp`], [`kkt`]: the dual QP solvers and an optimality certificate.
//! * [`precoders`]: CI-BLP, CI-SLP, ZF and RZF.
//! * [`sim`]: Monte Carlo SER and timing experiments.
//! * [`cli`]: configuration files, CSV/SVG output and the validation battery.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kkt;
pub mod modulation;
pub mod precoders;
pub mod qp;
pub mod sim;

pub use error::{Error, Result};
pub use modulation::Modulation;
