use thiserror::Error;

use crate::qp::QpSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// PSK with fewer than four points has collinear decision boundaries.
    #[error("PSK order {0} is not supported (need order >= 4)")]
    PskOrderTooLow(u32),

    #[error("unsupported modulation: {0}")]
    UnsupportedModulation(String),

    #[error("degenerate symbol decomposition (determinant {det:e})")]
    DegenerateDecomposition { det: f64 },

    #[error("symbol {re}{im:+}j is not a point of {modulation}")]
    NotAConstellationPoint { re: f64, im: f64, modulation: String },

    #[error("invalid block problem: {0}")]
    InvalidProblem(String),

    #[error("symbol Gram matrix D is singular (condition number {condition:e})")]
    SingularGram { condition: f64 },

    #[error("dual energy {energy:e} is too small to recover a precoder")]
    ZeroDual { energy: f64 },

    #[error("QP solver stopped after {} iterations with residual {:e}", .best.iterations, .best.pg_residual)]
    MaxIterExceeded { best: Box<QpSolution> },

    #[error("Frank-Wolfe requires every variable to be sign constrained")]
    NotSimplex,

    #[error("channel H H^H is rank deficient (condition number {condition:e})")]
    RankDeficientChannel { condition: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("{scheme}: {failures} of {blocks} blocks failed to precode")]
    TooManyFailures { scheme: String, failures: usize, blocks: usize },

    #[error("{scheme}: SER rises from {lo:e} at {snr_lo} dB to {hi:e} at {snr_hi} dB")]
    NonMonotoneSer { scheme: String, snr_lo: f64, snr_hi: f64, lo: f64, hi: f64 },

    #[error("schemes were offered different symbols or noise ({0})")]
    CommonRandomNumbers(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short tag used when counting failures per scheme.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PskOrderTooLow(_) | Error::UnsupportedModulation(_) => "modulation",
            Error::DegenerateDecomposition { .. } => "degenerate-decomposition",
            Error::NotAConstellationPoint { .. } | Error::InvalidProblem(_) => "invalid-problem",
            Error::SingularGram { .. } => "singular-gram",
            Error::ZeroDual { .. } => "zero-dual",
            Error::MaxIterExceeded { .. } => "max-iter",
            Error::NotSimplex => "not-simplex",
            Error::RankDeficientChannel { .. } => "rank-deficient-channel",
            Error::InvalidConfig(_) => "config",
            Error::TooManyFailures { .. } => "too-many-failures",
            Error::NonMonotoneSer { .. } => "non-monotone-ser",
            Error::CommonRandomNumbers(_) => "common-random-numbers",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::PskOrderTooLow(_) | Error::UnsupportedModulation(_) => 2,
            Error::TooManyFailures { .. } => 3,
            Error::NonMonotoneSer { .. } => 4,
            _ => 1,
        }
    }
}
