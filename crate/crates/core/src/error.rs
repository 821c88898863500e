use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of 1/(c)_n at n = {n} before the series terminates")]
    PoleBeforeTermination { n: usize },
    #[error("series did not converge after {terms} terms (last term {estimate:e})")]
    NoConvergence { terms: usize, estimate: f64 },
    #[error("Gauss sum diverges: Re(c-a-b) = {0} <= 0")]
    DivergentAtOne(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigenvector denominator vanishes for k = {k}, step i = {i} (p = {p})")]
    DegenerateDenominator { k: usize, i: usize, p: Complex64 },
    #[error("Hahn matrix is numerically singular for ell = {0}")]
    SingularU(usize),
    #[error("group element is not unimodular: |det - 1| = {0:e}")]
    NotUnimodular(f64),
    #[error("point (0, {0}) with r > 1 lies outside the orbit chart")]
    OutOfChart(f64),
    #[error("no eigenvector available for ell = {ell}, k = {k}, p = {p}")]
    DegenerateEigenvector { ell: usize, k: usize, p: Complex64 },
    #[error("P/Q decomposition requires 2p not an integer (2p = {0})")]
    IntegerTwoP(Complex64),
    #[error("t = {0} outside the admissible range")]
    OutOfDomain(f64),
    #[error("limit extrapolation failed: {0}")]
    ScalingMismatch(String),
    #[error("recursion leading factor vanishes at j = {0}")]
    RecursionPole(usize),
    #[error("ODE integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("printed formula has a pole at p = {0}")]
    PrintedPole(Complex64),
    #[error("least-squares design matrix ill-conditioned (cond = {0:e})")]
    IllConditioned(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
