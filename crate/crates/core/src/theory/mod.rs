//! Closed-form quantities of the model: level fill times, the parameter
//! tower behind the long isolated path, recurrence bounds, and concentration
//! bounds. Anything astronomically large is carried as a [`LogScalar`].

mod bounds;
mod combinatorics;
mod context;
mod logscalar;

use thiserror::Error;

pub use bounds::{
    bernstein_tail, conc_bound, conc_bound_unrestricted, hoeffding_bound, notall_bound,
    notall_bound_ln, notall_rho, rec1_lower, rec1_upper, tau_k_eps, TauK,
};
pub use combinatorics::{
    binom_approx, binomial, binomial_exact, binomial_real, eta, ln_binomial, ln_factorial,
    ln_superfactorial, superfactorial, EtaMode, SuperfactorialMode,
};
pub use context::{
    nj_lj, schedule, xi, xi_ratio, zeta, ScheduleEntry, ScheduleTime, TheoryContext,
};
pub use logscalar::LogScalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("validity guard violated: {0}")]
    Guard(String),
    #[error("beta_{0} is negative")]
    NegativeBeta(usize),
    #[error("no defined parameters: {0}")]
    Degenerate(String),
}
