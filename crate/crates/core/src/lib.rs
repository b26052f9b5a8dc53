//! Periodic pseudospectral solver for the dissipative Benjamin–Ono (Chen–Lee)
//! equation
//!
//! ```text
//! u_t + u u_x + β ℋ ∂²_x u + η (ℋ ∂_x u − ∂²_x u) = 0,   x ∈ [−π, π),
//! ```
//!
//! together with measurement campaigns for its linear and bilinear estimates and
//! the two-mode norm-inflation experiment.

pub mod duhamel;
pub mod error;
pub mod estimates;
pub mod fourier;
pub mod illposed;
pub mod io;
pub mod quadrature;
pub mod symbols;

pub use duhamel::{
    duhamel_bilinear, energy_rate, etd_march, existence_time, free_evolution, growth_exponent,
    picard_map, picard_solve, PicardReport, SolverConfig,
};
pub use error::{Error, Result};
pub use fourier::{
    analyze, derivative, pseudospectral_product, sobolev_norm, solution_norm, synthesize,
    xts_norm, FourierField, ModelParams, SobolevIndex, Trajectory,
};
pub use symbols::{apply_semigroup, apply_unitary_group, LinearSymbol};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/fields.md")]
mod book_fields {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/linear.md")]
mod book_linear {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solvers.md")]
mod book_solvers {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/estimates.md")]
mod book_estimates {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/inflation.md")]
mod book_inflation {}
