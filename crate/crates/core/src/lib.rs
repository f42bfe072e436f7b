//! Stochastic entropy production for two quantum systems exchanging
//! noncommuting conserved charges.
//!
//! The crate enumerates measurement trajectories, weighs them with extended
//! Kirkwood-Dirac quasiprobabilities, and evaluates three inequivalent
//! entropy-production formulas (charge, surprisal, trajectory) together with
//! their averages, fluctuation theorems and a contextuality witness. A
//! pointer-based weak-measurement simulator provides an independent check of
//! the weak values involved.
//!
//! Module map:
//!
//! - [`tensor`]: dense complex linear algebra (Kronecker products, partial
//!   traces, Hermitian eigensystems, matrix exp/log).
//! - [`charges`]: charge sets, product-basis projectors, conservation checks.
//! - [`thermal`]: generalized Gibbs states, dephasing, entropies.
//! - [`quasiprob`]: trajectories and forward/reverse/symmetrized quasiprobabilities.
//! - [`sep`]: per-trajectory entropy production, averages, fluctuation theorems.
//! - [`pointer`]: weak-measurement pointer simulation and Richardson extrapolation.
//! - [`instance`] and [`experiments`]: instance construction, presets, sweeps,
//!   and the verification suite behind the `nasep` binary.

pub mod charges;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod numerics;
pub mod pointer;
pub mod quasiprob;
pub mod random;
pub mod sep;
pub mod tensor;
pub mod thermal;

mod par;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
