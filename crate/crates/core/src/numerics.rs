//! Process-wide numerical tolerances.
//!
//! Every tolerance used by the library lives in [`Numerics`]. The defaults are
//! used unless [`configure`] is called before the first read; after that the
//! configuration is frozen, so reads need no synchronization.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Numerics {
    /// Relative Frobenius tolerance for Hermiticity and unitarity checks.
    pub herm_tol: f64,
    /// Minimum adjacent eigenvalue spacing of a charge.
    pub gap_tol: f64,
    /// Eigenvalue cutoff for logarithms and support checks.
    pub eig_cutoff: f64,
    /// Quasiprobability magnitude below which a trajectory is treated as structurally zero.
    pub weight_floor: f64,
    /// Absolute tolerance on eigenvalue sums when classifying trajectories.
    pub conserving_tol: f64,
    /// Tolerance for `check_conservation`, relative to `max(1, |Q_tot|)`.
    pub conservation_tol: f64,
    /// Threshold on |Im sigma_traj| for the contextuality witness.
    pub witness_tol: f64,
    /// Maximum number of trajectories a distribution may hold.
    pub trajectory_cap: u64,
}

impl Numerics {
    pub const DEFAULT: Numerics = Numerics {
        herm_tol: 1e-10,
        gap_tol: 1e-8,
        eig_cutoff: 1e-12,
        weight_floor: 1e-14,
        conserving_tol: 1e-9,
        conservation_tol: 1e-9,
        witness_tol: 1e-6,
        trajectory_cap: 10_000_000,
    };
}

impl Default for Numerics {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static NUMERICS: OnceLock<Numerics> = OnceLock::new();

/// Current tolerances.
pub fn get() -> &'static Numerics {
    NUMERICS.get_or_init(Numerics::default)
}

/// Install a custom configuration. Fails if tolerances were already read or set.
pub fn configure(n: Numerics) -> Result<()> {
    NUMERICS
        .set(n)
        .map_err(|_| Error::Config("numerics already initialized".into()))
}
