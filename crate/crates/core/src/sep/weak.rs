//! Weak values behind the trajectory SEP's phase, and the contextuality witness built on it.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{flat, principal_arg, TrajectoryAmplitudes};
use crate::charges::{ChargeSet, ProductIndex};
use crate::error::{dim_err, Error, Result};
use crate::instance::{Branch, Instance};
use crate::numerics;
use crate::tensor::{sandwich, ComplexMatrix};
use crate::thermal::DensityOperator;

const POSTSELECTION_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeakValuePair {
    /// Weak value of `Pi_{1,i}` postselected on the evolved outcome `f`.
    pub wv_forward: C64,
    /// Weak value of `Pi_{1,f}` postselected on the back-evolved outcome `i`.
    pub wv_reverse: C64,
    /// `Arg wv_forward`.
    pub phi_f: f64,
    /// `-Arg wv_reverse`.
    pub phi_r: f64,
}

/// Weak values for the first charge's outcomes `i1`, `f1`.
///
/// `wv_F = Tr(U^dag Pi_f U Pi_i rho) / Tr(U^dag Pi_f U rho)` and
/// `wv_R = Tr(U Pi_i U^dag Pi_f rho) / Tr(U Pi_i U^dag rho)`.
pub fn weak_values(
    i1: ProductIndex,
    f1: ProductIndex,
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
) -> Result<WeakValuePair> {
    let n = cs.joint_dim();
    if rho.dim() != n {
        return Err(dim_err(n, rho.dim()));
    }
    if u.nrows() != n || u.ncols() != n {
        return Err(dim_err(n, u.nrows()));
    }
    let d = cs.dim();
    for k in [i1, f1] {
        if k.a >= d || k.b >= d {
            return Err(Error::IndexOutOfRange {
                what: "product index",
                index: k.a.max(k.b),
                bound: d,
            });
        }
    }
    let ket_i = cs.product_vector(0, i1);
    let ket_f = cs.product_vector(0, f1);
    let r = rho.matrix();
    let udag = u.adjoint();
    // <f|U|i> <i|rho U^dag|f>
    let num_f = sandwich(&ket_f, u, &ket_i) * sandwich(&ket_i, &(r * &udag), &ket_f);
    let den_f = sandwich(&ket_f, &(u * r * &udag), &ket_f);
    // <i|U^dag|f> <f|rho U|i>
    let num_r = sandwich(&ket_i, &udag, &ket_f) * sandwich(&ket_f, &(r * u), &ket_i);
    let den_r = sandwich(&ket_i, &(&udag * r * u), &ket_i);
    for den in [den_f, den_r] {
        if den.norm() <= POSTSELECTION_FLOOR {
            return Err(Error::ZeroPostselection(den.norm()));
        }
    }
    let wv_forward = num_f / den_f;
    let wv_reverse = num_r / den_r;
    Ok(WeakValuePair {
        wv_forward,
        wv_reverse,
        phi_f: principal_arg(wv_forward),
        phi_r: -principal_arg(wv_reverse),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WitnessEntry {
    pub start: ProductIndex,
    pub end: ProductIndex,
    pub im_sigma_traj: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    /// First-charge outcome pairs `(i1, f1)` whose trajectory SEP is nonreal.
    pub entries: Vec<WitnessEntry>,
    /// `|Im <sigma_traj>|` under the principal branch.
    pub abs_imag_average: f64,
    /// True when the average itself is nonreal beyond the witness tolerance.
    pub average_flag: bool,
}

impl WitnessReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, start: ProductIndex, end: ProductIndex) -> bool {
        self.entries.iter().any(|e| e.start == start && e.end == end)
    }
}

/// Nonreal trajectory SEPs (principal branch) and the flag on their average.
pub fn contextuality_witness(inst: &Instance) -> Result<WitnessReport> {
    let cs = inst.charges();
    let tol = numerics::get().witness_tol;
    let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::Principal)?;
    let n = cs.joint_dim();
    let d = cs.dim();
    let mut entries = Vec::new();
    for i in 0..n {
        for f in 0..n {
            if let Some(s) = amps.sigma(i, f) {
                if s.im.abs() > tol {
                    entries.push(WitnessEntry {
                        start: ProductIndex::from_flat(i, d),
                        end: ProductIndex::from_flat(f, d),
                        im_sigma_traj: s.im,
                    });
                }
            }
        }
    }
    let nan = C64::new(f64::NAN, f64::NAN);
    let avg = inst
        .forward()?
        .split_average(|t| amps.sigma(flat(t.start[0], cs), flat(t.end[0], cs)).unwrap_or(nan))?
        .all();
    Ok(WitnessReport {
        entries,
        abs_imag_average: avg.im.abs(),
        average_flag: avg.im.abs() > tol,
    })
}
