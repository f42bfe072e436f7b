//! SEPs averaged over the charges' product bases, weighted by the symmetrized distribution.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{flat, surprisal_probabilities, surprisal_value, TrajectoryAmplitudes};
use crate::error::{Error, Result};
use crate::instance::{Branch, Instance};
use crate::numerics;
use crate::quasiprob::{ordered_weight, permutations, Trajectory};
use crate::thermal::{dephase, relative_entropy};

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizedSurp {
    /// `(1/c) sum_alpha sigma_surp,alpha` per trajectory code.
    pub values: Vec<f64>,
    /// Average against the symmetrized distribution.
    pub via_trajectories: f64,
    /// `(1/c) sum_alpha [D(rho_f || Phi_alpha rho) - D(rho || Phi_alpha rho)]`.
    pub via_relent: f64,
    pub imag_residue: f64,
}

pub fn symmetrized_surp(inst: &Instance) -> Result<SymmetrizedSurp> {
    let cs = inst.charges();
    let c = cs.len() as f64;
    let probs = (0..cs.len())
        .map(|alpha| surprisal_probabilities(inst.state(), cs, alpha))
        .collect::<Result<Vec<_>>>()?;
    let value = |t: &Trajectory| {
        probs
            .iter()
            .enumerate()
            .map(|(alpha, p)| surprisal_value(p[flat(t.start[alpha], cs)], p[flat(t.end[alpha], cs)]))
            .sum::<f64>()
            / c
    };
    let dist = inst.symmetrized()?;
    let values = dist.rows().map(|(_, t, _, _)| value(&t)).collect();
    let avg = dist
        .split_average(|t| C64::new(value(t), 0.0))
        .map_err(|e| match e {
            Error::NonfiniteValue(w) => Error::SupportViolation(format!(
                "symmetrized surprisal SEP is unbounded on a trajectory of weight {w:e}"
            )),
            other => other,
        })?
        .all();

    let rho_f = inst.final_state();
    let mut relent = 0.0;
    for alpha in 0..cs.len() {
        let deph = dephase(inst.state(), cs, alpha)?;
        relent += relative_entropy(&rho_f, &deph)? - relative_entropy(inst.state(), &deph)?;
    }
    Ok(SymmetrizedSurp {
        values,
        via_trajectories: avg.re,
        via_relent: relent / c,
        imag_residue: avg.im.abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizedTraj {
    /// `(1/c) sum_alpha log(<i_alpha|rho U^dag|f_alpha> / <i_alpha|U^dag rho|f_alpha>)` per code.
    pub values: Vec<Option<C64>>,
    /// Average of `values` against the symmetrized distribution.
    pub via_trajectories: C64,
    /// Max gap between `values` and the mean over orderings of the log ratio of ordered weights.
    pub permutation_residual: f64,
    /// Trajectories where every ordered weight is nonzero, so the ordering mean is defined.
    pub permutation_checked: usize,
}

/// Symmetrized trajectory SEP, principal branch in every charge basis.
pub fn symmetrized_traj(inst: &Instance) -> Result<SymmetrizedTraj> {
    let cs = inst.charges();
    let c = cs.len() as f64;
    let amps = (0..cs.len())
        .map(|alpha| TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, alpha, Branch::Principal))
        .collect::<Result<Vec<_>>>()?;
    let value = |t: &Trajectory| -> Option<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (alpha, a) in amps.iter().enumerate() {
            acc += a.sigma(flat(t.start[alpha], cs), flat(t.end[alpha], cs))?;
        }
        Some(acc / c)
    };
    let dist = inst.symmetrized()?;
    let values: Vec<Option<C64>> = dist.rows().map(|(_, t, _, _)| value(&t)).collect();
    let nan = C64::new(f64::NAN, f64::NAN);
    let via_trajectories = dist
        .split_average_coded(|code, _| values[code].unwrap_or(nan))?
        .all();

    // Each ordering's ratio keeps only its first charge's amplitudes once shared factors cancel.
    let u = inst.unitary();
    let rho = inst.state().matrix();
    let fwd_edge = rho * u.adjoint();
    let rev_edge = u.adjoint() * rho;
    let orders = permutations(cs.len());
    let floor = numerics::get().weight_floor;
    let by_orders = |t: &Trajectory| -> Option<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for order in &orders {
            let pf = ordered_weight(cs, order, u, &fwd_edge, t);
            let pr = ordered_weight(cs, order, u, &rev_edge, t);
            if pf.norm() <= floor || pr.norm() <= floor {
                return None;
            }
            let ratio = pf / pr;
            acc += C64::new(ratio.norm().ln(), super::principal_arg(ratio));
        }
        Some(acc / orders.len() as f64)
    };
    let mut permutation_residual = 0.0f64;
    let mut permutation_checked = 0;
    for (code, t, _, _) in dist.rows() {
        if let (Some(v), Some(p)) = (values[code], by_orders(&t)) {
            permutation_residual = permutation_residual.max((v - p).norm());
            permutation_checked += 1;
        }
    }

    Ok(SymmetrizedTraj {
        values,
        via_trajectories,
        permutation_residual,
        permutation_checked,
    })
}
