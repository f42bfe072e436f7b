//! Averages of each SEP, each computed along two independent paths.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{
    flat, sigma_chrg, surprisal_probabilities, surprisal_value, TrajectoryAmplitudes,
};
use crate::error::{Error, Result};
use crate::instance::{Branch, Instance};
use crate::tensor;
use crate::thermal::{dephase, relative_entropy};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChrgAverage {
    /// `sum p_F sigma_chrg` (real part).
    pub via_trajectories: f64,
    /// `sum_alpha beta^X Delta<Q_alpha^X>`.
    pub via_flows: f64,
    /// `D(rho_f || gamma) - D(rho || gamma)` with `gamma` the product of GGE marginals.
    pub via_relent: f64,
    /// Discarded imaginary part of the trajectory sum.
    pub imag_residue: f64,
}

pub fn avg_sigma_chrg(inst: &Instance) -> Result<ChrgAverage> {
    let cs = inst.charges();
    let dist = inst.forward()?;
    let traj = dist
        .split_average(|t| C64::new(sigma_chrg(t, cs, inst.beta_a(), inst.beta_b()), 0.0))?
        .all();

    let rho = inst.state();
    let rho_f = inst.final_state();
    let mut flows = 0.0;
    for alpha in 0..cs.len() {
        let qa = cs.local_charge_a(alpha)?;
        let qb = cs.local_charge_b(alpha)?;
        let delta = |q| {
            tensor::trace_product(q, rho_f.matrix()).re - tensor::trace_product(q, rho.matrix()).re
        };
        flows += inst.beta_a().betas[alpha] * delta(&qa) + inst.beta_b().betas[alpha] * delta(&qb);
    }

    let gamma = inst.reference_state()?;
    let relent = relative_entropy(&rho_f, &gamma)? - relative_entropy(rho, &gamma)?;

    Ok(ChrgAverage {
        via_trajectories: traj.re,
        via_flows: flows,
        via_relent: relent,
        imag_residue: traj.im.abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurpAverage {
    pub via_trajectories: f64,
    /// `D(rho_f || Phi_alpha(rho)) - D(rho || Phi_alpha(rho))`.
    pub via_relent: f64,
    pub imag_residue: f64,
}

pub fn avg_sigma_surp(inst: &Instance, alpha: usize) -> Result<SurpAverage> {
    let cs = inst.charges();
    let probs = surprisal_probabilities(inst.state(), cs, alpha)?;
    let dist = inst.forward()?;
    let traj = dist
        .split_average(|t| {
            C64::new(
                surprisal_value(probs[flat(t.start[alpha], cs)], probs[flat(t.end[alpha], cs)]),
                0.0,
            )
        })
        .map_err(|e| match e {
            Error::NonfiniteValue(w) => Error::SupportViolation(format!(
                "surprisal SEP is unbounded on a trajectory of weight {w:e}"
            )),
            other => other,
        })?
        .all();
    let deph = dephase(inst.state(), cs, alpha)?;
    let relent = relative_entropy(&inst.final_state(), &deph)? - relative_entropy(inst.state(), &deph)?;
    Ok(SurpAverage {
        via_trajectories: traj.re,
        via_relent: relent,
        imag_residue: traj.im.abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajAverage {
    /// `sum p_F sigma_traj` under the requested branch.
    pub via_trajectories: C64,
    /// Relative-entropy combination for the real part; pure states only.
    pub via_pure_formula: Option<f64>,
    /// `sum p_F (phi_F - phi_R)` with the four-argument phase decomposition; pure states only.
    pub phase_average: Option<C64>,
    pub branch: Branch,
    /// True when the imaginary part depends on the chosen branch cut (mixed states).
    pub convention_dependent: bool,
}

/// `1/2 [D(rho||Phi(U^dag rho U)) + D(rho||U^dag Phi(rho) U) - D(rho||Phi(rho)) - D(rho_f||Phi(rho_f))]`.
fn pure_formula(inst: &Instance) -> Result<f64> {
    let cs = inst.charges();
    let rho = inst.state();
    let u = inst.unitary();
    let back = rho.evolve(&u.adjoint());
    let rho_f = inst.final_state();
    let t1 = relative_entropy(rho, &dephase(&back, cs, 0)?)?;
    let t2 = relative_entropy(rho, &dephase(rho, cs, 0)?.evolve(&u.adjoint()))?;
    let t3 = relative_entropy(rho, &dephase(rho, cs, 0)?)?;
    let t4 = relative_entropy(&rho_f, &dephase(&rho_f, cs, 0)?)?;
    Ok(0.5 * (t1 + t2 - t3 - t4))
}

pub fn avg_sigma_traj(inst: &Instance, branch: Branch) -> Result<TrajAverage> {
    let cs = inst.charges();
    let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, branch)?;
    let dist = inst.forward()?;
    let nan = C64::new(f64::NAN, f64::NAN);
    let via_trajectories = dist
        .split_average(|t| amps.sigma(flat(t.start[0], cs), flat(t.end[0], cs)).unwrap_or(nan))?
        .all();

    let pure = inst.is_pure();
    let (via_pure_formula, phase_average) = if pure {
        let decomposed = if branch == Branch::PureDecomposed {
            amps.clone()
        } else {
            TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::PureDecomposed)?
        };
        let phases = dist
            .split_average(|t| {
                let (i, f) = (flat(t.start[0], cs), flat(t.end[0], cs));
                C64::new(decomposed.pure_phase(i, f).unwrap_or(f64::NAN), 0.0)
            })?
            .all();
        (Some(pure_formula(inst)?), Some(phases))
    } else {
        (None, None)
    };

    Ok(TrajAverage {
        via_trajectories,
        via_pure_formula,
        phase_average,
        branch,
        convention_dependent: !pure,
    })
}
