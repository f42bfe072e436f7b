//! Fluctuation theorems for the three SEPs, each with its correction term.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{flat, kappa, sigma_chrg, surprisal_probabilities, surprisal_value, trace_chain, TrajectoryAmplitudes};
use crate::charges::exp_scaled;
use crate::error::{Error, Result};
use crate::instance::{Branch, Instance};
use crate::numerics;
use crate::tensor::{identity, tensor_product, ComplexMatrix, ONE, ZERO};
use crate::thermal::{coherent_difference, dephase};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FluctuationReport {
    /// `<exp(-sigma)>` as a trajectory sum.
    pub lhs: C64,
    pub closed_form_term: C64,
    pub correction: C64,
    /// `|lhs - (closed_form_term + correction)|`.
    pub residual: f64,
}

impl FluctuationReport {
    fn new(lhs: C64, closed_form_term: C64, correction: C64) -> Self {
        Self {
            lhs,
            closed_form_term,
            correction,
            residual: (lhs - closed_form_term - correction).norm(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChrgFtReport {
    #[serde(flatten)]
    pub report: FluctuationReport,
    /// `Tr(U^dag e^{-dbeta_1 Q_1^A}...e^{-dbeta_c Q_c^A} U e^{dbeta_c Q_c^A}...e^{dbeta_1 Q_1^A} rho)`.
    pub closed_form_trace: C64,
    /// Same chain with `beta^A Q^A + beta^B Q^B` in every exponent; equals the lhs.
    pub exponential_trace: C64,
    /// `|<exp(-kappa)> - closed_form_trace|`.
    pub kappa_trace_residual: f64,
    /// `|lhs - exponential_trace|`.
    pub lhs_trace_residual: f64,
}

/// Ordered products `prod_{alpha=1..c} exp(-s_alpha G_alpha)` and the reversed inverse chain.
fn exponential_chains(gens: &[ComplexMatrix]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = gens[0].nrows();
    let mut left = identity(n);
    let mut right = identity(n);
    for g in gens {
        left *= exp_scaled(g, -1.0)?;
    }
    for g in gens.iter().rev() {
        right *= exp_scaled(g, 1.0)?;
    }
    Ok((left, right))
}

pub fn ft_chrg(inst: &Instance) -> Result<ChrgFtReport> {
    let cs = inst.charges();
    let (ba, bb) = (inst.beta_a(), inst.beta_b());
    let dist = inst.forward()?;
    let exp_sigma = dist.split_average(|t| C64::new((-sigma_chrg(t, cs, ba, bb)).exp(), 0.0))?;
    let exp_kappa = dist.split_average(|t| C64::new((-kappa(t, cs, ba, bb)).exp(), 0.0))?;
    let lhs = exp_sigma.all();
    let term = exp_kappa.all();
    let correction = exp_sigma.nonconserving - exp_kappa.nonconserving;

    let id = identity(cs.dim());
    let u = inst.unitary();
    let udag = u.adjoint();
    let rho = inst.state().matrix();

    let delta_gens: Vec<ComplexMatrix> = cs
        .charges()
        .iter()
        .enumerate()
        .map(|(alpha, q)| {
            tensor_product(&q.matrix, &id) * C64::new(ba.betas[alpha] - bb.betas[alpha], 0.0)
        })
        .collect();
    let (left, right) = exponential_chains(&delta_gens)?;
    let closed_form_trace = trace_chain(&[&udag, &left, u, &right, rho]);

    let full_gens: Vec<ComplexMatrix> = cs
        .charges()
        .iter()
        .enumerate()
        .map(|(alpha, q)| {
            tensor_product(&q.matrix, &id) * C64::new(ba.betas[alpha], 0.0)
                + tensor_product(&id, &q.matrix) * C64::new(bb.betas[alpha], 0.0)
        })
        .collect();
    let (left, right) = exponential_chains(&full_gens)?;
    let exponential_trace = trace_chain(&[&udag, &left, u, &right, rho]);

    Ok(ChrgFtReport {
        report: FluctuationReport::new(lhs, term, correction),
        closed_form_trace,
        exponential_trace,
        kappa_trace_residual: (term - closed_form_trace).norm(),
        lhs_trace_residual: (lhs - exponential_trace).norm(),
    })
}

/// `<exp(-sigma_surp)> = 1 + Tr(U^dag Phi_alpha(rho) U Delta rho_alpha rho)`.
pub fn ft_surp(inst: &Instance, alpha: usize) -> Result<FluctuationReport> {
    let cs = inst.charges();
    let probs = surprisal_probabilities(inst.state(), cs, alpha)?;
    let dist = inst.forward()?;
    let lhs = dist
        .split_average(|t| {
            let s = surprisal_value(probs[flat(t.start[alpha], cs)], probs[flat(t.end[alpha], cs)]);
            C64::new((-s).exp(), 0.0)
        })
        .map_err(|e| match e {
            Error::NonfiniteValue(w) => Error::SupportViolation(format!(
                "surprisal SEP is -inf or undefined on a trajectory of weight {w:e}"
            )),
            other => other,
        })?
        .all();
    let delta = coherent_difference(inst.state(), cs, alpha)?;
    let deph = dephase(inst.state(), cs, alpha)?;
    let u = inst.unitary();
    let correction = trace_chain(&[&u.adjoint(), deph.matrix(), u, &delta, inst.state().matrix()]);
    Ok(FluctuationReport::new(lhs, ONE, correction))
}

/// `<exp(-sigma_traj)>` from aligned forward and reverse weights.
///
/// Where the forward weight is above the floor the summand is
/// `p_F (p_R / p_F)`; elsewhere the reverse weight enters directly.
pub fn ft_traj(inst: &Instance) -> Result<FluctuationReport> {
    let fwd = inst.forward()?;
    let rev = inst.reverse()?;
    let floor = numerics::get().weight_floor;
    let mut lhs = ZERO;
    for (&pf, &pr) in fwd.weights().iter().zip(rev.weights()) {
        lhs += if pf.norm() > floor { pf * (pr / pf) } else { pr };
    }
    Ok(FluctuationReport::new(lhs, ONE, ZERO))
}

/// Same theorem evaluated by exponentiating the trajectory SEP itself.
pub fn ft_traj_via_exponent(inst: &Instance) -> Result<FluctuationReport> {
    let cs = inst.charges();
    let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::Principal)?;
    let fwd = inst.forward()?;
    let rev = inst.reverse()?;
    let floor = numerics::get().weight_floor;
    let mut lhs = ZERO;
    for (code, t, pf, _) in fwd.rows() {
        let sigma = amps.sigma(flat(t.start[0], cs), flat(t.end[0], cs));
        // an undefined SEP means one amplitude vanishes, and the reverse weight with it
        lhs += match sigma {
            Some(s) if pf.norm() > floor => pf * (-s).exp(),
            _ => rev.weights()[code],
        };
    }
    Ok(FluctuationReport::new(lhs, ONE, ZERO))
}
