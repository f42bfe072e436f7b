//! Stochastic entropy production: per-trajectory values, averages and fluctuation theorems.
//!
//! Three SEPs are provided. The charge SEP tracks eigenvalue changes weighted
//! by inverse temperatures; the surprisal SEP compares outcome probabilities in
//! one charge's product basis; the trajectory SEP is the log ratio of forward
//! and reverse quasiprobabilities and is complex in general.

mod averages;
mod degenerate;
mod fluctuation;
mod symmetrized;
mod weak;

pub use averages::{avg_sigma_chrg, avg_sigma_surp, avg_sigma_traj, ChrgAverage, SurpAverage, TrajAverage};
pub use degenerate::{
    degenerate_demo, eigenprojectors, sigma_surp_degenerate_demo, DegenerateDemo, Eigenspace,
};
pub use fluctuation::{
    ft_chrg, ft_surp, ft_traj, ft_traj_via_exponent, ChrgFtReport, FluctuationReport,
};
pub use symmetrized::{symmetrized_surp, symmetrized_traj, SymmetrizedSurp, SymmetrizedTraj};
pub use weak::{contextuality_witness, weak_values, WeakValuePair, WitnessEntry, WitnessReport};

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::charges::{ChargeSet, ProductIndex};
use crate::error::{dim_err, Error, Result};
use crate::instance::{Branch, Instance};
use crate::numerics;
use crate::quasiprob::Trajectory;
use crate::tensor::{self, herm_eig, ComplexMatrix};
use crate::thermal::{DensityOperator, GgeSpec};

/// Argument in `(-pi, pi]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// `sum_alpha [beta^A (lambda_{f^A} - lambda_{i^A}) + beta^B (lambda_{f^B} - lambda_{i^B})]`.
pub fn sigma_chrg(traj: &Trajectory, cs: &ChargeSet, beta_a: &GgeSpec, beta_b: &GgeSpec) -> f64 {
    cs.charges()
        .iter()
        .enumerate()
        .map(|(alpha, q)| {
            let (i, f) = (traj.start[alpha], traj.end[alpha]);
            beta_a.betas[alpha] * (q.values[f.a] - q.values[i.a])
                + beta_b.betas[alpha] * (q.values[f.b] - q.values[i.b])
        })
        .sum()
}

/// `sum_alpha (beta^A - beta^B) (lambda_{f^A} - lambda_{i^A})`; equals the charge SEP on conserving trajectories.
pub fn kappa(traj: &Trajectory, cs: &ChargeSet, beta_a: &GgeSpec, beta_b: &GgeSpec) -> f64 {
    cs.charges()
        .iter()
        .enumerate()
        .map(|(alpha, q)| {
            let (i, f) = (traj.start[alpha], traj.end[alpha]);
            (beta_a.betas[alpha] - beta_b.betas[alpha]) * (q.values[f.a] - q.values[i.a])
        })
        .sum()
}

/// `Tr(Pi_{alpha,k} rho)` for every flat product index `k`.
pub fn surprisal_probabilities(rho: &DensityOperator, cs: &ChargeSet, alpha: usize) -> Result<Vec<f64>> {
    cs.charge(alpha)?;
    let n = cs.joint_dim();
    if rho.dim() != n {
        return Err(dim_err(n, rho.dim()));
    }
    let w = cs.product_basis(alpha);
    let in_basis = w.adjoint() * rho.matrix() * w;
    Ok((0..n).map(|k| in_basis[(k, k)].re).collect())
}

/// `log(p_i / p_f)` with sentinels: `+inf` when only `p_f` is negligible, NaN when both are.
pub fn surprisal_value(p_i: f64, p_f: f64) -> f64 {
    let floor = numerics::get().weight_floor;
    match (p_i > floor, p_f > floor) {
        (true, true) => (p_i / p_f).ln(),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => f64::NAN,
    }
}

/// Surprisal SEP in charge `alpha`'s product basis.
pub fn sigma_surp(traj: &Trajectory, alpha: usize, rho: &DensityOperator, cs: &ChargeSet) -> Result<f64> {
    let p = surprisal_probabilities(rho, cs, alpha)?;
    let d = cs.dim();
    Ok(surprisal_value(p[traj.start[alpha].flat(d)], p[traj.end[alpha].flat(d)]))
}

/// Phases entering the four-argument decomposition of the trajectory SEP for a pure state.
#[derive(Clone, Debug)]
struct PurePhases {
    /// `Arg <i|psi>`
    ket_psi: Vec<f64>,
    /// `Arg <i|U^dagger|psi>`
    ket_udag_psi: Vec<f64>,
    /// `Arg <psi|U^dagger|f>`
    psi_udag_ket: Vec<f64>,
    /// `Arg <psi|f>`
    psi_ket: Vec<f64>,
}

/// The two amplitudes `<i|rho U^dagger|f>` and `<i|U^dagger rho|f>` in one charge's product basis.
#[derive(Clone, Debug)]
pub struct TrajectoryAmplitudes {
    pub forward: ComplexMatrix,
    pub reverse: ComplexMatrix,
    phases: Option<PurePhases>,
}

/// Leading eigenvector of a pure density matrix.
pub fn pure_state_vector(rho: &DensityOperator) -> Result<DVector<C64>> {
    let impurity = rho.impurity();
    if impurity > 1e-10 {
        return Err(Error::MixedState(1.0 - impurity));
    }
    let eig = herm_eig(rho.matrix())?;
    Ok(eig.vector(eig.dim() - 1))
}

impl TrajectoryAmplitudes {
    pub fn new(
        rho: &DensityOperator,
        u: &ComplexMatrix,
        cs: &ChargeSet,
        alpha: usize,
        branch: Branch,
    ) -> Result<Self> {
        cs.charge(alpha)?;
        let w = cs.product_basis(alpha);
        let udag = u.adjoint();
        let forward = w.adjoint() * rho.matrix() * &udag * w;
        let reverse = w.adjoint() * &udag * rho.matrix() * w;
        let phases = match branch {
            Branch::Principal => None,
            Branch::PureDecomposed => {
                let psi = pure_state_vector(rho)?;
                let wpsi = w.adjoint() * &psi;
                let w_udag_psi = w.adjoint() * &udag * &psi;
                // <psi|U^dagger|f> = conj(<f|U|psi>)
                let w_u_psi = w.adjoint() * u * &psi;
                let n = cs.joint_dim();
                Some(PurePhases {
                    ket_psi: (0..n).map(|k| principal_arg(wpsi[k])).collect(),
                    ket_udag_psi: (0..n).map(|k| principal_arg(w_udag_psi[k])).collect(),
                    psi_udag_ket: (0..n).map(|k| principal_arg(w_u_psi[k].conj())).collect(),
                    psi_ket: (0..n).map(|k| principal_arg(wpsi[k].conj())).collect(),
                })
            }
        };
        Ok(Self {
            forward,
            reverse,
            phases,
        })
    }

    /// Trajectory SEP for flat indices `(i, f)`; `None` where either amplitude is negligible.
    pub fn sigma(&self, i: usize, f: usize) -> Option<C64> {
        let floor = numerics::get().weight_floor;
        let (a, b) = (self.forward[(i, f)], self.reverse[(i, f)]);
        if a.norm() <= floor || b.norm() <= floor {
            return None;
        }
        let re = (a.norm() / b.norm()).ln();
        let im = match &self.phases {
            None => principal_arg(a * b.conj()),
            Some(p) => self.decomposed_phase(p, i, f),
        };
        Some(C64::new(re, im))
    }

    fn decomposed_phase(&self, p: &PurePhases, i: usize, f: usize) -> f64 {
        p.ket_psi[i] + p.psi_udag_ket[f] - p.ket_udag_psi[i] - p.psi_ket[f]
    }

    /// Four-argument phase sum, available for pure states only.
    pub fn pure_phase(&self, i: usize, f: usize) -> Option<f64> {
        self.phases.as_ref().map(|p| self.decomposed_phase(p, i, f))
    }
}

/// Trajectory SEP `log(p_F / p_R)`; only the first charge's indices matter.
pub fn sigma_traj(
    traj: &Trajectory,
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
    branch: Branch,
) -> Result<Option<C64>> {
    let amps = TrajectoryAmplitudes::new(rho, u, cs, 0, branch)?;
    let d = cs.dim();
    Ok(amps.sigma(traj.start[0].flat(d), traj.end[0].flat(d)))
}

/// Every SEP evaluated on one trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct SepSample {
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub code: usize,
    pub weight: C64,
    pub conserving: bool,
    pub sigma_chrg: f64,
    pub kappa: f64,
    /// `+inf`, `-inf` or NaN mark boundary cases; see [`surprisal_value`].
    pub sigma_surp: f64,
    pub sigma_traj: Option<C64>,
}

/// Per-trajectory SEP table for an instance, in trajectory code order.
pub fn samples(inst: &Instance, branch: Branch) -> Result<Vec<SepSample>> {
    let dist = inst.forward()?;
    let cs = inst.charges();
    let d = cs.dim();
    let alpha = inst.alpha_surp;
    let probs = surprisal_probabilities(inst.state(), cs, alpha)?;
    let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, branch)?;
    Ok(dist
        .rows()
        .map(|(code, t, w, conserving)| SepSample {
            code,
            weight: w,
            conserving,
            sigma_chrg: sigma_chrg(&t, cs, inst.beta_a(), inst.beta_b()),
            kappa: kappa(&t, cs, inst.beta_a(), inst.beta_b()),
            sigma_surp: surprisal_value(probs[t.start[alpha].flat(d)], probs[t.end[alpha].flat(d)]),
            sigma_traj: amps.sigma(t.start[0].flat(d), t.end[0].flat(d)),
            trajectory: t,
        })
        .collect())
}

/// Flat index helper for a product index of a qubit pair or larger system.
pub(crate) fn flat(k: ProductIndex, cs: &ChargeSet) -> usize {
    k.flat(cs.dim())
}

/// `Tr(A B C ...)` convenience used by the closed forms.
pub(crate) fn trace_chain(ms: &[&ComplexMatrix]) -> C64 {
    let mut acc = ms[0].clone();
    for m in &ms[1..] {
        acc = acc * *m;
    }
    tensor::trace(&acc)
}

#[cfg(test)]
mod tests;
