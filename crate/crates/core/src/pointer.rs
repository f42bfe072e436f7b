//! Qubit-pointer weak measurement, simulated exactly on system plus detector.
//!
//! The detector starts in `|0>` and couples through `exp(-i g Pi (x) sigma_y)`.
//! After the system evolves under `U` and is postselected, the detector's
//! off-diagonal element is `g` times the weak value to leading order:
//! `<sigma_x>` carries the real part and `<sigma_y>` the imaginary part.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::charges::{ChargeSet, ProductIndex};
use crate::error::{dim_err, Error, Result};
use crate::par;
use crate::tensor::{self, identity, partial_trace, pauli_x, pauli_y, tensor_product, ComplexMatrix, Keep};
use crate::thermal::DensityOperator;

pub const MAX_COUPLING: f64 = 0.5;
pub const DEFAULT_SCHEDULE: [f64; 3] = [0.08, 0.04, 0.02];
const POSTSELECTION_FLOOR: f64 = 1e-14;
const ESTIMATE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct PointerProtocol {
    pub rho: DensityOperator,
    /// Rank-one projector coupled to the pointer.
    pub measured: ComplexMatrix,
    pub unitary: ComplexMatrix,
    /// Rank-one projector applied to the evolved system.
    pub postselect: ComplexMatrix,
    pub coupling: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointerReading {
    /// Postselected detector `<sigma_x>`.
    pub x_shift: f64,
    /// Postselected detector `<sigma_y>`.
    pub y_shift: f64,
    pub postselect_prob: f64,
}

impl PointerReading {
    /// `(<sigma_x> + i <sigma_y>) / (2 g)`, the first-order weak-value estimate.
    pub fn weak_value_estimate(&self, g: f64) -> C64 {
        C64::new(self.x_shift, self.y_shift) / (2.0 * g.sin())
    }
}

fn check_rank_one(p: &ComplexMatrix, n: usize) -> Result<()> {
    if p.nrows() != n || p.ncols() != n {
        return Err(dim_err(n, p.nrows()));
    }
    let idem = tensor::frobenius(&(p * p - p));
    let rank = (tensor::trace(p) - 1.0).norm();
    let residual = idem.max(rank).max(tensor::hermiticity_residual(p));
    if residual > 1e-10 {
        return Err(Error::IncompleteProjectors(residual));
    }
    Ok(())
}

impl PointerProtocol {
    fn validate(&self) -> Result<()> {
        let n = self.rho.dim();
        check_rank_one(&self.measured, n)?;
        check_rank_one(&self.postselect, n)?;
        if self.unitary.nrows() != n || self.unitary.ncols() != n {
            return Err(dim_err(n, self.unitary.nrows()));
        }
        let res = tensor::unitarity_residual(&self.unitary);
        if res > 1e-10 {
            return Err(Error::NonUnitary(res));
        }
        if !self.coupling.is_finite() || !(0.0..=MAX_COUPLING).contains(&self.coupling) {
            return Err(Error::Config(format!(
                "pointer coupling {} outside [0, {MAX_COUPLING}]",
                self.coupling
            )));
        }
        Ok(())
    }
}

/// Exact coupled evolution, postselection and detector readout.
pub fn pointer_run(p: &PointerProtocol) -> Result<PointerReading> {
    p.validate()?;
    let n = p.rho.dim();
    let id = identity(n);
    // exp(-i g Pi (x) sigma_y) = (1 - Pi) (x) 1 + Pi (x) exp(-i g sigma_y)
    let (c, s) = (p.coupling.cos(), p.coupling.sin());
    let rotation = tensor::from_real_rows(&[&[c, -s], &[s, c]]);
    let coupling = tensor_product(&(&id - &p.measured), &identity(2)) + tensor_product(&p.measured, &rotation);

    let detector = tensor::diag_real(&[1.0, 0.0]);
    let joint = tensor_product(p.rho.matrix(), &detector);
    let evolve = tensor_product(&p.unitary, &identity(2)) * coupling;
    let post = tensor_product(&p.postselect, &identity(2));
    let out = &post * &evolve * joint * evolve.adjoint() * &post;

    let det = partial_trace(&out, (n, 2), Keep::B)?;
    let prob = tensor::trace(&det).re;
    if prob < POSTSELECTION_FLOOR {
        return Err(Error::ZeroPostselection(prob));
    }
    let x_shift = tensor::trace_product(&pauli_x(), &det).re / prob;
    let y_shift = tensor::trace_product(&pauli_y(), &det).re / prob;
    Ok(PointerReading {
        x_shift,
        y_shift,
        postselect_prob: prob,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakValueEstimate {
    /// Richardson extrapolation to `g = 0` in powers of `g^2`.
    pub estimate: C64,
    /// Coefficient `C` of the leading `g^2` error, `e(g) ~ estimate + C g^2`.
    pub curvature: C64,
    pub schedule: Vec<f64>,
    /// First-order estimates at each coupling.
    pub raw: Vec<C64>,
    pub postselect_prob: f64,
}

/// Polynomial extrapolation in `h = g^2` to zero (Neville), plus the linear coefficient.
fn richardson(hs: &[f64], values: &[C64]) -> (C64, C64) {
    let m = hs.len();
    if m == 1 {
        return (values[0], C64::new(0.0, 0.0));
    }
    // Lagrange basis at 0 and its derivative
    let mut at_zero = C64::new(0.0, 0.0);
    let mut slope = C64::new(0.0, 0.0);
    for j in 0..m {
        let mut l0 = 1.0;
        let mut dl = 0.0;
        for k in 0..m {
            if k == j {
                continue;
            }
            let denom = hs[j] - hs[k];
            // derivative of prod (h - h_k)/(h_j - h_k) at h = 0
            let mut term = 1.0 / denom;
            for q in 0..m {
                if q != j && q != k {
                    term *= -hs[q] / (hs[j] - hs[q]);
                }
            }
            dl += term;
            l0 *= -hs[k] / denom;
        }
        at_zero += values[j] * l0;
        slope += values[j] * dl;
    }
    (at_zero, slope)
}

/// Weak value of `Pi_{1,i1}` postselected on `U^dag Pi_{1,f1} U`, from pointer readings alone.
pub fn estimate_weak_value(
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
    i1: ProductIndex,
    f1: ProductIndex,
    schedule: &[f64],
) -> Result<WeakValueEstimate> {
    if schedule.is_empty() || schedule.iter().any(|&g| !(g > 0.0 && g <= MAX_COUPLING)) {
        return Err(Error::Config(format!(
            "coupling schedule must be nonempty with values in (0, {MAX_COUPLING}]"
        )));
    }
    let measured = cs.product_projector(0, i1)?;
    let postselect = cs.product_projector(0, f1)?;
    let readings = par::map_collect(schedule.len(), |k| {
        pointer_run(&PointerProtocol {
            rho: rho.clone(),
            measured: measured.clone(),
            unitary: u.clone(),
            postselect: postselect.clone(),
            coupling: schedule[k],
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let prob = tensor::trace_product(&(u.adjoint() * &postselect * u), rho.matrix()).re;
    if prob <= ESTIMATE_FLOOR {
        return Err(Error::ZeroPostselection(prob));
    }
    let raw: Vec<C64> = readings
        .iter()
        .zip(schedule)
        .map(|(r, &g)| r.weak_value_estimate(g))
        .collect();

    let mut order: Vec<usize> = (0..schedule.len()).collect();
    order.sort_by(|&a, &b| schedule[b].total_cmp(&schedule[a]));
    let steps: Vec<f64> = order
        .windows(2)
        .map(|w| (raw[w[0]] - raw[w[1]]).norm())
        .collect();
    if steps.windows(2).any(|s| s[1] > s[0] && s[1] > 1e-13) {
        return Err(Error::NonconvergentExtrapolation(format!(
            "successive estimate changes {steps:?} do not shrink with g"
        )));
    }

    let hs: Vec<f64> = schedule.iter().map(|g| g * g).collect();
    let (estimate, curvature) = richardson(&hs, &raw);
    Ok(WeakValueEstimate {
        estimate,
        curvature,
        schedule: schedule.to_vec(),
        raw,
        postselect_prob: prob,
    })
}

/// Least-squares slope of `log|e(g) - exact|` against `log g`.
pub fn convergence_order(est: &WeakValueEstimate, exact: C64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = est
        .schedule
        .iter()
        .zip(&est.raw)
        .map(|(&g, &e)| (g.ln(), (e - exact).norm()))
        .filter(|&(_, err)| err > 0.0)
        .map(|(x, err)| (x, err.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::presets;
    use crate::sep::weak_values;

    fn protocol(g: f64) -> PointerProtocol {
        let inst = presets::fig5_default().unwrap();
        let cs = inst.charges();
        PointerProtocol {
            rho: inst.state().clone(),
            measured: cs.product_projector(0, ProductIndex::new(0, 1)).unwrap(),
            unitary: inst.unitary().clone(),
            postselect: cs.product_projector(0, ProductIndex::new(1, 0)).unwrap(),
            coupling: g,
        }
    }

    #[test]
    fn zero_coupling_is_identity_channel() {
        let r = pointer_run(&protocol(0.0)).unwrap();
        assert_eq!(r.x_shift, 0.0);
        assert_eq!(r.y_shift, 0.0);
    }

    #[test]
    fn coupling_range_enforced() {
        assert!(matches!(pointer_run(&protocol(0.6)), Err(Error::Config(_))));
        assert!(matches!(pointer_run(&protocol(-0.1)), Err(Error::Config(_))));
    }

    #[test]
    fn rank_two_projector_rejected() {
        let mut p = protocol(0.1);
        p.measured = identity(4);
        assert!(matches!(pointer_run(&p), Err(Error::IncompleteProjectors(_))));
    }

    #[test]
    fn richardson_exact_on_quadratic_in_h() {
        let hs = [0.04, 0.01, 0.0025];
        let f = |h: f64| C64::new(1.5 + 2.0 * h - 7.0 * h * h, -0.5 + h);
        let vals: Vec<C64> = hs.iter().map(|&h| f(h)).collect();
        let (v0, slope) = richardson(&hs, &vals);
        assert!((v0 - f(0.0)).norm() < 1e-12);
        assert!((slope - C64::new(2.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn fig5_estimate_matches_algebraic_weak_value() {
        let inst = presets::fig5_default().unwrap();
        let cs = inst.charges();
        let (i1, f1) = (ProductIndex::new(0, 1), ProductIndex::new(1, 0));
        let exact = weak_values(i1, f1, inst.state(), inst.unitary(), cs).unwrap().wv_forward;
        let est = estimate_weak_value(inst.state(), inst.unitary(), cs, i1, f1, &DEFAULT_SCHEDULE).unwrap();
        assert!((est.estimate - exact).norm() < 1e-4);
        let slope = convergence_order(&est, exact).unwrap();
        assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    }

    #[test]
    fn commuting_case_gives_conditional_probability() {
        let inst = presets::random_commuting(3).unwrap();
        let cs = inst.charges();
        let d = cs.dim();
        let (i1, f1) = (ProductIndex::new(0, d - 1), ProductIndex::new(d - 1, 0));
        let Ok(est) = estimate_weak_value(inst.state(), inst.unitary(), cs, i1, f1, &DEFAULT_SCHEDULE) else {
            return;
        };
        let exact = weak_values(i1, f1, inst.state(), inst.unitary(), cs).unwrap().wv_forward;
        assert!(exact.im.abs() < 1e-12);
        assert!((est.estimate - exact).norm() < 1e-4);
    }
}
