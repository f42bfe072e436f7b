//! The verification suite: every invariant checked on presets and seeded instances.

use serde::Serialize;

use super::config::{InstanceConfig, SweepConfig};
use super::sweep::{run_sweep, Figure};
use crate::charges::ProductIndex;
use crate::error::Result;
use crate::instance::{presets, Branch, Instance};
use crate::numerics;
use crate::pointer::{convergence_order, estimate_weak_value, DEFAULT_SCHEDULE};
use crate::quasiprob::{Trajectory, MAX_SYMMETRIZED_CHARGES};
use crate::sep;
use crate::tensor::diag_real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when every recorded value is at most the tolerance.
    AtMost,
    /// Pass when every recorded value is at least the tolerance.
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub pass: bool,
    pub comparison: Comparison,
    pub tolerance: f64,
    /// Largest (`at_most`) or smallest (`at_least`) recorded value.
    pub worst: Option<f64>,
    pub checked: usize,
    /// Labels of failing instances, with the value or error.
    pub failures: Vec<String>,
}

impl PropertyResult {
    fn new(name: &str, comparison: Comparison, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: true,
            comparison,
            tolerance,
            worst: None,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn at_most(name: &str, tol: f64) -> Self {
        Self::new(name, Comparison::AtMost, tol)
    }

    fn at_least(name: &str, tol: f64) -> Self {
        Self::new(name, Comparison::AtLeast, tol)
    }

    fn record(&mut self, label: &str, value: f64) {
        self.checked += 1;
        let (ok, worse) = match self.comparison {
            Comparison::AtMost => (value <= self.tolerance, self.worst.map_or(true, |w| value > w)),
            Comparison::AtLeast => (value >= self.tolerance, self.worst.map_or(true, |w| value < w)),
        };
        if worse || value.is_nan() {
            self.worst = Some(value);
        }
        if !ok {
            self.pass = false;
            self.failures.push(format!("{label}: {value:e}"));
        }
    }

    fn run(&mut self, label: &str, f: impl FnOnce() -> Result<f64>) {
        match f() {
            Ok(v) => self.record(label, v),
            Err(e) => {
                self.checked += 1;
                self.pass = false;
                self.failures.push(format!("{label}: {e}"));
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub seeds: u64,
    pub config: Option<InstanceConfig>,
    pub properties: Vec<PropertyResult>,
}

fn labeled(label: impl Into<String>, inst: Result<Instance>) -> (String, Result<Instance>) {
    (label.into(), inst)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn instance_checks(instances: &[(String, Result<Instance>)], props: &mut Vec<PropertyResult>) {
    let tol = numerics::get().conservation_tol;
    let mut conservation = PropertyResult::at_most("conservation_residual_over_threshold", 1.0);
    let mut norm = PropertyResult::at_most("kdq_normalization", 1e-9);
    let mut traj_ft = PropertyResult::at_most("trajectory_ft", 1e-8);
    let mut chrg_ft = PropertyResult::at_most("charge_ft_ledger", 1e-8);
    let mut surp_ft = PropertyResult::at_most("surprisal_ft", 1e-8);
    let mut chrg_avg = PropertyResult::at_most("charge_average_dual_path", 1e-8);
    let mut second_law = PropertyResult::at_least("charge_average_relent_nonnegative", -1e-9);
    let mut surp_avg = PropertyResult::at_most("surprisal_average_dual_path", 1e-8);
    let mut sym = PropertyResult::at_most("symmetrized_dual_paths", 1e-8);

    for (label, inst) in instances {
        let inst = match inst {
            Ok(i) => i,
            Err(e) => {
                conservation.run(label, || Err(clone_error(e)));
                continue;
            }
        };
        conservation.run(label, || {
            let r = inst.charges().check_conservation(inst.unitary(), tol)?;
            Ok(max_of(r.residuals.iter().zip(&r.thresholds).map(|(r, t)| r / t)))
        });
        norm.run(label, || {
            let mut errs = vec![
                inst.forward()?.normalization_error(),
                inst.reverse()?.normalization_error(),
            ];
            if inst.charges().len() <= MAX_SYMMETRIZED_CHARGES {
                errs.push(inst.symmetrized()?.normalization_error());
            }
            Ok(max_of(errs))
        });
        traj_ft.run(label, || {
            Ok(sep::ft_traj(inst)?.residual.max(sep::ft_traj_via_exponent(inst)?.residual))
        });
        chrg_ft.run(label, || {
            let r = sep::ft_chrg(inst)?;
            Ok(max_of([r.report.residual, r.kappa_trace_residual, r.lhs_trace_residual]))
        });
        surp_ft.run(label, || {
            let mut worst = 0.0f64;
            for alpha in 0..inst.charges().len() {
                worst = worst.max(sep::ft_surp(inst, alpha)?.residual);
            }
            Ok(worst)
        });
        let avg = sep::avg_sigma_chrg(inst);
        chrg_avg.run(label, || {
            let a = avg.as_ref().map_err(clone_error)?;
            Ok(max_of([
                (a.via_trajectories - a.via_flows).abs(),
                (a.via_flows - a.via_relent).abs(),
                a.imag_residue,
            ]))
        });
        second_law.run(label, || Ok(avg.as_ref().map_err(clone_error)?.via_relent));
        surp_avg.run(label, || {
            let mut worst = 0.0f64;
            for alpha in 0..inst.charges().len() {
                let a = sep::avg_sigma_surp(inst, alpha)?;
                worst = worst.max((a.via_trajectories - a.via_relent).abs());
            }
            Ok(worst)
        });
        if inst.charges().len() <= MAX_SYMMETRIZED_CHARGES {
            sym.run(label, || {
                let s = sep::symmetrized_surp(inst)?;
                let t = sep::symmetrized_traj(inst)?;
                Ok((s.via_trajectories - s.via_relent).abs().max(t.permutation_residual))
            });
        }
    }
    props.extend([conservation, norm, traj_ft, chrg_ft, surp_ft, chrg_avg, second_law, surp_avg, sym]);
}

/// Errors are not `Clone`; keep the message.
fn clone_error(e: &crate::Error) -> crate::Error {
    crate::Error::Reported(e.to_string())
}

fn special_checks(seeds: u64, props: &mut Vec<PropertyResult>) {
    let mut theta0 = PropertyResult::at_most("charge_ft_theta0", 1e-10);
    theta0.run("fig3(theta=0)", || {
        let r = sep::ft_chrg(&presets::fig3(0.0)?)?.report;
        Ok((r.closed_form_term - 1.0).norm().max(r.correction.norm()))
    });

    let mut diag = PropertyResult::at_most("surprisal_ft_diagonal_state", 1e-10);
    diag.run("fig4(beta_x=0)", || Ok(sep::ft_surp(&presets::fig4(0.0, 0.7)?, 0)?.correction.norm()));

    let mut collapse = PropertyResult::at_most("commuting_collapse", 1e-8);
    let mut conserving = PropertyResult::at_most("commuting_max_nonconserving_weight", 1e-10);
    let mut witness_commuting = PropertyResult::at_most("commuting_witness_count", 0.0);
    for seed in 0..2 * seeds {
        let label = format!("commuting-{seed}");
        let inst = presets::random_commuting(seed);
        collapse.run(&label, || {
            let inst = inst.as_ref().map_err(clone_error)?;
            let mut worst = 0.0f64;
            for s in sep::samples(inst, Branch::Principal)? {
                if s.weight.norm() <= 1e-10 {
                    continue;
                }
                let traj = s.sigma_traj.map_or(f64::INFINITY, |t| (t - s.sigma_chrg).norm());
                worst = worst.max((s.sigma_chrg - s.sigma_surp).abs()).max(traj);
            }
            Ok(worst)
        });
        conserving.run(&label, || Ok(inst.as_ref().map_err(clone_error)?.forward()?.max_nonconserving_weight()));
        diag.run(&label, || Ok(sep::ft_surp(inst.as_ref().map_err(clone_error)?, 0)?.correction.norm()));
        witness_commuting.run(&label, || {
            Ok(sep::contextuality_witness(inst.as_ref().map_err(clone_error)?)?.entries.len() as f64)
        });
    }

    let mut violation = PropertyResult::at_least("fig3_max_nonconserving_weight", 1e-3);
    violation.run("fig3", || Ok(presets::fig3(presets::FIG3_THETA)?.forward()?.max_nonconserving_weight()));

    let mut pure_formula = PropertyResult::at_most("pure_trajectory_average_formula", 1e-7);
    let mut pure_sign = PropertyResult::at_least("pure_trajectory_average_real_part", -1e-9);
    let mut phase = PropertyResult::at_most("pure_phase_average_residue", 1e-9);
    for seed in 0..seeds {
        let label = format!("pure-{seed}");
        let avg = presets::pure_pauli(seed, 0.5).and_then(|i| sep::avg_sigma_traj(&i, Branch::PureDecomposed));
        pure_formula.run(&label, || {
            let a = avg.as_ref().map_err(clone_error)?;
            Ok((a.via_trajectories.re - a.via_pure_formula.unwrap_or(f64::NAN)).abs())
        });
        pure_sign.run(&label, || Ok(avg.as_ref().map_err(clone_error)?.via_trajectories.re));
        phase.run(&label, || {
            let a = avg.as_ref().map_err(clone_error)?;
            let p = a.phase_average.unwrap_or(num_complex::Complex64::new(f64::NAN, 0.0));
            Ok(p.im.abs().max((p.re - a.via_trajectories.im).abs()))
        });
    }

    let mut fig5 = PropertyResult::at_least("fig5_trajectory_abs_im_sigma", 1e-3);
    fig5.run("fig5", || {
        let inst = presets::fig5_default()?;
        let (i1, f1) = (ProductIndex::new(0, 1), ProductIndex::new(0, 0));
        let t = Trajectory {
            start: vec![i1; 3],
            end: vec![f1; 3],
        };
        let s = sep::sigma_traj(&t, inst.state(), inst.unitary(), inst.charges(), Branch::Principal)?;
        Ok(s.map_or(f64::NAN, |s| s.im.abs()))
    });

    let mut no_current = PropertyResult::at_most("no_current_limit", 1e-9);
    for seed in 0..5 {
        no_current.run(&format!("no-current-{seed}"), || {
            let inst = presets::no_current(seed)?;
            let witness = sep::contextuality_witness(&inst)?;
            Ok(max_of([
                sep::avg_sigma_chrg(&inst)?.via_trajectories.abs(),
                sep::avg_sigma_surp(&inst, 0)?.via_trajectories.abs(),
                sep::avg_sigma_traj(&inst, Branch::Principal)?.via_trajectories.norm(),
                (sep::ft_chrg(&inst)?.report.lhs - 1.0).norm(),
                (sep::ft_surp(&inst, 0)?.lhs - 1.0).norm(),
                (sep::ft_traj(&inst)?.lhs - 1.0).norm(),
                witness.entries.len() as f64,
                witness.abs_imag_average,
            ]))
        });
    }

    let g_min = DEFAULT_SCHEDULE.iter().copied().fold(f64::INFINITY, f64::min);
    let pointer_tol = (10.0 * g_min * g_min).max(1e-4);
    let mut pointer = PropertyResult::at_most("weak_pointer_error", pointer_tol);
    let mut order = PropertyResult::at_most("weak_pointer_order_deviation", 0.2);
    for seed in 0..seeds {
        let label = format!("random-{seed}");
        let run = presets::random(seed).and_then(|inst| {
            let (i1, f1) = strongest_pair(&inst);
            let cs = inst.charges();
            let exact = sep::weak_values(i1, f1, inst.state(), inst.unitary(), cs)?.wv_forward;
            let est = estimate_weak_value(inst.state(), inst.unitary(), cs, i1, f1, &DEFAULT_SCHEDULE)?;
            Ok((est.clone(), exact, convergence_order(&est, exact)))
        });
        pointer.run(&label, || {
            let (est, exact, _) = run.as_ref().map_err(clone_error)?;
            Ok((est.estimate - exact).norm())
        });
        order.run(&label, || {
            let (_, _, slope) = run.as_ref().map_err(clone_error)?;
            Ok(slope.map_or(f64::NAN, |s| (s - 2.0).abs()))
        });
    }

    let mut degenerate = PropertyResult::at_most("degenerate_closed_form", 1e-12);
    let mut degenerate_gap = PropertyResult::at_least("degenerate_surp_chrg_gap", 1e-3);
    let demo = sep::degenerate_demo(&diag_real(&[1.0, 1.0, 2.0]), 0.7, -0.4);
    degenerate.run("qutrit", || Ok(demo.as_ref().map_err(clone_error)?.closed_form_error));
    degenerate_gap.run("qutrit", || Ok(demo.as_ref().map_err(clone_error)?.surp_chrg_gap));

    props.extend([
        theta0,
        diag,
        collapse,
        conserving,
        witness_commuting,
        violation,
        pure_formula,
        pure_sign,
        phase,
        fig5,
        no_current,
        pointer,
        order,
        degenerate,
        degenerate_gap,
    ]);
}

/// First-charge outcome pair with the largest `|Tr(U^dag Pi_f U Pi_i rho)|`.
pub fn strongest_pair(inst: &Instance) -> (ProductIndex, ProductIndex) {
    let cs = inst.charges();
    let d = cs.dim();
    let n = cs.joint_dim();
    let w = cs.product_basis(0);
    let u = w.adjoint() * inst.unitary() * w;
    let amp = w.adjoint() * inst.state().matrix() * inst.unitary().adjoint() * w;
    let mut best = (0, 0, -1.0);
    for i in 0..n {
        for f in 0..n {
            let v = (u[(f, i)] * amp[(i, f)]).norm();
            if v > best.2 {
                best = (i, f, v);
            }
        }
    }
    (ProductIndex::from_flat(best.0, d), ProductIndex::from_flat(best.1, d))
}

fn sweep_checks(props: &mut Vec<PropertyResult>) {
    let mut negative = PropertyResult::at_most("fig4_corner_x_dominant", -1e-3);
    let mut positive = PropertyResult::at_least("fig4_corner_z_dominant", 1e-3);
    let mut dual = PropertyResult::at_most("fig4_dual_path", 1e-8);
    match run_sweep(Figure::Four, &SweepConfig::default()) {
        Ok(t) => {
            let at = |x: f64, z: f64| {
                t.rows
                    .iter()
                    .find(|r| r[0] == x && r[1] == z)
                    .map_or(f64::NAN, |r| r[3])
            };
            negative.record("beta_A.x=2,beta_A.z=0.02", at(2.0, 0.02));
            positive.record("beta_A.x=0.02,beta_A.z=2", at(0.02, 2.0));
            let residual = t.column("residual").unwrap_or_default();
            dual.record("grid", max_of(residual));
        }
        Err(e) => {
            for p in [&mut negative, &mut positive, &mut dual] {
                p.run("grid", || Err(clone_error(&e)));
            }
        }
    }

    let mut determinism = PropertyResult::at_most("fig3_sweep_byte_identical", 0.0);
    determinism.run("fig3", || {
        let cfg = SweepConfig::default();
        let a = run_sweep(Figure::Three, &cfg)?.to_csv_string()?;
        let b = run_sweep(Figure::Three, &cfg)?.to_csv_string()?;
        Ok(if a == b { 0.0 } else { 1.0 })
    });
    props.extend([negative, positive, dual, determinism]);
}

/// Run the suite on presets, `seeds` random instances, and an optional user instance.
pub fn verify(config: Option<&InstanceConfig>, seeds: u64) -> VerifyReport {
    let mut instances = vec![
        labeled("fig3", presets::fig3(presets::FIG3_THETA)),
        labeled("fig4", presets::fig4(2.0, 0.05)),
        labeled("fig5", presets::fig5_default()),
    ];
    instances.extend((0..seeds).map(|s| labeled(format!("random-{s}"), presets::random(s))));
    if let Some(cfg) = config {
        instances.push(labeled("config", cfg.build()));
    }
    let mut properties = Vec::new();
    instance_checks(&instances, &mut properties);
    special_checks(seeds, &mut properties);
    sweep_checks(&mut properties);
    VerifyReport {
        pass: properties.iter().all(|p| p.pass),
        seeds,
        config: config.cloned(),
        properties,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        let mut p = PropertyResult::at_most("x", 1.0);
        p.record("a", 0.5);
        p.record("b", 0.7);
        assert!(p.pass);
        assert_eq!(p.worst, Some(0.7));
        p.record("c", f64::NAN);
        assert!(!p.pass);
        let mut q = PropertyResult::at_least("y", 1.0);
        q.record("a", 2.0);
        q.record("b", 0.5);
        assert!(!q.pass);
        assert_eq!(q.failures.len(), 1);
    }

    #[test]
    fn small_suite_passes() {
        let report = verify(None, 2);
        let failing: Vec<_> = report.properties.iter().filter(|p| !p.pass).collect();
        assert!(report.pass, "{failing:#?}");
    }

    #[test]
    fn fault_injection_is_named() {
        let mut cfg = InstanceConfig::fig3();
        cfg.unitary_perturbation = Some(1e-3);
        let report = verify(Some(&cfg), 1);
        assert!(!report.pass);
        let cons = report
            .properties
            .iter()
            .find(|p| p.name == "conservation_residual_over_threshold")
            .unwrap();
        assert!(!cons.pass);
        assert!(cons.failures.iter().any(|f| f.starts_with("config")));
    }
}
