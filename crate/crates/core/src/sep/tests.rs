use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::*;
use crate::charges::ProductIndex;
use crate::instance::presets;
use crate::tensor::{diag_real, identity, pauli_z, tensor_product, trace};
use crate::thermal::GgeSpec;

const SEEDS: u64 = 25;

fn wrap(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

fn shipped() -> Vec<Instance> {
    let mut out = vec![
        presets::fig3(presets::FIG3_THETA).unwrap(),
        presets::fig4(2.0, 0.05).unwrap(),
        presets::fig5_default().unwrap(),
    ];
    out.extend((0..SEEDS).map(|s| presets::random(s).unwrap()));
    out
}

#[test]
fn charge_sep_hand_value() {
    let cs = ChargeSet::from_matrices(vec![pauli_z()]).unwrap();
    let t = Trajectory {
        start: vec![ProductIndex::new(0, 1)],
        end: vec![ProductIndex::new(1, 0)],
    };
    let ba = GgeSpec::new(vec![1.0]).unwrap();
    let bb = GgeSpec::new(vec![0.0]).unwrap();
    assert!((sigma_chrg(&t, &cs, &ba, &bb) + 2.0).abs() < 1e-15);
    assert!((kappa(&t, &cs, &ba, &bb) + 2.0).abs() < 1e-15);
}

#[test]
fn kappa_matches_charge_sep_on_conserving_trajectories() {
    let inst = presets::fig3(0.4).unwrap();
    for (_, t, _, conserving) in inst.forward().unwrap().rows() {
        if conserving {
            let (a, b) = (inst.beta_a(), inst.beta_b());
            let cs = inst.charges();
            assert!((kappa(&t, cs, a, b) - sigma_chrg(&t, cs, a, b)).abs() < 1e-12);
        }
    }
}

#[test]
fn surprisal_sentinels() {
    assert_eq!(surprisal_value(0.5, 0.0), f64::INFINITY);
    assert_eq!(surprisal_value(0.0, 0.5), f64::NEG_INFINITY);
    assert!(surprisal_value(0.0, 0.0).is_nan());
    assert!((surprisal_value(0.4, 0.1) - 4f64.ln()).abs() < 1e-15);
}

#[test]
fn commuting_collapse() {
    let floor = 1e-10;
    for seed in 0..50 {
        let inst = presets::random_commuting(seed).unwrap();
        for s in samples(&inst, Branch::Principal).unwrap() {
            if s.weight.norm() <= floor {
                continue;
            }
            assert!((s.sigma_chrg - s.sigma_surp).abs() < 1e-8, "seed {seed}");
            let traj = s.sigma_traj.expect("defined on supported trajectory");
            assert!((traj - C64::new(s.sigma_chrg, 0.0)).norm() < 1e-8, "seed {seed}");
        }
    }
}

#[test]
fn charge_average_three_paths() {
    for inst in shipped() {
        let avg = avg_sigma_chrg(&inst).unwrap();
        assert!((avg.via_trajectories - avg.via_flows).abs() < 1e-8);
        assert!((avg.via_flows - avg.via_relent).abs() < 1e-8);
        assert!(avg.via_relent > -1e-9);
        assert!(avg.imag_residue < 1e-9);
    }
}

#[test]
fn charge_average_grows_with_theta() {
    let vals: Vec<f64> = [0.0, 0.3, 0.6, 0.9]
        .iter()
        .map(|&t| avg_sigma_chrg(&presets::fig3(t).unwrap()).unwrap().via_flows)
        .collect();
    assert!(vals[0].abs() < 1e-12);
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn surprisal_average_dual_path_and_sign_flip() {
    for inst in shipped() {
        for alpha in 0..inst.charges().len() {
            let avg = avg_sigma_surp(&inst, alpha).unwrap();
            assert!((avg.via_trajectories - avg.via_relent).abs() < 1e-8);
        }
    }
    let cold_x = avg_sigma_surp(&presets::fig4(2.0, 0.05).unwrap(), 0).unwrap();
    assert!(cold_x.via_relent < -1e-3);
    let cold_z = avg_sigma_surp(&presets::fig4(0.05, 2.0).unwrap(), 0).unwrap();
    assert!(cold_z.via_relent > 1e-3);
}

#[test]
fn charge_ft_ledger() {
    for inst in shipped() {
        let r = ft_chrg(&inst).unwrap();
        assert!(r.report.residual < 1e-8);
        assert!(r.kappa_trace_residual < 1e-8);
        assert!(r.lhs_trace_residual < 1e-8);
    }
    let r = ft_chrg(&presets::fig3(0.0).unwrap()).unwrap();
    assert!((r.report.closed_form_term - 1.0).norm() < 1e-10);
    assert!(r.report.correction.norm() < 1e-10);
    let small = ft_chrg(&presets::fig3(0.2).unwrap()).unwrap().report.correction.norm();
    let large = ft_chrg(&presets::fig3(0.6).unwrap()).unwrap().report.correction.norm();
    assert!(large > small);
}

#[test]
fn surprisal_ft() {
    for inst in shipped() {
        for alpha in 0..inst.charges().len() {
            assert!(ft_surp(&inst, alpha).unwrap().residual < 1e-8);
        }
    }
    // fig3 state is diagonal in the sigma_z product basis, which is charge 0
    let r = ft_surp(&presets::fig4(0.0, 0.7).unwrap(), 0).unwrap();
    assert!(r.correction.norm() < 1e-10);
    let r = ft_surp(&presets::fig4(1.0, 0.3).unwrap(), 0).unwrap();
    assert!(r.correction.norm() > 1e-4);
}

#[test]
fn trajectory_ft_both_ways() {
    for inst in shipped() {
        assert!(ft_traj(&inst).unwrap().residual < 1e-8);
        assert!(ft_traj_via_exponent(&inst).unwrap().residual < 1e-8);
    }
}

#[test]
fn no_current_limit() {
    for seed in 0..5 {
        let inst = presets::no_current(seed).unwrap();
        assert!(avg_sigma_chrg(&inst).unwrap().via_trajectories.abs() < 1e-9);
        assert!(avg_sigma_surp(&inst, 0).unwrap().via_trajectories.abs() < 1e-9);
        assert!(avg_sigma_traj(&inst, Branch::Principal).unwrap().via_trajectories.norm() < 1e-9);
        assert!((ft_chrg(&inst).unwrap().report.lhs - 1.0).norm() < 1e-9);
        assert!((ft_surp(&inst, 0).unwrap().lhs - 1.0).norm() < 1e-9);
        assert!((ft_traj(&inst).unwrap().lhs - 1.0).norm() < 1e-9);
        assert!(contextuality_witness(&inst).unwrap().is_empty());
    }
}

#[test]
fn pure_state_trajectory_average() {
    for seed in 0..SEEDS {
        let inst = presets::pure_pauli(seed, 0.5).unwrap();
        let avg = avg_sigma_traj(&inst, Branch::PureDecomposed).unwrap();
        let formula = avg.via_pure_formula.unwrap();
        assert!((avg.via_trajectories.re - formula).abs() < 1e-7, "seed {seed}");
        assert!(avg.via_trajectories.re > -1e-9);
        let phases = avg.phase_average.unwrap();
        assert!(phases.im.abs() < 1e-9);
        assert!((phases.re - avg.via_trajectories.im).abs() < 1e-9);
        assert!(!avg.convention_dependent);
    }
}

#[test]
fn mixed_state_rejects_pure_branch() {
    let inst = presets::fig3(0.3).unwrap();
    assert!(matches!(
        avg_sigma_traj(&inst, Branch::PureDecomposed),
        Err(Error::MixedState(_))
    ));
    assert!(avg_sigma_traj(&inst, Branch::Principal).unwrap().convention_dependent);
}

/// `Tr(A B C D)` from dense projectors, independent of the amplitude shortcut.
fn dense_weak_values(inst: &Instance, i: ProductIndex, f: ProductIndex) -> (C64, C64) {
    let cs = inst.charges();
    let pi = cs.product_projector(0, i).unwrap();
    let pf = cs.product_projector(0, f).unwrap();
    let u = inst.unitary();
    let ud = u.adjoint();
    let rho = inst.state().matrix();
    let heis_f = &ud * &pf * u;
    let heis_i = u * &pi * &ud;
    let wf = trace(&(&heis_f * &pi * rho)) / trace(&(&heis_f * rho));
    let wr = trace(&(&heis_i * &pf * rho)) / trace(&(&heis_i * rho));
    (wf, wr)
}

#[test]
fn weak_values_match_dense_traces_and_phase() {
    let mut insts = shipped();
    insts.extend((0..5).map(|s| presets::pure_pauli(s, 0.7).unwrap()));
    for inst in insts {
        let cs = inst.charges();
        let d = cs.dim();
        let n = cs.joint_dim();
        let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::Principal).unwrap();
        let decomposed = if inst.is_pure() {
            Some(TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::PureDecomposed).unwrap())
        } else {
            None
        };
        for i in 0..n {
            for f in 0..n {
                let (pi, pf) = (ProductIndex::from_flat(i, d), ProductIndex::from_flat(f, d));
                let Ok(wv) = weak_values(pi, pf, inst.state(), inst.unitary(), cs) else {
                    continue;
                };
                let (wf, wr) = dense_weak_values(&inst, pi, pf);
                assert!((wv.wv_forward - wf).norm() < 1e-10 * (1.0 + wf.norm()));
                assert!((wv.wv_reverse - wr).norm() < 1e-10 * (1.0 + wr.norm()));
                // a vanishing transition amplitude <f|U|i> leaves both phases arbitrary
                if wv.wv_forward.norm() < 1e-9 || wv.wv_reverse.norm() < 1e-9 {
                    continue;
                }
                if let Some(s) = amps.sigma(i, f) {
                    assert!(wrap(s.im - (wv.phi_f - wv.phi_r)).abs() < 1e-8);
                }
                if let Some(dec) = &decomposed {
                    if amps.sigma(i, f).is_some() {
                        let e8 = dec.pure_phase(i, f).unwrap();
                        assert!(wrap(e8 - (wv.phi_f - wv.phi_r)).abs() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn weak_values_trivial_dynamics() {
    let inst = presets::fig3(0.0).unwrap();
    let cs = inst.charges();
    for i in 0..4 {
        for f in 0..4 {
            let (pi, pf) = (ProductIndex::from_flat(i, 2), ProductIndex::from_flat(f, 2));
            let wv = weak_values(pi, pf, inst.state(), inst.unitary(), cs).unwrap();
            let expected = if i == f { 1.0 } else { 0.0 };
            assert!((wv.wv_forward - expected).norm() < 1e-12);
            assert!(wv.phi_f.abs() < 1e-12);
        }
    }
}

#[test]
fn fig5_witness() {
    let inst = presets::fig5_default().unwrap();
    let (i1, f1) = (ProductIndex::new(0, 1), ProductIndex::new(0, 0));
    let s = sigma_traj(
        &Trajectory {
            start: vec![i1, i1, i1],
            end: vec![f1, f1, f1],
        },
        inst.state(),
        inst.unitary(),
        inst.charges(),
        Branch::Principal,
    )
    .unwrap()
    .unwrap();
    assert!(s.im.abs() > 1e-3, "Im sigma_traj = {}", s.im);
    let report = contextuality_witness(&inst).unwrap();
    assert!(report.contains(i1, f1));
    let anomalous = (0..4).flat_map(|i| (0..4).map(move |f| (i, f))).any(|(i, f)| {
        let (pi, pf) = (ProductIndex::from_flat(i, 2), ProductIndex::from_flat(f, 2));
        weak_values(pi, pf, inst.state(), inst.unitary(), inst.charges())
            .map(|wv| wv.wv_forward.norm() > 1e-9 && wv.phi_f.abs() > 1e-6)
            .unwrap_or(false)
    });
    assert!(anomalous);
}

#[test]
fn witness_empty_for_commuting_and_identity() {
    for seed in 0..10 {
        assert!(contextuality_witness(&presets::random_commuting(seed).unwrap()).unwrap().is_empty());
    }
    assert!(contextuality_witness(&presets::fig3(0.0).unwrap()).unwrap().is_empty());
}

#[test]
fn symmetrized_single_charge_matches_plain() {
    let cs = ChargeSet::from_matrices(vec![pauli_z()]).unwrap();
    let inst = Instance::new(
        cs,
        GgeSpec::new(vec![0.8]).unwrap(),
        GgeSpec::new(vec![-0.3]).unwrap(),
        crate::instance::qubit_unitary(0.6),
        crate::instance::StateSpec::Product,
    )
    .unwrap();
    let plain = avg_sigma_surp(&inst, 0).unwrap();
    let sym = symmetrized_surp(&inst).unwrap();
    assert!((plain.via_trajectories - sym.via_trajectories).abs() < 1e-12);
    let plain = avg_sigma_traj(&inst, Branch::Principal).unwrap();
    let sym = symmetrized_traj(&inst).unwrap();
    assert!((plain.via_trajectories - sym.via_trajectories).norm() < 1e-12);
}

#[test]
fn symmetrized_dual_paths_and_relabeling() {
    for inst in shipped().into_iter().take(8) {
        let surp = symmetrized_surp(&inst).unwrap();
        assert!((surp.via_trajectories - surp.via_relent).abs() < 1e-8);
        let traj = symmetrized_traj(&inst).unwrap();
        assert!(traj.permutation_residual < 1e-8);
        assert!(traj.permutation_checked > 0);

        let c = inst.charges().len();
        let order: Vec<usize> = (0..c).rev().collect();
        let relabeled = inst.relabeled(&order).unwrap();
        let surp2 = symmetrized_surp(&relabeled).unwrap();
        assert!((surp.via_trajectories - surp2.via_trajectories).abs() < 1e-10);
        let traj2 = symmetrized_traj(&relabeled).unwrap();
        assert!((traj.via_trajectories - traj2.via_trajectories).norm() < 1e-10);
    }
}

#[test]
fn degenerate_demo_closed_form() {
    let q = diag_real(&[1.0, 1.0, 2.0]);
    let demo = degenerate_demo(&q, 0.7, -0.4).unwrap();
    assert_eq!(demo.ranks, vec![1, 2]);
    assert!(demo.closed_form_error < 1e-12);
    assert!(demo.surp_chrg_gap > 0.5);
    assert!(demo.rank_multiplied_deviation > 1e-3);
}

#[test]
fn degenerate_maximally_mixed_gives_rank_ratio() {
    let q = diag_real(&[1.0, 1.0, 2.0]);
    let spaces = eigenprojectors(&q, 1e-9).unwrap();
    let mut projectors = Vec::new();
    for a in &spaces {
        for b in &spaces {
            projectors.push(tensor_product(&a.projector, &b.projector));
        }
    }
    let rho = DensityOperator::new(identity(9) / C64::new(9.0, 0.0)).unwrap();
    // descending eigenvalues give ranks [1, 2], so joint ranks 1, 2, 2, 4
    let s = sigma_surp_degenerate_demo(3, 0, &projectors, &rho).unwrap();
    assert!((s - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn degenerate_rank_one_agrees_with_plain() {
    let inst = presets::fig3(0.5).unwrap();
    let cs = inst.charges();
    let projectors: Vec<_> = (0..4)
        .map(|k| cs.product_projector(0, ProductIndex::from_flat(k, 2)).unwrap())
        .collect();
    for t in inst.forward().unwrap().rows().map(|r| r.1).take(40) {
        let (i, f) = (flat(t.start[0], cs), flat(t.end[0], cs));
        let demo = sigma_surp_degenerate_demo(i, f, &projectors, inst.state()).unwrap();
        let plain = sigma_surp(&t, 0, inst.state(), cs).unwrap();
        assert!((demo - plain).abs() < 1e-12);
    }
}

#[test]
fn incomplete_projectors_rejected() {
    let rho = DensityOperator::new(identity(2) / C64::new(2.0, 0.0)).unwrap();
    let p0 = diag_real(&[1.0, 0.0]);
    assert!(matches!(
        sigma_surp_degenerate_demo(0, 0, &[p0], &rho),
        Err(Error::IncompleteProjectors(_))
    ));
}
