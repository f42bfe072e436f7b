//! Single-instance outputs: the quasiprobability table and the full SEP report.

use std::io::Write;

use serde::Serialize;

use super::config::InstanceConfig;
use crate::charges::ConservationReport;
use crate::error::Result;
use crate::instance::Instance;
use crate::numerics;
use crate::quasiprob::{QuasiDistribution, MAX_SYMMETRIZED_CHARGES};
use crate::sep::{self, ChrgAverage, ChrgFtReport, FluctuationReport, SurpAverage, TrajAverage, WitnessReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KdqKind {
    Forward,
    Reverse,
    Symmetrized,
}

/// One row per trajectory: `i_1A, i_1B, ..., f_cA, f_cB, re_weight, im_weight, conserving`.
pub fn write_kdq_csv<W: Write>(dist: &QuasiDistribution, w: W) -> Result<()> {
    let c = dist.charges().len();
    let mut out = csv::Writer::from_writer(w);
    let mut header = Vec::with_capacity(4 * c + 3);
    for stage in ["i", "f"] {
        for alpha in 1..=c {
            header.push(format!("{stage}_{alpha}A"));
            header.push(format!("{stage}_{alpha}B"));
        }
    }
    header.extend(["re_weight", "im_weight", "conserving"].map(String::from));
    out.write_record(&header)?;
    for (_, t, weight, conserving) in dist.rows() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for k in t.start.iter().chain(&t.end) {
            rec.push(k.a.to_string());
            rec.push(k.b.to_string());
        }
        rec.push(format!("{}", weight.re));
        rec.push(format!("{}", weight.im));
        rec.push(conserving.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn kdq_for(inst: &Instance, kind: KdqKind) -> Result<&QuasiDistribution> {
    match kind {
        KdqKind::Forward => inst.forward(),
        KdqKind::Reverse => inst.reverse(),
        KdqKind::Symmetrized => inst.symmetrized(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Normalization {
    pub forward: f64,
    pub reverse: f64,
    pub symmetrized: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizedAverages {
    pub surp_via_trajectories: f64,
    pub surp_via_relent: f64,
    pub traj_via_trajectories: num_complex::Complex64,
    pub traj_permutation_residual: f64,
}

/// Everything computed for one instance, as written by `nasep instance`.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub config: InstanceConfig,
    pub conservation: ConservationReport,
    pub normalization: Normalization,
    pub max_nonconserving_weight: f64,
    /// `(max |Im p|, min Re p)` for the forward distribution.
    pub nonclassicality: (f64, f64),
    pub avg_sigma_chrg: ChrgAverage,
    pub avg_sigma_surp: SurpAverage,
    pub avg_sigma_traj: TrajAverage,
    pub ft_chrg: ChrgFtReport,
    pub ft_surp: FluctuationReport,
    pub ft_traj: FluctuationReport,
    pub witness: WitnessReport,
    pub symmetrized: Option<SymmetrizedAverages>,
}

pub fn instance_report(config: &InstanceConfig) -> Result<InstanceReport> {
    let inst = config.build()?;
    let cs = inst.charges();
    let conservation = cs.check_conservation(inst.unitary(), numerics::get().conservation_tol)?;
    let fwd = inst.forward()?;
    let symmetrizable = cs.len() <= MAX_SYMMETRIZED_CHARGES;
    let normalization = Normalization {
        forward: fwd.normalization_error(),
        reverse: inst.reverse()?.normalization_error(),
        symmetrized: if symmetrizable {
            Some(inst.symmetrized()?.normalization_error())
        } else {
            None
        },
    };
    let symmetrized = if symmetrizable {
        let surp = sep::symmetrized_surp(&inst)?;
        let traj = sep::symmetrized_traj(&inst)?;
        Some(SymmetrizedAverages {
            surp_via_trajectories: surp.via_trajectories,
            surp_via_relent: surp.via_relent,
            traj_via_trajectories: traj.via_trajectories,
            traj_permutation_residual: traj.permutation_residual,
        })
    } else {
        None
    };
    Ok(InstanceReport {
        config: config.clone(),
        conservation,
        normalization,
        max_nonconserving_weight: fwd.max_nonconserving_weight(),
        nonclassicality: fwd.nonclassicality(),
        avg_sigma_chrg: sep::avg_sigma_chrg(&inst)?,
        avg_sigma_surp: sep::avg_sigma_surp(&inst, inst.alpha_surp)?,
        avg_sigma_traj: sep::avg_sigma_traj(&inst, config.branch)?,
        ft_chrg: sep::ft_chrg(&inst)?,
        ft_surp: sep::ft_surp(&inst, inst.alpha_surp)?,
        ft_traj: sep::ft_traj(&inst)?,
        witness: sep::contextuality_witness(&inst)?,
        symmetrized,
    })
}
