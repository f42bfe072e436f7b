//! Parameter sweeps behind the three two-qubit figures, written as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use super::config::{Axis, InstanceConfig, SweepConfig, TrajectoryConfig, HALF_PI};
use crate::charges::ProductIndex;
use crate::error::{Error, Result};
use crate::instance::{Branch, Instance};
use crate::par;
use crate::sep::{self, TrajectoryAmplitudes};

/// Tolerance every sweep cell re-checks on its forward distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Charge FT terms and average charge SEP against `theta`.
    Three,
    /// Average surprisal SEP over `(beta_x^A, beta_z^A)`.
    Four,
    /// Trajectory SEP of one trajectory over `(beta_x^A, beta_y^A)`.
    Five,
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3" => Ok(Figure::Three),
            "4" => Ok(Figure::Four),
            "5" => Ok(Figure::Five),
            other => Err(Error::Config(format!("unknown figure {other:?} (expected 3, 4 or 5)"))),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Figure::Three => 3,
            Figure::Four => 4,
            Figure::Five => 5,
        };
        write!(f, "{n}")
    }
}

impl Figure {
    /// Output columns in their fixed order.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Figure::Three => &[
                "re_exp_kappa",
                "im_exp_kappa",
                "re_correction",
                "im_correction",
                "avg_sigma_chrg",
                "ft_residual",
            ],
            Figure::Four => &["avg_sigma_surp_traj", "avg_sigma_surp_relent", "residual"],
            Figure::Five => &["re_sigma_traj", "im_sigma_traj", "phi_F", "phi_R"],
        }
    }

    pub fn default_base(self) -> InstanceConfig {
        match self {
            Figure::Three => InstanceConfig::fig3(),
            Figure::Four => InstanceConfig::fig4(),
            Figure::Five => InstanceConfig::fig5(),
        }
    }

    pub fn default_axes(self) -> (Axis, Option<Axis>) {
        match self {
            Figure::Three => (Axis::new("theta", 0.0, HALF_PI, 65), None),
            Figure::Four => (
                Axis::new("beta_A.x", 0.02, 2.0, 41),
                Some(Axis::new("beta_A.z", 0.02, 2.0, 41)),
            ),
            Figure::Five => (
                Axis::new("beta_A.x", 0.02, 2.0, 41),
                Some(Axis::new("beta_A.y", -1.0, 1.0, 41)),
            ),
        }
    }

    fn axis_count(self) -> usize {
        match self {
            Figure::Three => 1,
            Figure::Four | Figure::Five => 2,
        }
    }
}

/// Numeric table with a header; rows follow the sweep grid, axis 1 outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// CSV with floats in shortest round-trip form (`NaN` for undefined cells).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }
}

pub(crate) fn check_normalization(inst: &Instance) -> Result<()> {
    let err = inst.forward()?.normalization_error();
    if err > NORMALIZATION_TOL {
        return Err(Error::Normalization(err));
    }
    Ok(())
}

fn figure3_row(inst: &Instance) -> Result<Vec<f64>> {
    let ft = sep::ft_chrg(inst)?;
    let avg = sep::avg_sigma_chrg(inst)?;
    let r = ft.report;
    Ok(vec![
        r.closed_form_term.re,
        r.closed_form_term.im,
        r.correction.re,
        r.correction.im,
        avg.via_trajectories,
        r.residual,
    ])
}

fn figure4_row(inst: &Instance) -> Result<Vec<f64>> {
    let avg = sep::avg_sigma_surp(inst, inst.alpha_surp)?;
    Ok(vec![
        avg.via_trajectories,
        avg.via_relent,
        (avg.via_trajectories - avg.via_relent).abs(),
    ])
}

fn figure5_row(inst: &Instance, traj: TrajectoryConfig) -> Result<Vec<f64>> {
    let cs = inst.charges();
    let d = cs.dim();
    let start = ProductIndex::new(traj.start[0], traj.start[1]);
    let end = ProductIndex::new(traj.end[0], traj.end[1]);
    if [start.a, start.b, end.a, end.b].iter().any(|&k| k >= d) {
        return Err(Error::Config(format!("trajectory indices must be below {d}")));
    }
    let amps = TrajectoryAmplitudes::new(inst.state(), inst.unitary(), cs, 0, Branch::Principal)?;
    let sigma = amps
        .sigma(start.flat(d), end.flat(d))
        .unwrap_or(C64::new(f64::NAN, f64::NAN));
    // weak values vanish, and their phases are undefined, when <f|U|i> = 0
    let (phi_f, phi_r) = match sep::weak_values(start, end, inst.state(), inst.unitary(), cs) {
        Ok(wv) => (
            if wv.wv_forward.norm() > 1e-12 { wv.phi_f } else { f64::NAN },
            if wv.wv_reverse.norm() > 1e-12 { wv.phi_r } else { f64::NAN },
        ),
        Err(Error::ZeroPostselection(_)) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(vec![sigma.re, sigma.im, phi_f, phi_r])
}

/// Default trajectory for the `Figure::Five` sweep: `|01> -> |00>` in the first charge's basis.
pub const FIG5_TRAJECTORY: TrajectoryConfig = TrajectoryConfig {
    start: [0, 1],
    end: [0, 0],
};

pub fn run_sweep(figure: Figure, cfg: &SweepConfig) -> Result<Table> {
    let base = cfg.base.clone().unwrap_or_else(|| figure.default_base());
    let (default1, default2) = figure.default_axes();
    let axis1 = cfg.axis1.clone().unwrap_or(default1);
    let axis2 = match (figure.axis_count(), &cfg.axis2) {
        (1, None) => None,
        (1, Some(_)) => return Err(Error::Config(format!("figure {figure} sweeps a single axis"))),
        (_, Some(a)) => Some(a.clone()),
        (_, None) => default2,
    };
    let trajectory = cfg.trajectory.unwrap_or(FIG5_TRAJECTORY);

    let all = figure.columns();
    let selected: Vec<usize> = match &cfg.outputs {
        None => (0..all.len()).collect(),
        Some(names) => {
            for n in names {
                if !all.contains(&n.as_str()) {
                    return Err(Error::Config(format!(
                        "figure {figure} has no output {n:?} (available: {})",
                        all.join(", ")
                    )));
                }
            }
            (0..all.len()).filter(|&k| names.iter().any(|n| n == all[k])).collect()
        }
    };

    let v1 = axis1.values()?;
    let v2 = match &axis2 {
        Some(a) => Some(a.values()?),
        None => None,
    };
    let mut points: Vec<Vec<f64>> = Vec::new();
    for &x in &v1 {
        match &v2 {
            Some(ys) => points.extend(ys.iter().map(|&y| vec![x, y])),
            None => points.push(vec![x]),
        }
    }
    let paths: Vec<&str> = std::iter::once(axis1.path.as_str())
        .chain(axis2.as_ref().map(|a| a.path.as_str()))
        .collect();
    // fail fast on bad paths before spawning the grid
    let mut probe = base.clone();
    for (p, v) in paths.iter().zip(&points[0]) {
        probe.set(p, *v)?;
    }

    let cell = |k: usize| -> Result<Vec<f64>> {
        let mut cfg = base.clone();
        for (p, v) in paths.iter().zip(&points[k]) {
            cfg.set(p, *v)?;
        }
        let inst = cfg.build()?;
        check_normalization(&inst)?;
        let values = match figure {
            Figure::Three => figure3_row(&inst)?,
            Figure::Four => figure4_row(&inst)?,
            Figure::Five => figure5_row(&inst, trajectory)?,
        };
        let mut row = points[k].clone();
        row.extend(selected.iter().map(|&j| values[j]));
        Ok(row)
    };
    let rows = par::map_collect(points.len(), cell)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let header = paths
        .iter()
        .map(|p| p.to_string())
        .chain(selected.iter().map(|&j| all[j].to_string()))
        .collect();
    Ok(Table { header, rows })
}
