//! JSON configuration for instances and sweeps. Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::charges::{exp_i_hermitian, ChargeSet};
use crate::error::{Error, Result};
use crate::instance::{presets, qubit_unitary, Branch, Instance, StateSpec};
use crate::tensor::{identity, tensor_product, ComplexMatrix};
use crate::thermal::GgeSpec;

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("matrix must be square and nonempty".into()));
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitCharges {
    pub matrices: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A preset name (`pauli-xyz`, `pauli-xz`) or explicit local charge matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChargesConfig {
    Preset(String),
    Explicit(ExplicitCharges),
}

impl ChargesConfig {
    pub fn build(&self) -> Result<ChargeSet> {
        match self {
            ChargesConfig::Preset(name) => match name.as_str() {
                "pauli-xyz" => Ok(ChargeSet::pauli_xyz()),
                "pauli-xz" => Ok(ChargeSet::pauli_xz()),
                other => Err(Error::Config(format!(
                    "unknown charge preset {other:?} (expected pauli-xyz or pauli-xz)"
                ))),
            },
            ChargesConfig::Explicit(e) => {
                let mats = e.matrices.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                match &e.labels {
                    None => ChargeSet::from_matrices(mats),
                    Some(labels) if labels.len() == mats.len() => {
                        ChargeSet::new(labels.iter().cloned().zip(mats).collect())
                    }
                    Some(labels) => Err(Error::Config(format!(
                        "{} labels for {} charges",
                        labels.len(),
                        mats.len()
                    ))),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryConfig {
    /// `cos(theta) 1 + i sin(theta) SWAP`; two qubits only.
    Theta(f64),
    Matrix(MatrixJson),
    /// Seeded random member of the conserving family for the charge set.
    RandomSeed(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub charges: ChargesConfig,
    #[serde(rename = "beta_A")]
    pub beta_a: Vec<f64>,
    #[serde(rename = "beta_B")]
    pub beta_b: Vec<f64>,
    pub unitary: UnitaryConfig,
    #[serde(default = "product_state")]
    pub state: StateSpec,
    /// Zero-based charge index for the surprisal SEP's basis.
    #[serde(default)]
    pub alpha_surp: usize,
    #[serde(default)]
    pub branch: Branch,
    /// Multiplies the unitary by `exp(i eps X_01 (x) 1)`, which breaks conservation; for fault injection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary_perturbation: Option<f64>,
}

fn product_state() -> StateSpec {
    StateSpec::Product
}

/// `|0><1| + |1><0|` on subsystem A.
fn perturbation_generator(d: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(d, d);
    x[(0, 1)] = C64::new(1.0, 0.0);
    x[(1, 0)] = C64::new(1.0, 0.0);
    tensor_product(&x, &identity(d))
}

impl InstanceConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn pauli(a: [f64; 3], b: [f64; 3], theta: f64) -> Self {
        // preset order is z, y, x
        Self {
            charges: ChargesConfig::Preset("pauli-xyz".into()),
            beta_a: vec![a[2], a[1], a[0]],
            beta_b: vec![b[2], b[1], b[0]],
            unitary: UnitaryConfig::Theta(theta),
            state: StateSpec::Product,
            alpha_surp: 0,
            branch: Branch::Principal,
            unitary_perturbation: None,
        }
    }

    /// Same numbers as [`presets::fig3`]; betas given per axis `(x, y, z)`.
    pub fn fig3() -> Self {
        Self::pauli([0.7, 1.0, 0.5], [0.1, 0.2, 0.6], presets::FIG3_THETA)
    }

    pub fn fig4() -> Self {
        Self::pauli([1.0, 0.0, 1.0], [0.0, 1.6, 0.1], presets::FIG4_THETA)
    }

    pub fn fig5() -> Self {
        Self::pauli(
            [presets::FIG5_BETA_X_A, presets::FIG5_BETA_Y_A, 0.01],
            [0.01, 1.0, 0.01],
            presets::FIG5_THETA,
        )
    }

    pub fn build(&self) -> Result<Instance> {
        let charges = self.charges.build()?;
        let c = charges.len();
        for (name, b) in [("beta_A", &self.beta_a), ("beta_B", &self.beta_b)] {
            if b.len() != c {
                return Err(Error::Config(format!("{name} has {} entries for {c} charges", b.len())));
            }
        }
        let mut u = match &self.unitary {
            UnitaryConfig::Theta(theta) => {
                if charges.dim() != 2 {
                    return Err(Error::Config("unitary.theta needs qubit charges".into()));
                }
                if !theta.is_finite() {
                    return Err(Error::NonFinite("theta"));
                }
                qubit_unitary(*theta)
            }
            UnitaryConfig::Matrix(rows) => matrix_from_json(rows)?,
            UnitaryConfig::RandomSeed(seed) => charges.random_conserving_unitary(*seed),
        };
        if let Some(eps) = self.unitary_perturbation {
            if !eps.is_finite() {
                return Err(Error::NonFinite("unitary_perturbation"));
            }
            let kick = exp_i_hermitian(&(perturbation_generator(charges.dim()) * C64::new(eps, 0.0)))?;
            u *= kick;
        }
        Instance::new(
            charges,
            GgeSpec::new(self.beta_a.clone())?,
            GgeSpec::new(self.beta_b.clone())?,
            u,
            self.state,
        )?
        .with_alpha_surp(self.alpha_surp)
    }

    /// Set a swept parameter: `theta`, or `beta_A.<k>` / `beta_B.<k>` with `k` a charge label or index.
    pub fn set(&mut self, path: &str, value: f64) -> Result<()> {
        if path == "theta" {
            return match &mut self.unitary {
                UnitaryConfig::Theta(t) => {
                    *t = value;
                    Ok(())
                }
                _ => Err(Error::Config("path theta needs a unitary given by theta".into())),
            };
        }
        let (side, key) = path
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("unknown parameter path {path:?}")))?;
        let idx = self.resolve_charge(key)?;
        let target = match side {
            "beta_A" => &mut self.beta_a,
            "beta_B" => &mut self.beta_b,
            _ => return Err(Error::Config(format!("unknown parameter path {path:?}"))),
        };
        let slot = target
            .get_mut(idx)
            .ok_or_else(|| Error::Config(format!("path {path:?} is out of range")))?;
        *slot = value;
        Ok(())
    }

    fn resolve_charge(&self, key: &str) -> Result<usize> {
        let cs = self.charges.build()?;
        if let Some(k) = cs.index_of(key) {
            return Ok(k);
        }
        key.parse::<usize>()
            .ok()
            .filter(|&k| k < cs.len())
            .ok_or_else(|| Error::Config(format!("no charge labeled or indexed {key:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(path: &str, min: f64, max: f64, steps: usize) -> Self {
        Self {
            path: path.into(),
            min,
            max,
            steps,
        }
    }

    /// Evenly spaced values; the last one is exactly `max`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps < 2 {
            return Err(Error::Config(format!("axis {} needs at least 2 steps", self.path)));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::NonFinite("axis bounds"));
        }
        let last = self.steps - 1;
        Ok((0..self.steps)
            .map(|k| {
                if k == last {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / last as f64
                }
            })
            .collect())
    }
}

/// First-charge outcomes as `[a, b]` product indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub start: [usize; 2],
    pub end: [usize; 2],
}

/// Overrides for a figure sweep; omitted fields take the figure defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub base: Option<InstanceConfig>,
    #[serde(default)]
    pub axis1: Option<Axis>,
    #[serde(default)]
    pub axis2: Option<Axis>,
    /// Subset of the figure's output columns; emitted in the figure's fixed order.
    #[serde(default)]
    pub outputs: Option<Vec<String>>,
    #[serde(default)]
    pub out_path: Option<PathBuf>,
    /// Trajectory evaluated by the `Figure::Five` sweep.
    #[serde(default)]
    pub trajectory: Option<TrajectoryConfig>,
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub(crate) const HALF_PI: f64 = PI / 2.0;
