//! A fully specified two-system setup: charges, temperatures, unitary and initial state.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charges::{exp_i_hermitian, ChargeSet};
use crate::error::{dim_err, Error, Result};
use crate::numerics;
use crate::quasiprob::{self, QuasiDistribution};
use crate::random::random_hermitian;
use crate::tensor::{self, herm_eig, identity, tensor_product, ComplexMatrix};
use crate::thermal::{gge_state, DensityOperator, GgeSpec};

/// How the global initial state is built from the two GGE marginals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Product,
    PureWithGgeMarginals { seed: u64 },
}

/// Branch convention for the imaginary part of the trajectory SEP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Principal,
    PureDecomposed,
}

/// `cos(theta) 1 + i sin(theta) SWAP` on two qubits.
pub fn qubit_unitary(theta: f64) -> ComplexMatrix {
    identity(4) * C64::new(theta.cos(), 0.0) + tensor::swap(2) * C64::new(0.0, theta.sin())
}

/// Betas for the `pauli-xyz` preset, given per axis.
pub fn pauli_betas(x: f64, y: f64, z: f64) -> GgeSpec {
    GgeSpec { betas: vec![z, y, x] }
}

#[derive(Debug)]
pub struct Instance {
    charges: ChargeSet,
    beta_a: GgeSpec,
    beta_b: GgeSpec,
    unitary: ComplexMatrix,
    state: DensityOperator,
    state_spec: StateSpec,
    /// Basis index for the surprisal SEP.
    pub alpha_surp: usize,
    forward: OnceLock<QuasiDistribution>,
    reverse: OnceLock<QuasiDistribution>,
    symmetrized: OnceLock<QuasiDistribution>,
    symmetrized_reverse: OnceLock<QuasiDistribution>,
}

impl Clone for Instance {
    fn clone(&self) -> Self {
        Self {
            charges: self.charges.clone(),
            beta_a: self.beta_a.clone(),
            beta_b: self.beta_b.clone(),
            unitary: self.unitary.clone(),
            state: self.state.clone(),
            state_spec: self.state_spec,
            alpha_surp: self.alpha_surp,
            forward: OnceLock::new(),
            reverse: OnceLock::new(),
            symmetrized: OnceLock::new(),
            symmetrized_reverse: OnceLock::new(),
        }
    }
}

fn cached<'a>(
    cell: &'a OnceLock<QuasiDistribution>,
    build: impl FnOnce() -> Result<QuasiDistribution>,
) -> Result<&'a QuasiDistribution> {
    if let Some(d) = cell.get() {
        return Ok(d);
    }
    let d = build()?;
    Ok(cell.get_or_init(|| d))
}

impl Instance {
    pub fn new(
        charges: ChargeSet,
        beta_a: GgeSpec,
        beta_b: GgeSpec,
        unitary: ComplexMatrix,
        state_spec: StateSpec,
    ) -> Result<Self> {
        let n = charges.joint_dim();
        if unitary.nrows() != n || unitary.ncols() != n {
            return Err(dim_err(
                format!("{n}x{n} unitary"),
                format!("{}x{}", unitary.nrows(), unitary.ncols()),
            ));
        }
        tensor::ensure_finite(unitary.clone(), "unitary")?;
        let res = tensor::unitarity_residual(&unitary);
        if res > numerics::get().herm_tol.max(1e-10) {
            return Err(Error::NonUnitary(res));
        }
        let rho_a = gge_state(&charges, &beta_a)?;
        let rho_b = gge_state(&charges, &beta_b)?;
        let state = match state_spec {
            StateSpec::Product => {
                DensityOperator::from_trusted(tensor_product(rho_a.matrix(), rho_b.matrix()))
            }
            StateSpec::PureWithGgeMarginals { seed } => {
                DensityOperator::pure(&purification(&rho_a, &rho_b, seed)?)?
            }
        };
        Ok(Self {
            charges,
            beta_a,
            beta_b,
            unitary,
            state,
            state_spec,
            alpha_surp: 0,
            forward: OnceLock::new(),
            reverse: OnceLock::new(),
            symmetrized: OnceLock::new(),
            symmetrized_reverse: OnceLock::new(),
        })
    }

    pub fn with_alpha_surp(mut self, alpha: usize) -> Result<Self> {
        self.charges.charge(alpha)?;
        self.alpha_surp = alpha;
        Ok(self)
    }

    pub fn charges(&self) -> &ChargeSet {
        &self.charges
    }

    pub fn beta_a(&self) -> &GgeSpec {
        &self.beta_a
    }

    pub fn beta_b(&self) -> &GgeSpec {
        &self.beta_b
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn state_spec(&self) -> StateSpec {
        self.state_spec
    }

    pub fn final_state(&self) -> DensityOperator {
        self.state.evolve(&self.unitary)
    }

    /// GGE marginal of system A (equal to the reduced state for both state specs).
    pub fn gge_a(&self) -> Result<DensityOperator> {
        gge_state(&self.charges, &self.beta_a)
    }

    pub fn gge_b(&self) -> Result<DensityOperator> {
        gge_state(&self.charges, &self.beta_b)
    }

    /// `rho_GGE^A (x) rho_GGE^B`, which is the initial state in the product case.
    pub fn reference_state(&self) -> Result<DensityOperator> {
        Ok(DensityOperator::from_trusted(tensor_product(
            self.gge_a()?.matrix(),
            self.gge_b()?.matrix(),
        )))
    }

    pub fn is_pure(&self) -> bool {
        self.state.impurity() <= 1e-10
    }

    pub fn forward(&self) -> Result<&QuasiDistribution> {
        cached(&self.forward, || {
            quasiprob::forward_kdq(&self.state, &self.unitary, &self.charges)
        })
    }

    pub fn reverse(&self) -> Result<&QuasiDistribution> {
        cached(&self.reverse, || {
            quasiprob::reverse_kdq(&self.state, &self.unitary, &self.charges)
        })
    }

    pub fn symmetrized(&self) -> Result<&QuasiDistribution> {
        cached(&self.symmetrized, || {
            quasiprob::symmetrized_kdq(&self.state, &self.unitary, &self.charges)
        })
    }

    pub fn symmetrized_reverse(&self) -> Result<&QuasiDistribution> {
        cached(&self.symmetrized_reverse, || {
            quasiprob::symmetrized_reverse_kdq(&self.state, &self.unitary, &self.charges)
        })
    }

    /// Same physical setup with the charge list reordered (`order[new] = old`).
    pub fn relabeled(&self, order: &[usize]) -> Result<Self> {
        let pick = |spec: &GgeSpec| GgeSpec {
            betas: order.iter().map(|&k| spec.betas[k]).collect(),
        };
        let mut out = Self::new(
            self.charges.permuted(order)?,
            pick(&self.beta_a),
            pick(&self.beta_b),
            self.unitary.clone(),
            StateSpec::Product,
        )?;
        out.state = self.state.clone();
        out.state_spec = self.state_spec;
        out.alpha_surp = order
            .iter()
            .position(|&k| k == self.alpha_surp)
            .unwrap_or(0);
        Ok(out)
    }

    /// Replace the unitary, keeping everything else.
    pub fn with_unitary(&self, unitary: ComplexMatrix) -> Result<Self> {
        let mut out = Self::new(
            self.charges.clone(),
            self.beta_a.clone(),
            self.beta_b.clone(),
            unitary,
            StateSpec::Product,
        )?;
        out.state = self.state.clone();
        out.state_spec = self.state_spec;
        out.alpha_surp = self.alpha_surp;
        Ok(out)
    }
}

/// Pure state whose reduced states are `rho_a` and `rho_b`.
///
/// Pairs the eigenvectors of the two marginals in ascending eigenvalue order,
/// `|psi> = sum_k sqrt(p_k) e^{i phi_k} |a_k>|b_k>`, with seeded phases. Needs
/// equal spectra, since both reduced states of a pure state share theirs.
pub fn purification(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
    seed: u64,
) -> Result<DVector<C64>> {
    let ea = herm_eig(rho_a.matrix())?;
    let eb = herm_eig(rho_b.matrix())?;
    if ea.dim() != eb.dim() {
        return Err(dim_err(ea.dim(), eb.dim()));
    }
    let gap = ea
        .values
        .iter()
        .zip(&eb.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if gap > 1e-9 {
        return Err(Error::SpectrumMismatch(gap));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ea.dim();
    let mut psi = DVector::from_element(d * d, tensor::ZERO);
    for k in 0..d {
        let amp = C64::from_polar(ea.values[k].max(0.0).sqrt(), rng.gen_range(-PI..PI));
        psi += ea.vector(k).kronecker(&eb.vector(k)) * amp;
    }
    Ok(psi)
}

/// Seeded generators for test and verification instances.
pub mod presets {
    use super::*;

    pub const FIG3_THETA: f64 = PI / 5.0;
    pub const FIG4_THETA: f64 = PI / 5.0;
    pub const FIG5_THETA: f64 = 0.5;
    /// Swept values used when a single figure-5 instance is needed.
    pub const FIG5_BETA_X_A: f64 = 1.0;
    pub const FIG5_BETA_Y_A: f64 = 0.05;

    /// Pauli triple with the figure-3 temperatures.
    pub fn fig3(theta: f64) -> Result<Instance> {
        Instance::new(
            ChargeSet::pauli_xyz(),
            pauli_betas(0.7, 1.0, 0.5),
            pauli_betas(0.1, 0.2, 0.6),
            qubit_unitary(theta),
            StateSpec::Product,
        )
    }

    /// Pauli triple with swept `beta_x^A`, `beta_z^A`.
    pub fn fig4(beta_x_a: f64, beta_z_a: f64) -> Result<Instance> {
        Instance::new(
            ChargeSet::pauli_xyz(),
            pauli_betas(beta_x_a, 0.0, beta_z_a),
            pauli_betas(0.0, 1.6, 0.1),
            qubit_unitary(FIG4_THETA),
            StateSpec::Product,
        )
    }

    /// Pauli triple with swept `beta_x^A`, `beta_y^A`.
    pub fn fig5(beta_x_a: f64, beta_y_a: f64) -> Result<Instance> {
        Instance::new(
            ChargeSet::pauli_xyz(),
            pauli_betas(beta_x_a, beta_y_a, 0.01),
            pauli_betas(0.01, 1.0, 0.01),
            qubit_unitary(FIG5_THETA),
            StateSpec::Product,
        )
    }

    pub fn fig5_default() -> Result<Instance> {
        fig5(FIG5_BETA_X_A, FIG5_BETA_Y_A)
    }

    fn uniform_betas(rng: &mut ChaCha8Rng, c: usize) -> GgeSpec {
        GgeSpec {
            betas: (0..c).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        }
    }

    /// Random Hermitian charges (`d` in {2, 3}), random conserving unitary, product GGE state.
    pub fn random(seed: u64) -> Result<Instance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
        let d = if rng.gen_bool(0.5) { 2 } else { 3 };
        let c = if d == 2 {
            rng.gen_range(1..=3)
        } else {
            rng.gen_range(1..=2)
        };
        let charges = loop {
            let mats = (0..c).map(|_| random_hermitian(&mut rng, d)).collect();
            if let Ok(cs) = ChargeSet::from_matrices(mats) {
                if cs.charges().iter().all(|q| q.spectral_gap > 1e-3) {
                    break cs;
                }
            }
        };
        let beta_a = uniform_betas(&mut rng, c);
        let beta_b = uniform_betas(&mut rng, c);
        let u = charges.random_conserving_unitary(rng.gen());
        Instance::new(charges, beta_a, beta_b, u, StateSpec::Product)
    }

    /// Random diagonal (commuting) charges, block-diagonal Haar unitary, product GGE state.
    pub fn random_commuting(seed: u64) -> Result<Instance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
        let d = if rng.gen_bool(0.5) { 2 } else { 3 };
        let c = if d == 2 { 1 } else { rng.gen_range(1..=2) };
        let charges = loop {
            let mats = (0..c)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    tensor::diag_real(&v)
                })
                .collect();
            if let Ok(cs) = ChargeSet::from_matrices(mats) {
                if cs.charges().iter().all(|q| q.spectral_gap > 1e-2) {
                    break cs;
                }
            }
        };
        let beta_a = uniform_betas(&mut rng, c);
        let beta_b = uniform_betas(&mut rng, c);
        let u = charges.random_commuting_block_unitary(rng.gen())?;
        Instance::new(charges, beta_a, beta_b, u, StateSpec::Product)
    }

    /// Unitary commuting with every local charge: a global phase, or local charge exponentials for commuting sets.
    pub fn no_current_unitary(charges: &ChargeSet, seed: u64) -> Result<ComplexMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = charges.joint_dim();
        let mut gen = identity(n) * C64::new(rng.gen_range(-PI..PI), 0.0);
        if charges.is_commuting() {
            for alpha in 0..charges.len() {
                gen += charges.local_charge_a(alpha)? * C64::new(rng.gen_range(-PI..PI), 0.0);
                gen += charges.local_charge_b(alpha)? * C64::new(rng.gen_range(-PI..PI), 0.0);
            }
        }
        exp_i_hermitian(&gen)
    }

    /// Figure-3 temperatures with a no-current unitary.
    pub fn no_current(seed: u64) -> Result<Instance> {
        let base = fig3(0.0)?;
        let u = no_current_unitary(base.charges(), seed)?;
        base.with_unitary(u)
    }

    /// Pauli triple in a pure global state whose marginals are GGEs.
    ///
    /// `beta_B` is a signed permutation of `beta_A`, so both marginals share a spectrum.
    pub fn pure_pauli(seed: u64, theta: f64) -> Result<Instance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0003);
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut order = [0usize, 1, 2];
        for k in (1..3).rev() {
            order.swap(k, rng.gen_range(0..=k));
        }
        let b: Vec<f64> = order
            .iter()
            .map(|&k| if rng.gen_bool(0.5) { a[k] } else { -a[k] })
            .collect();
        Instance::new(
            ChargeSet::pauli_xyz(),
            GgeSpec { betas: a },
            GgeSpec { betas: b },
            qubit_unitary(theta),
            StateSpec::PureWithGgeMarginals { seed },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{frobenius, partial_trace, Keep};

    #[test]
    fn qubit_unitary_cases() {
        assert!(frobenius(&(qubit_unitary(0.0) - identity(4))) < 1e-15);
        let half = qubit_unitary(PI / 2.0);
        let want = tensor::swap(2) * C64::new(0.0, 1.0);
        assert!(frobenius(&(half - want)) < 1e-15);
        let cs = ChargeSet::pauli_xyz();
        for k in 0..10 {
            let u = qubit_unitary(0.37 * k as f64);
            assert!(cs.check_conservation(&u, 1e-9).unwrap().pass);
        }
    }

    #[test]
    fn swap_family_matches_qubit_unitary_up_to_phase() {
        // exp(i theta SWAP) = cos theta 1 + i sin theta SWAP exactly, since SWAP^2 = 1
        let cs = ChargeSet::pauli_xyz();
        for theta in [0.01, 0.2, 1.1] {
            let u = cs.swap_family_unitary(theta, &[0.0; 3], 0.0).unwrap();
            assert!(frobenius(&(u - qubit_unitary(theta))) < 1e-13);
        }
    }

    #[test]
    fn presets_build() {
        let f3 = presets::fig3(presets::FIG3_THETA).unwrap();
        assert_eq!(f3.state().dim(), 4);
        assert!(f3.state().min_eigenvalue() > 0.0);
        assert!((tensor::trace(f3.state().matrix()).re - 1.0).abs() < 1e-12);
        presets::fig4(2.0, 0.05).unwrap();
        presets::fig5_default().unwrap();
        for seed in 0..10 {
            let r = presets::random(seed).unwrap();
            assert!(r.charges().check_conservation(r.unitary(), 1e-9).unwrap().pass);
            let c = presets::random_commuting(seed).unwrap();
            assert!(c.charges().is_commuting());
        }
    }

    #[test]
    fn purified_state_has_gge_marginals() {
        for seed in 0..5 {
            let inst = presets::pure_pauli(seed, 0.5).unwrap();
            assert!(inst.is_pure());
            let rho = inst.state().matrix();
            let ra = partial_trace(rho, (2, 2), Keep::A).unwrap();
            let rb = partial_trace(rho, (2, 2), Keep::B).unwrap();
            assert!(frobenius(&(ra - inst.gge_a().unwrap().into_matrix())) < 1e-12);
            assert!(frobenius(&(rb - inst.gge_b().unwrap().into_matrix())) < 1e-12);
        }
        let cs = ChargeSet::pauli_xyz();
        let err = Instance::new(
            cs,
            pauli_betas(1.0, 0.0, 0.0),
            pauli_betas(0.2, 0.0, 0.0),
            identity(4),
            StateSpec::PureWithGgeMarginals { seed: 1 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::SpectrumMismatch(_)));
    }

    #[test]
    fn no_current_unitaries_commute_with_local_charges() {
        let inst = presets::no_current(3).unwrap();
        let cs = inst.charges();
        for alpha in 0..cs.len() {
            let qa = cs.local_charge_a(alpha).unwrap();
            assert!(frobenius(&tensor::commutator(inst.unitary(), &qa)) < 1e-12);
        }
        let comm = presets::random_commuting(4).unwrap();
        let u = presets::no_current_unitary(comm.charges(), 9).unwrap();
        for alpha in 0..comm.charges().len() {
            let qa = comm.charges().local_charge_a(alpha).unwrap();
            assert!(frobenius(&tensor::commutator(&u, &qa)) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_unitaries() {
        let cs = ChargeSet::pauli_xyz();
        let err = Instance::new(
            cs.clone(),
            GgeSpec::zeros(3),
            GgeSpec::zeros(3),
            identity(4) * C64::new(2.0, 0.0),
            StateSpec::Product,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonUnitary(_)));
        assert!(Instance::new(cs, GgeSpec::zeros(3), GgeSpec::zeros(3), identity(2), StateSpec::Product).is_err());
    }

    #[test]
    fn distributions_are_cached() {
        let inst = presets::fig3(0.3).unwrap();
        let a = inst.forward().unwrap() as *const _;
        let b = inst.forward().unwrap() as *const _;
        assert_eq!(a, b);
        assert!(inst.reverse().unwrap().normalization_error() < 1e-9);
    }
}
