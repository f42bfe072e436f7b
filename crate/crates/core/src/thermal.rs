//! Generalized Gibbs states, dephasing channels and entropies.
//!
//! Logarithms are natural throughout.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::charges::ChargeSet;
use crate::error::{dim_err, Error, Result};
use crate::numerics;
use crate::tensor::{
    self, frobenius, herm_eig, hermiticity_residual, partial_trace, tensor_product, ComplexMatrix,
    Keep,
};

/// Largest spectral radius of `sum_alpha beta_alpha Q_alpha` accepted by [`gge_state`].
pub const EXPONENT_GUARD: f64 = 700.0;

/// Generalized inverse temperatures, one per charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GgeSpec {
    pub betas: Vec<f64>,
}

impl GgeSpec {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("inverse temperature"));
        }
        Ok(Self { betas })
    }

    pub fn zeros(c: usize) -> Self {
        Self { betas: vec![0.0; c] }
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `sum_alpha beta_alpha Q_alpha` on a single system.
    pub fn exponent(&self, cs: &ChargeSet) -> Result<ComplexMatrix> {
        if self.betas.len() != cs.len() {
            return Err(dim_err(format!("{} betas", cs.len()), self.betas.len()));
        }
        let d = cs.dim();
        let mut h = tensor::zeros(d, d);
        for (q, &b) in cs.charges().iter().zip(&self.betas) {
            h += &q.matrix * C64::new(b, 0.0);
        }
        Ok(h)
    }
}

/// Validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validate Hermiticity, unit trace and positivity to `1e-10`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        const TOL: f64 = 1e-10;
        if matrix.nrows() != matrix.ncols() {
            return Err(dim_err("square matrix", format!("{}x{}", matrix.nrows(), matrix.ncols())));
        }
        tensor::ensure_finite(matrix.clone(), "density matrix")?;
        let herm = hermiticity_residual(&matrix);
        if herm > TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = tensor::trace(&matrix);
        if (tr - tensor::ONE).norm() > TOL {
            return Err(Error::Config(format!("density matrix trace {tr} is not 1")));
        }
        let min = herm_eig(&matrix)?.values[0];
        if min < -TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(Self { matrix })
    }

    /// Skip validation; for matrices positive and normalized by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Pure state `|psi><psi|`, normalizing `psi`.
    pub fn pure(psi: &nalgebra::DVector<C64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NonFinite("state vector"));
        }
        let v = psi / C64::new(n, 0.0);
        Ok(Self::from_trusted(tensor::outer(&v, &v)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        herm_eig(&self.matrix).map_or(f64::NAN, |e| e.values[0])
    }

    /// Reduced state of one factor of `C^d (x) C^d`.
    pub fn reduced(&self, d: usize, keep: Keep) -> Result<Self> {
        Ok(Self::from_trusted(partial_trace(&self.matrix, (d, d), keep)?))
    }

    /// `1 - Tr(rho^2)`; zero for pure states.
    pub fn impurity(&self) -> f64 {
        1.0 - tensor::trace_product(&self.matrix, &self.matrix).re
    }

    /// `U rho U^dagger`.
    pub fn evolve(&self, u: &ComplexMatrix) -> Self {
        Self::from_trusted(tensor::conjugate(u, &self.matrix))
    }
}

/// `exp(-sum_alpha beta_alpha Q_alpha) / Z` on a single system.
pub fn gge_state(cs: &ChargeSet, spec: &GgeSpec) -> Result<DensityOperator> {
    let h = spec.exponent(cs)?;
    let eig = herm_eig(&h)?;
    let radius = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if radius > EXPONENT_GUARD {
        return Err(Error::Overflow(radius));
    }
    // shift by the smallest eigenvalue so the largest weight is exactly 1
    let shift = eig.values[0];
    let z: f64 = eig.values.iter().map(|x| (-(x - shift)).exp()).sum();
    Ok(DensityOperator::from_trusted(
        eig.map(|x| (-(x - shift)).exp() / z),
    ))
}

/// `rho_GGE^A (x) rho_GGE^B`.
pub fn initial_product_state(
    cs: &ChargeSet,
    spec_a: &GgeSpec,
    spec_b: &GgeSpec,
) -> Result<DensityOperator> {
    let a = gge_state(cs, spec_a)?;
    let b = gge_state(cs, spec_b)?;
    Ok(DensityOperator::from_trusted(tensor_product(
        a.matrix(),
        b.matrix(),
    )))
}

/// `Phi_alpha(M) = sum_k Pi_{alpha,k} M Pi_{alpha,k}` for any joint-space matrix.
pub fn dephase_matrix(m: &ComplexMatrix, cs: &ChargeSet, alpha: usize) -> Result<ComplexMatrix> {
    cs.charge(alpha)?;
    let n = cs.joint_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(dim_err(format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    let w = cs.product_basis(alpha);
    let in_basis = w.adjoint() * m * w;
    let diag = ComplexMatrix::from_diagonal(&in_basis.diagonal());
    Ok(w * diag * w.adjoint())
}

/// Dephasing channel in the product eigenbasis of charge `alpha`.
pub fn dephase(rho: &DensityOperator, cs: &ChargeSet, alpha: usize) -> Result<DensityOperator> {
    Ok(DensityOperator::from_trusted(dephase_matrix(
        rho.matrix(),
        cs,
        alpha,
    )?))
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let eig = herm_eig(rho.matrix()).expect("density operators are Hermitian");
    let s: f64 = eig.values.iter().map(|&x| -xlogx(x)).sum();
    s.max(0.0)
}

/// `D(rho || sigma) = Tr(rho (log rho - log sigma))`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(dim_err(rho.dim(), sigma.dim()));
    }
    if frobenius(&(rho.matrix() - sigma.matrix())) <= 1e-9 {
        return Ok(0.0);
    }
    let cutoff = numerics::get().eig_cutoff;
    let se = herm_eig(sigma.matrix())?;
    for (k, &lam) in se.values.iter().enumerate() {
        if lam <= cutoff {
            let v = se.vector(k);
            let weight = tensor::sandwich(&v, rho.matrix(), &v).re;
            if weight > cutoff {
                return Err(Error::SupportViolation(format!(
                    "rho has weight {weight:e} on an eigenvector of sigma with eigenvalue {lam:e}"
                )));
            }
        }
    }
    let log_sigma = se.map(|x| if x > cutoff { x.ln() } else { 0.0 });
    let re = herm_eig(rho.matrix())?;
    let neg_entropy: f64 = re.values.iter().map(|&x| xlogx(x)).sum();
    let cross = tensor::trace_product(rho.matrix(), &log_sigma).re;
    Ok(neg_entropy - cross)
}

/// Inverse of a full-rank Hermitian matrix via its eigensystem.
pub fn hermitian_inverse(m: &ComplexMatrix, min_eig: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    if eig.values[0] <= min_eig {
        return Err(Error::SingularState(eig.values[0]));
    }
    Ok(eig.map(|x| 1.0 / x))
}

/// `Phi_alpha(rho)^{-1} - rho^{-1}`.
pub fn coherent_difference(
    rho: &DensityOperator,
    cs: &ChargeSet,
    alpha: usize,
) -> Result<ComplexMatrix> {
    const FULL_RANK: f64 = 1e-10;
    let rho_inv = hermitian_inverse(rho.matrix(), FULL_RANK)?;
    let deph = dephase(rho, cs, alpha)?;
    let deph_inv = hermitian_inverse(deph.matrix(), FULL_RANK)?;
    Ok(tensor::hermitian_part(&(deph_inv - rho_inv)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charges::exp_i_hermitian;
    use crate::tensor::{diag_real, identity, pauli_x, pauli_z};
    use crate::testutil::{haar_unitary, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    fn random_state(seed: u64, n: usize) -> DensityOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(&mut rng, n);
        let m = &g * g.adjoint();
        let tr = tensor::trace(&m);
        DensityOperator::new(m / tr).unwrap()
    }

    fn z_only() -> ChargeSet {
        ChargeSet::from_matrices(vec![pauli_z()]).unwrap()
    }

    fn xz() -> ChargeSet {
        ChargeSet::from_matrices(vec![pauli_x(), pauli_z()]).unwrap()
    }

    #[test]
    fn gge_infinite_temperature() {
        let cs = ChargeSet::pauli_xyz();
        let rho = gge_state(&cs, &GgeSpec::zeros(3)).unwrap();
        assert!(close(rho.matrix(), &(identity(2) * C64::new(0.5, 0.0)), 1e-15));
        let joint = initial_product_state(&cs, &GgeSpec::zeros(3), &GgeSpec::zeros(3)).unwrap();
        assert!(close(joint.matrix(), &(identity(4) * C64::new(0.25, 0.0)), 1e-15));
    }

    #[test]
    fn gge_single_charge_matches_boltzmann() {
        let b = 0.8f64;
        let rho = gge_state(&z_only(), &GgeSpec::new(vec![b]).unwrap()).unwrap();
        let z = (-b).exp() + b.exp();
        let want = diag_real(&[(-b).exp() / z, b.exp() / z]);
        assert!(close(rho.matrix(), &want, 1e-14));
    }

    #[test]
    fn gge_two_charges() {
        let rho = gge_state(&xz(), &GgeSpec::new(vec![1.0, 1.0]).unwrap()).unwrap();
        let s = 2f64.sqrt();
        let z = s.exp() + (-s).exp();
        let e = herm_eig(rho.matrix()).unwrap();
        assert!((e.values[0] - (-s).exp() / z).abs() < 1e-14);
        assert!((e.values[1] - s.exp() / z).abs() < 1e-14);
        // the dominant eigenvector is the -1 eigenvector of (x + z)/sqrt2
        let axis = (pauli_x() + pauli_z()) * C64::new(1.0 / s, 0.0);
        let v = e.vector(1);
        assert!((tensor::sandwich(&v, &axis, &v).re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gge_overflow_guard() {
        let err = gge_state(&z_only(), &GgeSpec::new(vec![701.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
        let ok = gge_state(&z_only(), &GgeSpec::new(vec![699.0]).unwrap()).unwrap();
        assert!((tensor::trace(ok.matrix()).re - 1.0).abs() < 1e-15);
        assert!(GgeSpec::new(vec![f64::NAN]).is_err());
        assert!(gge_state(&z_only(), &GgeSpec::zeros(2)).is_err());
    }

    #[test]
    fn product_state_marginals() {
        let cs = ChargeSet::pauli_xyz();
        let a = GgeSpec::new(vec![0.5, 1.0, 0.7]).unwrap();
        let b = GgeSpec::new(vec![0.6, 0.2, 0.1]).unwrap();
        let rho = initial_product_state(&cs, &a, &b).unwrap();
        assert!(DensityOperator::new(rho.matrix().clone()).is_ok());
        assert!(rho.min_eigenvalue() > 0.0);
        let ra = rho.reduced(2, Keep::A).unwrap();
        assert!(close(ra.matrix(), gge_state(&cs, &a).unwrap().matrix(), 1e-14));
        let rb = rho.reduced(2, Keep::B).unwrap();
        assert!(close(rb.matrix(), gge_state(&cs, &b).unwrap().matrix(), 1e-14));
    }

    #[test]
    fn gge_commutes_only_when_expected() {
        let cs = ChargeSet::pauli_xyz();
        let single = gge_state(&cs, &GgeSpec::new(vec![0.0, 0.0, 0.9]).unwrap()).unwrap();
        let x = &cs.charge(2).unwrap().matrix;
        assert!(frobenius(&tensor::commutator(single.matrix(), x)) < 1e-14);
        let z = &cs.charge(0).unwrap().matrix;
        assert!(frobenius(&tensor::commutator(single.matrix(), z)) > 1e-3);
        let mixed = gge_state(&cs, &GgeSpec::new(vec![0.4, 0.0, 0.9]).unwrap()).unwrap();
        assert!(frobenius(&tensor::commutator(mixed.matrix(), x)) > 1e-3);
    }

    #[test]
    fn dephasing_properties() {
        let cs = ChargeSet::pauli_xyz();
        for seed in 0..5 {
            let rho = random_state(seed, 4);
            for alpha in 0..3 {
                let d1 = dephase(&rho, &cs, alpha).unwrap();
                let d2 = dephase(&d1, &cs, alpha).unwrap();
                assert!(close(d1.matrix(), d2.matrix(), 1e-13));
                assert!((tensor::trace(d1.matrix()).re - 1.0).abs() < 1e-13);
                // the Kraus-sum definition agrees with the basis-change shortcut
                let mut kraus = tensor::zeros(4, 4);
                for k in 0..4 {
                    let p = cs
                        .product_projector(alpha, crate::charges::ProductIndex::from_flat(k, 2))
                        .unwrap();
                    kraus += &p * rho.matrix() * &p;
                }
                assert!(close(d1.matrix(), &kraus, 1e-13));
                // relative entropy of coherence
                let d = relative_entropy(&rho, &d1).unwrap();
                let gap = von_neumann_entropy(&d1) - von_neumann_entropy(&rho);
                assert!((d - gap).abs() < 1e-10 && d >= -1e-12);
            }
        }
    }

    #[test]
    fn dephase_z_zeroes_offdiagonals() {
        let cs = ChargeSet::pauli_xyz();
        let rho = random_state(9, 4);
        let d = dephase(&rho, &cs, 0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r == c {
                    assert!((d.matrix()[(r, r)] - rho.matrix()[(r, r)]).norm() < 1e-14);
                } else {
                    assert!(d.matrix()[(r, c)].norm() < 1e-14);
                }
            }
        }
        let diag = DensityOperator::new(diag_real(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        assert!(close(dephase(&diag, &cs, 0).unwrap().matrix(), diag.matrix(), 1e-15));
    }

    #[test]
    fn entropies() {
        let psi = nalgebra::DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        assert!(von_neumann_entropy(&DensityOperator::pure(&psi).unwrap()).abs() < 1e-12);
        let mixed = DensityOperator::new(identity(4) * C64::new(0.25, 0.0)).unwrap();
        assert!((von_neumann_entropy(&mixed) - 4f64.ln()).abs() < 1e-14);
        let rho = gge_state(&z_only(), &GgeSpec::new(vec![1.0]).unwrap()).unwrap();
        let p = (-1f64).exp() / (1f64.exp() + (-1f64).exp());
        let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((von_neumann_entropy(&rho) - h).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(4, 4);
        let u = haar_unitary(&mut rng, 4);
        assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rho.evolve(&u))).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_cases() {
        let rho = random_state(1, 4);
        assert_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0);
        let sigma = random_state(2, 4);
        let d = relative_entropy(&rho, &sigma).unwrap();
        assert!(d > 0.0);
        // qubit diagonal case reduces to the classical formula
        let p = DensityOperator::new(diag_real(&[0.3, 0.7])).unwrap();
        let q = DensityOperator::new(diag_real(&[0.6, 0.4])).unwrap();
        let want = 0.3 * (0.3f64 / 0.6).ln() + 0.7 * (0.7f64 / 0.4).ln();
        assert!((relative_entropy(&p, &q).unwrap() - want).abs() < 1e-14);
        let pure0 = DensityOperator::new(diag_real(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            relative_entropy(&p, &pure0),
            Err(Error::SupportViolation(_))
        ));
        // pure in its own support is fine
        assert!((relative_entropy(&pure0, &q).unwrap() + 0.6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn coherent_difference_cases() {
        let cs = ChargeSet::pauli_xyz();
        let diag = DensityOperator::new(diag_real(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        assert!(frobenius(&coherent_difference(&diag, &cs, 0).unwrap()) < 1e-10);
        let mixed = DensityOperator::new(identity(4) * C64::new(0.25, 0.0)).unwrap();
        for alpha in 0..3 {
            assert!(frobenius(&coherent_difference(&mixed, &cs, alpha).unwrap()) < 1e-10);
        }
        let rho = initial_product_state(
            &cs,
            &GgeSpec::new(vec![0.5, 0.0, 1.0]).unwrap(),
            &GgeSpec::new(vec![0.1, 1.6, 0.0]).unwrap(),
        )
        .unwrap();
        let delta = coherent_difference(&rho, &cs, 0).unwrap();
        assert!(frobenius(&delta) > 1e-3);
        assert!(hermiticity_residual(&delta) < 1e-12);

        let pure = DensityOperator::new(diag_real(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            coherent_difference(&pure, &cs, 0),
            Err(Error::SingularState(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        assert!(DensityOperator::new(diag_real(&[0.5, 0.6])).is_err());
        assert!(matches!(
            DensityOperator::new(diag_real(&[1.5, -0.5])),
            Err(Error::NegativeEigenvalue(_))
        ));
        let u = exp_i_hermitian(&pauli_x()).unwrap();
        assert!(DensityOperator::new(u).is_err());
    }
}
