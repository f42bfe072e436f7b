//! Charge sets, product-basis projectors and conservation checks.
//!
//! A charge is a nondegenerate Hermitian observable on a single system. Both
//! systems carry identical copies of every charge. Eigenvalues of a charge are
//! stored in descending order, so for `sigma_z` index 0 is `|0>` (eigenvalue
//! +1) and index 1 is `|1>`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics;
use crate::random::haar_unitary;
use crate::tensor::{
    self, commutator, frobenius, herm_eig, herm_exp, identity, tensor_product, ComplexMatrix,
};

/// Composite index `(k_A, k_B)` into a product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductIndex {
    pub a: usize,
    pub b: usize,
}

impl ProductIndex {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    /// Row-major position in the `d*d` product space.
    pub fn flat(self, d: usize) -> usize {
        self.a * d + self.b
    }

    pub fn from_flat(k: usize, d: usize) -> Self {
        Self { a: k / d, b: k % d }
    }
}

#[derive(Clone, Debug)]
pub struct Charge {
    pub label: String,
    pub matrix: ComplexMatrix,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
    /// Smallest spacing between adjacent eigenvalues.
    pub spectral_gap: f64,
}

impl Charge {
    fn new(label: String, matrix: ComplexMatrix, gap_tol: f64) -> Result<Self> {
        let eig = herm_eig(&matrix)?;
        let d = eig.dim();
        let mut values = Vec::with_capacity(d);
        let mut vectors = tensor::zeros(d, d);
        for (col, src) in (0..d).rev().enumerate() {
            values.push(eig.values[src]);
            vectors.set_column(col, &eig.vectors.column(src));
        }
        let spectral_gap = values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        if d > 1 && spectral_gap <= gap_tol {
            return Err(Error::DegenerateCharge {
                label,
                gap: spectral_gap,
                tol: gap_tol,
            });
        }
        Ok(Self {
            label,
            matrix,
            values,
            vectors,
            spectral_gap,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvector(&self, j: usize) -> DVector<C64> {
        self.vectors.column(j).into_owned()
    }

    /// Single-system projector `|j><j|`.
    pub fn projector(&self, j: usize) -> ComplexMatrix {
        let v = self.eigenvector(j);
        tensor::outer(&v, &v)
    }
}

/// Per-charge commutator norms `|[U, Q_tot]|_F`.
#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub residuals: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ChargeSet {
    dim: usize,
    charges: Vec<Charge>,
    commuting: bool,
    /// Product basis of each charge: column `k` is `|a_k> (x) |b_k>`.
    product_bases: Vec<ComplexMatrix>,
}

impl ChargeSet {
    /// Validate charges with the configured spectral-gap tolerance.
    pub fn new(labeled: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        Self::with_gap_tol(labeled, numerics::get().gap_tol)
    }

    pub fn with_gap_tol(labeled: Vec<(String, ComplexMatrix)>, gap_tol: f64) -> Result<Self> {
        let first = labeled.first().ok_or(Error::EmptyChargeSet)?;
        let dim = first.1.nrows();
        for (label, m) in &labeled {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(dim_err(
                    format!("{dim}x{dim} for every charge"),
                    format!("{}x{} for `{label}`", m.nrows(), m.ncols()),
                ));
            }
        }
        let charges = labeled
            .into_iter()
            .map(|(label, m)| Charge::new(label, m, gap_tol))
            .collect::<Result<Vec<_>>>()?;

        let c = charges.len();
        let gram = ComplexMatrix::from_fn(c, c, |i, j| {
            C64::new(tensor::trace_product(&charges[i].matrix, &charges[j].matrix).re, 0.0)
        });
        let min_gram = herm_eig(&gram)?.values[0];
        if min_gram <= 1e-10 {
            return Err(Error::LinearlyDependent(min_gram));
        }

        let herm_tol = numerics::get().herm_tol;
        let mut commuting = true;
        for i in 0..c {
            for j in i + 1..c {
                if frobenius(&commutator(&charges[i].matrix, &charges[j].matrix)) > herm_tol {
                    commuting = false;
                }
            }
        }

        let product_bases = charges
            .iter()
            .map(|q| tensor_product(&q.vectors, &q.vectors))
            .collect();

        Ok(Self {
            dim,
            charges,
            commuting,
            product_bases,
        })
    }

    /// Build from unlabeled matrices; labels default to `Q1`, `Q2`, ...
    pub fn from_matrices(matrices: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(
            matrices
                .into_iter()
                .enumerate()
                .map(|(k, m)| (format!("Q{}", k + 1), m))
                .collect(),
        )
    }

    /// `sigma_z, sigma_y, sigma_x` in that order.
    pub fn pauli_xyz() -> Self {
        Self::new(vec![
            ("z".into(), tensor::pauli_z()),
            ("y".into(), tensor::pauli_y()),
            ("x".into(), tensor::pauli_x()),
        ])
        .expect("Pauli charges are valid")
    }

    /// `sigma_z, sigma_x`.
    pub fn pauli_xz() -> Self {
        Self::new(vec![
            ("z".into(), tensor::pauli_z()),
            ("x".into(), tensor::pauli_x()),
        ])
        .expect("Pauli charges are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the two-system space.
    pub fn joint_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn charge(&self, alpha: usize) -> Result<&Charge> {
        self.charges.get(alpha).ok_or(Error::IndexOutOfRange {
            what: "charge",
            index: alpha,
            bound: self.charges.len(),
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.charges.iter().map(|q| q.label.clone()).collect()
    }

    /// Position of a charge by label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.charges.iter().position(|q| q.label == label)
    }

    /// Same charges in a different order: `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let labeled = order
            .iter()
            .map(|&k| {
                let q = self.charge(k)?;
                Ok((q.label.clone(), q.matrix.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labeled)
    }

    /// Product basis of charge `alpha` as the columns of a unitary.
    pub fn product_basis(&self, alpha: usize) -> &ComplexMatrix {
        &self.product_bases[alpha]
    }

    pub fn product_vector(&self, alpha: usize, k: ProductIndex) -> DVector<C64> {
        self.product_bases[alpha].column(k.flat(self.dim)).into_owned()
    }

    fn check_index(&self, alpha: usize, k: ProductIndex) -> Result<()> {
        self.charge(alpha)?;
        for idx in [k.a, k.b] {
            if idx >= self.dim {
                return Err(Error::IndexOutOfRange {
                    what: "product index",
                    index: idx,
                    bound: self.dim,
                });
            }
        }
        Ok(())
    }

    /// `Pi_{alpha,k} = Pi_{k_A} (x) Pi_{k_B}`.
    pub fn product_projector(&self, alpha: usize, k: ProductIndex) -> Result<ComplexMatrix> {
        self.check_index(alpha, k)?;
        let v = self.product_vector(alpha, k);
        Ok(tensor::outer(&v, &v))
    }

    /// `lambda_{alpha,k_A} + lambda_{alpha,k_B}`.
    pub fn eigenvalue_sum(&self, alpha: usize, k: ProductIndex) -> f64 {
        let v = &self.charges[alpha].values;
        v[k.a] + v[k.b]
    }

    /// `Q_alpha (x) 1 + 1 (x) Q_alpha`.
    pub fn global_charge(&self, alpha: usize) -> Result<ComplexMatrix> {
        let q = &self.charge(alpha)?.matrix;
        let id = identity(self.dim);
        Ok(tensor_product(q, &id) + tensor_product(&id, q))
    }

    /// `Q_alpha` acting on system A only.
    pub fn local_charge_a(&self, alpha: usize) -> Result<ComplexMatrix> {
        Ok(tensor_product(&self.charge(alpha)?.matrix, &identity(self.dim)))
    }

    pub fn local_charge_b(&self, alpha: usize) -> Result<ComplexMatrix> {
        Ok(tensor_product(&identity(self.dim), &self.charge(alpha)?.matrix))
    }

    /// Commutator norms of `u` with every global charge.
    pub fn check_conservation(&self, u: &ComplexMatrix, tol: f64) -> Result<ConservationReport> {
        let n = self.joint_dim();
        if u.nrows() != n || u.ncols() != n {
            return Err(dim_err(
                format!("{n}x{n}"),
                format!("{}x{}", u.nrows(), u.ncols()),
            ));
        }
        let unitarity = tensor::unitarity_residual(u);
        if unitarity > tol.max(numerics::get().herm_tol) {
            return Err(Error::NonUnitary(unitarity));
        }
        let mut residuals = Vec::with_capacity(self.len());
        let mut thresholds = Vec::with_capacity(self.len());
        for alpha in 0..self.len() {
            let qt = self.global_charge(alpha)?;
            residuals.push(frobenius(&commutator(u, &qt)));
            thresholds.push(tol * frobenius(&qt).max(1.0));
        }
        let pass = residuals.iter().zip(&thresholds).all(|(r, t)| r <= t);
        Ok(ConservationReport {
            residuals,
            thresholds,
            pass,
        })
    }

    /// `exp(i (a SWAP + sum_alpha b_alpha Q_alpha^tot + c 1))` for explicit coefficients.
    ///
    /// Conserving for every set when `b = 0`, and for any `b` when the set commutes.
    pub fn swap_family_unitary(&self, a: f64, b: &[f64], c: f64) -> Result<ComplexMatrix> {
        if b.len() != self.len() {
            return Err(dim_err(
                format!("{} charge coefficients", self.len()),
                b.len(),
            ));
        }
        let n = self.joint_dim();
        let mut gen = tensor::swap(self.dim) * C64::new(a, 0.0) + identity(n) * C64::new(c, 0.0);
        for (alpha, &ba) in b.iter().enumerate() {
            gen += self.global_charge(alpha)? * C64::new(ba, 0.0);
        }
        exp_i_hermitian(&gen)
    }

    /// Random conserving unitary `exp(i (a SWAP + c 1 + sum_alpha b_alpha Q_alpha^tot))`.
    ///
    /// Coefficients are uniform in `[-pi, pi]`. The charge terms are kept only
    /// for commuting sets; otherwise `Q_alpha^tot` fails to commute with the
    /// other totals and `b` is fixed to zero.
    pub fn random_conserving_unitary(&self, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = std::f64::consts::PI;
        let a = rng.gen_range(-pi..=pi);
        let c = rng.gen_range(-pi..=pi);
        let b: Vec<f64> = (0..self.len())
            .map(|_| {
                let x = rng.gen_range(-pi..=pi);
                if self.commuting {
                    x
                } else {
                    0.0
                }
            })
            .collect();
        self.swap_family_unitary(a, &b, c)
            .expect("generator is Hermitian by construction")
    }

    /// Block-diagonal Haar unitary on the joint eigenspaces of a commuting set.
    ///
    /// Product vectors of the shared eigenbasis are grouped by their tuple of
    /// total eigenvalues; each group gets an independent Haar block.
    pub fn random_commuting_block_unitary(&self, seed: u64) -> Result<ComplexMatrix> {
        let blocks = self.commuting_blocks()?;
        let n = self.joint_dim();
        let basis = &self.product_bases[0];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inner = tensor::zeros(n, n);
        for block in &blocks {
            let h = haar_unitary(&mut rng, block.len());
            for (r, &kr) in block.iter().enumerate() {
                for (c, &kc) in block.iter().enumerate() {
                    inner[(kr, kc)] = h[(r, c)];
                }
            }
        }
        Ok(basis * inner * basis.adjoint())
    }

    /// Joint-eigenspace blocks used by [`Self::random_commuting_block_unitary`], as flat indices of charge 0's product basis.
    pub fn commuting_blocks(&self) -> Result<Vec<Vec<usize>>> {
        if !self.commuting {
            return Err(Error::NotCommuting);
        }
        let n = self.joint_dim();
        let tol = numerics::get().conserving_tol;
        let globals = (0..self.len())
            .map(|alpha| self.global_charge(alpha))
            .collect::<Result<Vec<_>>>()?;
        let keys: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let v = self.product_bases[0].column(k).into_owned();
                globals
                    .iter()
                    .map(|qt| tensor::sandwich(&v, qt, &v).re)
                    .collect()
            })
            .collect();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for k in 0..n {
            match blocks.iter_mut().find(|b| {
                keys[b[0]]
                    .iter()
                    .zip(&keys[k])
                    .all(|(x, y)| (x - y).abs() <= tol)
            }) {
                Some(b) => b.push(k),
                None => blocks.push(vec![k]),
            }
        }
        Ok(blocks)
    }

    /// Match charge `alpha`'s single-system eigenbasis to charge 0's.
    ///
    /// Returns `perm` with `perm[j]` the index of charge `alpha`'s eigenvector
    /// that coincides (up to phase) with charge 0's eigenvector `j`. Fails if the
    /// overlap matrix is not a permutation matrix to `1e-10`.
    pub fn basis_permutation(&self, alpha: usize) -> Result<Vec<usize>> {
        let q0 = &self.charges[0];
        let qa = self.charge(alpha)?;
        let overlaps = q0.vectors.adjoint() * &qa.vectors;
        let d = self.dim;
        let mut perm = vec![usize::MAX; d];
        let mut used = vec![false; d];
        for j in 0..d {
            let hits: Vec<usize> = (0..d)
                .filter(|&k| (overlaps[(j, k)].norm_sqr() - 1.0).abs() <= 1e-10)
                .collect();
            let rest_small = (0..d)
                .filter(|k| !hits.contains(k))
                .all(|k| overlaps[(j, k)].norm_sqr() <= 1e-10);
            if hits.len() != 1 || !rest_small || used[hits[0]] {
                return Err(Error::AmbiguousBasisMatch(alpha));
            }
            used[hits[0]] = true;
            perm[j] = hits[0];
        }
        Ok(perm)
    }
}

/// `exp(i H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    let n = eig.dim();
    let mut scaled = eig.vectors.clone();
    for (k, &lam) in eig.values.iter().enumerate() {
        let w = C64::from_polar(1.0, lam);
        for r in 0..n {
            scaled[(r, k)] *= w;
        }
    }
    Ok(&scaled * eig.vectors.adjoint())
}

/// Exponentials `exp(s * Q)` for a Hermitian `Q`; convenience for closed-form traces.
pub fn exp_scaled(q: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    herm_exp(&(q * C64::new(s, 0.0)))
}
