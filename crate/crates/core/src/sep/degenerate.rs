//! Surprisal SEP with rank > 1 eigenprojectors.
//!
//! The main path rejects degenerate charges. This module accepts them for a
//! single-charge demonstration: with degenerate projectors, the surprisal SEP
//! picks up a log of rank ratios and no longer matches the charge SEP even
//! when everything commutes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{self, herm_eig, identity, outer, tensor_product, ComplexMatrix};
use crate::thermal::DensityOperator;

#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: ComplexMatrix,
    pub rank: usize,
}

/// Eigenspaces of a Hermitian matrix in descending eigenvalue order, merging values within `tol`.
pub fn eigenprojectors(q: &ComplexMatrix, tol: f64) -> Result<Vec<Eigenspace>> {
    tensor::ensure_hermitian(q)?;
    let eig = herm_eig(q)?;
    let n = eig.dim();
    let mut spaces: Vec<Eigenspace> = Vec::new();
    for k in (0..n).rev() {
        let v = eig.vector(k);
        let value = eig.values[k];
        match spaces.last_mut() {
            Some(s) if (s.value - value).abs() <= tol => {
                s.projector += outer(&v, &v);
                s.value = (s.value * s.rank as f64 + value) / (s.rank + 1) as f64;
                s.rank += 1;
            }
            _ => spaces.push(Eigenspace {
                value,
                projector: outer(&v, &v),
                rank: 1,
            }),
        }
    }
    Ok(spaces)
}

const COMPLETENESS_TOL: f64 = 1e-10;

fn check_family(projectors: &[ComplexMatrix], n: usize) -> Result<()> {
    let mut residual = 0.0f64;
    let mut sum = tensor::zeros(n, n);
    for (j, p) in projectors.iter().enumerate() {
        if p.nrows() != n || p.ncols() != n {
            return Err(crate::error::dim_err(n, p.nrows()));
        }
        sum += p;
        for (k, q) in projectors.iter().enumerate() {
            let prod = p * q;
            let expected = if j == k { p.clone() } else { tensor::zeros(n, n) };
            residual = residual.max(tensor::frobenius(&(prod - expected)));
        }
    }
    residual = residual.max(tensor::frobenius(&(sum - identity(n))));
    if residual > COMPLETENESS_TOL {
        return Err(Error::IncompleteProjectors(residual));
    }
    Ok(())
}

/// `log(Tr(Pi_i rho) / Tr(Pi_f rho))` for an arbitrary complete orthogonal projector family.
pub fn sigma_surp_degenerate_demo(
    i: usize,
    f: usize,
    projectors: &[ComplexMatrix],
    rho: &DensityOperator,
) -> Result<f64> {
    check_family(projectors, rho.dim())?;
    for k in [i, f] {
        if k >= projectors.len() {
            return Err(Error::IndexOutOfRange {
                what: "projector",
                index: k,
                bound: projectors.len(),
            });
        }
    }
    let p = |k: usize| tensor::trace_product(&projectors[k], rho.matrix()).re;
    Ok(super::surprisal_value(p(i), p(f)))
}

#[derive(Clone, Debug, Serialize)]
pub struct DegenerateDemo {
    pub eigenvalues: Vec<f64>,
    pub ranks: Vec<usize>,
    /// Max over outcome pairs of `|sigma_surp - (sigma_chrg + log(r_iA r_iB / (r_fA r_fB)))|`.
    pub closed_form_error: f64,
    /// Max over outcome pairs of `|sigma_surp - sigma_chrg|`.
    pub surp_chrg_gap: f64,
    /// Max deviation from the variant that multiplies each eigenvalue by its rank instead.
    pub rank_multiplied_deviation: f64,
}

/// One charge `q` on each subsystem, product thermal state at `beta_a`, `beta_b`.
///
/// Compares the directly evaluated surprisal SEP over all pairs of joint
/// eigenspaces with the rank-corrected closed form.
pub fn degenerate_demo(q: &ComplexMatrix, beta_a: f64, beta_b: f64) -> Result<DegenerateDemo> {
    let spaces = eigenprojectors(q, 1e-9)?;
    let thermal = |beta: f64| -> Result<ComplexMatrix> {
        let g = tensor::herm_exp(&(q * num_complex::Complex64::new(-beta, 0.0)))?;
        let z = tensor::trace(&g).re;
        Ok(g / num_complex::Complex64::new(z, 0.0))
    };
    let rho = DensityOperator::new(tensor_product(&thermal(beta_a)?, &thermal(beta_b)?))?;

    let m = spaces.len();
    let mut projectors = Vec::with_capacity(m * m);
    for sa in &spaces {
        for sb in &spaces {
            projectors.push(tensor_product(&sa.projector, &sb.projector));
        }
    }

    let mut closed_form_error = 0.0f64;
    let mut surp_chrg_gap = 0.0f64;
    let mut rank_multiplied_deviation = 0.0f64;
    for i in 0..m * m {
        for f in 0..m * m {
            let s = sigma_surp_degenerate_demo(i, f, &projectors, &rho)?;
            let (ia, ib) = (&spaces[i / m], &spaces[i % m]);
            let (fa, fb) = (&spaces[f / m], &spaces[f % m]);
            let chrg = beta_a * (fa.value - ia.value) + beta_b * (fb.value - ib.value);
            let ranks = ((ia.rank * ib.rank) as f64 / (fa.rank * fb.rank) as f64).ln();
            let multiplied = beta_a * (fa.rank as f64 * fa.value - ia.rank as f64 * ia.value)
                + beta_b * (fb.rank as f64 * fb.value - ib.rank as f64 * ib.value);
            closed_form_error = closed_form_error.max((s - chrg - ranks).abs());
            surp_chrg_gap = surp_chrg_gap.max((s - chrg).abs());
            rank_multiplied_deviation = rank_multiplied_deviation.max((s - multiplied).abs());
        }
    }
    Ok(DegenerateDemo {
        eigenvalues: spaces.iter().map(|s| s.value).collect(),
        ranks: spaces.iter().map(|s| s.rank).collect(),
        closed_form_error,
        surp_chrg_gap,
        rank_multiplied_deviation,
    })
}
