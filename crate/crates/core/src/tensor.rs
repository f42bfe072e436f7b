//! Dense complex matrix algebra on small Hilbert spaces.
//!
//! Everything here works on [`ComplexMatrix`] (a dense `nalgebra` matrix of
//! `Complex64`). Hilbert spaces in this crate are tiny (a handful of levels per
//! system), so there is no sparse path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{dim_err, Error, Result};
use crate::numerics;

pub type ComplexMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Which factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector has its largest-magnitude
/// component made real and positive (ties go to the lowest index), so the
/// decomposition of a given input is reproducible bit for bit.
#[derive(Clone, Debug)]
pub struct HermitianEigensystem {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `V f(diag(lambda)) V^dagger`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// Build a matrix from real row-major entries.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
}

pub fn pauli_x() -> ComplexMatrix {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    diag_real(&[1.0, -1.0])
}

/// SWAP on `C^d (x) C^d`.
pub fn swap(d: usize) -> ComplexMatrix {
    let mut s = zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = ONE;
        }
    }
    s
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// `U rho U^dagger`.
pub fn conjugate(u: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    u * rho * u.adjoint()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_finite(m: ComplexMatrix, what: &'static str) -> Result<ComplexMatrix> {
    if is_finite(&m) {
        Ok(m)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(dim_err("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

/// `|H - H^dagger|_F / max(1, |H|_F)`.
pub fn hermiticity_residual(h: &ComplexMatrix) -> f64 {
    frobenius(&(h - h.adjoint())) / frobenius(h).max(1.0)
}

pub fn ensure_hermitian(h: &ComplexMatrix) -> Result<()> {
    ensure_square(h)?;
    let r = hermiticity_residual(h);
    if r > numerics::get().herm_tol {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

/// `|U^dagger U - I|_F`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity(n)))
}

/// Kronecker product with `a` acting on system A (left factor).
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Reduced operator of the kept subsystem of `m` on `C^{d_a} (x) C^{d_b}`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = ensure_square(m)?;
    if n != da * db {
        return Err(dim_err(format!("{}x{}", da * db, da * db), format!("{n}x{n}")));
    }
    Ok(match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// Hermitian eigendecomposition with ascending eigenvalues and a deterministic phase.
///
/// Degenerate eigenvalues are returned as they come; deciding whether
/// degeneracy is acceptable is the caller's business.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermitianEigensystem> {
    ensure_hermitian(h)?;
    let n = h.nrows();
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut v = eig.eigenvectors.column(src).into_owned();
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        fix_phase(&mut v);
        vectors.set_column(col, &v);
    }
    if values.iter().any(|x| !x.is_finite()) || !is_finite(&vectors) {
        return Err(Error::NonFinite("herm_eig"));
    }
    Ok(HermitianEigensystem { values, vectors })
}

/// Rotate `v` so its largest-magnitude entry is real positive; near-ties resolve to the lowest index.
pub(crate) fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    let p = v[pivot];
    let phase = p.conj() / p.norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

pub fn herm_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    ensure_finite(eig.map(f64::exp), "herm_exp")
}

/// Matrix logarithm of a positive semidefinite matrix.
///
/// Eigenvalues at or below `cutoff` contribute zero on their eigenspace; the
/// `0 log 0 = 0` convention is left to callers.
pub fn herm_log(p: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(p)?;
    if let Some(&neg) = eig.values.iter().find(|&&x| x < -cutoff) {
        return Err(Error::NegativeEigenvalue(neg));
    }
    ensure_finite(
        eig.map(|x| if x > cutoff { x.ln() } else { 0.0 }),
        "herm_log",
    )
}

/// Hermitian part `(M + M^dagger)/2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Outer product `|u><v|`.
pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> ComplexMatrix {
    u * v.adjoint()
}

/// `<u|M|v>`.
pub fn sandwich(u: &DVector<C64>, m: &ComplexMatrix, v: &DVector<C64>) -> C64 {
    (u.adjoint() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_hermitian, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    #[test]
    fn kronecker_identity_and_sigma_z() {
        assert_eq!(tensor_product(&identity(2), &identity(2)), identity(4));
        assert_eq!(
            tensor_product(&pauli_z(), &identity(2)),
            diag_real(&[1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn kronecker_trace_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let lhs = trace(&tensor_product(&a, &b));
        let rhs = trace(&a) * trace(&b);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kronecker_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b, c) = (
            random_matrix(&mut rng, 2),
            random_matrix(&mut rng, 3),
            random_matrix(&mut rng, 2),
        );
        let left = tensor_product(&tensor_product(&a, &b), &c);
        let right = tensor_product(&a, &tensor_product(&b, &c));
        assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn partial_trace_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 3);
        let ab = tensor_product(&a, &b);
        let ra = partial_trace(&ab, (2, 3), Keep::A).unwrap();
        assert!(close(&ra, &(&a * trace(&b)), 1e-12));
        let rb = partial_trace(&ab, (2, 3), Keep::B).unwrap();
        assert!(close(&rb, &(&b * trace(&a)), 1e-12));

        let mixed = identity(4) / C64::new(4.0, 0.0);
        let half = identity(2) / C64::new(2.0, 0.0);
        assert!(close(&partial_trace(&mixed, (2, 2), Keep::B).unwrap(), &half, 1e-15));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = DVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        let bell = outer(&phi, &phi);
        assert!(close(&partial_trace(&bell, (2, 2), Keep::A).unwrap(), &half, 1e-15));
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(matches!(
            partial_trace(&identity(4), (2, 3), Keep::A),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_of_sigma_x_and_sorting() {
        let e = herm_eig(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        // tie on magnitude: first component is the real positive one
        assert!(e.vectors[(0, 0)].im == 0.0 && e.vectors[(0, 0)].re > 0.0);
        assert!(e.vectors[(0, 1)].im == 0.0 && e.vectors[(0, 1)].re > 0.0);

        let e = herm_eig(&diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values.len(), 3);
        for (k, want) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((e.values[k] - want).abs() < 1e-14);
        }
        // permuted basis: eigenvalue 1 lives on basis vector 1
        assert!((e.vectors[(1, 0)] - ONE).norm() < 1e-14);
        assert!((e.vectors[(2, 1)] - ONE).norm() < 1e-14);
        assert!((e.vectors[(0, 2)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2, 3, 4, 6, 9] {
            let h = random_hermitian(&mut rng, d);
            let e = herm_eig(&h).unwrap();
            let tol = 1e-10 * frobenius(&h).max(1.0);
            assert!(close(&e.reconstruct(), &h, tol), "d={d}");
            assert!(close(&(e.vectors.adjoint() * &e.vectors), &identity(d), 1e-10));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_is_bitwise_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 4);
        let a = herm_eig(&h).unwrap();
        let b = herm_eig(&h.clone()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn eig_handles_sparse_block_structure() {
        // SWAP plus a diagonal on C^3 (x) C^3; older solvers lost this one
        let (a, c, b1, b2) = (-1.877103474440623, 1.3520192062092447, 1.988873657090008, 2.3077478766412183);
        let q1 = [1.0, 0.0, -1.0];
        let q2 = [-2.0, 0.5, 1.0];
        let mut h = swap(3) * C64::new(a, 0.0);
        for x in 0..3 {
            for y in 0..3 {
                h[(x * 3 + y, x * 3 + y)] += C64::new(c + b1 * (q1[x] + q1[y]) + b2 * (q2[x] + q2[y]), 0.0);
            }
        }
        let eig = herm_eig(&h).unwrap();
        assert!(close(&eig.reconstruct(), &h, 1e-12));
    }

    #[test]
    fn exp_cases() {
        assert!(close(&herm_exp(&zeros(3, 3)).unwrap(), &identity(3), 1e-15));
        let e = herm_exp(&diag_real(&[0.3, -1.2])).unwrap();
        assert!(close(&e, &diag_real(&[0.3f64.exp(), (-1.2f64).exp()]), 1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian(&mut rng, 4);
        let prod = herm_exp(&h).unwrap() * herm_exp(&(-&h)).unwrap();
        assert!(close(&prod, &identity(4), 1e-9));
    }

    #[test]
    fn exp_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let mut h = random_hermitian(&mut rng, 4);
            let n = frobenius(&h);
            h /= C64::new(n, 0.0);
            let mut term = identity(4);
            let mut sum = identity(4);
            for k in 1..30 {
                term = &term * &h / C64::new(k as f64, 0.0);
                sum += &term;
            }
            assert!(close(&herm_exp(&h).unwrap(), &sum, 1e-10));
        }
    }

    #[test]
    fn log_cases() {
        assert!(close(&herm_log(&identity(2), 1e-12).unwrap(), &zeros(2, 2), 1e-15));
        let e = std::f64::consts::E;
        let l = herm_log(&diag_real(&[e, e * e]), 1e-12).unwrap();
        assert!(close(&l, &diag_real(&[1.0, 2.0]), 1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(&mut rng, 4);
        let back = herm_log(&herm_exp(&h).unwrap(), 1e-12).unwrap();
        assert!(close(&back, &h, 1e-9));
        assert!(matches!(
            herm_log(&diag_real(&[1.0, -0.1]), 1e-12),
            Err(Error::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn swap_exchanges_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let s = swap(3);
        let lhs = &s * tensor_product(&a, &b) * &s;
        assert!(close(&lhs, &tensor_product(&b, &a), 1e-12));
    }
}
