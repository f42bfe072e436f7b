//! Seeded random matrices for test instances.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::{ComplexMatrix, ZERO};

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng))
}

/// GUE-like Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = random_matrix(rng, d);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-random unitary from Gram-Schmidt on a Ginibre matrix.
///
/// Normalizing each column against the previous ones reproduces the QR
/// decomposition with a positive-real diagonal on R, which is the Haar recipe.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = random_matrix(rng, d);
    let mut q = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let mut v: DVector<C64> = g.column(j).into_owned();
        // two passes keep the columns orthogonal to machine precision
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let overlap: C64 = qk.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for r in 0..d {
                    v[r] -= overlap * q[(r, k)];
                }
            }
        }
        let n = v.norm();
        q.set_column(j, &(v / C64::new(n, 0.0)));
    }
    q
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<C64> {
    let mut v = DVector::from_fn(d, |_, _| gaussian_complex(rng));
    let n = v.norm();
    if n == 0.0 {
        v[0] = C64::new(1.0, 0.0);
        return v;
    }
    v.map(|z| if n > 0.0 { z / n } else { ZERO })
}
