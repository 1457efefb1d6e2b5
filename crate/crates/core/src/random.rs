//! Seeded random instances: states, unitaries, channels and generators.
//!
//! All draws go through [`ChaCha8Rng`], so a seed reproduces the same instance
//! on every platform.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{vec_norm, ComplexMatrix};
use crate::scalar::Real;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<T: Real, R: Rng + ?Sized>(r: &mut R) -> Complex<T> {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    Complex::new(T::lit(re), T::lit(im))
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, r: &mut R) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(r))
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, r: &mut R) -> ComplexMatrix<T> {
    ginibre(n, n, r).hermitian_part()
}

pub fn random_pure_state<T: Real, R: Rng + ?Sized>(n: usize, r: &mut R) -> Vec<Complex<T>> {
    let v: Vec<Complex<T>> = (0..n).map(|_| gaussian_complex(r)).collect();
    let norm = vec_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// Orthonormalize columns in place (modified Gram-Schmidt, two passes).
pub fn orthonormalize_columns<T: Real>(m: &mut ComplexMatrix<T>) {
    let (rows, cols) = (m.rows(), m.cols());
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let mut proj = Complex::new(T::zero(), T::zero());
                for i in 0..rows {
                    proj = proj + m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..rows {
                    let mk = m[(i, k)];
                    m[(i, j)] = m[(i, j)] - mk * proj;
                }
            }
        }
        let norm = m.column(j).iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for i in 0..rows {
            m[(i, j)] = m[(i, j)] / norm;
        }
    }
}

/// Haar-distributed unitary from Gram-Schmidt of a Ginibre matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, r: &mut R) -> ComplexMatrix<T> {
    let mut g = ginibre(n, n, r);
    orthonormalize_columns(&mut g);
    g
}

/// Random density matrix of the given rank (G G^dagger normalized).
pub fn random_density<T: Real, R: Rng + ?Sized>(
    n: usize,
    rank: usize,
    r: &mut R,
) -> ComplexMatrix<T> {
    let g: ComplexMatrix<T> = ginibre(n, rank.clamp(1, n), r);
    let rho = &g * &g.dagger();
    let tr = rho.trace().re;
    rho.scale_real(T::one() / tr).hermitian_part()
}

/// `count` Kraus operators on a `d`-dimensional space whose stacked isometry
/// has been Gram-Schmidt completed, so sum K^dagger K = I.
pub fn random_kraus_ops<T: Real, R: Rng + ?Sized>(
    d: usize,
    count: usize,
    r: &mut R,
) -> Vec<ComplexMatrix<T>> {
    let mut v: ComplexMatrix<T> = ginibre(d * count, d, r);
    orthonormalize_columns(&mut v);
    (0..count)
        .map(|k| ComplexMatrix::from_fn(d, d, |i, j| v[(k * d + i, j)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let u = random_unitary::<f64, _>(4, &mut rng(1));
        assert!(u.unitarity_residual() < 1e-13);
    }

    #[test]
    fn kraus_complete() {
        let ks = random_kraus_ops::<f64, _>(3, 4, &mut rng(2));
        let mut s = ComplexMatrix::zeros(3, 3);
        for k in &ks {
            s = &s + &(&k.dagger() * k);
        }
        assert!(s.distance(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn same_seed_same_instance() {
        let a = random_density::<f64, _>(3, 3, &mut rng(9));
        let b = random_density::<f64, _>(3, 3, &mut rng(9));
        assert_eq!(a, b);
    }
}
