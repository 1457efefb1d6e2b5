//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Jacobi is slower than tridiagonal QR for large inputs but delivers
//! eigenvectors orthonormal to working precision, which the ontic-state
//! bookkeeping relies on. Matrices here stay below a few hundred rows.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute Hermiticity tolerance accepted before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real = f64> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, phase-canonicalized.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        self.vectors.column(k)
    }

    /// V diag(f(lambda)) V^dagger
    pub fn map_values(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w.is_zero() {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_values(|x| x)
    }

    pub fn min_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized first; anything further than [`HERMITIAN_TOL`]
/// from Hermitian is rejected. Eigenvalues come back descending, equal values
/// ordered by [`canonical_cmp`] of their vectors, and every vector is rotated
/// by [`canonicalize_phase`].
pub fn hermitian_eig<T: Real>(h: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = h.dim()?;
    let residual = h.hermiticity_residual();
    if residual > T::tol(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(residual.as_f64()));
    }
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    jacobi_sweeps(&mut a, &mut v);

    let mut columns: Vec<(T, Vec<Complex<T>>)> = (0..n)
        .map(|k| {
            let mut col = v.column(k);
            canonicalize_phase(&mut col);
            (a[(k, k)].re, col)
        })
        .collect();
    sort_eigenpairs(&mut columns, h.max_abs());

    let values = columns.iter().map(|(l, _)| *l).collect();
    let vecs: Vec<Vec<Complex<T>>> = columns.into_iter().map(|(_, c)| c).collect();
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix::from_columns(&vecs),
    })
}

/// Eigenvalues only, descending.
pub fn eigvalsh<T: Real>(h: &ComplexMatrix<T>) -> Result<Vec<T>> {
    hermitian_eig(h).map(|e| e.values)
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_sweeps<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>) {
    let n = a.rows();
    let scale = a.frobenius_norm();
    if scale.is_zero() {
        return;
    }
    let target = T::epsilon() * T::epsilon().sqrt() * scale;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(a, v, p, q);
            }
        }
    }
}

/// Annihilate a[p][q] with the unitary G = diag(.., e^{-i phi} at q) * R(c, s).
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag.is_zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let one = T::one();
    let two = T::lit(2.0);
    // Below round-off against both diagonal entries: drop it.
    let hundred_mag = T::lit(100.0) * mag;
    if app.abs() + hundred_mag == app.abs() && aqq.abs() + hundred_mag == aqq.abs() {
        a[(p, q)] = Complex::zero();
        a[(q, p)] = Complex::zero();
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (two * mag);
    let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
        one / (two * theta)
    } else {
        let t = one / (theta.abs() + (theta * theta + one).sqrt());
        if theta < T::zero() {
            -t
        } else {
            t
        }
    };
    let c = one / (t * t + one).sqrt();
    let s = t * c;
    let pc = phase.conj();
    let n = a.rows();

    for r in 0..n {
        let x = a[(r, p)];
        let y = a[(r, q)];
        a[(r, p)] = x * c - y * pc * s;
        a[(r, q)] = x * s + y * pc * c;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = x * c - y * phase * s;
        a[(q, k)] = x * s + y * phase * c;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(app - t * mag, T::zero());
    a[(q, q)] = Complex::new(aqq + t * mag, T::zero());

    for r in 0..n {
        let x = v[(r, p)];
        let y = v[(r, q)];
        v[(r, p)] = x * c - y * pc * s;
        v[(r, q)] = x * s + y * pc * c;
    }
}

/// Rotate `v` so its largest-magnitude component is real and positive; ties
/// (within 1e-12) go to the lowest index.
pub fn canonicalize_phase<T: Real>(v: &mut [Complex<T>]) {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max.is_zero() {
        return;
    }
    let tie = T::tol(1e-12);
    let k = v
        .iter()
        .position(|z| z.norm() >= max - tie)
        .expect("max component exists");
    let rot = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z = *z * rot;
    }
    v[k] = Complex::new(v[k].re, T::zero());
}

/// Lexicographic order on canonical vectors: component by component, larger
/// modulus first, then larger real part, then larger imaginary part.
pub fn canonical_cmp<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Ordering {
    let tie = T::tol(1e-12);
    let desc = |x: T, y: T| {
        if (x - y).abs() <= tie {
            Ordering::Equal
        } else if x > y {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    };
    for (x, y) in a.iter().zip(b) {
        let ord = desc(x.norm(), y.norm())
            .then_with(|| desc(x.re, y.re))
            .then_with(|| desc(x.im, y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

fn sort_eigenpairs<T: Real>(pairs: &mut [(T, Vec<Complex<T>>)], scale: T) {
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal));
    let tie = T::tol(1e-12) * scale.max(T::one());
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| canonical_cmp(&x.1, &y.1));
        }
        start = end;
    }
}
