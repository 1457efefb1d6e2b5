//! Dense complex linear algebra and tensor-product bookkeeping.

mod eigen;
mod expm;
mod layout;
mod matrix;

pub use eigen::{
    canonical_cmp, canonicalize_phase, eigvalsh, hermitian_eig, HermitianEigen, HERMITIAN_TOL,
};
pub use expm::expm;
pub use layout::SystemLayout;
pub use matrix::{inner, vec_norm, ComplexMatrix};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Kronecker product a ⊗ b.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of vectors.
pub fn kron_vec<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

pub fn kron_all<T: Real>(factors: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Reduced matrix over the `keep` factors (returned in layout order), tracing
/// out everything else.
///
/// Each kept composite index maps to an offset in the parent index, and so
/// does each traced composite index; the parent index of a (kept, traced)
/// pair is the sum of the two offsets, so the contraction is a single sum per
/// output entry.
pub fn partial_trace<T: Real, S: AsRef<str>>(
    rho: &ComplexMatrix<T>,
    layout: &SystemLayout,
    keep: &[S],
) -> Result<ComplexMatrix<T>> {
    let n = rho.dim()?;
    if n != layout.total_dim() {
        return Err(Error::LayoutMismatch {
            matrix: n,
            layout: layout.total_dim(),
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let kept = layout.positions(keep)?;
    let traced: Vec<usize> = (0..layout.n_factors())
        .filter(|p| !kept.contains(p))
        .collect();
    let kept_off = offsets(layout, &kept);
    let traced_off = offsets(layout, &traced);

    let m = kept_off.len();
    let mut out = ComplexMatrix::zeros(m, m);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (c, &co) in kept_off.iter().enumerate() {
            out[(r, c)] = traced_off
                .iter()
                .fold(Complex::zero(), |acc, &e| acc + rho[(ro + e, co + e)]);
        }
    }
    Ok(out)
}

/// Reduced matrix of the pure state |ψ><ψ| without forming the full
/// projector: ρ_K[r, c] = Σ_e ψ[r + e] ψ[c + e]*.
pub fn partial_trace_pure<T: Real, S: AsRef<str>>(
    psi: &[Complex<T>],
    layout: &SystemLayout,
    keep: &[S],
) -> Result<ComplexMatrix<T>> {
    if psi.len() != layout.total_dim() {
        return Err(Error::LayoutMismatch {
            matrix: psi.len(),
            layout: layout.total_dim(),
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let kept = layout.positions(keep)?;
    let traced: Vec<usize> = (0..layout.n_factors())
        .filter(|p| !kept.contains(p))
        .collect();
    let kept_off = offsets(layout, &kept);
    let traced_off = offsets(layout, &traced);
    Ok(ComplexMatrix::from_fn(
        kept_off.len(),
        kept_off.len(),
        |r, c| {
            traced_off.iter().fold(Complex::zero(), |acc, &e| {
                acc + psi[kept_off[r] + e] * psi[kept_off[c] + e].conj()
            })
        },
    ))
}

/// Parent-index offset of every composite index over `positions`.
fn offsets(layout: &SystemLayout, positions: &[usize]) -> Vec<usize> {
    let strides = layout.strides();
    let sub = layout.select(positions);
    (0..sub.total_dim())
        .map(|idx| {
            sub.digits(idx)
                .iter()
                .zip(positions)
                .map(|(&d, &p)| d * strides[p])
                .sum()
        })
        .collect()
}

/// Trace distance (1/2) Σ|λ(ρ − σ)|.
pub fn trace_distance<T: Real>(rho: &ComplexMatrix<T>, sigma: &ComplexMatrix<T>) -> Result<T> {
    let n = rho.dim()?;
    let m = sigma.dim()?;
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m,
        });
    }
    let diff = rho - sigma;
    let vals = eigvalsh(&diff)?;
    let d = vals.iter().map(|v| v.abs()).sum::<T>() * T::lit(0.5);
    Ok(d.max(T::zero()).min(T::one()))
}

/// Permutation matrix Π with Π|k> = |perm[k]>.
pub fn permutation_matrix<T: Real>(perm: &[usize]) -> ComplexMatrix<T> {
    let n = perm.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for (k, &target) in perm.iter().enumerate() {
        p[(target, k)] = Complex::new(T::one(), T::zero());
    }
    p
}
