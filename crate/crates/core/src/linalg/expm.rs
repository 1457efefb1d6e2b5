use super::matrix::ComplexMatrix;
use crate::error::Result;
use crate::scalar::Real;

const MAX_TERMS: usize = 64;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by 2^-s until its 1-norm is at most 1/2; the series
/// is summed until the next term is below machine epsilon relative to the
/// partial sum, then the result is squared s times.
pub fn expm<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = a.dim()?;
    let norm = a.norm_one();
    let mut squarings = 0u32;
    if norm > T::lit(0.5) {
        squarings = (norm / T::lit(0.5)).log2().ceil().to_u32().unwrap_or(0);
    }
    let scaled = a.scale_real(T::one() / T::lit(2.0).powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = term
            .matmul(&scaled)?
            .scale_real(T::one() / T::lit(k as f64));
        sum = &sum + &term;
        let tn = term.norm_one();
        if tn.is_zero() || tn <= T::epsilon() * sum.norm_one() * T::lit(0.01) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum)?;
    }
    Ok(sum)
}
