//! Density matrices, ontic states and epistemic states.
//!
//! An epistemic state is read off a density matrix spectrally: each retained
//! eigenvalue is the probability that the corresponding eigenvector is the
//! system's actual (ontic) state.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    canonicalize_phase, hermitian_eig, inner, partial_trace, vec_norm, ComplexMatrix, SystemLayout,
};
use crate::scalar::Real;

/// Hermiticity, trace and positivity tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;
/// Eigenvalues below this are dropped from epistemic states by default.
pub const DEFAULT_THRESHOLD: f64 = 1e-12;
/// Eigenvalues closer than this are reported as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;
/// Purity above 1 - PURE_TOL short-circuits to a rank-1 epistemic state.
pub const PURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real = f64> {
    matrix: ComplexMatrix<T>,
    layout: SystemLayout,
}

impl<T: Real> DensityMatrix<T> {
    /// Validate and wrap; the stored matrix is the Hermitian part of the input.
    pub fn new(matrix: ComplexMatrix<T>, layout: SystemLayout) -> Result<Self> {
        let n = matrix.dim()?;
        if n != layout.total_dim() {
            return Err(Error::LayoutMismatch {
                matrix: n,
                layout: layout.total_dim(),
            });
        }
        let tol = T::tol(DENSITY_TOL);
        let herm = matrix.hermiticity_residual();
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity residual {herm:e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let matrix = matrix.hermitian_part();
        let min = hermitian_eig(&matrix)?.min_value();
        if min < -tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min:e}"
            )));
        }
        Ok(Self { matrix, layout })
    }

    /// For matrices that are positive by construction (outer products,
    /// channel outputs, spectral sums); checks shape, trace and Hermiticity
    /// but skips the eigenvalue test.
    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>, layout: SystemLayout) -> Result<Self> {
        let n = matrix.dim()?;
        if n != layout.total_dim() {
            return Err(Error::LayoutMismatch {
                matrix: n,
                layout: layout.total_dim(),
            });
        }
        let tol = T::tol(DENSITY_TOL);
        let herm = matrix.hermiticity_residual();
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity residual {herm:e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            layout,
        })
    }

    /// |psi><psi| for a (re-normalized) state vector.
    pub fn from_pure(psi: &[Complex<T>], layout: SystemLayout) -> Result<Self> {
        let norm = vec_norm(psi);
        if norm.is_zero() {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let v: Vec<Complex<T>> = psi.iter().map(|&z| z / norm).collect();
        Self::from_trusted(ComplexMatrix::outer(&v), layout)
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let n = layout.total_dim();
        let matrix = ComplexMatrix::identity(n).scale_real(T::one() / T::lit(n as f64));
        Self { matrix, layout }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    /// Tr ρ².
    pub fn purity(&self) -> T {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Reduced density matrix of the `keep` subsystems (in layout order).
    pub fn reduce<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let positions = self.layout.positions(keep)?;
        let m = partial_trace(&self.matrix, &self.layout, keep)?;
        Self::from_trusted(m, self.layout.select(&positions))
    }
}

/// A possible actual state: a unit vector with canonical phase.
#[derive(Clone, Debug, PartialEq)]
pub struct OnticState<T: Real = f64> {
    vector: Vec<Complex<T>>,
    layout: SystemLayout,
    index: usize,
}

impl<T: Real> OnticState<T> {
    /// Normalizes and phase-canonicalizes `vector`.
    pub fn new(vector: Vec<Complex<T>>, layout: SystemLayout, index: usize) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch {
                matrix: vector.len(),
                layout: layout.total_dim(),
            });
        }
        let norm = vec_norm(&vector);
        if norm.is_zero() {
            return Err(Error::InvalidArgument("zero ontic state vector".into()));
        }
        let mut vector: Vec<Complex<T>> = vector.into_iter().map(|z| z / norm).collect();
        canonicalize_phase(&mut vector);
        Ok(Self {
            vector,
            layout,
            index,
        })
    }

    pub fn vector(&self) -> &[Complex<T>] {
        &self.vector
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpistemicEntry<T: Real = f64> {
    pub probability: T,
    pub state: OnticState<T>,
}

/// Probability distribution over mutually orthogonal ontic states.
#[derive(Clone, Debug, PartialEq)]
pub struct EpistemicState<T: Real = f64> {
    layout: SystemLayout,
    entries: Vec<EpistemicEntry<T>>,
    degenerate_clusters: Vec<Vec<usize>>,
    truncation_mass: T,
}

impl<T: Real> EpistemicState<T> {
    /// Assemble from explicit entries; clusters are recomputed from the
    /// probabilities.
    pub fn from_entries(
        layout: SystemLayout,
        entries: Vec<(T, Vec<Complex<T>>)>,
        truncation_mass: T,
    ) -> Result<Self> {
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, (p, v))| {
                Ok(EpistemicEntry {
                    probability: p,
                    state: OnticState::new(v, layout.clone(), i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let degenerate_clusters =
            clusters(&entries.iter().map(|e| e.probability).collect::<Vec<_>>());
        Ok(Self {
            layout,
            entries,
            degenerate_clusters,
            truncation_mass,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[EpistemicEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.probability).collect()
    }

    pub fn probability(&self, i: usize) -> T {
        self.entries[i].probability
    }

    pub fn vector(&self, i: usize) -> &[Complex<T>] {
        self.entries[i].state.vector()
    }

    pub fn degenerate_clusters(&self) -> &[Vec<usize>] {
        &self.degenerate_clusters
    }

    pub fn truncation_mass(&self) -> T {
        self.truncation_mass
    }

    /// Whether entry `i` shares its eigenvalue with another retained entry.
    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate_clusters.iter().any(|c| c.contains(&i))
    }

    pub fn has_degeneracy(&self) -> bool {
        !self.degenerate_clusters.is_empty()
    }

    /// Reorder entries so that new position k holds old entry `order[k]`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(
            order.len(),
            self.entries.len(),
            "order must be a permutation"
        );
        let mut inverse = vec![0; order.len()];
        let entries = order
            .iter()
            .enumerate()
            .map(|(k, &old)| {
                inverse[old] = k;
                let mut e = self.entries[old].clone();
                e.state.index = k;
                e
            })
            .collect();
        let mut degenerate_clusters: Vec<Vec<usize>> = self
            .degenerate_clusters
            .iter()
            .map(|c| {
                let mut c: Vec<usize> = c.iter().map(|&i| inverse[i]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        degenerate_clusters.sort();
        Self {
            layout: self.layout.clone(),
            entries,
            degenerate_clusters,
            truncation_mass: self.truncation_mass,
        }
    }
}

/// Chains of consecutive (descending) probabilities within [`DEGENERACY_GAP`].
fn clusters<T: Real>(probs: &[T]) -> Vec<Vec<usize>> {
    let gap = T::tol(DEGENERACY_GAP);
    let mut out = Vec::new();
    let mut current: Vec<usize> = vec![];
    for (i, &p) in probs.iter().enumerate() {
        match current.last() {
            Some(&j) if (probs[j] - p).abs() <= gap => current.push(i),
            _ => {
                if current.len() > 1 {
                    out.push(std::mem::take(&mut current));
                }
                current = vec![i];
            }
        }
    }
    if current.len() > 1 {
        out.push(current);
    }
    out
}

/// Spectral decomposition of ρ into an epistemic state, dropping eigenvalues
/// below `threshold` (their total goes to `truncation_mass`).
pub fn extract_epistemic<T: Real>(
    rho: &DensityMatrix<T>,
    threshold: T,
) -> Result<EpistemicState<T>> {
    if !(threshold >= T::zero() && threshold < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1)"
        )));
    }
    let layout = rho.layout().clone();
    if rho.purity() > T::one() - T::tol(PURE_TOL) {
        return EpistemicState::from_entries(
            layout,
            vec![(T::one(), dominant_column(rho.matrix()))],
            T::zero(),
        );
    }
    let eig = hermitian_eig(rho.matrix())?;
    let mut kept = Vec::new();
    for (k, &p) in eig.values.iter().enumerate() {
        if p > T::zero() && p >= threshold {
            kept.push((p.min(T::one()), eig.vector(k)));
        }
    }
    let retained: T = kept.iter().map(|(p, _)| *p).sum();
    let truncation = (T::one() - retained).max(T::zero());
    EpistemicState::from_entries(layout, kept, truncation)
}

/// Normalized column of a rank-1 projector with the largest diagonal entry.
fn dominant_column<T: Real>(m: &ComplexMatrix<T>) -> Vec<Complex<T>> {
    let n = m.rows();
    let j = (0..n)
        .max_by(|&a, &b| {
            m[(a, a)]
                .re
                .partial_cmp(&m[(b, b)].re)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let col = m.column(j);
    let norm = vec_norm(&col);
    col.into_iter().map(|z| z / norm).collect()
}

/// Σ p_i |Ψ_i><Ψ_i|, renormalized to unit trace.
pub fn epistemic_to_density<T: Real>(e: &EpistemicState<T>) -> Result<DensityMatrix<T>> {
    if e.is_empty() {
        return Err(Error::InvalidArgument("empty epistemic state".into()));
    }
    if e.truncation_mass() >= T::lit(1e-6) {
        return Err(Error::InvalidArgument(format!(
            "truncation mass {} too large to rebuild",
            e.truncation_mass()
        )));
    }
    let tol = T::tol(1e-9);
    for i in 0..e.len() {
        for j in i..e.len() {
            let ov = inner(e.vector(i), e.vector(j));
            let target = if i == j { T::one() } else { T::zero() };
            let dev = (ov - Complex::new(target, T::zero())).norm();
            if dev > tol {
                return Err(Error::NonOrthogonalEntries(dev.as_f64()));
            }
        }
    }
    let n = e.layout().total_dim();
    let mut m = ComplexMatrix::zeros(n, n);
    let mut total = T::zero();
    for entry in e.entries() {
        let v = entry.state.vector();
        let p = entry.probability;
        total += p;
        for i in 0..n {
            let vi = v[i] * p;
            for j in 0..n {
                m[(i, j)] = m[(i, j)] + vi * v[j].conj();
            }
        }
    }
    DensityMatrix::from_trusted(m.scale_real(T::one() / total), e.layout().clone())
}

/// Rank-1 orthogonal projector |Ψ><Ψ|.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T: Real = f64> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> Projector<T> {
    pub fn from_vector(v: &[Complex<T>]) -> Self {
        Self {
            matrix: ComplexMatrix::outer(v),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }
}

pub fn projector_of<T: Real>(s: &OnticState<T>) -> Projector<T> {
    Projector::from_vector(s.vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure_state, rng};
    use crate::scalar::c;

    fn qubit() -> SystemLayout {
        SystemLayout::single(2, "Q").unwrap()
    }

    #[test]
    fn density_validation() {
        let bad_trace = ComplexMatrix::<f64>::identity(2);
        assert!(DensityMatrix::<f64>::new(bad_trace, qubit()).is_err());
        let negative = ComplexMatrix::<f64>::from_real_rows(&[&[1.5, 0.0], &[0.0, -0.5]]);
        assert!(DensityMatrix::<f64>::new(negative, qubit()).is_err());
        let wrong_dim = ComplexMatrix::<f64>::identity(3).scale_real(1.0 / 3.0);
        assert!(matches!(
            DensityMatrix::<f64>::new(wrong_dim, qubit()),
            Err(Error::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn diagonal_three_level() {
        let layout = SystemLayout::single(3, "Q").unwrap();
        let rho =
            DensityMatrix::<f64>::new(ComplexMatrix::from_real_diagonal(&[0.2, 0.5, 0.3]), layout)
                .unwrap();
        let e = extract_epistemic(&rho, 1e-12).unwrap();
        assert_eq!(e.len(), 3);
        let probs = e.probabilities();
        assert!(
            (probs[0] - 0.5).abs() < 1e-15
                && (probs[1] - 0.3).abs() < 1e-15
                && (probs[2] - 0.2).abs() < 1e-15
        );
        assert_eq!(e.vector(0), &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(e.vector(1), &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(!e.has_degeneracy());
    }

    #[test]
    fn pure_state_single_entry() {
        let psi = random_pure_state::<f64, _>(4, &mut rng(8));
        let rho = DensityMatrix::from_pure(&psi, SystemLayout::single(4, "Q").unwrap()).unwrap();
        let e = extract_epistemic(&rho, 1e-12).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.probability(0), 1.0);
        assert!((inner(e.vector(0), &psi).norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn maximally_mixed_is_flagged() {
        let rho = DensityMatrix::<f64>::maximally_mixed(qubit());
        let e = extract_epistemic(&rho, 1e-12).unwrap();
        assert_eq!(e.probabilities(), vec![0.5, 0.5]);
        assert_eq!(e.degenerate_clusters(), &[vec![0, 1]]);
    }

    #[test]
    fn threshold_drops_mass() {
        let layout = SystemLayout::single(3, "Q").unwrap();
        let rho = DensityMatrix::<f64>::new(
            ComplexMatrix::from_real_diagonal(&[0.6, 0.4 - 1e-7, 1e-7]),
            layout,
        )
        .unwrap();
        let e = extract_epistemic(&rho, 1e-6).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e.truncation_mass() - 1e-7).abs() < 1e-15);
        assert!(extract_epistemic(&rho, 1.0).is_err());
    }

    #[test]
    fn rebuild_examples() {
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let single =
            EpistemicState::<f64>::from_entries(qubit(), vec![(1.0, e0.clone())], 0.0).unwrap();
        let rho = epistemic_to_density(&single).unwrap();
        assert_eq!(
            rho.matrix(),
            &ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
        );
        let two =
            EpistemicState::<f64>::from_entries(qubit(), vec![(0.7, e0.clone()), (0.3, e1)], 0.0)
                .unwrap();
        let rho = epistemic_to_density(&two).unwrap();
        assert!(
            rho.matrix()
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.7, 0.3]))
                < 1e-15
        );
        let plus = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let bad = EpistemicState::<f64>::from_entries(qubit(), vec![(0.5, e0), (0.5, plus)], 0.0)
            .unwrap();
        assert!(matches!(
            epistemic_to_density(&bad),
            Err(Error::NonOrthogonalEntries(_))
        ));
    }

    #[test]
    fn round_trip_rank_three() {
        let mut r = rng(21);
        let layout = SystemLayout::single(5, "Q").unwrap();
        for _ in 0..10 {
            let rho =
                DensityMatrix::<f64>::new(random_density::<f64, _>(5, 3, &mut r), layout.clone())
                    .unwrap();
            let e = extract_epistemic(&rho, 1e-12).unwrap();
            assert_eq!(e.len(), 3);
            let back = epistemic_to_density(&e).unwrap();
            assert!(back.matrix().distance(rho.matrix()) < 1e-10);
        }
    }

    #[test]
    fn projector_examples() {
        let s = OnticState::<f64>::new(vec![c(1.0, 0.0), c(0.0, 0.0)], qubit(), 0).unwrap();
        assert_eq!(
            projector_of(&s).matrix(),
            &ComplexMatrix::from_real_diagonal(&[1.0, 0.0])
        );
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = OnticState::<f64>::new(vec![c(h, 0.0), c(h, 0.0)], qubit(), 0).unwrap();
        let p = projector_of(&plus);
        assert!(
            p.matrix()
                .max_abs_diff(&ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]))
                < 1e-15
        );
        let v = random_pure_state::<f64, _>(6, &mut rng(2));
        let s = OnticState::<f64>::new(v, SystemLayout::single(6, "Q").unwrap(), 0).unwrap();
        let p = projector_of(&s);
        assert!((p.matrix().trace().re - 1.0).abs() < 1e-13);
        assert!((p.matrix() * p.matrix()).max_abs_diff(p.matrix()) < 1e-12);
    }

    #[test]
    fn product_state_reductions_are_pure() {
        let mut r = rng(5);
        let a = random_pure_state::<f64, _>(2, &mut r);
        let b = random_pure_state::<f64, _>(3, &mut r);
        let layout = SystemLayout::new(vec![2, 3], vec!["A", "B"]).unwrap();
        let psi: Vec<_> = crate::linalg::kron_vec(&a, &b);
        let rho = DensityMatrix::from_pure(&psi, layout).unwrap();
        for label in ["A", "B"] {
            let e = extract_epistemic(&rho.reduce(&[label]).unwrap(), 1e-12).unwrap();
            assert_eq!(e.len(), 1);
            assert!((e.probability(0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reordering_updates_indices_and_clusters() {
        let layout = SystemLayout::single(3, "Q").unwrap();
        let rho =
            DensityMatrix::<f64>::new(ComplexMatrix::from_real_diagonal(&[0.4, 0.4, 0.2]), layout)
                .unwrap();
        let e = extract_epistemic(&rho, 1e-12).unwrap();
        assert_eq!(e.degenerate_clusters(), &[vec![0, 1]]);
        let r = e.reordered(&[2, 0, 1]);
        assert_eq!(r.degenerate_clusters(), &[vec![1, 2]]);
        assert_eq!(r.entries()[0].state.index(), 0);
        assert!((r.probability(0) - 0.2).abs() < 1e-15);
    }
}
