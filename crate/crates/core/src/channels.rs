//! Linear CPT maps: Kraus and superoperator forms, Lindblad generators,
//! exact exponentiation, composition and complete-positivity checks.
//!
//! Vectorization is row-major: vec(ρ)[i·d + j] = ρ_ij, so
//! vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ). The Choi matrix uses the unnormalized
//! maximally entangled vector |Ω> = Σ_i |ii>:
//! Choi = (ℰ ⊗ id)(|Ω><Ω|), i.e. Choi[(a,i),(b,j)] = ℰ(|i><j|)_ab.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{expm, hermitian_eig, inner, kron, ComplexMatrix, SystemLayout};
use crate::scalar::Real;
use crate::states::DensityMatrix;

/// Tolerance for Σ K†K = I when accepting a Kraus set.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CptReport<T: Real = f64> {
    pub is_tp: bool,
    pub is_cp: bool,
    pub choi_min_eigenvalue: T,
    pub completeness_residual: T,
}

impl<T: Real> CptReport<T> {
    pub fn is_cpt(&self) -> bool {
        self.is_tp && self.is_cp
    }

    fn new(choi_min: T, residual: T, tol: T) -> Self {
        Self {
            is_tp: residual <= tol,
            is_cp: choi_min >= -tol,
            choi_min_eigenvalue: choi_min,
            completeness_residual: residual,
        }
    }
}

/// Common surface of every dynamical map representation.
pub trait CptMap<T: Real> {
    fn dim(&self) -> usize;

    /// ℰ[ρ] on a raw matrix.
    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>>;

    fn superoperator(&self) -> Superoperator<T>;

    fn cpt_report(&self, tol: T) -> CptReport<T>;

    /// <to| ℰ[|from><from|] |to>
    fn transition_probability(&self, from: &[Complex<T>], to: &[Complex<T>]) -> Result<T> {
        let out = self.apply_matrix(&ComplexMatrix::outer(from))?;
        Ok(out.sandwich(to, to)?.re)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// ρ ↦ Σ_k K_k ρ K_k†
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel<T: Real = f64> {
    ops: Vec<ComplexMatrix<T>>,
    dim: usize,
}

impl<T: Real> KrausChannel<T> {
    /// Accepts a Kraus set whose completeness residual is within
    /// [`COMPLETENESS_TOL`].
    pub fn new(ops: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let ch = Self::unchecked(ops)?;
        let residual = ch.completeness_residual();
        if residual > T::tol(COMPLETENESS_TOL) {
            return Err(Error::CptVerificationFailed(format!(
                "completeness residual {residual:e}"
            )));
        }
        Ok(ch)
    }

    /// Shape checks only; completeness is left to [`verify_cpt`].
    pub fn unchecked(ops: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("Kraus set is empty".into()))?;
        let dim = first.dim()?;
        for op in &ops {
            check_dim(dim, op.dim()?)?;
        }
        Ok(Self { ops, dim })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            ops: vec![ComplexMatrix::identity(d)],
            dim: d,
        }
    }

    pub fn ops(&self) -> &[ComplexMatrix<T>] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// ||Σ K†K − I||_F
    pub fn completeness_residual(&self) -> T {
        let mut s = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            s = &s + &(&k.dagger() * k);
        }
        s.distance(&ComplexMatrix::identity(self.dim))
    }

    /// Choi matrix assembled from the vectorized Kraus operators.
    pub fn choi(&self) -> ComplexMatrix<T> {
        let n = self.dim * self.dim;
        let mut c = ComplexMatrix::zeros(n, n);
        for k in &self.ops {
            let v = k.as_slice();
            for x in 0..n {
                for y in 0..n {
                    c[(x, y)] = c[(x, y)] + v[x] * v[y].conj();
                }
            }
        }
        c
    }

    /// Smallest Choi eigenvalue without forming the d²×d² Choi matrix: the
    /// nonzero spectrum of Σ_k |K_k⟫⟪K_k| equals that of the Gram matrix
    /// ⟪K_k|K_l⟫, and the rest is zero.
    pub fn choi_min_eigenvalue(&self) -> T {
        let r = self.ops.len();
        let n = self.dim * self.dim;
        let gram = ComplexMatrix::from_fn(r, r, |k, l| {
            inner(self.ops[k].as_slice(), self.ops[l].as_slice())
        });
        let mut vals = hermitian_eig(&gram.hermitian_part())
            .map(|e| e.values)
            .unwrap_or_default();
        vals.resize(vals.len().max(n), T::zero());
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        vals[n - 1]
    }
}

impl<T: Real> CptMap<T> for KrausChannel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        check_dim(self.dim, rho.dim()?)?;
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &k.matmul(rho)?.matmul(&k.dagger())?;
        }
        Ok(out)
    }

    fn superoperator(&self) -> Superoperator<T> {
        let n = self.dim * self.dim;
        let mut s = ComplexMatrix::zeros(n, n);
        for k in &self.ops {
            s = &s + &kron(k, &k.conj());
        }
        Superoperator {
            matrix: s,
            dim: self.dim,
        }
    }

    fn cpt_report(&self, tol: T) -> CptReport<T> {
        CptReport::new(
            self.choi_min_eigenvalue(),
            self.completeness_residual(),
            tol,
        )
    }

    fn transition_probability(&self, from: &[Complex<T>], to: &[Complex<T>]) -> Result<T> {
        check_dim(self.dim, from.len())?;
        check_dim(self.dim, to.len())?;
        let mut p = T::zero();
        for k in &self.ops {
            p += inner(to, &k.mat_vec(from)?).norm_sqr();
        }
        Ok(p)
    }
}

/// d²×d² matrix acting on row-major vectorized operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<T: Real = f64> {
    matrix: ComplexMatrix<T>,
    dim: usize,
}

impl<T: Real> Superoperator<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let n = matrix.dim()?;
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::InvalidArgument(format!(
                "superoperator side {n} is not a square number"
            )));
        }
        Ok(Self { matrix, dim: d })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d * d),
            dim: d,
        }
    }

    /// ρ ↦ ρᵀ: positive and trace preserving but not completely positive.
    pub fn transpose_map(d: usize) -> Self {
        let n = d * d;
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..d {
            for j in 0..d {
                m[(j * d + i, i * d + j)] = Complex::one();
            }
        }
        Self { matrix: m, dim: d }
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Choi[(a,i),(b,j)] = S[(a,b),(i,j)].
    pub fn choi(&self) -> ComplexMatrix<T> {
        let d = self.dim;
        ComplexMatrix::from_fn(d * d, d * d, |x, y| {
            let (a, i) = (x / d, x % d);
            let (b, j) = (y / d, y % d);
            self.matrix[(a * d + b, i * d + j)]
        })
    }

    /// ||Tr ℰ(|i><j|) − δ_ij||_F over all (i, j).
    pub fn trace_residual(&self) -> T {
        let d = self.dim;
        let mut s = T::zero();
        for i in 0..d {
            for j in 0..d {
                let mut tr = Complex::zero();
                for a in 0..d {
                    tr = tr + self.matrix[(a * d + a, i * d + j)];
                }
                if i == j {
                    tr = tr - Complex::one();
                }
                s += tr.norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn compose(&self, earlier: &Self) -> Result<Self> {
        check_dim(self.dim, earlier.dim)?;
        Ok(Self {
            matrix: self.matrix.matmul(&earlier.matrix)?,
            dim: self.dim,
        })
    }

    pub fn distance(&self, other: &Self) -> T {
        self.matrix.distance(&other.matrix)
    }

    /// Kraus form from the Choi eigendecomposition. Eigenvalues below
    /// [`KRAUS_CUTOFF`] are dropped; a residual completeness defect under
    /// [`COMPLETENESS_TOL`] is absorbed by K ↦ K S^{-1/2}, anything larger
    /// (or a clearly negative Choi eigenvalue) is an error.
    pub fn to_kraus(&self) -> Result<KrausChannel<T>> {
        let d = self.dim;
        let eig = hermitian_eig(&self.choi().hermitian_part())?;
        let tol = T::tol(COMPLETENESS_TOL);
        if eig.min_value() < -tol {
            return Err(Error::CptVerificationFailed(format!(
                "Choi matrix has eigenvalue {:e}",
                eig.min_value()
            )));
        }
        let cutoff = T::tol(KRAUS_CUTOFF);
        let mut ops = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam < cutoff {
                continue;
            }
            let v = eig.vector(k);
            let s = lam.sqrt();
            ops.push(ComplexMatrix::from_fn(d, d, |a, i| v[a * d + i] * s));
        }
        if ops.is_empty() {
            return Err(Error::CptVerificationFailed("map is zero".into()));
        }
        let mut ch = KrausChannel { ops, dim: d };
        let residual = ch.completeness_residual();
        if residual > tol {
            return Err(Error::CptVerificationFailed(format!(
                "completeness residual {residual:e}"
            )));
        }
        if !residual.is_zero() {
            let mut sum = ComplexMatrix::zeros(d, d);
            for k in &ch.ops {
                sum = &sum + &(&k.dagger() * k);
            }
            let inv_sqrt =
                hermitian_eig(&sum.hermitian_part())?.map_values(|x| T::one() / x.sqrt());
            ch.ops = ch.ops.iter().map(|k| k * &inv_sqrt).collect();
        }
        Ok(ch)
    }
}

impl<T: Real> CptMap<T> for Superoperator<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        check_dim(self.dim, rho.dim()?)?;
        let out = self.matrix.mat_vec(rho.as_slice())?;
        ComplexMatrix::new(self.dim, self.dim, out)
    }

    fn superoperator(&self) -> Superoperator<T> {
        self.clone()
    }

    fn cpt_report(&self, tol: T) -> CptReport<T> {
        let choi_min = hermitian_eig(&self.choi().hermitian_part())
            .map(|e| e.min_value())
            .unwrap_or_else(|_| T::neg_infinity());
        CptReport::new(choi_min, self.trace_residual(), tol)
    }
}

/// A unitary acting on a subset of the factors of a composite system.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary<T: Real = f64> {
    layout: SystemLayout,
    targets: Vec<usize>,
    unitary: ComplexMatrix<T>,
}

impl<T: Real> LocalUnitary<T> {
    /// `targets` are labels in the order matching the Kronecker structure of
    /// `unitary`.
    pub fn new<S: AsRef<str>>(
        layout: SystemLayout,
        targets: &[S],
        unitary: ComplexMatrix<T>,
    ) -> Result<Self> {
        let targets = targets
            .iter()
            .map(|l| layout.position(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut uniq = targets.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != targets.len() || targets.is_empty() {
            return Err(Error::InvalidArgument(
                "local unitary targets must be distinct and nonempty".into(),
            ));
        }
        let local: usize = targets.iter().map(|&p| layout.dims()[p]).product();
        check_dim(local, unitary.dim()?)?;
        let residual = unitary.unitarity_residual();
        if residual > T::tol(UNITARY_TOL) {
            return Err(Error::NotUnitary(residual.as_f64()));
        }
        Ok(Self {
            layout,
            targets,
            unitary,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn target_labels(&self) -> Vec<&str> {
        self.targets
            .iter()
            .map(|&p| self.layout.labels()[p].as_str())
            .collect()
    }

    pub fn unitary(&self) -> &ComplexMatrix<T> {
        &self.unitary
    }

    /// Parent index split as (local index, rest offset) tables.
    fn index_tables(&self) -> (Vec<usize>, Vec<usize>) {
        let strides = self.layout.strides();
        let local_layout = self.layout.select(&self.targets);
        let local_off: Vec<usize> = (0..local_layout.total_dim())
            .map(|i| {
                local_layout
                    .digits(i)
                    .iter()
                    .zip(&self.targets)
                    .map(|(&d, &p)| d * strides[p])
                    .sum()
            })
            .collect();
        let rest: Vec<usize> = (0..self.layout.n_factors())
            .filter(|p| !self.targets.contains(p))
            .collect();
        let rest_layout = self.layout.select(&rest);
        let rest_off: Vec<usize> = (0..rest_layout.total_dim())
            .map(|i| {
                rest_layout
                    .digits(i)
                    .iter()
                    .zip(&rest)
                    .map(|(&d, &p)| d * strides[p])
                    .sum()
            })
            .collect();
        (local_off, rest_off)
    }

    pub fn apply_vector(&self, psi: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_dim(self.layout.total_dim(), psi.len())?;
        let (local, rest) = self.index_tables();
        let mut out = vec![Complex::zero(); psi.len()];
        for &r in &rest {
            for (a, &la) in local.iter().enumerate() {
                let mut acc = Complex::zero();
                for (b, &lb) in local.iter().enumerate() {
                    acc = acc + self.unitary[(a, b)] * psi[lb + r];
                }
                out[la + r] = acc;
            }
        }
        Ok(out)
    }

    /// Full-space unitary (I ⊗ U up to factor ordering).
    pub fn embedded(&self) -> ComplexMatrix<T> {
        let n = self.layout.total_dim();
        let (local, rest) = self.index_tables();
        let mut m = ComplexMatrix::zeros(n, n);
        for &r in &rest {
            for (a, &la) in local.iter().enumerate() {
                for (b, &lb) in local.iter().enumerate() {
                    m[(la + r, lb + r)] = self.unitary[(a, b)];
                }
            }
        }
        m
    }

    pub fn to_channel(&self) -> KrausChannel<T> {
        KrausChannel {
            ops: vec![self.embedded()],
            dim: self.layout.total_dim(),
        }
    }
}

impl<T: Real> CptMap<T> for LocalUnitary<T> {
    fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let n = rho.dim()?;
        check_dim(self.dim(), n)?;
        // U ρ U† = (U (U ρ)†)† with ρ Hermitian
        let cols: Vec<Vec<Complex<T>>> = (0..n)
            .map(|j| self.apply_vector(&rho.column(j)))
            .collect::<Result<_>>()?;
        let u_rho = ComplexMatrix::from_columns(&cols);
        let adj = u_rho.dagger();
        let cols: Vec<Vec<Complex<T>>> = (0..n)
            .map(|j| self.apply_vector(&adj.column(j)))
            .collect::<Result<_>>()?;
        Ok(ComplexMatrix::from_columns(&cols).dagger())
    }

    fn superoperator(&self) -> Superoperator<T> {
        self.to_channel().superoperator()
    }

    /// Embedding I ⊗ U preserves the CPT properties of U, so the report is
    /// computed on the local unitary channel.
    fn cpt_report(&self, tol: T) -> CptReport<T> {
        let local = KrausChannel {
            ops: vec![self.unitary.clone()],
            dim: self.unitary.rows(),
        };
        local.cpt_report(tol)
    }

    fn transition_probability(&self, from: &[Complex<T>], to: &[Complex<T>]) -> Result<T> {
        Ok(inner(to, &self.apply_vector(from)?).norm_sqr())
    }
}

/// Local unitaries applied in order, kept factored so large registers
/// never need a full-space matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitarySequence<T: Real = f64> {
    layout: SystemLayout,
    gates: Vec<LocalUnitary<T>>,
}

impl<T: Real> UnitarySequence<T> {
    pub fn new(layout: SystemLayout, gates: Vec<LocalUnitary<T>>) -> Result<Self> {
        if let Some(g) = gates.iter().find(|g| g.layout() != &layout) {
            return Err(Error::InvalidArgument(format!(
                "gate on {:?} does not act on layout {:?}",
                g.target_labels(),
                layout.labels()
            )));
        }
        Ok(Self { layout, gates })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[LocalUnitary<T>] {
        &self.gates
    }

    pub fn apply_vector(&self, psi: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_dim(self.dim(), psi.len())?;
        self.gates
            .iter()
            .try_fold(psi.to_vec(), |v, g| g.apply_vector(&v))
    }

    /// Full-space product unitary, last gate leftmost.
    pub fn embedded(&self) -> ComplexMatrix<T> {
        self.gates
            .iter()
            .fold(ComplexMatrix::identity(self.dim()), |acc, g| {
                &g.embedded() * &acc
            })
    }
}

impl<T: Real> CptMap<T> for UnitarySequence<T> {
    fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        check_dim(self.dim(), rho.dim()?)?;
        self.gates
            .iter()
            .try_fold(rho.clone(), |m, g| g.apply_matrix(&m))
    }

    fn superoperator(&self) -> Superoperator<T> {
        KrausChannel {
            ops: vec![self.embedded()],
            dim: self.dim(),
        }
        .superoperator()
    }

    /// Worst case over the individual gates (the identity Choi minimum 0 when
    /// empty); a product of CPT maps is CPT.
    fn cpt_report(&self, tol: T) -> CptReport<T> {
        let (choi_min, residual) = self.gates.iter().map(|g| g.cpt_report(tol)).fold(
            (T::zero(), T::zero()),
            |(m, r), rep| {
                (
                    m.min(rep.choi_min_eigenvalue),
                    r.max(rep.completeness_residual),
                )
            },
        );
        CptReport::new(choi_min, residual, tol)
    }

    fn transition_probability(&self, from: &[Complex<T>], to: &[Complex<T>]) -> Result<T> {
        Ok(inner(to, &self.apply_vector(from)?).norm_sqr())
    }
}

/// Single Kraus operator `u`.
pub fn unitary_channel<T: Real>(u: ComplexMatrix<T>) -> Result<KrausChannel<T>> {
    u.dim()?;
    let residual = u.unitarity_residual();
    if residual > T::tol(UNITARY_TOL) {
        return Err(Error::NotUnitary(residual.as_f64()));
    }
    KrausChannel::unchecked(vec![u])
}

/// ℰ[ρ] as a density matrix over the same layout.
pub fn apply<T: Real, C: CptMap<T> + ?Sized>(
    ch: &C,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    check_dim(ch.dim(), rho.dim())?;
    let out = ch.apply_matrix(rho.matrix())?;
    DensityMatrix::from_trusted(out, rho.layout().clone())
}

pub fn verify_cpt<T: Real, C: CptMap<T> + ?Sized>(ch: &C, tol: T) -> CptReport<T> {
    ch.cpt_report(tol)
}

/// Kraus set {K₂ᵢ K₁ⱼ} of `later ∘ earlier`; exactly-zero products are dropped.
pub fn compose<T: Real>(
    later: &KrausChannel<T>,
    earlier: &KrausChannel<T>,
) -> Result<KrausChannel<T>> {
    check_dim(later.dim, earlier.dim)?;
    let mut ops = Vec::with_capacity(later.len() * earlier.len());
    for a in &later.ops {
        for b in &earlier.ops {
            let p = a.matmul(b)?;
            if !p.max_abs().is_zero() {
                ops.push(p);
            }
        }
    }
    if ops.is_empty() {
        return Err(Error::CptVerificationFailed(
            "composition annihilates every state".into(),
        ));
    }
    let ch = KrausChannel {
        ops,
        dim: later.dim,
    };
    let report = ch.cpt_report(T::tol(COMPLETENESS_TOL));
    if !report.is_cpt() {
        return Err(Error::CptVerificationFailed(format!("{report:?}")));
    }
    Ok(ch)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator<T: Real = f64> {
    pub operator: ComplexMatrix<T>,
    pub rate: T,
}

/// ρ̇ = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}), ħ = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladGenerator<T: Real = f64> {
    hamiltonian: ComplexMatrix<T>,
    jumps: Vec<JumpOperator<T>>,
}

impl<T: Real> LindbladGenerator<T> {
    pub fn new(hamiltonian: ComplexMatrix<T>, jumps: Vec<JumpOperator<T>>) -> Result<Self> {
        let d = hamiltonian.dim()?;
        let herm = hamiltonian.hermiticity_residual();
        if herm > T::tol(crate::linalg::HERMITIAN_TOL) {
            return Err(Error::NotHermitian(herm.as_f64()));
        }
        for j in &jumps {
            check_dim(d, j.operator.dim()?)?;
            if j.rate.is_nan() || j.rate < T::zero() {
                return Err(Error::InvalidArgument(format!(
                    "negative jump rate {}",
                    j.rate
                )));
            }
        }
        Ok(Self {
            hamiltonian: hamiltonian.hermitian_part(),
            jumps,
        })
    }

    /// H = 0 with no jumps.
    pub fn trivial(d: usize) -> Self {
        Self {
            hamiltonian: ComplexMatrix::zeros(d, d),
            jumps: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix<T> {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[JumpOperator<T>] {
        &self.jumps
    }
}

/// Row-major vectorization of the Lindblad generator.
pub fn lindblad_superoperator<T: Real>(g: &LindbladGenerator<T>) -> Superoperator<T> {
    let d = g.dim();
    let id = ComplexMatrix::identity(d);
    let minus_i = Complex::new(T::zero(), -T::one());
    let h = &g.hamiltonian;
    let mut l = (&kron(h, &id) - &kron(&id, &h.transpose())).scale(minus_i);
    let half = T::lit(0.5);
    for jump in &g.jumps {
        if jump.rate.is_zero() {
            continue;
        }
        let op = &jump.operator;
        let ldl = &op.dagger() * op;
        let term = &(&kron(op, &op.conj()) - &kron(&ldl, &id).scale_real(half))
            - &kron(&id, &ldl.transpose()).scale_real(half);
        l = &l + &term.scale_real(jump.rate);
    }
    Superoperator { matrix: l, dim: d }
}

/// exp(L·duration) as a Kraus channel.
///
/// The one-step propagator exp(L·duration/steps) is raised to the `steps`-th
/// power by repeated squaring, then converted through the Choi matrix and
/// verified before it is returned.
pub fn evolve<T: Real>(
    g: &LindbladGenerator<T>,
    duration: T,
    steps: usize,
) -> Result<KrausChannel<T>> {
    evolve_superoperator(g, duration, steps)?
        .to_kraus()
        .and_then(|ch| {
            let report = ch.cpt_report(T::tol(COMPLETENESS_TOL));
            if report.is_cpt() {
                Ok(ch)
            } else {
                Err(Error::CptVerificationFailed(format!("{report:?}")))
            }
        })
}

/// exp(L·duration) in superoperator form.
pub fn evolve_superoperator<T: Real>(
    g: &LindbladGenerator<T>,
    duration: T,
    steps: usize,
) -> Result<Superoperator<T>> {
    if !duration.is_finite() || duration < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} must be finite and nonnegative"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let d = g.dim();
    if duration.is_zero() {
        return Ok(Superoperator::identity(d));
    }
    let gen = lindblad_superoperator(g);
    let tau = duration / T::lit(steps as f64);
    let step = expm(&gen.matrix.scale_real(tau))?;
    let mut result = ComplexMatrix::identity(d * d);
    let mut base = step;
    let mut k = steps;
    while k > 0 {
        if k & 1 == 1 {
            result = result.matmul(&base)?;
        }
        k >>= 1;
        if k > 0 {
            base = base.matmul(&base)?;
        }
    }
    Ok(Superoperator {
        matrix: result,
        dim: d,
    })
}

/// Kraus set {|i><i|}: removes every coherence in the computational basis.
pub fn full_dephasing<T: Real>(d: usize) -> KrausChannel<T> {
    let ops = (0..d)
        .map(|i| {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(i, i)] = Complex::one();
            m
        })
        .collect();
    KrausChannel { ops, dim: d }
}
