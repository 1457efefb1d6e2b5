//! Quantum conditional probabilities between ontic states.
//!
//! The general form relates an eigenstate w of the parent ρ_W(t) to
//! eigenstates i₁…iₙ of the block reductions ρ_{Q_α}(t′):
//!
//! p(i₁…iₙ; t′ | w; t) = Tr_W[(P_{Q₁}(i₁; t′) ⊗ ⋯ ⊗ P_{Qₙ}(iₙ; t′)) ℰ[P_W(w; t)]]
//!
//! With the identity channel it reduces to the single-time kinematic form,
//! and with a single block equal to W it becomes the two-time dynamical form
//! Tr[P(j; t′) ℰ[P(i; t)]].

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::channels::{apply, CptMap, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{inner, kron_all, kron_vec, permutation_matrix, ComplexMatrix, SystemLayout};
use crate::scalar::Real;
use crate::states::{
    extract_epistemic, projector_of, DensityMatrix, EpistemicState, DEFAULT_THRESHOLD,
};

/// Round-off band around [0, 1] that is clamped rather than rejected.
pub const CLAMP_TOL: f64 = 1e-10;
/// Row-sum tolerance reported on conditional tables.
pub const ROW_SUM_TOL: f64 = 1e-8;

/// What to do when a queried index sits in a degenerate eigenvalue cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DegeneracyMode {
    /// Refuse basis-dependent queries.
    #[default]
    Strict,
    /// Answer in the canonical eigenbasis and mark the result.
    Permissive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalOptions<T: Real = f64> {
    pub threshold: T,
    pub mode: DegeneracyMode,
}

impl<T: Real> Default for ConditionalOptions<T> {
    fn default() -> Self {
        Self {
            threshold: T::lit(DEFAULT_THRESHOLD),
            mode: DegeneracyMode::Strict,
        }
    }
}

impl<T: Real> ConditionalOptions<T> {
    pub fn permissive() -> Self {
        Self {
            mode: DegeneracyMode::Permissive,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalValue<T: Real = f64> {
    pub probability: T,
    /// Set when an index lies in a degenerate cluster (permissive mode only).
    pub basis_dependent: bool,
}

/// Disjoint blocks Q₁…Qₙ covering every factor of a parent layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    layout: SystemLayout,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Labels inside a block are reordered to layout order.
    pub fn new<S: AsRef<str>>(layout: SystemLayout, blocks: &[Vec<S>]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "partition needs at least one block".into(),
            ));
        }
        let mut seen = vec![false; layout.n_factors()];
        let mut out = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidArgument("empty partition block".into()));
            }
            let mut pos = Vec::with_capacity(block.len());
            for label in block {
                let p = layout.position(label.as_ref())?;
                if seen[p] {
                    return Err(Error::InvalidArgument(format!(
                        "label `{}` appears twice",
                        label.as_ref()
                    )));
                }
                seen[p] = true;
                pos.push(p);
            }
            pos.sort_unstable();
            out.push(pos);
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "label `{}` is not covered by the partition",
                layout.labels()[p]
            )));
        }
        Ok(Self {
            layout,
            blocks: out,
        })
    }

    /// Single block equal to the whole parent.
    pub fn trivial(layout: SystemLayout) -> Self {
        let blocks = vec![(0..layout.n_factors()).collect()];
        Self { layout, blocks }
    }

    /// One block per factor.
    pub fn singletons(layout: SystemLayout) -> Self {
        let blocks = (0..layout.n_factors()).map(|p| vec![p]).collect();
        Self { layout, blocks }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_positions(&self, alpha: usize) -> &[usize] {
        &self.blocks[alpha]
    }

    pub fn block_labels(&self, alpha: usize) -> Vec<String> {
        self.blocks[alpha]
            .iter()
            .map(|&p| self.layout.labels()[p].clone())
            .collect()
    }

    pub fn block_name(&self, alpha: usize) -> String {
        self.block_labels(alpha).join("+")
    }

    /// Factor positions with blocks concatenated in partition order.
    pub fn block_order(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Block-order composite index → parent composite index.
    pub fn permutation(&self) -> Vec<usize> {
        self.layout
            .permutation_to(&self.block_order())
            .expect("partition blocks form a factor permutation")
    }
}

fn system_name(layout: &SystemLayout) -> String {
    layout.labels().join("+")
}

/// Validate an index against an epistemic state; returns whether it is
/// basis dependent.
fn check_index<T: Real>(
    state: &EpistemicState<T>,
    index: usize,
    mode: DegeneracyMode,
) -> Result<bool> {
    if index >= state.len() {
        return Err(Error::IndexOutOfRange {
            system: system_name(state.layout()),
            index,
            len: state.len(),
        });
    }
    let degenerate = state.is_degenerate(index);
    if degenerate && mode == DegeneracyMode::Strict {
        return Err(Error::DegenerateBasisRefused {
            system: system_name(state.layout()),
            index,
        });
    }
    Ok(degenerate)
}

/// Accept values within [`CLAMP_TOL`] of [0, 1] and clamp them.
pub fn finalize_probability<T: Real>(value: Complex<T>) -> Result<T> {
    let tol = T::tol(CLAMP_TOL);
    if value.im.abs() > tol {
        return Err(Error::ImaginaryResidue(value.im.as_f64()));
    }
    let p = value.re;
    if p < -tol {
        return Err(Error::NegativeProbability(p.as_f64()));
    }
    if p > T::one() + tol {
        return Err(Error::ProbabilityAboveOne(p.as_f64()));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// Eigen-data at both ends of the interval for a given parent state,
/// channel and partition.
#[derive(Clone, Debug)]
pub struct ConditionalSetup<T: Real = f64> {
    partition: Partition,
    parent: EpistemicState<T>,
    evolved: DensityMatrix<T>,
    blocks: Vec<EpistemicState<T>>,
    options: ConditionalOptions<T>,
}

impl<T: Real> ConditionalSetup<T> {
    pub fn new<C: CptMap<T> + ?Sized>(
        rho_w: &DensityMatrix<T>,
        ch: &C,
        partition: &Partition,
        options: ConditionalOptions<T>,
    ) -> Result<Self> {
        if rho_w.layout() != partition.layout() {
            return Err(Error::InvalidArgument(
                "partition layout differs from the state layout".into(),
            ));
        }
        let parent = extract_epistemic(rho_w, options.threshold)?;
        let evolved = apply(ch, rho_w)?;
        let blocks = (0..partition.n_blocks())
            .map(|a| {
                let reduced = evolved.reduce(&partition.block_labels(a))?;
                extract_epistemic(&reduced, options.threshold)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            partition: partition.clone(),
            parent,
            evolved,
            blocks,
            options,
        })
    }

    pub fn parent(&self) -> &EpistemicState<T> {
        &self.parent
    }

    pub fn blocks(&self) -> &[EpistemicState<T>] {
        &self.blocks
    }

    pub fn evolved(&self) -> &DensityMatrix<T> {
        &self.evolved
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Check every index; the result says whether any is basis dependent.
    pub fn check(&self, w: usize, indices: &[usize]) -> Result<bool> {
        if indices.len() != self.blocks.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} subsystem indices, got {}",
                self.blocks.len(),
                indices.len()
            )));
        }
        let mut flagged = check_index(&self.parent, w, self.options.mode)?;
        for (state, &i) in self.blocks.iter().zip(indices) {
            flagged |= check_index(state, i, self.options.mode)?;
        }
        Ok(flagged)
    }

    /// Tensor product of block projectors, embedded into parent factor order
    /// by an explicit permutation operator.
    pub fn embedded_block_projector(&self, indices: &[usize]) -> ComplexMatrix<T> {
        let factors: Vec<ComplexMatrix<T>> = self
            .blocks
            .iter()
            .zip(indices)
            .map(|(state, &i)| projector_of(&state.entries()[i].state).into_matrix())
            .collect();
        let product = kron_all(&factors);
        let pi = permutation_matrix::<T>(&self.partition.permutation());
        &(&pi * &product) * &pi.transpose()
    }

    /// Product vector ψ_{i₁} ⊗ ⋯ ⊗ ψ_{iₙ} scattered into parent order.
    pub fn embedded_block_vector(&self, indices: &[usize]) -> Vec<Complex<T>> {
        let product = self.blocks.iter().zip(indices).fold(
            vec![Complex::new(T::one(), T::zero())],
            |acc, (state, &i)| kron_vec(&acc, state.vector(i)),
        );
        let perm = self.partition.permutation();
        let mut out = vec![Complex::zero(); product.len()];
        for (k, z) in product.into_iter().enumerate() {
            out[perm[k]] = z;
        }
        out
    }

    /// Tr[(⊗ P_{iα}) ℰ[P_w]] evaluated literally with full projectors.
    pub fn joint<C: CptMap<T> + ?Sized>(
        &self,
        ch: &C,
        w: usize,
        indices: &[usize],
    ) -> Result<ConditionalValue<T>> {
        let flagged = self.check(w, indices)?;
        let p_w = projector_of(&self.parent.entries()[w].state);
        let moved = ch.apply_matrix(p_w.matrix())?;
        let value = self
            .embedded_block_projector(indices)
            .trace_product(&moved)?;
        Ok(ConditionalValue {
            probability: finalize_probability(value)?,
            basis_dependent: flagged,
        })
    }
}

/// General parent → blocks conditional probability over the interval of `ch`.
pub fn joint_conditional<T: Real, C: CptMap<T> + ?Sized>(
    rho_w: &DensityMatrix<T>,
    ch: &C,
    partition: &Partition,
    w: usize,
    indices: &[usize],
    options: ConditionalOptions<T>,
) -> Result<ConditionalValue<T>> {
    ConditionalSetup::new(rho_w, ch, partition, options)?.joint(ch, w, indices)
}

/// Single-time form |<ψ_{i₁} ⊗ ⋯ ⊗ ψ_{iₙ} | Ψ_w>|².
pub fn kinematic_conditional<T: Real>(
    rho_w: &DensityMatrix<T>,
    partition: &Partition,
    w: usize,
    indices: &[usize],
    options: ConditionalOptions<T>,
) -> Result<ConditionalValue<T>> {
    let id = KrausChannel::identity(rho_w.dim());
    let setup = ConditionalSetup::new(rho_w, &id, partition, options)?;
    let flagged = setup.check(w, indices)?;
    let product = setup.embedded_block_vector(indices);
    let amp = inner(&product, setup.parent.vector(w));
    Ok(ConditionalValue {
        probability: finalize_probability(Complex::new(amp.norm_sqr(), T::zero()))?,
        basis_dependent: flagged,
    })
}

/// Two-time form Tr[P(j; t′) ℰ[P(i; t)]] for one system, where t′ is the end
/// of the interval covered by `ch`.
pub fn dynamical_conditional<T: Real, C: CptMap<T> + ?Sized>(
    rho_t: &DensityMatrix<T>,
    ch: &C,
    i: usize,
    j: usize,
    options: ConditionalOptions<T>,
) -> Result<ConditionalValue<T>> {
    let before = extract_epistemic(rho_t, options.threshold)?;
    let after = extract_epistemic(&apply(ch, rho_t)?, options.threshold)?;
    let flagged = check_index(&before, i, options.mode)? | check_index(&after, j, options.mode)?;
    let p = ch.transition_probability(before.vector(i), after.vector(j))?;
    Ok(ConditionalValue {
        probability: finalize_probability(Complex::new(p, T::zero()))?,
        basis_dependent: flagged,
    })
}

/// Raw transition matrix p(j | i) between two epistemic states of the same
/// system, rows indexed by `from`; values are finalized but rows are not
/// renormalized.
pub fn transition_matrix<T: Real, C: CptMap<T> + ?Sized>(
    ch: &C,
    from: &EpistemicState<T>,
    to: &EpistemicState<T>,
) -> Result<Vec<Vec<T>>> {
    (0..from.len())
        .map(|i| {
            (0..to.len())
                .map(|j| {
                    let p = ch.transition_probability(from.vector(i), to.vector(j))?;
                    finalize_probability(Complex::new(p, T::zero()))
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow<T: Real = f64> {
    pub w: usize,
    pub indices: Vec<usize>,
    pub probability: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport<T: Real = f64> {
    /// Σ over block indices for each parent index w.
    pub row_sums: Vec<T>,
    pub max_row_deviation: T,
    /// Max over blocks and indices of |Σ_w p_w Σ_rest p(…|w) − p_{Q_α}(i)|.
    pub max_marginal_deviation: T,
    pub normalized: bool,
}

/// Every retained (w, i₁…iₙ) combination with its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable<T: Real = f64> {
    pub parent: EpistemicState<T>,
    pub blocks: Vec<EpistemicState<T>>,
    pub block_labels: Vec<Vec<String>>,
    pub rows: Vec<TableRow<T>>,
    pub channel_id: String,
    pub times: (T, T),
    pub basis_dependent: bool,
    pub report: TableReport<T>,
}

impl<T: Real> ConditionalTable<T> {
    pub fn get(&self, w: usize, indices: &[usize]) -> Option<T> {
        self.rows
            .iter()
            .find(|r| r.w == w && r.indices == indices)
            .map(|r| r.probability)
    }
}

/// All multi-indices of a mixed-radix counter, last digit fastest.
fn multi_indices(radices: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = radices.iter().product();
    (0..total)
        .map(|mut k| {
            let mut digits = vec![0; radices.len()];
            for a in (0..radices.len()).rev() {
                digits[a] = k % radices[a];
                k /= radices[a];
            }
            digits
        })
        .collect()
}

/// Exhaustive table with normalization and marginal checks.
///
/// Entries are evaluated as <φ|ℰ[P_w]|φ> with φ the embedded product of
/// block eigenvectors (the block projectors are rank one), in parallel over
/// w; row order is fixed by (w, i₁…iₙ) regardless of scheduling.
pub fn conditional_table<T: Real, C: CptMap<T> + Sync + ?Sized>(
    rho_w: &DensityMatrix<T>,
    ch: &C,
    partition: &Partition,
    options: ConditionalOptions<T>,
) -> Result<ConditionalTable<T>> {
    let setup = ConditionalSetup::new(rho_w, ch, partition, options)?;
    let radices: Vec<usize> = setup.blocks.iter().map(EpistemicState::len).collect();
    let combos = multi_indices(&radices);
    // Strict mode refuses the table as soon as any queried index is degenerate.
    let mut flagged = false;
    for w in 0..setup.parent.len() {
        for combo in &combos {
            flagged |= setup.check(w, combo)?;
        }
    }
    let vectors: Vec<Vec<Complex<T>>> = combos
        .iter()
        .map(|c| setup.embedded_block_vector(c))
        .collect();

    let per_w: Vec<Vec<T>> = (0..setup.parent.len())
        .into_par_iter()
        .map(|w| {
            let moved = ch.apply_matrix(&ComplexMatrix::outer(setup.parent.vector(w)))?;
            vectors
                .iter()
                .map(|phi| finalize_probability(moved.sandwich(phi, phi)?))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(per_w.len() * combos.len());
    for (w, probs) in per_w.iter().enumerate() {
        for (combo, &p) in combos.iter().zip(probs) {
            rows.push(TableRow {
                w,
                indices: combo.clone(),
                probability: p,
            });
        }
    }

    let row_sums: Vec<T> = per_w.iter().map(|ps| ps.iter().copied().sum()).collect();
    let max_row_deviation = row_sums
        .iter()
        .map(|s| (*s - T::one()).abs())
        .fold(T::zero(), T::max);
    let mut max_marginal_deviation = T::zero();
    for (alpha, block) in setup.blocks.iter().enumerate() {
        for i in 0..block.len() {
            let mut m = T::zero();
            for (w, probs) in per_w.iter().enumerate() {
                let pw = setup.parent.probability(w);
                for (combo, &p) in combos.iter().zip(probs) {
                    if combo[alpha] == i {
                        m += pw * p;
                    }
                }
            }
            max_marginal_deviation = max_marginal_deviation.max((m - block.probability(i)).abs());
        }
    }
    let tol = T::tol(ROW_SUM_TOL);
    let report = TableReport {
        normalized: max_row_deviation <= tol && max_marginal_deviation <= tol,
        row_sums,
        max_row_deviation,
        max_marginal_deviation,
    };
    let block_labels = (0..partition.n_blocks())
        .map(|a| partition.block_labels(a))
        .collect();
    Ok(ConditionalTable {
        parent: setup.parent,
        blocks: setup.blocks,
        block_labels,
        rows,
        channel_id: String::new(),
        times: (T::zero(), T::zero()),
        basis_dependent: flagged,
        report,
    })
}
