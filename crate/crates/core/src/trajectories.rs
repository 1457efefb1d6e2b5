//! Ontic-state trajectories sampled from the two-time conditional
//! probabilities on a discrete time grid.
//!
//! Consecutive grid times are linked by the one-step rows
//! p(j; t+dt | i; t) = Tr[P(j; t+dt) ℰ_dt[P(i; t)]], and multi-time
//! statistics come from chaining those rows as a Markov chain. That
//! completion is a modelling choice: only two-time probabilities are fixed
//! by the interpretation itself.
//!
//! Eigenvectors at t+dt are matched to those at t by greedy maximal overlap
//! so that an index keeps following the same branch through near crossings.
//!
//! Trajectory k of an ensemble with base seed s uses
//! `ChaCha8Rng::seed_from_u64(s + k)` (wrapping), so results do not depend on
//! thread scheduling.

use rand::Rng;
use rayon::prelude::*;

use crate::channels::{apply, evolve, CptMap, LindbladGenerator};
use crate::conditional::{transition_matrix, ConditionalOptions, DegeneracyMode};
use crate::error::{Error, Result};
use crate::random::rng;
use crate::scalar::Real;
use crate::states::{extract_epistemic, DensityMatrix, EpistemicState};

/// Accepted deviation of a raw stochastic row sum from 1.
pub const ROW_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T: Real = f64> {
    pub t0: T,
    pub dt: T,
    pub n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, dt: T, n_steps: usize) -> Result<Self> {
        if !dt.is_finite() || dt <= T::zero() || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time grid needs finite t0 and dt > 0, got dt = {dt}"
            )));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// `n_steps` equal steps covering [0, t_final].
    pub fn uniform(t_final: T, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument(
                "time grid needs at least one step".into(),
            ));
        }
        Self::new(T::zero(), t_final / T::lit(n_steps as f64), n_steps)
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::lit(k as f64)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T: Real = f64> {
    pub time: T,
    pub ontic_index: usize,
    /// Eigenvalue of the occupied ontic state at this time.
    pub probability: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real = f64> {
    pub points: Vec<TrajectoryPoint<T>>,
    pub seed: u64,
}

impl<T: Real> Trajectory<T> {
    pub fn indices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.ontic_index).collect()
    }
}

/// Greedy maximal-overlap matching of `next` against `prev`.
///
/// Pairs are taken by decreasing |<prev_i|next_j>|, ties by lower i then
/// lower j. The result lists indices into `next`: matched vectors in the
/// order of `prev`, then unmatched ones in their original order.
pub fn match_order<T: Real>(prev: &EpistemicState<T>, next: &EpistemicState<T>) -> Vec<usize> {
    let mut pairs = Vec::with_capacity(prev.len() * next.len());
    for i in 0..prev.len() {
        for j in 0..next.len() {
            let ov = crate::linalg::inner(prev.vector(i), next.vector(j)).norm();
            if ov > T::zero() {
                pairs.push((ov, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut by_prev: Vec<Option<usize>> = vec![None; prev.len()];
    let mut used = vec![false; next.len()];
    for (_, i, j) in pairs {
        if by_prev[i].is_none() && !used[j] {
            by_prev[i] = Some(j);
            used[j] = true;
        }
    }
    let mut order: Vec<usize> = by_prev.into_iter().flatten().collect();
    order.extend((0..next.len()).filter(|&j| !used[j]));
    order
}

/// Clamp-checked and renormalized stochastic matrix.
fn normalize_rows<T: Real>(raw: Vec<Vec<T>>, step: usize) -> Result<Vec<Vec<T>>> {
    let tol = T::tol(ROW_TOL);
    raw.into_iter()
        .enumerate()
        .map(|(row, r)| {
            let sum: T = r.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::NormalizationFailure {
                    step,
                    row,
                    sum: sum.as_f64(),
                });
            }
            Ok(r.into_iter().map(|p| p / sum).collect())
        })
        .collect()
}

fn refuse_degenerate<T: Real>(state: &EpistemicState<T>) -> Result<()> {
    if let Some(cluster) = state.degenerate_clusters().first() {
        return Err(Error::DegenerateBasisRefused {
            system: state.layout().labels().join("+"),
            index: cluster[0],
        });
    }
    Ok(())
}

/// Draw an index from a discrete distribution given a uniform `u` in [0, 1).
fn draw<T: Real>(probs: &[T], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return k;
        }
    }
    // Round-off left u above the cumulative total: take the last positive entry.
    probs.iter().rposition(|p| *p > T::zero()).unwrap_or(0)
}

/// Tracked epistemic states on a grid together with the one-step stochastic
/// matrices linking them.
#[derive(Clone, Debug)]
pub struct TrajectoryChain<T: Real = f64> {
    grid: TimeGrid<T>,
    states: Vec<EpistemicState<T>>,
    steps: Vec<Vec<Vec<T>>>,
    basis_dependent: bool,
}

impl<T: Real> TrajectoryChain<T> {
    /// Build the chain for a time-independent one-step channel, with `rho0`
    /// taken as the state at `grid.t0`.
    pub fn build<C: CptMap<T> + ?Sized>(
        rho0: &DensityMatrix<T>,
        grid: TimeGrid<T>,
        step: &C,
        options: ConditionalOptions<T>,
    ) -> Result<Self> {
        let strict = options.mode == DegeneracyMode::Strict;
        let mut rho = rho0.clone();
        let mut current = extract_epistemic(&rho, options.threshold)?;
        let mut basis_dependent = current.has_degeneracy();
        if strict {
            refuse_degenerate(&current)?;
        }
        let mut states = Vec::with_capacity(grid.len());
        let mut steps = Vec::with_capacity(grid.n_steps);
        for k in 0..grid.n_steps {
            rho = apply(step, &rho)?;
            let raw_next = extract_epistemic(&rho, options.threshold)?;
            let next = raw_next.reordered(&match_order(&current, &raw_next));
            if strict {
                refuse_degenerate(&next)?;
            }
            basis_dependent |= next.has_degeneracy();
            let rows = transition_matrix(step, &current, &next)?;
            steps.push(normalize_rows(rows, k)?);
            states.push(std::mem::replace(&mut current, next));
        }
        states.push(current);
        Ok(Self {
            grid,
            states,
            steps,
            basis_dependent,
        })
    }

    /// Chain for the Lindblad semigroup with one-step channel exp(L dt).
    pub fn from_generator(
        g: &LindbladGenerator<T>,
        rho0: &DensityMatrix<T>,
        grid: TimeGrid<T>,
        options: ConditionalOptions<T>,
    ) -> Result<Self> {
        let step = evolve(g, grid.dt, 1)?;
        Self::build(rho0, grid, &step, options)
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    /// Tracked epistemic state at each grid time.
    pub fn states(&self) -> &[EpistemicState<T>] {
        &self.states
    }

    /// Row-stochastic matrix from grid time k to k+1.
    pub fn step_matrix(&self, k: usize) -> &[Vec<T>] {
        &self.steps[k]
    }

    pub fn basis_dependent(&self) -> bool {
        self.basis_dependent
    }

    /// Product of step matrices from grid time `from` to `to`.
    pub fn transfer(&self, from: usize, to: usize) -> Vec<Vec<T>> {
        let n = self.states[from].len();
        let mut acc: Vec<Vec<T>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect();
        for m in &self.steps[from..to] {
            acc = acc
                .iter()
                .map(|row| {
                    (0..m[0].len())
                        .map(|j| row.iter().zip(m).map(|(&a, mr)| a * mr[j]).sum())
                        .collect()
                })
                .collect();
        }
        acc
    }

    /// Single-time marginals of the chain, propagated exactly from the
    /// initial eigenvalues.
    pub fn marginals(&self) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(self.states.len());
        let mut pi = self.states[0].probabilities();
        for m in &self.steps {
            let next: Vec<T> = (0..m.first().map_or(0, Vec::len))
                .map(|j| pi.iter().zip(m).map(|(&p, row)| p * row[j]).sum())
                .collect();
            out.push(std::mem::replace(&mut pi, next));
        }
        out.push(pi);
        out
    }

    /// Max |marginal − eigenvalue| over all grid times and indices.
    pub fn marginal_deviation(&self) -> T {
        self.marginals()
            .iter()
            .zip(&self.states)
            .flat_map(|(m, s)| {
                m.iter()
                    .zip(s.entries())
                    .map(|(a, e)| (*a - e.probability).abs())
            })
            .fold(T::zero(), T::max)
    }

    pub fn sample(&self, seed: u64) -> Trajectory<T> {
        let mut r = rng(seed);
        let mut index = draw(&self.states[0].probabilities(), r.random::<f64>());
        let mut points = Vec::with_capacity(self.states.len());
        points.push(self.point(0, index));
        for (k, m) in self.steps.iter().enumerate() {
            index = draw(&m[index], r.random::<f64>());
            points.push(self.point(k + 1, index));
        }
        Trajectory { points, seed }
    }

    /// Trajectories for seeds `base_seed + k`, k = 0..n, in seed order.
    pub fn sample_many(&self, n: usize, base_seed: u64) -> Vec<Trajectory<T>> {
        (0..n as u64)
            .into_par_iter()
            .map(|k| self.sample(base_seed.wrapping_add(k)))
            .collect()
    }

    fn point(&self, k: usize, index: usize) -> TrajectoryPoint<T> {
        TrajectoryPoint {
            time: self.grid.time(k),
            ontic_index: index,
            probability: self.states[k].probability(index),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSlice<T: Real = f64> {
    pub time: T,
    pub frequencies: Vec<T>,
    pub eigenvalues: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleReport<T: Real = f64> {
    pub slices: Vec<EnsembleSlice<T>>,
    pub max_abs_deviation: T,
    pub sample_count: usize,
    pub base_seed: u64,
}

impl<T: Real> EnsembleReport<T> {
    pub fn from_trajectories(
        chain: &TrajectoryChain<T>,
        trajectories: &[Trajectory<T>],
        base_seed: u64,
    ) -> Self {
        let n = trajectories.len();
        let mut counts: Vec<Vec<usize>> = chain.states.iter().map(|s| vec![0; s.len()]).collect();
        for traj in trajectories {
            for (k, p) in traj.points.iter().enumerate() {
                counts[k][p.ontic_index] += 1;
            }
        }
        let inv = T::one() / T::lit(n.max(1) as f64);
        let mut max_abs_deviation = T::zero();
        let slices = counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                let eigenvalues = chain.states[k].probabilities();
                let frequencies: Vec<T> = c.into_iter().map(|x| T::lit(x as f64) * inv).collect();
                for (f, p) in frequencies.iter().zip(&eigenvalues) {
                    max_abs_deviation = max_abs_deviation.max((*f - *p).abs());
                }
                EnsembleSlice {
                    time: chain.grid.time(k),
                    frequencies,
                    eigenvalues,
                }
            })
            .collect();
        Self {
            slices,
            max_abs_deviation,
            sample_count: n,
            base_seed,
        }
    }

    /// Largest |frequency − eigenvalue| in units of the binomial standard
    /// error sqrt(p(1−p)/n). Cells with zero variance must match exactly
    /// and give infinity otherwise.
    pub fn max_sigma_deviation(&self) -> T {
        let n = T::lit(self.sample_count as f64);
        let mut worst = T::zero();
        for s in &self.slices {
            for (f, p) in s.frequencies.iter().zip(&s.eigenvalues) {
                let dev = (*f - *p).abs();
                let sigma = (*p * (T::one() - *p) / n).max(T::zero()).sqrt();
                let z = if sigma > T::zero() {
                    dev / sigma
                } else if dev <= T::tol(1e-12) {
                    T::zero()
                } else {
                    T::infinity()
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// One trajectory of the Lindblad dynamics `g` from `rho0` at `grid.t0`.
pub fn sample_trajectory<T: Real>(
    g: &LindbladGenerator<T>,
    rho0: &DensityMatrix<T>,
    grid: TimeGrid<T>,
    seed: u64,
    options: ConditionalOptions<T>,
) -> Result<Trajectory<T>> {
    Ok(TrajectoryChain::from_generator(g, rho0, grid, options)?.sample(seed))
}

/// Aggregate `n_samples` trajectories with seeds `base_seed..base_seed + n`.
pub fn run_ensemble<T: Real>(
    g: &LindbladGenerator<T>,
    rho0: &DensityMatrix<T>,
    grid: TimeGrid<T>,
    n_samples: usize,
    base_seed: u64,
    options: ConditionalOptions<T>,
) -> Result<EnsembleReport<T>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "ensemble needs at least one sample".into(),
        ));
    }
    let chain = TrajectoryChain::from_generator(g, rho0, grid, options)?;
    let trajectories = chain.sample_many(n_samples, base_seed);
    Ok(EnsembleReport::from_trajectories(
        &chain,
        &trajectories,
        base_seed,
    ))
}
