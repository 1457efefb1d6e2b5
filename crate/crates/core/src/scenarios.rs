//! Prebuilt set-ups: a von Neumann measurement with an environment,
//! EPR-Bohm and GHZ-Mermin states, and dephasing and damping qubits.

use num_complex::Complex;
use num_traits::Zero;

use crate::channels::{
    apply, compose, evolve, CptMap, CptReport, JumpOperator, KrausChannel, LindbladGenerator,
    LocalUnitary, Superoperator, UnitarySequence,
};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace_pure, ComplexMatrix, SystemLayout};
use crate::scalar::{c, cr, Real};
use crate::states::DensityMatrix;

/// Default per-qubit environment coupling angle θ = π/4, overlap cos θ = 1/√2.
pub const DEFAULT_COUPLING: f64 = std::f64::consts::FRAC_PI_4;

const AMPLITUDE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics<T: Real = f64> {
    /// Time-independent Lindblad semigroup.
    Lindblad(LindbladGenerator<T>),
    /// Gate k acts during [k, k + 1) and has taken effect at time k + 1.
    Schedule(Vec<LocalUnitary<T>>),
    /// Full-space channels with the same timing as `Schedule`.
    Kraus(Vec<KrausChannel<T>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub labels: Vec<String>,
    pub description: String,
}

impl Observable {
    fn new(labels: &[&str], description: &str) -> Self {
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            description: description.into(),
        }
    }
}

/// Closed-form reference values carried by a scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle<T: Real = f64> {
    /// ρ₀₁(t) = ρ₀₁(0) e^{−2γt}, populations frozen.
    Dephasing { gamma: T, coherence0: Complex<T> },
    /// ρ₁₁(t) = ρ₁₁(0) e^{−γt}.
    Damping { gamma: T, excited0: T },
    /// Pointer populations (|α|², |β|²); the S+P record coherence is
    /// αβ* cos^n θ after all gates.
    BornRule {
        p0: T,
        p1: T,
        coherence: Complex<T>,
        overlap: T,
        n_env: usize,
    },
}

/// One-interval map of a scenario.
#[derive(Clone, Debug)]
pub enum ScenarioChannel<T: Real = f64> {
    Kraus(KrausChannel<T>),
    Gates(UnitarySequence<T>),
}

impl<T: Real> CptMap<T> for ScenarioChannel<T> {
    fn dim(&self) -> usize {
        match self {
            Self::Kraus(k) => k.dim(),
            Self::Gates(g) => g.dim(),
        }
    }

    fn apply_matrix(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        match self {
            Self::Kraus(k) => k.apply_matrix(rho),
            Self::Gates(g) => g.apply_matrix(rho),
        }
    }

    fn superoperator(&self) -> Superoperator<T> {
        match self {
            Self::Kraus(k) => k.superoperator(),
            Self::Gates(g) => g.superoperator(),
        }
    }

    fn cpt_report(&self, tol: T) -> CptReport<T> {
        match self {
            Self::Kraus(k) => k.cpt_report(tol),
            Self::Gates(g) => g.cpt_report(tol),
        }
    }

    fn transition_probability(&self, from: &[Complex<T>], to: &[Complex<T>]) -> Result<T> {
        match self {
            Self::Kraus(k) => k.transition_probability(from, to),
            Self::Gates(g) => g.transition_probability(from, to),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario<T: Real = f64> {
    pub name: String,
    pub layout: SystemLayout,
    pub initial_state: DensityMatrix<T>,
    /// Set when the initial state is pure; schedules then evolve the vector.
    pub initial_vector: Option<Vec<Complex<T>>>,
    pub dynamics: Dynamics<T>,
    pub observables: Vec<Observable>,
    pub oracle: Option<Oracle<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        name: impl Into<String>,
        initial_state: DensityMatrix<T>,
        dynamics: Dynamics<T>,
        observables: Vec<Observable>,
        oracle: Option<Oracle<T>>,
    ) -> Result<Self> {
        let layout = initial_state.layout().clone();
        match &dynamics {
            Dynamics::Lindblad(g) if g.dim() != layout.total_dim() => {
                return Err(Error::DimensionMismatch {
                    expected: layout.total_dim(),
                    got: g.dim(),
                })
            }
            Dynamics::Schedule(gates) => {
                UnitarySequence::new(layout.clone(), gates.clone())?;
            }
            Dynamics::Kraus(steps) => {
                if let Some(ch) = steps.iter().find(|ch| ch.dim() != layout.total_dim()) {
                    return Err(Error::DimensionMismatch {
                        expected: layout.total_dim(),
                        got: ch.dim(),
                    });
                }
            }
            _ => {}
        }
        Ok(Self {
            name: name.into(),
            layout,
            initial_state,
            initial_vector: None,
            dynamics,
            observables,
            oracle,
        })
    }

    fn with_vector(mut self, psi: Vec<Complex<T>>) -> Self {
        self.initial_vector = Some(psi);
        self
    }

    /// Natural end time: the schedule length, or 0 for semigroups.
    pub fn default_time(&self) -> T {
        match &self.dynamics {
            Dynamics::Lindblad(_) => T::zero(),
            Dynamics::Schedule(g) => T::lit(g.len() as f64),
            Dynamics::Kraus(k) => T::lit(k.len() as f64),
        }
    }

    fn gate_range(&self, t: T, tau: T, len: usize) -> (usize, usize) {
        let idx = |x: T| x.floor().to_usize().unwrap_or(0).min(len);
        (idx(t), idx(tau))
    }

    /// The map carrying the state at `t` to the state at `tau`.
    pub fn channel_between(&self, t: T, tau: T) -> Result<ScenarioChannel<T>> {
        if t.is_nan() || tau.is_nan() || t < T::zero() || tau < t {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= t <= tau, got t = {t}, tau = {tau}"
            )));
        }
        match &self.dynamics {
            Dynamics::Lindblad(g) => Ok(ScenarioChannel::Kraus(evolve(g, tau - t, 1)?)),
            Dynamics::Schedule(gates) => {
                let (a, b) = self.gate_range(t, tau, gates.len());
                Ok(ScenarioChannel::Gates(UnitarySequence::new(
                    self.layout.clone(),
                    gates[a..b].to_vec(),
                )?))
            }
            Dynamics::Kraus(steps) => {
                let (a, b) = self.gate_range(t, tau, steps.len());
                let total = steps[a..b].iter().try_fold(
                    KrausChannel::identity(self.layout.total_dim()),
                    |acc, ch| compose(ch, &acc),
                )?;
                Ok(ScenarioChannel::Kraus(total))
            }
        }
    }

    /// State vector at `t` when the initial state is pure and the dynamics
    /// unitary.
    pub fn vector_at(&self, t: T) -> Result<Option<Vec<Complex<T>>>> {
        match (&self.dynamics, &self.initial_vector) {
            (Dynamics::Schedule(_), Some(psi)) => match self.channel_between(T::zero(), t)? {
                ScenarioChannel::Gates(seq) => seq.apply_vector(psi).map(Some),
                ScenarioChannel::Kraus(_) => unreachable!("schedules yield gate sequences"),
            },
            _ => Ok(None),
        }
    }

    pub fn state_at(&self, t: T) -> Result<DensityMatrix<T>> {
        if let Some(psi) = self.vector_at(t)? {
            return DensityMatrix::from_pure(&psi, self.layout.clone());
        }
        if t.is_zero() {
            return Ok(self.initial_state.clone());
        }
        apply(&self.channel_between(T::zero(), t)?, &self.initial_state)
    }

    /// Reduced state over `keep` at `t`, through the state vector when one
    /// is available.
    pub fn reduced_state_at<S: AsRef<str>>(&self, t: T, keep: &[S]) -> Result<DensityMatrix<T>> {
        match self.vector_at(t)? {
            Some(psi) => {
                let reduced = partial_trace_pure(&psi, &self.layout, keep)?;
                let positions = self.layout.positions(keep)?;
                DensityMatrix::new(reduced, self.layout.select(&positions))
            }
            None => self.state_at(t)?.reduce(keep),
        }
    }

    /// CPT report for each gate of a schedule, or for the unit-time channel of
    /// a semigroup.
    pub fn verify_dynamics(&self, tol: T) -> Result<Vec<CptReport<T>>> {
        match &self.dynamics {
            Dynamics::Lindblad(g) => Ok(vec![evolve(g, T::one(), 1)?.cpt_report(tol)]),
            Dynamics::Schedule(gates) => Ok(gates.iter().map(|g| g.cpt_report(tol)).collect()),
            Dynamics::Kraus(steps) => Ok(steps.iter().map(|ch| ch.cpt_report(tol)).collect()),
        }
    }
}

fn cnot<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

/// |0>|e> ↦ |0>|e>, |1>|0> ↦ |1>(cos θ|0> + sin θ|1>).
fn controlled_rotation<T: Real>(theta: T) -> ComplexMatrix<T> {
    let (s, co) = theta.sin_cos();
    let mut m = ComplexMatrix::identity(4);
    m[(2, 2)] = Complex::new(co, T::zero());
    m[(2, 3)] = Complex::new(-s, T::zero());
    m[(3, 2)] = Complex::new(s, T::zero());
    m[(3, 3)] = Complex::new(co, T::zero());
    m
}

/// System S measured by pointer P (ready state |0>), which is then copied
/// into `n_env` environment qubits E1…En.
///
/// Gate 0 is a CNOT from S to P; gate k ≥ 1 rotates Ek by `coupling`
/// conditioned on P. Each environment qubit reduces the overlap of the two
/// record branches by cos(coupling).
pub fn von_neumann_measurement<T: Real>(
    alpha: Complex<T>,
    beta: Complex<T>,
    n_env: usize,
    coupling: T,
) -> Result<Scenario<T>> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - T::one()).abs() > T::tol(AMPLITUDE_TOL) {
        return Err(Error::InvalidAmplitudes(norm.as_f64()));
    }
    let mut labels = vec!["S".to_string(), "P".to_string()];
    labels.extend((1..=n_env).map(|k| format!("E{k}")));
    let layout = SystemLayout::new(vec![2; n_env + 2], labels.clone())?;

    // Amplitudes sit on |0…0> and |10…0>.
    let mut psi = vec![Complex::zero(); layout.total_dim()];
    psi[0] = alpha;
    psi[layout.total_dim() / 2] = beta;

    let mut gates = vec![LocalUnitary::new(layout.clone(), &["S", "P"], cnot())?];
    for env in &labels[2..] {
        gates.push(LocalUnitary::new(
            layout.clone(),
            &["P", env.as_str()],
            controlled_rotation(coupling),
        )?);
    }
    let overlap = coupling.cos();
    let oracle = Oracle::BornRule {
        p0: alpha.norm_sqr(),
        p1: beta.norm_sqr(),
        coherence: alpha * beta.conj() * overlap.powi(n_env as i32),
        overlap,
        n_env,
    };
    let observables = vec![
        Observable::new(&["P"], "pointer"),
        Observable::new(&["S", "P"], "system and pointer record"),
        Observable::new(&["S"], "measured system"),
    ];
    let initial = DensityMatrix::from_pure(&psi, layout)?;
    Ok(Scenario::new(
        "von_neumann",
        initial,
        Dynamics::Schedule(gates),
        observables,
        Some(oracle),
    )?
    .with_vector(psi))
}

fn fixed_state<T: Real>(
    name: &str,
    layout: SystemLayout,
    psi: Vec<Complex<T>>,
    observables: Vec<Observable>,
) -> Result<Scenario<T>> {
    let d = layout.total_dim();
    let initial = DensityMatrix::from_pure(&psi, layout)?;
    Ok(Scenario::new(
        name,
        initial,
        Dynamics::Lindblad(LindbladGenerator::trivial(d)),
        observables,
        None,
    )?
    .with_vector(psi))
}

/// Singlet (|01> − |10>)/√2 on qubits A, B with identity dynamics.
pub fn epr_bohm<T: Real>() -> Result<Scenario<T>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)];
    let observables = vec![
        Observable::new(&["A"], "left wing"),
        Observable::new(&["B"], "right wing"),
        Observable::new(&["A", "B"], "pair"),
    ];
    fixed_state(
        "epr_bohm",
        SystemLayout::qubits(vec!["A", "B"])?,
        psi,
        observables,
    )
}

/// (|000> + |111>)/√2 on qubits A, B, C with identity dynamics.
pub fn ghz_mermin<T: Real>() -> Result<Scenario<T>> {
    let mut psi = vec![Complex::zero(); 8];
    psi[0] = cr(T::FRAC_1_SQRT_2());
    psi[7] = cr(T::FRAC_1_SQRT_2());
    let observables = vec![
        Observable::new(&["A"], "qubit A"),
        Observable::new(&["B"], "qubit B"),
        Observable::new(&["C"], "qubit C"),
        Observable::new(&["A", "B"], "pair AB"),
    ];
    fixed_state(
        "ghz_mermin",
        SystemLayout::qubits(vec!["A", "B", "C"])?,
        psi,
        observables,
    )
}

fn check_qubit<T: Real>(gamma: T, rho0: &DensityMatrix<T>) -> Result<()> {
    if !gamma.is_finite() || gamma < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "rate must be finite and >= 0, got {gamma}"
        )));
    }
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho0.dim(),
        });
    }
    Ok(())
}

/// Single qubit, H = 0, jump σ_z at rate γ.
pub fn dephasing_qubit<T: Real>(gamma: T, rho0: DensityMatrix<T>) -> Result<Scenario<T>> {
    check_qubit(gamma, &rho0)?;
    let sz = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
    let g = LindbladGenerator::new(
        ComplexMatrix::zeros(2, 2),
        vec![JumpOperator {
            operator: sz,
            rate: gamma,
        }],
    )?;
    let label = rho0.layout().labels()[0].clone();
    let oracle = Oracle::Dephasing {
        gamma,
        coherence0: rho0.matrix()[(0, 1)],
    };
    Scenario::new(
        "dephasing",
        rho0,
        Dynamics::Lindblad(g),
        vec![Observable::new(&[&label], "qubit")],
        Some(oracle),
    )
}

/// Single qubit, H = 0, jump |0><1| at rate γ.
pub fn amplitude_damping_qubit<T: Real>(gamma: T, rho0: DensityMatrix<T>) -> Result<Scenario<T>> {
    check_qubit(gamma, &rho0)?;
    let lower = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let g = LindbladGenerator::new(
        ComplexMatrix::zeros(2, 2),
        vec![JumpOperator {
            operator: lower,
            rate: gamma,
        }],
    )?;
    let label = rho0.layout().labels()[0].clone();
    let oracle = Oracle::Damping {
        gamma,
        excited0: rho0.matrix()[(1, 1)].re,
    };
    Scenario::new(
        "damping",
        rho0,
        Dynamics::Lindblad(g),
        vec![Observable::new(&[&label], "qubit")],
        Some(oracle),
    )
}

/// Named single-qubit preparations: `zero`, `one`, `plus`.
pub fn qubit_preset<T: Real>(name: &str, label: &str) -> Result<DensityMatrix<T>> {
    let m = match name {
        "zero" => ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
        "one" => ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]),
        "plus" => ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown qubit preset `{other}`"
            )))
        }
    };
    DensityMatrix::new(m, SystemLayout::single(2, label)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::verify_cpt;
    use crate::states::extract_epistemic;

    fn amp(x: f64) -> Complex<f64> {
        c(x, 0.0)
    }

    #[test]
    fn amplitudes_validated() {
        let r = von_neumann_measurement(amp(0.5), amp(0.5), 2, DEFAULT_COUPLING);
        assert!(matches!(r, Err(Error::InvalidAmplitudes(_))));
    }

    #[test]
    fn definite_input_gives_definite_pointer() {
        let sc = von_neumann_measurement(amp(1.0), amp(0.0), 3, DEFAULT_COUPLING).unwrap();
        let p = sc.reduced_state_at(sc.default_time(), &["P"]).unwrap();
        let e = extract_epistemic(&p, 1e-12).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e.vector(0)[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn balanced_input_without_environment() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sc = von_neumann_measurement(amp(s), amp(s), 0, DEFAULT_COUPLING).unwrap();
        let p = sc.reduced_state_at(sc.default_time(), &["P"]).unwrap();
        let e = extract_epistemic(&p, 1e-12).unwrap();
        assert!((e.probability(0) - 0.5).abs() < 1e-14 && (e.probability(1) - 0.5).abs() < 1e-14);
        assert!(e.has_degeneracy());
    }

    #[test]
    fn record_coherence_matches_overlap_product() {
        let (a, b) = (0.3f64.sqrt(), 0.7f64.sqrt());
        for n in 0..5 {
            let sc = von_neumann_measurement(amp(a), amp(b), n, DEFAULT_COUPLING).unwrap();
            let sp = sc.reduced_state_at(sc.default_time(), &["S", "P"]).unwrap();
            let want = a * b * std::f64::consts::FRAC_1_SQRT_2.powi(n as i32);
            assert!((sp.matrix()[(0, 3)].re - want).abs() < 1e-14);
            // Full-state path agrees with the vector path.
            let full = sc
                .state_at(sc.default_time())
                .unwrap()
                .reduce(&["S", "P"])
                .unwrap();
            assert!(full.matrix().max_abs_diff(sp.matrix()) < 1e-14);
        }
    }

    #[test]
    fn schedule_gates_are_cpt() {
        let sc = von_neumann_measurement(amp(0.6), amp(0.8), 3, 0.4).unwrap();
        for r in sc.verify_dynamics(1e-9).unwrap() {
            assert!(r.is_cpt());
        }
        let whole = sc.channel_between(0.0, sc.default_time()).unwrap();
        assert!(verify_cpt(&whole, 1e-9).is_cpt());
    }

    #[test]
    fn schedule_time_semantics() {
        let sc = von_neumann_measurement(amp(0.6), amp(0.8), 2, DEFAULT_COUPLING).unwrap();
        assert_eq!(sc.default_time(), 3.0);
        let before = sc.reduced_state_at(0.99, &["P"]).unwrap();
        assert!((before.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        let after = sc.reduced_state_at(1.0, &["P"]).unwrap();
        assert!((after.matrix()[(1, 1)].re - 0.64).abs() < 1e-14);
        assert!(sc.channel_between(2.0, 1.0).is_err());
    }

    #[test]
    fn epr_and_ghz_reductions() {
        let epr = epr_bohm::<f64>().unwrap();
        let a = epr.reduced_state_at(0.0, &["A"]).unwrap();
        assert!(
            a.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5))
                <= 1e-15
        );
        let ghz = ghz_mermin::<f64>().unwrap();
        let ab = ghz.reduced_state_at(0.0, &["A", "B"]).unwrap();
        let want = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert!(ab.matrix().max_abs_diff(&want) <= 1e-15);
        let e = extract_epistemic(&ghz.state_at(0.0).unwrap(), 1e-12).unwrap();
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn dephasing_examples() {
        let plus = qubit_preset::<f64>("plus", "Q").unwrap();
        let frozen = dephasing_qubit(0.0, plus.clone()).unwrap();
        assert!(
            frozen
                .state_at(3.0)
                .unwrap()
                .matrix()
                .max_abs_diff(plus.matrix())
                < 1e-12
        );
        let gamma = 0.8;
        let t = 2f64.ln() / (2.0 * gamma);
        let sc = dephasing_qubit(gamma, plus).unwrap();
        let e = extract_epistemic(&sc.state_at(t).unwrap(), 1e-12).unwrap();
        assert!((e.probability(0) - 0.75).abs() < 1e-10);
        assert!((e.probability(1) - 0.25).abs() < 1e-10);
        let late = sc.state_at(40.0).unwrap();
        assert!(late.matrix()[(0, 1)].norm() < 1e-12);
        assert!(dephasing_qubit(-1.0, qubit_preset::<f64>("zero", "Q").unwrap()).is_err());
    }

    #[test]
    fn damping_population() {
        let sc = amplitude_damping_qubit(1.3, qubit_preset::<f64>("one", "Q").unwrap()).unwrap();
        let rho = sc.state_at(0.5).unwrap();
        assert!((rho.matrix()[(1, 1)].re - (-0.65f64).exp()).abs() < 1e-10);
    }
}
