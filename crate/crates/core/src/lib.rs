//! Open-system density-matrix dynamics with a modal reading of quantum
//! states.
//!
//! Density matrices evolve under linear CPT maps ([`channels`]); their
//! spectral decompositions are epistemic states whose eigenvectors are the
//! possible ontic states ([`states`]). Quantum conditional probabilities
//! ([`conditional`]) link parent and subsystem ontic states at one time and a
//! single system's ontic states across time, and [`trajectories`] chains the
//! latter into sampled ontic-state trajectories.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which every tolerance in the crate
//! is stated for.

pub mod channels;
pub mod conditional;
pub mod error;
pub mod linalg;
pub mod random;
pub mod scalar;
pub mod scenarios;
pub mod states;
pub mod trajectories;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatrix = linalg::ComplexMatrix<f64>;
pub type CMatrix32 = linalg::ComplexMatrix<f32>;
pub type Density = states::DensityMatrix<f64>;
pub type Density32 = states::DensityMatrix<f32>;
pub type Epistemic = states::EpistemicState<f64>;
pub type Ontic = states::OnticState<f64>;
pub type Kraus = channels::KrausChannel<f64>;
pub type Kraus32 = channels::KrausChannel<f32>;
pub type Superop = channels::Superoperator<f64>;
pub type Lindblad = channels::LindbladGenerator<f64>;
pub type Table = conditional::ConditionalTable<f64>;
pub type Chain = trajectories::TrajectoryChain<f64>;
pub type Report = trajectories::EnsembleReport<f64>;
pub type ScenarioF64 = scenarios::Scenario<f64>;
