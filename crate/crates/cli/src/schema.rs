//! JSON file formats. Complex numbers are `[re, im]`, matrices are arrays of
//! rows, and every document carries `schema_version`.

use modaldyn_core::channels::{
    unitary_channel, CptMap, JumpOperator, KrausChannel, LindbladGenerator, LocalUnitary,
    Superoperator,
};
use modaldyn_core::linalg::{ComplexMatrix, SystemLayout};
use modaldyn_core::scenarios::{Dynamics, Observable, Scenario};
use modaldyn_core::states::DensityMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn complex_to_json(z: Complex<f64>) -> JsonComplex {
    [z.re, z.im]
}

pub fn vector_to_json(v: &[Complex<f64>]) -> Vec<JsonComplex> {
    v.iter().copied().map(complex_to_json).collect()
}

pub fn vector_from_json(v: &[JsonComplex]) -> Vec<Complex<f64>> {
    v.iter().map(|[re, im]| Complex::new(*re, *im)).collect()
}

pub fn matrix_to_json(m: &ComplexMatrix<f64>) -> JsonMatrix {
    (0..m.rows()).map(|i| vector_to_json(m.row(i))).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> CliResult<ComplexMatrix<f64>> {
    let rows: Vec<Vec<Complex<f64>>> = rows.iter().map(|r| vector_from_json(r)).collect();
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(CliError::Config(
            "matrix rows must be nonempty and of equal length".into(),
        ));
    }
    Ok(ComplexMatrix::from_rows(&rows))
}

pub fn check_version(found: u32) -> CliResult<()> {
    if found != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {found} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutJson {
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateJson {
    Density { matrix: JsonMatrix },
    Vector { amplitudes: Vec<JsonComplex> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpJson {
    pub operator: JsonMatrix,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub targets: Vec<String>,
    pub unitary: JsonMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsJson {
    Lindblad {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hamiltonian: Option<JsonMatrix>,
        #[serde(default)]
        jumps: Vec<JumpJson>,
    },
    Schedule {
        gates: Vec<GateJson>,
    },
    Kraus {
        steps: Vec<Vec<JsonMatrix>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableJson {
    pub labels: Vec<String>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub layout: LayoutJson,
    pub initial_state: StateJson,
    pub dynamics: DynamicsJson,
    #[serde(default)]
    pub observables: Vec<ObservableJson>,
}

fn generator_from_json(
    d: usize,
    hamiltonian: &Option<JsonMatrix>,
    jumps: &[JumpJson],
) -> CliResult<LindbladGenerator<f64>> {
    let h = match hamiltonian {
        Some(m) => matrix_from_json(m)?,
        None => ComplexMatrix::zeros(d, d),
    };
    let jumps = jumps
        .iter()
        .map(|j| {
            Ok(JumpOperator {
                operator: matrix_from_json(&j.operator)?,
                rate: j.rate,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LindbladGenerator::new(h, jumps)?)
}

impl ScenarioFile {
    pub fn into_scenario(self) -> CliResult<Scenario<f64>> {
        check_version(self.schema_version)?;
        let layout = SystemLayout::new(self.layout.dims, self.layout.labels)?;
        let d = layout.total_dim();
        let (initial, vector) = match &self.initial_state {
            StateJson::Density { matrix } => (
                DensityMatrix::new(matrix_from_json(matrix)?, layout.clone())?,
                None,
            ),
            StateJson::Vector { amplitudes } => {
                let psi = vector_from_json(amplitudes);
                let rho = DensityMatrix::from_pure(&psi, layout.clone())?;
                let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (
                    rho,
                    Some(psi.into_iter().map(|z| z / norm).collect::<Vec<_>>()),
                )
            }
        };
        let dynamics = match &self.dynamics {
            DynamicsJson::Lindblad { hamiltonian, jumps } => {
                Dynamics::Lindblad(generator_from_json(d, hamiltonian, jumps)?)
            }
            DynamicsJson::Schedule { gates } => Dynamics::Schedule(
                gates
                    .iter()
                    .map(|g| {
                        Ok(LocalUnitary::new(
                            layout.clone(),
                            &g.targets,
                            matrix_from_json(&g.unitary)?,
                        )?)
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            ),
            DynamicsJson::Kraus { steps } => Dynamics::Kraus(
                steps
                    .iter()
                    .map(|ops| {
                        let ops = ops
                            .iter()
                            .map(matrix_from_json)
                            .collect::<CliResult<Vec<_>>>()?;
                        Ok(KrausChannel::new(ops)?)
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            ),
        };
        let observables = self
            .observables
            .into_iter()
            .map(|o| Observable {
                labels: o.labels,
                description: o.description,
            })
            .collect();
        let mut scenario = Scenario::new(self.name, initial, dynamics, observables, None)?;
        scenario.initial_vector = vector;
        Ok(scenario)
    }

    pub fn from_scenario(s: &Scenario<f64>) -> Self {
        let initial_state = match &s.initial_vector {
            Some(psi) => StateJson::Vector {
                amplitudes: vector_to_json(psi),
            },
            None => StateJson::Density {
                matrix: matrix_to_json(s.initial_state.matrix()),
            },
        };
        let dynamics = match &s.dynamics {
            Dynamics::Lindblad(g) => DynamicsJson::Lindblad {
                hamiltonian: Some(matrix_to_json(g.hamiltonian())),
                jumps: g
                    .jumps()
                    .iter()
                    .map(|j| JumpJson {
                        operator: matrix_to_json(&j.operator),
                        rate: j.rate,
                    })
                    .collect(),
            },
            Dynamics::Schedule(gates) => DynamicsJson::Schedule {
                gates: gates
                    .iter()
                    .map(|g| GateJson {
                        targets: g.target_labels().iter().map(|s| s.to_string()).collect(),
                        unitary: matrix_to_json(g.unitary()),
                    })
                    .collect(),
            },
            Dynamics::Kraus(steps) => DynamicsJson::Kraus {
                steps: steps
                    .iter()
                    .map(|ch| ch.ops().iter().map(matrix_to_json).collect())
                    .collect(),
            },
        };
        Self {
            schema_version: SCHEMA_VERSION,
            name: s.name.clone(),
            layout: LayoutJson {
                dims: s.layout.dims().to_vec(),
                labels: s.layout.labels().to_vec(),
            },
            initial_state,
            dynamics,
            observables: s
                .observables
                .iter()
                .map(|o| ObservableJson {
                    labels: o.labels.clone(),
                    description: o.description.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelJson {
    Unitary {
        matrix: JsonMatrix,
    },
    Kraus {
        operators: Vec<JsonMatrix>,
    },
    Lindblad {
        dim: usize,
        #[serde(default)]
        hamiltonian: Option<JsonMatrix>,
        #[serde(default)]
        jumps: Vec<JumpJson>,
        time: f64,
    },
    Superoperator {
        matrix: JsonMatrix,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub channel: ChannelJson,
}

impl ChannelFile {
    /// Build the map without enforcing CPT so that the verifier can report on
    /// it.
    pub fn into_map(self) -> CliResult<Box<dyn CptMap<f64>>> {
        check_version(self.schema_version)?;
        Ok(match &self.channel {
            ChannelJson::Unitary { matrix } => {
                let u = matrix_from_json(matrix)?;
                match unitary_channel(u.clone()) {
                    Ok(ch) => Box::new(ch),
                    Err(_) => Box::new(KrausChannel::unchecked(vec![u])?),
                }
            }
            ChannelJson::Kraus { operators } => {
                let ops = operators
                    .iter()
                    .map(matrix_from_json)
                    .collect::<CliResult<Vec<_>>>()?;
                Box::new(KrausChannel::unchecked(ops)?)
            }
            ChannelJson::Lindblad {
                dim,
                hamiltonian,
                jumps,
                time,
            } => {
                let g = generator_from_json(*dim, hamiltonian, jumps)?;
                Box::new(modaldyn_core::channels::evolve_superoperator(&g, *time, 1)?)
            }
            ChannelJson::Superoperator { matrix } => {
                Box::new(Superoperator::new(matrix_from_json(matrix)?)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpistemicEntryJson {
    pub index: usize,
    pub probability: f64,
    pub degenerate: bool,
    pub vector: Vec<JsonComplex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpistemicSnapshotJson {
    pub time: f64,
    pub truncation_mass: f64,
    pub degenerate_clusters: Vec<Vec<usize>>,
    pub entries: Vec<EpistemicEntryJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpistemicOutput {
    pub schema_version: u32,
    pub command: String,
    pub scenario: String,
    pub subsystem: Vec<String>,
    pub threshold: f64,
    pub snapshots: Vec<EpistemicSnapshotJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRowJson {
    pub w: usize,
    pub indices: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReportJson {
    pub row_sums: Vec<f64>,
    pub max_row_deviation: f64,
    pub max_marginal_deviation: f64,
    pub normalized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOutput {
    pub schema_version: u32,
    pub command: String,
    pub scenario: String,
    pub blocks: Vec<Vec<String>>,
    pub mode: String,
    pub time: f64,
    pub interval: f64,
    pub basis_dependent: bool,
    pub parent_probabilities: Vec<f64>,
    pub block_probabilities: Vec<Vec<f64>>,
    pub rows: Vec<TableRowJson>,
    pub report: TableReportJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceJson {
    pub time: f64,
    pub frequencies: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub chain_marginals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutput {
    pub schema_version: u32,
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    pub sample_count: usize,
    pub steps: usize,
    pub t_final: f64,
    pub max_abs_deviation: f64,
    pub max_sigma_deviation: f64,
    pub max_marginal_deviation: f64,
    pub basis_dependent: bool,
    pub slices: Vec<SliceJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub time: f64,
    pub index: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub seed: u64,
    pub points: Vec<PointJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoriesOutput {
    pub schema_version: u32,
    pub scenario: String,
    pub trajectories: Vec<TrajectoryJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReportOutput {
    pub schema_version: u32,
    pub command: String,
    pub source: String,
    pub dim: usize,
    pub tolerance: f64,
    pub is_cp: bool,
    pub is_tp: bool,
    pub choi_min_eigenvalue: f64,
    pub completeness_residual: f64,
}
