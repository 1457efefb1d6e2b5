use std::fs;
use std::path::{Path, PathBuf};

use modaldyn_core::channels::{verify_cpt, KrausChannel};
use modaldyn_core::conditional::{
    conditional_table, ConditionalOptions, DegeneracyMode, Partition,
};
use modaldyn_core::scenarios::{
    amplitude_damping_qubit, dephasing_qubit, epr_bohm, ghz_mermin, qubit_preset,
    von_neumann_measurement, Dynamics, Scenario,
};
use modaldyn_core::states::extract_epistemic;
use modaldyn_core::trajectories::{EnsembleReport, TimeGrid, TrajectoryChain};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::schema::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Strict,
    Permissive,
}

impl Mode {
    fn options(self, threshold: f64) -> ConditionalOptions<f64> {
        ConditionalOptions {
            threshold,
            mode: match self {
                Mode::Strict => DegeneracyMode::Strict,
                Mode::Permissive => DegeneracyMode::Permissive,
            },
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Strict => "strict",
            Mode::Permissive => "permissive",
        }
    }
}

/// Parameters for the built-in scenarios; ignored for scenario files.
#[derive(Clone, Debug)]
pub struct ScenarioParams {
    pub scenario: String,
    pub gamma: f64,
    pub rho0: Option<String>,
    pub n_env: usize,
    pub alpha: f64,
    pub coupling: f64,
}

pub fn load_scenario(p: &ScenarioParams) -> CliResult<Scenario<f64>> {
    let key = p.scenario.to_ascii_lowercase().replace('_', "-");
    let preset = |default: &str| qubit_preset::<f64>(p.rho0.as_deref().unwrap_or(default), "Q");
    let scenario = match key.as_str() {
        "epr-bohm" | "epr" => epr_bohm()?,
        "ghz" | "ghz-mermin" => ghz_mermin()?,
        "dephasing" => dephasing_qubit(p.gamma, preset("plus")?)?,
        "damping" | "amplitude-damping" => amplitude_damping_qubit(p.gamma, preset("one")?)?,
        "von-neumann" | "measurement" => {
            let beta2 = 1.0 - p.alpha * p.alpha;
            if beta2 < -1e-10 {
                return Err(modaldyn_core::Error::InvalidAmplitudes(p.alpha * p.alpha).into());
            }
            let beta = beta2.max(0.0).sqrt();
            von_neumann_measurement(
                Complex::new(p.alpha, 0.0),
                Complex::new(beta, 0.0),
                p.n_env,
                p.coupling,
            )?
        }
        _ => {
            let path = Path::new(&p.scenario);
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "unknown scenario `{}` (built-ins: epr-bohm, ghz, dephasing, damping, von-neumann; or a JSON file)",
                    p.scenario
                )));
            }
            let file: ScenarioFile = serde_json::from_str(&read(path)?)?;
            file.into_scenario()?
        }
    };
    Ok(scenario)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn emit(output: Option<&Path>, body: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json<S: Serialize>(value: &S) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// CSV text with optional `# key=value` footer lines.
fn to_csv(
    header: &[String],
    rows: &[Vec<String>],
    footer: &[(String, String)],
) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Config(format!("csv: {e}")))?;
    let mut s = String::from_utf8(bytes).expect("csv output is utf-8");
    for (k, v) in footer {
        s.push_str(&format!("# {k}={v}\n"));
    }
    Ok(s)
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn subsystem_labels(scenario: &Scenario<f64>, requested: &[String]) -> Vec<String> {
    if !requested.is_empty() {
        return requested.to_vec();
    }
    match scenario.observables.first() {
        Some(o) => o.labels.clone(),
        None => scenario.layout.labels().to_vec(),
    }
}

pub struct EpistemicArgs {
    pub subsystem: Vec<String>,
    pub times: Vec<f64>,
    pub threshold: f64,
    pub format: Format,
}

pub fn epistemic(scenario: &Scenario<f64>, a: &EpistemicArgs) -> CliResult<String> {
    let labels = subsystem_labels(scenario, &a.subsystem);
    let times = if a.times.is_empty() {
        vec![scenario.default_time()]
    } else {
        a.times.clone()
    };
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in &times {
        let rho = scenario.reduced_state_at(t, &labels)?;
        let e = extract_epistemic(&rho, a.threshold)?;
        snapshots.push(EpistemicSnapshotJson {
            time: t,
            truncation_mass: e.truncation_mass(),
            degenerate_clusters: e.degenerate_clusters().to_vec(),
            entries: (0..e.len())
                .map(|i| EpistemicEntryJson {
                    index: i,
                    probability: e.probability(i),
                    degenerate: e.is_degenerate(i),
                    vector: vector_to_json(e.vector(i)),
                })
                .collect(),
        });
    }
    let out = EpistemicOutput {
        schema_version: SCHEMA_VERSION,
        command: "epistemic".into(),
        scenario: scenario.name.clone(),
        subsystem: labels,
        threshold: a.threshold,
        snapshots,
    };
    match a.format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let dim = out
                .snapshots
                .first()
                .and_then(|s| s.entries.first())
                .map_or(0, |e| e.vector.len());
            let mut header = strings(&[
                "schema_version",
                "time",
                "index",
                "probability",
                "degenerate",
            ]);
            for k in 0..dim {
                header.push(format!("re_{k}"));
                header.push(format!("im_{k}"));
            }
            let mut rows = Vec::new();
            for s in &out.snapshots {
                for e in &s.entries {
                    let mut r = vec![
                        SCHEMA_VERSION.to_string(),
                        s.time.to_string(),
                        e.index.to_string(),
                        e.probability.to_string(),
                        e.degenerate.to_string(),
                    ];
                    for [re, im] in &e.vector {
                        r.push(re.to_string());
                        r.push(im.to_string());
                    }
                    rows.push(r);
                }
            }
            to_csv(&header, &rows, &[])
        }
    }
}

pub struct ConditionalArgs {
    /// Blocks as label groups; empty means one block per factor.
    pub blocks: Vec<Vec<String>>,
    pub mode: Mode,
    pub time: Option<f64>,
    pub interval: f64,
    pub threshold: f64,
    pub format: Format,
}

/// `A,B` is two blocks; `A+B,C` groups A and B into one block.
pub fn parse_blocks(text: &str) -> Vec<Vec<String>> {
    text.split(',')
        .map(|b| {
            b.split('+')
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
        })
        .filter(|b| !b.is_empty())
        .collect()
}

/// Returns the rendered table and whether its normalization checks passed.
pub fn conditional(scenario: &Scenario<f64>, a: &ConditionalArgs) -> CliResult<(String, bool)> {
    if a.interval.is_nan() || a.interval < 0.0 {
        return Err(CliError::Config(format!(
            "interval must be >= 0, got {}",
            a.interval
        )));
    }
    let t = a.time.unwrap_or_else(|| scenario.default_time());
    let blocks = if a.blocks.is_empty() {
        scenario
            .layout
            .labels()
            .iter()
            .map(|l| vec![l.clone()])
            .collect()
    } else {
        a.blocks.clone()
    };
    let mut covered: Vec<String> = blocks.iter().flatten().cloned().collect();
    covered.sort();
    covered.dedup();
    let options = a.mode.options(a.threshold);
    let table = if covered.len() == scenario.layout.n_factors() {
        let rho = scenario.state_at(t)?;
        let partition = Partition::new(scenario.layout.clone(), &blocks)?;
        let ch = scenario.channel_between(t, t + a.interval)?;
        conditional_table(&rho, &ch, &partition, options)?
    } else if a.interval == 0.0 {
        // Single-time tables may take any union of factors as the parent.
        let rho = scenario.reduced_state_at(t, &covered)?;
        let partition = Partition::new(rho.layout().clone(), &blocks)?;
        conditional_table(
            &rho,
            &KrausChannel::identity(rho.dim()),
            &partition,
            options,
        )?
    } else {
        return Err(CliError::Config(
            "two-time tables need blocks covering every subsystem of the scenario".into(),
        ));
    };

    let out = ConditionalOutput {
        schema_version: SCHEMA_VERSION,
        command: "conditional".into(),
        scenario: scenario.name.clone(),
        blocks: table.block_labels.clone(),
        mode: a.mode.name().into(),
        time: t,
        interval: a.interval,
        basis_dependent: table.basis_dependent,
        parent_probabilities: table.parent.probabilities(),
        block_probabilities: table.blocks.iter().map(|b| b.probabilities()).collect(),
        rows: table
            .rows
            .iter()
            .map(|r| TableRowJson {
                w: r.w,
                indices: r.indices.clone(),
                probability: r.probability,
            })
            .collect(),
        report: TableReportJson {
            row_sums: table.report.row_sums.clone(),
            max_row_deviation: table.report.max_row_deviation,
            max_marginal_deviation: table.report.max_marginal_deviation,
            normalized: table.report.normalized,
        },
    };
    let body = match a.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut header = strings(&["schema_version", "w"]);
            header.extend(out.blocks.iter().map(|b| format!("i_{}", b.join("+"))));
            header.push("probability".into());
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![SCHEMA_VERSION.to_string(), r.w.to_string()];
                    v.extend(r.indices.iter().map(|i| i.to_string()));
                    v.push(r.probability.to_string());
                    v
                })
                .collect();
            let mut footer: Vec<(String, String)> = out
                .report
                .row_sums
                .iter()
                .enumerate()
                .map(|(w, s)| (format!("row_sum_{w}"), s.to_string()))
                .collect();
            footer.push((
                "max_row_deviation".into(),
                out.report.max_row_deviation.to_string(),
            ));
            footer.push((
                "max_marginal_deviation".into(),
                out.report.max_marginal_deviation.to_string(),
            ));
            footer.push(("normalized".into(), out.report.normalized.to_string()));
            footer.push(("basis_dependent".into(), out.basis_dependent.to_string()));
            to_csv(&header, &rows, &footer)?
        }
    };
    Ok((body, out.report.normalized))
}

pub struct SampleArgs {
    pub t_final: f64,
    pub steps: usize,
    pub n: usize,
    pub seed: u64,
    pub mode: Mode,
    pub threshold: f64,
    pub format: Format,
    pub trajectory_out: Option<PathBuf>,
}

/// Returns the rendered ensemble report and, if requested, the rendered
/// trajectories.
pub fn sample(scenario: &Scenario<f64>, a: &SampleArgs) -> CliResult<(String, Option<String>)> {
    let Dynamics::Lindblad(g) = &scenario.dynamics else {
        return Err(CliError::Config(
            "sampling needs a scenario with Lindblad dynamics".into(),
        ));
    };
    if a.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let grid = TimeGrid::uniform(a.t_final, a.steps)?;
    let chain = TrajectoryChain::from_generator(
        g,
        &scenario.initial_state,
        grid,
        a.mode.options(a.threshold),
    )?;
    let trajectories = chain.sample_many(a.n, a.seed);
    let report = EnsembleReport::from_trajectories(&chain, &trajectories, a.seed);
    let marginals = chain.marginals();

    let out = EnsembleOutput {
        schema_version: SCHEMA_VERSION,
        command: "sample".into(),
        scenario: scenario.name.clone(),
        seed: a.seed,
        sample_count: report.sample_count,
        steps: a.steps,
        t_final: a.t_final,
        max_abs_deviation: report.max_abs_deviation,
        max_sigma_deviation: report.max_sigma_deviation(),
        max_marginal_deviation: chain.marginal_deviation(),
        basis_dependent: chain.basis_dependent(),
        slices: report
            .slices
            .iter()
            .zip(marginals)
            .map(|(s, m)| SliceJson {
                time: s.time,
                frequencies: s.frequencies.clone(),
                eigenvalues: s.eigenvalues.clone(),
                chain_marginals: m,
            })
            .collect(),
    };
    let body = match a.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let header = strings(&[
                "schema_version",
                "time",
                "index",
                "frequency",
                "eigenvalue",
                "chain_marginal",
            ]);
            let mut rows = Vec::new();
            for s in &out.slices {
                for i in 0..s.eigenvalues.len() {
                    rows.push(vec![
                        SCHEMA_VERSION.to_string(),
                        s.time.to_string(),
                        i.to_string(),
                        s.frequencies[i].to_string(),
                        s.eigenvalues[i].to_string(),
                        s.chain_marginals[i].to_string(),
                    ]);
                }
            }
            let footer = vec![
                ("seed".to_string(), out.seed.to_string()),
                ("sample_count".into(), out.sample_count.to_string()),
                (
                    "max_abs_deviation".into(),
                    out.max_abs_deviation.to_string(),
                ),
                (
                    "max_sigma_deviation".into(),
                    out.max_sigma_deviation.to_string(),
                ),
                (
                    "max_marginal_deviation".into(),
                    out.max_marginal_deviation.to_string(),
                ),
            ];
            to_csv(&header, &rows, &footer)?
        }
    };

    let traj_body = match &a.trajectory_out {
        None => None,
        Some(_) => {
            let doc = TrajectoriesOutput {
                schema_version: SCHEMA_VERSION,
                scenario: scenario.name.clone(),
                trajectories: trajectories
                    .iter()
                    .map(|t| TrajectoryJson {
                        seed: t.seed,
                        points: t
                            .points
                            .iter()
                            .map(|p| PointJson {
                                time: p.time,
                                index: p.ontic_index,
                                probability: p.probability,
                            })
                            .collect(),
                    })
                    .collect(),
            };
            Some(match a.format {
                Format::Json => to_json(&doc)?,
                Format::Csv => {
                    let header = strings(&[
                        "schema_version",
                        "trajectory",
                        "seed",
                        "time",
                        "index",
                        "probability",
                    ]);
                    let mut rows = Vec::new();
                    for (k, t) in doc.trajectories.iter().enumerate() {
                        for p in &t.points {
                            rows.push(vec![
                                SCHEMA_VERSION.to_string(),
                                k.to_string(),
                                t.seed.to_string(),
                                p.time.to_string(),
                                p.index.to_string(),
                                p.probability.to_string(),
                            ]);
                        }
                    }
                    to_csv(&header, &rows, &[])?
                }
            })
        }
    };
    Ok((body, traj_body))
}

/// Returns the rendered report and whether the channel is CPT.
pub fn verify_channel(path: &Path, tol: f64, format: Format) -> CliResult<(String, bool)> {
    let file: ChannelFile = serde_json::from_str(&read(path)?)?;
    let map = file.into_map()?;
    let report = verify_cpt(map.as_ref(), tol);
    let out = ChannelReportOutput {
        schema_version: SCHEMA_VERSION,
        command: "verify-channel".into(),
        source: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        dim: map.dim(),
        tolerance: tol,
        is_cp: report.is_cp,
        is_tp: report.is_tp,
        choi_min_eigenvalue: report.choi_min_eigenvalue,
        completeness_residual: report.completeness_residual,
    };
    let body = match format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let header = strings(&[
                "schema_version",
                "source",
                "dim",
                "tolerance",
                "is_cp",
                "is_tp",
                "choi_min_eigenvalue",
                "completeness_residual",
            ]);
            let row = vec![
                SCHEMA_VERSION.to_string(),
                out.source.clone(),
                out.dim.to_string(),
                out.tolerance.to_string(),
                out.is_cp.to_string(),
                out.is_tp.to_string(),
                out.choi_min_eigenvalue.to_string(),
                out.completeness_residual.to_string(),
            ];
            to_csv(&header, &[row], &[])?
        }
    };
    Ok((body, report.is_cpt()))
}

pub fn dump_scenario(scenario: &Scenario<f64>) -> CliResult<String> {
    to_json(&ScenarioFile::from_scenario(scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_syntax() {
        assert_eq!(parse_blocks("A,B"), vec![vec!["A"], vec!["B"]]);
        assert_eq!(parse_blocks("A+B, C"), vec![vec!["A", "B"], vec!["C"]]);
        assert!(parse_blocks("").is_empty());
    }

    #[test]
    fn csv_footer_follows_rows() {
        let s = to_csv(
            &strings(&["a", "b"]),
            &[strings(&["1", "2"])],
            &[("k".into(), "v".into())],
        )
        .unwrap();
        assert_eq!(s, "a,b\n1,2\n# k=v\n");
    }
}
