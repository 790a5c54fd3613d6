//! Reproducible sweeps over circuit size, depth, angle ensemble and noise.
//!
//! Every circuit in a sweep is identified by `(n, L, index)` and generated
//! from `derive_seed(master_seed, [n, L, index])`, so adding sweep points
//! never changes existing rows. Work is spread over the rayon pool but rows
//! are always emitted in `(n, L, index)` order, and all reductions run in a
//! fixed order, so output bytes do not depend on the thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::chaos::{otoc_record, pt_entropy, pt_histogram, TraceMode, OTOC_EXACT_MAX_QUBITS};
use crate::circuit::{apply_sampler, AngleEnsemble, SamplerSpec};
use crate::entanglement::{
    entanglement_report, haar_q, haar_reference_sample, page_entropy, tomographic_report,
    HAAR_MAX_QUBITS,
};
use crate::error::Error;
use crate::fidelity::{
    dfe_estimate, dist_summary, information_fidelity, l1_error, mean_and_sem, state_fidelity_exact,
    Expectations, NoisyState, DFE_MAX_QUBITS,
};
use crate::noise::{depolarize_dist, ReadoutModel};
use crate::seed::derive_seed;
use crate::state::{ProbDist, StateVector, MAX_QUBITS};

// Labels mixed into a circuit seed for its auxiliary random streams.
const STREAM_DFE: u64 = 1;
const STREAM_SHOTS: u64 = 2;
const STREAM_TOMOGRAPHY: u64 = 3;
const STREAM_TRACE: u64 = 4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Simulation(#[from] Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 for failures inside
    /// the simulation, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Simulation(_) => 3,
            ExperimentError::Io { .. } => 1,
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fidelity,
    Sampling,
    Entanglement,
    Otoc,
    PtHist,
    HaarOracle,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fidelity => "fidelity",
            ExperimentKind::Sampling => "sampling",
            ExperimentKind::Entanglement => "entanglement",
            ExperimentKind::Otoc => "otoc",
            ExperimentKind::PtHist => "pt-hist",
            ExperimentKind::HaarOracle => "haar-oracle",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Readout noise given either as one symmetric flip probability for every
/// qubit or as an explicit per-qubit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReadoutSetting {
    Symmetric(f64),
    Model(ReadoutModel),
}

impl ReadoutSetting {
    fn model_for(&self, n: usize) -> std::result::Result<ReadoutModel, Error> {
        match self {
            ReadoutSetting::Symmetric(p) => ReadoutModel::symmetric(n, *p),
            ReadoutSetting::Model(m) if m.n() == n => Ok(m.clone()),
            ReadoutSetting::Model(m) => Err(Error::Dimension {
                expected: n,
                got: m.n(),
            }),
        }
    }
}

fn default_s() -> usize {
    4
}
fn default_shots() -> u64 {
    crate::state::DEFAULT_SHOTS
}
fn default_r() -> usize {
    8
}
fn default_nu() -> usize {
    8
}
fn default_bins() -> usize {
    24
}
fn default_hist_upper() -> f64 {
    6.0
}
fn default_haar_count() -> usize {
    2000
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub n_list: Vec<usize>,
    #[serde(rename = "L_list", default)]
    pub layer_list: Vec<usize>,
    #[serde(default)]
    pub ensemble: AngleEnsemble,
    /// Circuits per sweep point.
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Pauli samples per fidelity estimate.
    #[serde(default = "default_r")]
    pub r: usize,
    /// Basis states per stochastic OTOC trace; capped at `2^n`.
    #[serde(default = "default_nu")]
    pub nu: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSetting>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_out")]
    pub output: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    /// Use exact expectations and distributions instead of shot sampling.
    #[serde(default)]
    pub exact_expectations: bool,
    /// Entanglement from shot-based tomography rather than exact partial traces.
    #[serde(default)]
    pub tomographic: bool,
    /// One circuit per sweep point.
    #[serde(default)]
    pub single_instance: bool,
    #[serde(default)]
    pub otoc_mode: TraceMode,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_hist_upper")]
    pub hist_upper: f64,
    #[serde(default = "default_haar_count")]
    pub haar_count: usize,
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn new(n_list: Vec<usize>, layer_list: Vec<usize>) -> Self {
        ExperimentConfig {
            experiment: None,
            n_list,
            layer_list,
            ensemble: AngleEnsemble::Continuous,
            s: default_s(),
            shots: default_shots(),
            r: default_r(),
            nu: default_nu(),
            epsilon: 0.0,
            readout: None,
            master_seed: 0,
            output: default_out(),
            format: OutputFormat::Csv,
            exact_expectations: false,
            tomographic: false,
            single_instance: false,
            otoc_mode: TraceMode::Abs,
            bins: default_bins(),
            hist_upper: default_hist_upper(),
            haar_count: default_haar_count(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| ExperimentError::Config(vec![e.to_string()]))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            ExperimentError::Config(vec![format!("config: cannot read {}: {e}", path.display())])
        })?;
        Self::from_json_str(&text)
    }

    fn circuits_per_point(&self) -> usize {
        if self.single_instance {
            1
        } else {
            self.s
        }
    }

    /// Checks every field against the needs of `kind`, collecting all
    /// problems into one error.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let mut errs = Vec::new();
        let (n_min, n_max) = match kind {
            ExperimentKind::Fidelity => (2, DFE_MAX_QUBITS),
            ExperimentKind::Otoc => (2, OTOC_EXACT_MAX_QUBITS),
            ExperimentKind::HaarOracle => (2, HAAR_MAX_QUBITS),
            _ => (2, MAX_QUBITS),
        };
        if self.n_list.is_empty() {
            errs.push("n_list: must not be empty".to_string());
        }
        for &n in &self.n_list {
            if !(n_min..=n_max).contains(&n) {
                errs.push(format!("n_list: {n} outside [{n_min}, {n_max}] for {kind}"));
            }
        }
        if kind != ExperimentKind::HaarOracle && self.layer_list.is_empty() {
            errs.push("L_list: must not be empty".to_string());
        }
        if self.s == 0 {
            errs.push("s: must be at least 1".to_string());
        }
        if self.shots == 0 {
            errs.push("shots: must be at least 1".to_string());
        }
        if self.r == 0 {
            errs.push("r: must be at least 1".to_string());
        }
        if self.nu == 0 {
            errs.push("nu: must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            errs.push(format!("epsilon: {} outside [0, 1]", self.epsilon));
        }
        if let Some(readout) = &self.readout {
            for &n in &self.n_list {
                if let Err(e) = readout.model_for(n) {
                    errs.push(format!("readout: {e} (n = {n})"));
                }
            }
        }
        if self.bins == 0 {
            errs.push("bins: must be at least 1".to_string());
        }
        if !self.hist_upper.is_finite() || self.hist_upper <= 0.0 {
            errs.push(format!("hist_upper: {} must be positive", self.hist_upper));
        }
        if self.haar_count == 0 {
            errs.push("haar_count: must be at least 1".to_string());
        }
        if let Some(name) = &self.experiment {
            if name != kind.name() {
                errs.push(format!(
                    "experiment: config is for {name:?}, running {kind}"
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::Config(errs))
        }
    }

    /// Seed of circuit `index` at sweep point `(n, L)`.
    pub fn circuit_seed(&self, n: usize, layers: usize, index: usize) -> u64 {
        derive_seed(self.master_seed, &[n as u64, layers as u64, index as u64])
    }

    fn jobs(&self) -> Vec<Job> {
        let per_point = self.circuits_per_point();
        let mut jobs = Vec::new();
        for &n in &self.n_list {
            for &layers in &self.layer_list {
                for index in 0..per_point {
                    jobs.push(Job {
                        n,
                        layers,
                        index,
                        seed: self.circuit_seed(n, layers, index),
                    });
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    n: usize,
    layers: usize,
    index: usize,
    seed: u64,
}

impl Job {
    fn spec(&self, ensemble: AngleEnsemble) -> std::result::Result<SamplerSpec, Error> {
        SamplerSpec::random(self.n, self.layers, ensemble, self.seed)
    }

    fn ideal_state(&self, ensemble: AngleEnsemble) -> std::result::Result<StateVector, Error> {
        let mut s = StateVector::zero(self.n)?;
        apply_sampler(&mut s, &self.spec(ensemble)?)?;
        Ok(s)
    }

    fn stream(&self, label: u64) -> u64 {
        derive_seed(self.seed, &[label])
    }
}

fn run_jobs<T, F>(jobs: &[Job], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Job) -> std::result::Result<T, Error> + Sync + Send,
{
    Ok(jobs
        .par_iter()
        .map(f)
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Consecutive runs of rows sharing `(n, L)`, in job order.
fn group_points<'a, T>(jobs: &'a [Job], rows: &'a [T]) -> Vec<(Job, &'a [T])> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < jobs.len() {
        let key = (jobs[start].n, jobs[start].layers);
        let mut end = start;
        while end < jobs.len() && (jobs[end].n, jobs[end].layers) == key {
            end += 1;
        }
        out.push((jobs[start], &rows[start..end]));
        start = end;
    }
    out
}

fn seed_list(jobs: &[Job], first: &Job) -> String {
    jobs.iter()
        .filter(|j| j.n == first.n && j.layers == first.layers)
        .map(|j| j.seed.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn stats<T>(rows: &[T], f: impl Fn(&T) -> f64) -> (f64, f64) {
    mean_and_sem(&rows.iter().map(f).collect::<Vec<_>>())
}

/// Named output table; rows are JSON objects with a shared key order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub rows: Vec<Map<String, Value>>,
}

impl Table {
    pub fn from_rows<T: Serialize>(name: impl Into<String>, rows: &[T]) -> Table {
        let rows = rows
            .iter()
            .map(|r| match serde_json::to_value(r).expect("rows serialize") {
                Value::Object(m) => m,
                other => panic!("row serialized to non-object {other}"),
            })
            .collect();
        Table {
            name: name.into(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(first) = self.rows.first() {
            w.write_record(first.keys()).expect("write to memory");
        }
        for row in &self.rows {
            w.write_record(row.values().map(csv_cell))
                .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rows).expect("rows serialize");
        s.push('\n');
        s
    }

    /// Values of one column as floats (`NaN` for non-numbers).
    pub fn column(&self, key: &str) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN))
            .collect()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => "NaN".to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn nan_if_degenerate(r: std::result::Result<f64, Error>) -> std::result::Result<f64, Error> {
    match r {
        Err(Error::DegenerateIdeal) => {
            log::warn!("ideal distribution is uniform; F_in reported as NaN");
            Ok(f64::NAN)
        }
        other => other,
    }
}

// --- fidelity -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCircuitRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub index: usize,
    pub seed: u64,
    #[serde(rename = "F_exact")]
    pub f_exact: f64,
    #[serde(rename = "F_dfe")]
    pub f_dfe: f64,
    #[serde(rename = "F_dfe_err")]
    pub f_dfe_err: f64,
    #[serde(rename = "F_in")]
    pub f_in: f64,
    pub l1: f64,
    pub shannon: f64,
    pub mean_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub s: usize,
    pub epsilon: f64,
    #[serde(rename = "F_exact")]
    pub f_exact: f64,
    #[serde(rename = "F_exact_err")]
    pub f_exact_err: f64,
    #[serde(rename = "F_dfe")]
    pub f_dfe: f64,
    #[serde(rename = "F_dfe_err")]
    pub f_dfe_err: f64,
    #[serde(rename = "F_in")]
    pub f_in: f64,
    #[serde(rename = "F_in_err")]
    pub f_in_err: f64,
    pub seeds: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySweep {
    pub summary: Vec<FidelityRow>,
    pub circuits: Vec<FidelityCircuitRow>,
}

/// State fidelity (exact and estimated) and information fidelity under
/// global depolarizing noise, averaged over `s` circuits per `(n, L)`.
pub fn run_fidelity_sweep(config: &ExperimentConfig) -> Result<FidelitySweep> {
    config.validate(ExperimentKind::Fidelity)?;
    let jobs = config.jobs();
    let eps = config.epsilon;
    let circuits = run_jobs(&jobs, |job| {
        let ideal = job.ideal_state(config.ensemble)?;
        let p_ideal = ideal.probabilities();
        let f_exact = state_fidelity_exact(&ideal, &ideal, eps)?;
        let expectations = if config.exact_expectations {
            Expectations::Exact
        } else {
            Expectations::Shots(config.shots)
        };
        let prepared = NoisyState::new(ideal.clone(), eps)?;
        let dfe = dfe_estimate(
            &ideal,
            &prepared,
            config.r,
            expectations,
            job.stream(STREAM_DFE),
        )?;
        let p_meas = measured_distribution(config, job, &p_ideal, None)?;
        let f_in = nan_if_degenerate(information_fidelity(&p_meas, &p_ideal))?;
        let summary = dist_summary(&p_meas);
        Ok(FidelityCircuitRow {
            n: job.n,
            layers: job.layers,
            index: job.index,
            seed: job.seed,
            f_exact,
            f_dfe: dfe.value,
            f_dfe_err: dfe.std_error,
            f_in,
            l1: l1_error(&p_meas, &p_ideal)?,
            shannon: summary.shannon,
            mean_index: summary.mean_index,
        })
    })?;
    let summary = group_points(&jobs, &circuits)
        .into_iter()
        .map(|(job, rows)| {
            let (f_exact, f_exact_err) = stats(rows, |r| r.f_exact);
            let (f_dfe, f_dfe_err) = stats(rows, |r| r.f_dfe);
            let (f_in, f_in_err) = stats(rows, |r| r.f_in);
            FidelityRow {
                n: job.n,
                layers: job.layers,
                s: rows.len(),
                epsilon: eps,
                f_exact,
                f_exact_err,
                f_dfe,
                f_dfe_err,
                f_in,
                f_in_err,
                seeds: seed_list(&jobs, &job),
            }
        })
        .collect();
    Ok(FidelitySweep { summary, circuits })
}

/// Depolarized, optionally readout-corrupted, and (unless exact) shot-sampled
/// output distribution.
fn measured_distribution(
    config: &ExperimentConfig,
    job: &Job,
    p_ideal: &ProbDist,
    readout: Option<&ReadoutModel>,
) -> std::result::Result<ProbDist, Error> {
    let mut p = depolarize_dist(p_ideal, config.epsilon)?;
    if let Some(model) = readout {
        p = model.apply(&p)?;
    }
    if config.exact_expectations {
        Ok(p)
    } else {
        p.sample_counts(config.shots, job.stream(STREAM_SHOTS))
    }
}

// --- sampling -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub index: usize,
    pub seed: u64,
    pub shots: u64,
    pub epsilon: f64,
    pub ave: f64,
    pub ideal_std: f64,
    pub ideal_shannon: f64,
    pub ideal_mean_index: f64,
    pub meas_std: f64,
    pub meas_shannon: f64,
    pub meas_mean_index: f64,
    pub l1: f64,
    pub one_minus_f: f64,
    pub one_minus_f_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub index: usize,
    pub seed: u64,
    pub x: usize,
    pub p_ideal: f64,
    pub p_meas: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingRun {
    pub summary: Vec<SamplingRow>,
    pub distributions: Vec<DistRow>,
}

/// Ideal and measured output distributions with their summary statistics
/// and three error metrics.
pub fn run_sampling_experiment(config: &ExperimentConfig) -> Result<SamplingRun> {
    config.validate(ExperimentKind::Sampling)?;
    let jobs = config.jobs();
    let per_circuit = run_jobs(&jobs, |job| {
        let ideal = job.ideal_state(config.ensemble)?;
        let p_ideal = ideal.probabilities();
        let readout = config
            .readout
            .as_ref()
            .map(|r| r.model_for(job.n))
            .transpose()?;
        let p_meas = measured_distribution(config, job, &p_ideal, readout.as_ref())?;
        let ideal_sum = dist_summary(&p_ideal);
        let meas_sum = dist_summary(&p_meas);
        let f = state_fidelity_exact(&ideal, &ideal, config.epsilon)?;
        let f_in = nan_if_degenerate(information_fidelity(&p_meas, &p_ideal))?;
        let row = SamplingRow {
            n: job.n,
            layers: job.layers,
            index: job.index,
            seed: job.seed,
            shots: if config.exact_expectations {
                0
            } else {
                config.shots
            },
            epsilon: config.epsilon,
            ave: ideal_sum.ave,
            ideal_std: ideal_sum.std,
            ideal_shannon: ideal_sum.shannon,
            ideal_mean_index: ideal_sum.mean_index,
            meas_std: meas_sum.std,
            meas_shannon: meas_sum.shannon,
            meas_mean_index: meas_sum.mean_index,
            l1: l1_error(&p_meas, &p_ideal)?,
            one_minus_f: 1.0 - f,
            one_minus_f_in: 1.0 - f_in,
        };
        let dists: Vec<DistRow> = p_ideal
            .probs()
            .iter()
            .zip(p_meas.probs())
            .enumerate()
            .map(|(x, (&pi, &pm))| DistRow {
                n: job.n,
                layers: job.layers,
                index: job.index,
                seed: job.seed,
                x,
                p_ideal: pi,
                p_meas: pm,
            })
            .collect();
        Ok((row, dists))
    })?;
    let mut summary = Vec::with_capacity(per_circuit.len());
    let mut distributions = Vec::new();
    for (row, dists) in per_circuit {
        summary.push(row);
        distributions.extend(dists);
    }
    Ok(SamplingRun {
        summary,
        distributions,
    })
}

// --- entanglement ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub index: usize,
    pub seed: u64,
    pub mode: &'static str,
    pub gammas: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    #[serde(rename = "Se")]
    pub se: f64,
    #[serde(rename = "haar_Q")]
    pub haar_q: f64,
    #[serde(rename = "page_Se")]
    pub page_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementSummaryRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub count: usize,
    pub mode: &'static str,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Q_err")]
    pub q_err: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    #[serde(rename = "S2_err")]
    pub s2_err: f64,
    #[serde(rename = "Se")]
    pub se: f64,
    #[serde(rename = "Se_err")]
    pub se_err: f64,
    #[serde(rename = "haar_Q")]
    pub haar_q: f64,
    #[serde(rename = "page_Se")]
    pub page_se: f64,
    pub seeds: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSweep {
    pub summary: Vec<EntanglementSummaryRow>,
    pub circuits: Vec<EntanglementRow>,
}

/// Q, S2 and Se versus depth with their Haar references.
pub fn run_entanglement_sweep(config: &ExperimentConfig) -> Result<EntanglementSweep> {
    config.validate(ExperimentKind::Entanglement)?;
    let jobs = config.jobs();
    let mode = if config.tomographic {
        "tomographic"
    } else {
        "exact"
    };
    let circuits = run_jobs(&jobs, |job| {
        let ideal = job.ideal_state(config.ensemble)?;
        let report = if config.tomographic {
            tomographic_report(&ideal, config.shots, job.stream(STREAM_TOMOGRAPHY))?
        } else {
            entanglement_report(&ideal)?
        };
        Ok(EntanglementRow {
            n: job.n,
            layers: job.layers,
            index: job.index,
            seed: job.seed,
            mode,
            gammas: report.gammas,
            q: report.q,
            s2: report.s2,
            se: report.se,
            haar_q: haar_q(job.n),
            page_se: page_entropy(2, 1 << (job.n - 1))?,
        })
    })?;
    let summary = group_points(&jobs, &circuits)
        .into_iter()
        .map(|(job, rows)| {
            let (q, q_err) = stats(rows, |r| r.q);
            let (s2, s2_err) = stats(rows, |r| r.s2);
            let (se, se_err) = stats(rows, |r| r.se);
            EntanglementSummaryRow {
                n: job.n,
                layers: job.layers,
                count: rows.len(),
                mode,
                q,
                q_err,
                s2,
                s2_err,
                se,
                se_err,
                haar_q: rows[0].haar_q,
                page_se: rows[0].page_se,
                seeds: seed_list(&jobs, &job),
            }
        })
        .collect();
    Ok(EntanglementSweep { summary, circuits })
}

// --- otoc -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub ensemble: AngleEnsemble,
    pub index: usize,
    pub seed: u64,
    #[serde(rename = "F_exact")]
    pub f_exact: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "F_stochastic")]
    pub f_stochastic: f64,
    pub nu: usize,
    pub mode: &'static str,
    pub epsilon: f64,
    pub wvvw: f64,
    pub ratio: f64,
    #[serde(rename = "max_im_G")]
    pub max_im_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocSummaryRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub ensemble: AngleEnsemble,
    pub count: usize,
    #[serde(rename = "abs_F_exact")]
    pub abs_f_exact: f64,
    #[serde(rename = "abs_F_exact_err")]
    pub abs_f_exact_err: f64,
    #[serde(rename = "F_stochastic")]
    pub f_stochastic: f64,
    #[serde(rename = "F_stochastic_err")]
    pub f_stochastic_err: f64,
    pub wvvw: f64,
    pub ratio: f64,
    pub ratio_err: f64,
    pub seeds: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtocSweep {
    pub summary: Vec<OtocSummaryRow>,
    pub circuits: Vec<OtocRow>,
}

/// Exact and stochastic OTOCs, the WVVW reference and their ratio.
pub fn run_otoc_sweep(config: &ExperimentConfig) -> Result<OtocSweep> {
    config.validate(ExperimentKind::Otoc)?;
    let jobs = config.jobs();
    // Jobs run in parallel already; each circuit's inner loop over basis
    // states is also parallel, which rayon nests without oversubscription.
    let circuits = run_jobs(&jobs, |job| {
        let spec = job.spec(config.ensemble)?;
        let nu = config.nu.min(1 << job.n);
        let rec = otoc_record(
            &spec,
            nu,
            job.stream(STREAM_TRACE),
            config.otoc_mode,
            config.epsilon,
        )?;
        Ok(OtocRow {
            n: job.n,
            layers: job.layers,
            ensemble: config.ensemble,
            index: job.index,
            seed: job.seed,
            f_exact: rec.f_exact,
            c: rec.c,
            f_stochastic: rec.f_stochastic,
            nu,
            mode: config.otoc_mode.as_str(),
            epsilon: config.epsilon,
            wvvw: rec.wvvw,
            ratio: rec.ratio,
            max_im_g: rec.max_im_g,
        })
    })?;
    let summary = group_points(&jobs, &circuits)
        .into_iter()
        .map(|(job, rows)| {
            let (abs_f_exact, abs_f_exact_err) = stats(rows, |r| r.f_exact.abs());
            let (f_stochastic, f_stochastic_err) = stats(rows, |r| r.f_stochastic);
            let (wvvw, _) = stats(rows, |r| r.wvvw);
            let (ratio, ratio_err) = stats(rows, |r| r.ratio);
            OtocSummaryRow {
                n: job.n,
                layers: job.layers,
                ensemble: config.ensemble,
                count: rows.len(),
                abs_f_exact,
                abs_f_exact_err,
                f_stochastic,
                f_stochastic_err,
                wvvw,
                ratio,
                ratio_err,
                seeds: seed_list(&jobs, &job),
            }
        })
        .collect();
    Ok(OtocSweep { summary, circuits })
}

// --- Porter-Thomas --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtSummaryRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub count: usize,
    pub shannon: f64,
    pub shannon_err: f64,
    pub pt_entropy: f64,
    pub one_over_n: f64,
    pub overflow: f64,
    pub seeds: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtBinRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub lo: f64,
    pub hi: f64,
    pub observed: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtRun {
    pub summary: Vec<PtSummaryRow>,
    pub bins: Vec<PtBinRow>,
}

/// Output-probability histograms pooled over `s` noiseless circuits per
/// `(n, L)`, with mean Shannon entropy against the Porter-Thomas value.
pub fn run_pt_histogram(config: &ExperimentConfig) -> Result<PtRun> {
    config.validate(ExperimentKind::PtHist)?;
    let jobs = config.jobs();
    let dists = run_jobs(&jobs, |job| {
        Ok(job.ideal_state(config.ensemble)?.probabilities())
    })?;
    let mut summary = Vec::new();
    let mut bins = Vec::new();
    for (job, group) in group_points(&jobs, &dists) {
        let hist = pt_histogram(group, config.bins, config.hist_upper)?;
        let (shannon, shannon_err) = stats(group, crate::fidelity::shannon_entropy);
        summary.push(PtSummaryRow {
            n: job.n,
            layers: job.layers,
            count: group.len(),
            shannon,
            shannon_err,
            pt_entropy: pt_entropy(job.n),
            one_over_n: hist.one_over_n,
            overflow: hist.overflow,
            seeds: seed_list(&jobs, &job),
        });
        bins.extend(hist.bins.iter().map(|b| PtBinRow {
            n: job.n,
            layers: job.layers,
            lo: b.lo,
            hi: b.hi,
            observed: b.observed,
            reference: b.reference,
        }));
    }
    Ok(PtRun { summary, bins })
}

// --- Haar oracle ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarRow {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Q_err")]
    pub q_err: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    #[serde(rename = "S2_err")]
    pub s2_err: f64,
    #[serde(rename = "Se")]
    pub se: f64,
    #[serde(rename = "Se_err")]
    pub se_err: f64,
    #[serde(rename = "haar_Q")]
    pub haar_q: f64,
    #[serde(rename = "page_Se")]
    pub page_se: f64,
}

/// Monte-Carlo Haar averages of Q, S2 and Se next to their closed forms.
pub fn run_haar_oracle(config: &ExperimentConfig) -> Result<Vec<HaarRow>> {
    config.validate(ExperimentKind::HaarOracle)?;
    config
        .n_list
        .iter()
        .map(|&n| {
            let seed = derive_seed(config.master_seed, &[n as u64]);
            let sample = haar_reference_sample(n, config.haar_count, seed)?;
            let (q, q_err) = sample.q_stats();
            let (s2, s2_err) = sample.s2_stats();
            let (se, se_err) = sample.se_stats();
            Ok(HaarRow {
                n,
                count: config.haar_count,
                seed,
                q,
                q_err,
                s2,
                s2_err,
                se,
                se_err,
                haar_q: haar_q(n),
                page_se: page_entropy(2, 1 << (n - 1))?,
            })
        })
        .collect()
}

// --- dispatch and output --------------------------------------------------

/// Runs one experiment and returns its tables, main table first.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Vec<Table>> {
    let name = kind.name();
    Ok(match kind {
        ExperimentKind::Fidelity => {
            let r = run_fidelity_sweep(config)?;
            vec![
                Table::from_rows(name, &r.summary),
                Table::from_rows(format!("{name}_circuits"), &r.circuits),
            ]
        }
        ExperimentKind::Sampling => {
            let r = run_sampling_experiment(config)?;
            vec![
                Table::from_rows(name, &r.summary),
                Table::from_rows(format!("{name}_distributions"), &r.distributions),
            ]
        }
        ExperimentKind::Entanglement => {
            let r = run_entanglement_sweep(config)?;
            vec![
                Table::from_rows(name, &r.summary),
                Table::from_rows(format!("{name}_circuits"), &r.circuits),
            ]
        }
        ExperimentKind::Otoc => {
            let r = run_otoc_sweep(config)?;
            vec![
                Table::from_rows(name, &r.summary),
                Table::from_rows(format!("{name}_circuits"), &r.circuits),
            ]
        }
        ExperimentKind::PtHist => {
            let r = run_pt_histogram(config)?;
            vec![
                Table::from_rows(name, &r.summary),
                Table::from_rows(format!("{name}_bins"), &r.bins),
            ]
        }
        ExperimentKind::HaarOracle => vec![Table::from_rows(name, &run_haar_oracle(config)?)],
    })
}

/// Writes each table as `<dir>/<name>.<csv|json>` plus the resolved config
/// as `<dir>/<experiment>.config.json`. Returns the written paths.
pub fn write_outputs(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    tables: &[Table],
) -> Result<Vec<PathBuf>> {
    let dir = &config.output;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for table in tables {
        let path = dir.join(format!("{}.{}", table.name, config.format.extension()));
        let body = match config.format {
            OutputFormat::Csv => table.to_csv(),
            OutputFormat::Json => table.to_json(),
        };
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    let mut resolved = config.clone();
    resolved.experiment = Some(kind.name().to_string());
    let path = dir.join(format!("{}.config.json", kind.name()));
    let mut body = serde_json::to_string_pretty(&resolved).expect("config serializes");
    body.push('\n');
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
