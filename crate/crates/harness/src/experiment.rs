//! Batch experiments: a JSON spec expands into the cartesian product
//! `matrices x methods x t x retention x switch_tol`, each run writes one CSV
//! row and one residual-history TSV.
//!
//! CSV columns, in order:
//!
//! | column | content |
//! |---|---|
//! | `run` | zero-based run index |
//! | `matrix` | matrix source as written in the experiment spec |
//! | `n` | matrix dimension |
//! | `method` | solver name |
//! | `t` | enlargement factor (empty for CG) |
//! | `policy` | retention policy (empty for CG) |
//! | `trunc`, `restart_j`, `restart_tol` | policy parameter, empty when not applicable |
//! | `switch_tol` | flexible switch threshold, empty when disabled |
//! | `precond`, `precond_mode` | preconditioner and how it is applied |
//! | `kmax` | iteration cap |
//! | `iterations`, `status` | outcome (`error` when the run could not start) |
//! | `switch_iteration`, `restarts` | flexible switch iteration and number of restarts |
//! | `peak_block_vectors` | most length-n basis vectors alive at once |
//! | `relative_error` | `‖x - x*‖ / ‖x*‖` |
//! | `true_relative_residual` | `‖b - A x‖ / ‖b - A x0‖`, recomputed |
//! | `seed` | right-hand-side seed |
//! | `history` | residual-history file, relative to the output directory |
//! | `note` | solver notes or the error message |
//! | `wall_time_s` | solve time in seconds (the only nondeterministic column) |

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ekcg::linalg::{norm2, SparseSpdMatrix};
use ekcg::partition::Partition;
use ekcg::precond::{uniform_blocks, BlockJacobiFactor, FactorKind};
use ekcg::solver::{self, ConvergenceReport, Method, PrecondMode, Retention, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::generators::{gen_aniso3d, gen_poisson2d, gen_poisson3d, gen_skyscraper};
use crate::matrix_market::read_matrix_market;
use crate::rhs::{make_rhs, DEFAULT_SEED};

fn spec_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Spec(msg.into())
}

/// Where a matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Poisson2d(usize, usize),
    Poisson3d(usize, usize, usize),
    Aniso3d(usize, usize, usize, f64),
    Skyscraper(usize, usize, Option<usize>, f64),
    MatrixMarket(PathBuf),
}

impl MatrixSource {
    pub fn load(&self) -> Result<SparseSpdMatrix> {
        match *self {
            MatrixSource::Poisson2d(nx, ny) => gen_poisson2d(nx, ny),
            MatrixSource::Poisson3d(nx, ny, nz) => gen_poisson3d(nx, ny, nz),
            MatrixSource::Aniso3d(nx, ny, nz, c) => gen_aniso3d(nx, ny, nz, c),
            MatrixSource::Skyscraper(nx, ny, nz, c) => gen_skyscraper(nx, ny, nz, c),
            MatrixSource::MatrixMarket(ref path) => read_matrix_market(BufReader::new(File::open(path)?)),
        }
    }
}

impl FromStr for MatrixSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| spec_err(format!("matrix source {s:?} must look like kind:args")))?;
        if kind == "mm" {
            return Ok(MatrixSource::MatrixMarket(PathBuf::from(args)));
        }
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let bad = || spec_err(format!("bad arguments for {kind} in {s:?}"));
        let dim = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).ok_or_else(bad);
        let real = |i: usize| parts.get(i).and_then(|p| p.parse::<f64>().ok()).ok_or_else(bad);
        let source = match (kind, parts.len()) {
            ("poisson2d", 2) => MatrixSource::Poisson2d(dim(0)?, dim(1)?),
            ("poisson3d", 3) => MatrixSource::Poisson3d(dim(0)?, dim(1)?, dim(2)?),
            ("aniso3d", 4) => MatrixSource::Aniso3d(dim(0)?, dim(1)?, dim(2)?, real(3)?),
            ("skyscraper", 3) => MatrixSource::Skyscraper(dim(0)?, dim(1)?, None, real(2)?),
            ("skyscraper", 4) => MatrixSource::Skyscraper(dim(0)?, dim(1)?, Some(dim(2)?), real(3)?),
            _ => return Err(bad()),
        };
        Ok(source)
    }
}

/// How the subdomains are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSource {
    Contiguous,
    File(PathBuf),
}

impl PartitionSource {
    pub fn build(&self, n: usize, t: usize) -> Result<Partition> {
        let p = match self {
            PartitionSource::Contiguous => Partition::contiguous(n, t)?,
            PartitionSource::File(path) => Partition::read(BufReader::new(File::open(path)?))?,
        };
        if p.n() != n || p.t() != t {
            return Err(spec_err(format!(
                "partition has n = {}, t = {} but the run needs n = {n}, t = {t}",
                p.n(),
                p.t()
            )));
        }
        Ok(p)
    }
}

impl FromStr for PartitionSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "contiguous" => Ok(PartitionSource::Contiguous),
            Some(("file", path)) => Ok(PartitionSource::File(PathBuf::from(path))),
            _ => Err(spec_err(format!("unknown partition {s:?}"))),
        }
    }
}

/// Block Jacobi preconditioner choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondSpec {
    None,
    BlockJacobi { kind: FactorKind, blocks: usize },
}

impl PrecondSpec {
    pub fn build(&self, a: &SparseSpdMatrix) -> Result<Option<BlockJacobiFactor>> {
        match *self {
            PrecondSpec::None => Ok(None),
            PrecondSpec::BlockJacobi { kind, blocks } => Ok(Some(BlockJacobiFactor::build_with_shift_retry(
                a,
                uniform_blocks(a.n(), blocks)?,
                kind,
            )?)),
        }
    }
}

impl FromStr for PrecondSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(PrecondSpec::None);
        }
        let bad = || spec_err(format!("unknown preconditioner {s:?}"));
        let (kind, blocks) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind {
            "bj-chol" => FactorKind::ExactCholesky,
            "bj-ichol0" => FactorKind::Ichol0,
            _ => return Err(bad()),
        };
        let blocks = blocks.parse().map_err(|_| bad())?;
        Ok(PrecondSpec::BlockJacobi { kind, blocks })
    }
}

impl fmt::Display for PrecondSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecondSpec::None => f.write_str("none"),
            PrecondSpec::BlockJacobi { kind, blocks } => {
                let name = match kind {
                    FactorKind::ExactCholesky => "bj-chol",
                    FactorKind::Ichol0 => "bj-ichol0",
                };
                write!(f, "{name}:{blocks}")
            }
        }
    }
}

fn default_partition() -> String {
    "contiguous".into()
}

fn default_retention() -> Vec<String> {
    vec!["full".into()]
}

fn default_tol() -> f64 {
    1e-8
}

fn default_precond() -> String {
    "none".into()
}

fn default_precond_mode() -> String {
    "modified".into()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// JSON experiment description; every field mirrors a CLI flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub matrices: Vec<String>,
    #[serde(default = "default_partition")]
    pub partition: String,
    pub methods: Vec<String>,
    #[serde(default)]
    pub t: Vec<usize>,
    #[serde(default = "default_retention")]
    pub retention: Vec<String>,
    /// Switch thresholds; `null` runs without the switch. Empty means `[null]`.
    #[serde(default)]
    pub switch_tol: Vec<Option<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Defaults to `10 n` for CG and `max(2 * CG iterations, 50)` for the enlarged methods.
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default = "default_precond")]
    pub precond: String,
    #[serde(default = "default_precond_mode")]
    pub precond_mode: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// A validated [`ExperimentSpec`].
#[derive(Debug, Clone)]
struct Plan {
    matrices: Vec<(String, MatrixSource)>,
    partition: PartitionSource,
    methods: Vec<Method>,
    t: Vec<usize>,
    retention: Vec<Retention>,
    switch_tol: Vec<Option<f64>>,
    tol: f64,
    kmax: Option<usize>,
    precond: PrecondSpec,
    precond_mode: PrecondMode,
    seed: u64,
}

impl Plan {
    fn new(spec: &ExperimentSpec) -> Result<Self> {
        let matrices = spec
            .matrices
            .iter()
            .map(|m| Ok((m.clone(), m.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        let methods = spec
            .methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(HarnessError::from))
            .collect::<Result<Vec<_>>>()?;
        let retention = spec
            .retention
            .iter()
            .map(|r| r.parse::<Retention>().map_err(HarnessError::from))
            .collect::<Result<Vec<_>>>()?;
        if matrices.is_empty() || methods.is_empty() {
            return Err(spec_err("at least one matrix and one method are required"));
        }
        if methods.iter().any(|m| m.is_enlarged()) && (spec.t.is_empty() || retention.is_empty()) {
            return Err(spec_err("enlarged methods need non-empty t and retention lists"));
        }
        if spec.t.contains(&0) {
            return Err(spec_err("t must be at least 1"));
        }
        if !(spec.tol > 0.0 && spec.tol < 1.0) {
            return Err(spec_err(format!("tol must lie in (0,1), got {}", spec.tol)));
        }
        if spec.kmax == Some(0) {
            return Err(spec_err("kmax must be at least 1"));
        }
        let switch_tol = if spec.switch_tol.is_empty() {
            vec![None]
        } else {
            spec.switch_tol.clone()
        };
        Ok(Plan {
            matrices,
            partition: spec.partition.parse()?,
            methods,
            t: spec.t.clone(),
            retention,
            switch_tol,
            tol: spec.tol,
            kmax: spec.kmax,
            precond: spec.precond.parse()?,
            precond_mode: spec.precond_mode.parse()?,
            seed: spec.seed,
        })
    }

    /// Solver configurations for one matrix, CG first. SRE-CG is its own
    /// retention policy and runs once per `(t, switch_tol)`.
    fn configs(&self) -> Vec<(Method, Option<usize>, Option<Retention>, Option<f64>)> {
        let mut out = Vec::new();
        for &method in &self.methods {
            if !method.is_enlarged() {
                out.push((method, None, None, None));
                continue;
            }
            for &t in &self.t {
                let policies: &[Retention] = if method == Method::SreCg {
                    &[Retention::Truncated(2)]
                } else {
                    &self.retention
                };
                for &retention in policies {
                    for &switch in &self.switch_tol {
                        out.push((method, Some(t), Some(retention), switch));
                    }
                }
            }
        }
        out
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub matrix: String,
    pub n: Option<usize>,
    pub method: String,
    pub t: Option<usize>,
    pub policy: String,
    pub trunc: Option<usize>,
    pub restart_j: Option<usize>,
    pub restart_tol: Option<f64>,
    pub switch_tol: Option<f64>,
    pub precond: String,
    pub precond_mode: String,
    pub kmax: Option<usize>,
    pub iterations: Option<usize>,
    pub status: String,
    pub switch_iteration: Option<usize>,
    pub restarts: Option<usize>,
    pub peak_block_vectors: Option<usize>,
    pub relative_error: Option<f64>,
    pub true_relative_residual: Option<f64>,
    pub seed: u64,
    pub history: String,
    pub note: String,
    pub wall_time_s: f64,
}

/// Everything a run needs that is shared by all runs on one matrix.
struct Problem {
    a: SparseSpdMatrix,
    b: Vec<f64>,
    x_star: Vec<f64>,
    factor: Option<BlockJacobiFactor>,
    cg_iterations: Option<usize>,
}

/// Output of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub csv_path: PathBuf,
}

/// Runs every configuration of `spec`, writing `results.csv` and
/// `histories/*.tsv` under `out_dir`. A run that fails becomes a row with
/// status `error`; only spec and output errors abort the batch.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentOutput> {
    let plan = Plan::new(spec)?;
    let history_dir = out_dir.join("histories");
    fs::create_dir_all(&history_dir)?;
    let csv_path = out_dir.join("results.csv");
    let mut writer = csv::Writer::from_path(&csv_path)?;
    let mut records = Vec::new();

    for (label, source) in &plan.matrices {
        let problem = load_problem(&plan, source);
        let mut partitions: HashMap<usize, Result<Partition>> = HashMap::new();
        for (method, t, retention, switch) in plan.configs() {
            let run = records.len();
            let mut record = RunRecord {
                run,
                matrix: label.clone(),
                n: problem.as_ref().ok().map(|p| p.a.n()),
                method: method.to_string(),
                t,
                policy: retention.map(|r| r.to_string()).unwrap_or_default(),
                trunc: None,
                restart_j: None,
                restart_tol: None,
                switch_tol: switch,
                precond: plan.precond.to_string(),
                precond_mode: match plan.precond {
                    PrecondSpec::None => String::new(),
                    _ => plan.precond_mode.to_string(),
                },
                kmax: None,
                iterations: None,
                status: "error".into(),
                switch_iteration: None,
                restarts: None,
                peak_block_vectors: None,
                relative_error: None,
                true_relative_residual: None,
                seed: plan.seed,
                history: String::new(),
                note: String::new(),
                wall_time_s: 0.0,
            };
            match retention {
                Some(Retention::Truncated(k)) => record.trunc = Some(k),
                Some(Retention::RestartedFixed(j)) => record.restart_j = Some(j),
                Some(Retention::RestartedTol(v)) => record.restart_tol = Some(v),
                _ => {}
            }

            let outcome = problem.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                let partition = match t {
                    Some(t) => {
                        let entry = partitions.entry(t).or_insert_with(|| plan.partition.build(p.a.n(), t));
                        Some(entry.as_ref().map_err(|e| e.to_string())?.clone())
                    }
                    None => None,
                };
                let mut cfg = SolverConfig::new(method, t.unwrap_or(1))
                    .with_tol(plan.tol)
                    .with_precond_mode(plan.precond_mode);
                if let Some(r) = retention {
                    cfg = cfg.with_retention(r);
                }
                if let Some(s) = switch {
                    cfg = cfg.with_switch_tol(s);
                }
                cfg.kmax = plan.kmax.unwrap_or_else(|| default_kmax(method, p));
                let partition = partition.unwrap_or_else(|| Partition::contiguous(p.a.n(), 1).expect("n >= 1"));
                let x0 = vec![0.0; p.a.n()];
                let start = Instant::now();
                let result = solver::solve(&p.a, &p.b, &x0, &partition, &cfg, p.factor.as_ref());
                let elapsed = start.elapsed().as_secs_f64();
                result.map(|(x, rep)| (cfg.kmax, x, rep, elapsed)).map_err(|e| e.to_string())
            });

            match outcome {
                Ok((kmax, x, report, elapsed)) => {
                    let p = problem.as_ref().expect("solved runs have a problem");
                    let name = format!("histories/run{run:04}.tsv");
                    write_history(&out_dir.join(&name), &report)?;
                    record.kmax = Some(kmax);
                    record.iterations = Some(report.iterations);
                    record.status = report.status.to_string();
                    record.switch_iteration = report.switch_iteration;
                    record.restarts = Some(report.restart_iterations.len());
                    record.peak_block_vectors = Some(report.peak_block_vectors);
                    record.relative_error = Some(solver::relative_error(&x, &p.x_star));
                    record.true_relative_residual = Some(report.final_true_residual / norm2(&p.b));
                    record.history = name;
                    record.note = report.notes.join("; ");
                    record.wall_time_s = elapsed;
                }
                Err(message) => record.note = message,
            }
            writer.serialize(&record)?;
            records.push(record);
        }
    }
    writer.flush()?;
    Ok(ExperimentOutput { records, csv_path })
}

fn load_problem(plan: &Plan, source: &MatrixSource) -> Result<Problem> {
    let a = source.load()?;
    let (b, x_star) = make_rhs(&a, plan.seed);
    let factor = plan.precond.build(&a)?;
    let mut problem = Problem {
        a,
        b,
        x_star,
        factor,
        cg_iterations: None,
    };
    if plan.kmax.is_none() && plan.methods.iter().any(|m| m.is_enlarged()) {
        let cfg = SolverConfig::new(Method::Cg, 1)
            .with_tol(plan.tol)
            .with_kmax(default_kmax(Method::Cg, &problem));
        let x0 = vec![0.0; problem.a.n()];
        let p = Partition::contiguous(problem.a.n(), 1)?;
        let (_, rep) = solver::solve(&problem.a, &problem.b, &x0, &p, &cfg, problem.factor.as_ref())?;
        problem.cg_iterations = Some(rep.iterations);
    }
    Ok(problem)
}

fn default_kmax(method: Method, p: &Problem) -> usize {
    match (method, p.cg_iterations) {
        (Method::Cg, _) | (_, None) => 10 * p.a.n(),
        (_, Some(it)) => (2 * it).max(50),
    }
}

/// Writes `iteration, rho_k, tol1` as tab-separated lines with a header.
pub fn write_history(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration\trho\ttol1")?;
    for (k, rho) in report.residual_history.iter().enumerate() {
        match report.tol1(k) {
            Some(t1) => writeln!(w, "{k}\t{rho:e}\t{t1:e}")?,
            None => writeln!(w, "{k}\t{rho:e}\t")?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `results.csv` back.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sources() {
        assert_eq!("poisson2d:30,40".parse::<MatrixSource>().unwrap(), MatrixSource::Poisson2d(30, 40));
        assert_eq!(
            "skyscraper:8,8,1e3".parse::<MatrixSource>().unwrap(),
            MatrixSource::Skyscraper(8, 8, None, 1e3)
        );
        assert_eq!(
            "aniso3d:10,10,10,1000".parse::<MatrixSource>().unwrap(),
            MatrixSource::Aniso3d(10, 10, 10, 1000.0)
        );
        assert!("poisson2d:3".parse::<MatrixSource>().is_err());
        assert!("laplace:3,3".parse::<MatrixSource>().is_err());
        assert_eq!("bj-ichol0:8".parse::<PrecondSpec>().unwrap().to_string(), "bj-ichol0:8");
        assert!("bj-lu:8".parse::<PrecondSpec>().is_err());
        assert_eq!("file:p.txt".parse::<PartitionSource>().unwrap(), PartitionSource::File("p.txt".into()));
    }

    #[test]
    fn spec_defaults() {
        let spec = ExperimentSpec::from_json(r#"{"matrices": ["poisson2d:5,5"], "methods": ["cg"]}"#).unwrap();
        assert_eq!(spec.tol, 1e-8);
        assert_eq!(spec.seed, DEFAULT_SEED);
        assert_eq!(spec.retention, vec!["full".to_string()]);
        assert!(ExperimentSpec::from_json(r#"{"matrices": [], "methods": ["cg"], "bogus": 1}"#).is_err());
    }

    #[test]
    fn cartesian_product() {
        let spec = ExperimentSpec::from_json(
            r#"{"matrices": ["poisson2d:5,5"], "methods": ["cg", "sre-cg2", "sre-cg"],
                "t": [2, 4], "retention": ["full", "trunc:5"], "switch_tol": [null, 1e-5]}"#,
        )
        .unwrap();
        let plan = Plan::new(&spec).unwrap();
        // cg + sre-cg2 (2 t x 2 policies x 2 switch) + sre-cg (2 t x 2 switch)
        assert_eq!(plan.configs().len(), 1 + 8 + 4);
        assert_eq!(plan.configs()[0], (Method::Cg, None, None, None));
    }
}
