use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ekcg::partition::Partition;
use ekcg_harness::experiment::{run_experiment, ExperimentSpec, MatrixSource, RunRecord};
use ekcg_harness::{write_matrix_market, Result};

#[derive(Parser)]
#[command(name = "ekcg", version, about = "Enlarged Krylov CG solvers and experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one or more configurations on a single matrix.
    Solve(SolveArgs),
    /// Run a JSON experiment spec.
    Batch {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "ekcg-out")]
        out: PathBuf,
    },
    /// Write a generated matrix in Matrix Market format.
    WriteMatrix {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a contiguous partition file for a matrix.
    WritePartition {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// poisson2d:NX,NY | poisson3d:NX,NY,NZ | aniso3d:NX,NY,NZ,C | skyscraper:NX,NY[,NZ],C | mm:PATH
    #[arg(long)]
    matrix: String,
    /// contiguous | file:PATH
    #[arg(long, default_value = "contiguous")]
    partition: String,
    /// Enlargement factors, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    t: Vec<usize>,
    /// cg | sre-cg2 | sre-cg | msdo-cg | modified-msdo-cg, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "sre-cg2")]
    method: Vec<String>,
    /// full | trunc:K | restart:J | restart-tol:TOL, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "full")]
    retention: Vec<String>,
    /// Threshold for the t to t/2 switch.
    #[arg(long)]
    switch_tol: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    kmax: Option<usize>,
    /// none | bj-chol:NBLOCKS | bj-ichol0:NBLOCKS
    #[arg(long, default_value = "none")]
    precond: String,
    /// modified | explicit-hat
    #[arg(long, default_value = "modified")]
    precond_mode: String,
    #[arg(long, default_value_t = ekcg_harness::rhs::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "ekcg-out")]
    out: PathBuf,
}

impl SolveArgs {
    fn into_spec(self) -> (ExperimentSpec, PathBuf) {
        let spec = ExperimentSpec {
            matrices: vec![self.matrix],
            partition: self.partition,
            methods: self.method,
            t: self.t,
            retention: self.retention,
            switch_tol: vec![self.switch_tol],
            tol: self.tol,
            kmax: self.kmax,
            precond: self.precond,
            precond_mode: self.precond_mode,
            seed: self.seed,
        };
        (spec, self.out)
    }
}

fn print_summary(records: &[RunRecord]) {
    println!(
        "{:<18} {:>3} {:<16} {:>6} {:<10} {:>7} {:>11}",
        "method", "t", "policy", "iter", "status", "mem", "rel_err"
    );
    for r in records {
        println!(
            "{:<18} {:>3} {:<16} {:>6} {:<10} {:>7} {:>11}",
            r.method,
            r.t.map(|t| t.to_string()).unwrap_or_default(),
            r.policy,
            r.iterations.map(|k| k.to_string()).unwrap_or_default(),
            r.status,
            r.peak_block_vectors.map(|m| m.to_string()).unwrap_or_default(),
            r.relative_error.map(|e| format!("{e:.3e}")).unwrap_or_default(),
        );
        if r.status == "error" {
            println!("  error: {}", r.note);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let (spec, out) = args.into_spec();
            let output = run_experiment(&spec, &out)?;
            print_summary(&output.records);
            println!("wrote {}", output.csv_path.display());
        }
        Command::Batch { spec, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            let output = run_experiment(&spec, &out)?;
            print_summary(&output.records);
            println!("wrote {}", output.csv_path.display());
        }
        Command::WriteMatrix { matrix, output } => {
            let a = matrix.parse::<MatrixSource>()?.load()?;
            write_matrix_market(&a, BufWriter::new(File::create(output)?))?;
        }
        Command::WritePartition { matrix, t, output } => {
            let a = matrix.parse::<MatrixSource>()?.load()?;
            Partition::contiguous(a.n(), t)?.write(BufWriter::new(File::create(output)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
