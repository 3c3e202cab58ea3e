//! Command-line front end: ingest, predict, simulate, reproduce, export.
//!
//! Results go to stdout as JSON (or to files where a subcommand says so),
//! diagnostics to stderr. Exit codes: 0 success, 1 validation error, 2 when
//! post-selection exhausts its retry budget. Identical invocations produce
//! byte-identical output.

use std::fs;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qrecsim_core::analytic::predict;
use qrecsim_core::circuits::{
    build_grover_iteration, build_hamming_stage, estimate_gate_counts,
};
use qrecsim_core::database::{parse_table, DatabaseTable, UserQuery};
use qrecsim_core::grover::{AmplificationPlan, IterationCount, MarkedSpec};
use qrecsim_core::pipeline::{reproduce, run, ReproduceCase, RunConfig, RunOutcome};
use qrecsim_core::report::{predict_report, run_report, to_json_string};
use qrecsim_core::{BitString, Error, Result};

#[derive(Parser)]
#[command(
    name = "qrecsim",
    version,
    about = "Simulates a quantum recommendation pipeline: neighbor scoring by \
             Hamming distance, post-selection, and amplitude amplification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a database table and print its shape and digest
    Validate {
        /// CSV table with an id,feature header
        #[arg(long)]
        db: PathBuf,
    },
    /// Print closed-form predictions without simulating anything
    Predict {
        #[arg(long)]
        db: PathBuf,
        /// User feature bits, e.g. 101011
        #[arg(long)]
        feature: String,
        /// Feature patterns to amplify, comma separated; default: the query
        #[arg(long, value_delimiter = ',')]
        marked: Vec<String>,
        /// Iteration count, or "auto" for round((pi/4)*sqrt(N/g))
        #[arg(long)]
        iterations: Option<String>,
    },
    /// Run the pipeline and print a JSON report
    Recommend {
        #[arg(long)]
        db: PathBuf,
        /// User feature bits, e.g. 101011
        #[arg(long)]
        feature: String,
        /// Number of end-to-end shots
        #[arg(long)]
        shots: u64,
        /// Base RNG seed; falls back to QRECSIM_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        /// Feature patterns to amplify, comma separated; default: the query
        #[arg(long, value_delimiter = ',')]
        marked: Vec<String>,
        /// Iteration count, or "auto" for round((pi/4)*sqrt(N/g))
        #[arg(long)]
        iterations: Option<String>,
        /// Read exact probabilities instead of sampling
        #[arg(long)]
        exact: bool,
        /// Scoring attempts allowed per shot before it is abandoned
        #[arg(long, default_value_t = 100)]
        max_attempts: u32,
        /// Directory for per-stage distribution and statevector dumps
        #[arg(long)]
        stage_dumps: Option<PathBuf>,
    },
    /// Re-run a bundled demonstration case and write its data files
    Reproduce {
        #[arg(long, value_enum)]
        case: CaseArg,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Print gate-count estimates for the three pipeline stages
    Gatecount {
        /// Feature width in bits
        #[arg(long)]
        l: u64,
        /// Number of records
        #[arg(long)]
        n: u64,
        /// Gates per multi-controlled phase decomposition; default 2(l-1)
        #[arg(long)]
        c: Option<u64>,
    },
    /// Write a stage circuit as a gate-per-line text file
    ExportCircuit {
        #[arg(long)]
        db: PathBuf,
        /// User feature bits, e.g. 101011
        #[arg(long)]
        feature: String,
        #[arg(long, value_enum)]
        stage: StageArg,
        /// Output file
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    One,
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Init,
    Knn,
    Grover,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::RetryExhausted { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_table(path: &Path) -> Result<DatabaseTable> {
    parse_table(File::open(path)?)
}

fn plan_from_flags(marked: &[String], iterations: Option<&str>) -> Result<AmplificationPlan> {
    let marked = if marked.is_empty() {
        MarkedSpec::UserFeature
    } else {
        MarkedSpec::Features(
            marked
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<BitString>>>()?,
        )
    };
    let iterations = match iterations {
        None => IterationCount::Auto,
        Some("auto") => IterationCount::Auto,
        Some(t) => IterationCount::Fixed(t.parse().map_err(|_| {
            Error::Config(format!("iterations must be a count or \"auto\", got {t:?}"))
        })?),
    };
    Ok(AmplificationPlan { marked, iterations })
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("QRECSIM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("QRECSIM_SEED must be an unsigned integer, got {v:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::Config(format!("QRECSIM_SEED: {e}"))),
    }
}

#[derive(Serialize)]
struct ValidateOutput {
    records: usize,
    id_width: usize,
    feature_width: usize,
    qubits: usize,
    digest: String,
}

fn stage_distribution_csv(outcome: &RunOutcome, name: &str) -> Result<String> {
    let stage = outcome
        .stages
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("run produced no {name} stage")))?;
    let mut csv = String::from("id,feature,p\n");
    for (id, feature, p) in &stage.distribution {
        csv.push_str(&format!("{id},{feature},{p:.16e}\n"));
    }
    Ok(csv)
}

fn trajectory_csv(outcome: &RunOutcome) -> Result<String> {
    let stage = outcome
        .stages
        .iter()
        .find(|s| s.trajectory.is_some())
        .ok_or_else(|| Error::Config("run produced no trajectory".into()))?;
    let mut csv = String::from("t,marked_probability\n");
    for (i, p) in stage.trajectory.as_ref().unwrap().iter().enumerate() {
        csv.push_str(&format!("{},{p:.16e}\n", i + 1));
    }
    Ok(csv)
}

fn write_stage_dumps(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    for stage in &outcome.stages {
        fs::write(
            dir.join(format!("dist_{}.csv", stage.name)),
            stage_distribution_csv(outcome, stage.name)?,
        )?;
        if let Some(dump) = &stage.state_dump {
            fs::write(dir.join(format!("state_{}.csv", stage.name)), dump)?;
        }
    }
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Validate { db } => {
            let table = load_table(&db)?;
            let layout = table.layout()?;
            let out = ValidateOutput {
                records: table.len(),
                id_width: table.id_width(),
                feature_width: table.feature_width(),
                qubits: layout.num_qubits(),
                digest: table.digest(),
            };
            println!(
                "{}",
                serde_json::to_string(&out)
                    .map_err(|e| Error::Config(format!("serialization: {e}")))?
            );
            Ok(())
        }
        Command::Predict { db, feature, marked, iterations } => {
            let table = load_table(&db)?;
            let query = UserQuery::parse(&feature)?;
            let plan = plan_from_flags(&marked, iterations.as_deref())?;
            let prediction = predict(&table, &query, Some(&plan))?;
            print!("{}", to_json_string(&predict_report(&table, &query, &prediction))?);
            Ok(())
        }
        Command::Recommend {
            db,
            feature,
            shots,
            seed,
            marked,
            iterations,
            exact,
            max_attempts,
            stage_dumps,
        } => {
            let table = load_table(&db)?;
            let query = UserQuery::parse(&feature)?;
            let plan = plan_from_flags(&marked, iterations.as_deref())?;
            let config = RunConfig {
                seed: resolve_seed(seed)?,
                shots,
                max_attempts,
                exact,
                amplification: Some(plan),
                emit_stage_dumps: stage_dumps.is_some(),
            };
            let outcome = run(&table, &query, &config)?;
            let json = to_json_string(&run_report("recommend", &table, &query, &config, &outcome))?;
            if let Some(dir) = stage_dumps {
                write_stage_dumps(&dir, &outcome)?;
            }
            print!("{json}");
            Ok(())
        }
        Command::Reproduce { case, out } => {
            let case = match case {
                CaseArg::One => ReproduceCase::One,
                CaseArg::Two => ReproduceCase::Two,
            };
            let output = reproduce(case)?;
            let report = run_report(
                &format!("reproduce-{}", output.case),
                &output.table,
                &output.query,
                &output.config,
                &output.outcome,
            );
            // render everything before touching the filesystem
            let json = to_json_string(&report)?;
            let knn_csv = stage_distribution_csv(&output.outcome, "post_knn")?;
            let grover_csv = stage_distribution_csv(&output.outcome, "post_grover")?;
            let traj_csv = trajectory_csv(&output.outcome)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("report.json"), json)?;
            fs::write(out.join("post_knn.csv"), knn_csv)?;
            fs::write(out.join("post_grover.csv"), grover_csv)?;
            fs::write(out.join("trajectory.csv"), traj_csv)?;
            println!(
                "case {}: wrote report.json, post_knn.csv, post_grover.csv, trajectory.csv",
                output.case
            );
            Ok(())
        }
        Command::Gatecount { l, n, c } => {
            let c = c.unwrap_or_else(|| 2 * l.saturating_sub(1));
            let counts = estimate_gate_counts(l, n, c)?;
            println!("{{\"o1\":{},\"o2\":{},\"o3\":{}}}", counts.o1, counts.o2, counts.o3);
            Ok(())
        }
        Command::ExportCircuit { db, feature, stage, out } => {
            let table = load_table(&db)?;
            let query = UserQuery::parse(&feature)?;
            let layout = table.layout()?;
            let program = match stage {
                StageArg::Init => table.build_init_circuit(&query)?,
                StageArg::Knn => build_hamming_stage(&layout),
                StageArg::Grover => {
                    // one iteration marking the exact-match branch, whose
                    // similarity image is the all-ones pattern
                    let ones = BitString::from_bits(vec![true; table.feature_width()]);
                    build_grover_iteration(&layout, &[ones])?
                }
            };
            let text = program.to_text();
            fs::write(&out, text)?;
            println!("wrote {} gates to {}", program.len(), out.display());
            Ok(())
        }
    }
}
