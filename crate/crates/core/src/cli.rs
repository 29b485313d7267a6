//! Command-line interface: a thin dispatcher over the library with
//! stable, scriptable I/O.
//!
//! Exit codes: 0 on success, 1 on validation errors (one
//! machine-parsable `ERROR <code>: <message>` line on stderr), 2 on
//! I/O failures. Structured reports are JSON, sweep tables are CSV,
//! tensors use the binary format; no environment variable affects
//! results.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{estimate_lemma2_lhs, ml_union_bound, psi_diagnostics};
use crate::divergence::{geometric_tilt, threshold_stat};
use crate::error::{Error, Result};
use crate::estimators::{ml_exact, ml_heuristic};
use crate::harness::{emit_csv, run_sweep, ExperimentConfig};
use crate::model::{check_assumptions, ModelSpec, MvsbmParams};
use crate::sampler::{
    read_tensor, sample_labeling, sample_tensor, write_edge_list, write_tensor, SeedSpec,
};

#[derive(Parser)]
#[command(name = "mvsbm", version, about = "Multi-view stochastic block model toolkit")]
struct Cli {
    /// Master seed for seeded subcommands (overrides a sweep config's
    /// master_seed when given).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the sweep (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Suppress progress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Heuristic,
}

#[derive(Subcommand)]
enum Command {
    /// Divergence, threshold statistic, and assumption report for a model.
    Divergence {
        #[arg(long)]
        model: PathBuf,
        /// Output path for the JSON report (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a ground-truth labeling and adjacency tensor.
    Generate {
        #[arg(long)]
        model: PathBuf,
        /// Trial index within the master seed's stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Output path for the binary tensor.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON dump of the sampled ground-truth labeling.
        #[arg(long)]
        truth_out: Option<PathBuf>,
        /// Optional textual edge list ("view i j" per set bit).
        #[arg(long)]
        edges_out: Option<PathBuf>,
    },
    /// Recover communities from a tensor file.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Restarts for the heuristic method.
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Union bound and per-distance error terms for a model.
    Bound {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of the change-of-measure inequality.
    PsiCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trials: u64,
        /// Externally supplied expected misclassification count.
        #[arg(long)]
        expected_mis: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a threshold sweep from a JSON config, emitting CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (falls back to the config's output_path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let status = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return status;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("ERROR {}: {}", err.code(), err);
            err.exit_status()
        }
    }
}

fn load_params(path: &Path) -> Result<MvsbmParams> {
    ModelSpec::from_json(&fs::read_to_string(path)?)?.to_params()
}

fn num_or_inf(value: f64) -> Value {
    if value.is_finite() {
        json!(value)
    } else if value.is_nan() {
        json!("nan")
    } else if value > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = format!("{:#}\n", value);
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Divergence { model, out } => {
            let params = load_params(&model)?;
            let report = threshold_stat(&params)?;
            let assumptions = check_assumptions(&params);
            let value = json!({
                "version": 1,
                "renyi_half": num_or_inf(report.renyi_half),
                "threshold_stat": num_or_inf(report.threshold_stat),
                "rho": num_or_inf(assumptions.rho),
                "p_bar": assumptions.p_bar,
                "separation": assumptions.separation,
                "ratio_eq51": report.ratio_eq51,
            });
            emit_json(out.as_deref(), &value)
        }
        Command::Generate { model, trial, out, truth_out, edges_out } => {
            let params = load_params(&model)?;
            let master_seed = cli.seed.unwrap_or(0);
            let seed = SeedSpec::new(master_seed, trial);
            let truth = sample_labeling(params.n(), seed)?;
            let tensor = sample_tensor(&params, &truth, seed)?;
            write_tensor(&tensor, seed, &out)?;
            if let Some(path) = truth_out {
                let value = json!({ "version": 1, "signs": truth.signs() });
                emit_json(Some(&path), &value)?;
            }
            if let Some(path) = edges_out {
                let file = fs::File::create(path)?;
                write_edge_list(&tensor, std::io::BufWriter::new(file))?;
            }
            if !cli.quiet {
                eprintln!(
                    "generated n = {}, D = {} tensor (seed {master_seed}, trial {trial})",
                    params.n(),
                    params.num_views(),
                );
            }
            Ok(())
        }
        Command::Estimate { model, tensor, method, restarts, out } => {
            let params = load_params(&model)?;
            let (tensor, _) = read_tensor(&tensor)?;
            let start = Instant::now();
            let (result, method_name) = match method {
                MethodArg::Exact => (ml_exact(&params, &tensor)?, "exact"),
                MethodArg::Heuristic => {
                    (ml_heuristic(&params, &tensor, restarts)?, "heuristic")
                }
            };
            let wall_time = start.elapsed().as_secs_f64();
            let value = json!({
                "version": 1,
                "method": method_name,
                "labeling": result.labeling.signs(),
                "score": result.score,
                "tie": result.tie,
                "candidates_scanned": result.num_candidates_scanned,
                "wall_time_s": wall_time,
            });
            emit_json(out.as_deref(), &value)
        }
        Command::Bound { model, out } => {
            let params = load_params(&model)?;
            let report = ml_union_bound(&params)?;
            let per_k: Vec<Value> = report
                .per_k_terms
                .iter()
                .map(|t| {
                    json!({
                        "k": t.k,
                        "count_log": t.count_log,
                        "exponent": num_or_inf(t.exponent),
                        "term": t.term,
                    })
                })
                .collect();
            let value = json!({
                "version": 1,
                "n": report.n,
                "renyi_half": num_or_inf(report.renyi_half),
                "epsilon_margin": num_or_inf(report.epsilon_margin),
                "union_bound": report.union_bound,
                "per_k": per_k,
            });
            emit_json(out.as_deref(), &value)
        }
        Command::PsiCheck { model, trials, expected_mis, out } => {
            let params = load_params(&model)?;
            let tilt = geometric_tilt(params.within(), params.across())?;
            let diag = psi_diagnostics(&params, &tilt, expected_mis)?;
            let lhs = estimate_lemma2_lhs(
                &params,
                &tilt,
                diag.f_n,
                trials,
                SeedSpec::new(cli.seed.unwrap_or(0), 0),
            )?;
            let rhs = diag.f_n.exp() * expected_mis / params.n() as f64 + 0.5;
            let value = json!({
                "version": 1,
                "trials": trials,
                "expected_mis": expected_mis,
                "f_n": diag.f_n,
                "lemma2_lhs": lhs,
                "lemma2_rhs": rhs,
                "holds": lhs <= rhs,
                "e_psi_r_lower": diag.e_psi_r_lower,
                "e_psi_r_upper": diag.e_psi_r_upper,
                "var_upper": num_or_inf(diag.var_upper),
                "necessary_rhs": num_or_inf(diag.necessary_rhs),
            });
            emit_json(out.as_deref(), &value)
        }
        Command::Sweep { config, out } => {
            let config_text = fs::read_to_string(&config)?;
            let mut experiment = ExperimentConfig::from_json(&config_text)?;
            if let Some(seed) = cli.seed {
                experiment.master_seed = seed;
            }
            let out_path = out
                .or_else(|| experiment.output_path.as_ref().map(PathBuf::from))
                .ok_or_else(|| {
                    Error::BadConfig("no output path: pass --out or set output_path".into())
                })?;
            if !cli.quiet {
                eprintln!(
                    "sweep: {} points x {} trials ({:?})",
                    experiment.points.len(),
                    experiment.trials_per_point,
                    experiment.method
                );
            }
            let result = if cli.threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cli.threads)
                    .build()
                    .map_err(|e| Error::BadConfig(e.to_string()))?
                    .install(|| run_sweep(&experiment))?
            } else {
                run_sweep(&experiment)?
            };
            emit_csv(&result, &out_path)?;
            Ok(())
        }
    }
}
