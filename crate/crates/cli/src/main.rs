use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use hintgrind_cli::corpus::{self, Flavor, GenOptions};
use hintgrind_cli::experiment::{cmd_loop, LoopConfig, LoopMethod};
use hintgrind_cli::ops::{
    self, cmd_bench_index, cmd_export_train, cmd_train, PsvMode, SelectionMethod,
};
use hintgrind_cli::session::{Mode, ProveConfig};
use hintgrind_core::indexing::IndexMode;
use hintgrind_core::learner::{model_stats, TrainParams};
use hintgrind_core::saturation::parse_limit;

const SEED_ENV: &str = "HINTGRIND_SEED";

#[derive(Parser)]
#[command(name = "hintgrind", version, about = "Saturation prover workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Resource limit, e.g. T60-G10000.
    #[arg(long, default_value = "T60-G10000")]
    limit: String,
    /// RNG seed; falls back to $HINTGRIND_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Watchlist index backend.
    #[arg(long, default_value = "multi", value_parser = parse_index_mode)]
    index: IndexMode,
}

fn parse_index_mode(s: &str) -> Result<IndexMode, String> {
    match s {
        "single" => Ok(IndexMode::Single),
        "multi" => Ok(IndexMode::Multi),
        other => Err(format!("unknown index mode `{other}`")),
    }
}

fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

#[derive(Subcommand)]
enum Command {
    /// Run one search; exit 0 = proof, 1 = saturated, 2 = resource out.
    Prove {
        problem: PathBuf,
        #[arg(long, default_value = "baseline")]
        mode: Mode,
        #[arg(long)]
        watchlists: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write traces/given/proofs/results under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip forward subsumption of selected clauses.
        #[arg(long)]
        no_forward_subsumption: bool,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Compare single-index and multi-indices watchlist matching.
    BenchIndex {
        #[arg(long)]
        problems: PathBuf,
        #[arg(long)]
        watchlists: PathBuf,
        /// Generated-clause budget per run.
        #[arg(long, default_value_t = 1000)]
        generated: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a recorded run into sparse training examples.
    ExportTrain {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        given: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1 << 15)]
        hash_base: u32,
        /// Project the proof-state vector onto a selection file.
        #[arg(long)]
        selection: Option<PathBuf>,
        /// Drop the proof-state vector block entirely.
        #[arg(long)]
        drop_psv: bool,
    },
    /// Train a gradient-boosted model from sparse example files.
    Train {
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
        #[arg(long, default_value_t = 0.3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1.0)]
        min_child_weight: f64,
        #[arg(long, default_value_t = 1.0)]
        subsample: f64,
        #[arg(long, default_value_t = 1 << 15)]
        hash_base: u32,
        #[arg(long, default_value_t = 0)]
        watchlist_count: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Select a watchlist subset from recorded traces.
    Select {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        watchlists: PathBuf,
        #[arg(long)]
        method: SelectionMethod,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Only use traces of problems marked solved in this results.jsonl.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the looping prove/learn experiment over a corpus.
    Loop {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated: enigma, enigmawatch-mean, enigmawatch-var, ...
        #[arg(long, value_delimiter = ',', default_value = "enigma,enigmawatch-mean")]
        methods: Vec<LoopMethod>,
        #[arg(long, default_value_t = 1)]
        loops: usize,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Watchlists kept by each selection method.
        #[arg(short, default_value_t = 512)]
        k: usize,
        #[arg(long, default_value_t = 1 << 15)]
        hash_base: u32,
        #[arg(long, default_value_t = 9)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Generate a seeded synthetic corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "standard")]
        flavor: Flavor,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 12)]
        families: usize,
        #[arg(long, default_value_t = 20)]
        family_size: usize,
        #[arg(long, default_value_t = 30)]
        pairs: usize,
        /// Problem count for the bench flavor.
        #[arg(long, default_value_t = 200)]
        bench_problems: usize,
        /// Watchlist clause count for the bench flavor.
        #[arg(long, default_value_t = 5600)]
        bench_watchlist_clauses: usize,
    },
}

fn run() -> Result<i32> {
    let cli = Cli::try_parse().map_err(CliError::Clap)?;
    match cli.command {
        Command::Prove {
            problem,
            mode,
            watchlists,
            model,
            out,
            no_forward_subsumption,
            common,
        } => {
            let limit = parse_limit(&common.limit).map_err(|e| anyhow!("{e}"))?;
            let cfg = ProveConfig {
                mode,
                limit,
                watchlists,
                model,
                index_mode: common.index,
                record_trace: true,
                forward_subsumption: !no_forward_subsumption,
                seed: resolve_seed(common.seed),
            };
            let (_, record, code) = ops::cmd_prove(&problem, &cfg, out.as_deref())?;
            println!(
                "{} {} processed={} generated={} in {}ms",
                record.problem, record.verdict, record.processed, record.generated, record.elapsed_ms
            );
            Ok(code)
        }
        Command::BenchIndex {
            problems,
            watchlists,
            generated,
            out,
        } => {
            let outcome = cmd_bench_index(&problems, &watchlists, generated, Some(&out))?;
            println!(
                "{} problems; aggregate subsumption-call reduction {:.1}x (single {} vs multi {})",
                outcome.rows.len(),
                outcome.aggregate_reduction(),
                outcome.total_single_calls,
                outcome.total_multi_calls
            );
            Ok(0)
        }
        Command::ExportTrain {
            trace,
            given,
            problem,
            out,
            hash_base,
            selection,
            drop_psv,
        } => {
            let psv_mode = if drop_psv {
                PsvMode::None
            } else if let Some(path) = selection {
                let ids = ops::read_selection(&path)?
                    .into_iter()
                    .map(|(id, _)| id)
                    .collect();
                PsvMode::Select(ids)
            } else {
                PsvMode::Full
            };
            let n = cmd_export_train(&trace, &given, &problem, hash_base, &psv_mode, &out)?;
            println!("wrote {n} examples to {}", out.display());
            Ok(0)
        }
        Command::Train {
            data,
            out,
            depth,
            rounds,
            learning_rate,
            min_child_weight,
            subsample,
            hash_base,
            watchlist_count,
            seed,
        } => {
            let params = TrainParams {
                max_depth: depth,
                rounds,
                learning_rate,
                min_child_weight,
                subsample,
                seed: resolve_seed(seed),
            };
            let (model, summary) = cmd_train(&data, &params, hash_base, watchlist_count, &out)?;
            let stats = model_stats(&model);
            println!(
                "trained {} trees on {} examples ({} positive): pos acc {:.2}%, neg acc {:.2}%, {} features ({} clause / {} conjecture / {} watchlist)",
                model.trees.len(),
                summary.examples,
                summary.positives,
                100.0 * summary.report.positive_accuracy,
                100.0 * summary.report.negative_accuracy,
                summary.report.features_used,
                stats.clause_features,
                stats.conjecture_features,
                stats.watchlist_features,
            );
            Ok(0)
        }
        Command::Select {
            traces,
            watchlists,
            method,
            k,
            out,
            results,
            seed,
        } => {
            let filter: Option<std::collections::BTreeMap<String, bool>> = match results {
                Some(path) => Some(
                    hintgrind_cli::report::read_jsonl(&path)?
                        .into_iter()
                        .map(|r| (r.problem.clone(), r.solved()))
                        .collect(),
                ),
                None => None,
            };
            let picked = ops::cmd_select(
                &traces,
                &watchlists,
                method,
                k,
                resolve_seed(seed),
                filter.as_ref(),
                &out,
            )?;
            println!("selected {} watchlists into {}", picked.len(), out.display());
            Ok(0)
        }
        Command::Loop {
            corpus,
            methods,
            loops,
            jobs,
            k,
            hash_base,
            depth,
            rounds,
            common,
        } => {
            let mut cfg = LoopConfig::new(corpus, methods);
            cfg.loops = loops;
            cfg.limit = parse_limit(&common.limit).map_err(|e| anyhow!("{e}"))?;
            if jobs > 0 {
                cfg.jobs = jobs;
            }
            cfg.seed = resolve_seed(common.seed);
            cfg.selection_k = k;
            cfg.hash_base = hash_base;
            cfg.train_depth = depth;
            cfg.train_rounds = rounds;
            cfg.index_mode = common.index;
            let outcome = cmd_loop(&cfg)?;
            for report in &outcome.reports {
                for (method, solved) in &report.solved {
                    println!("loop {} {}: {}", report.loop_index, method, solved.len());
                }
                println!("loop {} union: {}", report.loop_index, report.union().len());
            }
            println!("report: {}", outcome.runs.join("report.csv").display());
            Ok(0)
        }
        Command::GenCorpus {
            out,
            flavor,
            seed,
            families,
            family_size,
            pairs,
            bench_problems,
            bench_watchlist_clauses,
        } => {
            let opts = GenOptions {
                seed: resolve_seed(seed),
                flavor,
                plain_families: families,
                family_size,
                variant_pairs: pairs,
                bench_problems,
                bench_watchlist_clauses,
            };
            let summary = corpus::generate(&out, &opts)?;
            println!(
                "generated {} problems under {}{}",
                summary.problems,
                summary.root.display(),
                if summary.watchlist_clauses > 0 {
                    format!(" (+{} watchlist clauses)", summary.watchlist_clauses)
                } else {
                    String::new()
                }
            );
            Ok(0)
        }
    }
}

#[derive(Debug)]
enum CliError {
    Clap(clap::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            // Exit codes 0..2 carry verdicts; everything else is an error.
            if let Some(CliError::Clap(e)) = err.downcast_ref::<CliError>() {
                let _ = e.print();
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(3)
        }
    }
}
