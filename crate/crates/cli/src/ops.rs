//! Command implementations shared by the binary and the loop driver.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use hintgrind_core::features::{
    build_vector, conjecture_bag, format_example, parse_example, FeatureConfig, SparseVector,
};
use hintgrind_core::indexing::IndexMode;
use hintgrind_core::learner::{train, Model, TrainParams, TrainReport};
use hintgrind_core::saturation::{parse_trace, trace_to_text, Trace, Verdict};
use hintgrind_core::selection::{
    build_mean_matrix, select_corr, select_mean, select_rand, select_var, MeanMatrix,
};
use hintgrind_core::tptp::{parse_problem, Signature};

use crate::report::RunRecord;
use crate::session::{self, Mode, ProveConfig, ProveOutcome};

/// Runs one prove command, writes artifacts when `out` is given, and returns
/// the record plus the process exit code (0 proof, 1 saturated, 2 resource
/// out).
pub fn cmd_prove(
    problem: &Path,
    cfg: &ProveConfig,
    out: Option<&Path>,
) -> Result<(ProveOutcome, RunRecord, i32)> {
    let outcome = session::run_prove(problem, cfg)?;
    let record = RunRecord::new(
        &outcome.problem_name,
        cfg.mode.as_str(),
        &outcome.result,
        cfg.limit,
        cfg.seed,
    );
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        session::write_artifacts(out, &outcome)?;
        append_jsonl(&out.join("results.jsonl"), &record)?;
    }
    let code = match outcome.result.verdict {
        Verdict::Proof => 0,
        Verdict::Saturated => 1,
        Verdict::ResourceOut => 2,
    };
    Ok((outcome, record, code))
}

fn append_jsonl(path: &Path, record: &RunRecord) -> Result<()> {
    use std::io::Write;
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

/// Sorted `.p` files under a directory.
pub fn list_problems(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "p") {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("no .p files under {}", dir.display());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub problem: String,
    pub single_ms: u64,
    pub multi_ms: u64,
    pub single_calls: u64,
    pub multi_calls: u64,
}

impl BenchRow {
    pub fn reduction(&self) -> f64 {
        self.single_calls as f64 / self.multi_calls.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub total_single_calls: u64,
    pub total_multi_calls: u64,
}

impl BenchOutcome {
    /// Aggregate subsumption-call reduction: total single calls over total
    /// multi calls.
    pub fn aggregate_reduction(&self) -> f64 {
        self.total_single_calls as f64 / self.total_multi_calls.max(1) as f64
    }
}

/// Runs every problem twice (single-index, then multi-indices) under the same
/// generated-clause limit, asserts the traces are identical, and reports
/// runtimes and subsumption-call counts.
pub fn cmd_bench_index(
    problems_dir: &Path,
    watchlists_dir: &Path,
    generated_limit: u64,
    out: Option<&Path>,
) -> Result<BenchOutcome> {
    let problems = list_problems(problems_dir)?;
    let mut rows = Vec::new();
    for path in &problems {
        let run = |mode: IndexMode| -> Result<ProveOutcome> {
            let cfg = ProveConfig {
                mode: Mode::Proofwatch,
                limit: (3600, generated_limit),
                watchlists: Some(watchlists_dir.to_path_buf()),
                model: None,
                index_mode: mode,
                record_trace: true,
                forward_subsumption: true,
                seed: 0,
            };
            session::run_prove(path, &cfg)
        };
        let single = run(IndexMode::Single)?;
        let multi = run(IndexMode::Multi)?;
        if trace_to_text(&single.result) != trace_to_text(&multi.result) {
            bail!(
                "index backends diverged on {}: traces differ",
                single.problem_name
            );
        }
        let s = single.result.stats;
        let m = multi.result.stats;
        if m.watchlist.subsumption_calls > s.watchlist.subsumption_calls {
            bail!(
                "multi-index made more subsumption calls than single on {}",
                single.problem_name
            );
        }
        if m.watchlist.subsumption_hits != s.watchlist.subsumption_hits {
            bail!("match sets diverged on {}", single.problem_name);
        }
        rows.push(BenchRow {
            problem: single.problem_name.clone(),
            single_ms: s.elapsed_ms,
            multi_ms: m.elapsed_ms,
            single_calls: s.watchlist.subsumption_calls,
            multi_calls: m.watchlist.subsumption_calls,
        });
    }
    let outcome = BenchOutcome {
        total_single_calls: rows.iter().map(|r| r.single_calls).sum(),
        total_multi_calls: rows.iter().map(|r| r.multi_calls).sum(),
        rows,
    };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("bench.csv"), bench_csv(&outcome))?;
    }
    Ok(outcome)
}

/// Per-problem rows plus avg/best/worst summary lines for runtime speedup and
/// subsumption-call reduction.
pub fn bench_csv(outcome: &BenchOutcome) -> String {
    let mut out =
        String::from("problem,single_ms,multi_ms,speedup,single_calls,multi_calls,reduction\n");
    for r in &outcome.rows {
        let speedup = r.single_ms as f64 / r.multi_ms.max(1) as f64;
        out.push_str(&format!(
            "{},{},{},{:.2},{},{},{:.2}\n",
            r.problem,
            r.single_ms,
            r.multi_ms,
            speedup,
            r.single_calls,
            r.multi_calls,
            r.reduction()
        ));
    }
    let n = outcome.rows.len().max(1) as f64;
    let avg_single_ms = outcome.rows.iter().map(|r| r.single_ms).sum::<u64>() as f64 / n;
    let avg_multi_ms = outcome.rows.iter().map(|r| r.multi_ms).sum::<u64>() as f64 / n;
    let speedups: Vec<f64> = outcome
        .rows
        .iter()
        .map(|r| r.single_ms as f64 / r.multi_ms.max(1) as f64)
        .collect();
    let reductions: Vec<f64> = outcome.rows.iter().map(BenchRow::reduction).collect();
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    out.push_str(&format!(
        "avg,{:.1},{:.1},{:.2},{},{},{:.2}\n",
        avg_single_ms,
        avg_multi_ms,
        avg_single_ms / avg_multi_ms.max(1e-9),
        outcome.total_single_calls / outcome.rows.len().max(1) as u64,
        outcome.total_multi_calls / outcome.rows.len().max(1) as u64,
        outcome.aggregate_reduction()
    ));
    out.push_str(&format!(
        "best,,,{:.2},,,{:.2}\n",
        fold(&speedups, f64::max, f64::MIN),
        fold(&reductions, f64::max, f64::MIN)
    ));
    out.push_str(&format!(
        "worst,,,{:.2},,,{:.2}\n",
        fold(&speedups, f64::min, f64::MAX),
        fold(&reductions, f64::min, f64::MAX)
    ));
    out
}

/// How the proof-state vector enters exported training examples.
#[derive(Clone, Debug, Default)]
pub enum PsvMode {
    /// Copy every ratio from the trace.
    #[default]
    Full,
    /// Drop the watchlist block entirely.
    None,
    /// Project onto the listed global watchlist ids, in order.
    Select(Vec<u32>),
}

/// Converts one recorded run (trace + given clauses + problem) into sparse
/// training example lines.
pub fn export_examples(
    trace: &Trace,
    given_file: &[u8],
    problem_file: &[u8],
    hash_base: u32,
    psv_mode: &PsvMode,
) -> Result<Vec<String>> {
    let mut sig = Signature::new();
    let problem = parse_problem(problem_file, "problem", &mut sig)?;
    let given = parse_problem(given_file, "given", &mut sig)?;
    if given.clauses.len() != trace.steps.len() {
        bail!(
            "given file has {} clauses but trace has {} steps",
            given.clauses.len(),
            trace.steps.len()
        );
    }
    let conjecture = conjecture_bag(
        &problem
            .negated_conjectures()
            .map(|pc| &pc.clause)
            .collect::<Vec<_>>(),
        &sig.symbols,
    );
    let columns: Vec<usize> = match psv_mode {
        PsvMode::Full => (0..trace.watchlist_ids.len()).collect(),
        PsvMode::None => Vec::new(),
        PsvMode::Select(ids) => ids
            .iter()
            .map(|id| {
                trace
                    .watchlist_ids
                    .iter()
                    .position(|x| x == id)
                    .ok_or_else(|| anyhow!("watchlist {id} missing from trace header"))
            })
            .collect::<Result<_>>()?,
    };
    let cfg = FeatureConfig::new(hash_base, columns.len()).map_err(|e| anyhow!("{e}"))?;
    let mut lines = Vec::with_capacity(trace.steps.len());
    for (step, pc) in trace.steps.iter().zip(given.clauses.iter()) {
        if pc.name != format!("c{}", step.given.0) {
            bail!(
                "given clause `{}` does not line up with trace step c{}",
                pc.name,
                step.given.0
            );
        }
        let psv: Vec<f64> = columns.iter().map(|&j| step.psv[j]).collect();
        let v = build_vector(&pc.clause, &sig.symbols, &conjecture, &psv, &cfg)
            .map_err(|e| anyhow!("{e}"))?;
        lines.push(format_example(step.positive, &v));
    }
    Ok(lines)
}

pub fn cmd_export_train(
    trace_path: &Path,
    given_path: &Path,
    problem_path: &Path,
    hash_base: u32,
    psv_mode: &PsvMode,
    out: &Path,
) -> Result<usize> {
    let trace = parse_trace(&fs::read_to_string(trace_path)?).map_err(|e| anyhow!("{e}"))?;
    let lines = export_examples(
        &trace,
        &fs::read(given_path)?,
        &fs::read(problem_path)?,
        hash_base,
        psv_mode,
    )?;
    fs::write(out, lines.join("\n") + "\n")?;
    Ok(lines.len())
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub examples: usize,
    pub positives: usize,
    pub report: TrainReport,
}

/// Reads sparse example files, trains, and writes the model.
pub fn cmd_train(
    data: &[PathBuf],
    params: &TrainParams,
    hash_base: u32,
    watchlist_count: usize,
    out: &Path,
) -> Result<(Model, TrainSummary)> {
    let cfg = FeatureConfig::new(hash_base, watchlist_count).map_err(|e| anyhow!("{e}"))?;
    let mut examples: Vec<(SparseVector, bool)> = Vec::new();
    for path in data {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (label, v) = parse_example(line, cfg.dim())
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            examples.push((v, label));
        }
    }
    let (model, report) =
        train(&examples, params, &cfg).map_err(|e| anyhow!("training failed: {e}"))?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, model.save())?;
    let positives = examples.iter().filter(|(_, y)| *y).count();
    Ok((
        model,
        TrainSummary {
            examples: examples.len(),
            positives,
            report,
        },
    ))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SelectionMethod {
    Mean,
    Var,
    Corr,
    Rand,
}

impl SelectionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionMethod::Mean => "mean",
            SelectionMethod::Var => "var",
            SelectionMethod::Corr => "corr",
            SelectionMethod::Rand => "rand",
        }
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(SelectionMethod::Mean),
            "var" => Ok(SelectionMethod::Var),
            "corr" => Ok(SelectionMethod::Corr),
            "rand" => Ok(SelectionMethod::Rand),
            other => Err(format!("unknown selection method `{other}`")),
        }
    }
}

/// Sorted `.trace` files under a directory, parsed.
pub fn load_traces(dir: &Path) -> Result<Vec<(String, Trace)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "trace") {
            files.push(path);
        }
    }
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let trace = parse_trace(&fs::read_to_string(&path)?)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        out.push((name, trace));
    }
    Ok(out)
}

pub fn run_selection(
    matrix: &MeanMatrix,
    method: SelectionMethod,
    k: usize,
    seed: u64,
) -> Result<Vec<u32>> {
    let picked = match method {
        SelectionMethod::Mean => select_mean(matrix, k),
        SelectionMethod::Var => select_var(matrix, k),
        SelectionMethod::Corr => select_corr(matrix, k),
        SelectionMethod::Rand => select_rand(matrix, k, seed),
    };
    picked.map_err(|e| anyhow!("{e}"))
}

/// Builds the mean matrix from traces (optionally restricted to solved
/// problems), runs a selection method, and writes `selection.txt` lines of
/// `<id> <source>`.
pub fn cmd_select(
    traces_dir: &Path,
    watchlists_dir: &Path,
    method: SelectionMethod,
    k: usize,
    seed: u64,
    solved_filter: Option<&BTreeMap<String, bool>>,
    out: &Path,
) -> Result<Vec<(u32, String)>> {
    let mut traces = load_traces(traces_dir)?;
    if let Some(filter) = solved_filter {
        traces.retain(|(name, _)| filter.get(name).copied().unwrap_or(false));
    }
    let (matrix, skipped) = build_mean_matrix(&traces).map_err(|e| anyhow!("{e}"))?;
    for name in &skipped {
        eprintln!("warning: trace {name} has no given clauses, skipped");
    }
    let ids = run_selection(&matrix, method, k, seed)?;
    let sources = watchlist_sources(watchlists_dir)?;
    let mut picked = Vec::with_capacity(ids.len());
    let mut text = String::new();
    for id in ids {
        let source = sources
            .get(&id)
            .ok_or_else(|| anyhow!("selection references unknown watchlist {id}"))?;
        text.push_str(&format!("{id} {source}\n"));
        picked.push((id, source.clone()));
    }
    fs::write(out, text)?;
    Ok(picked)
}

/// Maps global watchlist ids to their source names from a watchlist dir.
pub fn watchlist_sources(dir: &Path) -> Result<BTreeMap<u32, String>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_none_or(|e| e != "w") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if let Some((id, source)) = stem.split_once('_') {
            if let Ok(id) = id.parse::<u32>() {
                out.insert(id, source.to_string());
            }
        }
    }
    Ok(out)
}

pub fn read_selection(path: &Path) -> Result<Vec<(u32, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (id, source) = line
            .split_once(' ')
            .ok_or_else(|| anyhow!("bad selection line `{line}`"))?;
        out.push((id.parse()?, source.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hintgrind_core::logic::ClauseId;
    use hintgrind_core::saturation::TraceStep;

    #[test]
    fn export_projects_and_drops_psv() {
        let trace = Trace {
            watchlist_ids: vec![3, 7, 9],
            steps: vec![TraceStep {
                given: ClauseId(0),
                positive: true,
                psv: vec![0.25, 0.5, 0.75],
            }],
        };
        let given = b"cnf(c0, axiom, (p(a))).";
        let problem = b"cnf(a, axiom, (p(a))). cnf(g, negated_conjecture, (~p(X))).";
        let full = export_examples(&trace, given, problem, 256, &PsvMode::Full).unwrap();
        assert!(full[0].contains("512:0.25"));
        assert!(full[0].contains("514:0.75"));
        let none = export_examples(&trace, given, problem, 256, &PsvMode::None).unwrap();
        assert!(!none[0].contains("512:"));
        let sel =
            export_examples(&trace, given, problem, 256, &PsvMode::Select(vec![9, 3])).unwrap();
        assert!(sel[0].contains("512:0.75"));
        assert!(sel[0].contains("513:0.25"));
        let err = export_examples(&trace, given, problem, 256, &PsvMode::Select(vec![4]));
        assert!(err.is_err());
    }

    #[test]
    fn export_rejects_misaligned_given_file() {
        let trace = Trace {
            watchlist_ids: vec![],
            steps: vec![TraceStep {
                given: ClauseId(5),
                positive: false,
                psv: vec![],
            }],
        };
        let given = b"cnf(c0, axiom, (p(a))).";
        let problem = b"cnf(a, axiom, (p(a))).";
        let err = export_examples(&trace, given, problem, 256, &PsvMode::Full).unwrap_err();
        assert!(err.to_string().contains("line up"), "{err}");
    }

    #[test]
    fn bench_csv_has_summary_rows() {
        let outcome = BenchOutcome {
            rows: vec![
                BenchRow {
                    problem: "a".into(),
                    single_ms: 10,
                    multi_ms: 5,
                    single_calls: 100,
                    multi_calls: 10,
                },
                BenchRow {
                    problem: "b".into(),
                    single_ms: 20,
                    multi_ms: 10,
                    single_calls: 300,
                    multi_calls: 100,
                },
            ],
            total_single_calls: 400,
            total_multi_calls: 110,
        };
        let csv = bench_csv(&outcome);
        assert!(csv.starts_with("problem,"));
        assert!(csv.contains("\navg,"));
        assert!(csv.contains("\nbest,"));
        assert!(csv.contains("\nworst,"));
        assert!((outcome.aggregate_reduction() - 400.0 / 110.0).abs() < 1e-12);
    }
}
