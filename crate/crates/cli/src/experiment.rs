//! The looping prove/learn experiment.
//!
//! Loop 0: baseline prove-all, watchlist construction from the proofs found,
//! a watchlist pass with every proof loaded, then the mean proof-state matrix
//! and the four watchlist selections. Each later loop trains one model per
//! method on all prior traces and proves the whole corpus with it. Every
//! stage writes a completion marker, so an interrupted run resumes where it
//! stopped and reproduces the same report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use hintgrind_core::indexing::IndexMode;
use hintgrind_core::learner::{model_stats, TrainParams};
use hintgrind_core::logic::Clause;
use hintgrind_core::saturation::parse_trace;
use hintgrind_core::tptp::{parse_problem, serialize_clause, Role, Signature};

use crate::ops::{
    self, cmd_train, export_examples, list_problems, PsvMode, SelectionMethod,
};
use crate::report::{
    loop_report_csv, read_jsonl, verdict_matrix_csv, verify_union_accounting, write_jsonl,
    LoopReport, RunRecord,
};
use crate::session::{self, Mode, ProveConfig};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LoopMethod {
    Enigma,
    Enigmawatch(SelectionMethod),
}

impl LoopMethod {
    pub fn name(&self) -> String {
        match self {
            LoopMethod::Enigma => "enigma".to_string(),
            LoopMethod::Enigmawatch(sel) => format!("enigmawatch-{}", sel.as_str()),
        }
    }
}

impl std::str::FromStr for LoopMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "enigma" {
            return Ok(LoopMethod::Enigma);
        }
        if let Some(sel) = s.strip_prefix("enigmawatch-") {
            return Ok(LoopMethod::Enigmawatch(sel.parse()?));
        }
        Err(format!(
            "unknown loop method `{s}` (expected enigma or enigmawatch-<mean|var|corr|rand>)"
        ))
    }
}

#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub corpus: PathBuf,
    pub methods: Vec<LoopMethod>,
    pub loops: usize,
    pub limit: (u64, u64),
    pub jobs: usize,
    pub seed: u64,
    pub selection_k: usize,
    pub hash_base: u32,
    pub train_depth: usize,
    pub train_rounds: usize,
    pub index_mode: IndexMode,
}

impl LoopConfig {
    pub fn new(corpus: PathBuf, methods: Vec<LoopMethod>) -> LoopConfig {
        LoopConfig {
            corpus,
            methods,
            loops: 1,
            limit: (30, 2000),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            selection_k: 512,
            hash_base: 1 << 15,
            train_depth: TrainParams::default().max_depth,
            train_rounds: TrainParams::default().rounds,
            index_mode: IndexMode::Multi,
        }
    }

    pub fn problems_dir(&self) -> PathBuf {
        self.corpus.join("problems")
    }

    pub fn watchlists_dir(&self) -> PathBuf {
        self.corpus.join("watchlists")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.corpus.join("runs")
    }

    pub fn loop_dir(&self, idx: usize) -> PathBuf {
        self.runs_dir().join(format!("loop{idx}"))
    }

    fn train_params(&self) -> TrainParams {
        TrainParams {
            max_depth: self.train_depth,
            rounds: self.train_rounds,
            seed: self.seed,
            ..TrainParams::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoopOutcome {
    pub reports: Vec<LoopReport>,
    pub runs: PathBuf,
}

fn marker(dir: &Path, stage: &str) -> PathBuf {
    dir.join(format!("{stage}.done"))
}

fn stage_done(dir: &Path, stage: &str) -> bool {
    marker(dir, stage).exists()
}

fn finish_stage(dir: &Path, stage: &str) -> Result<()> {
    fs::write(marker(dir, stage), "done\n")?;
    Ok(())
}

/// Runs every problem under one configuration, writing traces/given/proofs
/// plus a sorted results.jsonl.
fn prove_all(
    problems: &[PathBuf],
    template: &ProveConfig,
    out: &Path,
    jobs: usize,
) -> Result<Vec<RunRecord>> {
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        problems
            .par_iter()
            .map(|path| -> Result<RunRecord> {
                let outcome = session::run_prove(path, template)
                    .with_context(|| format!("proving {}", path.display()))?;
                session::write_artifacts(out, &outcome)?;
                Ok(RunRecord::new(
                    &outcome.problem_name,
                    template.mode.as_str(),
                    &outcome.result,
                    template.limit,
                    template.seed,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by(|a, b| a.problem.cmp(&b.problem));
    write_jsonl(&out.join("results.jsonl"), &records)?;
    Ok(records)
}

pub fn stage_baseline(cfg: &LoopConfig) -> Result<()> {
    let dir = cfg.loop_dir(0);
    fs::create_dir_all(&dir)?;
    if stage_done(&dir, "baseline") {
        return Ok(());
    }
    let problems = list_problems(&cfg.problems_dir())?;
    let mut template = ProveConfig::new(Mode::Baseline, cfg.limit);
    template.seed = cfg.seed;
    template.index_mode = cfg.index_mode;
    prove_all(&problems, &template, &dir.join("baseline"), cfg.jobs)?;
    finish_stage(&dir, "baseline")
}

/// Turns every baseline proof into a watchlist file: the proof's clause set
/// minus the empty clause, stored as `<id>_<problem>.w` in solved-name order.
pub fn stage_watchlists(cfg: &LoopConfig) -> Result<()> {
    let dir = cfg.loop_dir(0);
    if stage_done(&dir, "watchlists") {
        return Ok(());
    }
    let records = read_jsonl(&dir.join("baseline/results.jsonl"))?;
    let solved: Vec<&RunRecord> = records.iter().filter(|r| r.solved()).collect();
    if solved.is_empty() {
        bail!("baseline solved nothing; cannot build watchlists");
    }
    let wdir = cfg.watchlists_dir();
    fs::create_dir_all(&wdir)?;
    for (i, record) in solved.iter().enumerate() {
        let proof_path = dir
            .join("baseline/proofs")
            .join(format!("{}.p", record.problem));
        let mut sig = Signature::new();
        let proof = parse_problem(&fs::read(&proof_path)?, &record.problem, &mut sig)
            .with_context(|| format!("parsing proof {}", proof_path.display()))?;
        let mut clauses: Vec<Clause> = Vec::new();
        for pc in proof.clauses {
            if !pc.clause.is_empty() && !clauses.contains(&pc.clause) {
                clauses.push(pc.clause);
            }
        }
        let mut text = String::new();
        for (j, c) in clauses.iter().enumerate() {
            text.push_str(&serialize_clause(
                c,
                &format!("w{j}"),
                Role::Axiom,
                &sig.symbols,
            ));
            text.push('\n');
        }
        fs::write(
            wdir.join(format!("{i:04}_{}.w", record.problem)),
            text,
        )?;
    }
    finish_stage(&dir, "watchlists")
}

/// The data-construction pass: every problem, watchlist guidance, all proofs
/// loaded.
pub fn stage_fullpass(cfg: &LoopConfig) -> Result<()> {
    let dir = cfg.loop_dir(0);
    if stage_done(&dir, "fullpass") {
        return Ok(());
    }
    let problems = list_problems(&cfg.problems_dir())?;
    let mut template = ProveConfig::new(Mode::Proofwatch, cfg.limit);
    template.seed = cfg.seed;
    template.index_mode = cfg.index_mode;
    template.watchlists = Some(cfg.watchlists_dir());
    prove_all(&problems, &template, &dir.join("fullpass"), cfg.jobs)?;
    finish_stage(&dir, "fullpass")
}

/// Mean matrix over the solved full-pass traces, then all four selections;
/// requested enigmawatch methods get a materialized watchlist directory.
pub fn stage_selection(cfg: &LoopConfig) -> Result<()> {
    let dir = cfg.loop_dir(0);
    if stage_done(&dir, "selection") {
        return Ok(());
    }
    let records = read_jsonl(&dir.join("fullpass/results.jsonl"))?;
    let solved: BTreeMap<String, bool> =
        records.iter().map(|r| (r.problem.clone(), r.solved())).collect();
    if !solved.values().any(|&s| s) {
        bail!("watchlist pass solved nothing; cannot build the mean matrix");
    }
    let k = cfg.selection_k.min(ops::watchlist_sources(&cfg.watchlists_dir())?.len());
    for method in [
        SelectionMethod::Mean,
        SelectionMethod::Var,
        SelectionMethod::Corr,
        SelectionMethod::Rand,
    ] {
        let out = dir.join(format!("selection_{}.txt", method.as_str()));
        let picked = ops::cmd_select(
            &dir.join("fullpass/traces"),
            &cfg.watchlists_dir(),
            method,
            k,
            cfg.seed,
            Some(&solved),
            &out,
        )?;
        if cfg
            .methods
            .iter()
            .any(|m| matches!(m, LoopMethod::Enigmawatch(s) if *s == method))
        {
            let mdir = dir.join(format!("watchlists_enigmawatch-{}", method.as_str()));
            fs::create_dir_all(&mdir)?;
            for (pos, (gid, source)) in picked.iter().enumerate() {
                let src = cfg.watchlists_dir().join(format!("{gid:04}_{source}.w"));
                let dst = mdir.join(format!("{pos:04}_{source}.w"));
                fs::copy(&src, &dst)
                    .with_context(|| format!("materializing {}", src.display()))?;
            }
        }
    }
    finish_stage(&dir, "selection")
}

/// Run directories whose solved traces feed a method's model at `loop_idx`,
/// with the proof-state-vector handling for each.
fn training_sources(cfg: &LoopConfig, loop_idx: usize, method: LoopMethod) -> Result<Vec<(PathBuf, PsvMode)>> {
    let mut out = Vec::new();
    match method {
        LoopMethod::Enigma => {
            out.push((cfg.loop_dir(0).join("baseline"), PsvMode::None));
            out.push((cfg.loop_dir(0).join("fullpass"), PsvMode::None));
            for t in 1..loop_idx {
                for m in &cfg.methods {
                    out.push((cfg.loop_dir(t).join(m.name()), PsvMode::None));
                }
            }
        }
        LoopMethod::Enigmawatch(sel) => {
            let selection = ops::read_selection(
                &cfg.loop_dir(0)
                    .join(format!("selection_{}.txt", sel.as_str())),
            )?;
            let ids: Vec<u32> = selection.iter().map(|(id, _)| *id).collect();
            // Baseline rows enter with an empty watchlist block. Sparse
            // vectors read that as all-zero ratios, which is what an
            // unmatched run actually looks like at prove time.
            out.push((cfg.loop_dir(0).join("baseline"), PsvMode::None));
            out.push((cfg.loop_dir(0).join("fullpass"), PsvMode::Select(ids)));
            // Later enigmawatch runs already record exactly the selected
            // columns (renumbered 0..k-1 by the materialized directory).
            for t in 1..loop_idx {
                out.push((cfg.loop_dir(t).join(method.name()), PsvMode::Full));
            }
        }
    }
    Ok(out)
}

pub fn stage_train(cfg: &LoopConfig, loop_idx: usize, method: LoopMethod) -> Result<()> {
    let dir = cfg.loop_dir(loop_idx);
    fs::create_dir_all(&dir)?;
    let stage = format!("train_{}", method.name());
    if stage_done(&dir, &stage) {
        return Ok(());
    }
    let data_path = dir.join(format!("train_{}.examples", method.name()));
    let mut lines_out: Vec<String> = Vec::new();
    for (run_dir, psv_mode) in training_sources(cfg, loop_idx, method)? {
        let results = run_dir.join("results.jsonl");
        if !results.exists() {
            continue;
        }
        for record in read_jsonl(&results)? {
            if !record.solved() {
                continue;
            }
            let trace_text =
                fs::read_to_string(run_dir.join("traces").join(format!("{}.trace", record.problem)))?;
            let trace = parse_trace(&trace_text).map_err(|e| anyhow!("{e}"))?;
            let given = fs::read(run_dir.join("given").join(format!("{}.p", record.problem)))?;
            let problem = fs::read(cfg.problems_dir().join(format!("{}.p", record.problem)))?;
            lines_out.extend(export_examples(
                &trace,
                &given,
                &problem,
                cfg.hash_base,
                &psv_mode,
            )?);
        }
    }
    if lines_out.is_empty() {
        bail!("no training data for {} at loop {loop_idx}", method.name());
    }
    fs::write(&data_path, lines_out.join("\n") + "\n")?;
    let watchlist_count = match method {
        LoopMethod::Enigma => 0,
        LoopMethod::Enigmawatch(_) => cfg
            .selection_k
            .min(ops::watchlist_sources(&cfg.watchlists_dir())?.len()),
    };
    let model_path = dir.join("models").join(format!("{}.gbt", method.name()));
    let (model, summary) = cmd_train(
        &[data_path],
        &cfg.train_params(),
        cfg.hash_base,
        watchlist_count,
        &model_path,
    )?;
    let stats = model_stats(&model);
    fs::write(
        dir.join(format!("train_{}.report.json", method.name())),
        serde_json::json!({
            "examples": summary.examples,
            "positives": summary.positives,
            "positive_accuracy": summary.report.positive_accuracy,
            "negative_accuracy": summary.report.negative_accuracy,
            "features_used": summary.report.features_used,
            "clause_features": stats.clause_features,
            "conjecture_features": stats.conjecture_features,
            "watchlist_features": stats.watchlist_features,
        })
        .to_string()
            + "\n",
    )?;
    finish_stage(&dir, &stage)
}

pub fn stage_prove(cfg: &LoopConfig, loop_idx: usize, method: LoopMethod) -> Result<()> {
    let dir = cfg.loop_dir(loop_idx);
    let stage = format!("prove_{}", method.name());
    if stage_done(&dir, &stage) {
        return Ok(());
    }
    let problems = list_problems(&cfg.problems_dir())?;
    let model = dir.join("models").join(format!("{}.gbt", method.name()));
    let mut template = match method {
        LoopMethod::Enigma => ProveConfig::new(Mode::Enigma, cfg.limit),
        LoopMethod::Enigmawatch(_) => {
            let mut t = ProveConfig::new(Mode::Enigmawatch, cfg.limit);
            t.watchlists = Some(
                cfg.loop_dir(0)
                    .join(format!("watchlists_{}", method.name())),
            );
            t
        }
    };
    template.model = Some(model);
    template.seed = cfg.seed;
    template.index_mode = cfg.index_mode;
    prove_all(&problems, &template, &dir.join(method.name()), cfg.jobs)?;
    finish_stage(&dir, &stage)
}

fn solved_set(records: &[RunRecord]) -> BTreeSet<String> {
    records
        .iter()
        .filter(|r| r.solved())
        .map(|r| r.problem.clone())
        .collect()
}

/// Reads every stage's results back into per-loop reports. A pure function of
/// the runs directory, so resumed and fresh runs produce identical reports.
pub fn build_reports(cfg: &LoopConfig) -> Result<Vec<LoopReport>> {
    let mut reports = Vec::new();
    let mut solved0 = BTreeMap::new();
    solved0.insert(
        "baseline".to_string(),
        solved_set(&read_jsonl(&cfg.loop_dir(0).join("baseline/results.jsonl"))?),
    );
    solved0.insert(
        "proofwatch".to_string(),
        solved_set(&read_jsonl(&cfg.loop_dir(0).join("fullpass/results.jsonl"))?),
    );
    reports.push(LoopReport {
        loop_index: 0,
        solved: solved0,
    });
    for t in 1..=cfg.loops {
        let mut solved = BTreeMap::new();
        for method in &cfg.methods {
            let records = read_jsonl(&cfg.loop_dir(t).join(method.name()).join("results.jsonl"))?;
            solved.insert(method.name(), solved_set(&records));
        }
        reports.push(LoopReport {
            loop_index: t,
            solved,
        });
    }
    for r in &reports {
        if !verify_union_accounting(r) {
            bail!("union accounting failed for loop {}", r.loop_index);
        }
    }
    Ok(reports)
}

fn write_report_files(cfg: &LoopConfig, reports: &[LoopReport]) -> Result<()> {
    fs::write(cfg.runs_dir().join("report.csv"), loop_report_csv(reports))?;
    // Verdict matrix across every (loop, method) column.
    let problems: Vec<String> = list_problems(&cfg.problems_dir())?
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().to_string())
        .collect();
    let mut columns = Vec::new();
    let mut push_column = |label: String, records: Vec<RunRecord>| {
        let map: BTreeMap<String, String> = records
            .into_iter()
            .map(|r| (r.problem, r.verdict))
            .collect();
        columns.push((label, map));
    };
    push_column(
        "loop0:baseline".to_string(),
        read_jsonl(&cfg.loop_dir(0).join("baseline/results.jsonl"))?,
    );
    push_column(
        "loop0:proofwatch".to_string(),
        read_jsonl(&cfg.loop_dir(0).join("fullpass/results.jsonl"))?,
    );
    for t in 1..=cfg.loops {
        for method in &cfg.methods {
            push_column(
                format!("loop{t}:{}", method.name()),
                read_jsonl(&cfg.loop_dir(t).join(method.name()).join("results.jsonl"))?,
            );
        }
    }
    fs::write(
        cfg.runs_dir().join("matrix.csv"),
        verdict_matrix_csv(&problems, &columns),
    )?;
    Ok(())
}

/// Runs the whole experiment (resuming past completed stages) and writes
/// `runs/report.csv` and `runs/matrix.csv`.
pub fn cmd_loop(cfg: &LoopConfig) -> Result<LoopOutcome> {
    if cfg.methods.is_empty() && cfg.loops > 0 {
        bail!("no methods requested");
    }
    stage_baseline(cfg)?;
    stage_watchlists(cfg)?;
    stage_fullpass(cfg)?;
    stage_selection(cfg)?;
    for t in 1..=cfg.loops {
        for method in &cfg.methods {
            stage_train(cfg, t, *method)?;
            stage_prove(cfg, t, *method)?;
        }
    }
    let reports = build_reports(cfg)?;
    write_report_files(cfg, &reports)?;
    Ok(LoopOutcome {
        reports,
        runs: cfg.runs_dir(),
    })
}
