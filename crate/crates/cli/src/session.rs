//! One prove run: load problem, watchlists, and model; build the guidance;
//! run the search; verify any proof; write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use hintgrind_core::features::{conjecture_bag, FeatureBag, FeatureConfig};
use hintgrind_core::indexing::{IndexMode, PruneLayout};
use hintgrind_core::learner::Model;
use hintgrind_core::logic::{Clause, ClauseId, Origin};
use hintgrind_core::proofwatch::{Watchlist, WatchlistSet};
use hintgrind_core::saturation::{
    given_clause_loop, trace_to_text, verify_derivation, Guidance, PriorityMode, SearchConfig,
    SearchResult, Verdict, WeightMode,
};
use hintgrind_core::tptp::{parse_problem, serialize_clause, Problem, Role, Signature};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Baseline,
    Proofwatch,
    Enigma,
    Enigmawatch,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Proofwatch => "proofwatch",
            Mode::Enigma => "enigma",
            Mode::Enigmawatch => "enigmawatch",
        }
    }

    pub fn needs_watchlists(&self) -> bool {
        matches!(self, Mode::Proofwatch | Mode::Enigmawatch)
    }

    pub fn needs_model(&self) -> bool {
        matches!(self, Mode::Enigma | Mode::Enigmawatch)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "proofwatch" => Ok(Mode::Proofwatch),
            "enigma" => Ok(Mode::Enigma),
            "enigmawatch" => Ok(Mode::Enigmawatch),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProveConfig {
    pub mode: Mode,
    pub limit: (u64, u64),
    pub watchlists: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub index_mode: IndexMode,
    pub record_trace: bool,
    pub forward_subsumption: bool,
    pub seed: u64,
}

impl ProveConfig {
    pub fn new(mode: Mode, limit: (u64, u64)) -> ProveConfig {
        ProveConfig {
            mode,
            limit,
            watchlists: None,
            model: None,
            index_mode: IndexMode::Multi,
            record_trace: true,
            forward_subsumption: true,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct ProveOutcome {
    pub problem_name: String,
    pub result: SearchResult,
    pub signature: Signature,
    /// Input clauses renumbered the way the search sees them.
    pub inputs: Vec<Clause>,
}

/// Loads `<id>_<source>.w` files in id order from a watchlist directory.
pub fn load_watchlist_set(dir: &Path, sig: &mut Signature) -> Result<WatchlistSet> {
    let mut files: Vec<(u32, String, PathBuf)> = Vec::new();
    for entry in
        fs::read_dir(dir).with_context(|| format!("reading watchlist dir {}", dir.display()))?
    {
        let path = entry?.path();
        if path.extension().is_none_or(|e| e != "w") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| anyhow!("bad watchlist file name {}", path.display()))?;
        let (id, source) = stem
            .split_once('_')
            .ok_or_else(|| anyhow!("watchlist file `{stem}.w` is not <id>_<source>.w"))?;
        let id: u32 = id
            .parse()
            .map_err(|_| anyhow!("watchlist file `{stem}.w` has a non-numeric id"))?;
        files.push((id, source.to_string(), path));
    }
    files.sort();
    let mut lists = Vec::new();
    for (id, source, path) in files {
        if lists.iter().any(|w: &Watchlist| w.id == id) {
            bail!("duplicate watchlist id {id} in {}", dir.display());
        }
        let bytes = fs::read(&path)?;
        let parsed = parse_problem(&bytes, &source, sig)
            .with_context(|| format!("parsing watchlist {}", path.display()))?;
        let clauses: Vec<Clause> = parsed
            .clauses
            .into_iter()
            .enumerate()
            .map(|(i, pc)| {
                pc.clause
                    .with_id(ClauseId(i as u32))
                    .with_origin(Origin::WatchlistLoaded)
            })
            .collect();
        lists.push(Watchlist {
            id,
            source,
            clauses,
        });
    }
    Ok(WatchlistSet::new(lists))
}

/// Runs one search. Every proof is replayed through the independent
/// derivation checker before it is reported.
pub fn run_prove(problem_path: &Path, cfg: &ProveConfig) -> Result<ProveOutcome> {
    let name = problem_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("bad problem path {}", problem_path.display()))?
        .to_string();
    let bytes =
        fs::read(problem_path).with_context(|| format!("reading {}", problem_path.display()))?;
    let mut sig = Signature::new();
    let problem = parse_problem(&bytes, &name, &mut sig)
        .with_context(|| format!("parsing {}", problem_path.display()))?;
    run_prove_parsed(&problem, sig, cfg)
}

/// Like [`run_prove`] but for an already-parsed problem (the harness parses
/// once and fans out).
pub fn run_prove_parsed(
    problem: &Problem,
    mut sig: Signature,
    cfg: &ProveConfig,
) -> Result<ProveOutcome> {
    let watchlists = if cfg.mode.needs_watchlists() {
        let dir = cfg
            .watchlists
            .as_ref()
            .ok_or_else(|| anyhow!("mode {} requires --watchlists", cfg.mode.as_str()))?;
        Some(load_watchlist_set(dir, &mut sig)?)
    } else {
        None
    };
    let model = if cfg.mode.needs_model() {
        let path = cfg
            .model
            .as_ref()
            .ok_or_else(|| anyhow!("mode {} requires --model", cfg.mode.as_str()))?;
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Some(Model::load(&text).map_err(|e| anyhow!("loading {}: {e}", path.display()))?)
    } else {
        None
    };
    let layout = PruneLayout::from_signature(&sig);
    let index = watchlists
        .as_ref()
        .map(|set| set.build_index(cfg.index_mode, layout));
    let conjecture: FeatureBag = conjecture_bag(
        &problem
            .negated_conjectures()
            .map(|pc| &pc.clause)
            .collect::<Vec<_>>(),
        &sig.symbols,
    );
    let feature_config = match &model {
        Some(m) => Some(
            FeatureConfig::new(m.hash_base, watchlists.as_ref().map_or(0, WatchlistSet::len))
                .map_err(|e| anyhow!("{e}"))?,
        ),
        None => None,
    };
    let priority = match cfg.mode {
        Mode::Baseline | Mode::Enigma => PriorityMode::Uniform,
        Mode::Proofwatch | Mode::Enigmawatch => PriorityMode::WatchlistRelevance,
    };
    let weight = match &model {
        Some(m) => WeightMode::Learned {
            model: m,
            conjecture: &conjecture,
            feature_config: feature_config.expect("set alongside model"),
        },
        None => WeightMode::SymbolCount,
    };
    let guidance = Guidance {
        priority,
        weight,
        watchlists: watchlists.as_ref(),
        index: index.as_ref(),
    };
    let search_config = SearchConfig {
        time_limit_s: cfg.limit.0,
        generated_limit: cfg.limit.1,
        forward_subsumption: cfg.forward_subsumption,
        record_trace: cfg.record_trace,
    };
    let result = given_clause_loop(problem, &sig.symbols, search_config, guidance)
        .map_err(|e| anyhow!("configuration: {e}"))?;
    let inputs: Vec<Clause> = problem
        .clauses
        .iter()
        .enumerate()
        .map(|(i, pc)| pc.clause.with_id(ClauseId(i as u32)))
        .collect();
    if let Some(derivation) = &result.derivation {
        verify_derivation(derivation, &inputs)
            .map_err(|e| anyhow!("proof failed independent replay: {e}"))?;
    }
    Ok(ProveOutcome {
        problem_name: problem.name.clone(),
        result,
        signature: sig,
        inputs,
    })
}

/// Serializes the given clauses of a trace, aligned line-for-line with the
/// trace file; clause names are `c<id>`.
pub fn given_clauses_text(outcome: &ProveOutcome) -> String {
    let mut out = String::new();
    for c in &outcome.result.given_clauses {
        out.push_str(&serialize_clause(
            c,
            &format!("c{}", c.id.0),
            Role::Axiom,
            &outcome.signature.symbols,
        ));
        out.push('\n');
    }
    out
}

/// Serializes a proof: provenance comments plus the derivation clauses.
pub fn proof_text(outcome: &ProveOutcome) -> Option<String> {
    let derivation = outcome.result.derivation.as_ref()?;
    let mut out = format!("% proof of {}\n", outcome.problem_name);
    for c in &derivation.clauses {
        match &c.origin {
            Origin::Input => out.push_str(&format!("% c{} input\n", c.id.0)),
            Origin::WatchlistLoaded => out.push_str(&format!("% c{} watchlist\n", c.id.0)),
            Origin::Derived { rule, parents } => {
                let parents: Vec<String> =
                    parents.iter().map(|p| format!("c{}", p.0)).collect();
                out.push_str(&format!(
                    "% c{} {:?}({})\n",
                    c.id.0,
                    rule,
                    parents.join(", ")
                ));
            }
        }
        out.push_str(&serialize_clause(
            c,
            &format!("c{}", c.id.0),
            Role::Axiom,
            &outcome.signature.symbols,
        ));
        out.push('\n');
    }
    Some(out)
}

/// Writes per-run artifacts under `out`: `traces/<name>.trace`,
/// `given/<name>.p`, and `proofs/<name>.p` for solved problems.
pub fn write_artifacts(out: &Path, outcome: &ProveOutcome) -> Result<()> {
    let traces = out.join("traces");
    let given = out.join("given");
    fs::create_dir_all(&traces)?;
    fs::create_dir_all(&given)?;
    fs::write(
        traces.join(format!("{}.trace", outcome.problem_name)),
        trace_to_text(&outcome.result),
    )?;
    fs::write(
        given.join(format!("{}.p", outcome.problem_name)),
        given_clauses_text(outcome),
    )?;
    if outcome.result.verdict == Verdict::Proof {
        let proofs = out.join("proofs");
        fs::create_dir_all(&proofs)?;
        fs::write(
            proofs.join(format!("{}.p", outcome.problem_name)),
            proof_text(outcome).expect("proof verdict implies derivation"),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_problem(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(format!("{name}.p"));
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn baseline_prove_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_problem(
            dir.path(),
            "toy",
            "cnf(a, axiom, (p(c))). cnf(g, negated_conjecture, (~p(X))).",
        );
        let cfg = ProveConfig::new(Mode::Baseline, (10, 1000));
        let outcome = run_prove(&p, &cfg).unwrap();
        assert_eq!(outcome.result.verdict, Verdict::Proof);
        write_artifacts(dir.path(), &outcome).unwrap();
        assert!(dir.path().join("traces/toy.trace").exists());
        assert!(dir.path().join("given/toy.p").exists());
        assert!(dir.path().join("proofs/toy.p").exists());
    }

    #[test]
    fn watchlist_round_trip_through_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let wdir = dir.path().join("watchlists");
        fs::create_dir_all(&wdir).unwrap();
        fs::write(
            wdir.join("0000_src_a.w"),
            "cnf(w0, axiom, (p(c))).\ncnf(w1, axiom, (q(X))).\n",
        )
        .unwrap();
        fs::write(wdir.join("0001_src_b.w"), "cnf(w0, axiom, (~r(d))).\n").unwrap();
        let mut sig = Signature::new();
        let set = load_watchlist_set(&wdir, &mut sig).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.lists[0].id, 0);
        assert_eq!(set.lists[0].source, "src_a");
        assert_eq!(set.lists[0].len(), 2);
        assert_eq!(set.lists[1].source, "src_b");
        assert!(set.lists[1].clauses[0]
            .origin
            .eq(&Origin::WatchlistLoaded));
    }

    #[test]
    fn proofwatch_mode_requires_watchlists() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_problem(dir.path(), "toy", "cnf(a, axiom, (p(c))).");
        let cfg = ProveConfig::new(Mode::Proofwatch, (10, 1000));
        let err = run_prove(&p, &cfg).unwrap_err();
        assert!(err.to_string().contains("--watchlists"), "{err}");
    }

    #[test]
    fn enigmawatch_mode_without_model_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_problem(dir.path(), "toy", "cnf(a, axiom, (p(c))).");
        let wdir = dir.path().join("watchlists");
        fs::create_dir_all(&wdir).unwrap();
        fs::write(wdir.join("0000_x.w"), "cnf(w0, axiom, (p(c))).\n").unwrap();
        let mut cfg = ProveConfig::new(Mode::Enigmawatch, (10, 1000));
        cfg.watchlists = Some(wdir);
        let err = run_prove(&p, &cfg).unwrap_err();
        assert!(err.to_string().contains("--model"), "{err}");
    }

    #[test]
    fn proofwatch_with_own_proof_watchlist_replays() {
        let dir = tempfile::tempdir().unwrap();
        let text = "cnf(a, axiom, (r0(c))).
cnf(s0, axiom, (~r0(X) | r1(f(X)))).
cnf(s1, axiom, (~r1(X) | r2(f(X)))).
cnf(noise, axiom, (z(d))).
cnf(zz, axiom, (~z(X) | z(g(X)))).
cnf(g, negated_conjecture, (~r2(Y))).";
        let p = write_problem(dir.path(), "chain", text);
        let base = run_prove(&p, &ProveConfig::new(Mode::Baseline, (10, 2000))).unwrap();
        assert_eq!(base.result.verdict, Verdict::Proof);
        // Own-proof watchlist.
        let wdir = dir.path().join("watchlists");
        fs::create_dir_all(&wdir).unwrap();
        let mut wl = String::new();
        for c in &base.result.derivation.as_ref().unwrap().clauses {
            if !c.is_empty() {
                wl.push_str(&serialize_clause(
                    c,
                    &format!("c{}", c.id.0),
                    Role::Axiom,
                    &base.signature.symbols,
                ));
                wl.push('\n');
            }
        }
        fs::write(wdir.join("0000_chain.w"), wl).unwrap();
        let mut cfg = ProveConfig::new(Mode::Proofwatch, (10, 2000));
        cfg.watchlists = Some(wdir);
        let guided = run_prove(&p, &cfg).unwrap();
        assert_eq!(guided.result.verdict, Verdict::Proof);
        assert!(guided.result.stats.processed <= base.result.stats.processed);
    }
}
