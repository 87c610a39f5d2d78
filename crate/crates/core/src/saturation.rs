//! The given-clause loop: binary resolution + positive factoring, forward
//! subsumption, tautology deletion, resource limits, and pluggable clause
//! evaluation (priority and weight functions).
//!
//! One search is strictly single-threaded; callers may run many independent
//! searches concurrently with shared read-only watchlists and models.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::time::Instant;

use thiserror::Error;

use crate::features::{build_vector, FeatureBag, FeatureConfig};
use crate::indexing::{MatchStats, WatchlistIndex};
use crate::learner::{clause_weight, predict, Model};
use crate::logic::{Clause, ClauseId, Literal, Origin, Rule, SymbolTable, Term, Var};
use crate::proofwatch::{relevance, round3, watchlist_priority, WatchlistSet, WatchlistState};
use crate::tptp::Problem;

/// Wall-clock limit checks happen every this many given-clause selections.
const CLOCK_CHECK_INTERVAL: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub time_limit_s: u64,
    pub generated_limit: u64,
    pub forward_subsumption: bool,
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            time_limit_s: 60,
            generated_limit: 10_000,
            forward_subsumption: true,
            record_trace: false,
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("bad resource limit `{0}`, expected T<seconds>-G<count>")]
pub struct LimitParseError(pub String);

/// Parses the CLI resource limit syntax, e.g. `T60-G10000`.
pub fn parse_limit(s: &str) -> Result<(u64, u64), LimitParseError> {
    let bad = || LimitParseError(s.to_string());
    let rest = s.strip_prefix('T').ok_or_else(bad)?;
    let (secs, gen) = rest.split_once("-G").ok_or_else(bad)?;
    let t: u64 = secs.parse().map_err(|_| bad())?;
    let g: u64 = gen.parse().map_err(|_| bad())?;
    if t == 0 || g == 0 {
        return Err(bad());
    }
    Ok((t, g))
}

pub fn format_limit(time_limit_s: u64, generated_limit: u64) -> String {
    format!("T{time_limit_s}-G{generated_limit}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorityMode {
    /// Every clause in the same class; ordering falls through to weight.
    Uniform,
    /// Watchlist-matching clauses first, ordered by dynamic relevance.
    WatchlistRelevance,
}

#[derive(Clone)]
pub enum WeightMode<'a> {
    /// 2 * literal count + total symbol-tree nodes.
    SymbolCount,
    /// 1.0 / 10.0 from the learned positivity probability.
    Learned {
        model: &'a Model,
        conjecture: &'a FeatureBag,
        feature_config: FeatureConfig,
    },
}

/// Clause evaluation hooks for one search.
pub struct Guidance<'a> {
    pub priority: PriorityMode,
    pub weight: WeightMode<'a>,
    pub watchlists: Option<&'a WatchlistSet>,
    pub index: Option<&'a WatchlistIndex>,
}

impl<'a> Guidance<'a> {
    pub fn baseline() -> Guidance<'a> {
        Guidance {
            priority: PriorityMode::Uniform,
            weight: WeightMode::SymbolCount,
            watchlists: None,
            index: None,
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SetupError {
    #[error("limits must be positive")]
    NonPositiveLimit,
    #[error("watchlist-relevance priority requires loaded watchlists")]
    MissingWatchlists,
    #[error("model expects {model} completion ratios but {loaded} watchlists are loaded")]
    ModelWatchlistMismatch { model: usize, loaded: usize },
    #[error("model hash base {model} differs from configured {configured}")]
    ModelHashBaseMismatch { model: u32, configured: u32 },
    #[error("feature config expects {config} ratios but {loaded} watchlists are loaded")]
    FeatureWatchlistMismatch { config: usize, loaded: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Proof,
    Saturated,
    ResourceOut,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Proof => "proof",
            Verdict::Saturated => "saturated",
            Verdict::ResourceOut => "resource_out",
        }
    }
}

/// One trace line: the selected given clause, its post-hoc label, and the
/// proof-state vector at selection time (3-decimal precision).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub given: ClauseId,
    pub positive: bool,
    pub psv: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub processed: u64,
    pub generated: u64,
    pub discarded_by_subsumption: u64,
    pub forward_subsumption_calls: u64,
    pub watchlist: MatchStats,
    pub elapsed_ms: u64,
}

/// Proof DAG in creation order; the last clause is the empty clause. Leaves
/// are input clauses, interior nodes carry their rule and parent ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    pub clauses: Vec<Clause>,
}

impl Derivation {
    pub fn ids(&self) -> BTreeSet<ClauseId> {
        self.clauses.iter().map(|c| c.id).collect()
    }

    pub fn empty_clause(&self) -> &Clause {
        self.clauses.last().expect("derivation cannot be empty")
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub verdict: Verdict,
    pub derivation: Option<Derivation>,
    pub trace: Vec<TraceStep>,
    /// Given clauses in selection order, aligned with `trace`.
    pub given_clauses: Vec<Clause>,
    /// Global ids of the loaded watchlists, in completion-ratio order.
    pub watchlist_ids: Vec<u32>,
    pub stats: SearchStats,
}

/// Selection key: (priority class, weight, clause id), minimum first.
/// Non-negative f64s order the same as their bit patterns.
fn queue_key(priority: u32, weight: f64, id: ClauseId) -> Reverse<(u32, u64, u32)> {
    Reverse((priority, weight.max(0.0).to_bits(), id.0))
}

/// Symbol-count clause weight: literal count * 2 + all tree nodes.
pub fn symbol_count_weight(c: &Clause) -> f64 {
    (2 * c.literals().len() + c.node_count()) as f64
}

struct Search<'a> {
    table: &'a SymbolTable,
    cfg: SearchConfig,
    guidance: Guidance<'a>,
    arena: Vec<Clause>,
    queue: BinaryHeap<Reverse<(u32, u64, u32)>>,
    processed: Vec<u32>,
    wl_state: WatchlistState,
    trace: Vec<TraceStep>,
    stats: SearchStats,
    start: Instant,
}

impl<'a> Search<'a> {
    fn rounded_ratios(&self) -> Vec<f64> {
        self.wl_state
            .completion_ratios()
            .into_iter()
            .map(round3)
            .collect()
    }

    /// Watchlist matching, priority, and weight for a clause entering the
    /// unprocessed set. Matching side effects (progress updates) happen here,
    /// at generation time; relevance reads the state from before them.
    fn enqueue(&mut self, clause: Clause) {
        let hits = match self.guidance.index {
            Some(idx) => idx.match_clause(&clause, &mut self.stats.watchlist),
            None => Vec::new(),
        };
        let rel = relevance(&self.wl_state, &hits);
        self.wl_state
            .record_matches(&hits)
            .expect("index returned ids outside the loaded watchlists");
        let priority = match self.guidance.priority {
            PriorityMode::Uniform => 0,
            PriorityMode::WatchlistRelevance => watchlist_priority(rel),
        };
        let weight = match &self.guidance.weight {
            WeightMode::SymbolCount => symbol_count_weight(&clause),
            WeightMode::Learned {
                model,
                conjecture,
                feature_config,
            } => {
                let psv = self.rounded_ratios();
                let v = build_vector(&clause, self.table, conjecture, &psv, feature_config)
                    .expect("validated feature config");
                clause_weight(predict(model, &v))
            }
        };
        self.queue.push(queue_key(priority, weight, clause.id));
        self.arena.push(clause);
    }

    /// Redundancy deletion uses the strict (multiset) variant; the plain set
    /// definition would discard every factor of a processed clause.
    fn forward_subsumed(&mut self, c: &Clause) -> bool {
        if !self.cfg.forward_subsumption {
            return false;
        }
        for &p in &self.processed {
            let p = &self.arena[p as usize];
            if p.literals().len() <= c.literals().len() && p.code().is_subset(c.code()) {
                self.stats.forward_subsumption_calls += 1;
                if crate::logic::subsumes_strict(p, c) {
                    return true;
                }
            }
        }
        false
    }

    fn ancestors_of(&self, id: ClauseId) -> BTreeSet<ClauseId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(i) = stack.pop() {
            if !out.insert(i) {
                continue;
            }
            if let Origin::Derived { parents, .. } = &self.arena[i.0 as usize].origin {
                stack.extend(parents.iter().copied());
            }
        }
        out
    }

    fn finish(mut self, verdict: Verdict, empty: Option<ClauseId>) -> SearchResult {
        self.stats.elapsed_ms = self.start.elapsed().as_millis() as u64;
        let derivation = empty.map(|id| {
            let ids = self.ancestors_of(id);
            Derivation {
                clauses: ids
                    .iter()
                    .map(|i| self.arena[i.0 as usize].clone())
                    .collect(),
            }
        });
        let proof_ids = derivation.as_ref().map(Derivation::ids).unwrap_or_default();
        for step in &mut self.trace {
            step.positive = proof_ids.contains(&step.given);
        }
        let given_clauses = self
            .trace
            .iter()
            .map(|s| self.arena[s.given.0 as usize].clone())
            .collect();
        let watchlist_ids = self
            .guidance
            .watchlists
            .map(|set| set.lists.iter().map(|w| w.id).collect())
            .unwrap_or_default();
        SearchResult {
            verdict,
            derivation,
            trace: self.trace,
            given_clauses,
            watchlist_ids,
            stats: self.stats,
        }
    }
}

fn validate(cfg: &SearchConfig, guidance: &Guidance) -> Result<(), SetupError> {
    if cfg.time_limit_s == 0 || cfg.generated_limit == 0 {
        return Err(SetupError::NonPositiveLimit);
    }
    let loaded = guidance.watchlists.map_or(0, WatchlistSet::len);
    if guidance.priority == PriorityMode::WatchlistRelevance
        && (guidance.watchlists.is_none() || guidance.index.is_none())
    {
        return Err(SetupError::MissingWatchlists);
    }
    if let WeightMode::Learned {
        model,
        feature_config,
        ..
    } = &guidance.weight
    {
        if model.watchlist_count != loaded {
            return Err(SetupError::ModelWatchlistMismatch {
                model: model.watchlist_count,
                loaded,
            });
        }
        if model.hash_base != feature_config.hash_base {
            return Err(SetupError::ModelHashBaseMismatch {
                model: model.hash_base,
                configured: feature_config.hash_base,
            });
        }
        if feature_config.watchlist_count != loaded {
            return Err(SetupError::FeatureWatchlistMismatch {
                config: feature_config.watchlist_count,
                loaded,
            });
        }
    }
    Ok(())
}

/// Runs one saturation search. Deterministic for identical inputs: ties in
/// the clause ordering break by ascending clause id.
pub fn given_clause_loop(
    problem: &Problem,
    table: &SymbolTable,
    cfg: SearchConfig,
    guidance: Guidance,
) -> Result<SearchResult, SetupError> {
    validate(&cfg, &guidance)?;
    let wl_state = match guidance.watchlists {
        Some(set) => WatchlistState::for_set(set),
        None => WatchlistState::from_sizes(&[]),
    };
    let mut search = Search {
        table,
        cfg,
        guidance,
        arena: Vec::new(),
        queue: BinaryHeap::new(),
        processed: Vec::new(),
        wl_state,
        trace: Vec::new(),
        stats: SearchStats::default(),
        start: Instant::now(),
    };
    for (i, pc) in problem.clauses.iter().enumerate() {
        let clause = pc.clause.with_id(ClauseId(i as u32));
        if clause.is_empty() {
            // Degenerate input: the contradiction is already present.
            let id = clause.id;
            search.arena.push(clause);
            return Ok(search.finish(Verdict::Proof, Some(id)));
        }
        search.enqueue(clause);
    }
    let mut givens: u64 = 0;
    loop {
        if givens % CLOCK_CHECK_INTERVAL == 0
            && search.start.elapsed().as_secs() >= search.cfg.time_limit_s
        {
            return Ok(search.finish(Verdict::ResourceOut, None));
        }
        let Some(Reverse((_, _, id))) = search.queue.pop() else {
            return Ok(search.finish(Verdict::Saturated, None));
        };
        givens += 1;
        let given = search.arena[id as usize].clone();
        if search.forward_subsumed(&given) {
            search.stats.discarded_by_subsumption += 1;
            continue;
        }
        if search.cfg.record_trace {
            search.trace.push(TraceStep {
                given: given.id,
                positive: false,
                psv: search.rounded_ratios(),
            });
        }
        search.processed.push(id);
        search.stats.processed += 1;
        let inferred = infer(&given, &search.processed, &search.arena);
        for (literals, origin) in inferred {
            let new_id = ClauseId(search.arena.len() as u32);
            let clause = Clause::new(new_id, literals, origin);
            if clause.is_tautology() {
                continue;
            }
            search.stats.generated += 1;
            if clause.is_empty() {
                search.arena.push(clause);
                return Ok(search.finish(Verdict::Proof, Some(new_id)));
            }
            search.enqueue(clause);
            if search.stats.generated >= search.cfg.generated_limit {
                return Ok(search.finish(Verdict::ResourceOut, None));
            }
        }
    }
}

/// All binary resolvents of `given` with the processed set (itself included)
/// plus all positive factors of `given`. Returned as raw literal lists with
/// origins; the caller normalizes and drops tautologies.
fn infer(given: &Clause, processed: &[u32], arena: &[Clause]) -> Vec<(Vec<Literal>, Origin)> {
    let mut out = Vec::new();
    let shift = given.var_count() as u32;
    for &pid in processed {
        let partner = &arena[pid as usize];
        for (gi, gl) in given.literals().iter().enumerate() {
            for (pi, pl) in partner.literals().iter().enumerate() {
                if gl.predicate != pl.predicate || gl.positive == pl.positive {
                    continue;
                }
                let pl_shifted = shift_literal(pl, shift);
                let mut unifier = Unifier::new();
                if !unifier.unify_args(&gl.args, &pl_shifted.args) {
                    continue;
                }
                let mut literals = Vec::new();
                for (i, l) in given.literals().iter().enumerate() {
                    if i != gi {
                        literals.push(unifier.resolve_literal(l));
                    }
                }
                for (i, l) in partner.literals().iter().enumerate() {
                    if i != pi {
                        literals.push(unifier.resolve_literal(&shift_literal(l, shift)));
                    }
                }
                out.push((
                    literals,
                    Origin::Derived {
                        rule: Rule::Resolution,
                        parents: vec![given.id, partner.id],
                    },
                ));
            }
        }
    }
    // Positive factoring on the given clause.
    for (i, a) in given.literals().iter().enumerate() {
        if !a.positive {
            continue;
        }
        for b in given.literals().iter().skip(i + 1) {
            if !b.positive || a.predicate != b.predicate {
                continue;
            }
            let mut unifier = Unifier::new();
            if !unifier.unify_args(&a.args, &b.args) {
                continue;
            }
            let literals = given
                .literals()
                .iter()
                .map(|l| unifier.resolve_literal(l))
                .collect();
            out.push((
                literals,
                Origin::Derived {
                    rule: Rule::Factoring,
                    parents: vec![given.id],
                },
            ));
        }
    }
    out
}

fn shift_term(t: &Term, shift: u32) -> Term {
    match t {
        Term::Var(v) => Term::Var(Var(v.0 + shift)),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| shift_term(a, shift)).collect()),
    }
}

fn shift_literal(l: &Literal, shift: u32) -> Literal {
    Literal {
        positive: l.positive,
        predicate: l.predicate,
        args: l.args.iter().map(|t| shift_term(t, shift)).collect(),
    }
}

/// Robinson unification with occurs check over a triangular substitution.
struct Unifier {
    bindings: HashMap<Var, Term>,
}

impl Unifier {
    fn new() -> Unifier {
        Unifier {
            bindings: HashMap::new(),
        }
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                if self.occurs(*x, &b) {
                    false
                } else {
                    self.bindings.insert(*x, b);
                    true
                }
            }
            (_, Term::Var(y)) => {
                if self.occurs(*y, &a) {
                    false
                } else {
                    self.bindings.insert(*y, a);
                    true
                }
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                f == g
                    && fa.len() == ga.len()
                    && fa.iter().zip(ga.iter()).all(|(x, y)| self.unify(x, y))
            }
        }
    }

    fn unify_args(&mut self, a: &[Term], b: &[Term]) -> bool {
        a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| self.unify(x, y))
    }

    fn resolve_term(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(*v),
            Term::App(f, args) => {
                Term::App(*f, args.iter().map(|a| self.resolve_term(a)).collect())
            }
        }
    }

    fn resolve_literal(&self, l: &Literal) -> Literal {
        Literal {
            positive: l.positive,
            predicate: l.predicate,
            args: l.args.iter().map(|t| self.resolve_term(t)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Trace file format
// ---------------------------------------------------------------------------

/// Parsed trace file: the watchlist header plus one line per given clause.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub watchlist_ids: Vec<u32>,
    pub steps: Vec<TraceStep>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TraceParseError {
    #[error("missing `watchlists` header")]
    MissingHeader,
    #[error("bad trace line `{0}`")]
    BadLine(String),
    #[error("line has {got} ratios, header declares {expected}")]
    RatioCount { expected: usize, got: usize },
}

/// Renders a search's trace: `watchlists <id>...` header, then
/// `<clause id> <pos|neg> <c_0> ... <c_N>` with 3-decimal ratios.
pub fn trace_to_text(result: &SearchResult) -> String {
    let mut out = String::from("watchlists");
    for id in &result.watchlist_ids {
        out.push(' ');
        out.push_str(&id.to_string());
    }
    out.push('\n');
    for step in &result.trace {
        out.push_str(&step.given.0.to_string());
        out.push_str(if step.positive { " pos" } else { " neg" });
        for r in &step.psv {
            out.push_str(&format!(" {:.3}", r));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(TraceParseError::MissingHeader)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("watchlists") {
        return Err(TraceParseError::MissingHeader);
    }
    let watchlist_ids: Vec<u32> = parts
        .map(|p| {
            p.parse()
                .map_err(|_| TraceParseError::BadLine(header.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut steps = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || TraceParseError::BadLine(line.to_string());
        let mut parts = line.split_whitespace();
        let given: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let positive = match parts.next().ok_or_else(bad)? {
            "pos" => true,
            "neg" => false,
            _ => return Err(bad()),
        };
        let psv: Vec<f64> = parts
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        if psv.len() != watchlist_ids.len() {
            return Err(TraceParseError::RatioCount {
                expected: watchlist_ids.len(),
                got: psv.len(),
            });
        }
        steps.push(TraceStep {
            given: ClauseId(given),
            positive,
            psv,
        });
    }
    Ok(Trace {
        watchlist_ids,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Derivation checking
// ---------------------------------------------------------------------------

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("derivation is empty")]
    EmptyDerivation,
    #[error("derivation root is not the empty clause")]
    RootNotEmpty,
    #[error("clause {0} claims Input origin but matches no input clause")]
    UnknownInput(u32),
    #[error("clause {0} is not derivable from its parents by its rule")]
    BadStep(u32),
    #[error("clause {0} has watchlist origin inside a derivation")]
    WatchlistOrigin(u32),
    #[error("clause {0} references parent {1} outside the derivation")]
    MissingParent(u32, u32),
}

/// Replays a derivation bottom-up with an independent rule applier: every
/// interior clause must be among the resolvents/factors of its parents, every
/// leaf must be an input clause, and the root must be empty.
pub fn verify_derivation(derivation: &Derivation, inputs: &[Clause]) -> Result<(), CheckError> {
    if derivation.clauses.is_empty() {
        return Err(CheckError::EmptyDerivation);
    }
    if !derivation.empty_clause().is_empty() {
        return Err(CheckError::RootNotEmpty);
    }
    let by_id: HashMap<ClauseId, &Clause> = derivation.clauses.iter().map(|c| (c.id, c)).collect();
    for c in &derivation.clauses {
        match &c.origin {
            Origin::Input => {
                if !inputs.iter().any(|i| i == c) {
                    return Err(CheckError::UnknownInput(c.id.0));
                }
            }
            Origin::WatchlistLoaded => return Err(CheckError::WatchlistOrigin(c.id.0)),
            Origin::Derived { rule, parents } => {
                let resolved: Vec<&Clause> = parents
                    .iter()
                    .map(|p| {
                        by_id
                            .get(p)
                            .copied()
                            .ok_or(CheckError::MissingParent(c.id.0, p.0))
                    })
                    .collect::<Result<_, _>>()?;
                let candidates = match rule {
                    Rule::Resolution => {
                        if resolved.len() != 2 {
                            return Err(CheckError::BadStep(c.id.0));
                        }
                        checker::resolvents(resolved[0], resolved[1])
                    }
                    Rule::Factoring => {
                        if resolved.len() != 1 {
                            return Err(CheckError::BadStep(c.id.0));
                        }
                        checker::factors(resolved[0])
                    }
                };
                if !candidates.iter().any(|k| k == c) {
                    return Err(CheckError::BadStep(c.id.0));
                }
            }
        }
    }
    Ok(())
}

/// Independent rule applier used by [`verify_derivation`] and tests. Uses its
/// own eager substitution-based unification rather than the search's
/// triangular one.
pub mod checker {
    use super::*;

    fn subst_term(t: &Term, v: Var, image: &Term) -> Term {
        match t {
            Term::Var(w) if *w == v => image.clone(),
            Term::Var(w) => Term::Var(*w),
            Term::App(f, args) => {
                Term::App(*f, args.iter().map(|a| subst_term(a, v, image)).collect())
            }
        }
    }

    fn occurs_in(v: Var, t: &Term) -> bool {
        match t {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| occurs_in(v, a)),
        }
    }

    /// Eager unification: each solved equation is substituted through
    /// everything still pending.
    fn unify_eager(pairs: Vec<(Term, Term)>) -> Option<Vec<(Var, Term)>> {
        let mut eqs = pairs;
        let mut solution: Vec<(Var, Term)> = Vec::new();
        while let Some((s, t)) = eqs.pop() {
            if s == t {
                continue;
            }
            match (s, t) {
                (Term::Var(v), t) => {
                    if occurs_in(v, &t) {
                        return None;
                    }
                    for (l, r) in eqs.iter_mut() {
                        *l = subst_term(l, v, &t);
                        *r = subst_term(r, v, &t);
                    }
                    for (_, img) in solution.iter_mut() {
                        *img = subst_term(img, v, &t);
                    }
                    solution.push((v, t));
                }
                (s, Term::Var(v)) => {
                    if occurs_in(v, &s) {
                        return None;
                    }
                    for (l, r) in eqs.iter_mut() {
                        *l = subst_term(l, v, &s);
                        *r = subst_term(r, v, &s);
                    }
                    for (_, img) in solution.iter_mut() {
                        *img = subst_term(img, v, &s);
                    }
                    solution.push((v, s));
                }
                (Term::App(f, fa), Term::App(g, ga)) => {
                    if f != g || fa.len() != ga.len() {
                        return None;
                    }
                    eqs.extend(fa.iter().cloned().zip(ga.iter().cloned()));
                }
            }
        }
        Some(solution)
    }

    fn apply_solution(l: &Literal, solution: &[(Var, Term)]) -> Literal {
        let mut args: Vec<Term> = l.args.to_vec();
        for (v, img) in solution {
            for a in args.iter_mut() {
                *a = subst_term(a, *v, img);
            }
        }
        Literal::new(l.positive, l.predicate, args)
    }

    /// All binary resolvents of `a` and `b` (variables renamed apart),
    /// normalized, tautologies dropped.
    pub fn resolvents(a: &Clause, b: &Clause) -> Vec<Clause> {
        let shift = a.var_count() as u32;
        let b_lits: Vec<Literal> = b
            .literals()
            .iter()
            .map(|l| super::shift_literal(l, shift))
            .collect();
        let mut out = Vec::new();
        for (i, la) in a.literals().iter().enumerate() {
            for (j, lb) in b_lits.iter().enumerate() {
                if la.predicate != lb.predicate
                    || la.positive == lb.positive
                    || la.args.len() != lb.args.len()
                {
                    continue;
                }
                let pairs: Vec<(Term, Term)> = la
                    .args
                    .iter()
                    .cloned()
                    .zip(lb.args.iter().cloned())
                    .collect();
                let Some(solution) = unify_eager(pairs) else {
                    continue;
                };
                let mut literals = Vec::new();
                for (k, l) in a.literals().iter().enumerate() {
                    if k != i {
                        literals.push(apply_solution(l, &solution));
                    }
                }
                for (k, l) in b_lits.iter().enumerate() {
                    if k != j {
                        literals.push(apply_solution(l, &solution));
                    }
                }
                let c = Clause::new(ClauseId(0), literals, Origin::Input);
                if !c.is_tautology() {
                    out.push(c);
                }
            }
        }
        out
    }

    /// All positive factors of `c`, normalized, tautologies dropped.
    pub fn factors(c: &Clause) -> Vec<Clause> {
        let mut out = Vec::new();
        for (i, a) in c.literals().iter().enumerate() {
            if !a.positive {
                continue;
            }
            for b in c.literals().iter().skip(i + 1) {
                if !b.positive || a.predicate != b.predicate || a.args.len() != b.args.len() {
                    continue;
                }
                let pairs: Vec<(Term, Term)> = a
                    .args
                    .iter()
                    .cloned()
                    .zip(b.args.iter().cloned())
                    .collect();
                let Some(solution) = unify_eager(pairs) else {
                    continue;
                };
                let literals = c
                    .literals()
                    .iter()
                    .map(|l| apply_solution(l, &solution))
                    .collect();
                let f = Clause::new(ClauseId(0), literals, Origin::Input);
                if !f.is_tautology() {
                    out.push(f);
                }
            }
        }
        out
    }
}
