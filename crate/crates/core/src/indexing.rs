//! Watchlist storage answering "which stored clauses does C subsume".
//!
//! Two interchangeable backends: a single flat index, and multi-indices with
//! one bucket per clause code. Both gate expensive subsumption calls with a
//! cheap symbol-occurrence vector; the multi backend additionally visits only
//! buckets whose code is a superset of the query's code. The two backends
//! return identical match sets; the multi one never makes more full
//! subsumption calls.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::logic::{subsumes, Clause, ClauseCode, Sym, Term};
use crate::tptp::Signature;

/// Own-bucket slots per symbol class; everything beyond shares the overflow
/// slot, so pruning gets deliberately coarser on large signatures.
pub const PRUNE_BUCKETS_PER_CLASS: usize = 16;

/// Threshold above which code-superset lookup switches from a linear scan of
/// bucket keys to an inverted signed-predicate map.
pub const INVERTED_LOOKUP_THRESHOLD: usize = 1024;

/// Bucket assignment for [`PruneVec`], fixed when the signature is loaded.
/// Symbols unseen at load time map to the per-class overflow bucket.
#[derive(Clone, Debug)]
pub struct PruneLayout {
    pred_slot: HashMap<Sym, u16>,
    func_slot: HashMap<Sym, u16>,
    pred_buckets: u16,
    func_buckets: u16,
}

impl PruneLayout {
    pub fn from_signature(sig: &Signature) -> PruneLayout {
        let assign = |syms: Vec<Sym>| {
            let mut slot = HashMap::new();
            for (i, s) in syms.iter().take(PRUNE_BUCKETS_PER_CLASS).enumerate() {
                slot.insert(*s, i as u16);
            }
            let buckets = slot.len() as u16 + 1; // + overflow
            (slot, buckets)
        };
        let (pred_slot, pred_buckets) = assign(sig.predicate_symbols());
        let (func_slot, func_buckets) = assign(sig.function_symbols());
        PruneLayout {
            pred_slot,
            func_slot,
            pred_buckets,
            func_buckets,
        }
    }

    pub fn dim(&self) -> usize {
        2 * (self.pred_buckets as usize + self.func_buckets as usize) + 2
    }

    fn pred_bucket(&self, s: Sym, positive: bool) -> usize {
        let slot = *self.pred_slot.get(&s).unwrap_or(&(self.pred_buckets - 1)) as usize;
        if positive {
            slot
        } else {
            self.pred_buckets as usize + slot
        }
    }

    fn func_bucket(&self, s: Sym, positive: bool) -> usize {
        let base = 2 * self.pred_buckets as usize;
        let slot = *self.func_slot.get(&s).unwrap_or(&(self.func_buckets - 1)) as usize;
        if positive {
            base + slot
        } else {
            base + self.func_buckets as usize + slot
        }
    }
}

/// Per-bucket symbol occurrence counts plus literal and symbol totals.
/// Substitution can only add symbols, so `C ⊑ D` implies every bucket touched
/// by `C` is also touched by `D`; that presence test is the gate. The literal
/// and symbol totals are not part of the gate: with clauses as literal sets,
/// several literals of `C` may collapse onto one literal of `D`, so neither
/// total is monotone under subsumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruneVec {
    counts: Box<[u16]>,
    pub literals: u32,
    pub symbols: u32,
}

impl PruneVec {
    pub fn of_clause(c: &Clause, layout: &PruneLayout) -> PruneVec {
        let mut counts = vec![0u16; layout.dim() - 2];
        let mut symbols = 0u32;
        fn walk(
            t: &Term,
            positive: bool,
            layout: &PruneLayout,
            counts: &mut [u16],
            symbols: &mut u32,
        ) {
            if let Term::App(f, args) = t {
                let b = layout.func_bucket(*f, positive);
                counts[b] = counts[b].saturating_add(1);
                *symbols += 1;
                for a in args.iter() {
                    walk(a, positive, layout, counts, symbols);
                }
            }
        }
        for lit in c.literals() {
            let b = layout.pred_bucket(lit.predicate, lit.positive);
            counts[b] = counts[b].saturating_add(1);
            symbols += 1;
            for a in lit.args.iter() {
                walk(a, lit.positive, layout, &mut counts, &mut symbols);
            }
        }
        PruneVec {
            counts: counts.into_boxed_slice(),
            literals: c.literals().len() as u32,
            symbols,
        }
    }

    /// True when a clause with vector `self` could subsume one with vector
    /// `stored`.
    pub fn gate(&self, stored: &PruneVec) -> bool {
        self.counts
            .iter()
            .zip(stored.counts.iter())
            .all(|(&q, &s)| q == 0 || s > 0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IndexMode {
    Single,
    Multi,
}

#[derive(Clone, Debug)]
struct Entry {
    watchlist: u32,
    clause: u32,
    prune: PruneVec,
    body: Clause,
}

/// Counters for one query session; merged by the caller across sessions.
#[derive(Clone, Copy, Default, Debug, PartialEq, Eq)]
pub struct MatchStats {
    /// Full subsumption calls attempted.
    pub subsumption_calls: u64,
    /// Full subsumption calls that succeeded.
    pub subsumption_hits: u64,
    /// Candidates rejected by the prune-vector gate.
    pub gate_rejections: u64,
    /// Buckets visited (1 per query in single mode).
    pub buckets_visited: u64,
}

impl MatchStats {
    pub fn merge(&mut self, other: &MatchStats) {
        self.subsumption_calls += other.subsumption_calls;
        self.subsumption_hits += other.subsumption_hits;
        self.gate_rejections += other.gate_rejections;
        self.buckets_visited += other.buckets_visited;
    }
}

/// Storage-side statistics, available after insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StorageStats {
    pub stored: usize,
    pub buckets: usize,
    pub max_bucket: usize,
    pub single_clause_buckets: usize,
}

pub struct WatchlistIndex {
    mode: IndexMode,
    layout: PruneLayout,
    flat: Vec<Entry>,
    coded: BTreeMap<ClauseCode, Vec<Entry>>,
    seen: HashSet<(u32, u32)>,
    inverted: Option<Inverted>,
    frozen: bool,
}

struct Inverted {
    keys: Vec<ClauseCode>,
    by_signed_pred: HashMap<i32, Vec<u32>>,
}

impl WatchlistIndex {
    pub fn new(mode: IndexMode, layout: PruneLayout) -> WatchlistIndex {
        WatchlistIndex {
            mode,
            layout,
            flat: Vec::new(),
            coded: BTreeMap::new(),
            seen: HashSet::new(),
            inverted: None,
            frozen: false,
        }
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    /// Stores `d` under `(watchlist, clause)`. Duplicate insertions are
    /// idempotent.
    pub fn insert(&mut self, d: &Clause, watchlist: u32, clause: u32) {
        assert!(!self.frozen, "insert into frozen index");
        if !self.seen.insert((watchlist, clause)) {
            return;
        }
        let entry = Entry {
            watchlist,
            clause,
            prune: PruneVec::of_clause(d, &self.layout),
            body: d.clone(),
        };
        match self.mode {
            IndexMode::Single => self.flat.push(entry),
            IndexMode::Multi => self.coded.entry(d.code().clone()).or_default().push(entry),
        }
    }

    /// Ends the construction phase. For multi mode with many buckets this
    /// builds the inverted signed-predicate map used for superset lookup.
    pub fn freeze(&mut self) {
        self.frozen = true;
        if self.mode == IndexMode::Multi && self.coded.len() > INVERTED_LOOKUP_THRESHOLD {
            let keys: Vec<ClauseCode> = self.coded.keys().cloned().collect();
            let mut by_signed_pred: HashMap<i32, Vec<u32>> = HashMap::new();
            for (i, code) in keys.iter().enumerate() {
                for &e in code.entries() {
                    by_signed_pred.entry(e).or_default().push(i as u32);
                }
            }
            self.inverted = Some(Inverted {
                keys,
                by_signed_pred,
            });
        }
    }

    pub fn storage_stats(&self) -> StorageStats {
        match self.mode {
            IndexMode::Single => StorageStats {
                stored: self.flat.len(),
                buckets: 1,
                max_bucket: self.flat.len(),
                single_clause_buckets: usize::from(self.flat.len() == 1),
            },
            IndexMode::Multi => StorageStats {
                stored: self.coded.values().map(Vec::len).sum(),
                buckets: self.coded.len(),
                max_bucket: self.coded.values().map(Vec::len).max().unwrap_or(0),
                single_clause_buckets: self.coded.values().filter(|b| b.len() == 1).count(),
            },
        }
    }

    fn scan_bucket(
        query: &Clause,
        prune: &PruneVec,
        bucket: &[Entry],
        stats: &mut MatchStats,
        out: &mut Vec<(u32, u32)>,
    ) {
        for e in bucket {
            if !prune.gate(&e.prune) {
                stats.gate_rejections += 1;
                continue;
            }
            stats.subsumption_calls += 1;
            if subsumes(query, &e.body).is_some() {
                stats.subsumption_hits += 1;
                out.push((e.watchlist, e.clause));
            }
        }
    }

    /// All stored `(watchlist, clause)` pairs whose clause is subsumed by
    /// `c`, sorted.
    pub fn match_clause(&self, c: &Clause, stats: &mut MatchStats) -> Vec<(u32, u32)> {
        let prune = PruneVec::of_clause(c, &self.layout);
        let mut out = Vec::new();
        match self.mode {
            IndexMode::Single => {
                stats.buckets_visited += 1;
                Self::scan_bucket(c, &prune, &self.flat, stats, &mut out);
            }
            IndexMode::Multi => {
                if let Some(inv) = &self.inverted {
                    for key in inv.superset_codes(c.code()) {
                        stats.buckets_visited += 1;
                        Self::scan_bucket(c, &prune, &self.coded[key], stats, &mut out);
                    }
                } else {
                    for (code, bucket) in &self.coded {
                        if c.code().is_subset(code) {
                            stats.buckets_visited += 1;
                            Self::scan_bucket(c, &prune, bucket, stats, &mut out);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl Inverted {
    /// Codes that are supersets of `query`: the intersection of the bucket
    /// lists of each signed predicate in the query.
    fn superset_codes(&self, query: &ClauseCode) -> Vec<&ClauseCode> {
        if query.entries().is_empty() {
            return self.keys.iter().collect();
        }
        let mut lists: Vec<&Vec<u32>> = Vec::with_capacity(query.entries().len());
        for e in query.entries() {
            match self.by_signed_pred.get(e) {
                Some(l) => lists.push(l),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let mut current: Vec<u32> = lists[0].clone();
        for l in &lists[1..] {
            let mut next = Vec::with_capacity(current.len());
            let (mut i, mut j) = (0, 0);
            while i < current.len() && j < l.len() {
                match current[i].cmp(&l[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        next.push(current[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            current = next;
            if current.is_empty() {
                break;
            }
        }
        current.iter().map(|&i| &self.keys[i as usize]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{ClauseId, Literal, Origin};
    use crate::tptp::parse_problem;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn parse_clauses(text: &str, sig: &mut Signature) -> Vec<Clause> {
        parse_problem(text.as_bytes(), "t", sig)
            .unwrap()
            .clauses
            .into_iter()
            .map(|pc| pc.clause)
            .collect()
    }

    #[test]
    fn multi_mode_stores_under_clause_code() {
        let mut sig = Signature::new();
        let cs = parse_clauses("cnf(c0, axiom, (~q(a))).", &mut sig);
        let mut idx = WatchlistIndex::new(IndexMode::Multi, PruneLayout::from_signature(&sig));
        idx.insert(&cs[0], 0, 0);
        assert_eq!(idx.coded.len(), 1);
        let code = idx.coded.keys().next().unwrap();
        assert_eq!(code, cs[0].code());
        assert_eq!(code.entries().len(), 1);
        assert!(code.entries()[0] < 0);
    }

    #[test]
    fn duplicate_insert_is_idempotent() {
        let mut sig = Signature::new();
        let cs = parse_clauses("cnf(c0, axiom, (p(a))).", &mut sig);
        let mut idx = WatchlistIndex::new(IndexMode::Multi, PruneLayout::from_signature(&sig));
        idx.insert(&cs[0], 3, 7);
        idx.insert(&cs[0], 3, 7);
        assert_eq!(idx.storage_stats().stored, 1);
    }

    #[test]
    fn match_examples() {
        let mut sig = Signature::new();
        let stored = parse_clauses(
            "cnf(d0, axiom, (p(a))). cnf(d1, axiom, (p(b) | q(c))). cnf(d2, axiom, (~p(a))).",
            &mut sig,
        );
        let query = parse_clauses("cnf(c, axiom, (p(X))).", &mut sig);
        for mode in [IndexMode::Single, IndexMode::Multi] {
            let mut idx = WatchlistIndex::new(mode, PruneLayout::from_signature(&sig));
            for (i, d) in stored.iter().enumerate() {
                idx.insert(d, 0, i as u32);
            }
            idx.freeze();
            let mut stats = MatchStats::default();
            let hits = idx.match_clause(&query[0], &mut stats);
            assert_eq!(hits, vec![(0, 0), (0, 1)]);
        }
    }

    #[test]
    fn empty_clause_matches_everything() {
        let mut sig = Signature::new();
        let stored = parse_clauses(
            "cnf(d0, axiom, (p(a))). cnf(d1, axiom, (~q(b) | r(c))).",
            &mut sig,
        );
        let empty = Clause::new(ClauseId(0), vec![], Origin::Input);
        for mode in [IndexMode::Single, IndexMode::Multi] {
            let mut idx = WatchlistIndex::new(mode, PruneLayout::from_signature(&sig));
            for (i, d) in stored.iter().enumerate() {
                idx.insert(d, 0, i as u32);
            }
            idx.freeze();
            let mut stats = MatchStats::default();
            assert_eq!(idx.match_clause(&empty, &mut stats).len(), stored.len());
        }
    }

    fn random_clause(rng: &mut StdRng, sig: &mut Signature, id: u32, npreds: usize) -> Clause {
        let mut lits = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let p = sig
                .symbols
                .intern(&format!("p{}", rng.random_range(0..npreds)));
            let term = if rng.random_bool(0.5) {
                Term::Var(crate::logic::Var(rng.random_range(0..2)))
            } else {
                let f = sig.symbols.intern(&format!("k{}", rng.random_range(0..6)));
                Term::App(f, Box::new([]))
            };
            lits.push(Literal::new(rng.random_bool(0.5), p, vec![term]));
        }
        Clause::new(ClauseId(id), lits, Origin::Input)
    }

    fn seeded_signature(npreds: usize) -> Signature {
        // Pre-intern so PruneLayout sees every symbol the generator can emit.
        let mut sig = Signature::new();
        let mut lines = String::new();
        for p in 0..npreds {
            lines.push_str(&format!("cnf(c{p}, axiom, (p{p}(a))).\n"));
        }
        for k in 0..6 {
            lines.push_str(&format!("cnf(k{k}, axiom, (p0(k{k}))).\n"));
        }
        parse_problem(lines.as_bytes(), "sig", &mut sig).unwrap();
        sig
    }

    #[test]
    fn modes_agree_and_multi_never_calls_more() {
        let mut sig = seeded_signature(40);
        let mut rng = StdRng::seed_from_u64(42);
        let stored: Vec<Clause> = (0..1000)
            .map(|i| random_clause(&mut rng, &mut sig, i, 40))
            .collect();
        let layout = PruneLayout::from_signature(&sig);
        let mut single = WatchlistIndex::new(IndexMode::Single, layout.clone());
        let mut multi = WatchlistIndex::new(IndexMode::Multi, layout);
        for (i, d) in stored.iter().enumerate() {
            single.insert(d, (i % 7) as u32, i as u32);
            multi.insert(d, (i % 7) as u32, i as u32);
        }
        single.freeze();
        multi.freeze();
        let mut s_stats = MatchStats::default();
        let mut m_stats = MatchStats::default();
        for q in 0..200 {
            let query = random_clause(&mut rng, &mut sig, 100_000 + q, 40);
            let s = single.match_clause(&query, &mut s_stats);
            let m = multi.match_clause(&query, &mut m_stats);
            assert_eq!(s, m);
        }
        assert!(m_stats.subsumption_calls <= s_stats.subsumption_calls);
        assert_eq!(s_stats.subsumption_hits, m_stats.subsumption_hits);
    }

    #[test]
    fn gate_never_discards_a_true_match() {
        let mut sig = seeded_signature(8);
        let mut rng = StdRng::seed_from_u64(9);
        let stored: Vec<Clause> = (0..400)
            .map(|i| random_clause(&mut rng, &mut sig, i, 8))
            .collect();
        let mut idx = WatchlistIndex::new(IndexMode::Single, PruneLayout::from_signature(&sig));
        for (i, d) in stored.iter().enumerate() {
            idx.insert(d, 0, i as u32);
        }
        idx.freeze();
        for q in 0..200 {
            let query = random_clause(&mut rng, &mut sig, 10_000 + q, 8);
            let mut stats = MatchStats::default();
            let got = idx.match_clause(&query, &mut stats);
            // Gate-free oracle: subsumption against every stored clause.
            let want: Vec<(u32, u32)> = stored
                .iter()
                .enumerate()
                .filter(|(_, d)| subsumes(&query, d).is_some())
                .map(|(i, _)| (0u32, i as u32))
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn inverted_lookup_path_agrees_with_scan() {
        // > INVERTED_LOOKUP_THRESHOLD distinct codes forces the inverted map.
        let sig = seeded_signature(1200);
        let mut clauses = Vec::new();
        for p in 0..1200u32 {
            let pred = sig.symbols.lookup(&format!("p{p}")).unwrap();
            let a = sig.symbols.lookup("k0").unwrap();
            clauses.push(Clause::new(
                ClauseId(p),
                vec![Literal::new(p % 2 == 0, pred, vec![Term::constant(a)])],
                Origin::Input,
            ));
        }
        let layout = PruneLayout::from_signature(&sig);
        let mut multi = WatchlistIndex::new(IndexMode::Multi, layout.clone());
        let mut single = WatchlistIndex::new(IndexMode::Single, layout);
        for (i, c) in clauses.iter().enumerate() {
            multi.insert(c, 0, i as u32);
            single.insert(c, 0, i as u32);
        }
        multi.freeze();
        single.freeze();
        assert!(multi.inverted.is_some());
        for probe in [0u32, 7, 1199] {
            let pred = sig.symbols.lookup(&format!("p{probe}")).unwrap();
            let query = Clause::new(
                ClauseId(10_000 + probe),
                vec![Literal::new(
                    probe % 2 == 0,
                    pred,
                    vec![Term::Var(crate::logic::Var(0))],
                )],
                Origin::Input,
            );
            let mut s1 = MatchStats::default();
            let mut s2 = MatchStats::default();
            assert_eq!(
                multi.match_clause(&query, &mut s1),
                single.match_clause(&query, &mut s2)
            );
            assert_eq!(s1.subsumption_hits, 1);
        }
    }

    #[test]
    fn storage_stats_reported_for_large_synthetic_load() {
        let mut sig = seeded_signature(60);
        let mut rng = StdRng::seed_from_u64(61_501);
        let mut idx = WatchlistIndex::new(IndexMode::Multi, PruneLayout::from_signature(&sig));
        for i in 0..61_501u32 {
            let c = random_clause(&mut rng, &mut sig, i, 60);
            idx.insert(&c, i / 64, i);
        }
        idx.freeze();
        let stats = idx.storage_stats();
        println!(
            "multi-index storage: {} clauses, {} buckets, max bucket {}, {} single-clause buckets",
            stats.stored, stats.buckets, stats.max_bucket, stats.single_clause_buckets
        );
        assert_eq!(stats.stored, 61_501);
        assert!(stats.buckets > 1);
        assert!(stats.max_bucket >= 1);
    }
}
