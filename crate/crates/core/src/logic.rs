//! First-order terms, literals, clauses, one-sided matching, and clause
//! subsumption.
//!
//! Everything here is immutable after construction and safe to share across
//! concurrent searches. Symbols are interned per session via [`SymbolTable`];
//! variables are clause-local integers assigned by first occurrence, so
//! structurally identical clauses are syntactically identical.

use std::collections::HashMap;
use std::fmt;

use std::collections::BTreeMap;

/// Interned predicate/function symbol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sym(pub u32);

/// Clause-local variable, numbered by first occurrence.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

/// Unique clause id within one search session.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClauseId(pub u32);

/// Session-wide symbol interner. Ids are assigned in first-seen order, which
/// keeps every downstream artifact deterministic for a fixed input order.
#[derive(Default, Debug, Clone)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, Sym>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Sym {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = Sym(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    pub fn lookup(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A first-order term. Constants are zero-arity compounds.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Var),
    App(Sym, Box<[Term]>),
}

impl Term {
    pub fn constant(s: Sym) -> Term {
        Term::App(s, Box::new([]))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Total node count, variables included.
    pub fn node_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::node_count).sum::<usize>(),
        }
    }

    pub fn var_occurrences(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => args.iter().map(Term::var_occurrences).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::App(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
        }
    }
}

/// A signed predicate applied to terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub positive: bool,
    pub predicate: Sym,
    pub args: Box<[Term]>,
}

impl Literal {
    pub fn new(positive: bool, predicate: Sym, args: Vec<Term>) -> Self {
        Literal {
            positive,
            predicate,
            args: args.into_boxed_slice(),
        }
    }

    pub fn negated(&self) -> Literal {
        Literal {
            positive: !self.positive,
            predicate: self.predicate,
            args: self.args.clone(),
        }
    }

    /// Same predicate, sign, and arguments.
    pub fn same_atom(&self, other: &Literal) -> bool {
        self.predicate == other.predicate && self.args == other.args
    }

    pub fn node_count(&self) -> usize {
        1 + self.args.iter().map(Term::node_count).sum::<usize>()
    }

    pub fn var_occurrences(&self) -> usize {
        self.args.iter().map(Term::var_occurrences).sum()
    }

    pub fn depth(&self) -> usize {
        1 + self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    /// Order on the literal's shape with all variables identified. Used to
    /// pick a canonical literal order before variables are renumbered.
    fn cmp_shape(&self, other: &Literal) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        (self.predicate, !self.positive, self.args.len())
            .cmp(&(other.predicate, !other.positive, other.args.len()))
            .then_with(|| {
                for (a, b) in self.args.iter().zip(other.args.iter()) {
                    let o = cmp_term_shape(a, b);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            })
    }
}

fn cmp_term_shape(a: &Term, b: &Term) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a, b) {
        (Term::Var(_), Term::Var(_)) => Ordering::Equal,
        (Term::Var(_), Term::App(..)) => Ordering::Less,
        (Term::App(..), Term::Var(_)) => Ordering::Greater,
        (Term::App(f, fa), Term::App(g, ga)) => (f, fa.len()).cmp(&(g, ga.len())).then_with(|| {
            for (x, y) in fa.iter().zip(ga.iter()) {
                let o = cmp_term_shape(x, y);
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        }),
    }
}

/// How a clause entered the search.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Origin {
    Input,
    Derived { rule: Rule, parents: Vec<ClauseId> },
    WatchlistLoaded,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rule {
    Resolution,
    Factoring,
}

/// Sorted set of signed predicate symbols: positive `P` is `+(P.0 + 1)`,
/// negative `-(P.0 + 1)`. Preserved under substitution, so `C ⊑ D` implies
/// `code(C) ⊆ code(D)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClauseCode(Box<[i32]>);

impl ClauseCode {
    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn is_subset(&self, other: &ClauseCode) -> bool {
        let mut it = other.0.iter();
        'outer: for x in self.0.iter() {
            for y in it.by_ref() {
                match y.cmp(x) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn signed_entry(positive: bool, predicate: Sym) -> i32 {
        let v = predicate.0 as i32 + 1;
        if positive {
            v
        } else {
            -v
        }
    }
}

/// A clause: a set of literals (duplicates collapsed, variables normalized by
/// first occurrence, literals in a canonical order). The empty literal set is
/// the contradiction.
#[derive(Clone, Debug)]
pub struct Clause {
    pub id: ClauseId,
    literals: Box<[Literal]>,
    pub origin: Origin,
    code: ClauseCode,
}

impl PartialEq for Clause {
    fn eq(&self, other: &Self) -> bool {
        self.literals == other.literals
    }
}
impl Eq for Clause {}

impl Clause {
    /// Normalizes and builds a clause: collapses duplicate literals, orders
    /// literals canonically, and renumbers variables by first occurrence.
    pub fn new(id: ClauseId, mut literals: Vec<Literal>, origin: Origin) -> Clause {
        literals.sort_by(|a, b| a.cmp_shape(b));
        let mut renames: HashMap<Var, Var> = HashMap::new();
        for lit in literals.iter_mut() {
            for arg in lit.args.iter_mut() {
                renumber(arg, &mut renames);
            }
        }
        literals.sort();
        literals.dedup();
        let mut entries: Vec<i32> = literals
            .iter()
            .map(|l| ClauseCode::signed_entry(l.positive, l.predicate))
            .collect();
        entries.sort_unstable();
        entries.dedup();
        Clause {
            id,
            literals: literals.into_boxed_slice(),
            origin,
            code: ClauseCode(entries.into_boxed_slice()),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// The set of signed predicate symbols occurring in the clause.
    pub fn code(&self) -> &ClauseCode {
        &self.code
    }

    /// Contains both `+A` and `-A` for some atom `A`.
    pub fn is_tautology(&self) -> bool {
        self.literals.iter().any(|l| {
            !l.positive
                && self
                    .literals
                    .iter()
                    .any(|m| m.positive && m.same_atom(l))
        })
    }

    /// Total node count over all literal trees, variables included.
    pub fn node_count(&self) -> usize {
        self.literals.iter().map(Literal::node_count).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.literals.iter().map(Literal::depth).max().unwrap_or(0)
    }

    pub fn var_count(&self) -> usize {
        let mut vars = Vec::new();
        for l in self.literals.iter() {
            for t in l.args.iter() {
                t.collect_vars(&mut vars);
            }
        }
        vars.len()
    }

    pub fn with_id(&self, id: ClauseId) -> Clause {
        let mut c = self.clone();
        c.id = id;
        c
    }

    pub fn with_origin(&self, origin: Origin) -> Clause {
        let mut c = self.clone();
        c.origin = origin;
        c
    }
}

fn renumber(t: &mut Term, renames: &mut HashMap<Var, Var>) {
    match t {
        Term::Var(v) => {
            let n = renames.len() as u32;
            *v = *renames.entry(*v).or_insert(Var(n));
        }
        Term::App(_, args) => {
            for a in args.iter_mut() {
                renumber(a, renames);
            }
        }
    }
}

/// Finite mapping from variables to terms. Identity bindings are elided.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, v: Var, t: Term) {
        if t != Term::Var(v) {
            self.bindings.insert(v, t);
        }
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn is_identity(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

/// Replaces every occurrence of a bound variable by its image; unbound
/// variables are left as-is. One pass, no chasing.
pub fn apply_substitution(t: &Term, s: &Substitution) -> Term {
    match t {
        Term::Var(v) => s.get(*v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(f, args) => Term::App(
            *f,
            args.iter().map(|a| apply_substitution(a, s)).collect(),
        ),
    }
}

pub fn apply_literal(l: &Literal, s: &Substitution) -> Literal {
    Literal {
        positive: l.positive,
        predicate: l.predicate,
        args: l.args.iter().map(|t| apply_substitution(t, s)).collect(),
    }
}

/// One-sided matcher: variables bind only on the pattern side. Bindings are
/// kept in a trail so backtracking search can roll back cheaply.
struct Matcher {
    bindings: HashMap<Var, Term>,
    trail: Vec<Var>,
}

impl Matcher {
    fn from_substitution(s: &Substitution) -> Matcher {
        Matcher {
            bindings: s.iter().map(|(v, t)| (*v, t.clone())).collect(),
            trail: Vec::new(),
        }
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.bindings.remove(&v);
        }
    }

    fn match_terms(&mut self, pattern: &Term, target: &Term) -> bool {
        match pattern {
            Term::Var(v) => {
                if let Some(bound) = self.bindings.get(v) {
                    bound == target
                } else {
                    self.bindings.insert(*v, target.clone());
                    self.trail.push(*v);
                    true
                }
            }
            Term::App(f, fa) => match target {
                Term::App(g, ga) if f == g && fa.len() == ga.len() => {
                    fa.iter().zip(ga.iter()).all(|(p, t)| self.match_terms(p, t))
                }
                _ => false,
            },
        }
    }

    fn match_literals(&mut self, pattern: &Literal, target: &Literal) -> bool {
        pattern.positive == target.positive
            && pattern.predicate == target.predicate
            && pattern.args.len() == target.args.len()
            && pattern
                .args
                .iter()
                .zip(target.args.iter())
                .all(|(p, t)| self.match_terms(p, t))
    }

    fn into_substitution(self) -> Substitution {
        let mut s = Substitution::new();
        for (v, t) in self.bindings {
            s.bind(v, t);
        }
        s
    }
}

/// Extends `s` to a substitution sending `pattern` onto `target` under
/// one-sided matching (only pattern variables bind), or `None`.
pub fn match_literal(pattern: &Literal, target: &Literal, s: &Substitution) -> Option<Substitution> {
    let mut m = Matcher::from_substitution(s);
    if m.match_literals(pattern, target) {
        Some(m.into_substitution())
    } else {
        None
    }
}

/// Subsumption: returns a substitution with `Cσ ⊆ D` (as literal sets) if one
/// exists. Several literals of `C` may map onto the same literal of `D`.
pub fn subsumes(c: &Clause, d: &Clause) -> Option<Substitution> {
    if !c.code().is_subset(d.code()) {
        return None;
    }
    // Most instantiated literals first: fewer candidates, earlier pruning.
    let mut order: Vec<&Literal> = c.literals().iter().collect();
    order.sort_by_key(|l| (l.var_occurrences(), usize::MAX - l.node_count()));
    let mut m = Matcher {
        bindings: HashMap::new(),
        trail: Vec::new(),
    };
    fn search(order: &[&Literal], i: usize, d: &Clause, m: &mut Matcher) -> bool {
        if i == order.len() {
            return true;
        }
        for cand in d.literals() {
            let mark = m.mark();
            if m.match_literals(order[i], cand) && search(order, i + 1, d, m) {
                return true;
            }
            m.rollback(mark);
        }
        false
    }
    if search(&order, 0, d, &mut m) {
        Some(m.into_substitution())
    } else {
        None
    }
}

/// Multiset subsumption: like [`subsumes`] but distinct literals of `c` must
/// map to distinct literals of `d`. This is the redundancy-deletion variant:
/// under the plain set definition every clause subsumes its own factors, so
/// deleting set-subsumed clauses would break refutation completeness.
pub fn subsumes_strict(c: &Clause, d: &Clause) -> bool {
    if c.literals().len() > d.literals().len() || !c.code().is_subset(d.code()) {
        return false;
    }
    let mut order: Vec<&Literal> = c.literals().iter().collect();
    order.sort_by_key(|l| (l.var_occurrences(), usize::MAX - l.node_count()));
    let mut m = Matcher {
        bindings: HashMap::new(),
        trail: Vec::new(),
    };
    let mut used = vec![false; d.literals().len()];
    fn search(
        order: &[&Literal],
        i: usize,
        d: &Clause,
        used: &mut [bool],
        m: &mut Matcher,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        for (j, cand) in d.literals().iter().enumerate() {
            if used[j] {
                continue;
            }
            let mark = m.mark();
            used[j] = true;
            if m.match_literals(order[i], cand) && search(order, i + 1, d, used, m) {
                return true;
            }
            used[j] = false;
            m.rollback(mark);
        }
        false
    }
    search(&order, 0, d, &mut used, &mut m)
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table() -> (SymbolTable, Sym, Sym, Sym, Sym, Sym) {
        let mut t = SymbolTable::new();
        let p = t.intern("p");
        let q = t.intern("q");
        let f = t.intern("f");
        let g = t.intern("g");
        let a = t.intern("a");
        (t, p, q, f, g, a)
    }

    fn v(n: u32) -> Term {
        Term::Var(Var(n))
    }

    fn clause(id: u32, lits: Vec<Literal>) -> Clause {
        Clause::new(ClauseId(id), lits, Origin::Input)
    }

    #[test]
    fn apply_single_binding() {
        let (_, _, _, f, g, a) = table();
        // f(x, g(y)) with {x -> a}  =>  f(a, g(y))
        let t = Term::App(f, Box::new([v(0), Term::App(g, Box::new([v(1)]))]));
        let mut s = Substitution::new();
        s.bind(Var(0), Term::constant(a));
        let r = apply_substitution(&t, &s);
        assert_eq!(
            r,
            Term::App(
                f,
                Box::new([Term::constant(a), Term::App(g, Box::new([v(1)]))])
            )
        );
    }

    #[test]
    fn apply_empty_substitution_is_identity() {
        let (_, _, _, f, _, a) = table();
        let t = Term::App(f, Box::new([v(3), Term::constant(a)]));
        assert_eq!(apply_substitution(&t, &Substitution::new()), t);
    }

    // Independent structural-recursion rewriter used as the oracle for
    // apply_substitution on random inputs.
    fn naive_rewrite(t: &Term, s: &Substitution) -> Term {
        if let Term::Var(x) = t {
            for (v, image) in s.iter() {
                if v == x {
                    return image.clone();
                }
            }
            return t.clone();
        }
        if let Term::App(f, args) = t {
            let rewritten: Vec<Term> = args.iter().map(|a| naive_rewrite(a, s)).collect();
            return Term::App(*f, rewritten.into_boxed_slice());
        }
        unreachable!()
    }

    fn random_term(rng: &mut StdRng, syms: &[Sym], depth: usize) -> Term {
        if depth == 0 || rng.random_range(0..3) == 0 {
            if rng.random_bool(0.5) {
                Term::Var(Var(rng.random_range(0..3)))
            } else {
                Term::constant(syms[rng.random_range(0..syms.len())])
            }
        } else {
            let f = syms[rng.random_range(0..syms.len())];
            let n = rng.random_range(1..=2);
            let args = (0..n).map(|_| random_term(rng, syms, depth - 1)).collect();
            Term::App(f, args)
        }
    }

    #[test]
    fn apply_matches_naive_oracle_on_random_pairs() {
        let (_, _, _, f, g, a) = table();
        let syms = [f, g, a];
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let t = random_term(&mut rng, &syms, 3);
            let mut s = Substitution::new();
            for var in 0..3u32 {
                if rng.random_bool(0.6) {
                    s.bind(Var(var), random_term(&mut rng, &syms, 2));
                }
            }
            assert_eq!(apply_substitution(&t, &s), naive_rewrite(&t, &s));
        }
    }

    #[test]
    fn match_literal_binds_pattern_vars() {
        let (_, p, _, f, _, a) = table();
        // +p(f(x,x)) vs +p(f(a,a)) => {x -> a}
        let pat = Literal::new(true, p, vec![Term::App(f, Box::new([v(0), v(0)]))]);
        let tgt = Literal::new(
            true,
            p,
            vec![Term::App(f, Box::new([Term::constant(a), Term::constant(a)]))],
        );
        let s = match_literal(&pat, &tgt, &Substitution::new()).unwrap();
        assert_eq!(s.get(Var(0)), Some(&Term::constant(a)));
    }

    #[test]
    fn match_literal_rejects_sign_mismatch() {
        let (_, p, _, _, _, a) = table();
        let pat = Literal::new(true, p, vec![v(0)]);
        let tgt = Literal::new(false, p, vec![Term::constant(a)]);
        assert!(match_literal(&pat, &tgt, &Substitution::new()).is_none());
    }

    fn subterms(t: &Term, out: &mut Vec<Term>) {
        out.push(t.clone());
        if let Term::App(_, args) = t {
            for a in args.iter() {
                subterms(a, out);
            }
        }
    }

    fn literal_subterms(l: &Literal) -> Vec<Term> {
        let mut out = Vec::new();
        for a in l.args.iter() {
            subterms(a, &mut out);
        }
        out.sort();
        out.dedup();
        out
    }

    // Brute-force matching oracle: enumerate all assignments of pattern
    // variables to subterms of the target literal.
    fn match_oracle(pattern: &Literal, target: &Literal) -> bool {
        if pattern.positive != target.positive || pattern.predicate != target.predicate {
            return false;
        }
        let mut vars = Vec::new();
        for t in pattern.args.iter() {
            t.collect_vars(&mut vars);
        }
        let cands = {
            let mut c = literal_subterms(target);
            if c.is_empty() {
                c.push(Term::Var(Var(999)));
            }
            c
        };
        let mut assignment = vec![0usize; vars.len()];
        loop {
            let mut s = Substitution::new();
            for (i, var) in vars.iter().enumerate() {
                s.bind(*var, cands[assignment[i]].clone());
            }
            if apply_literal(pattern, &s) == *target {
                return true;
            }
            let mut i = 0;
            loop {
                if i == assignment.len() {
                    return false;
                }
                assignment[i] += 1;
                if assignment[i] < cands.len() {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn match_literal_agrees_with_enumeration_oracle() {
        let (_, p, q, f, g, a) = table();
        let syms = [f, g, a];
        let mut rng = StdRng::seed_from_u64(11);
        let mut hits = 0;
        for _ in 0..2000 {
            let pred = if rng.random_bool(0.5) { p } else { q };
            let n = rng.random_range(1..=2);
            let pat = Literal::new(
                rng.random_bool(0.5),
                pred,
                (0..n).map(|_| random_term(&mut rng, &syms, 2)).collect(),
            );
            // Half the targets are instances of the pattern so successes occur.
            let tgt = if rng.random_bool(0.5) {
                let mut s = Substitution::new();
                for var in 0..3u32 {
                    let mut ground = random_term(&mut rng, &syms, 1);
                    while !ground.is_ground() {
                        ground = random_term(&mut rng, &syms, 1);
                    }
                    s.bind(Var(var), ground);
                }
                apply_literal(&pat, &s)
            } else {
                let m = rng.random_range(1..=2);
                Literal::new(
                    rng.random_bool(0.5),
                    pred,
                    (0..m).map(|_| random_term(&mut rng, &syms, 2)).collect(),
                )
            };
            if !tgt.args.iter().all(Term::is_ground) {
                continue;
            }
            let got = match_literal(&pat, &tgt, &Substitution::new()).is_some();
            assert_eq!(got, match_oracle(&pat, &tgt), "{pat:?} vs {tgt:?}");
            if got {
                hits += 1;
            }
        }
        assert!(hits > 100, "oracle comparison never exercised successes");
    }

    #[test]
    fn subsumes_definitional_instance() {
        let (_, p, q, _, _, a) = table();
        let b = a; // reuse constant
        let c = clause(0, vec![Literal::new(true, p, vec![v(0)])]);
        let d = clause(
            1,
            vec![
                Literal::new(true, p, vec![Term::constant(a)]),
                Literal::new(true, q, vec![Term::constant(b)]),
            ],
        );
        let s = subsumes(&c, &d).unwrap();
        assert_eq!(s.get(Var(0)), Some(&Term::constant(a)));
    }

    #[test]
    fn subsumes_is_one_way() {
        let (_, p, _, _, _, a) = table();
        let c = clause(0, vec![Literal::new(true, p, vec![Term::constant(a)])]);
        let d = clause(1, vec![Literal::new(true, p, vec![v(0)])]);
        assert!(subsumes(&c, &d).is_none());
        assert!(subsumes(&d, &c).is_some());
    }

    #[test]
    fn subsumes_allows_noninjective_mapping() {
        let (_, p, _, _, _, a) = table();
        // {p(x), p(y)} subsumes {p(a)} under x,y -> a.
        let c = clause(
            0,
            vec![
                Literal::new(true, p, vec![v(0)]),
                Literal::new(true, p, vec![v(1)]),
            ],
        );
        let d = clause(1, vec![Literal::new(true, p, vec![Term::constant(a)])]);
        assert!(subsumes(&c, &d).is_some());
        // The strict variant refuses to collapse literals: a clause must not
        // count as subsuming its own factor.
        assert!(!subsumes_strict(&c, &d));
        assert!(subsumes_strict(&c, &c));
    }

    #[test]
    fn strict_subsumption_implies_set_subsumption() {
        let (_, p, q, f, _, a) = table();
        let mut rng = StdRng::seed_from_u64(23);
        let syms = [f, a];
        let mut strict_hits = 0;
        for i in 0..2000 {
            let mk = |rng: &mut StdRng, id: u32| {
                let n = rng.random_range(1..=3);
                let lits = (0..n)
                    .map(|_| {
                        Literal::new(
                            rng.random_bool(0.5),
                            if rng.random_bool(0.5) { p } else { q },
                            vec![random_term(rng, &syms, 2)],
                        )
                    })
                    .collect();
                clause(id, lits)
            };
            let c = mk(&mut rng, 2 * i);
            let d = mk(&mut rng, 2 * i + 1);
            if subsumes_strict(&c, &d) {
                strict_hits += 1;
                assert!(subsumes(&c, &d).is_some());
            }
        }
        assert!(strict_hits > 20);
    }

    #[test]
    fn subsumes_reflexive_with_identity() {
        let (_, p, q, f, _, a) = table();
        let mut rng = StdRng::seed_from_u64(3);
        let syms = [f, a];
        for i in 0..200 {
            let n = rng.random_range(0..=3);
            let lits = (0..n)
                .map(|_| {
                    Literal::new(
                        rng.random_bool(0.5),
                        if rng.random_bool(0.5) { p } else { q },
                        vec![random_term(&mut rng, &syms, 2)],
                    )
                })
                .collect();
            let c = clause(i, lits);
            let s = subsumes(&c, &c).expect("clause must subsume itself");
            // The witness need not be the identity ({p(x),p(y)} can map onto
            // itself via x -> y), but it must still send c into itself.
            for lit in c.literals() {
                let image = apply_literal(lit, &s);
                assert!(c.literals().contains(&image));
            }
        }
    }

    #[test]
    fn empty_clause_subsumes_everything() {
        let (_, p, _, _, _, a) = table();
        let e = clause(0, vec![]);
        let d = clause(1, vec![Literal::new(true, p, vec![Term::constant(a)])]);
        assert!(subsumes(&e, &d).is_some());
        assert!(subsumes(&d, &e).is_none());
    }

    #[test]
    fn clause_code_examples() {
        let (_, p, q, f, _, a) = table();
        // p(a) | ~p(b) | p(f(x))  ->  {+p, -p}
        let b = a;
        let c = clause(
            0,
            vec![
                Literal::new(true, p, vec![Term::constant(a)]),
                Literal::new(false, p, vec![Term::constant(b)]),
                Literal::new(true, p, vec![Term::App(f, Box::new([v(0)]))]),
            ],
        );
        assert_eq!(
            c.code().entries(),
            &[
                ClauseCode::signed_entry(false, p),
                ClauseCode::signed_entry(true, p)
            ]
        );
        assert!(clause(1, vec![]).code().entries().is_empty());
        let nq = clause(2, vec![Literal::new(false, q, vec![v(0)])]);
        assert_eq!(nq.code().entries(), &[ClauseCode::signed_entry(false, q)]);
    }

    #[test]
    fn code_stable_under_substitution() {
        let (_, p, q, f, g, a) = table();
        let syms = [f, g, a];
        let mut rng = StdRng::seed_from_u64(17);
        for i in 0..500 {
            let n = rng.random_range(1..=3);
            let lits: Vec<Literal> = (0..n)
                .map(|_| {
                    Literal::new(
                        rng.random_bool(0.5),
                        if rng.random_bool(0.5) { p } else { q },
                        vec![random_term(&mut rng, &syms, 2)],
                    )
                })
                .collect();
            let c = clause(i, lits.clone());
            let mut s = Substitution::new();
            for var in 0..3u32 {
                s.bind(Var(var), random_term(&mut rng, &syms, 2));
            }
            let applied = Clause::new(
                ClauseId(10_000 + i),
                lits.iter().map(|l| apply_literal(l, &s)).collect(),
                Origin::Input,
            );
            assert_eq!(c.code(), applied.code());
        }
    }

    #[test]
    fn normalization_is_order_and_renaming_insensitive() {
        let (_, p, q, _, _, _) = table();
        let c1 = clause(
            0,
            vec![
                Literal::new(true, p, vec![v(5)]),
                Literal::new(false, q, vec![v(5), v(9)]),
            ],
        );
        let c2 = clause(
            1,
            vec![
                Literal::new(false, q, vec![v(2), v(0)]),
                Literal::new(true, p, vec![v(2)]),
            ],
        );
        assert_eq!(c1, c2);
    }

    #[test]
    fn duplicate_literals_collapse_at_construction() {
        let (_, p, _, _, _, a) = table();
        let c = clause(
            0,
            vec![
                Literal::new(true, p, vec![Term::constant(a)]),
                Literal::new(true, p, vec![Term::constant(a)]),
            ],
        );
        assert_eq!(c.literals().len(), 1);
    }

    #[test]
    fn tautology_detection() {
        let (_, p, _, _, _, a) = table();
        let t = clause(
            0,
            vec![
                Literal::new(true, p, vec![Term::constant(a)]),
                Literal::new(false, p, vec![Term::constant(a)]),
            ],
        );
        assert!(t.is_tautology());
        let n = clause(
            1,
            vec![
                Literal::new(true, p, vec![Term::constant(a)]),
                Literal::new(false, p, vec![v(0)]),
            ],
        );
        assert!(!n.is_tautology());
    }
}
