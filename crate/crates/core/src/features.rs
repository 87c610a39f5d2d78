//! Clause featurization: term-walk features, feature hashing, and
//! proof-state-vector concatenation.
//!
//! A clause maps to a sparse vector of `2 * hash_base + watchlist_count`
//! entries: hashed clause walks in block 0, hashed conjecture walks in
//! block 1, and the completion ratios copied verbatim into block 2.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::logic::{Clause, SymbolTable, Term};

/// Walk features are downward paths of exactly this many nodes.
pub const WALK_LENGTH: usize = 3;

pub const VAR_TOKEN: &str = "VAR";
pub const SKOLEM_TOKEN: &str = "SKO";
pub const SKOLEM_PREFIX: &str = "skolem_";
pub const END_TOKEN: &str = "END";

/// Reserved count features. `#` cannot start an identifier, so these never
/// collide with walk strings.
pub const FEAT_LITERALS: &str = "#lits";
pub const FEAT_POSITIVE_LITERALS: &str = "#pos";
pub const FEAT_SYMBOLS: &str = "#syms";
pub const FEAT_DEPTH: &str = "#depth";

/// Multiset of feature strings. Count features are always present, walk
/// features appear with their multiplicity.
pub type FeatureBag = BTreeMap<String, u32>;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("hash base {0} is not a power of two >= 256")]
    BadHashBase(u32),
    #[error("proof-state vector has {got} entries, feature config expects {expected}")]
    PsvLengthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Power of two; each hashed block has this many buckets.
    pub hash_base: u32,
    /// Number of completion ratios appended after the two hashed blocks.
    pub watchlist_count: usize,
}

impl FeatureConfig {
    pub fn new(hash_base: u32, watchlist_count: usize) -> Result<FeatureConfig, FeatureError> {
        if hash_base < 256 || !hash_base.is_power_of_two() {
            return Err(FeatureError::BadHashBase(hash_base));
        }
        Ok(FeatureConfig {
            hash_base,
            watchlist_count,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.hash_base as usize + self.watchlist_count
    }

    pub fn conjecture_block(&self) -> usize {
        self.hash_base as usize
    }

    pub fn watchlist_block(&self) -> usize {
        2 * self.hash_base as usize
    }
}

/// Sparse feature vector; absent indices read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    pub entries: BTreeMap<u32, f64>,
    pub dim: usize,
}

impl SparseVector {
    pub fn empty(dim: usize) -> SparseVector {
        SparseVector {
            entries: BTreeMap::new(),
            dim,
        }
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    fn add(&mut self, index: u32, value: f64) {
        if value != 0.0 {
            *self.entries.entry(index).or_insert(0.0) += value;
        }
    }
}

/// 64-bit FNV-1a over raw bytes. Stable across platforms and runs.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET_BASIS;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Hashes a feature string into `[0, base)`. `base` must be a power of two.
pub fn hash_feature(feature: &str, base: u32) -> u32 {
    debug_assert!(base.is_power_of_two());
    (fnv1a_64(feature.as_bytes()) & u64::from(base - 1)) as u32
}

fn node_token<'a>(table: &'a SymbolTable, sym: crate::logic::Sym) -> &'a str {
    let name = table.name(sym);
    if name.starts_with(SKOLEM_PREFIX) {
        SKOLEM_TOKEN
    } else {
        name
    }
}

fn term_paths<'a>(
    t: &Term,
    table: &'a SymbolTable,
    prefix: &mut Vec<&'a str>,
    out: &mut Vec<Vec<&'a str>>,
) {
    match t {
        Term::Var(_) => {
            prefix.push(VAR_TOKEN);
            out.push(prefix.clone());
            prefix.pop();
        }
        Term::App(f, args) => {
            prefix.push(node_token(table, *f));
            if args.is_empty() {
                out.push(prefix.clone());
            } else {
                for a in args.iter() {
                    term_paths(a, table, prefix, out);
                }
            }
            prefix.pop();
        }
    }
}

/// Term-walk features plus the four count features.
///
/// Every root-to-leaf label path of a literal tree contributes each of its
/// consecutive [`WALK_LENGTH`]-node windows; paths shorter than that are
/// padded with [`END_TOKEN`]. The root label is the signed predicate,
/// interior labels are functors, leaves are constants, `VAR`, or `SKO`.
pub fn extract_walks(c: &Clause, table: &SymbolTable) -> FeatureBag {
    let mut bag = FeatureBag::new();
    let mut symbols = 0u32;
    for lit in c.literals() {
        let signed = format!(
            "{}{}",
            if lit.positive { '+' } else { '-' },
            node_token(table, lit.predicate)
        );
        let mut paths: Vec<Vec<&str>> = Vec::new();
        if lit.args.is_empty() {
            paths.push(vec![signed.as_str()]);
        } else {
            let mut prefix = vec![signed.as_str()];
            for a in lit.args.iter() {
                term_paths(a, table, &mut prefix, &mut paths);
            }
        }
        for path in &paths {
            if path.len() >= WALK_LENGTH {
                for window in path.windows(WALK_LENGTH) {
                    *bag.entry(window.join("/")).or_insert(0) += 1;
                }
            } else {
                let mut padded = path.clone();
                while padded.len() < WALK_LENGTH {
                    padded.push(END_TOKEN);
                }
                *bag.entry(padded.join("/")).or_insert(0) += 1;
            }
        }
        symbols += 1 + count_symbols(lit.args.iter());
    }
    bag.insert(FEAT_LITERALS.to_string(), c.literals().len() as u32);
    bag.insert(
        FEAT_POSITIVE_LITERALS.to_string(),
        c.literals().iter().filter(|l| l.positive).count() as u32,
    );
    bag.insert(FEAT_SYMBOLS.to_string(), symbols);
    bag.insert(FEAT_DEPTH.to_string(), c.max_depth() as u32);
    bag
}

fn count_symbols<'a>(terms: impl Iterator<Item = &'a Term>) -> u32 {
    let mut n = 0;
    for t in terms {
        if let Term::App(_, args) = t {
            n += 1 + count_symbols(args.iter());
        }
    }
    n
}

/// Conjecture features: the summed walk bags of every negated-conjecture
/// clause.
pub fn conjecture_bag(clauses: &[&Clause], table: &SymbolTable) -> FeatureBag {
    let mut total = FeatureBag::new();
    for c in clauses {
        for (k, v) in extract_walks(c, table) {
            *total.entry(k).or_insert(0) += v;
        }
    }
    total
}

/// Assembles the sparse vector for one clause: hashed clause walks in block
/// 0, hashed conjecture walks in block 1 (colliding values summed), and the
/// proof-state vector copied verbatim into block 2.
pub fn build_vector(
    c: &Clause,
    table: &SymbolTable,
    conjecture: &FeatureBag,
    psv: &[f64],
    cfg: &FeatureConfig,
) -> Result<SparseVector, FeatureError> {
    if psv.len() != cfg.watchlist_count {
        return Err(FeatureError::PsvLengthMismatch {
            expected: cfg.watchlist_count,
            got: psv.len(),
        });
    }
    let mut v = SparseVector::empty(cfg.dim());
    for (feat, count) in extract_walks(c, table) {
        v.add(hash_feature(&feat, cfg.hash_base), f64::from(count));
    }
    let conj_base = cfg.conjecture_block() as u32;
    for (feat, count) in conjecture {
        v.add(conj_base + hash_feature(feat, cfg.hash_base), f64::from(*count));
    }
    let wl_base = cfg.watchlist_block() as u32;
    for (i, r) in psv.iter().enumerate() {
        v.add(wl_base + i as u32, *r);
    }
    Ok(v)
}

/// One training example in the sparse text format:
/// `<label 0|1> <index>:<value> ...`, indices strictly increasing.
pub fn format_example(label: bool, v: &SparseVector) -> String {
    let mut line = String::new();
    line.push(if label { '1' } else { '0' });
    for (i, x) in &v.entries {
        line.push(' ');
        line.push_str(&i.to_string());
        line.push(':');
        line.push_str(&x.to_string());
    }
    line
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ExampleParseError {
    #[error("empty example line")]
    EmptyLine,
    #[error("bad label `{0}`")]
    BadLabel(String),
    #[error("bad entry `{0}`")]
    BadEntry(String),
    #[error("indices not strictly increasing at `{0}`")]
    UnsortedIndex(String),
}

/// Parses one line of the sparse example format.
pub fn parse_example(line: &str, dim: usize) -> Result<(bool, SparseVector), ExampleParseError> {
    let mut parts = line.split_whitespace();
    let label = match parts.next() {
        None => return Err(ExampleParseError::EmptyLine),
        Some("0") => false,
        Some("1") => true,
        Some(other) => return Err(ExampleParseError::BadLabel(other.to_string())),
    };
    let mut v = SparseVector::empty(dim);
    let mut last: Option<u32> = None;
    for part in parts {
        let (idx, val) = part
            .split_once(':')
            .ok_or_else(|| ExampleParseError::BadEntry(part.to_string()))?;
        let idx: u32 = idx
            .parse()
            .map_err(|_| ExampleParseError::BadEntry(part.to_string()))?;
        let val: f64 = val
            .parse()
            .map_err(|_| ExampleParseError::BadEntry(part.to_string()))?;
        if last.is_some_and(|l| idx <= l) {
            return Err(ExampleParseError::UnsortedIndex(part.to_string()));
        }
        last = Some(idx);
        v.entries.insert(idx, val);
    }
    Ok((label, v))
}
