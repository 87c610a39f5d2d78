//! Seeded synthetic corpus generator.
//!
//! Standard flavor: families of equality-free chain problems that share their
//! lemma structure, plus decoy axioms. Each family fixes a derivation chain;
//! instances ramp up a noise web of decoy predicates that floods the
//! symbol-count ordering under a generated-clause budget while leaving the
//! chain untouched. Variant pair problems share one conjecture and two
//! interchangeable chains (only one of which bridges to the goal per
//! variant), so the useful clauses of one variant are literally the decoys of
//! the other: clause and conjecture features cannot tell them apart, only the
//! proof-state vector can.
//!
//! Bench flavor: high-branching clause generators plus a large watchlist
//! spanning many clause codes, sized for the single-vs-multi index
//! comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Standard,
    Bench,
}

impl std::str::FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Flavor::Standard),
            "bench" => Ok(Flavor::Bench),
            other => Err(format!("unknown corpus flavor `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub seed: u64,
    pub flavor: Flavor,
    pub plain_families: usize,
    pub family_size: usize,
    pub variant_pairs: usize,
    pub bench_problems: usize,
    pub bench_watchlist_clauses: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            seed: 0,
            flavor: Flavor::Standard,
            plain_families: 12,
            family_size: 20,
            variant_pairs: 30,
            bench_problems: 200,
            bench_watchlist_clauses: 5600,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CorpusManifest {
    pub seed: u64,
    pub flavor: Flavor,
    pub problems: usize,
}

#[derive(Clone, Debug)]
pub struct GenSummary {
    pub root: PathBuf,
    pub problems: usize,
    pub watchlist_clauses: usize,
}

// Small pools: decoy vocabulary must recur across instances, or solved
// problems' traces cannot teach a learner what the decoys of the unsolved
// ones look like.
const NOISE_PREDS: usize = 10;
const NOISE_FNS: usize = 3;
const NOISE_CONSTS: usize = 8;
const VARIANT_CHAIN: usize = 10;
const VARIANT_INERT_FACTS: usize = 8;

pub fn generate(root: &Path, opts: &GenOptions) -> Result<GenSummary> {
    let problems_dir = root.join("problems");
    fs::create_dir_all(&problems_dir)
        .with_context(|| format!("creating {}", problems_dir.display()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut count = 0usize;
    let mut watchlist_clauses = 0usize;
    match opts.flavor {
        Flavor::Standard => {
            for f in 0..opts.plain_families {
                for n in 0..opts.family_size {
                    let name = format!("plain{f:02}_{n:02}");
                    let text = plain_problem(&mut rng, f, n, opts.family_size);
                    fs::write(problems_dir.join(format!("{name}.p")), text)?;
                    count += 1;
                }
            }
            for g in 0..opts.variant_pairs {
                // `a` and `b` variants interleave in sorted order so global
                // watchlist ids alternate between the two kinds.
                for variant in ["a", "b"] {
                    let name = format!("pair{g:02}{variant}");
                    let text = variant_problem(&mut rng, variant == "a");
                    fs::write(problems_dir.join(format!("{name}.p")), text)?;
                    count += 1;
                }
            }
        }
        Flavor::Bench => {
            let mut derivable = Vec::new();
            for i in 0..opts.bench_problems {
                let name = format!("gen{i:03}");
                let text = bench_problem(&mut rng, &mut derivable);
                fs::write(problems_dir.join(format!("{name}.p")), text)?;
                count += 1;
            }
            watchlist_clauses =
                bench_watchlists(root, &mut rng, opts.bench_watchlist_clauses, &derivable)?;
        }
    }
    let manifest = CorpusManifest {
        seed: opts.seed,
        flavor: opts.flavor,
        problems: count,
    };
    fs::write(
        root.join("corpus.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(GenSummary {
        root: root.to_path_buf(),
        problems: count,
        watchlist_clauses,
    })
}

/// Chain length per plain family. Long enough that even a bidirectional
/// (meet-in-the-middle) search has to wade through the noise web: both the
/// forward facts and the backward goal instances sit at symbol weights that
/// rank behind all shallower decoys.
fn chain_len(family: usize) -> usize {
    10 + 2 * (family % 3)
}

/// Noise intensity ramp across a family: instance 0 is noise-free, the last
/// instances drown the symbol-count ordering.
fn noise_level(instance: usize, family_size: usize) -> usize {
    instance * 10 / family_size
}

fn plain_problem(rng: &mut ChaCha8Rng, family: usize, instance: usize, family_size: usize) -> String {
    let k = chain_len(family);
    let mut lines = Vec::new();
    let mut id = 0usize;
    let push = |lines: &mut Vec<String>, id: &mut usize, role: &str, body: String| {
        lines.push(format!("cnf(c{id}, {role}, ({body}))."));
        *id += 1;
    };
    // Noise comes first: rule clauses tie on weight, and the id tie-break
    // must not hand the chain a free pass under the baseline ordering.
    let level = noise_level(instance, family_size);
    append_noise_web(rng, &mut lines, &mut id, level);
    // The chain start constant is instance-specific so derived ground facts
    // do not match across instances (guided searches still process
    // non-matching clauses and traces keep negative examples). It is
    // skolem-named so featurization abstracts it: the chain stays learnable
    // family-wide.
    push(
        &mut lines,
        &mut id,
        "axiom",
        format!("c{family}s0(skolem_a{family}x{instance})"),
    );
    for i in 0..k {
        push(
            &mut lines,
            &mut id,
            "axiom",
            format!("~c{family}s{i}(X) | c{family}s{}(h{family}(X))", i + 1),
        );
    }
    // Ground goal: a variable here would let weight-4 negative units chain
    // backward below every decoy. Grounding it makes the backward instances
    // as deep (and as heavy) as the forward facts.
    let mut goal_term = format!("skolem_a{family}x{instance}");
    for _ in 0..k {
        goal_term = format!("h{family}({goal_term})");
    }
    push(
        &mut lines,
        &mut id,
        "negated_conjecture",
        format!("~c{family}s{k}({goal_term})"),
    );
    lines.join("\n") + "\n"
}

/// Levels at or above this get a generative decoy web; below, decoys are
/// inert facts only.
const GENERATIVE_NOISE_LEVEL: usize = 5;

/// A random ground decoy term over the global noise pools.
fn noise_term(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let mut t = format!("ec{}", rng.random_range(0..NOISE_CONSTS));
    for _ in 0..depth {
        t = format!("gf{}({t})", rng.random_range(0..NOISE_FNS));
    }
    t
}

/// Decoy axioms. Low levels get inert ground facts spanning every term
/// depth: they cost given-clause slots, put negative rows at all depths into
/// traces, and generate nothing, so the problem stays solvable. High levels
/// add a cyclic rule web whose resolvents (and rule-rule compositions)
/// explode the generated-clause count long before the chain's symbol weights
/// come up.
fn append_noise_web(rng: &mut ChaCha8Rng, lines: &mut Vec<String>, id: &mut usize, level: usize) {
    if level == 0 {
        return;
    }
    for i in 0..4 * level {
        let pred = rng.random_range(0..NOISE_PREDS);
        let term = noise_term(rng, (i * 13 + 5) % 13);
        lines.push(format!("cnf(c{id}, axiom, (nz{pred}({term})))."));
        *id += 1;
    }
    if level < GENERATIVE_NOISE_LEVEL {
        return;
    }
    let core: Vec<usize> = {
        let start = rng.random_range(0..NOISE_PREDS);
        (0..3).map(|i| (start + i * 7) % NOISE_PREDS).collect()
    };
    for s in 0..level {
        let pred = core[s % core.len()];
        lines.push(format!(
            "cnf(c{id}, axiom, (nz{pred}({})))." ,
            noise_term(rng, 0)
        ));
        *id += 1;
    }
    for _ in 0..2 * level {
        let a = core[rng.random_range(0..core.len())];
        let b = core[rng.random_range(0..core.len())];
        let f = rng.random_range(0..NOISE_FNS);
        lines.push(format!("cnf(c{id}, axiom, (~nz{a}(X) | nz{b}(gf{f}(X))))."));
        *id += 1;
    }
}

/// Variant problems: both carry the full u-chain and v-chain from shared
/// global symbols; only the bridge (and its marker fact) differs. The chains
/// are literally identical strings across the two variants.
fn variant_problem(rng: &mut ChaCha8Rng, variant_a: bool) -> String {
    let k = VARIANT_CHAIN;
    let mut lines = Vec::new();
    let mut id = 0usize;
    let push = |lines: &mut Vec<String>, id: &mut usize, role: &str, body: String| {
        lines.push(format!("cnf(c{id}, {role}, ({body}))."));
        *id += 1;
    };
    push(&mut lines, &mut id, "axiom", "vu0(w0)".to_string());
    for i in 0..k {
        push(
            &mut lines,
            &mut id,
            "axiom",
            format!("~vu{i}(X) | vu{}(hu(X))", i + 1),
        );
    }
    push(&mut lines, &mut id, "axiom", "vv0(w0)".to_string());
    for i in 0..k {
        push(
            &mut lines,
            &mut id,
            "axiom",
            format!("~vv{i}(X) | vv{}(hv(X))", i + 1),
        );
    }
    if variant_a {
        push(&mut lines, &mut id, "axiom", "mka(w0)".to_string());
        push(
            &mut lines,
            &mut id,
            "axiom",
            format!("~vu{k}(X) | ~mka(Z) | vt(gt(X))"),
        );
    } else {
        push(&mut lines, &mut id, "axiom", "mkb(w0)".to_string());
        push(
            &mut lines,
            &mut id,
            "axiom",
            format!("~vv{k}(X) | ~mkb(Z) | vt(gt(X))"),
        );
    }
    push(
        &mut lines,
        &mut id,
        "negated_conjecture",
        "~vt(Y)".to_string(),
    );
    // Inert decoys: facts over the global noise pools with no rules feeding
    // on them here, so they cost given slots but generate nothing.
    for i in 0..VARIANT_INERT_FACTS {
        let pred = rng.random_range(0..NOISE_PREDS);
        let term = noise_term(rng, (i * 7 + 3) % 13);
        push(&mut lines, &mut id, "axiom", format!("nz{pred}({term})"));
    }
    lines.join("\n") + "\n"
}

const BENCH_PREDS: usize = 250;
const BENCH_FNS: usize = 20;
const BENCH_CONSTS: usize = 20;

/// A clause generator: a small cyclic web with out-degree around 3, plus an
/// unreachable goal, so every run ends at the generated-clause limit.
fn bench_problem(rng: &mut ChaCha8Rng, derivable: &mut Vec<String>) -> String {
    let mut lines = Vec::new();
    let core: Vec<usize> = (0..5).map(|_| rng.random_range(0..BENCH_PREDS)).collect();
    let mut id = 0usize;
    let mut seeds = Vec::new();
    for s in 0..4 {
        let pred = core[s % core.len()];
        let konst = rng.random_range(0..BENCH_CONSTS);
        let term = format!("bc{konst}");
        lines.push(format!("cnf(c{id}, axiom, (bp{pred}({term})))."));
        seeds.push((pred, term));
        id += 1;
    }
    let mut rules = Vec::new();
    for _ in 0..16 {
        let a = core[rng.random_range(0..core.len())];
        let b = core[rng.random_range(0..core.len())];
        let f = rng.random_range(0..BENCH_FNS);
        lines.push(format!("cnf(c{id}, axiom, (~bp{a}(X) | bp{b}(bf{f}(X))))."));
        rules.push((a, b, f));
        id += 1;
    }
    lines.push(format!("cnf(c{id}, negated_conjecture, (~bz0(Y)))."));
    // Record a couple of depth-1/2 derivable facts for watchlist planting.
    for (pred, term) in &seeds {
        for (a, b, f) in &rules {
            if a == pred {
                let fact1 = format!("bp{b}(bf{f}({term}))");
                derivable.push(fact1.clone());
                for (a2, b2, f2) in &rules {
                    if a2 == b {
                        derivable.push(format!("bp{b2}(bf{f2}(bf{f}({term})))"));
                    }
                }
            }
        }
    }
    lines.join("\n") + "\n"
}

fn bench_term(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.4) {
        if rng.random_bool(0.25) {
            "X".to_string()
        } else {
            format!("bc{}", rng.random_range(0..BENCH_CONSTS))
        }
    } else {
        format!(
            "bf{}({})",
            rng.random_range(0..BENCH_FNS),
            bench_term(rng, depth - 1)
        )
    }
}

/// Writes `watchlists/<id>_<source>.w`: mostly random clauses over the bench
/// signature (spanning many clause codes), seasoned with clauses that early
/// derivations of the generated problems actually subsume.
fn bench_watchlists(
    root: &Path,
    rng: &mut ChaCha8Rng,
    total: usize,
    derivable: &[String],
) -> Result<usize> {
    let dir = root.join("watchlists");
    fs::create_dir_all(&dir)?;
    let lists = 8usize;
    let per_list = total / lists;
    let mut written = 0usize;
    for w in 0..lists {
        let mut text = String::new();
        for c in 0..per_list {
            let body = if !derivable.is_empty() && rng.random_bool(0.2) {
                let fact = &derivable[rng.random_range(0..derivable.len())];
                if rng.random_bool(0.5) {
                    fact.clone()
                } else {
                    // A superset clause is still subsumed by the bare fact.
                    format!(
                        "{fact} | bp{}({})",
                        rng.random_range(0..BENCH_PREDS),
                        bench_term(rng, 1)
                    )
                }
            } else {
                let lits = rng.random_range(1..=3);
                let parts: Vec<String> = (0..lits)
                    .map(|_| {
                        let neg = if rng.random_bool(0.4) { "~" } else { "" };
                        format!(
                            "{neg}bp{}({})",
                            rng.random_range(0..BENCH_PREDS),
                            bench_term(rng, 2)
                        )
                    })
                    .collect();
                parts.join(" | ")
            };
            let _ = writeln!(text, "cnf(w{w}_{c}, axiom, ({body})).");
            written += 1;
        }
        fs::write(dir.join(format!("{w:04}_bench{w}.w", w = w)), text)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hintgrind_core::tptp::{parse_problem, Signature};

    #[test]
    fn generation_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let opts = GenOptions {
            plain_families: 2,
            family_size: 4,
            variant_pairs: 2,
            ..GenOptions::default()
        };
        generate(a.path(), &opts).unwrap();
        generate(b.path(), &opts).unwrap();
        let read_all = |root: &Path| {
            let mut files: Vec<(String, String)> = fs::read_dir(root.join("problems"))
                .unwrap()
                .map(|e| {
                    let p = e.unwrap().path();
                    (
                        p.file_name().unwrap().to_string_lossy().to_string(),
                        fs::read_to_string(&p).unwrap(),
                    )
                })
                .collect();
            files.sort();
            files
        };
        assert_eq!(read_all(a.path()), read_all(b.path()));
    }

    #[test]
    fn every_generated_problem_parses() {
        let dir = tempfile::tempdir().unwrap();
        let opts = GenOptions {
            plain_families: 3,
            family_size: 6,
            variant_pairs: 3,
            ..GenOptions::default()
        };
        let summary = generate(dir.path(), &opts).unwrap();
        assert_eq!(summary.problems, 3 * 6 + 3 * 2);
        let mut sig = Signature::new();
        for entry in fs::read_dir(dir.path().join("problems")).unwrap() {
            let p = entry.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            let parsed = parse_problem(&bytes, "t", &mut sig).unwrap();
            assert!(parsed
                .clauses
                .iter()
                .any(|c| c.role == hintgrind_core::tptp::Role::NegatedConjecture));
        }
    }

    #[test]
    fn variant_chains_are_shared_strings() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = variant_problem(&mut rng, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = variant_problem(&mut rng, false);
        // Chain axioms (vu/vv rules and seeds) are identical across variants;
        // only markers and bridges differ.
        for i in 0..VARIANT_CHAIN {
            assert!(a.contains(&format!("~vu{i}(X)")));
            assert!(b.contains(&format!("~vu{i}(X)")));
            assert!(a.contains(&format!("~vv{i}(X)")));
            assert!(b.contains(&format!("~vv{i}(X)")));
        }
        assert!(a.contains("mka") && !a.contains("mkb"));
        assert!(b.contains("mkb") && !b.contains("mka"));
        assert!(a.contains("~vt(Y)") && b.contains("~vt(Y)"));
    }

    #[test]
    fn bench_flavor_writes_watchlists_spanning_many_codes() {
        let dir = tempfile::tempdir().unwrap();
        let opts = GenOptions {
            flavor: Flavor::Bench,
            bench_problems: 10,
            bench_watchlist_clauses: 800,
            ..GenOptions::default()
        };
        let summary = generate(dir.path(), &opts).unwrap();
        assert_eq!(summary.problems, 10);
        assert!(summary.watchlist_clauses >= 790);
        let mut sig = Signature::new();
        let mut codes = std::collections::HashSet::new();
        for entry in fs::read_dir(dir.path().join("watchlists")).unwrap() {
            let p = entry.unwrap().path();
            let parsed = parse_problem(&fs::read(&p).unwrap(), "w", &mut sig).unwrap();
            for pc in parsed.clauses {
                codes.insert(pc.clause.code().entries().to_vec());
            }
        }
        assert!(codes.len() >= 200, "only {} distinct codes", codes.len());
    }
}
