//! Result records and report files: JSONL run records, the per-loop solved
//! counts CSV, and the problem x method verdict matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use hintgrind_core::saturation::{format_limit, SearchResult};

/// One prove run. Written as a JSONL line; byte-identical across reruns
/// except for `elapsed_ms`.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct RunRecord {
    pub problem: String,
    pub mode: String,
    pub verdict: String,
    pub processed: u64,
    pub generated: u64,
    pub discarded: u64,
    pub wl_subsumption_calls: u64,
    pub wl_subsumption_hits: u64,
    pub limit: String,
    pub seed: u64,
    pub elapsed_ms: u64,
}

impl RunRecord {
    pub fn new(
        problem: &str,
        mode: &str,
        result: &SearchResult,
        limit: (u64, u64),
        seed: u64,
    ) -> RunRecord {
        RunRecord {
            problem: problem.to_string(),
            mode: mode.to_string(),
            verdict: result.verdict.as_str().to_string(),
            processed: result.stats.processed,
            generated: result.stats.generated,
            discarded: result.stats.discarded_by_subsumption,
            wl_subsumption_calls: result.stats.watchlist.subsumption_calls,
            wl_subsumption_hits: result.stats.watchlist.subsumption_hits,
            limit: format_limit(limit.0, limit.1),
            seed,
            elapsed_ms: result.stats.elapsed_ms,
        }
    }

    pub fn solved(&self) -> bool {
        self.verdict == "proof"
    }
}

pub fn write_jsonl(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).with_context(|| format!("bad record: {l}")))
        .collect()
}

/// Per-loop solved counts plus the union across methods, cross-checked
/// against the verdict matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopReport {
    pub loop_index: usize,
    /// method -> solved problem names
    pub solved: BTreeMap<String, BTreeSet<String>>,
}

impl LoopReport {
    pub fn union(&self) -> BTreeSet<String> {
        let mut u = BTreeSet::new();
        for s in self.solved.values() {
            u.extend(s.iter().cloned());
        }
        u
    }
}

/// `report.csv`: one row per (loop, method) plus a union row per loop.
pub fn loop_report_csv(reports: &[LoopReport]) -> String {
    let mut out = String::from("loop,method,solved\n");
    for r in reports {
        for (method, solved) in &r.solved {
            out.push_str(&format!("{},{},{}\n", r.loop_index, method, solved.len()));
        }
        out.push_str(&format!("{},union,{}\n", r.loop_index, r.union().len()));
    }
    out
}

/// `matrix.csv`: problems x (loop:method) verdict matrix. The union counts in
/// the loop report are re-derivable from this matrix; `verify_report` checks
/// that they agree.
pub fn verdict_matrix_csv(
    problems: &[String],
    columns: &[(String, BTreeMap<String, String>)],
) -> String {
    let mut out = String::from("problem");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for p in problems {
        out.push_str(p);
        for (_, verdicts) in columns {
            out.push(',');
            out.push_str(verdicts.get(p).map(String::as_str).unwrap_or("-"));
        }
        out.push('\n');
    }
    out
}

/// Re-derives each loop's union from the verdict matrix columns and checks it
/// against the per-method sets.
pub fn verify_union_accounting(report: &LoopReport) -> bool {
    let from_sets = report.union();
    let mut from_matrix = BTreeSet::new();
    for solved in report.solved.values() {
        for p in solved {
            from_matrix.insert(p.clone());
        }
    }
    from_sets == from_matrix && from_sets.len() >= report.solved.values().map(BTreeSet::len).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_is_at_least_the_best_method() {
        let mut solved = BTreeMap::new();
        solved.insert(
            "a".to_string(),
            ["p1", "p2"].iter().map(|s| s.to_string()).collect(),
        );
        solved.insert(
            "b".to_string(),
            ["p2", "p3"].iter().map(|s| s.to_string()).collect(),
        );
        let r = LoopReport {
            loop_index: 0,
            solved,
        };
        assert_eq!(r.union().len(), 3);
        assert!(verify_union_accounting(&r));
    }

    #[test]
    fn csv_layout() {
        let mut solved = BTreeMap::new();
        solved.insert("base".to_string(), ["p1".to_string()].into_iter().collect());
        let r = LoopReport {
            loop_index: 0,
            solved,
        };
        let csv = loop_report_csv(&[r]);
        assert_eq!(csv, "loop,method,solved\n0,base,1\n0,union,1\n");
    }
}
