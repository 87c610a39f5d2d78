//! Watchlist subset selection from recorded traces: the mean proof-state
//! matrix and the Mean/Var/Corr/Rand methods.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::saturation::Trace;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("no traces to aggregate")]
    NoTraces,
    #[error("trace `{name}` header [{got}] differs from [{expected}]")]
    HeaderMismatch {
        name: String,
        expected: String,
        got: String,
    },
    #[error("cannot select {k} of {columns} watchlists")]
    KTooLarge { k: usize, columns: usize },
}

/// One row per solved problem: the mean of that search's proof-state vectors
/// over its given clauses. Columns are candidate watchlists.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanMatrix {
    pub watchlist_ids: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
    pub row_names: Vec<String>,
}

impl MeanMatrix {
    pub fn columns(&self) -> usize {
        self.watchlist_ids.len()
    }

    fn column_mean(&self, j: usize) -> f64 {
        self.rows.iter().map(|r| r[j]).sum::<f64>() / self.rows.len() as f64
    }

    fn column_variance(&self, j: usize) -> f64 {
        let mean = self.column_mean(j);
        self.rows
            .iter()
            .map(|r| {
                let d = r[j] - mean;
                d * d
            })
            .sum::<f64>()
            / self.rows.len() as f64
    }
}

/// Aggregates traces into the mean matrix. Traces with zero given clauses are
/// skipped; their names come back in the second component.
pub fn build_mean_matrix(
    traces: &[(String, Trace)],
) -> Result<(MeanMatrix, Vec<String>), SelectionError> {
    if traces.is_empty() {
        return Err(SelectionError::NoTraces);
    }
    let header = &traces[0].1.watchlist_ids;
    let mut rows = Vec::new();
    let mut row_names = Vec::new();
    let mut skipped = Vec::new();
    for (name, trace) in traces {
        if trace.watchlist_ids != *header {
            return Err(SelectionError::HeaderMismatch {
                name: name.clone(),
                expected: ids_text(header),
                got: ids_text(&trace.watchlist_ids),
            });
        }
        if trace.steps.is_empty() {
            skipped.push(name.clone());
            continue;
        }
        // Streaming mean, one pass over the steps.
        let mut mean = vec![0.0f64; header.len()];
        for (n, step) in trace.steps.iter().enumerate() {
            for (m, &x) in mean.iter_mut().zip(step.psv.iter()) {
                *m += (x - *m) / (n as f64 + 1.0);
            }
        }
        rows.push(mean);
        row_names.push(name.clone());
    }
    if rows.is_empty() {
        return Err(SelectionError::NoTraces);
    }
    Ok((
        MeanMatrix {
            watchlist_ids: header.clone(),
            rows,
            row_names,
        },
        skipped,
    ))
}

fn ids_text(ids: &[u32]) -> String {
    ids.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_k(m: &MeanMatrix, k: usize) -> Result<(), SelectionError> {
    if k > m.columns() {
        Err(SelectionError::KTooLarge {
            k,
            columns: m.columns(),
        })
    } else {
        Ok(())
    }
}

fn top_k_by(m: &MeanMatrix, k: usize, score: impl Fn(usize) -> f64) -> Vec<u32> {
    let mut order: Vec<usize> = (0..m.columns()).collect();
    order.sort_by(|&a, &b| {
        score(b)
            .total_cmp(&score(a))
            .then(m.watchlist_ids[a].cmp(&m.watchlist_ids[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|j| m.watchlist_ids[j])
        .collect()
}

/// The `k` columns with the highest means, descending, ties by lower id.
pub fn select_mean(m: &MeanMatrix, k: usize) -> Result<Vec<u32>, SelectionError> {
    check_k(m, k)?;
    Ok(top_k_by(m, k, |j| m.column_mean(j)))
}

/// The `k` columns with the highest population variance.
pub fn select_var(m: &MeanMatrix, k: usize) -> Result<Vec<u32>, SelectionError> {
    check_k(m, k)?;
    Ok(top_k_by(m, k, |j| m.column_variance(j)))
}

fn pearson(m: &MeanMatrix, a: usize, b: usize) -> f64 {
    let n = m.rows.len() as f64;
    let ma = m.column_mean(a);
    let mb = m.column_mean(b);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for r in &m.rows {
        cov += (r[a] - ma) * (r[b] - mb);
        va += (r[a] - ma) * (r[a] - ma);
        vb += (r[b] - mb) * (r[b] - mb);
    }
    if va == 0.0 || vb == 0.0 {
        // Zero-variance columns correlate with nothing.
        return 0.0;
    }
    cov / n / ((va / n).sqrt() * (vb / n).sqrt())
}

/// Greedy max-min decorrelation: seed with the highest-mean column, then
/// repeatedly add the column minimizing the maximum absolute Pearson
/// correlation against the already-selected set. Zero-variance columns are
/// considered only when nothing else is left.
pub fn select_corr(m: &MeanMatrix, k: usize) -> Result<Vec<u32>, SelectionError> {
    check_k(m, k)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let usable: Vec<usize> = (0..m.columns())
        .filter(|&j| m.column_variance(j) > 0.0)
        .collect();
    let mut pool = if usable.is_empty() {
        (0..m.columns()).collect::<Vec<_>>()
    } else {
        usable
    };
    let seed = pool
        .iter()
        .copied()
        .max_by(|&a, &b| {
            m.column_mean(a)
                .total_cmp(&m.column_mean(b))
                .then(m.watchlist_ids[b].cmp(&m.watchlist_ids[a]))
        })
        .expect("pool is non-empty");
    let mut selected = vec![seed];
    pool.retain(|&j| j != seed);
    while selected.len() < k {
        if pool.is_empty() {
            // Fewer decorrelatable columns than k: fall back to the
            // zero-variance leftovers by ascending id.
            let mut leftovers: Vec<usize> = (0..m.columns())
                .filter(|j| !selected.contains(j))
                .collect();
            leftovers.sort_by_key(|&j| m.watchlist_ids[j]);
            selected.extend(leftovers.into_iter().take(k - selected.len()));
            break;
        }
        let next = pool
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let worst = |j: usize| {
                    selected
                        .iter()
                        .map(|&s| pearson(m, j, s).abs())
                        .fold(0.0f64, f64::max)
                };
                worst(a)
                    .total_cmp(&worst(b))
                    .then(m.watchlist_ids[a].cmp(&m.watchlist_ids[b]))
            })
            .expect("pool is non-empty");
        selected.push(next);
        pool.retain(|&j| j != next);
    }
    Ok(selected.into_iter().map(|j| m.watchlist_ids[j]).collect())
}

/// Uniform sample of `k` columns without replacement, reproducible from the
/// seed.
pub fn select_rand(m: &MeanMatrix, k: usize, seed: u64) -> Result<Vec<u32>, SelectionError> {
    check_k(m, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, m.columns(), k);
    Ok(picked.iter().map(|j| m.watchlist_ids[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::ClauseId;
    use crate::saturation::TraceStep;

    fn matrix(ids: &[u32], rows: &[&[f64]]) -> MeanMatrix {
        MeanMatrix {
            watchlist_ids: ids.to_vec(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            row_names: (0..rows.len()).map(|i| format!("r{i}")).collect(),
        }
    }

    fn trace(ids: &[u32], steps: &[&[f64]]) -> Trace {
        Trace {
            watchlist_ids: ids.to_vec(),
            steps: steps
                .iter()
                .enumerate()
                .map(|(i, psv)| TraceStep {
                    given: ClauseId(i as u32),
                    positive: false,
                    psv: psv.to_vec(),
                })
                .collect(),
        }
    }

    #[test]
    fn mean_matrix_row_arithmetic() {
        let t = trace(&[0, 1], &[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let (m, skipped) = build_mean_matrix(&[("p".to_string(), t)]).unwrap();
        assert!(skipped.is_empty());
        assert!((m.rows[0][0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.rows[0][1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_set_is_an_error() {
        assert_eq!(build_mean_matrix(&[]).unwrap_err(), SelectionError::NoTraces);
    }

    #[test]
    fn header_mismatch_names_both_headers() {
        let a = trace(&[0, 1], &[&[0.0, 0.0]]);
        let b = trace(&[0, 2], &[&[0.0, 0.0]]);
        let err =
            build_mean_matrix(&[("a".to_string(), a), ("b".to_string(), b)]).unwrap_err();
        match err {
            SelectionError::HeaderMismatch { expected, got, name } => {
                assert_eq!(name, "b");
                assert_eq!(expected, "0 1");
                assert_eq!(got, "0 2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_step_traces_are_skipped_with_a_warning() {
        let a = trace(&[0], &[&[0.5]]);
        let b = trace(&[0], &[]);
        let (m, skipped) =
            build_mean_matrix(&[("a".to_string(), a), ("b".to_string(), b)]).unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(skipped, vec!["b".to_string()]);
    }

    #[test]
    fn streaming_mean_matches_two_pass_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let cols = rng.random_range(1..6);
            let steps = rng.random_range(1..200);
            let ids: Vec<u32> = (0..cols as u32).collect();
            let data: Vec<Vec<f64>> = (0..steps)
                .map(|_| (0..cols).map(|_| rng.random_range(0..1000) as f64 / 1000.0).collect())
                .collect();
            let t = trace(
                &ids,
                &data.iter().map(Vec::as_slice).collect::<Vec<_>>(),
            );
            let (m, _) = build_mean_matrix(&[("x".to_string(), t)]).unwrap();
            for j in 0..cols {
                let two_pass: f64 =
                    data.iter().map(|r| r[j]).sum::<f64>() / steps as f64;
                assert!((m.rows[0][j] - two_pass).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_selection_examples() {
        let m = matrix(&[0, 1], &[&[0.9, 0.1], &[0.7, 0.3]]);
        assert_eq!(select_mean(&m, 1).unwrap(), vec![0]);
        assert_eq!(select_mean(&m, 2).unwrap(), vec![0, 1]);
        assert!(select_mean(&m, 3).is_err());
    }

    #[test]
    fn var_selection_examples() {
        // constant column ranks last; {0,1} beats {0.5,0.5}
        let m = matrix(&[0, 1, 2], &[&[0.4, 0.0, 0.5], &[0.4, 1.0, 0.5]]);
        let picked = select_var(&m, 2).unwrap();
        assert_eq!(picked[0], 1);
        // Both remaining columns are constant; ties go to the lower id and
        // the zero-variance columns rank last.
        let all = select_var(&m, 3).unwrap();
        assert_eq!(all, vec![1, 0, 2]);
    }

    #[test]
    fn sort_oracle_agreement_on_random_matrices() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..100 {
            let cols = rng.random_range(1..10);
            let rows = rng.random_range(1..8);
            let ids: Vec<u32> = (0..cols as u32).collect();
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0..=4) as f64 / 4.0).collect())
                .collect();
            let m = MeanMatrix {
                watchlist_ids: ids,
                rows: data,
                row_names: vec![String::new(); rows],
            };
            let k = rng.random_range(1..=cols);
            // Full-sort oracles.
            let oracle = |scores: Vec<f64>| -> Vec<u32> {
                let mut idx: Vec<usize> = (0..cols).collect();
                idx.sort_by(|&a, &b| {
                    scores[b]
                        .total_cmp(&scores[a])
                        .then(m.watchlist_ids[a].cmp(&m.watchlist_ids[b]))
                });
                idx.into_iter().take(k).map(|j| m.watchlist_ids[j]).collect()
            };
            let means: Vec<f64> = (0..cols).map(|j| m.column_mean(j)).collect();
            let vars: Vec<f64> = (0..cols).map(|j| m.column_variance(j)).collect();
            assert_eq!(select_mean(&m, k).unwrap(), oracle(means));
            assert_eq!(select_var(&m, k).unwrap(), oracle(vars));
        }
    }

    #[test]
    fn corr_prefers_the_independent_column_over_a_duplicate() {
        // Columns 0 and 1 identical; column 2 independent.
        let m = matrix(
            &[0, 1, 2],
            &[
                &[0.9, 0.9, 0.1],
                &[0.5, 0.5, 0.9],
                &[0.7, 0.7, 0.2],
                &[0.3, 0.3, 0.8],
            ],
        );
        let picked = select_corr(&m, 2).unwrap();
        assert_eq!(picked.len(), 2);
        assert!(picked.contains(&2), "{picked:?}");
        assert!(!(picked.contains(&0) && picked.contains(&1)), "{picked:?}");
    }

    #[test]
    fn corr_seeds_with_the_highest_mean_column() {
        let m = matrix(&[0, 1, 2], &[&[0.1, 0.8, 0.4], &[0.3, 0.6, 0.2]]);
        assert_eq!(select_corr(&m, 1).unwrap(), vec![1]);
    }

    #[test]
    fn corr_selection_never_picks_zero_variance_when_avoidable() {
        let m = matrix(
            &[0, 1, 2, 3],
            &[&[0.5, 0.1, 0.9, 0.5], &[0.5, 0.9, 0.1, 0.6], &[0.5, 0.4, 0.3, 0.2]],
        );
        // column 0 constant
        for k in 1..=3 {
            let picked = select_corr(&m, k).unwrap();
            assert!(!picked.contains(&0), "k={k} picked {picked:?}");
        }
        // k = 4 must fall back to it
        assert!(select_corr(&m, 4).unwrap().contains(&0));
    }

    #[test]
    fn corr_beats_planted_duplicates_on_random_matrices() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(123);
        for _ in 0..50 {
            let cols = rng.random_range(4..=12);
            let rows = 12;
            let mut data: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| rng.random_range(0..=10) as f64 / 10.0)
                        .collect()
                })
                .collect();
            // Plant a duplicate pair in columns 0 and 1.
            for r in data.iter_mut() {
                r[1] = r[0];
            }
            let m = MeanMatrix {
                watchlist_ids: (0..cols as u32).collect(),
                rows: data,
                row_names: vec![String::new(); rows],
            };
            let k = 3.min(cols);
            let picked = select_corr(&m, k).unwrap();
            let idx_of = |id: u32| m.watchlist_ids.iter().position(|&x| x == id).unwrap();
            let max_abs_corr = |ids: &[u32]| -> f64 {
                let mut worst = 0.0f64;
                for i in 0..ids.len() {
                    for j in (i + 1)..ids.len() {
                        worst = worst.max(pearson(&m, idx_of(ids[i]), idx_of(ids[j])).abs());
                    }
                }
                worst
            };
            // Exhaustive duplicate-pairing oracle: any selection containing
            // both duplicates has pairwise |corr| = 1.
            let mut with_duplicates = picked.clone();
            if !with_duplicates.contains(&0) {
                with_duplicates[k - 1] = 0;
            }
            if !with_duplicates.contains(&1) {
                with_duplicates[if k >= 2 { k - 2 } else { 0 }] = 1;
            }
            assert!(max_abs_corr(&picked) <= max_abs_corr(&with_duplicates) + 1e-9);
            assert!(!(picked.contains(&0) && picked.contains(&1)));
        }
    }

    #[test]
    fn rand_selection_is_seeded_and_complete() {
        let m = matrix(&[3, 5, 9, 11], &[&[0.1, 0.2, 0.3, 0.4]]);
        let a = select_rand(&m, 2, 7).unwrap();
        let b = select_rand(&m, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        let full = select_rand(&m, 4, 99).unwrap();
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![3, 5, 9, 11]);
    }

    #[test]
    fn rand_selection_is_uniform_by_chi_square() {
        let m = matrix(
            &(0..10).collect::<Vec<u32>>(),
            &[&[0.0; 10][..], &[1.0; 10][..]],
        );
        let mut counts = [0u32; 10];
        for seed in 0..10_000u64 {
            let picked = select_rand(&m, 1, seed).unwrap();
            counts[picked[0] as usize] += 1;
        }
        let expected = 1000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = f64::from(c) - expected;
                d * d / expected
            })
            .sum();
        // 9 degrees of freedom, alpha = 0.001 critical value.
        assert!(chi2 < 27.877, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn all_methods_return_k_distinct_ids() {
        let m = matrix(
            &[0, 1, 2, 3, 4],
            &[&[0.1, 0.5, 0.5, 0.9, 0.2], &[0.3, 0.5, 0.1, 0.8, 0.4]],
        );
        for k in 1..=5 {
            for ids in [
                select_mean(&m, k).unwrap(),
                select_var(&m, k).unwrap(),
                select_corr(&m, k).unwrap(),
                select_rand(&m, k, 1).unwrap(),
            ] {
                assert_eq!(ids.len(), k);
                let mut dedup = ids.clone();
                dedup.sort_unstable();
                dedup.dedup();
                assert_eq!(dedup.len(), k);
            }
        }
    }
}
