//! Multi-watchlist progress tracking: completion ratios, dynamic relevance,
//! and the watchlist priority function.
//!
//! A generated clause *matches* watchlist `W_i` when it subsumes some clause
//! of `W_i`. Each watchlist clause counts at most once toward progress, no
//! matter how many generated clauses match it. The completion ratio
//! `c_i = progress(W_i) / |W_i|` measures how much of `W_i` has been matched;
//! the vector of all ratios is the proof-state vector.

use thiserror::Error;

use crate::indexing::{IndexMode, PruneLayout, WatchlistIndex};
use crate::logic::Clause;

/// Priority assigned to clauses that match no watchlist. Matching clauses get
/// a strictly better (smaller) value.
pub const NO_MATCH_PRIORITY: u32 = 1000;

/// Relevance is quantized to this many priority levels below
/// [`NO_MATCH_PRIORITY`].
pub const RELEVANCE_LEVELS: u32 = 1000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum WatchlistError {
    #[error("hit refers to unknown watchlist {watchlist}")]
    UnknownWatchlist { watchlist: u32 },
    #[error("hit refers to clause {clause} outside watchlist {watchlist}")]
    UnknownClause { watchlist: u32, clause: u32 },
}

/// One loaded watchlist: the clause set of a previously found proof.
#[derive(Clone, Debug)]
pub struct Watchlist {
    /// Position in the global ordering.
    pub id: u32,
    /// Originating proof name.
    pub source: String,
    pub clauses: Vec<Clause>,
}

impl Watchlist {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// File name under the watchlist directory layout:
    /// `<zero-padded id>_<source>.w`.
    pub fn file_name(&self) -> String {
        format!("{:04}_{}.w", self.id, self.source)
    }
}

/// The set of watchlists loaded for one search, in id order.
#[derive(Clone, Debug, Default)]
pub struct WatchlistSet {
    pub lists: Vec<Watchlist>,
}

impl WatchlistSet {
    pub fn new(lists: Vec<Watchlist>) -> WatchlistSet {
        WatchlistSet { lists }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Inserts every watchlist clause and freezes the index. Stored ids are
    /// `(position in this set, clause position in the list)`.
    pub fn build_index(&self, mode: IndexMode, layout: PruneLayout) -> WatchlistIndex {
        let mut idx = WatchlistIndex::new(mode, layout);
        for (w, wl) in self.lists.iter().enumerate() {
            for (c, clause) in wl.clauses.iter().enumerate() {
                idx.insert(clause, w as u32, c as u32);
            }
        }
        idx.freeze();
        idx
    }
}

/// Per-watchlist matched sets. Progress is monotone over a search.
#[derive(Clone, Debug)]
pub struct WatchlistState {
    matched: Vec<Box<[bool]>>,
    progress: Vec<u32>,
}

impl WatchlistState {
    pub fn for_set(set: &WatchlistSet) -> WatchlistState {
        WatchlistState {
            matched: set
                .lists
                .iter()
                .map(|w| vec![false; w.len()].into_boxed_slice())
                .collect(),
            progress: vec![0; set.len()],
        }
    }

    pub fn from_sizes(sizes: &[usize]) -> WatchlistState {
        WatchlistState {
            matched: sizes.iter().map(|&n| vec![false; n].into_boxed_slice()).collect(),
            progress: vec![0; sizes.len()],
        }
    }

    pub fn watchlist_count(&self) -> usize {
        self.matched.len()
    }

    pub fn progress(&self, watchlist: u32) -> u32 {
        self.progress[watchlist as usize]
    }

    pub fn size(&self, watchlist: u32) -> usize {
        self.matched[watchlist as usize].len()
    }

    pub fn ratio(&self, watchlist: u32) -> f64 {
        let size = self.size(watchlist);
        if size == 0 {
            0.0
        } else {
            f64::from(self.progress(watchlist)) / size as f64
        }
    }

    /// Marks each `(watchlist, clause)` hit as matched. A watchlist clause
    /// counts at most once no matter how many generated clauses match it.
    pub fn record_matches(&mut self, hits: &[(u32, u32)]) -> Result<(), WatchlistError> {
        for &(w, c) in hits {
            let list = self
                .matched
                .get_mut(w as usize)
                .ok_or(WatchlistError::UnknownWatchlist { watchlist: w })?;
            let slot = list
                .get_mut(c as usize)
                .ok_or(WatchlistError::UnknownClause {
                    watchlist: w,
                    clause: c,
                })?;
            if !*slot {
                *slot = true;
                self.progress[w as usize] += 1;
            }
        }
        Ok(())
    }

    /// The proof-state vector: completion ratios in watchlist order.
    pub fn completion_ratios(&self) -> Vec<f64> {
        (0..self.matched.len() as u32).map(|w| self.ratio(w)).collect()
    }
}

/// Maximum completion ratio over the distinct watchlists in `hits`, computed
/// from the state *before* the clause's own hits are recorded. `None` when
/// the clause matches nothing.
pub fn relevance(state: &WatchlistState, hits: &[(u32, u32)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &(w, _) in hits {
        let r = state.ratio(w);
        best = Some(match best {
            Some(b) if b >= r => b,
            _ => r,
        });
    }
    best
}

/// Priority class for a clause with the given relevance. Any matching clause
/// beats any non-matching clause; among matching clauses, higher relevance
/// means a numerically lower (better) class. 0 is the best priority.
pub fn watchlist_priority(relevance: Option<f64>) -> u32 {
    match relevance {
        None => NO_MATCH_PRIORITY,
        Some(r) => {
            let r = r.clamp(0.0, 1.0);
            (((1.0 - r) * f64::from(RELEVANCE_LEVELS)).floor() as u32).min(RELEVANCE_LEVELS - 1)
        }
    }
}

/// Rounds a ratio to the 3-decimal precision used by trace files, so values
/// computed in-search and values re-read from traces coincide.
pub fn round3(r: f64) -> f64 {
    (r * 1000.0).round() / 1000.0
}
