//! Latency screening followed by a seeded uniform choice among the
//! eligible users.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::latency::Mode;

/// What the server knows about a user at round start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    /// One-round latency with the transmission budget applied.
    pub latency_s: f64,
    pub sl_required: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: BTreeSet<usize>,
    pub fl_set: BTreeSet<usize>,
    pub sl_set: BTreeSet<usize>,
}

impl SelectionResult {
    pub fn mode_of(&self, id: usize) -> Option<Mode> {
        if self.fl_set.contains(&id) {
            Some(Mode::Fl)
        } else if self.sl_set.contains(&id) {
            Some(Mode::Sl)
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Keeps users whose latency is within `tau_max_s`, then picks
/// `min(select_k, eligible)` of them uniformly at random.
///
/// One priority key is drawn per candidate, in candidate order, whether or
/// not the candidate is eligible; the lowest keys win. Two calls that share
/// a stream therefore pick nested sets as `tau_max_s` grows, until `select_k`
/// binds.
pub fn select_users<R: Rng + ?Sized>(
    candidates: &[Candidate],
    tau_max_s: f64,
    select_k: usize,
    rng: &mut R,
) -> SelectionResult {
    let keys: Vec<f64> = candidates.iter().map(|_| rng.random::<f64>()).collect();
    select_with_priorities(candidates, &keys, tau_max_s, select_k)
}

/// Same rule with caller-supplied priority keys (one per candidate).
pub fn select_with_priorities(
    candidates: &[Candidate],
    priorities: &[f64],
    tau_max_s: f64,
    select_k: usize,
) -> SelectionResult {
    assert_eq!(candidates.len(), priorities.len(), "one priority per candidate");
    let mut eligible: Vec<(f64, usize, bool)> = candidates
        .iter()
        .zip(priorities)
        .filter(|(c, _)| c.latency_s.is_finite() && c.latency_s <= tau_max_s)
        .map(|(c, &p)| (p, c.id, c.sl_required))
        .collect();
    eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = SelectionResult::default();
    for &(_, id, sl) in eligible.iter().take(select_k) {
        out.selected.insert(id);
        if sl {
            out.sl_set.insert(id);
        } else {
            out.fl_set.insert(id);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_substream, Domain};

    fn candidates(lat: &[f64]) -> Vec<Candidate> {
        lat.iter()
            .enumerate()
            .map(|(id, &latency_s)| Candidate { id, latency_s, sl_required: id % 2 == 1 })
            .collect()
    }

    #[test]
    fn everyone_when_all_eligible() {
        let c = candidates(&[1.0, 2.0, 3.0, 4.0]);
        let s = select_users(&c, 10.0, 4, &mut rng_substream(0, Domain::Selection, 0, 0));
        assert_eq!(s.selected.len(), 4);
        assert_eq!(s.fl_set, [0, 2].into_iter().collect());
        assert_eq!(s.sl_set, [1, 3].into_iter().collect());
    }

    #[test]
    fn zero_budget_selects_nobody() {
        let c = candidates(&[0.5, 1.0, f64::INFINITY]);
        let s = select_users(&c, 0.0, 3, &mut rng_substream(0, Domain::Selection, 0, 0));
        assert!(s.is_empty());
    }

    #[test]
    fn caps_at_select_k() {
        let c = candidates(&[1.0; 30]);
        let s = select_users(&c, 9.0, 10, &mut rng_substream(4, Domain::Selection, 0, 0));
        assert_eq!(s.selected.len(), 10);
        assert!(s.fl_set.is_disjoint(&s.sl_set));
        assert_eq!(s.fl_set.len() + s.sl_set.len(), 10);
    }

    #[test]
    fn nested_when_not_saturated() {
        let c = candidates(&[1.0, 5.0, 9.0, 2.0, 7.0, 12.0]);
        let keys = [0.3, 0.1, 0.5, 0.9, 0.2, 0.4];
        let small = select_with_priorities(&c, &keys, 5.0, 6);
        let large = select_with_priorities(&c, &keys, 9.0, 6);
        assert!(small.selected.is_subset(&large.selected));
    }

    #[test]
    fn raising_tau_never_shrinks_selection_count() {
        let lat: Vec<f64> = (0..30).map(|i| i as f64 * 0.7).collect();
        let c = candidates(&lat);
        let mut prev = 0;
        for tau in [0.0, 3.0, 6.0, 9.0, 12.0, 30.0] {
            let n = select_users(&c, tau, 10, &mut rng_substream(1, Domain::Selection, 0, 0)).selected.len();
            assert!(n >= prev);
            prev = n;
        }
        assert_eq!(prev, 10);
    }
}
