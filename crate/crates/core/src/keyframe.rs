//! Greedy keyframe extraction from an overlap matrix:
//! drop isolated frames, take the seed frame with the most well-overlapping
//! neighbors, then prune frames redundant with an earlier keeper.

use serde::{Deserialize, Serialize};

use crate::covisibility::OverlapMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyframeParams {
    /// Cut-off: a frame survives only if its best overlap exceeds this.
    pub eta: f64,
    /// Minimum overlap for a neighbor to count toward a seed's cover set.
    pub tau_o: f64,
    /// Redundancy threshold for pruning.
    pub rho: f64,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            tau_o: 0.2,
            rho: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStep {
    Validity,
    Cover,
    Redundancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDecision {
    pub frame: usize,
    pub step: SelectionStep,
    pub kept: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeSelection {
    pub params: KeyframeParams,
    pub valid: Vec<usize>,
    pub seed: Option<usize>,
    pub cover_set: Vec<usize>,
    /// Final keyframes, ascending. Empty means the caller should fall back.
    pub keyframes: Vec<usize>,
    pub trace: Vec<FrameDecision>,
}

fn best_other(o: &OverlapMatrix, i: usize) -> Option<(usize, f64)> {
    (0..o.len())
        .filter(|&j| j != i)
        .map(|j| (j, o.get(i, j)))
        .fold(None, |acc, (j, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((j, v)),
        })
}

/// `{ i | max_{j≠i} O[i][j] > eta }`, ascending.
pub fn validity_filter(o: &OverlapMatrix, eta: f64) -> Vec<usize> {
    (0..o.len())
        .filter(|&i| best_other(o, i).is_some_and(|(_, v)| v > eta))
        .collect()
}

/// Cover count of `i`: frames `j` in `valid` with `O[i][j] >= tau_o` (`j = i` included).
fn cover_count(o: &OverlapMatrix, valid: &[usize], i: usize, tau_o: f64) -> usize {
    valid.iter().filter(|&&j| o.get(i, j) >= tau_o).count()
}

/// Valid frame with the largest cover count; ties go to the lowest index.
pub fn longest_cover_seed(o: &OverlapMatrix, valid: &[usize], tau_o: f64) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for &i in valid {
        let c = cover_count(o, valid, i, tau_o);
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i)
}

/// Seed plus its valid neighbors with `O[seed][j] >= tau_o`, ascending.
pub fn cover_set(o: &OverlapMatrix, valid: &[usize], seed: usize, tau_o: f64) -> Vec<usize> {
    let mut out: Vec<usize> = valid
        .iter()
        .copied()
        .filter(|&j| j == seed || o.get(seed, j) >= tau_o)
        .collect();
    out.sort_unstable();
    out
}

/// Walks `candidates` in order and keeps a frame only if its bidirectional
/// overlap with every earlier keeper stays below `rho`.
pub fn prune_redundancy(o: &OverlapMatrix, candidates: &[usize], rho: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &j in candidates {
        if kept.iter().all(|&k| o.get(j, k).max(o.get(k, j)) < rho) {
            kept.push(j);
        }
    }
    kept
}

pub fn select_keyframes(o: &OverlapMatrix, params: &KeyframeParams) -> KeyframeSelection {
    let n = o.len();
    let mut trace = Vec::new();
    if n == 1 {
        trace.push(FrameDecision {
            frame: 0,
            step: SelectionStep::Validity,
            kept: true,
            reason: "single-frame clip".into(),
        });
        return KeyframeSelection {
            params: *params,
            valid: vec![0],
            seed: Some(0),
            cover_set: vec![0],
            keyframes: vec![0],
            trace,
        };
    }

    let valid = validity_filter(o, params.eta);
    for i in 0..n {
        let best = best_other(o, i);
        let kept = valid.binary_search(&i).is_ok();
        let reason = match best {
            Some((j, v)) if kept => {
                format!("max overlap {v:.3} (with frame {j}) > eta {}", params.eta)
            }
            Some((j, v)) => format!("max overlap {v:.3} (with frame {j}) <= eta {}", params.eta),
            None => "no other frames".into(),
        };
        trace.push(FrameDecision {
            frame: i,
            step: SelectionStep::Validity,
            kept,
            reason,
        });
    }

    let Some(seed) = longest_cover_seed(o, &valid, params.tau_o) else {
        return KeyframeSelection {
            params: *params,
            valid,
            seed: None,
            cover_set: Vec::new(),
            keyframes: Vec::new(),
            trace,
        };
    };
    let cover = cover_set(o, &valid, seed, params.tau_o);
    let seed_count = cover_count(o, &valid, seed, params.tau_o);
    for &i in &valid {
        let kept = cover.binary_search(&i).is_ok();
        let reason = if i == seed {
            format!("seed: covers {seed_count} frames at tau {}", params.tau_o)
        } else if kept {
            format!(
                "O[{seed}][{i}] = {:.3} >= tau {}",
                o.get(seed, i),
                params.tau_o
            )
        } else {
            format!(
                "O[{seed}][{i}] = {:.3} < tau {}",
                o.get(seed, i),
                params.tau_o
            )
        };
        trace.push(FrameDecision {
            frame: i,
            step: SelectionStep::Cover,
            kept,
            reason,
        });
    }

    let keyframes = prune_redundancy(o, &cover, params.rho);
    for &j in &cover {
        let kept = keyframes.binary_search(&j).is_ok();
        let reason = if kept {
            format!("below rho {} against all earlier keepers", params.rho)
        } else {
            let (k, v) = keyframes
                .iter()
                .filter(|&&k| k < j)
                .map(|&k| (k, o.get(j, k).max(o.get(k, j))))
                .find(|&(_, v)| v >= params.rho)
                .unwrap_or((j, f64::NAN));
            format!(
                "redundant with frame {k} (bidirectional max {v:.3} >= rho {})",
                params.rho
            )
        };
        trace.push(FrameDecision {
            frame: j,
            step: SelectionStep::Redundancy,
            kept,
            reason,
        });
    }

    KeyframeSelection {
        params: *params,
        valid,
        seed: Some(seed),
        cover_set: cover,
        keyframes,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> OverlapMatrix {
        OverlapMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn overlap_exactly_eta_is_discarded() {
        let o = m(&[&[1.0, 0.1, 0.0], &[0.1, 1.0, 0.5], &[0.0, 0.5, 1.0]]);
        assert_eq!(validity_filter(&o, 0.1), vec![1, 2]);
    }

    #[test]
    fn isolated_and_fully_overlapping() {
        let zeros = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(validity_filter(&zeros, 0.1).is_empty());
        assert!(select_keyframes(&zeros, &KeyframeParams::default())
            .keyframes
            .is_empty());
        let ones = m(&[&[1.0; 3], &[1.0; 3], &[1.0; 3]]);
        assert_eq!(validity_filter(&ones, 0.1), vec![0, 1, 2]);
    }

    #[test]
    fn three_neighbors_beat_two() {
        // frame 1 covers {0, 2, 3} plus itself; frame 4 covers {3, 5}.
        let o = m(&[
            &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0],
            &[0.5, 1.0, 0.4, 0.3, 0.0, 0.0],
            &[0.0, 0.4, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.3, 0.0, 1.0, 0.3, 0.0],
            &[0.0, 0.0, 0.0, 0.3, 1.0, 0.3],
            &[0.0, 0.0, 0.0, 0.0, 0.3, 1.0],
        ]);
        let valid = validity_filter(&o, 0.1);
        assert_eq!(longest_cover_seed(&o, &valid, 0.2), Some(1));
        assert_eq!(longest_cover_seed(&o, &[4], 0.2), Some(4));
        assert_eq!(longest_cover_seed(&o, &[], 0.2), None);
    }

    #[test]
    fn bidirectional_redundancy_prunes() {
        let o = m(&[&[1.0, 0.2, 0.1], &[0.75, 1.0, 0.3], &[0.1, 0.3, 1.0]]);
        assert_eq!(prune_redundancy(&o, &[0, 1, 2], 0.7), vec![0, 2]);
        // nothing below 1.0 is pruned at rho = 1
        assert_eq!(prune_redundancy(&o, &[0, 1, 2], 1.0), vec![0, 1, 2]);
    }

    #[test]
    fn single_frame_selects_itself() {
        let o = m(&[&[1.0]]);
        assert_eq!(
            select_keyframes(&o, &KeyframeParams::default()).keyframes,
            vec![0]
        );
    }

    #[test]
    fn trace_records_every_step() {
        let o = m(&[&[1.0, 0.8, 0.05], &[0.8, 1.0, 0.05], &[0.05, 0.05, 1.0]]);
        let sel = select_keyframes(&o, &KeyframeParams::default());
        assert_eq!(sel.keyframes, vec![0]);
        let validity: Vec<_> = sel
            .trace
            .iter()
            .filter(|d| d.step == SelectionStep::Validity)
            .collect();
        assert_eq!(validity.len(), 3);
        assert!(!validity[2].kept);
        let pruned = sel
            .trace
            .iter()
            .find(|d| d.step == SelectionStep::Redundancy && d.frame == 1)
            .unwrap();
        assert!(
            !pruned.kept && pruned.reason.contains("frame 0"),
            "{}",
            pruned.reason
        );
    }
}
