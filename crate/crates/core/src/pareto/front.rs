use std::cmp::Ordering;

use crate::scalar::Real;

/// Indices (ascending) of the non-dominated rows of a set of `(S_L, S_W)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontSample {
    pub indices: Vec<usize>,
}

impl FrontSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Kung sweep for two maximized objectives.
///
/// Sorts by `S_L` descending (ties by `S_W` descending) and keeps a point when
/// its `S_W` beats the running maximum. Exact duplicates of a kept point are kept.
pub fn non_dominated<T: Real>(points: &[(T, T)]) -> FrontSample {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (li, wi) = points[i];
        let (lj, wj) = points[j];
        lj.partial_cmp(&li)
            .unwrap_or(Ordering::Equal)
            .then(wj.partial_cmp(&wi).unwrap_or(Ordering::Equal))
            .then(i.cmp(&j))
    });
    let mut indices = Vec::new();
    let mut best: Option<(T, T)> = None;
    for i in order {
        let p = points[i];
        let keep = match best {
            None => true,
            Some(b) => p.1 > b.1 || p == b,
        };
        if keep {
            indices.push(i);
            if best.is_none_or(|b| p.1 > b.1) {
                best = Some(p);
            }
        }
    }
    indices.sort_unstable();
    FrontSample { indices }
}

/// Quadratic pairwise domination filter.
pub fn non_dominated_brute_force<T: Real>(points: &[(T, T)]) -> FrontSample {
    let dominates = |a: (T, T), b: (T, T)| a.0 >= b.0 && a.1 >= b.1 && (a.0 > b.0 || a.1 > b.1);
    let indices = (0..points.len())
        .filter(|&i| !points.iter().any(|&q| dominates(q, points[i])))
        .collect();
    FrontSample { indices }
}
