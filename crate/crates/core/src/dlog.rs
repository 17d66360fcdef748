//! Bounded discrete logarithm by baby-step/giant-step.

use alloc::collections::BTreeMap;

use crate::group::{GroupScalar, PrimeGroup};

/// Precomputed table for recovering `v` from `g^v` with `|v| <= bound`.
///
/// Built once per `(group, bound)`; lookups are read-only so one table can be
/// shared between threads.
#[derive(Debug, Clone)]
pub struct DlogTable<G: PrimeGroup> {
    bound: i64,
    /// Baby-step count `m = ceil(sqrt(2 * bound + 1))`.
    step: u64,
    baby: BTreeMap<u64, u32>,
    /// `g^-m`.
    giant: G,
    /// `g^bound`, shifts the search window to `[0, 2 * bound]`.
    offset: G,
}

impl<G: PrimeGroup> DlogTable<G> {
    pub fn new(bound: i64) -> Self {
        assert!(bound >= 0, "bound must be non-negative");
        let span = 2 * bound as u64 + 1;
        let step = ceil_sqrt(span);
        let g = G::generator();
        let mut baby = BTreeMap::new();
        let mut acc = G::identity();
        for j in 0..step {
            baby.entry(acc.table_key()).or_insert(j as u32);
            acc = acc.op(&g);
        }
        Self {
            bound,
            step,
            baby,
            giant: acc.invert(),
            offset: G::gen_pow_int(bound),
        }
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    /// Number of baby steps stored.
    pub fn len(&self) -> usize {
        self.baby.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baby.is_empty()
    }

    /// Returns `v` in `[-bound, bound]` with `g^v = target`, if any.
    pub fn solve(&self, target: &G) -> Option<i64> {
        let span = 2 * self.bound as u64;
        let mut gamma = target.op(&self.offset);
        for i in 0..=self.step {
            if let Some(&j) = self.baby.get(&gamma.table_key()) {
                let shifted = i * self.step + j as u64;
                if shifted <= span {
                    let v = shifted as i64 - self.bound;
                    // Keys are digests; confirm the hit.
                    if G::gen_pow(&G::Scalar::from_i64(v)) == *target {
                        return Some(v);
                    }
                }
            }
            gamma = gamma.op(&self.giant);
        }
        None
    }
}

fn ceil_sqrt(n: u64) -> u64 {
    let mut r = libm::sqrt(n as f64) as u64;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r.max(1)
}
