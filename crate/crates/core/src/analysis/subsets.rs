//! Deterministic parallel search over coordinate subsets.

use rayon::prelude::*;

use crate::lattice::lex_cmp_masks;

/// Best value with its subset; ties go to the lexicographically smallest subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Best {
    pub value: f64,
    pub mask: u64,
}

impl Best {
    pub const NONE: Best = Best { value: f64::NEG_INFINITY, mask: 0 };

    pub fn better(self, other: Best) -> Best {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Greater => self,
            std::cmp::Ordering::Less => other,
            std::cmp::Ordering::Equal => {
                if lex_cmp_masks(self.mask, other.mask).is_le() {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// Maximizes `f` over masks in `range` in parallel. The reduction is a total
/// order, so the result is independent of how rayon splits the work.
pub(crate) fn max_over_masks(
    range: std::ops::Range<u64>,
    f: impl Fn(u64) -> f64 + Sync,
) -> Best {
    range
        .into_par_iter()
        .map(|mask| Best { value: f(mask), mask })
        .reduce(|| Best::NONE, Best::better)
}

pub(crate) fn complement(mask: u64, n: usize) -> u64 {
    full_mask(n) & !mask
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}
