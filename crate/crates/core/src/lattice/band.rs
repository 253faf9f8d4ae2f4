use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::vector::Vector;
use crate::error::{check_dim, LatticeError, Result};

/// Projection onto the band of vectors supported in `subset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandProjection {
    n: usize,
    subset: Vec<usize>,
}

impl BandProjection {
    pub fn new(n: usize, subset: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = subset.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(LatticeError::OutOfRange(format!("index {bad} outside 0..{n}")));
        }
        Ok(Self { n, subset: set.into_iter().collect() })
    }

    /// Subset encoded as the set bits of `mask` (requires `n <= 64`).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        Self { n, subset: mask_indices(mask, n) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn contains(&self, i: usize) -> bool {
        self.subset.binary_search(&i).is_ok()
    }

    /// `P^⊥ = I - P`.
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            subset: (0..self.n).filter(|i| !self.contains(*i)).collect(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.n, x.dim())?;
        let mut out = vec![0.0; self.n];
        for &i in &self.subset {
            out[i] = x.entries()[i];
        }
        Ok(Vector::from_raw(out))
    }

    /// Whether `x` lies in the band `P(X)`.
    pub fn contains_vector(&self, x: &Vector) -> bool {
        x.dim() == self.n && x.support().iter().all(|i| self.contains(*i))
    }
}

pub(crate) fn mask_indices(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Total order on subsets: compare their sorted index lists lexicographically.
pub(crate) fn lex_cmp_masks(mut a: u64, mut b: u64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {
                let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
                if ia != ib {
                    return ia.cmp(&ib);
                }
                a &= a - 1;
                b &= b - 1;
            }
        }
    }
}

/// An ordered family of disjoint nonempty blocks covering `0..n`.
///
/// Blocks are stored sorted internally and ordered by their smallest element,
/// so structural equality is partition equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(LatticeError::InvalidPartition("dimension must be at least 1".into()));
        }
        let mut seen = vec![false; n];
        let mut canon = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                return Err(LatticeError::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
            for &i in &b {
                if i >= n {
                    return Err(LatticeError::InvalidPartition(format!("index {i} outside 0..{n}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(LatticeError::InvalidPartition(format!("index {i} repeated")));
                }
            }
            canon.push(b);
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(LatticeError::InvalidPartition(format!("index {i} not covered")));
        }
        canon.sort_by_key(|b| b[0]);
        Ok(Self { n, blocks: canon })
    }

    /// The one-block partition `{0..n}`.
    pub fn trivial(n: usize) -> Self {
        Self { n, blocks: vec![(0..n).collect()] }
    }

    /// The partition into singletons.
    pub fn finest(n: usize) -> Self {
        Self { n, blocks: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_finest(&self) -> bool {
        self.blocks.len() == self.n
    }

    /// Block index of every coordinate.
    pub fn labels(&self) -> Vec<usize> {
        let mut label = vec![0; self.n];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in b {
                label[i] = k;
            }
        }
        label
    }

    pub fn projections(&self) -> Vec<BandProjection> {
        self.blocks
            .iter()
            .map(|b| BandProjection { n: self.n, subset: b.clone() })
            .collect()
    }

    /// `self ≺ other`: every block of `self` is a union of blocks of `other`.
    pub fn precedes(&self, other: &Partition) -> bool {
        if self.n != other.n {
            return false;
        }
        let mine = self.labels();
        other.blocks.iter().all(|b| b.iter().all(|&i| mine[i] == mine[b[0]]))
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            blocks: Vec<Vec<usize>>,
        }
        let raw = Raw::deserialize(d)?;
        Partition::new(raw.n, raw.blocks).map_err(serde::de::Error::custom)
    }
}

/// Common refinement: all nonempty intersections `P_i ∩ Q_j`.
pub fn refine(p: &Partition, q: &Partition) -> Result<Partition> {
    check_dim(p.n, q.n)?;
    let (lp, lq) = (p.labels(), q.labels());
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for i in 0..p.n {
        let k = *index.entry((lp[i], lq[i])).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[k].push(i);
    }
    Partition::new(p.n, blocks)
}
