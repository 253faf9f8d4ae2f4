use serde::{Deserialize, Serialize};

use crate::error::{check_dim, LatticeError, Result};

/// An element of the finite atomic lattice `R^n` with the coordinatewise order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LatticeError::InvalidVector("dimension must be at least 1".into()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidVector(format!("entry {i} is not finite")));
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        Self { entries: vec![0.0; n] }
    }

    pub fn ones(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        Self { entries: vec![1.0; n] }
    }

    /// The `i`-th unit vector.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.entries[i] = 1.0;
        v
    }

    /// Builds a vector from entries already known to be finite.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty() && entries.iter().all(|v| v.is_finite()));
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    /// Indices of the nonzero coordinates.
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `x ⊥ y`: no coordinate is nonzero in both.
    pub fn is_disjoint(&self, other: &Vector) -> bool {
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| *a == 0.0 || *b == 0.0)
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector::from_raw(self.entries.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector::from_raw(
            self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector::from_raw(
            self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn abs(&self) -> Vector {
        self.map(f64::abs)
    }

    pub fn pos(&self) -> Vector {
        self.map(|v| v.max(0.0))
    }

    pub fn neg(&self) -> Vector {
        self.map(|v| (-v).max(0.0))
    }

    pub fn meet(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, f64::min)
    }

    pub fn join(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, f64::max)
    }

    /// Componentwise `x ≤ y`.
    pub fn le(&self, other: &Vector) -> bool {
        self.dim() == other.dim() && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector::from_raw(self.entries.iter().map(|&v| f(v)).collect())
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector::from_raw(
            self.entries.iter().zip(&other.entries).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: Option<usize>,
            entries: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        if let Some(n) = raw.n {
            if n != raw.entries.len() {
                return Err(serde::de::Error::custom(format!(
                    "declared n = {n} but {} entries",
                    raw.entries.len()
                )));
            }
        }
        Vector::new(raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Componentwise lattice operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeOp {
    Abs,
    Meet,
    Join,
    Pos,
    Neg,
}

/// Applies a lattice operation; `meet` and `join` need the second operand.
pub fn lattice_op(kind: LatticeOp, x: &Vector, y: Option<&Vector>) -> Result<Vector> {
    match kind {
        LatticeOp::Abs => Ok(x.abs()),
        LatticeOp::Pos => Ok(x.pos()),
        LatticeOp::Neg => Ok(x.neg()),
        LatticeOp::Meet | LatticeOp::Join => {
            let y = y.ok_or_else(|| {
                LatticeError::InvalidVector(format!("{kind:?} needs a second operand"))
            })?;
            if kind == LatticeOp::Meet {
                x.meet(y)
            } else {
                x.join(y)
            }
        }
    }
}

/// Componentwise infimum of a finite nonempty family.
pub fn componentwise_min(family: &[Vector]) -> Result<Vector> {
    let first = family
        .first()
        .ok_or_else(|| LatticeError::InvalidVector("empty family".into()))?;
    family[1..].iter().try_fold(first.clone(), |acc, v| acc.meet(v))
}
