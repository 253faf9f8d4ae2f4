use serde::{Deserialize, Serialize};

use crate::error::{check_dim, LatticeError, Result};
use crate::lattice::{Partition, Vector};
use crate::linalg::Dense;

/// A linear map on `R^n`, stored as a dense square matrix.
///
/// Band-preserving maps on the atomic lattice are exactly the diagonal ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    n: usize,
    data: Vec<f64>,
}

impl Operator {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(LatticeError::InvalidMatrix("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(LatticeError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(LatticeError::InvalidMatrix(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                k / n,
                k % n
            )));
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.n, x.dim())?;
        Ok(Vector::from_raw(self.apply_slice(x.entries())))
    }

    pub(crate) fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Operator {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Entrywise absolute value, the modulus `|T|` on an atomic lattice.
    pub fn modulus(&self) -> Operator {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Operator {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.n, other.n)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The block `M[rows, cols]` as a rectangular matrix.
    pub(crate) fn block(&self, rows: &[usize], cols: &[usize]) -> Dense {
        let mut b = Dense::zeros(rows.len(), cols.len());
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in cols.iter().enumerate() {
                b.set(bi, bj, self.get(i, j));
            }
        }
        b
    }

    pub(crate) fn to_dense(&self) -> Dense {
        Dense { rows: self.n, cols: self.n, data: self.data.clone() }
    }

    pub(crate) fn from_dense(d: Dense) -> Operator {
        debug_assert_eq!(d.rows, d.cols);
        Operator { n: d.rows, data: d.data }
    }

    /// Keeps entry `(i, j)` only when `keep(i, j)`.
    pub(crate) fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Operator {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if !keep(i, j) {
                    out.set(i, j, 0.0);
                }
            }
        }
        out
    }

    /// Entries in the same block of `p`, zero elsewhere.
    pub(crate) fn block_diagonal(&self, p: &Partition) -> Operator {
        let label = p.labels();
        self.masked(|i, j| label[i] == label[j])
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Operator {
        Operator { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(f64, f64) -> f64) -> Result<Operator> {
        check_dim(self.n, other.n)?;
        Ok(Operator {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson { n: self.n, rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.n != raw.rows.len() {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but {} rows",
                raw.n,
                raw.rows.len()
            )));
        }
        Operator::from_rows(raw.rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(Operator::from_rows(vec![]).is_err());
        assert!(Operator::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Operator::from_rows(vec![vec![f64::NAN]]).is_err());
        let m = Operator::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.transpose().get(0, 1), 3.0);
        assert_eq!(m.diag(), vec![1.0, 4.0]);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = Operator::from_rows(vec![vec![1.0, -2.0], vec![0.5, 4.0]]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"n":2,"rows":[[1.0,-2.0],[0.5,4.0]]}"#);
        assert_eq!(serde_json::from_str::<Operator>(&text).unwrap(), m);
        assert!(serde_json::from_str::<Operator>(r#"{"n":3,"rows":[[1,2],[3,4]]}"#).is_err());
    }

    #[test]
    fn block_extraction() {
        let m = Operator::from_rows(vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        let b = m.block(&[1, 2], &[0]);
        assert_eq!(b.data, vec![4.0, 7.0]);
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(
            m.block_diagonal(&p).rows(),
            vec![vec![1.0, 2.0, 0.0], vec![4.0, 5.0, 0.0], vec![0.0, 0.0, 9.0]]
        );
    }
}
