use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};

/// Depth of the dyadic truncation: weights `2^k` sit at `2^{-k}`, `k = 1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ELatticeConfig {
    pub depth: u32,
}

impl Default for ELatticeConfig {
    fn default() -> Self {
        Self { depth: 12 }
    }
}

impl ELatticeConfig {
    pub fn new(depth: u32) -> Result<Self> {
        if !(2..=40).contains(&depth) {
            return Err(LatticeError::OutOfRange(format!("depth must be in 2..=40, got {depth}")));
        }
        Ok(Self { depth })
    }

    /// `2^{-K-1}`: elements vanish on `(0, floor]`.
    pub fn floor(&self) -> f64 {
        dyadic(self.depth + 1)
    }
}

/// `2^{-k}`.
pub(crate) fn dyadic(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// Continuous piecewise-linear function on `(0, 1]`: linear between
/// breakpoints, zero left of the first one and constant right of the last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PLFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PLFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(LatticeError::InvalidFunction("no breakpoints".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(LatticeError::InvalidFunction(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(LatticeError::InvalidFunction("breakpoints must lie in (0, 1]".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LatticeError::InvalidFunction("breakpoints must increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidFunction("values must be finite".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn zero() -> Self {
        Self { breakpoints: vec![1.0], values: vec![0.0] }
    }

    /// The constant `c` on `[from, 1]`.
    pub fn constant_from(from: f64, c: f64) -> Result<Self> {
        if from >= 1.0 {
            return Self::new(vec![1.0], vec![c]);
        }
        Self::new(vec![from, 1.0], vec![c, c])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t < b[0] {
            return 0.0;
        }
        let k = b.partition_point(|&s| s <= t);
        if k == b.len() {
            return self.values[k - 1];
        }
        let (t0, t1) = (b[k - 1], b[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Checks membership in the truncated lattice: continuity at the first
    /// breakpoint and vanishing on `(0, 2^{-K-1}]`.
    pub fn check_element(&self, cfg: &ELatticeConfig) -> Result<()> {
        if self.values[0] != 0.0 {
            return Err(LatticeError::InvalidFunction(
                "first breakpoint value must be 0 (the function vanishes to its left)".into(),
            ));
        }
        let floor = cfg.floor();
        let inside = self.breakpoints.partition_point(|&t| t <= floor);
        if self.values[..inside].iter().any(|v| *v != 0.0) || self.eval(floor) != 0.0 {
            return Err(LatticeError::InvalidFunction(format!(
                "support must lie in [{floor:e}, 1]"
            )));
        }
        Ok(())
    }

    /// Checks that the function is a bounded multiplier on `[2^{-K-1}, 1]`.
    pub fn check_multiplier(&self, cfg: &ELatticeConfig) -> Result<()> {
        if self.breakpoints[0] > cfg.floor() {
            return Err(LatticeError::InvalidFunction(format!(
                "multiplier must be defined from {:e}; first breakpoint is {}",
                cfg.floor(),
                self.breakpoints[0]
            )));
        }
        Ok(())
    }

    /// `max |f|`, attained at a breakpoint.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn from_grid(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self { breakpoints: grid, values }
    }

    /// `a·self + b·other` on the merged grid. Exact when both functions
    /// start from 0, so that neither jumps at its first breakpoint.
    pub fn combine(&self, a: f64, other: &PLFunction, b: f64) -> PLFunction {
        let grid = merge(&self.breakpoints, &other.breakpoints);
        Self::from_grid(grid, |t| a * self.eval(t) + b * other.eval(t))
    }

    pub fn scale(&self, c: f64) -> PLFunction {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// The same function with its sign changes inserted as breakpoints, so
    /// that `|f|` and `f₊` are again piecewise linear on the grid.
    fn with_roots(&self) -> PLFunction {
        let mut bp = Vec::with_capacity(self.breakpoints.len() * 2);
        let mut vals = Vec::with_capacity(bp.capacity());
        for k in 0..self.breakpoints.len() {
            if k > 0 {
                let (t0, t1) = (self.breakpoints[k - 1], self.breakpoints[k]);
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                if v0 * v1 < 0.0 {
                    let r = t0 + (t1 - t0) * v0 / (v0 - v1);
                    if r > t0 && r < t1 {
                        bp.push(r);
                        vals.push(0.0);
                    }
                }
            }
            bp.push(self.breakpoints[k]);
            vals.push(self.values[k]);
        }
        Self { breakpoints: bp, values: vals }
    }

    pub fn abs(&self) -> PLFunction {
        let r = self.with_roots();
        Self { values: r.values.iter().map(|v| v.abs()).collect(), breakpoints: r.breakpoints }
    }

    pub fn pos(&self) -> PLFunction {
        let r = self.with_roots();
        Self { values: r.values.iter().map(|v| v.max(0.0)).collect(), breakpoints: r.breakpoints }
    }

    /// Pointwise `|self| ≤ |other|` on the merged grid, which decides it everywhere.
    pub fn abs_le(&self, other: &PLFunction) -> bool {
        let (a, b) = (self.abs(), other.abs());
        merge(&a.breakpoints, &b.breakpoints).iter().all(|&t| a.eval(t) <= b.eval(t))
    }
}

pub(crate) fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b).copied().collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

impl<'de> Deserialize<'de> for PLFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            breakpoints: Vec<f64>,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        PLFunction::new(raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PLFunction::new(vec![], vec![]).is_err());
        assert!(PLFunction::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(PLFunction::new(vec![0.5, 0.25], vec![0.0, 1.0]).is_err());
        assert!(PLFunction::new(vec![0.5, 1.5], vec![0.0, 1.0]).is_err());
        assert!(PLFunction::new(vec![0.5], vec![f64::NAN]).is_err());
        let cfg = ELatticeConfig::default();
        let f = PLFunction::new(vec![0.25, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(f.check_element(&cfg).is_err());
        assert!(f.check_multiplier(&cfg).is_err());
        assert!(ELatticeConfig::new(1).is_err());
    }

    #[test]
    fn evaluation_and_extension() {
        let f = PLFunction::new(vec![0.25, 0.5, 0.75], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.eval(0.1), 0.0);
        assert_eq!(f.eval(0.375), 1.0);
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.0), 1.0);
    }

    #[test]
    fn roots_are_inserted() {
        let f = PLFunction::new(vec![0.25, 0.5, 0.75], vec![0.0, 1.0, -1.0]).unwrap();
        let a = f.abs();
        assert_eq!(a.breakpoints(), &[0.25, 0.5, 0.625, 0.75]);
        assert_eq!(a.values(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(f.pos().values(), &[0.0, 1.0, 0.0, 0.0]);
        assert!(f.abs_le(&a) && a.abs_le(&f));
    }

    #[test]
    fn combination_on_merged_grid() {
        let f = PLFunction::new(vec![0.25, 0.5], vec![0.0, 1.0]).unwrap();
        let g = PLFunction::new(vec![0.375, 1.0], vec![0.0, 2.0]).unwrap();
        let h = f.combine(1.0, &g, -1.0);
        for t in [0.3, 0.4, 0.6, 0.9, 1.0] {
            assert!((h.eval(t) - (f.eval(t) - g.eval(t))).abs() < 1e-15);
        }
    }
}
