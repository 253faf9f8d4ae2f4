//! Two named examples: the 2×2 antidiagonal whose inverse is far from
//! band preserving, and a Walsh perturbation of the identity whose
//! entrywise modulus is not.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analysis::{bp_defect, inverse_defect_check, BpOptions, DefectOptions, DefectReport, InverseReport};
use crate::checks::Check;
use crate::error::{LatticeError, Result};
use crate::lattice::NormSpec;
use crate::linalg::power_sigma_max;
use crate::operator::Operator;
use crate::rng::{stream_id, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntidiagonalEntry {
    pub norm_spec: NormSpec,
    pub defects: DefectReport,
    pub inverse: InverseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntidiagonalBundle {
    pub epsilon: f64,
    pub matrix: Operator,
    pub entries: Vec<AntidiagonalEntry>,
    pub checks: Vec<Check>,
}

/// `[[0, ε], [ε, 0]]` on `ℓ₁`, `ℓ₂` and `ℓ∞`.
pub fn antidiagonal_example(eps: f64) -> Result<AntidiagonalBundle> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LatticeError::OutOfRange(format!("eps must be > 0, got {eps}")));
    }
    let m = Operator::from_rows(vec![vec![0.0, eps], vec![eps, 0.0]])?;
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf] {
        let defects = DefectReport::compute(&m, &spec, &DefectOptions::default())?;
        let inverse = inverse_defect_check(&m, &spec)?;
        let tol = 1e-12 * (1.0 + 1.0 / eps);
        checks.push(Check::eq(format!("{spec}: bp"), defects.bp.value, eps, 1e-12 * eps));
        checks.push(Check::eq(format!("{spec}: norm"), defects.op_norm.upper, eps, 1e-12 * eps));
        checks.push(Check::eq(format!("{spec}: bp of inverse"), inverse.bp_inverse, 1.0 / eps, tol));
        checks.push(Check::eq(format!("{spec}: inverse bound"), inverse.bound, 2.0 / eps, 2.0 * tol));
        checks.push(Check::eq(format!("{spec}: ratio"), inverse.ratio.unwrap_or(f64::NAN), 0.5, 1e-12));
        entries.push(AntidiagonalEntry { norm_spec: spec, defects, inverse });
    }
    Ok(AntidiagonalBundle { epsilon: eps, matrix: m, entries, checks })
}

/// In-place unnormalized fast Walsh-Hadamard transform (Sylvester order).
pub fn fwht(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (u, v) in a.iter_mut().zip(b.iter_mut()) {
                let (p, q) = (*u, *v);
                *u = p + q;
                *v = p - q;
            }
        }
        h *= 2;
    }
}

/// Entry `(j, k)` of the Sylvester-Hadamard matrix.
pub fn hadamard_entry(j: usize, k: usize) -> f64 {
    if (j & k).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `T = I + 2^{-i} P H` with `H` the Sylvester-Hadamard matrix of order
/// `2^i` and `P` a row permutation, applied without forming the matrix.
#[derive(Debug, Clone)]
pub struct WalshOperator {
    pub i: u32,
    /// Row `j` of `P H` is row `perm[j]` of `H`.
    pub perm: Vec<usize>,
}

impl WalshOperator {
    pub fn new(i: u32, perm: Option<Vec<usize>>) -> Self {
        let n = 1usize << i;
        Self { i, perm: perm.unwrap_or_else(|| (0..n).collect()) }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    fn scale(&self) -> f64 {
        (-(self.i as f64)).exp2()
    }

    /// `(T − I)x`.
    pub fn apply_perturbation(&self, x: &[f64], out: &mut Vec<f64>) {
        let mut hx = x.to_vec();
        fwht(&mut hx);
        out.clear();
        out.extend(self.perm.iter().map(|&r| self.scale() * hx[r]));
    }

    /// `(T − I)ᵀ y`; `H` is symmetric.
    pub fn apply_perturbation_t(&self, y: &[f64], out: &mut Vec<f64>) {
        let mut z = vec![0.0; y.len()];
        for (j, &r) in self.perm.iter().enumerate() {
            z[r] = y[j];
        }
        fwht(&mut z);
        out.clear();
        out.extend(z.iter().map(|v| self.scale() * v));
    }

    /// `|T|x`: off-diagonal entries of `|T|` all equal `2^{-i}`.
    pub fn apply_modulus(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        let total: f64 = x.iter().sum();
        (0..self.dim())
            .map(|j| {
                let diag = (1.0 + s * hadamard_entry(self.perm[j], j)).abs();
                s * (total - x[j]) + diag * x[j]
            })
            .collect()
    }

    pub fn to_operator(&self) -> Operator {
        let n = self.dim();
        let s = self.scale();
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let id = if j == k { 1.0 } else { 0.0 };
                data[j * n + k] = id + s * hadamard_entry(self.perm[j], k);
            }
        }
        Operator::from_row_major(n, data).expect("finite entries")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshOptions {
    pub seed: u64,
    /// Exact bp of `T` and `|T|` is enumerated up to this `i`.
    pub exact_bp_max_i: u32,
}

impl Default for WalshOptions {
    fn default() -> Self {
        Self { seed: 0, exact_bp_max_i: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshBundle {
    pub i: u32,
    pub n: usize,
    /// `‖|T|x ∧ y‖₂` for the unit `x` on the first half and `y = 𝟙` on the second.
    pub gap: f64,
    pub gap_permuted: f64,
    pub witness_x_value: f64,
    pub perturbation_norm: f64,
    pub perturbation_norm_permuted: f64,
    /// `2^{-i/2}`, an upper bound on `bp(T)`.
    pub bp_upper: f64,
    /// `gap / bp_upper`, a lower bound on `bp(|T|) / bp(T)`.
    pub ratio_lower: f64,
    pub bp_exact: Option<f64>,
    pub bp_modulus_exact: Option<f64>,
    pub permutation_seed: u64,
    pub checks: Vec<Check>,
}

pub const WALSH_MIN_I: u32 = 2;
pub const WALSH_MAX_I: u32 = 13;

fn modulus_gap(t: &WalshOperator) -> f64 {
    let n = t.dim();
    let h = n / 2;
    let c = (0.5 * (1.0 - t.i as f64)).exp2();
    let x: Vec<f64> = (0..n).map(|j| if j < h { c } else { 0.0 }).collect();
    let tx = t.apply_modulus(&x);
    let meet: Vec<f64> = (0..n).map(|j| if j < h { 0.0 } else { tx[j].min(1.0) }).collect();
    NormSpec::L2.norm_of(&meet)
}

fn perturbation_norm(t: &WalshOperator) -> f64 {
    power_sigma_max(
        t.dim(),
        |x, out| t.apply_perturbation(x, out),
        |y, out| t.apply_perturbation_t(y, out),
        1e-14,
        10_000,
    )
    .0
}

pub fn walsh_modulus_example(i: u32, opts: &WalshOptions) -> Result<WalshBundle> {
    if !(WALSH_MIN_I..=WALSH_MAX_I).contains(&i) {
        return Err(LatticeError::OutOfRange(format!(
            "i must be in {WALSH_MIN_I}..={WALSH_MAX_I}, got {i}"
        )));
    }
    let n = 1usize << i;
    let t = WalshOperator::new(i, None);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(opts.seed, stream_id("walsh-perm", i as u64)));
    let tp = WalshOperator::new(i, Some(perm));

    let gap = modulus_gap(&t);
    let gap_permuted = modulus_gap(&tp);
    let pn = perturbation_norm(&t);
    let pn_perm = perturbation_norm(&tp);
    let expected = (-0.5 * i as f64).exp2();
    let x_norm = (0.5 * (1.0 - i as f64)).exp2() * ((n / 2) as f64).sqrt();

    let mut checks = vec![
        Check::eq("witness x has unit norm", x_norm, 1.0, 1e-12),
        Check::eq("gap", gap, 0.5, 1e-9),
        Check::eq("gap (permuted rows)", gap_permuted, 0.5, 1e-9),
        Check::eq("norm of T - I", pn, expected, 1e-9),
        Check::eq("norm of T - I (permuted rows)", pn_perm, expected, 1e-9),
    ];
    let (mut bp_exact, mut bp_modulus_exact) = (None, None);
    if i <= opts.exact_bp_max_i {
        let m = t.to_operator();
        let bp = bp_defect(&m, &NormSpec::L2, &BpOptions::default())?.value;
        let bpm = bp_defect(&m.modulus(), &NormSpec::L2, &BpOptions::default())?.value;
        checks.push(Check::le("bp(T) <= norm of T - I", bp, expected, 1e-9));
        checks.push(Check::le("gap <= bp(|T|)", gap, bpm, 1e-9));
        (bp_exact, bp_modulus_exact) = (Some(bp), Some(bpm));
    }
    Ok(WalshBundle {
        i,
        n,
        gap,
        gap_permuted,
        witness_x_value: (0.5 * (1.0 - i as f64)).exp2(),
        perturbation_norm: pn,
        perturbation_norm_permuted: pn_perm,
        bp_upper: expected,
        ratio_lower: gap / expected,
        bp_exact,
        bp_modulus_exact,
        permutation_seed: opts.seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::operator_norm;
    use crate::checks::all_passed;

    #[test]
    fn antidiagonal_values() {
        for eps in [0.01, 0.1, 1.0] {
            let b = antidiagonal_example(eps).unwrap();
            assert!(all_passed(&b.checks), "{:?}", b.checks);
        }
        assert!(antidiagonal_example(0.0).is_err());
    }

    #[test]
    fn fwht_matches_dense_hadamard() {
        let x: Vec<f64> = (0..8).map(|k| (k as f64).sin()).collect();
        let mut y = x.clone();
        fwht(&mut y);
        for j in 0..8 {
            let d: f64 = (0..8).map(|k| hadamard_entry(j, k) * x[k]).sum();
            assert!((d - y[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_free_modulus_matches_dense() {
        let t = WalshOperator::new(3, Some(vec![3, 1, 7, 0, 2, 6, 5, 4]));
        let dense = t.to_operator().modulus();
        let x: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).cos()).collect();
        let a = t.apply_modulus(&x);
        let b = dense.apply_slice(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let pn = operator_norm(&t.to_operator().sub(&Operator::identity(8)).unwrap(), &NormSpec::L2)
            .unwrap()
            .upper;
        assert!((pn - perturbation_norm(&t)).abs() < 1e-12);
    }

    #[test]
    fn walsh_gap_for_small_orders() {
        for i in [2, 3] {
            let b = walsh_modulus_example(i, &WalshOptions::default()).unwrap();
            assert!(all_passed(&b.checks), "{:?}", b.checks);
            assert!(b.bp_exact.is_some());
        }
        let b = walsh_modulus_example(10, &WalshOptions::default()).unwrap();
        assert!(all_passed(&b.checks), "{:?}", b.checks);
        assert!(b.ratio_lower >= 16.0 - 1e-9);
        assert!(walsh_modulus_example(1, &WalshOptions::default()).is_err());
        assert!(walsh_modulus_example(14, &WalshOptions::default()).is_err());
    }
}
