use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lattice::NormSpec;
use crate::linalg::{sigma_max, Dense};
use crate::operator::Operator;
use crate::rng::{stream_id, stream_rng, uniform_vec};

/// A value known to lie in `[lower, upper]`; exact when the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Induced operator norm `sup_{‖x‖ ≤ 1} ‖Mx‖`.
///
/// Exact for `ℓ₁`, `ℓ∞`, weighted sup and `ℓ₂`; for other `p` a bracket from
/// multi-start power ascent (lower) and Riesz-Thorin interpolation (upper).
pub fn operator_norm(m: &Operator, spec: &NormSpec) -> Result<Bracket> {
    spec.check_dim(m.dim())?;
    let all: Vec<usize> = (0..m.dim()).collect();
    Ok(block_norm(&m.to_dense(), &all, &all, spec))
}

/// Norm of a block mapping the band on `cols` into the band on `rows`
/// (the index lists carry the original coordinates for weighted norms).
pub(crate) fn block_norm(b: &Dense, rows: &[usize], cols: &[usize], spec: &NormSpec) -> Bracket {
    if b.is_empty() {
        return Bracket::exact(0.0);
    }
    match spec {
        NormSpec::L1 => Bracket::exact(max_col_sum(b)),
        NormSpec::Linf => Bracket::exact(max_row_sum(b)),
        NormSpec::Wsup { weights } => {
            let mut best = 0.0f64;
            for i in 0..b.rows {
                let s: f64 = (0..b.cols).map(|j| b.at(i, j).abs() / weights[cols[j]]).sum();
                best = best.max(weights[rows[i]] * s);
            }
            Bracket::exact(best)
        }
        NormSpec::L2 => Bracket::exact(sigma_max(b)),
        NormSpec::Lp { p } => lp_bracket(b, *p),
    }
}

fn max_col_sum(b: &Dense) -> f64 {
    (0..b.cols)
        .map(|j| (0..b.rows).map(|i| b.at(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_row_sum(b: &Dense) -> f64 {
    (0..b.rows)
        .map(|i| (0..b.cols).map(|j| b.at(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const LP_RANDOM_STARTS: u64 = 8;
const LP_MAX_ITER: usize = 500;

fn lp_bracket(b: &Dense, p: f64) -> Bracket {
    let q = p / (p - 1.0);
    let upper = max_col_sum(b).powf(1.0 / p) * max_row_sum(b).powf(1.0 - 1.0 / p);
    let mut starts: Vec<Vec<f64>> = (0..b.cols)
        .map(|j| {
            let mut e = vec![0.0; b.cols];
            e[j] = 1.0;
            e
        })
        .collect();
    starts.push(vec![1.0; b.cols]);
    for i in 0..b.rows {
        starts.push((0..b.cols).map(|j| b.at(i, j).signum()).collect());
    }
    for r in 0..LP_RANDOM_STARTS {
        let mut rng = stream_rng(0x5eed, stream_id("lp-norm", r));
        starts.push(uniform_vec(&mut rng, b.cols, -1.0, 1.0));
    }
    let lower = starts
        .into_iter()
        .map(|x| lp_power_ascent(b, x, p, q))
        .fold(0.0, f64::max);
    // Interpolation is sharp up to rounding when the ascent already meets it.
    Bracket { lower: lower.min(upper), upper }
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    NormSpec::Lp { p }.norm_of(x)
}

/// Fixed-point ascent `x ← dual_q(Bᵀ dual_p(Bx))` on the `ℓ_p` sphere.
/// Each step does not decrease `‖Bx‖_p`; returns the best value seen.
fn lp_power_ascent(b: &Dense, mut x: Vec<f64>, p: f64, q: f64) -> f64 {
    let nx = lp_norm(&x, p);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; b.rows];
    let mut z = vec![0.0; b.cols];
    let mut best = 0.0f64;
    for _ in 0..LP_MAX_ITER {
        b.mul_vec(&x, &mut y);
        let ny = lp_norm(&y, p);
        if ny == 0.0 {
            return best;
        }
        let improved = ny > best * (1.0 + 1e-13);
        best = best.max(ny);
        if !improved {
            break;
        }
        let dy: Vec<f64> = y.iter().map(|v| v.signum() * (v.abs() / ny).powf(p - 1.0)).collect();
        b.mul_t_vec(&dy, &mut z);
        let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if zmax == 0.0 {
            return best;
        }
        x = z.iter().map(|v| v.signum() * (v.abs() / zmax).powf(q - 1.0)).collect();
        let nx = lp_norm(&x, p);
        x.iter_mut().for_each(|v| *v /= nx);
    }
    best
}

pub(crate) fn require_exact(spec: &NormSpec) -> Result<()> {
    if spec.has_exact_operator_norm() {
        Ok(())
    } else {
        Err(LatticeError::UnsupportedNorm(spec.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn antidiag(eps: f64) -> Operator {
        Operator::from_rows(vec![vec![0.0, eps], vec![eps, 0.0]]).unwrap()
    }

    #[test]
    fn identity_has_norm_one() {
        for spec in [
            NormSpec::L1,
            NormSpec::L2,
            NormSpec::Linf,
            NormSpec::lp(3.0).unwrap(),
            NormSpec::weighted_sup(vec![1.0, 2.0, 5.0]).unwrap(),
        ] {
            let b = operator_norm(&Operator::identity(3), &spec).unwrap();
            assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12, "{spec}");
        }
    }

    #[test]
    fn antidiagonal_norm_is_eps_for_every_p() {
        for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::lp(1.5).unwrap()] {
            let b = operator_norm(&antidiag(0.1), &spec).unwrap();
            assert!((b.lower - 0.1).abs() < 1e-15 && (b.upper - 0.1).abs() < 1e-15, "{spec}");
        }
    }

    #[test]
    fn linf_matches_sign_vector_enumeration() {
        let mut rng = stream_rng(11, 0);
        let data: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = Operator::from_row_major(4, data).unwrap();
        // Oracle: the ℓ∞ ball's extreme points are the 2^4 sign vectors.
        let mut oracle = 0.0f64;
        for s in 0u32..16 {
            let x: Vec<f64> = (0..4).map(|j| if s >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let y = m.apply_slice(&x);
            oracle = oracle.max(y.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
        let b = operator_norm(&m, &NormSpec::Linf).unwrap();
        assert!(b.is_exact());
        assert!((b.upper - oracle).abs() < 1e-12);
    }

    #[test]
    fn weighted_sup_is_diagonal_similarity() {
        let m = Operator::from_rows(vec![vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let w = vec![1.0, 4.0];
        let spec = NormSpec::weighted_sup(w.clone()).unwrap();
        // ‖W M W⁻¹‖∞ by hand: row0 = 1 + 2/4, row1 = 4·(3 + 0.5/4)
        let b = operator_norm(&m, &spec).unwrap();
        assert!((b.upper - 4.0 * (3.0 + 0.125)).abs() < 1e-12);
    }

    #[test]
    fn general_p_bracket_is_consistent() {
        let mut rng = stream_rng(5, 1);
        for p in [1.5, 3.0, 7.0] {
            let data: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = Operator::from_row_major(5, data).unwrap();
            let b = operator_norm(&m, &NormSpec::lp(p).unwrap()).unwrap();
            assert!(b.lower <= b.upper + 1e-12);
            // Any unit vector gives a lower bound; the ascent must beat the basis.
            for j in 0..5 {
                let col: Vec<f64> = (0..5).map(|i| m.get(i, j)).collect();
                assert!(b.lower >= lp_norm(&col, p) - 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = NormSpec::weighted_sup(vec![1.0; 3]).unwrap();
        assert!(operator_norm(&Operator::identity(2), &spec).is_err());
    }
}
