//! The center radius `ρ_ε(M) = inf{λ ≥ 0 : sup_{‖x‖≤1} ‖(|Mx| − λ|x|)₊‖ ≤ ε}`.
//!
//! For a fixed `x` the map `λ ↦ ‖(|Mx| − λ|x|)₊‖` is continuous and
//! nonincreasing, so it has a threshold `λ_x`, and `ρ_ε` is the supremum of
//! `λ_x` over the unit sphere. The threshold is found by bisection and the
//! supremum by multi-start pattern search over `x`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::defect::{bp_defect, BpOptions};
use super::search::pattern_search;
use crate::error::{LatticeError, Result};
use crate::lattice::{NormSpec, Vector};
use crate::operator::Operator;
use crate::rng::{stream_id, stream_rng};

/// Largest dimension for which infeasibility is certified by exact bp.
const EXACT_FEASIBILITY_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Evaluation budget of each pattern-search run.
    pub max_evals: usize,
}

impl Default for CenterOptions {
    fn default() -> Self {
        Self { restarts: 32, seed: 0, max_evals: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub epsilon: f64,
    /// `None` stands for `+∞`: some unit `x` keeps `‖(|Mx| − λ|x|)₊‖ > ε`
    /// for every `λ`, which happens exactly when `ε < bp(M)`.
    pub rho_lower: Option<f64>,
    pub rho_upper: Option<f64>,
    /// Always `"estimate"`: the inner supremum is not certified.
    pub status: String,
    /// The unit vector with the largest threshold found.
    pub witness: Option<Vector>,
    pub restarts: usize,
    pub seed: u64,
    pub evaluations: usize,
}

impl CenterEstimate {
    pub fn is_feasible(&self) -> bool {
        self.rho_upper.is_some()
    }

    /// Midpoint of the bracket.
    pub fn rho(&self) -> Option<f64> {
        Some(0.5 * (self.rho_lower? + self.rho_upper?))
    }
}

/// `‖(|Mx| − λ|x|)₊‖` for a precomputed image `mx = Mx`.
fn excess(spec: &NormSpec, mx: &[f64], x: &[f64], lambda: f64, buf: &mut [f64]) -> f64 {
    for ((b, a), v) in buf.iter_mut().zip(mx).zip(x) {
        *b = (a.abs() - lambda * v.abs()).max(0.0);
    }
    spec.norm_of(buf)
}

/// Threshold bracket `[lo, hi]` of `λ_x`, or `None` when it is infinite.
fn threshold(m: &Operator, spec: &NormSpec, x: &[f64], eps: f64, tol: f64) -> Option<(f64, f64)> {
    let mx = m.apply_slice(x);
    let mut buf = vec![0.0; x.len()];
    // Past the largest ratio only the zero set of x contributes.
    let mut hi = 0.0f64;
    for (a, v) in mx.iter().zip(x) {
        if *v != 0.0 {
            hi = hi.max(a.abs() / v.abs());
        }
    }
    if excess(spec, &mx, x, hi, &mut buf) > eps {
        return None;
    }
    let mut lo = 0.0;
    if excess(spec, &mx, x, 0.0, &mut buf) <= eps {
        return Some((0.0, 0.0));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(spec, &mx, x, mid, &mut buf) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((lo, hi))
}

fn normalize(spec: &NormSpec, x: &mut [f64]) -> bool {
    let nx = spec.norm_of(x);
    if nx == 0.0 || !nx.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    true
}

/// Deterministic starting points: basis vectors, rows of `M`, and for each
/// row its sign pattern with and without the diagonal coordinate. The sign
/// patterns alone attain the supremum on `ℓ∞`.
fn candidates(m: &Operator) -> Vec<Vec<f64>> {
    let n = m.dim();
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(e);
        out.push(m.row(i).to_vec());
        let signs: Vec<f64> = m.row(i).iter().map(|v| v.signum()).collect();
        let mut off = signs.clone();
        off[i] = 0.0;
        out.push(signs);
        out.push(off);
    }
    out
}

/// Estimates `ρ_ε(M)` with a bracket of width at most `tol` around the
/// best threshold found.
pub fn rho_center(
    m: &Operator,
    spec: &NormSpec,
    epsilon: f64,
    tol: f64,
    opts: &CenterOptions,
) -> Result<CenterEstimate> {
    spec.check_dim(m.dim())?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(LatticeError::OutOfRange(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(tol > 0.0) {
        return Err(LatticeError::OutOfRange(format!("tol must be > 0, got {tol}")));
    }
    let n = m.dim();
    let mut est = CenterEstimate {
        epsilon,
        rho_lower: None,
        rho_upper: None,
        status: "estimate".into(),
        witness: None,
        restarts: opts.restarts,
        seed: opts.seed,
        evaluations: 0,
    };

    if n <= EXACT_FEASIBILITY_MAX_N && spec.has_exact_operator_norm() {
        let bp = bp_defect(m, spec, &BpOptions::default())?;
        if bp.value > epsilon {
            let mut x = vec![0.0; n];
            for &j in &bp.witness {
                x[j] = 1.0;
            }
            normalize(spec, &mut x);
            est.witness = Some(Vector::from_raw(x));
            return Ok(est);
        }
    }

    // Fine inner bisection keeps the search objective close to continuous.
    let inner_tol = 1e-13 * (1.0 + m.max_abs());
    let objective = |x: &[f64]| match threshold(m, spec, x, epsilon, inner_tol) {
        Some((lo, _)) => lo,
        None => f64::INFINITY,
    };
    let renorm = |x: &mut [f64]| normalize(spec, x);

    let mut starts = candidates(m);
    let mut rng = stream_rng(opts.seed, stream_id("rho-starts", 0));
    for _ in 0..opts.restarts {
        starts.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let runs: Vec<(f64, usize, Vec<f64>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x0)| {
            let (v, x) = pattern_search(x0, objective, renorm, opts.max_evals);
            (v, k, x)
        })
        .collect();
    est.evaluations = runs.len() * opts.max_evals;
    let (_, _, best_x) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one start");

    est.witness = Some(Vector::from_raw(best_x.clone()));
    if let Some((lo, hi)) = threshold(m, spec, &best_x, epsilon, tol) {
        est.rho_lower = Some(lo);
        est.rho_upper = Some(hi);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CenterOptions {
        CenterOptions { restarts: 8, seed: 1, max_evals: 2000 }
    }

    #[test]
    fn identity_radius() {
        for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::lp(3.0).unwrap()] {
            let r = rho_center(&Operator::identity(3), &spec, 0.25, 1e-10, &opts()).unwrap();
            assert!((r.rho().unwrap() - 0.75).abs() < 1e-9, "{spec}: {r:?}");
        }
    }

    #[test]
    fn diagonal_radius() {
        let d = Operator::diagonal(&[0.5, -2.0, 1.0]);
        for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf] {
            let r = rho_center(&d, &spec, 0.3, 1e-10, &opts()).unwrap();
            assert!((r.rho().unwrap() - 1.7).abs() < 1e-6, "{spec}: {r:?}");
        }
    }

    #[test]
    fn large_epsilon_gives_zero() {
        let m = Operator::from_rows(vec![vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let r = rho_center(&m, &NormSpec::Linf, 3.0, 1e-10, &opts()).unwrap();
        assert_eq!(r.rho(), Some(0.0));
    }

    #[test]
    fn below_bp_is_infeasible() {
        let m = Operator::from_rows(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let r = rho_center(&m, &NormSpec::L2, 0.05, 1e-10, &opts()).unwrap();
        assert!(!r.is_feasible());
        assert_eq!(r.rho_lower, None);
    }

    #[test]
    fn linf_matches_row_formula() {
        // ρ = max_i (Σ_j |M_ij| − ε)₊ once every off-diagonal row sum is ≤ ε.
        let m = Operator::from_rows(vec![
            vec![1.0, 0.1, -0.05],
            vec![0.02, -0.7, 0.1],
            vec![0.1, 0.1, 0.3],
        ])
        .unwrap();
        let r = rho_center(&m, &NormSpec::Linf, 0.25, 1e-10, &opts()).unwrap();
        assert!((r.rho().unwrap() - 0.9).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn negative_epsilon_rejected() {
        let r = rho_center(&Operator::identity(2), &NormSpec::L2, -1.0, 1e-6, &opts());
        assert!(matches!(r, Err(LatticeError::OutOfRange(_))));
    }
}
