//! Band-preservation defects of a matrix acting on an atomic lattice.
//!
//! On `R^n` with a lattice norm, `T` is ε-BP exactly when every off-diagonal
//! block `P_{Aᶜ} T P_A` has norm at most ε, so the smallest such ε is a
//! maximum over the `2^n - 2` nonempty proper subsets `A`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::opnorm::{block_norm, operator_norm, require_exact, Bracket};
use super::search::pattern_search;
use super::subsets::{complement, full_mask, max_over_masks, Best};
use crate::error::{check_dim, LatticeError, Result};
use crate::lattice::{mask_indices, NormSpec, Vector};
use crate::operator::Operator;
use crate::rng::{stream_id, stream_rng};

/// Default dimension cap for exhaustive subset enumeration.
pub const DEFAULT_EXACT_MAX_N: usize = 20;

/// Hard limit imposed by the bitmask subset encoding.
pub const MAX_SEARCH_N: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpOptions {
    pub mode: SearchMode,
    pub max_n: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BpOptions {
    fn default() -> Self {
        Self { mode: SearchMode::Exact, max_n: DEFAULT_EXACT_MAX_N, restarts: 64, seed: 0 }
    }
}

impl BpOptions {
    pub fn heuristic(seed: u64) -> Self {
        Self { mode: SearchMode::Heuristic, seed, ..Self::default() }
    }

    /// Exact when the dimension and norm allow it, heuristic otherwise.
    pub fn auto(n: usize, spec: &NormSpec, max_n: usize, seed: u64) -> Self {
        let mode = if n <= max_n && spec.has_exact_operator_norm() {
            SearchMode::Exact
        } else {
            SearchMode::Heuristic
        };
        Self { mode, max_n, restarts: 64, seed }
    }
}

/// The ε-BP constant with an attaining (or best found) subset `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpDefect {
    pub value: f64,
    /// `A` with `‖P_{Aᶜ} M P_A‖ = value`; empty when `n = 1`.
    pub witness: Vec<usize>,
    /// `true` for the exhaustive maximum, `false` for a certified lower bound.
    pub exact: bool,
}

fn cross_block(m: &Operator, mask: u64, spec: &NormSpec) -> Bracket {
    let n = m.dim();
    let cols = mask_indices(mask, n);
    let rows = mask_indices(complement(mask, n), n);
    block_norm(&m.block(&rows, &cols), &rows, &cols, spec)
}

fn check_exact_preconditions(m: &Operator, spec: &NormSpec, max_n: usize) -> Result<()> {
    spec.check_dim(m.dim())?;
    require_exact(spec)?;
    let cap = max_n.min(MAX_SEARCH_N);
    if m.dim() > cap {
        return Err(LatticeError::CapExceeded { n: m.dim(), cap });
    }
    Ok(())
}

/// `bp(M) = max_{∅ ≠ A ⊊ [n]} ‖P_{Aᶜ} M P_A‖`.
pub fn bp_defect(m: &Operator, spec: &NormSpec, opts: &BpOptions) -> Result<BpDefect> {
    spec.check_dim(m.dim())?;
    let n = m.dim();
    if n == 1 {
        return Ok(BpDefect { value: 0.0, witness: vec![], exact: true });
    }
    match opts.mode {
        SearchMode::Exact => {
            check_exact_preconditions(m, spec, opts.max_n)?;
            let best = max_over_masks(1..full_mask(n), |mask| cross_block(m, mask, spec).upper);
            Ok(BpDefect { value: best.value, witness: mask_indices(best.mask, n), exact: true })
        }
        SearchMode::Heuristic => {
            if n > MAX_SEARCH_N {
                return Err(LatticeError::CapExceeded { n, cap: MAX_SEARCH_N });
            }
            let best = bp_local_search(m, spec, opts);
            Ok(BpDefect { value: best.value, witness: mask_indices(best.mask, n), exact: false })
        }
    }
}

/// Greedy single-flip local search from seeded random subsets. The value is
/// the lower end of the block bracket, hence a lower bound on bp.
fn bp_local_search(m: &Operator, spec: &NormSpec, opts: &BpOptions) -> Best {
    let n = m.dim();
    let full = full_mask(n);
    let value = |mask: u64| cross_block(m, mask, spec).lower;
    (0..opts.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(opts.seed, stream_id("bp-local", r));
            let mut mask = loop {
                let cand = rng.gen::<u64>() & full;
                if cand != 0 && cand != full {
                    break cand;
                }
            };
            let mut cur = Best { value: value(mask), mask };
            loop {
                let mut step = cur;
                for j in 0..n {
                    let flipped = mask ^ (1 << j);
                    if flipped == 0 || flipped == full {
                        continue;
                    }
                    step = step.better(Best { value: value(flipped), mask: flipped });
                }
                if step.value > cur.value {
                    cur = step;
                    mask = step.mask;
                } else {
                    break;
                }
            }
            cur
        })
        .reduce(|| Best::NONE, Best::better)
}

/// Sampling budget for [`bp_defect_oracle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub seed: u64,
    pub random_per_pattern: usize,
    /// Support patterns examined; all of them when `2^n - 2` fits.
    pub max_patterns: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { seed: 0, random_per_pattern: 16, max_patterns: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    pub value: f64,
    /// The sample attaining `value`.
    pub x: Option<Vector>,
}

/// Evaluates `sup { ‖|Mx| ∧ y‖ : y ≥ 0, y ⊥ x } / ‖x‖` with the explicit
/// choice `y = c·1_{supp(x)ᶜ}`, `c` an upper bound on every coordinate of `|Mx|`.
pub fn bp_definition_value(m: &Operator, spec: &NormSpec, x: &Vector) -> Result<f64> {
    check_dim(m.dim(), x.dim())?;
    spec.check_dim(m.dim())?;
    let nx = spec.norm_of(x.entries());
    if nx == 0.0 {
        return Ok(0.0);
    }
    let min_w = match spec {
        NormSpec::Wsup { weights } => weights.iter().cloned().fold(f64::INFINITY, f64::min),
        _ => 1.0,
    };
    let c = operator_norm(m, spec)?.upper * nx / min_w;
    let y = Vector::from_raw(
        x.entries().iter().map(|&v| if v == 0.0 { c } else { 0.0 }).collect(),
    );
    let img = m.apply(x)?.abs();
    let meet = img.meet(&y)?;
    Ok(spec.norm_of(meet.entries()) / nx)
}

/// Lower bound on bp straight from the defining supremum, over seeded
/// samples plus the extreme candidates of each support pattern.
pub fn bp_defect_oracle(m: &Operator, spec: &NormSpec, budget: &OracleBudget) -> Result<OracleBound> {
    spec.check_dim(m.dim())?;
    let n = m.dim();
    if n == 1 {
        return Ok(OracleBound { value: 0.0, x: None });
    }
    if n > MAX_SEARCH_N {
        return Err(LatticeError::CapExceeded { n, cap: MAX_SEARCH_N });
    }
    let full = full_mask(n);
    let total = full - 1;
    let patterns: Vec<u64> = if total as u128 <= budget.max_patterns as u128 {
        (1..full).collect()
    } else {
        let mut rng = stream_rng(budget.seed, stream_id("oracle-patterns", 0));
        (0..budget.max_patterns)
            .map(|_| loop {
                let c = rng.gen::<u64>() & full;
                if c != 0 && c != full {
                    break c;
                }
            })
            .collect()
    };
    let weight = |j: usize| match spec {
        NormSpec::Wsup { weights } => weights[j],
        _ => 1.0,
    };
    let results: Vec<Result<(f64, u64, Vector)>> = patterns
        .par_iter()
        .map(|&mask| {
            let cols = mask_indices(mask, n);
            let rows = mask_indices(complement(mask, n), n);
            let mut cands: Vec<Vec<f64>> = Vec::new();
            let embed = |vals: &dyn Fn(usize) -> f64| {
                let mut x = vec![0.0; n];
                for &j in &cols {
                    x[j] = vals(j);
                }
                x
            };
            for &j in &cols {
                cands.push(embed(&|k| if k == j { 1.0 } else { 0.0 }));
            }
            cands.push(embed(&|k| 1.0 / weight(k)));
            for &i in &rows {
                cands.push(embed(&|k| m.get(i, k).signum() / weight(k)));
                cands.push(embed(&|k| m.get(i, k)));
            }
            let mut rng = stream_rng(budget.seed, stream_id("oracle-samples", mask));
            for _ in 0..budget.random_per_pattern {
                cands.push(
                    (0..n)
                        .map(|k| if mask >> k & 1 == 1 { rng.gen_range(-1.0..1.0) } else { 0.0 })
                        .collect(),
                );
            }
            let mut best = (f64::NEG_INFINITY, mask, Vector::zeros(n));
            for c in cands {
                let x = Vector::new(c)?;
                let v = bp_definition_value(m, spec, &x)?;
                if v > best.0 {
                    best = (v, mask, x);
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(f64, u64, Vector)> = None;
    for r in results {
        let r = r?;
        best = match best {
            Some(b) if b.0 > r.0 || (b.0 == r.0 && b.1 <= r.1) => Some(b),
            _ => Some(r),
        };
    }
    let (value, _, x) = best.expect("at least one pattern");
    Ok(OracleBound { value, x: Some(x) })
}

/// ε-IP constant: the worst distance from `Mx` to the ideal generated by
/// `x`, computed by projecting the image onto each coordinate ideal and
/// taking the norm of the residual operator on the full space.
pub fn ip_defect(m: &Operator, spec: &NormSpec, max_n: usize) -> Result<BpDefect> {
    check_exact_preconditions(m, spec, max_n)?;
    let n = m.dim();
    if n == 1 {
        return Ok(BpDefect { value: 0.0, witness: vec![], exact: true });
    }
    let best = max_over_masks(1..full_mask(n), |mask| {
        // (I - P_A) M P_A as an operator on all of R^n.
        let residual = m.masked(|i, j| mask >> i & 1 == 0 && mask >> j & 1 == 1);
        operator_norm(&residual, spec).map(|b| b.upper).unwrap_or(f64::NAN)
    });
    Ok(BpDefect { value: best.value, witness: mask_indices(best.mask, n), exact: true })
}

/// `max_A ‖[P_A, M]‖` over all subsets `A`, with an attaining subset.
pub fn commutator_max(m: &Operator, spec: &NormSpec, max_n: usize) -> Result<BpDefect> {
    check_exact_preconditions(m, spec, max_n)?;
    let n = m.dim();
    let best = max_over_masks(0..full_mask(n) + 1, |mask| {
        let inside = |i: usize| (mask >> i & 1) as f64;
        let mut c = m.clone();
        for i in 0..n {
            for j in 0..n {
                c.set(i, j, m.get(i, j) * (inside(i) - inside(j)));
            }
        }
        operator_norm(&c, spec).map(|b| b.upper).unwrap_or(f64::NAN)
    });
    Ok(BpDefect { value: best.value, witness: mask_indices(best.mask, n), exact: true })
}

/// Search budget for [`dp_defect_lb`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpBudget {
    pub seed: u64,
    /// Support splits `A | Aᶜ` examined; all `2^{n-1} - 1` when they fit.
    pub max_splits: usize,
    pub restarts: usize,
    pub max_evals: usize,
}

impl Default for DpBudget {
    fn default() -> Self {
        Self { seed: 0, max_splits: 256, restarts: 4, max_evals: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpBound {
    pub value: f64,
    pub x: Option<Vector>,
    pub y: Option<Vector>,
}

/// `‖|Mx| ∧ |My|‖` for disjoint `x`, `y` scaled to the unit sphere.
pub fn dp_pair_value(m: &Operator, spec: &NormSpec, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(m.dim(), x.dim())?;
    check_dim(m.dim(), y.dim())?;
    spec.check_dim(m.dim())?;
    if !x.is_disjoint(y) {
        return Err(LatticeError::InvalidVector("x and y are not disjoint".into()));
    }
    let (nx, ny) = (spec.norm_of(x.entries()), spec.norm_of(y.entries()));
    if nx == 0.0 || ny == 0.0 {
        return Ok(0.0);
    }
    let mx = m.apply(&x.scale(1.0 / nx))?.abs();
    let my = m.apply(&y.scale(1.0 / ny))?.abs();
    Ok(spec.norm_of(mx.meet(&my)?.entries()))
}

/// Lower bound on the ε-DP constant `sup ‖|Mx| ∧ |My|‖` over disjoint unit
/// `x, y`. Any split of the coordinates into `A | Aᶜ` carries every disjoint
/// pair (zeros are allowed inside each side), so only splits are searched.
pub fn dp_defect_lb(m: &Operator, spec: &NormSpec, budget: &DpBudget) -> Result<DpBound> {
    spec.check_dim(m.dim())?;
    let n = m.dim();
    if n == 1 {
        return Ok(DpBound { value: 0.0, x: None, y: None });
    }
    if n > MAX_SEARCH_N {
        return Err(LatticeError::CapExceeded { n, cap: MAX_SEARCH_N });
    }
    // Splits are unordered: fix the top coordinate on the y side.
    let half = 1u64 << (n - 1);
    let splits: Vec<u64> = if (half - 1) as u128 <= budget.max_splits as u128 {
        (1..half).collect()
    } else {
        let mut rng = stream_rng(budget.seed, stream_id("dp-splits", 0));
        (0..budget.max_splits)
            .map(|_| loop {
                let c = rng.gen::<u64>() & (half - 1);
                if c != 0 {
                    break c;
                }
            })
            .collect()
    };
    let best = splits
        .par_iter()
        .map(|&mask| {
            let (v, z) = dp_split_search(m, spec, mask, budget);
            (v, mask, z)
        })
        .reduce(
            || (f64::NEG_INFINITY, 0, Vec::new()),
            |a, b| if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) { a } else { b },
        );
    let (value, mask, z) = best;
    let part = |inside: bool| {
        Vector::from_raw(
            z.iter()
                .enumerate()
                .map(|(k, &v)| if (mask >> k & 1 == 1) == inside { v } else { 0.0 })
                .collect(),
        )
    };
    Ok(DpBound { value: value.max(0.0), x: Some(part(true)), y: Some(part(false)) })
}

fn dp_split_search(m: &Operator, spec: &NormSpec, mask: u64, budget: &DpBudget) -> (f64, Vec<f64>) {
    let n = m.dim();
    let in_a = |k: usize| mask >> k & 1 == 1;
    let split = |z: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let x = (0..n).map(|k| if in_a(k) { z[k] } else { 0.0 }).collect();
        let y = (0..n).map(|k| if in_a(k) { 0.0 } else { z[k] }).collect();
        (x, y)
    };
    let objective = |z: &[f64]| {
        let (x, y) = split(z);
        let (mx, my) = (m.apply_slice(&x), m.apply_slice(&y));
        let meet: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a.abs().min(b.abs())).collect();
        spec.norm_of(&meet)
    };
    let renormalize = |z: &mut [f64]| {
        let (x, y) = split(z);
        let (nx, ny) = (spec.norm_of(&x), spec.norm_of(&y));
        if nx == 0.0 || ny == 0.0 {
            return false;
        }
        for (k, v) in z.iter_mut().enumerate() {
            *v /= if in_a(k) { nx } else { ny };
        }
        true
    };
    let mut rng = stream_rng(budget.seed, stream_id("dp-inner", mask));
    let mut best = (f64::NEG_INFINITY, vec![1.0; n]);
    for r in 0..budget.restarts.max(1) {
        let start: Vec<f64> = if r == 0 {
            vec![1.0; n]
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let (v, z) = pattern_search(start, objective, renormalize, budget.max_evals);
        if v > best.0 {
            best = (v, z);
        }
    }
    best
}
