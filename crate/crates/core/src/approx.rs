//! Band-preserving approximants: partition compressions, the averaging
//! identity, multipliers and clipped local approximants.

use serde::{Deserialize, Serialize};

use crate::analysis::{bp_defect, operator_norm, BpOptions};
use crate::error::{check_dim, LatticeError, Result};
use crate::lattice::{NormSpec, Partition, Vector};
use crate::operator::Operator;

/// Largest block count accepted by [`offdiag_average_check`].
pub const MAX_AVERAGE_BLOCKS: usize = 20;

/// Tolerance of the trace comparisons in [`positive_net_infimum`].
pub const TRACE_TOL: f64 = 1e-12;

/// `T_P = Σ_k P_k M P_k`.
pub fn partition_compress(m: &Operator, p: &Partition) -> Result<Operator> {
    check_dim(m.dim(), p.dim())?;
    Ok(m.block_diagonal(p))
}

/// Max-entry residual of `M − T_P = 4 · Ave_S P_S M P_{Sᶜ}`, the average
/// running over all `2^k` unions `S` of blocks of `P`.
pub fn offdiag_average_check(m: &Operator, p: &Partition) -> Result<f64> {
    check_dim(m.dim(), p.dim())?;
    let k = p.len();
    if k > MAX_AVERAGE_BLOCKS {
        return Err(LatticeError::CapExceeded { n: k, cap: MAX_AVERAGE_BLOCKS });
    }
    let label = p.labels();
    let sum = pairwise_sum(m, &label, 0, 1u64 << k);
    let scale = 4.0 / (1u64 << k) as f64;
    let lhs = m.sub(&m.block_diagonal(p))?;
    Ok(lhs
        .as_slice()
        .iter()
        .zip(&sum)
        .fold(0.0, |r, (a, s)| r.max((a - scale * s).abs())))
}

/// `Σ_{S ∈ [lo, hi)} P_S M P_{Sᶜ}` over a fixed binary tree, so the rounding
/// does not depend on thread scheduling.
fn pairwise_sum(m: &Operator, label: &[usize], lo: u64, hi: u64) -> Vec<f64> {
    let n = m.dim();
    if hi - lo == 1 {
        let s = lo;
        let inside = |i: usize| s >> label[i] & 1 == 1;
        let mut out = vec![0.0; n * n];
        for i in (0..n).filter(|&i| inside(i)) {
            for j in (0..n).filter(|&j| !inside(j)) {
                out[i * n + j] = m.get(i, j);
            }
        }
        return out;
    }
    let mid = lo + (hi - lo) / 2;
    let (mut a, b) = if hi - lo > 64 {
        rayon::join(|| pairwise_sum(m, label, lo, mid), || pairwise_sum(m, label, mid, hi))
    } else {
        (pairwise_sum(m, label, lo, mid), pairwise_sum(m, label, mid, hi))
    };
    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
    a
}

/// `diag(M)`, the compression along the finest partition.
pub fn diagonal_part(m: &Operator) -> Operator {
    Operator::diagonal(&m.diag())
}

/// Multiplication by the image of the constant one vector: `S = diag(M𝟏)`.
pub fn ck_multiplier(m: &Operator) -> Operator {
    let phi: Vec<f64> = (0..m.dim()).map(|i| m.row(i).iter().sum()).collect();
    Operator::diagonal(&phi)
}

/// `u_i = sign(y_i) · min(|y_i|, |x_i|)`: the nearest point to `y` in the
/// order interval `[−|x|, |x|]`, coordinatewise.
pub fn clip_to_ideal(y: &Vector, x: &Vector) -> Result<Vector> {
    check_dim(y.dim(), x.dim())?;
    Ok(Vector::from_raw(
        y.entries()
            .iter()
            .zip(x.entries())
            .map(|(a, b)| a.signum() * a.abs().min(b.abs()))
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalApproximant {
    pub d: Operator,
    /// `‖Mx − Dx‖`.
    pub residual: f64,
    /// `‖(|Mx| − λ|x|)₊‖`, equal to `residual` up to rounding.
    pub excess: f64,
}

/// Diagonal `D` with `Dx = clip_to_ideal(Mx, λx)` and `|D_ii| ≤ λ`.
pub fn local_bp_approximant(
    m: &Operator,
    x: &Vector,
    lambda: f64,
    spec: &NormSpec,
) -> Result<LocalApproximant> {
    check_dim(m.dim(), x.dim())?;
    spec.check_dim(m.dim())?;
    if x.is_zero() {
        return Err(LatticeError::InvalidVector("x must be nonzero".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(LatticeError::OutOfRange(format!("lambda must be >= 0, got {lambda}")));
    }
    let mx = m.apply(x)?;
    let u = clip_to_ideal(&mx, &x.scale(lambda))?;
    let d: Vec<f64> = u
        .entries()
        .iter()
        .zip(x.entries())
        .map(|(ui, xi)| if *xi == 0.0 { 0.0 } else { ui / xi })
        .collect();
    let d = Operator::diagonal(&d);
    let residual = spec.norm_of(mx.sub(&d.apply(x)?)?.entries());
    let excess_vec: Vec<f64> = mx
        .entries()
        .iter()
        .zip(x.entries())
        .map(|(a, b)| (a.abs() - lambda * b.abs()).max(0.0))
        .collect();
    Ok(LocalApproximant { d, residual, excess: spec.norm_of(&excess_vec) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInfimum {
    /// `diag(M)`, the limit of the compressions along the chain.
    pub limit: Operator,
    /// `traces[s][k] = T_{P_k} x_s`.
    pub traces: Vec<Vec<Vec<f64>>>,
    pub monotone: bool,
    pub offdiag_norm: f64,
    pub bp: f64,
    /// `‖M − diag(M)‖ ≤ 4·bp(M)`.
    pub bound_holds: bool,
}

/// Follows a refinement chain of compressions of a positive `M` and checks
/// that the images of each positive sample decrease to `diag(M)x`.
pub fn positive_net_infimum(
    m: &Operator,
    chain: &[Partition],
    samples: &[Vector],
    spec: &NormSpec,
) -> Result<NetInfimum> {
    spec.check_dim(m.dim())?;
    if !m.is_nonnegative() {
        return Err(LatticeError::InvalidMatrix("matrix has a negative entry".into()));
    }
    let Some(last) = chain.last() else {
        return Err(LatticeError::InvalidPartition("empty chain".into()));
    };
    for p in chain {
        check_dim(m.dim(), p.dim())?;
    }
    if !last.is_finest() {
        return Err(LatticeError::InvalidPartition("chain must end in the finest partition".into()));
    }
    if let Some(k) = chain.windows(2).position(|w| !w[0].precedes(&w[1])) {
        return Err(LatticeError::InvalidPartition(format!(
            "chain step {k} is not a refinement"
        )));
    }
    let compressions: Vec<Operator> = chain.iter().map(|p| m.block_diagonal(p)).collect();
    let mut traces = Vec::with_capacity(samples.len());
    let mut monotone = true;
    for x in samples {
        check_dim(m.dim(), x.dim())?;
        if x.entries().iter().any(|v| *v < 0.0) {
            return Err(LatticeError::InvalidVector("samples must be positive".into()));
        }
        let trace: Vec<Vec<f64>> =
            compressions.iter().map(|c| c.apply_slice(x.entries())).collect();
        monotone &= trace.windows(2).all(|w| {
            w[0].iter().zip(&w[1]).all(|(a, b)| *b <= *a + TRACE_TOL)
        });
        traces.push(trace);
    }
    let limit = diagonal_part(m);
    let offdiag_norm = operator_norm(&m.sub(&limit)?, spec)?.upper;
    let bp = bp_defect(m, spec, &BpOptions::default())?.value;
    Ok(NetInfimum {
        limit,
        traces,
        monotone,
        offdiag_norm,
        bp,
        bound_holds: offdiag_norm <= 4.0 * bp + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, uniform_vec};

    fn seeded(n: usize, seed: u64) -> Operator {
        Operator::from_row_major(n, uniform_vec(&mut stream_rng(seed, 0), n * n, -1.0, 1.0))
            .unwrap()
    }

    #[test]
    fn compress_extremes_and_mask() {
        let m = seeded(3, 5);
        assert_eq!(partition_compress(&m, &Partition::finest(3)).unwrap(), diagonal_part(&m));
        assert_eq!(partition_compress(&m, &Partition::trivial(3)).unwrap(), m);
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let c = partition_compress(&m, &p).unwrap();
        for (i, j) in [(0, 2), (2, 0), (1, 2), (2, 1)] {
            assert_eq!(c.get(i, j), 0.0);
        }
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)] {
            assert_eq!(c.get(i, j), m.get(i, j));
        }
    }

    #[test]
    fn averaging_identity() {
        let m = seeded(6, 1);
        assert_eq!(offdiag_average_check(&m, &Partition::trivial(6)).unwrap(), 0.0);
        let two = Partition::new(6, vec![vec![0, 2, 4], vec![1, 3, 5]]).unwrap();
        assert!(offdiag_average_check(&m, &two).unwrap() <= 1e-15);
        assert!(offdiag_average_check(&m, &Partition::finest(6)).unwrap() <= 1e-12);
    }

    #[test]
    fn multiplier_examples() {
        let d = Operator::diagonal(&[1.0, -2.0]);
        assert_eq!(ck_multiplier(&d), d);
        let a = Operator::from_rows(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let s = ck_multiplier(&a);
        assert_eq!(s, Operator::diagonal(&[0.1, 0.1]));
        let gap = operator_norm(&a.sub(&s).unwrap(), &NormSpec::Linf).unwrap().upper;
        assert!((gap - 0.2).abs() < 1e-15);
    }

    #[test]
    fn diagonal_part_of_near_identity() {
        let m = Operator::from_rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]]).unwrap();
        assert_eq!(diagonal_part(&m), Operator::identity(2));
    }

    #[test]
    fn clip_examples() {
        let y = Vector::new(vec![3.0, -2.0]).unwrap();
        let x = Vector::new(vec![1.0, 5.0]).unwrap();
        assert_eq!(clip_to_ideal(&y, &x).unwrap().entries(), &[1.0, -2.0]);
        let big = Vector::new(vec![4.0, 4.0]).unwrap();
        assert_eq!(clip_to_ideal(&y, &big).unwrap(), y);
    }

    #[test]
    fn local_approximant_examples() {
        let a = Operator::from_rows(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let r = local_bp_approximant(&a, &Vector::basis(2, 0), 0.0, &NormSpec::Linf).unwrap();
        assert_eq!(r.d, Operator::zeros(2));
        assert!((r.residual - 0.1).abs() < 1e-15);
        let d = Operator::diagonal(&[2.0, -1.0]);
        let x = Vector::new(vec![0.5, 3.0]).unwrap();
        let r = local_bp_approximant(&d, &x, 2.0, &NormSpec::L2).unwrap();
        assert_eq!(r.d.apply(&x).unwrap(), d.apply(&x).unwrap());
        assert_eq!(r.residual, 0.0);
        assert!(local_bp_approximant(&d, &Vector::zeros(2), 1.0, &NormSpec::L2).is_err());
    }

    #[test]
    fn all_ones_chain() {
        let m = Operator::from_row_major(4, vec![1.0; 16]).unwrap();
        let chain = vec![
            Partition::trivial(4),
            Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap(),
            Partition::finest(4),
        ];
        let r = positive_net_infimum(&m, &chain, &[Vector::ones(4)], &NormSpec::Linf).unwrap();
        assert_eq!(r.traces[0], vec![vec![4.0; 4], vec![2.0; 4], vec![1.0; 4]]);
        assert!(r.monotone && r.bound_holds);
        let bad = vec![Partition::finest(4), Partition::trivial(4)];
        assert!(positive_net_infimum(&m, &bad, &[], &NormSpec::Linf).is_err());
        let neg = Operator::diagonal(&[-1.0, 1.0, 1.0, 1.0]);
        assert!(positive_net_infimum(&neg, &chain, &[], &NormSpec::Linf).is_err());
    }
}
