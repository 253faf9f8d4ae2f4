//! Defect of the inverse map.

use serde::{Deserialize, Serialize};

use super::defect::{bp_defect, BpOptions};
use super::opnorm::{operator_norm, require_exact};
use crate::error::{LatticeError, Result};
use crate::lattice::NormSpec;
use crate::linalg::invert;
use crate::operator::Operator;

/// Condition estimates at or above this make the inverse bound vacuous.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Slack allowed in the bound check.
pub const INVERSE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub bp: f64,
    pub bp_inverse: f64,
    pub inverse_norm: f64,
    /// `2 ‖M⁻¹‖² bp(M)`.
    pub bound: f64,
    /// `bp(M⁻¹) / bound`; `None` when the bound is zero.
    pub ratio: Option<f64>,
    pub condition: f64,
    pub holds: bool,
    pub inverse: Operator,
}

/// Checks `bp(M⁻¹) ≤ 2 ‖M⁻¹‖² bp(M)`.
pub fn inverse_defect_check(m: &Operator, spec: &NormSpec) -> Result<InverseReport> {
    spec.check_dim(m.dim())?;
    require_exact(spec)?;
    let dense = m.to_dense();
    let inv = invert(&dense).map(Operator::from_dense);
    let inv = match inv {
        Some(inv) if inv.as_slice().iter().all(|v| v.is_finite()) => inv,
        _ => return Err(LatticeError::IllConditioned(f64::INFINITY)),
    };
    let l1 = |a: &Operator| operator_norm(a, &NormSpec::L1).map(|b| b.upper);
    let condition = l1(m)? * l1(&inv)?;
    if !(condition < CONDITION_LIMIT) {
        return Err(LatticeError::IllConditioned(condition));
    }
    let opts = BpOptions::default();
    let bp = bp_defect(m, spec, &opts)?.value;
    let bp_inverse = bp_defect(&inv, spec, &opts)?.value;
    let inverse_norm = operator_norm(&inv, spec)?.upper;
    let bound = 2.0 * inverse_norm * inverse_norm * bp;
    Ok(InverseReport {
        bp,
        bp_inverse,
        inverse_norm,
        bound,
        ratio: (bound > 0.0).then(|| bp_inverse / bound),
        condition,
        holds: bp_inverse <= bound + INVERSE_SLACK,
        inverse: inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_trivial() {
        let r = inverse_defect_check(&Operator::identity(3), &NormSpec::L2).unwrap();
        assert_eq!((r.bp, r.bp_inverse, r.ratio), (0.0, 0.0, None));
        assert!(r.holds);
    }

    #[test]
    fn antidiagonal_ratio_is_half() {
        let m = Operator::from_rows(vec![vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf] {
            let r = inverse_defect_check(&m, &spec).unwrap();
            assert!((r.bp_inverse - 10.0).abs() < 1e-12);
            assert!((r.bound - 20.0).abs() < 1e-12);
            assert!((r.ratio.unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_rejected() {
        let m = Operator::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            inverse_defect_check(&m, &NormSpec::L2),
            Err(LatticeError::IllConditioned(_))
        ));
    }
}
