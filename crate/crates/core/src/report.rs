//! The end-to-end analysis of one operator: defects, approximants and
//! every bound relating them.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    inverse_defect_check, operator_norm, rho_center, CenterEstimate, CenterOptions, DefectOptions,
    DefectReport, InverseReport,
};
use crate::approx::{ck_multiplier, diagonal_part, offdiag_average_check, partition_compress};
use crate::checks::{all_passed, Check};
use crate::error::{LatticeError, Result};
use crate::lattice::{NormSpec, Partition};
use crate::operator::Operator;

/// Schema tag carried by every JSON report.
pub const REPORT_SCHEMA: &str = "latbp-report-v1";

const CENTER_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximant {
    pub name: String,
    pub matrix: Operator,
    /// `‖M − A‖` (upper end of the bracket for general `p`).
    pub distance: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub matrix: Operator,
    pub defects: DefectReport,
    pub approximants: Vec<Approximant>,
    pub inverse: Option<InverseReport>,
    /// Center radius at `ε = bp(M)`, reported for comparison only.
    pub center_at_bp: Option<CenterEstimate>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn approximant(m: &Operator, spec: &NormSpec, name: &str, a: Operator) -> Result<Approximant> {
    Ok(Approximant {
        name: name.into(),
        distance: operator_norm(&m.sub(&a)?, spec)?.upper,
        norm: operator_norm(&a, spec)?.upper,
        matrix: a,
    })
}

pub fn analyze(m: &Operator, spec: &NormSpec, opts: &DefectOptions) -> Result<AnalysisReport> {
    let d = DefectReport::compute(m, spec, opts)?;
    let n = m.dim();
    let bp = d.bp.value;
    let mut checks = vec![Check::le("bp <= norm", bp, d.op_norm.upper, 1e-12 * d.op_norm.upper)];

    let mut approximants = vec![
        approximant(m, spec, "diagonal_part", diagonal_part(m))?,
        approximant(m, spec, "ck_multiplier", ck_multiplier(m))?,
    ];
    if let Some(dist) = &d.dist_to_diag {
        approximants.push(approximant(m, spec, "nearest_diagonal", Operator::diagonal(&dist.minimizer))?);
    }
    if !d.bp.witness.is_empty() {
        let a = d.bp.witness.clone();
        let rest: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        let p = Partition::new(n, vec![a, rest])?;
        approximants.push(approximant(m, spec, "witness_partition_compress", partition_compress(m, &p)?)?);
        checks.push(Check::le("averaging identity residual", offdiag_average_check(m, &p)?, 0.0, 1e-12));
    }

    // Upper bounds in terms of bp need its exact value.
    if d.bp.exact {
        let diag = &approximants[0];
        checks.push(Check::le("|M - diag M| <= 4 bp", diag.distance, 4.0 * bp, 1e-8));
        checks.push(Check::le("|diag M| <= |M|", diag.norm, d.op_norm.upper, 1e-12 * d.op_norm.upper));
        if let Some(c) = approximants.iter().find(|a| a.name == "witness_partition_compress") {
            checks.push(Check::le("|M - T_P| <= 4 bp", c.distance, 4.0 * bp, 1e-8));
        }
        if *spec == NormSpec::Linf {
            checks.push(Check::le("|M - S| <= 2 bp", approximants[1].distance, 2.0 * bp, 1e-9));
        }
        checks.push(Check::le("dp <= 2 bp", d.dp_lb.value, 2.0 * bp, 1e-9));
    }
    if let Some(ip) = &d.ip {
        checks.push(Check::eq("ip = bp", ip.value, bp, 1e-9));
    }
    if let Some(c) = &d.commutator_max {
        checks.push(Check::le("bp <= commutator", bp, c.value, 1e-9));
        checks.push(Check::le("commutator <= 2 bp", c.value, 2.0 * bp, 1e-9));
    }
    if let Some(dist) = &d.dist_to_diag {
        checks.push(Check::le("bp <= dist", bp, dist.value, 1e-9));
        if d.bp.exact {
            checks.push(Check::le("dist <= 4 bp", dist.value, 4.0 * bp, 1e-8));
        }
        checks.push(Check::truth("bp = 0 iff dist = 0", (bp <= 1e-9) == (dist.value <= 1e-9)));
    }

    let inverse = if d.bp.exact {
        match inverse_defect_check(m, spec) {
            Ok(r) => {
                checks.push(Check::le("inverse bound", r.bp_inverse, r.bound, 1e-8));
                Some(r)
            }
            Err(LatticeError::IllConditioned(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let center_at_bp = if d.bp.exact && n <= CENTER_MAX_N {
        let opts = CenterOptions { seed: opts.seed, ..CenterOptions::default() };
        Some(rho_center(m, spec, bp, 1e-9, &opts)?)
    } else {
        None
    };

    Ok(AnalysisReport {
        matrix: m.clone(),
        center_at_bp,
        passed: all_passed(&checks),
        defects: d,
        approximants,
        inverse,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_report() {
        let m = Operator::diagonal(&[1.0, 2.0, -1.0]);
        let r = analyze(&m, &NormSpec::L2, &DefectOptions::default()).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.defects.bp.value, 0.0);
        assert_eq!(r.defects.dist_to_diag.as_ref().unwrap().value, 0.0);
        assert_eq!(r.approximants.len(), 4);
        let c = r.center_at_bp.unwrap();
        assert!(c.is_feasible());
        assert!((c.rho().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn general_matrix_has_four_approximants() {
        let m = Operator::from_rows(vec![vec![1.0, 0.3, 0.0], vec![-0.2, 2.0, 0.1], vec![0.0, 0.5, 1.0]])
            .unwrap();
        for spec in [NormSpec::L1, NormSpec::L2, NormSpec::Linf, NormSpec::lp(3.0).unwrap()] {
            let r = analyze(&m, &spec, &DefectOptions::default()).unwrap();
            assert!(r.passed, "{spec}: {:?}", r.checks);
            assert!(r.approximants.len() >= 3);
        }
        let r = analyze(&m, &NormSpec::Linf, &DefectOptions::default()).unwrap();
        assert_eq!(r.approximants.len(), 4);
    }
}
