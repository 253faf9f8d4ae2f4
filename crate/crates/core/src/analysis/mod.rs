//! Norms and defect functionals of operators on `R^n`.

mod center;
mod defect;
mod distance;
mod inverse;
mod opnorm;
pub(crate) mod search;
pub(crate) mod subsets;

use serde::{Deserialize, Serialize};

pub use center::{rho_center, CenterEstimate, CenterOptions};
pub use defect::{
    bp_defect, bp_defect_oracle, bp_definition_value, commutator_max, dp_defect_lb, dp_pair_value,
    ip_defect, BpDefect, BpOptions, DpBound, DpBudget, OracleBound, OracleBudget, SearchMode,
    DEFAULT_EXACT_MAX_N, MAX_SEARCH_N,
};
pub use distance::{dist_to_diagonal, DiagonalDistance, DistStatus};
pub use inverse::{inverse_defect_check, InverseReport, CONDITION_LIMIT, INVERSE_SLACK};
pub use opnorm::{operator_norm, Bracket};

use crate::error::Result;
use crate::lattice::NormSpec;
use crate::operator::Operator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectOptions {
    pub exact_max_n: usize,
    pub seed: u64,
    pub dp_budget: DpBudget,
}

impl Default for DefectOptions {
    fn default() -> Self {
        Self { exact_max_n: DEFAULT_EXACT_MAX_N, seed: 0, dp_budget: DpBudget::default() }
    }
}

/// Every defect of one operator under one norm. Fields needing exact
/// enumeration are `None` when the dimension or norm rules it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub norm_spec: NormSpec,
    pub n: usize,
    pub op_norm: Bracket,
    pub bp: BpDefect,
    pub ip: Option<BpDefect>,
    pub dp_lb: DpBound,
    pub commutator_max: Option<BpDefect>,
    pub dist_to_diag: Option<DiagonalDistance>,
    pub seed: u64,
}

impl DefectReport {
    pub fn compute(m: &Operator, spec: &NormSpec, opts: &DefectOptions) -> Result<Self> {
        spec.check_dim(m.dim())?;
        let n = m.dim();
        let exact = spec.has_exact_operator_norm() && n <= opts.exact_max_n;
        let bp = bp_defect(m, spec, &BpOptions::auto(n, spec, opts.exact_max_n, opts.seed))?;
        let dp_budget = DpBudget { seed: opts.seed, ..opts.dp_budget.clone() };
        Ok(Self {
            norm_spec: spec.clone(),
            n,
            op_norm: operator_norm(m, spec)?,
            ip: if exact { Some(ip_defect(m, spec, opts.exact_max_n)?) } else { None },
            dp_lb: dp_defect_lb(m, spec, &dp_budget)?,
            commutator_max: if exact { Some(commutator_max(m, spec, opts.exact_max_n)?) } else { None },
            dist_to_diag: if spec.has_exact_operator_norm() {
                Some(dist_to_diagonal(m, spec)?)
            } else {
                None
            },
            bp,
            seed: opts.seed,
        })
    }
}
