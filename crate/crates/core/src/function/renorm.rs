//! Convergent sequences `(x_1, …, x_M, …) → x_lim` under
//! `⦀x⦀ = max{‖x‖∞, ε⁻¹ |x_lim|}`, and the rank-one map `T x = x_lim 𝟏`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::rng::{stream_id, stream_rng};

/// `M` modeled entries, the limit, and a declared bound `δ` on
/// `|x_m − x_lim|` for every unmodeled `m > M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqWithLimit {
    pub entries: Vec<f64>,
    pub limit: f64,
    #[serde(default)]
    pub delta: f64,
}

impl SeqWithLimit {
    pub fn new(entries: Vec<f64>, limit: f64, delta: f64) -> Result<Self> {
        let s = Self { entries, limit, delta };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(m: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; m], c, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(LatticeError::InvalidVector("sequence needs at least one entry".into()));
        }
        if self.entries.iter().chain([&self.limit]).any(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidVector("entries must be finite".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(LatticeError::OutOfRange(format!("delta must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { entries: self.entries.iter().map(|&v| f(v)).collect(), limit: f(self.limit), delta: 0.0 }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LatticeError::OutOfRange(format!("eps must be in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `⦀x⦀` with the unmodeled tail equal to the limit.
pub fn renorm_norm(x: &SeqWithLimit, eps: f64) -> f64 {
    let sup = x.entries.iter().fold(x.limit.abs(), |m, v| m.max(v.abs()));
    sup.max(x.limit.abs() / eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqWitness {
    pub label: String,
    pub x: SeqWithLimit,
    pub norm: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for RenormOptions {
    fn default() -> Self {
        Self { samples: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormCertificate {
    pub epsilon: f64,
    /// `max(max_m |ψ_m|, (|ψ_lim| − δ)₊, |1 − ψ_lim|)`.
    pub lower_bound: f64,
    /// `(1 − δ)/2`, which `lower_bound` never undercuts.
    pub guarantee: f64,
    pub isolated_bound: f64,
    /// Bound from isolated points beyond `M`, where `|ψ_m| ≥ |ψ_lim| − δ`.
    pub tail_bound: f64,
    pub limit_bound: f64,
    pub witnesses: Vec<SeqWitness>,
    pub contraction_ok: bool,
    pub center_ok: bool,
    pub samples: usize,
}

/// Lower bound on `⦀T − M_ψ⦀` for the multiplication operator `M_ψ`,
/// plus sampled checks that `T` is a contraction with `(|Tx| − |x|)₊` of
/// norm at most `ε⦀x⦀`.
pub fn renorm_certificate(
    eps: f64,
    psi: &SeqWithLimit,
    opts: &RenormOptions,
) -> Result<RenormCertificate> {
    check_eps(eps)?;
    psi.validate()?;
    let m = psi.entries.len();

    let (mut isolated, mut arg) = (0.0f64, 0);
    for (k, v) in psi.entries.iter().enumerate() {
        if v.abs() > isolated {
            (isolated, arg) = (v.abs(), k);
        }
    }
    let tail_bound = (psi.limit.abs() - psi.delta).max(0.0);
    let limit_bound = (1.0 - psi.limit).abs();

    // T kills e_m, so (T − M_ψ)e_m = −ψ_m e_m.
    let mut e = vec![0.0; m];
    e[arg] = 1.0;
    let e = SeqWithLimit::new(e, 0.0, 0.0)?;
    let e_img = SeqWithLimit { entries: psi.entries.iter().zip(&e.entries).map(|(p, x)| -p * x).collect(), limit: 0.0, delta: 0.0 };
    // ⦀ε𝟏⦀ = 1 and the limit coordinate of (T − M_ψ)ε𝟏 is ε(1 − ψ_lim).
    let one = SeqWithLimit::constant(m, eps)?;
    let one_img = SeqWithLimit {
        entries: psi.entries.iter().map(|p| eps - p * eps).collect(),
        limit: eps - psi.limit * eps,
        delta: 0.0,
    };
    let witnesses = vec![
        SeqWitness {
            label: format!("isolated point {}", arg + 1),
            norm: renorm_norm(&e, eps),
            value: renorm_norm(&e_img, eps),
            x: e,
        },
        SeqWitness {
            label: "eps times the unit".into(),
            norm: renorm_norm(&one, eps),
            value: renorm_norm(&one_img, eps),
            x: one,
        },
    ];

    let mut rng = stream_rng(opts.seed, stream_id("renorm-samples", m as u64));
    let (mut contraction_ok, mut center_ok) = (true, true);
    for s in 0..opts.samples {
        let scale = if s % 2 == 0 { 1.0 } else { eps };
        let x = SeqWithLimit {
            entries: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            limit: scale * rng.gen_range(-1.0..1.0),
            delta: 0.0,
        };
        let nx = renorm_norm(&x, eps);
        let tx = x.map(|_| x.limit);
        contraction_ok &= renorm_norm(&tx, eps) <= nx * (1.0 + 1e-12);
        let y = SeqWithLimit {
            entries: tx.entries.iter().zip(&x.entries).map(|(a, b)| (a.abs() - b.abs()).max(0.0)).collect(),
            limit: (tx.limit.abs() - x.limit.abs()).max(0.0),
            delta: 0.0,
        };
        center_ok &= renorm_norm(&y, eps) <= eps * nx * (1.0 + 1e-12);
    }

    Ok(RenormCertificate {
        epsilon: eps,
        lower_bound: isolated.max(tail_bound).max(limit_bound),
        guarantee: 0.5 * (1.0 - psi.delta),
        isolated_bound: isolated,
        tail_bound,
        limit_bound,
        witnesses,
        contraction_ok,
        center_ok,
        samples: opts.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_multipliers() {
        let opts = RenormOptions::default();
        for (c, want) in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.5)] {
            let psi = SeqWithLimit::constant(5, c).unwrap();
            let r = renorm_certificate(0.1, &psi, &opts).unwrap();
            assert_eq!(r.lower_bound, want);
            assert!(r.contraction_ok && r.center_ok);
            assert!(r.witnesses.iter().all(|w| w.norm == 1.0));
        }
    }

    #[test]
    fn tail_term_covers_a_jump_at_the_limit() {
        // Modeled entries vanish but the tail follows a limit of 0.9.
        let psi = SeqWithLimit::new(vec![0.0; 4], 0.9, 0.0).unwrap();
        let r = renorm_certificate(0.5, &psi, &RenormOptions::default()).unwrap();
        assert!((r.lower_bound - 0.9).abs() < 1e-15);
        let psi = SeqWithLimit::new(vec![0.0; 4], 0.6, 0.2).unwrap();
        let r = renorm_certificate(0.5, &psi, &RenormOptions::default()).unwrap();
        assert!(r.lower_bound >= r.guarantee);
    }

    #[test]
    fn argument_errors() {
        let psi = SeqWithLimit::constant(2, 0.0).unwrap();
        assert!(renorm_certificate(1.0, &psi, &RenormOptions::default()).is_err());
        assert!(renorm_certificate(0.0, &psi, &RenormOptions::default()).is_err());
        assert!(SeqWithLimit::new(vec![1.0], 1.0, -0.1).is_err());
        assert!(SeqWithLimit::new(vec![], 1.0, 0.0).is_err());
    }
}
