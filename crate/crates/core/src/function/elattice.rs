//! The rank-one maps `T_n f = f(2^{-n}) x_n` on the truncated lattice of
//! piecewise-linear functions with norm `max{‖f‖∞, max_k 2^k |f(2^{-k})|}`,
//! and certificates that no multiplication operator comes within `1/2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pl::{dyadic, ELatticeConfig, PLFunction};
use crate::error::{LatticeError, Result};
use crate::rng::{stream_id, stream_rng};

fn weighted_sup(f: &PLFunction, cfg: &ELatticeConfig) -> f64 {
    (1..=cfg.depth).fold(f.sup_abs(), |m, k| m.max(f.eval(dyadic(k)).abs() / dyadic(k)))
}

/// `‖f‖_E`. Dyadic points need not be breakpoints; `f` is evaluated there.
pub fn e_norm(f: &PLFunction, cfg: &ELatticeConfig) -> Result<f64> {
    f.check_element(cfg)?;
    Ok(weighted_sup(f, cfg))
}

/// The hat `x_n`: 0 up to `2^{-n-1}`, 1 at `2^{-n}`, 0 from `2^{1-n}` on.
pub fn hat(n: u32) -> PLFunction {
    PLFunction::new(vec![dyadic(n + 1), dyadic(n), dyadic(n - 1)], vec![0.0, 1.0, 0.0])
        .expect("dyadic hat is well formed")
}

fn check_n(n: u32, cfg: &ELatticeConfig) -> Result<()> {
    if n < 2 || n + 1 > cfg.depth {
        return Err(LatticeError::OutOfRange(format!(
            "n must be in 2..={} for depth {}, got {n}",
            cfg.depth - 1,
            cfg.depth
        )));
    }
    Ok(())
}

/// `T_n f = f(2^{-n}) x_n`.
pub fn apply_tn(n: u32, f: &PLFunction, cfg: &ELatticeConfig) -> Result<PLFunction> {
    check_n(n, cfg)?;
    f.check_element(cfg)?;
    Ok(hat(n).scale(f.eval(dyadic(n))))
}

/// `‖(|T_n f| − |f|)₊‖_E / ‖f‖_E`, computed exactly on the merged grid.
pub fn center_witness_check(n: u32, f: &PLFunction, cfg: &ELatticeConfig) -> Result<f64> {
    let tn = apply_tn(n, f, cfg)?;
    let nf = weighted_sup(f, cfg);
    if nf == 0.0 {
        return Err(LatticeError::InvalidFunction("f must be nonzero".into()));
    }
    let excess = tn.abs().combine(1.0, &f.abs(), -1.0).pos();
    Ok(weighted_sup(&excess, cfg) / nf)
}

/// A unit test function and the lower bound it yields for `‖T_n − M_φ‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub function: PLFunction,
    pub norm: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECertificate {
    pub n: u32,
    /// `max(sup|φ|, |1 − φ(2^{-n})|)`.
    pub lower_bound: f64,
    pub sup_phi: f64,
    pub phi_at_peak: f64,
    /// Best value realized by the explicit witnesses; below `lower_bound`
    /// only by the continuity gap when `sup|φ|` sits on a dyadic point.
    pub witnessed: f64,
    pub witnesses: Vec<Witness>,
}

fn is_dyadic(t: f64, cfg: &ELatticeConfig) -> bool {
    (0..=cfg.depth + 1).any(|k| t == dyadic(k))
}

/// Bump of height 1 at `t` inside the dyadic gap containing `t`.
fn gap_bump(t: f64) -> PLFunction {
    let mut k = 0;
    while dyadic(k) >= t {
        k += 1;
    }
    let (lo, hi) = (dyadic(k), dyadic(k - 1));
    let w = 0.5 * (t - lo).min(hi - t);
    PLFunction::new(vec![t - w, t, t + w], vec![0.0, 1.0, 0.0]).expect("bump is well formed")
}

/// Lower bound on `‖T_n − M_φ‖` over the multiplication operators `M_φ`.
pub fn e_certificate(n: u32, phi: &PLFunction, cfg: &ELatticeConfig) -> Result<ECertificate> {
    check_n(n, cfg)?;
    phi.check_multiplier(cfg)?;
    let floor = cfg.floor();
    let peak = dyadic(n);
    let mut points: Vec<f64> = phi.breakpoints().iter().copied().filter(|&t| t >= floor).collect();
    points.extend([floor, 1.0, peak]);
    let (mut sup_phi, mut argmax) = (-1.0, floor);
    for &t in &points {
        let v = phi.eval(t).abs();
        if v > sup_phi || (v == sup_phi && t < argmax) {
            (sup_phi, argmax) = (v, t);
        }
    }
    let phi_at_peak = phi.eval(peak);

    // Off the dyadic points T_n kills the bump, leaving ‖φ·bump‖ ≥ |φ(t)|.
    let t = if !is_dyadic(argmax, cfg) {
        argmax
    } else if argmax <= floor {
        argmax * (1.0 + 1e-9)
    } else {
        argmax * (1.0 - 1e-9)
    };
    let bump = gap_bump(t);
    let w1 = Witness {
        label: "bump off the dyadic points".into(),
        norm: weighted_sup(&bump, cfg),
        value: phi.eval(t).abs(),
        function: bump,
    };
    // x = 2^{-n} x_n has unit norm and (T_n − M_φ)x = 2^{-n}(1 − φ(2^{-n})) at the peak.
    let x = hat(n).scale(peak);
    let tn_x = hat(n).scale(x.eval(peak));
    let w2 = Witness {
        label: "scaled hat at 2^-n".into(),
        norm: weighted_sup(&x, cfg),
        value: (tn_x.eval(peak) - phi_at_peak * x.eval(peak)).abs() / peak,
        function: x,
    };
    Ok(ECertificate {
        n,
        lower_bound: sup_phi.max((1.0 - phi_at_peak).abs()),
        sup_phi,
        phi_at_peak,
        witnessed: w1.value.max(w2.value),
        witnesses: vec![w1, w2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialOptions {
    pub candidates: usize,
    pub max_breakpoints: usize,
    pub seed: u64,
}

impl Default for AdversarialOptions {
    fn default() -> Self {
        Self { candidates: 10_000, max_breakpoints: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReport {
    pub n: u32,
    pub evaluated: usize,
    pub min_bound: f64,
    pub argmin: PLFunction,
    /// Candidates whose certificate fell below `1/2 − 1e-12`.
    pub violations: usize,
}

fn random_phi(rng: &mut impl Rng, floor: f64, max_bp: usize) -> PLFunction {
    let k = rng.gen_range(2..=max_bp.max(2));
    let mut ts: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(floor..=1.0)).collect();
    ts.push(floor);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let center = rng.gen_range(-0.5..1.5);
    let spread = rng.gen_range(0.0..1.0f64).powi(3);
    let vals = ts.iter().map(|_| center + rng.gen_range(-spread..=spread)).collect();
    PLFunction::new(ts, vals).expect("sorted distinct breakpoints")
}

/// Tries to push `e_certificate` below `1/2`: random multipliers first,
/// then hill climbing on the values of the best one found.
pub fn adversarial_phi_search(
    n: u32,
    cfg: &ELatticeConfig,
    opts: &AdversarialOptions,
) -> Result<AdversarialReport> {
    check_n(n, cfg)?;
    let floor = cfg.floor();
    let mut rng = stream_rng(opts.seed, stream_id("adversarial-phi", n as u64));
    let eval = |phi: &PLFunction, report: &mut AdversarialReport| -> Result<f64> {
        let v = e_certificate(n, phi, cfg)?.lower_bound;
        report.evaluated += 1;
        if v < 0.5 - 1e-12 {
            report.violations += 1;
        }
        if v < report.min_bound {
            report.min_bound = v;
            report.argmin = phi.clone();
        }
        Ok(v)
    };
    let mut report = AdversarialReport {
        n,
        evaluated: 0,
        min_bound: f64::INFINITY,
        argmin: PLFunction::constant_from(floor, 0.0)?,
        violations: 0,
    };
    let random_budget = opts.candidates / 2;
    for _ in 0..random_budget {
        let phi = random_phi(&mut rng, floor, opts.max_breakpoints);
        eval(&phi, &mut report)?;
    }
    let mut current = report.argmin.clone();
    let mut current_v = report.min_bound;
    let mut step = 0.25;
    while report.evaluated < opts.candidates {
        let mut vals = current.values().to_vec();
        if rng.gen_bool(0.5) {
            let j = rng.gen_range(0..vals.len());
            vals[j] += rng.gen_range(-step..=step);
        } else {
            let shift = rng.gen_range(-step..=step);
            vals.iter_mut().for_each(|v| *v += shift);
        }
        let cand = PLFunction::new(current.breakpoints().to_vec(), vals)?;
        let v = eval(&cand, &mut report)?;
        if v < current_v {
            (current, current_v) = (cand, v);
        } else {
            step = (step * 0.995).max(1e-9);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ELatticeConfig {
        ELatticeConfig::default()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(e_norm(&PLFunction::zero(), &cfg()).unwrap(), 0.0);
        assert_eq!(e_norm(&hat(3), &cfg()).unwrap(), 8.0);
        let f = PLFunction::new(vec![0.25, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(e_norm(&f, &cfg()).unwrap(), 2.0);
        let g = PLFunction::new(vec![0.25, 0.75, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        // g(1/2) = 1/2, so the dyadic term ties the sup norm.
        assert_eq!(e_norm(&g, &cfg()).unwrap(), 1.0);
    }

    #[test]
    fn tn_examples() {
        for n in 2..=6 {
            assert_eq!(apply_tn(n, &hat(n), &cfg()).unwrap(), hat(n));
            for m in 2..=6 {
                if m != n {
                    assert!(apply_tn(n, &hat(m), &cfg()).unwrap().is_zero());
                }
            }
        }
        assert!(apply_tn(1, &hat(3), &cfg()).is_err());
        assert!(apply_tn(12, &hat(3), &cfg()).is_err());
    }

    #[test]
    fn center_witness_examples() {
        assert_eq!(center_witness_check(4, &hat(4), &cfg()).unwrap(), 0.0);
        assert_eq!(center_witness_check(4, &hat(3), &cfg()).unwrap(), 0.0);
        assert!(center_witness_check(4, &PLFunction::zero(), &cfg()).is_err());
        // Small f near the peak: the excess is spread over the hat.
        let f = PLFunction::new(vec![0.05, 0.0625, 0.07], vec![0.0, 0.01, 0.0]).unwrap();
        let v = center_witness_check(4, &f, &cfg()).unwrap();
        assert!(v > 0.0 && v <= 0.0625 + 1e-12, "{v}");
    }

    #[test]
    fn certificate_examples() {
        let floor = cfg().floor();
        let c = |v: f64| PLFunction::constant_from(floor, v).unwrap();
        assert_eq!(e_certificate(4, &c(0.0), &cfg()).unwrap().lower_bound, 1.0);
        let one = e_certificate(4, &c(1.0), &cfg()).unwrap();
        assert_eq!((one.lower_bound, one.witnessed), (1.0, 1.0));
        let half = e_certificate(4, &c(0.5), &cfg()).unwrap();
        assert_eq!((half.lower_bound, half.witnessed), (0.5, 0.5));
        for w in &half.witnesses {
            assert!((w.norm - 1.0).abs() < 1e-15, "{w:?}");
        }
    }

    #[test]
    fn adversarial_search_respects_floor() {
        let opts = AdversarialOptions { candidates: 2000, max_breakpoints: 50, seed: 3 };
        let r = adversarial_phi_search(3, &cfg(), &opts).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.min_bound >= 0.5 - 1e-12 && r.min_bound < 0.6, "{}", r.min_bound);
    }
}
