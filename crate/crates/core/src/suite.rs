//! Seeded batch verification of the bound and sandwich inequalities.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bp_defect, commutator_max, dist_to_diagonal, dp_defect_lb, inverse_defect_check, ip_defect,
    operator_norm, BpOptions, DpBudget, DEFAULT_EXACT_MAX_N,
};
use crate::approx::{
    ck_multiplier, clip_to_ideal, diagonal_part, local_bp_approximant, offdiag_average_check,
    partition_compress, positive_net_infimum,
};
use crate::checks::Check;
use crate::error::{LatticeError, Result};
use crate::function::{
    apply_tn, center_witness_check, e_certificate, e_norm, renorm_certificate, ELatticeConfig,
    PLFunction, RenormOptions, SeqWithLimit,
};
use crate::lattice::{NormSpec, Partition, Vector};
use crate::operator::Operator;
use crate::rng::{stream_id, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Bounds,
    Approximants,
    Function,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Entries uniform in `[-1, 1]`.
    Uniform,
    /// Uniform entries kept with probability 0.3; the diagonal is always kept.
    Sparse,
    /// Entries uniform in `[0, 1]`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kind: SuiteKind,
    pub seed: u64,
    pub trials: usize,
    /// Matrix sizes, or the indices `n` of `T_n` for the function suite.
    pub dims: Vec<usize>,
    pub specs: Vec<NormSpec>,
    pub ensembles: Vec<Ensemble>,
    pub dp_budget: DpBudget,
}

impl SuiteConfig {
    pub fn new(kind: SuiteKind, seed: u64, trials: usize) -> Self {
        let dims = match kind {
            SuiteKind::Function => vec![3, 4, 5],
            _ => vec![2, 3, 4, 5, 6],
        };
        Self {
            kind,
            seed,
            trials,
            dims,
            specs: vec![NormSpec::L1, NormSpec::L2, NormSpec::Linf],
            ensembles: vec![Ensemble::Uniform, Ensemble::Sparse, Ensemble::Positive],
            dp_budget: DpBudget { seed, max_splits: 16, restarts: 1, max_evals: 150 },
        }
    }
}

/// Aggregate of one named inequality over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: usize,
    pub failures: usize,
    /// Smallest `rhs + tol − lhs` (or `tol − |lhs − rhs|` for equalities).
    pub worst_slack: f64,
    /// Largest `lhs / rhs` over checks with `rhs > 0`.
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub tallies: BTreeMap<String, Tally>,
    pub total_checks: usize,
    pub total_failures: usize,
    /// First few failing checks, in trial order.
    pub first_failures: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }
}

pub fn random_operator(rng: &mut impl Rng, n: usize, ensemble: Ensemble) -> Operator {
    let data = (0..n * n)
        .map(|k| match ensemble {
            Ensemble::Uniform => rng.gen_range(-1.0..=1.0),
            Ensemble::Positive => rng.gen_range(0.0..=1.0),
            Ensemble::Sparse => {
                let v = rng.gen_range(-1.0..=1.0);
                if k / n == k % n || rng.gen_bool(0.3) {
                    v
                } else {
                    0.0
                }
            }
        })
        .collect();
    Operator::from_row_major(n, data).expect("finite entries")
}

/// Random partition of `0..n` into at most `max_blocks` blocks.
pub fn random_partition(rng: &mut impl Rng, n: usize, max_blocks: usize) -> Partition {
    let k = rng.gen_range(1..=max_blocks.clamp(1, n));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut blocks: Vec<Vec<usize>> = idx[..k].iter().map(|&i| vec![i]).collect();
    for &i in &idx[k..] {
        let b = rng.gen_range(0..k);
        blocks[b].push(i);
    }
    Partition::new(n, blocks).expect("blocks cover 0..n")
}

/// Refinement chain from the one-block partition down to singletons,
/// splitting one block per step.
pub fn random_chain(rng: &mut impl Rng, n: usize) -> Vec<Partition> {
    let mut blocks: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut chain = vec![Partition::trivial(n)];
    while blocks.len() < n {
        let splittable: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].len() > 1).collect();
        let b = splittable[rng.gen_range(0..splittable.len())];
        let mut block = blocks.swap_remove(b);
        block.shuffle(rng);
        let cut = rng.gen_range(1..block.len());
        let rest = block.split_off(cut);
        blocks.push(block);
        blocks.push(rest);
        chain.push(Partition::new(n, blocks.clone()).expect("still a partition"));
    }
    chain
}

/// Random element of the truncated function lattice. Breakpoints are
/// log-uniform half of the time so that small dyadic points get hit.
pub fn random_pl_element(rng: &mut impl Rng, cfg: &ELatticeConfig, max_bp: usize) -> PLFunction {
    let floor = cfg.floor();
    let k = rng.gen_range(2..=max_bp.max(2));
    let log_scale = rng.gen_bool(0.5);
    let mut ts: Vec<f64> = (0..k)
        .map(|_| {
            if log_scale {
                (rng.gen_range(floor.log2()..=0.0f64)).exp2()
            } else {
                rng.gen_range(floor..=1.0)
            }
        })
        .map(|t: f64| t.clamp(floor, 1.0))
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let amp = rng.gen_range(-3.0..=0.0f64).exp2();
    let mut vals: Vec<f64> = ts.iter().map(|_| amp * rng.gen_range(-1.0..=1.0)).collect();
    vals[0] = 0.0;
    PLFunction::new(ts, vals).expect("sorted distinct breakpoints")
}

pub fn random_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    if config.dims.is_empty() || config.specs.is_empty() || config.ensembles.is_empty() {
        return Err(LatticeError::OutOfRange("dims, specs and ensembles must be nonempty".into()));
    }
    if config.kind != SuiteKind::Function {
        if let Some(&n) = config.dims.iter().find(|&&n| n == 0 || n > DEFAULT_EXACT_MAX_N) {
            return Err(LatticeError::CapExceeded { n, cap: DEFAULT_EXACT_MAX_N });
        }
        for spec in &config.specs {
            if !spec.has_exact_operator_norm() {
                return Err(LatticeError::UnsupportedNorm(spec.to_string()));
            }
        }
    }
    let per_trial: Vec<Result<Vec<Check>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, stream_id("suite-trial", t as u64));
            match config.kind {
                SuiteKind::Bounds => bounds_trial(config, t, &mut rng),
                SuiteKind::Approximants => approximants_trial(config, t, &mut rng),
                SuiteKind::Function => function_trial(config, t, &mut rng),
            }
        })
        .collect();
    let mut report = SuiteReport {
        config: config.clone(),
        tallies: BTreeMap::new(),
        total_checks: 0,
        total_failures: 0,
        first_failures: Vec::new(),
    };
    for checks in per_trial {
        for c in checks? {
            let slack = if c.relation == "==" { c.tol - (c.lhs - c.rhs).abs() } else { c.rhs + c.tol - c.lhs };
            let tally = report.tallies.entry(c.name.clone()).or_insert(Tally {
                checked: 0,
                failures: 0,
                worst_slack: f64::INFINITY,
                max_ratio: None,
            });
            tally.checked += 1;
            tally.worst_slack = tally.worst_slack.min(slack);
            if c.rhs > 0.0 {
                let r = c.lhs / c.rhs;
                tally.max_ratio = Some(tally.max_ratio.map_or(r, |m| m.max(r)));
            }
            report.total_checks += 1;
            if !c.passed {
                tally.failures += 1;
                report.total_failures += 1;
                if report.first_failures.len() < 10 {
                    report.first_failures.push(c);
                }
            }
        }
    }
    Ok(report)
}

fn pick<'a, T>(items: &'a [T], t: usize) -> &'a T {
    &items[t % items.len()]
}

fn bp_exact(m: &Operator, spec: &NormSpec) -> Result<f64> {
    Ok(bp_defect(m, spec, &BpOptions::default())?.value)
}

fn bounds_trial(cfg: &SuiteConfig, t: usize, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let n = *pick(&cfg.dims, t);
    let ens = *pick(&cfg.ensembles, t / cfg.dims.len());
    let m = random_operator(rng, n, ens);
    let other = random_operator(rng, n, ens);
    let c = rng.gen_range(-2.0..=2.0);
    let mut out = Vec::new();
    for spec in &cfg.specs {
        let s = spec.to_string();
        let bp = bp_exact(&m, spec)?;
        let norm = operator_norm(&m, spec)?.upper;
        out.push(Check::le(format!("{s}: bp <= norm"), bp, norm, 1e-12 * norm));
        out.push(Check::eq(format!("{s}: ip = bp"), ip_defect(&m, spec, DEFAULT_EXACT_MAX_N)?.value, bp, 1e-9));
        if let Some(dual) = spec.dual() {
            let bpt = bp_exact(&m.transpose(), &dual)?;
            out.push(Check::eq(format!("{s}: bp(M) = bp(M^T) in the dual norm"), bpt, bp, 1e-9));
        }
        let dp = dp_defect_lb(&m, spec, &DpBudget { seed: cfg.seed ^ t as u64, ..cfg.dp_budget.clone() })?;
        out.push(Check::le(format!("{s}: dp <= 2 bp"), dp.value, 2.0 * bp, 1e-9));
        let cm = commutator_max(&m, spec, DEFAULT_EXACT_MAX_N)?.value;
        out.push(Check::le(format!("{s}: bp <= commutator"), bp, cm, 1e-9));
        out.push(Check::le(format!("{s}: commutator <= 2 bp"), cm, 2.0 * bp, 1e-9));
        let dist = dist_to_diagonal(&m, spec)?.value;
        out.push(Check::le(format!("{s}: bp <= dist"), bp, dist, 1e-9));
        out.push(Check::le(format!("{s}: dist <= 4 bp"), dist, 4.0 * bp, 1e-8));
        if matches!(spec, NormSpec::L1 | NormSpec::Linf | NormSpec::Wsup { .. }) {
            out.push(Check::le(format!("{s}: dist <= 2 bp"), dist, 2.0 * bp, 1e-9));
            let bpm = bp_exact(&m.modulus(), spec)?;
            out.push(Check::eq(format!("{s}: bp(|M|) = bp(M)"), bpm, bp, 1e-9));
        }
        let bpo = bp_exact(&other, spec)?;
        let diff = operator_norm(&m.sub(&other)?, spec)?.upper;
        out.push(Check::le(format!("{s}: bp is 1-Lipschitz"), (bp - bpo).abs(), diff, 1e-9));
        let bps = bp_exact(&m.add(&other)?, spec)?;
        out.push(Check::le(format!("{s}: bp is subadditive"), bps, bp + bpo, 1e-9));
        let bpc = bp_exact(&m.scale(c), spec)?;
        out.push(Check::eq(format!("{s}: bp is homogeneous"), bpc, c.abs() * bp, 1e-9));
        out.push(Check::eq(
            format!("{s}: diagonal part has bp 0"),
            bp_exact(&diagonal_part(&m), spec)?,
            0.0,
            0.0,
        ));
        match inverse_defect_check(&m, spec) {
            Ok(r) => out.push(Check::le(format!("{s}: inverse bound"), r.bp_inverse, r.bound, 1e-8)),
            Err(LatticeError::IllConditioned(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn approximants_trial(cfg: &SuiteConfig, t: usize, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let n = *pick(&cfg.dims, t);
    let ens = *pick(&cfg.ensembles, t / cfg.dims.len());
    let m = random_operator(rng, n, ens);
    let d = diagonal_part(&m);
    let p = random_partition(rng, n, n.min(8));
    let mut out = Vec::new();
    out.push(Check::le("averaging identity residual", offdiag_average_check(&m, &p)?, 0.0, 1e-12));
    for spec in &cfg.specs {
        let s = spec.to_string();
        let bp = bp_exact(&m, spec)?;
        let norm = operator_norm(&m, spec)?.upper;
        let off = operator_norm(&m.sub(&d)?, spec)?.upper;
        out.push(Check::le(format!("{s}: |M - diag M| <= 4 bp"), off, 4.0 * bp, 1e-8));
        let dn = operator_norm(&d, spec)?.upper;
        out.push(Check::le(format!("{s}: |diag M| <= |M|"), dn, norm, 1e-12 * norm));
        let tp = partition_compress(&m, &p)?;
        let gap = operator_norm(&m.sub(&tp)?, spec)?.upper;
        out.push(Check::le(format!("{s}: |M - T_P| <= 4 bp"), gap, 4.0 * bp, 1e-8));

        let x = Vector::new((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())?;
        let y = Vector::new((0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect())?;
        let u = clip_to_ideal(&y, &x)?;
        let excess: Vec<f64> =
            y.entries().iter().zip(x.entries()).map(|(a, b)| (a.abs() - b.abs()).max(0.0)).collect();
        out.push(Check::eq(
            format!("{s}: clip residual = excess"),
            spec.norm_of(y.sub(&u)?.entries()),
            spec.norm_of(&excess),
            1e-12,
        ));
        out.push(Check::truth(format!("{s}: clip stays in the ideal"), u.abs().le(&x.abs())));
        let lambda = rng.gen_range(0.0..=norm);
        if !x.is_zero() {
            let la = local_bp_approximant(&m, &x, lambda, spec)?;
            out.push(Check::eq(format!("{s}: local residual = excess"), la.residual, la.excess, 1e-12));
            let dnorm = operator_norm(&la.d, spec)?.upper;
            out.push(Check::le(format!("{s}: local approximant norm <= lambda"), dnorm, lambda, 1e-12));
        }
        if ens == Ensemble::Positive {
            let chain = random_chain(rng, n);
            let xs: Vec<Vector> = (0..4)
                .map(|_| Vector::new((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()))
                .collect::<Result<_>>()?;
            let net = positive_net_infimum(&m, &chain, &xs, spec)?;
            out.push(Check::truth(format!("{s}: positive net is decreasing"), net.monotone));
            out.push(Check::le(format!("{s}: positive net limit within 4 bp"), net.offdiag_norm, 4.0 * net.bp, 1e-9));
        }
        if *spec == NormSpec::Linf {
            let ck = ck_multiplier(&m);
            let ck_gap = operator_norm(&m.sub(&ck)?, spec)?.upper;
            out.push(Check::le("linf: |M - S| <= 2 bp", ck_gap, 2.0 * bp, 1e-9));
            if m.is_nonnegative() {
                out.push(Check::truth("linf: multiplier of a positive map is positive", ck.is_nonnegative()));
            }
            // Disjoint unit pair from a random split.
            let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let mut part = |inside: bool| -> Vec<f64> {
                (0..n).map(|i| if mask[i] == inside { rng.gen_range(-1.0..=1.0) } else { 0.0 }).collect::<Vec<_>>()
            };
            let (xa, ya) = (part(true), part(false));
            let (nx, ny) = (spec.norm_of(&xa), spec.norm_of(&ya));
            if nx > 0.0 && ny > 0.0 {
                let mx = m.apply_slice(&xa);
                let my = m.apply_slice(&ya);
                let prod = mx.iter().zip(&my).fold(0.0f64, |a, (p, q)| a.max((p * q).abs())) / (nx * ny);
                out.push(Check::le("linf: product bound", prod, bp * norm, 1e-9));
            }
            if nx > 0.0 {
                let mx = m.apply_slice(&xa);
                let worst = (0..n).filter(|&i| xa[i] == 0.0).fold(0.0f64, |a, i| a.max(mx[i].abs()));
                out.push(Check::le("linf: image off the support", worst, bp * nx, 1e-9));
            }
        }
    }
    Ok(out)
}

fn function_trial(cfg: &SuiteConfig, t: usize, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let ecfg = ELatticeConfig::default();
    let n = *pick(&cfg.dims, t) as u32;
    let f = random_pl_element(rng, &ecfg, 12);
    let g = random_pl_element(rng, &ecfg, 12);
    let mut out = Vec::new();
    let nf = e_norm(&f, &ecfg)?;
    let ng = e_norm(&g, &ecfg)?;
    let bound = (-(n as f64)).exp2();
    if nf > 0.0 {
        out.push(Check::le("center witness <= 2^-n", center_witness_check(n, &f, &ecfg)?, bound, 1e-12));
    }
    let tf = apply_tn(n, &f, &ecfg)?;
    out.push(Check::le("T_n is a contraction", e_norm(&tf, &ecfg)?, nf, 1e-12 * (1.0 + nf)));
    let sum = f.combine(1.0, &g, 1.0);
    out.push(Check::le("triangle inequality", e_norm(&sum, &ecfg)?, nf + ng, 1e-12));
    let dom = f.abs().combine(1.0, &g.abs(), 1.0);
    out.push(Check::truth("domination holds", f.abs_le(&dom)));
    out.push(Check::le("norm is monotone", nf, e_norm(&dom, &ecfg)?, 1e-12));
    let c = rng.gen_range(-3.0..=3.0);
    out.push(Check::eq("norm is homogeneous", e_norm(&f.scale(c), &ecfg)?, c.abs() * nf, 1e-12 * (1.0 + nf)));
    let lin = apply_tn(n, &f.combine(1.0, &g, c), &ecfg)?;
    let sep = apply_tn(n, &f, &ecfg)?.combine(1.0, &apply_tn(n, &g, &ecfg)?, c);
    out.push(Check::le("T_n is linear", e_norm(&lin.combine(1.0, &sep, -1.0), &ecfg)?, 0.0, 1e-12));
    let m = if n == 2 { 3 } else { n - 1 };
    out.push(Check::eq(
        "T_n T_m = 0",
        e_norm(&apply_tn(n, &apply_tn(m, &f, &ecfg)?, &ecfg)?, &ecfg)?,
        0.0,
        0.0,
    ));
    let base = random_pl_element(rng, &ecfg, 20);
    let mut ts = base.breakpoints().to_vec();
    if ts[0] > ecfg.floor() {
        ts.insert(0, ecfg.floor());
    }
    let phi = PLFunction::new(ts.clone(), ts.iter().map(|_| rng.gen_range(-1.5..=1.5)).collect())?;
    out.push(Check::le("e-certificate >= 1/2", 0.5, e_certificate(n, &phi, &ecfg)?.lower_bound, 1e-12));
    let eps = [0.5, 0.1, 0.01][t % 3];
    let len = rng.gen_range(1..=8);
    let delta = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..=0.5) };
    let psi = SeqWithLimit::new(
        (0..len).map(|_| rng.gen_range(-1.5..=1.5)).collect(),
        rng.gen_range(-1.5..=1.5),
        delta,
    )?;
    let rc = renorm_certificate(eps, &psi, &RenormOptions { samples: 16, seed: cfg.seed })?;
    out.push(Check::le("renorm certificate >= (1 - delta)/2", rc.guarantee, rc.lower_bound, 1e-12));
    out.push(Check::truth("renorm map is a contraction", rc.contraction_ok));
    out.push(Check::truth("renorm map is an eps-center", rc.center_ok));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linf_suite_has_no_failures() {
        let mut cfg = SuiteConfig::new(SuiteKind::Bounds, 42, 100);
        cfg.dims = vec![5];
        cfg.specs = vec![NormSpec::Linf];
        let r = random_suite(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.first_failures);
        assert_eq!(r, random_suite(&cfg).unwrap());
    }

    #[test]
    fn ck_bound_is_tight_in_dimension_two() {
        let mut cfg = SuiteConfig::new(SuiteKind::Approximants, 7, 30);
        cfg.dims = vec![2];
        cfg.specs = vec![NormSpec::Linf];
        let r = random_suite(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.first_failures);
        let ratio = r.tallies["linf: |M - S| <= 2 bp"].max_ratio.unwrap();
        assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn positive_ensemble_traces_decrease() {
        let mut cfg = SuiteConfig::new(SuiteKind::Approximants, 42, 30);
        cfg.ensembles = vec![Ensemble::Positive];
        let r = random_suite(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.first_failures);
        assert!(r.tallies["linf: positive net is decreasing"].checked > 0);
    }

    #[test]
    fn function_suite_passes() {
        let r = random_suite(&SuiteConfig::new(SuiteKind::Function, 1, 60)).unwrap();
        assert!(r.passed(), "{:?}", r.first_failures);
    }

    #[test]
    fn chains_refine_down_to_singletons() {
        let mut rng = stream_rng(5, 0);
        let chain = random_chain(&mut rng, 6);
        assert_eq!(chain.len(), 6);
        assert!(chain.windows(2).all(|w| w[0].precedes(&w[1])));
        assert!(chain.last().unwrap().is_finest());
    }
}
