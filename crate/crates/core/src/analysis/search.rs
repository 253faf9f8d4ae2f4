//! Derivative-free coordinate ascent on norm spheres.

/// Step-halving coordinate pattern search maximizing `f`.
///
/// Moves are `x_j ± h` and `x_j = 0`; after each move `renormalize` projects
/// back onto the feasible sphere and may veto the point by returning `false`.
/// Only strict improvements are accepted, so the returned value is `f` at the
/// returned point.
pub(crate) fn pattern_search(
    mut x: Vec<f64>,
    f: impl Fn(&[f64]) -> f64,
    renormalize: impl Fn(&mut [f64]) -> bool,
    max_evals: usize,
) -> (f64, Vec<f64>) {
    if !renormalize(&mut x) {
        return (f64::NEG_INFINITY, x);
    }
    let mut best = f(&x);
    let mut evals = 1usize;
    let mut h = 0.5 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
    let h_min = 1e-10 * h;
    let mut trial = x.clone();
    while h > h_min && evals < max_evals {
        let mut improved = false;
        for j in 0..x.len() {
            for mv in 0..3 {
                trial.copy_from_slice(&x);
                trial[j] = match mv {
                    0 => x[j] + h,
                    1 => x[j] - h,
                    _ if x[j] != 0.0 => 0.0,
                    _ => continue,
                };
                if !renormalize(&mut trial) {
                    continue;
                }
                let v = f(&trial);
                evals += 1;
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
            if evals >= max_evals {
                break;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (best, x)
}
