//! Dense linear algebra kernels: rectangular blocks, one-sided Jacobi SVD,
//! power iteration and Gauss-Jordan inversion.

/// Row-major rectangular matrix used for blocks and intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Dense {
        let mut t = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }
}

/// Thin SVD factors: `A = U diag(sigma) Vᵀ`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub sigma: Vec<f64>,
    /// Left singular vectors, one per singular value (length `rows`).
    pub u: Vec<Vec<f64>>,
    /// Right singular vectors (length `cols`).
    pub v: Vec<Vec<f64>>,
    pub converged: bool,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn jacobi_svd(a: &Dense) -> Svd {
    if a.cols > a.rows {
        let t = jacobi_svd(&a.transpose());
        return Svd { sigma: t.sigma, u: t.v, v: t.u, converged: t.converged };
    }
    let (m, k) = (a.rows, a.cols);
    // Work column-major: cols[j] is the j-th column.
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| (0..m).map(|i| a.at(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut converged = k <= 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (cp, cq) = split_two(&mut cols, p, q);
                rotate(cp, cq, c, s);
                let (vp, vq) = split_two(&mut v, p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut svd = Svd { sigma: Vec::with_capacity(k), u: Vec::new(), v: Vec::new(), converged };
    for (s, j) in order {
        let u = if s > 0.0 { cols[j].iter().map(|x| x / s).collect() } else { vec![0.0; m] };
        svd.sigma.push(s);
        svd.u.push(u);
        svd.v.push(v[j].clone());
    }
    svd
}

fn split_two<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Largest singular value via power iteration on `AᵀA`, using matrix-free
/// products. Returns `(estimate, iterations)`; the estimate is a lower bound
/// that converges from below.
pub fn power_sigma_max(
    cols: usize,
    apply: impl Fn(&[f64], &mut Vec<f64>),
    apply_t: impl Fn(&[f64], &mut Vec<f64>),
    tol: f64,
    max_iter: usize,
) -> (f64, usize) {
    if cols == 0 {
        return (0.0, 0);
    }
    // Deterministic start with no special alignment to basis vectors.
    let mut v: Vec<f64> = (0..cols).map(|i| 1.0 + 0.1 * ((i * 7919 % 97) as f64 / 97.0)).collect();
    normalize(&mut v);
    let (mut av, mut w) = (Vec::new(), Vec::new());
    let mut est = 0.0;
    for it in 1..=max_iter {
        apply(&v, &mut av);
        let s = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        apply_t(&av, &mut w);
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn == 0.0 {
            return (s.max(est), it);
        }
        let done = (s - est).abs() <= tol * s.max(1e-300);
        est = s.max(est);
        if done {
            return (est, it);
        }
        v.clear();
        v.extend(w.iter().map(|x| x / wn));
    }
    (est, max_iter)
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Largest singular value of a dense matrix.
pub fn sigma_max(a: &Dense) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.rows.min(a.cols) <= JACOBI_MAX_DIM {
        let svd = jacobi_svd(a);
        if svd.converged {
            return svd.sigma[0];
        }
    }
    power_sigma_max(
        a.cols,
        |x, out| {
            out.resize(a.rows, 0.0);
            a.mul_vec(x, out)
        },
        |y, out| {
            out.resize(a.cols, 0.0);
            a.mul_t_vec(y, out)
        },
        1e-13,
        10_000,
    )
    .0
}

/// Above this size the ℓ₂ norm falls back to power iteration.
pub const JACOBI_MAX_DIM: usize = 160;

/// Gauss-Jordan inverse with partial pivoting; `None` when a pivot vanishes.
pub fn invert(a: &Dense) -> Option<Dense> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = Dense::zeros(n, n);
    for i in 0..n {
        inv.set(i, i, 1.0);
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| m.at(r, col).abs().total_cmp(&m.at(s, col).abs()))?;
        let pv = m.at(piv, col);
        if pv == 0.0 || !pv.is_finite() {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
                inv.data.swap(piv * n + j, col * n + j);
            }
        }
        for j in 0..n {
            m.data[col * n + j] /= pv;
            inv.data[col * n + j] /= pv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m.at(r, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m.data[r * n + j] -= f * m.data[col * n + j];
                inv.data[r * n + j] -= f * inv.data[col * n + j];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: usize, cols: usize, data: &[f64]) -> Dense {
        Dense { rows, cols, data: data.to_vec() }
    }

    #[test]
    fn svd_of_known_matrices() {
        let a = dense(2, 2, &[3.0, 0.0, 4.0, 5.0]);
        let s = jacobi_svd(&a);
        // singular values of [[3,0],[4,5]] are sqrt(45) and sqrt(5)
        assert!((s.sigma[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((s.sigma[1] - 5f64.sqrt()).abs() < 1e-12);

        let wide = dense(1, 3, &[1.0, 2.0, 2.0]);
        assert!((sigma_max(&wide) - 3.0).abs() < 1e-14);
        assert_eq!(sigma_max(&dense(2, 2, &[0.0, 0.1, 0.1, 0.0])), 0.1);
    }

    #[test]
    fn svd_reconstructs() {
        let a = dense(3, 2, &[1.0, -2.0, 0.5, 3.0, -1.0, 0.25]);
        let s = jacobi_svd(&a);
        for i in 0..3 {
            for j in 0..2 {
                let r: f64 = (0..2).map(|k| s.u[k][i] * s.sigma[k] * s.v[k][j]).sum();
                assert!((r - a.at(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_iteration_agrees_with_jacobi() {
        let a = dense(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let exact = jacobi_svd(&a).sigma[0];
        let (est, _) = power_sigma_max(
            3,
            |x, out| {
                out.resize(3, 0.0);
                a.mul_vec(x, out)
            },
            |y, out| {
                out.resize(3, 0.0);
                a.mul_t_vec(y, out)
            },
            1e-15,
            10_000,
        );
        assert!((est - exact).abs() < 1e-9, "{est} vs {exact}");
    }

    #[test]
    fn inverse_round_trip() {
        let a = dense(3, 3, &[0.0, 2.0, 1.0, 1.0, 0.0, 0.0, 3.0, 1.0, 4.0]);
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| a.at(i, k) * inv.at(k, j)).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        assert!(invert(&dense(2, 2, &[1.0, 2.0, 2.0, 4.0])).is_none());
    }
}
