//! Sparse linear solvers: banded LU with partial pivoting under a reverse
//! Cuthill–McKee ordering, and restarted GMRES with Jacobi preconditioning.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern.
/// Returns `order[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Lower and upper bandwidth of `a` under the ordering `order[new] = old`.
fn bandwidths(a: &CsrMatrix, inv: &[usize]) -> (usize, usize) {
    let (mut kl, mut ku) = (0, 0);
    for i in 0..a.dim() {
        for (j, _) in a.row(i) {
            let (ni, nj) = (inv[i], inv[j]);
            if ni > nj {
                kl = kl.max(ni - nj);
            } else {
                ku = ku.max(nj - ni);
            }
        }
    }
    (kl, ku)
}

/// LU factors of a row-permuted, reordered band matrix.
///
/// Row `i` of the working array holds columns `i − kl .. i − kl + width`, which
/// leaves room for the fill that partial pivoting adds above the diagonal.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    order: Vec<usize>,
    pivots: Vec<usize>,
    /// Multipliers: `lower[k·kl + (r − k − 1)]` for rows `r` below pivot `k`.
    lower: Vec<f64>,
    band: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let identity: Vec<usize> = (0..n).collect();
        let rcm = reverse_cuthill_mckee(a);
        let mut inv_rcm = vec![0; n];
        for (new, &old) in rcm.iter().enumerate() {
            inv_rcm[old] = new;
        }
        let (kl0, ku0) = bandwidths(a, &identity);
        let (kl1, ku1) = bandwidths(a, &inv_rcm);
        let (order, inv, kl, ku) = if kl1 + ku1 < kl0 + ku0 {
            (rcm, inv_rcm, kl1, ku1)
        } else {
            (identity.clone(), identity, kl0, ku0)
        };
        let width = 2 * kl + ku + 1;
        let idx = |row: usize, col: usize| row * width + (col + kl - row);

        let mut band = vec![0.0; n * width];
        for (new, &old) in order.iter().enumerate() {
            for (j, v) in a.row(old) {
                band[idx(new, inv[j])] += v;
            }
        }

        let scale = a.max_abs();
        let tiny = (n.max(1) as f64) * f64::EPSILON * scale;
        let mut pivots = vec![0; n];
        let mut lower = vec![0.0; n * kl];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let (p, best) = (k..=last)
                .map(|r| (r, band[idx(r, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > tiny) {
                return Err(Error::Singular {
                    row: order[k],
                    pivot: best.max(0.0),
                });
            }
            pivots[k] = p;
            let end = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=end {
                    band.swap(idx(k, c), idx(p, c));
                }
            }
            let (head, tail) = band.split_at_mut((k + 1) * width);
            let prow = &head[k * width..];
            let pivot = prow[kl];
            let span = end - k;
            let psrc = &prow[kl + 1..kl + 1 + span];
            for r in (k + 1)..=last {
                let base = (r - k - 1) * width;
                let off = k + kl - r;
                let f = tail[base + off] / pivot;
                lower[k * kl + (r - k - 1)] = f;
                if f == 0.0 {
                    continue;
                }
                tail[base + off] = 0.0;
                let dst = &mut tail[base + off + 1..base + off + 1 + span];
                for (d, s) in dst.iter_mut().zip(psrc) {
                    *d -= f * s;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            order,
            pivots,
            lower,
            band,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let (n, kl, w) = (self.n, self.kl, self.width);
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            let last = (k + kl).min(n - 1);
            for r in (k + 1)..=last {
                y[r] -= self.lower[k * kl + (r - k - 1)] * yk;
            }
        }
        for k in (0..n).rev() {
            let row = &self.band[k * w..(k + 1) * w];
            let end = (k + w - kl - 1).min(n - 1);
            let mut s = y[k];
            for j in (k + 1)..=end {
                s -= row[j + kl - k] * y[j];
            }
            y[k] = s / row[kl];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    a.mul_vec_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Direct solve followed by up to `refine` steps of iterative refinement.
pub fn direct_solve(a: &CsrMatrix, b: &[f64], rtol: f64, refine: usize) -> Result<(Vec<f64>, f64)> {
    let lu = BandLu::factor(a)?;
    let mut x = lu.solve(b)?;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = residual(a, &x, b);
    let mut rel = norm2(&r) / bnorm;
    for _ in 0..refine {
        if rel <= rtol {
            break;
        }
        let dx = lu.solve(&r)?;
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let r_trial = residual(a, &trial, b);
        let rel_trial = norm2(&r_trial) / bnorm;
        if rel_trial >= rel {
            break;
        }
        x = trial;
        r = r_trial;
        rel = rel_trial;
    }
    Ok((x, rel))
}

/// Restarted GMRES with right Jacobi preconditioning.
/// Returns the solution and the number of inner iterations.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    restart: usize,
    max_iters: usize,
) -> Result<(Vec<f64>, usize)> {
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let jacobi = |v: &[f64], out: &mut [f64]| {
        for ((o, x), d) in out.iter_mut().zip(v).zip(&inv_diag) {
            *o = d * x;
        }
    };
    gmres_preconditioned(a, b, x0, rtol, restart, max_iters, jacobi)
}

/// Restarted GMRES with a right preconditioner `precond(v, out)`, `out ≈ A⁻¹ v`.
pub fn gmres_preconditioned(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    restart: usize,
    max_iters: usize,
    mut precond: impl FnMut(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
    }
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let m = restart.max(1).min(n.max(1));
    let mut total = 0;
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let r = residual(a, &x, b);
        let beta = norm2(&r);
        best = best.min(beta / bnorm);
        if beta / bnorm <= rtol {
            return Ok((x, total));
        }
        if total >= max_iters {
            return Err(Error::KrylovNotConverged {
                iterations: total,
                best_residual: best,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hij;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hij * vi;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                break;
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            best = best.min(g[k + 1].abs() / bnorm);
            if g[k + 1].abs() / bnorm <= rtol || hn == 0.0 || total >= max_iters {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        if k_used == 0 {
            return Err(Error::KrylovNotConverged {
                iterations: total,
                best_residual: best,
            });
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = g[i] - ((i + 1)..k_used).map(|j| h[i][j] * y[j]).sum::<f64>();
            y[i] = s / h[i][i];
        }
        let mut combo = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (c, v) in combo.iter_mut().zip(&basis[j]) {
                *c += yj * v;
            }
        }
        precond(&combo, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sparse::TripletBuilder;

    fn random_banded(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 0.1 + rng.gen::<f64>());
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                b.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        b.finalize()
    }

    #[test]
    fn band_lu_matches_dense_on_random_nonsymmetric() {
        for seed in 0..5 {
            let a = random_banded(40, seed);
            let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = a.mul_vec(&x_true).unwrap();
            let (x, rel) = direct_solve(&a, &b, 1e-12, 3).unwrap();
            assert!(rel < 1e-10, "{rel}");
            let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (x, _) = direct_solve(&a, &[2.0, 3.0], 1e-12, 0).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrices_are_reported() {
        let z = CsrMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(BandLu::factor(&z), Err(Error::Singular { .. })));
        let r = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(BandLu::factor(&r), Err(Error::Singular { .. })));
    }

    #[test]
    fn rcm_reduces_bandwidth_of_scrambled_path() {
        let n = 30;
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(perm[i], perm[i], 2.0);
            if i + 1 < n {
                b.add(perm[i], perm[i + 1], -1.0);
                b.add(perm[i + 1], perm[i], -1.0);
            }
        }
        let a = b.finalize();
        let order = reverse_cuthill_mckee(&a);
        let mut inv = vec![0; n];
        for (k, &o) in order.iter().enumerate() {
            inv[o] = k;
        }
        assert_eq!(bandwidths(&a, &inv), (1, 1));
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let a = random_banded(60, 11);
        let x_true: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 * 0.01).collect();
        let b = a.mul_vec(&x_true).unwrap();
        let (x, it) = gmres(&a, &b, None, 1e-10, 60, 2000).unwrap();
        let r = residual(&a, &x, &b);
        assert!(norm2(&r) <= 1e-10 * norm2(&b) * 1.0001);
        assert!(it > 0);
    }

    #[test]
    fn gmres_reports_non_convergence() {
        let a = random_banded(60, 12);
        let b = vec![1.0; 60];
        match gmres(&a, &b, None, 1e-14, 2, 4) {
            Err(Error::KrylovNotConverged {
                iterations,
                best_residual,
            }) => {
                assert!(iterations <= 4);
                assert!(best_residual.is_finite() && best_residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
