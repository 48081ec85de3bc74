//! Compressed-row sparse matrices, Jacobi-preconditioned conjugate gradients
//! and a Lanczos estimate of the largest eigenvalue of a symmetric operator.
//!
//! Every reduction runs in a fixed sequential order so results are bitwise
//! reproducible regardless of how many threads call into this module.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Assembles from (row, col, value) triplets. Duplicates are summed in
    /// insertion order; columns end up sorted within each row.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("entry ({i}, {j}) outside {n}x{n}")));
            }
        }
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for t in order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            trip.extend(r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (i, j, v)));
        }
        Self::from_triplets(n, &trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `(A x)_i`, summed left to right over the stored columns.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let mut s = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            s += v * x[j];
        }
        s
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
        Ok(())
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row_dot(i, x)).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0))
        })
    }

    /// `alpha * self + beta * other`, both matrices with arbitrary patterns.
    pub fn linear_combination(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, alpha * x)));
            let (c, v) = other.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, beta * x)));
        }
        SparseMatrix::from_triplets(self.n, &trip)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Relative residual target `||A x - b|| <= tol ||b||`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Convergence is confirmed against the true residual; if the recursively
/// updated residual drifted, the iteration restarts from the current iterate.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], cfg: CgConfig) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if cfg.tol <= 0.0 {
        return Err(Error::InvalidInput("cg tolerance must be positive".into()));
    }
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let diag = a.diagonal();
    // a non-positive diagonal entry rules out SPD
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::NotConverged {
            iterations: 0,
            residual: 1.0,
            best: x,
        });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let target = cfg.tol * b_norm;

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = b_norm;

    for it in 1..=cfg.max_iter {
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::NotConverged {
                iterations: it,
                residual: res / b_norm,
                best: x,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm2(&r);
        if res <= target {
            // confirm with the true residual
            a.spmv_into(&x, &mut ap)?;
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            res = norm2(&r);
            if res <= target {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual: res / b_norm,
        best: x,
    })
}

/// Largest eigenvalue of a symmetric positive semidefinite operator of size
/// `n`, given by its action `apply(x, y)` (`y = A x`).
///
/// Lanczos with full reorthogonalization started from a fixed deterministic
/// vector; stops once the largest Ritz value changes by less than
/// `tol` (relative) over five consecutive steps, or the Krylov space is
/// exhausted.
pub fn lanczos_max_eigenvalue<F>(n: usize, apply: F, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    if n == 0 {
        return Ok(0.0);
    }
    // fixed pseudo-random start vector (golden-ratio sequence)
    let mut v: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    let steps = max_iter.min(n);

    for k in 0..steps {
        apply(&v, &mut w);
        let alpha = dot(&w, &v);
        for i in 0..n {
            w[i] -= alpha * v[i];
        }
        if let Some(prev) = basis.last() {
            let beta_prev = *betas.last().unwrap();
            for i in 0..n {
                w[i] -= beta_prev * prev[i];
            }
        }
        // two passes of classical Gram-Schmidt against the stored basis
        for _ in 0..2 {
            for q in basis.iter().chain(std::iter::once(&v)) {
                let c = dot(&w, q);
                for i in 0..n {
                    w[i] -= c * q[i];
                }
            }
        }
        alphas.push(alpha);
        let theta = tridiagonal_max_eigenvalue(&alphas, &betas);
        history.push(theta);
        let beta = norm2(&w);
        let scale = theta.abs().max(f64::MIN_POSITIVE);
        if beta <= 1e-14 * scale || k + 1 == n {
            return Ok(theta);
        }
        if history.len() > 5 {
            let old = history[history.len() - 6];
            if (theta - old).abs() <= tol * scale {
                return Ok(theta);
            }
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
        basis.push(std::mem::replace(&mut v, next));
    }
    Err(Error::NotConverged {
        iterations: steps,
        residual: f64::NAN,
        best: vec![*history.last().unwrap_or(&0.0)],
    })
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, by Sturm-sequence bisection.
pub fn tridiagonal_max_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = beta.get(i).map_or(0.0, |b| b.abs()) + if i > 0 { beta[i - 1].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..m {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> (SparseMatrix, DMatrix<f64>) {
        let b = DMatrix::from_fn(n, n, |_, _| {
            if rng.gen_bool(0.3) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.5;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
        (SparseMatrix::from_dense(&rows).unwrap(), a)
    }

    #[test]
    fn identity_times_x() {
        let x = vec![1.5, -2.0, 3.25];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x);
    }

    #[test]
    fn spmv_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                (0..5)
                    .map(|_| {
                        if rng.gen_bool(0.6) {
                            rng.gen_range(-2.0..2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let a = SparseMatrix::from_dense(&rows).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.spmv(&x).unwrap();
        for i in 0..5 {
            // same left-to-right order over nonzero columns as the dense loop
            let mut s = 0.0;
            for j in 0..5 {
                if rows[i][j] != 0.0 {
                    s += rows[i][j] * x[j];
                }
            }
            assert_eq!(y[i], s);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            SparseMatrix::identity(3).spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 0.5), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.row(0).0, &[0, 1]);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn cg_identity_is_one_iteration() {
        let b = vec![1.0, -3.0, 0.25];
        let x = cg_solve(
            &SparseMatrix::identity(3),
            &b,
            CgConfig {
                tol: 1e-14,
                max_iter: 1,
            },
        )
        .unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn cg_zero_rhs() {
        let x = cg_solve(&SparseMatrix::identity(4), &[0.0; 4], CgConfig::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn cg_singular_matrix_reports_non_convergence() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            cg_solve(&a, &[1.0, 1.0], CgConfig::default()),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn cg_random_spd_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..=200);
            let (a, dense) = random_spd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cfg = CgConfig {
                tol: 1e-10,
                max_iter: 5000,
            };
            let x = cg_solve(&a, &b, cfg).unwrap();
            let r: Vec<f64> = a.spmv(&x).unwrap().iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
            assert!(norm2(&r) <= cfg.tol * norm2(&b));
            let exact = dense.clone().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
            let err = (DVector::from_vec(x) - &exact).norm() / exact.norm();
            let cond = {
                let e = dense.symmetric_eigenvalues();
                e.max() / e.min()
            };
            assert!(err <= 10.0 * cond * cfg.tol, "err {err} cond {cond}");
        }
    }

    #[test]
    fn cg_is_deterministic_across_threads() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, _) = random_spd(80, &mut rng);
        let b: Vec<f64> = (0..80).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reference = cg_solve(&a, &b, CgConfig::default()).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let (a, b) = (a.clone(), b.clone());
                std::thread::spawn(move || cg_solve(&a, &b, CgConfig::default()).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), reference);
        }
    }

    #[test]
    fn tridiagonal_bisection() {
        // tridiag(-1, 2, -1) of size 3: largest eigenvalue 2 + sqrt(2)
        let l = tridiagonal_max_eigenvalue(&[2.0, 2.0, 2.0], &[-1.0, -1.0]);
        assert!((l - (2.0 + 2f64.sqrt())).abs() < 1e-13);
        assert_eq!(tridiagonal_max_eigenvalue(&[3.5], &[]), 3.5);
    }

    #[test]
    fn lanczos_matches_dense_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [1, 2, 7, 40, 150] {
            let (a, dense) = random_spd(n, &mut rng);
            let est = lanczos_max_eigenvalue(n, |x, y| a.spmv_into(x, y).unwrap(), 1e-12, 1000).unwrap();
            let exact = dense.symmetric_eigenvalues().max();
            assert!((est - exact).abs() <= 1e-8 * exact, "n={n}: {est} vs {exact}");
        }
    }
}
