//! Minimal CSR sparse matrix with a Jacobi-preconditioned conjugate
//! gradient solver and power-iteration spectral estimates.

use crate::error::FemError;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets, summing duplicates.
    /// Assembly is deterministic: entries are sorted by (row, col).
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut counts = vec![0usize; n];
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] += self.values[k];
                }
            }
        }
        d
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                s += self.values[k];
            }
        }
        s
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG. Converges when the preconditioned residual
/// drops below `tol` times its initial value; at most `10 n` iterations.
/// Returns the solution and the iteration count. A search direction with
/// non-positive curvature aborts with `IndefiniteSystem`.
pub fn cg_solve(a: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, usize), FemError> {
    let n = a.n;
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    let diag = a.diagonal();
    let minv: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok((x, 0));
    }
    let max_iter = 10 * n;
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * rhs_norm {
            return Ok((x, it));
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(FemError::IndefiniteSystem(pap));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol * rhs_norm {
        Ok((x, max_iter))
    } else {
        Err(FemError::SolveFailure {
            iterations: max_iter,
            residual: rnorm / rhs_norm,
        })
    }
}

/// Largest eigenvalue of a symmetric matrix by power iteration.
pub fn max_eigenvalue(a: &CsrMatrix, iters: usize) -> f64 {
    let n = a.n;
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
    let mut av = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        let norm = dot(&v, &v).sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        a.matvec(&v, &mut av);
        lambda = dot(&v, &av);
        std::mem::swap(&mut v, &mut av);
    }
    lambda
}

/// Smallest eigenvalue: power iteration on (sigma I - A) with sigma an upper
/// bound of the spectrum.
pub fn min_eigenvalue(a: &CsrMatrix, iters: usize) -> f64 {
    let n = a.n;
    if n == 0 {
        return 0.0;
    }
    let sigma = max_eigenvalue(a, iters).abs() * 1.01 + 1e-12;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 1.3).cos()).collect();
    let mut av = vec![0.0; n];
    let mut mu = 0.0;
    for _ in 0..iters {
        let norm = dot(&v, &v).sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        a.matvec(&v, &mut av);
        for i in 0..n {
            av[i] = sigma * v[i] - av[i];
        }
        mu = dot(&v, &av);
        std::mem::swap(&mut v, &mut av);
    }
    sigma - mu
}
