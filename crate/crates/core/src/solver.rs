//! Conjugate gradients and a banded Cholesky fallback.
//!
//! ```text
//! x = 0, r = b, z = M^-1 r, p = z
//! loop:
//!     alpha = (r.z) / (p.Ap)          stop with an error if p.Ap <= 0
//!     x += alpha p,  r -= alpha Ap
//!     stop when |b - Ax| / |b| <= tol (checked on the true residual)
//!     z = M^-1 r,  beta = (r.z)_new / (r.z)_old,  p = z + beta p
//! ```
//!
//! `M` is the identity or the diagonal of `A`. All reductions run in index
//! order, so results do not depend on how the matrix-vector product is
//! parallelized.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{CsrMatrix, Executor};
use crate::error::{Error, Result};

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `|A u - b|_2 / |b|_2`, recomputed from the returned solution.
    pub relative_residual: f64,
    /// Wall time in seconds, or `0.0` when no clock was available.
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    None,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl CgOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 100_000,
            preconditioner: Preconditioner::None,
        }
    }
}

/// Tolerance used when none is given: `min(1e-2, 0.1 h^4)`, at least `1e-12`.
pub fn default_tolerance(h: f64) -> f64 {
    (0.1 * h * h * h * h).clamp(1e-12, 1e-2)
}

/// A symmetric operator `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

/// A matrix whose products run through an executor.
pub struct ExecOperator<'a, E: Executor> {
    pub matrix: &'a CsrMatrix,
    pub exec: &'a E,
}

impl<E: Executor> LinearOperator for ExecOperator<'_, E> {
    fn dim(&self) -> usize {
        self.matrix.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.matrix;
        self.exec.fill(y, &|i| m.row_dot(i, x));
    }
    fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `|A x - b|_2 / |b|_2` (or `|A x|_2` when `b = 0`).
pub fn relative_residual<A: LinearOperator + ?Sized>(a: &A, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    let bn = norm(b);
    if bn == 0.0 {
        norm(&r)
    } else {
        norm(&r) / bn
    }
}

pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    opts: &CgOptions,
) -> Result<SolveReport> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Usage(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Usage("tolerance must be positive".into()));
    }
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            seconds: 0.0,
        });
    }
    let inv_diag = match opts.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Diagonal => {
            let d = a.diagonal();
            if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::DefinitenessViolation(format!(
                    "diagonal entry {i} is {} and cannot precondition",
                    d[i]
                )));
            }
            Some(d.iter().map(|v| 1.0 / v).collect::<Vec<f64>>())
        }
    };
    let precondition = |r: &[f64], z: &mut Vec<f64>| match &inv_diag {
        Some(w) => {
            z.iter_mut()
                .zip(r.iter().zip(w))
                .for_each(|(zi, (ri, wi))| *zi = ri * wi);
        }
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = 1.0;
    for it in 1..=opts.max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::DefinitenessViolation(format!(
                "p.Ap = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        if norm(&r) / bnorm <= opts.tol {
            // Confirm on the true residual; restart from it if they drifted apart.
            a.apply(&x, &mut ap);
            r.iter_mut()
                .zip(b.iter().zip(&ap))
                .for_each(|(ri, (bi, axi))| *ri = bi - axi);
            residual = norm(&r) / bnorm;
            if residual <= opts.tol {
                return Ok(SolveReport {
                    solution: x,
                    iterations: it,
                    relative_residual: residual,
                    seconds: 0.0,
                });
            }
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        residual = norm(&r) / bnorm;
    }
    let relative_residual = relative_residual(a, &x, b);
    let _ = residual;
    Err(Error::NotConverged(Box::new(SolveReport {
        solution: x,
        iterations: opts.max_iter,
        relative_residual,
        seconds: 0.0,
    })))
}

/// Largest system accepted by [`dense_cholesky`].
pub const DIRECT_MAX_UNKNOWNS: usize = 20_000;

/// Direct solve by Cholesky factorization.
///
/// The factor is stored over the matrix band `|i - j| <= bandwidth`, which
/// holds all of its fill-in, so the result equals a dense factorization.
pub fn dense_cholesky(m: &CsrMatrix, b: &[f64]) -> Result<SolveReport> {
    let n = m.n;
    if n > DIRECT_MAX_UNKNOWNS {
        return Err(Error::Usage(format!(
            "direct solver accepts at most {DIRECT_MAX_UNKNOWNS} unknowns, got {n}"
        )));
    }
    if b.len() != n {
        return Err(Error::Usage("right-hand side length mismatch".into()));
    }
    let bw = m.bandwidth();
    let w = bw + 1;
    // l[i * w + (j - i + bw)] holds L_ij for i - bw <= j <= i.
    let mut l = vec![0.0; n * w];
    for i in 0..n {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let j = j as usize;
            if j <= i {
                l[i * w + (j + bw - i)] = v;
            }
        }
    }
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let mut s = l[i * w + (j + bw - i)];
            let klo = lo.max(j.saturating_sub(bw));
            for k in klo..j {
                s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
            }
            if j == i {
                if !(s > 0.0) {
                    return Err(Error::DefinitenessViolation(format!(
                        "nonpositive pivot {s:e} at row {i}"
                    )));
                }
                l[i * w + bw] = libm::sqrt(s);
            } else {
                l[i * w + (j + bw - i)] = s / l[j * w + bw];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let mut s = y[i];
        for k in lo..i {
            s -= l[i * w + (k + bw - i)] * y[k];
        }
        y[i] = s / l[i * w + bw];
    }
    for i in (0..n).rev() {
        let hi = (i + bw).min(n - 1);
        let mut s = y[i];
        for k in i + 1..=hi {
            s -= l[k * w + (i + bw - k)] * y[k];
        }
        y[i] = s / l[i * w + bw];
    }
    let relative_residual = relative_residual(m, &y, b);
    Ok(SolveReport {
        solution: y,
        iterations: 0,
        relative_residual,
        seconds: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            if i > 0 {
                col_idx.push((i - 1) as u32);
                values.push(-1.0);
            }
            col_idx.push(i as u32);
            values.push(2.0);
            if i + 1 < n {
                col_idx.push((i + 1) as u32);
                values.push(-1.0);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    #[test]
    fn cg_and_cholesky_agree() {
        let m = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let cg = conjugate_gradient(&m, &b, &CgOptions::new(1e-12)).unwrap();
        let ch = dense_cholesky(&m, &b).unwrap();
        assert!(cg.relative_residual <= 1e-12);
        assert!(ch.relative_residual <= 1e-13);
        for (u, v) in cg.solution.iter().zip(&ch.solution) {
            assert!((u - v).abs() < 1e-9);
        }
        assert!(cg.iterations <= 50);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut m = laplacian_1d(4);
        m.values.iter_mut().for_each(|v| *v = -*v);
        let b = vec![1.0; 4];
        assert!(matches!(
            conjugate_gradient(&m, &b, &CgOptions::new(1e-10)),
            Err(Error::DefinitenessViolation(_))
        ));
        assert!(matches!(
            dense_cholesky(&m, &b),
            Err(Error::DefinitenessViolation(_))
        ));
    }

    #[test]
    fn iteration_cap() {
        let m = laplacian_1d(100);
        let b = vec![1.0; 100];
        let opts = CgOptions {
            tol: 1e-14,
            max_iter: 3,
            preconditioner: Preconditioner::None,
        };
        match conjugate_gradient(&m, &b, &opts) {
            Err(Error::NotConverged(rep)) => assert_eq!(rep.iterations, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tolerance_schedule() {
        assert_eq!(default_tolerance(1.0), 1e-2);
        assert!((default_tolerance(0.125) - 0.1 * 0.125f64.powi(4)).abs() < 1e-18);
        assert_eq!(default_tolerance(1e-4), 1e-12);
    }

    proptest! {
        #[test]
        fn diagonal_preconditioning_converges(n in 2usize..60, seed in 0u64..1000) {
            let m = laplacian_1d(n);
            let b: Vec<f64> = (0..n).map(|i| ((i as u64 * 7919 + seed) % 13) as f64 - 6.0).collect();
            let opts = CgOptions { tol: 1e-10, max_iter: 10 * n, preconditioner: Preconditioner::Diagonal };
            let rep = conjugate_gradient(&m, &b, &opts).unwrap();
            prop_assert!(rep.relative_residual <= 1e-10);
        }
    }
}
