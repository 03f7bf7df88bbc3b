//! Full GMRES with right preconditioning.
//!
//! Solves `A M⁻¹ y = b` and returns `x = M⁻¹ y`, so the least-squares
//! residual tracked by the Givens rotations is the residual of the original
//! system. Arnoldi uses modified Gram-Schmidt with selective
//! reorthogonalization. There are no restarts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A fixed linear map on complex vectors.
pub trait LinearOperator {
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>>;
}

impl<F> LinearOperator for F
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self(x)
    }
}

/// Dense operator, used by the verification oracles.
pub struct DenseOperator<'a>(pub &'a DMatrix<Complex64>);

impl LinearOperator for DenseOperator<'_> {
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.0.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.0.ncols(),
                actual: x.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(x);
        Ok((self.0 * v).as_slice().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Also recompute `‖b - A x_k‖ / ‖b‖` at every iteration.
    pub record_history: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            maxit: 200,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub solution: Vec<Complex64>,
    /// Relative least-squares residual per iteration, starting with iteration 0.
    pub history: Vec<f64>,
    /// Relative true residuals, when requested.
    pub true_history: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, |acc, v| acc + v)
        .sqrt()
}

/// Rotation zeroing `b` in `(a, b)`: returns `(c, s)` with `c` real.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let d = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if d == 0.0 {
        return (1.0, ZERO);
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / d);
    }
    let c = a.norm() / d;
    let s = (a / a.norm()) * b.conj() / d;
    (c, s)
}

fn rotate(c: f64, s: Complex64, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    (x * c + s * y, -s.conj() * x + y * c)
}

/// Back substitution on the leading `k × k` triangle of the rotated Hessenberg columns.
fn solve_triangle(h: &[Vec<Complex64>], g: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut y = vec![ZERO; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= h[j][i] * y[j];
        }
        y[i] = acc / h[i][i];
    }
    y
}

fn combine(basis: &[Vec<Complex64>], y: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut x = vec![ZERO; len];
    for (z, &c) in basis.iter().zip(y) {
        for (xi, zi) in x.iter_mut().zip(z) {
            *xi += c * zi;
        }
    }
    x
}

/// One Arnoldi step with modified Gram-Schmidt, reorthogonalized once if needed. Returns the new Hessenberg
/// column (length `basis.len() + 1`), the unnormalized next vector and the
/// norm of `w` before orthogonalization.
fn arnoldi_step(
    basis: &[Vec<Complex64>],
    mut w: Vec<Complex64>,
) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let before = norm(&w);
    let mut col = Vec::with_capacity(basis.len() + 1);
    for v in basis {
        let hij = dot(v, &w);
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= hij * vi;
        }
        col.push(hij);
    }
    // Second pass when cancellation was severe ("twice is enough").
    if norm(&w) < 0.7 * before {
        for (v, hij) in basis.iter().zip(col.iter_mut()) {
            let d = dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= d * vi;
            }
            *hij += d;
        }
    }
    col.push(Complex64::new(norm(&w), 0.0));
    (col, w, before)
}

fn precondition(m: Option<&dyn LinearOperator>, v: &[Complex64]) -> Result<Vec<Complex64>> {
    match m {
        Some(m) => m.apply(v),
        None => Ok(v.to_vec()),
    }
}

pub fn gmres(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<GmresResult> {
    let len = b.len();
    let beta = norm(b);
    let mut true_history = opts.record_history.then(Vec::new);
    if beta == 0.0 {
        if let Some(t) = true_history.as_mut() {
            t.push(0.0);
        }
        return Ok(GmresResult {
            solution: vec![ZERO; len],
            history: vec![0.0],
            true_history,
            iterations: 0,
            converged: true,
        });
    }
    if let Some(t) = true_history.as_mut() {
        t.push(1.0);
    }

    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|v| v / beta).collect()];
    let mut precond: Vec<Vec<Complex64>> = Vec::new();
    let mut hess: Vec<Vec<Complex64>> = Vec::new();
    let mut rotations: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut history = vec![1.0];
    let mut converged = false;

    for j in 0..opts.maxit {
        let z = precondition(m, &basis[j])?;
        let w = a.apply(&z)?;
        precond.push(z);
        let (mut col, next, before) = arnoldi_step(&basis, w);
        let sub = col[j + 1].re;

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (x, y) = rotate(c, s, col[i], col[i + 1]);
            col[i] = x;
            col[i + 1] = y;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        let (r, _) = rotate(c, s, col[j], col[j + 1]);
        col[j] = r;
        col[j + 1] = ZERO;
        rotations.push((c, s));
        let gj = g[j];
        g[j] = gj * c;
        g.push(-s.conj() * gj);
        hess.push(col);

        let res = g[j + 1].norm() / beta;
        history.push(res);
        let k = j + 1;
        if let Some(t) = true_history.as_mut() {
            let y = solve_triangle(&hess, &g, k);
            let x = combine(&precond, &y, len);
            let ax = a.apply(&x)?;
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            t.push(norm(&r) / beta);
        }
        if res <= opts.tol {
            converged = true;
            break;
        }
        if sub <= 1e-14 * before || sub == 0.0 {
            return Err(Error::Breakdown {
                iteration: k,
                residual: res,
            });
        }
        basis.push(next.iter().map(|v| v / sub).collect());
    }

    let k = hess.len();
    let y = solve_triangle(&hess, &g, k);
    Ok(GmresResult {
        solution: combine(&precond, &y, len),
        history,
        true_history,
        iterations: k,
        converged,
    })
}

/// Orthonormal Arnoldi basis of `A M⁻¹` started from `b`, as used inside
/// [`gmres`]. Stops early on breakdown.
pub fn arnoldi_basis(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    b: &[Complex64],
    steps: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(Vec::new());
    }
    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|v| v / beta).collect()];
    for j in 0..steps {
        let z = precondition(m, &basis[j])?;
        let w = a.apply(&z)?;
        let (col, next, before) = arnoldi_step(&basis, w);
        let sub = col[j + 1].re;
        if sub <= 1e-14 * before {
            break;
        }
        basis.push(next.iter().map(|v| v / sub).collect());
    }
    Ok(basis)
}
