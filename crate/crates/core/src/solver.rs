//! Block-Jacobi preconditioned Krylov solvers.
//!
//! Symmetric systems use conjugate gradients, which doubles as a positive
//! definiteness probe: a non-positive curvature `p^T A p <= 0` (or an
//! indefinite preconditioner block) aborts the solve. Other systems use
//! right-preconditioned BiCGStab. All reductions run in a fixed order, so
//! identical inputs give bitwise identical results.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    BiCgStab,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` recomputed from the returned solution.
    pub relative_residual: f64,
    /// Relative residual carried by the recurrence at the last iteration.
    pub iterated_residual: f64,
    pub converged: bool,
    pub method: Method,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default iteration cap, ten times the number of unknowns.
pub fn default_max_iterations(system: &SparseSystem) -> usize {
    10 * system.dim().max(1)
}

/// Inverses of the diagonal blocks, stored densely block by block.
struct BlockJacobi {
    offsets: Vec<usize>,
    inverses: Vec<Vec<f64>>,
}

impl BlockJacobi {
    fn new(system: &SparseSystem) -> Result<Self> {
        let a = &system.matrix;
        let offsets = system.block_offsets.clone();
        let mut inverses = Vec::with_capacity(offsets.len() - 1);
        for w in offsets.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let n = hi - lo;
            let mut m = DMatrix::zeros(n, n);
            for r in lo..hi {
                for (c, v) in a.row(r) {
                    if (lo..hi).contains(&c) {
                        m[(r - lo, c - lo)] = v;
                    }
                }
            }
            // A symmetric matrix with an indefinite diagonal block is indefinite.
            if system.symmetric && m.clone().cholesky().is_none() {
                return Err(Error::NotPositiveDefinite);
            }
            let inv = m.try_inverse().ok_or(Error::SingularBlock(lo))?;
            if inv.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularBlock(lo));
            }
            // row-major
            inverses.push(inv.transpose().as_slice().to_vec());
        }
        Ok(BlockJacobi { offsets, inverses })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for (b, inv) in self.inverses.iter().enumerate() {
            let lo = self.offsets[b];
            let n = self.offsets[b + 1] - lo;
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += inv[i * n + j] * r[lo + j];
                }
                z[lo + i] = s;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(system: &SparseSystem, x: &[f64]) -> Vec<f64> {
    let ax = system.matrix.apply(x);
    system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

/// Solves `system` to relative residual `tol`, with at most `max_iter` iterations.
///
/// Running out of iterations is not an error; the report's `converged` flag is
/// cleared instead.
pub fn solve(system: &SparseSystem, tol: f64, max_iter: usize) -> Result<SolveReport> {
    let n = system.dim();
    if system.matrix.ncols != n || system.rhs.len() != n || *system.block_offsets.last().unwrap_or(&0) != n {
        return Err(Error::Dimension("system is not square or blocks do not cover it".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let method = if system.symmetric { Method::Cg } else { Method::BiCgStab };
    let bnorm = norm(&system.rhs);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            iterated_residual: 0.0,
            converged: true,
            method,
        });
    }
    let pc = BlockJacobi::new(system)?;
    let (x, iterations, iterated) = match method {
        Method::Cg => cg(system, &pc, tol, max_iter, bnorm)?,
        Method::BiCgStab => bicgstab(system, &pc, tol, max_iter, bnorm),
    };
    let true_res = norm(&residual(system, &x)) / bnorm;
    Ok(SolveReport {
        solution: x,
        iterations,
        relative_residual: true_res,
        iterated_residual: iterated,
        converged: true_res <= tol,
        method,
    })
}

fn cg(system: &SparseSystem, pc: &BlockJacobi, tol: f64, max_iter: usize, bnorm: f64) -> Result<(Vec<f64>, usize, f64)> {
    let n = system.dim();
    let a = &system.matrix;
    let mut x = vec![0.0; n];
    let mut r = system.rhs.clone();
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        if rz < 0.0 || !rz.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        if rz == 0.0 {
            // The recurrence residual underflowed; the true residual decides.
            break;
        }
        a.mul_vec(&p, &mut ap);
        let curv = dot(&p, &ap);
        if curv < 0.0 || !curv.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        if curv == 0.0 {
            break;
        }
        let step = rz / curv;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        it += 1;
        rel = norm(&r) / bnorm;
        if rel <= tol {
            // Guard against drift between the recurrence and the true residual.
            let fresh = residual(system, &x);
            let true_rel = norm(&fresh) / bnorm;
            if true_rel <= tol {
                break;
            }
            r = fresh;
            rel = true_rel;
            pc.apply(&r, &mut z);
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((x, it, rel))
}

fn bicgstab(system: &SparseSystem, pc: &BlockJacobi, tol: f64, max_iter: usize, bnorm: f64) -> (Vec<f64>, usize, f64) {
    let n = system.dim();
    let a = &system.matrix;
    let mut x = vec![0.0; n];
    let mut r = system.rhs.clone();
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 || !rho_new.is_finite() {
            // Breakdown: restart from the current iterate.
            it += 1;
            if x.iter().any(|v: &f64| !v.is_finite()) {
                break;
            }
            r = residual(system, &x);
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            if dot(&r_hat, &r) == 0.0 {
                break;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pc.apply(&p, &mut y);
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        it += 1;
        let srel = norm(&s) / bnorm;
        if srel <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            rel = srel;
            if norm(&residual(system, &x)) / bnorm <= tol {
                break;
            }
            r = residual(system, &x);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        pc.apply(&s, &mut zs);
        a.mul_vec(&zs, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            let true_rel = norm(&residual(system, &x)) / bnorm;
            if true_rel <= tol {
                break;
            }
            r = residual(system, &x);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rel = true_rel;
        }
    }
    (x, it, rel)
}
