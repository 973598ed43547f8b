//! Matrix-free Krylov solvers.

use crate::error::{Error, Result};

/// A square linear map on `ℝᵈ`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y ← A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// CG stops once `‖r‖_∞ ≤ tolerance·max(1, ‖b‖_∞)`; GMRES once
    /// `‖r‖₂ ≤ tolerance·‖b‖₂`.
    pub tolerance: f64,
    /// Iteration cap; `None` picks a size-dependent default.
    pub max_iterations: Option<usize>,
    /// GMRES restart length.
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: None, restart: 50 }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig { tolerance, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!("solver tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restart == 0 {
            return Err(Error::Config("GMRES restart length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final true residual in the solver's norm.
    pub residual: f64,
    /// The stopping threshold that was met.
    pub threshold: f64,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Conjugate gradients for symmetric positive definite `op`, starting from
/// `x`. The default cap is `1000·d^{1/3}` iterations. The recursive
/// residual is replaced by the true one whenever it claims convergence.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::Argument("dimension mismatch in CG".into()));
    }
    let cap = cfg.max_iterations.unwrap_or_else(|| (1000.0 * (n.max(1) as f64).cbrt()).ceil() as usize);
    let threshold = cfg.tolerance * norm_inf(b).max(1.0);
    let mut r = vec![0.0; n];
    residual(op, b, x, &mut r);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut it = 0;
    loop {
        if norm_inf(&r) <= threshold {
            residual(op, b, x, &mut r);
            let true_res = norm_inf(&r);
            if true_res <= threshold {
                return Ok(SolveReport { iterations: it, residual: true_res, threshold });
            }
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
        }
        if it >= cap {
            residual(op, b, x, &mut r);
            return Err(Error::Solver { solver: "conjugate gradient", iterations: it, residual: norm_inf(&r) });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            if rr == 0.0 {
                continue;
            }
            return Err(Error::Solver { solver: "conjugate gradient", iterations: it, residual: norm_inf(&r) });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
}

/// Restarted GMRES(m) starting from `x`. The default cap is
/// `1000·d^{1/3}` inner iterations.
pub fn gmres(op: &dyn LinearOperator, b: &[f64], x: &mut [f64], cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::Argument("dimension mismatch in GMRES".into()));
    }
    let cap = cfg.max_iterations.unwrap_or_else(|| (1000.0 * (n.max(1) as f64).cbrt()).ceil() as usize);
    let m = cfg.restart.min(n.max(1));
    let threshold = cfg.tolerance * norm2(b);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut it = 0;
    loop {
        residual(op, b, x, &mut r);
        let beta = norm2(&r);
        if beta <= threshold {
            return Ok(SolveReport { iterations: it, residual: beta, threshold });
        }
        if it >= cap {
            return Err(Error::Solver { solver: "GMRES", iterations: it, residual: beta });
        }
        if basis.is_empty() {
            basis.push(vec![0.0; n]);
        }
        for (v, ri) in basis[0].iter_mut().zip(&r) {
            *v = ri / beta;
        }
        g.fill(0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && it < cap {
            op.apply(&basis[k], &mut w);
            for i in 0..=k {
                let hik = dot(&w, &basis[i]);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&basis[i]) {
                    *wj -= hik * vj;
                }
            }
            let hk1 = norm2(&w);
            hess[k + 1][k] = hk1;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = (hess[k][k] * hess[k][k] + hk1 * hk1).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / denom;
                sn[k] = hk1 / denom;
            }
            hess[k][k] = cs[k] * hess[k][k] + sn[k] * hk1;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            it += 1;
            k += 1;
            let breakdown = hk1 <= 1e-14 * beta;
            if g[k].abs() <= threshold || breakdown {
                break;
            }
            if k < m {
                if basis.len() <= k {
                    basis.push(vec![0.0; n]);
                }
                for (v, wi) in basis[k].iter_mut().zip(&w) {
                    *v = wi / hk1;
                }
            }
        }
        // Back substitution for the k×k triangular system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= hess[i][j] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}
