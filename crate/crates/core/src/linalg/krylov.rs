use super::csr::CsrMatrix;
use super::precond::Preconditioner;
use crate::error::{Error, Result};
use crate::function::{dot, norm2};

/// Preconditioned conjugate gradients from a zero initial guess, run for
/// at most `iters` iterations.
pub fn cg(a: &CsrMatrix, b: &[f64], m: &dyn Preconditioner, iters: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let r0 = norm2(b);
    if r0 == 0.0 {
        return Ok(x);
    }
    for _ in 0..iters {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !rz.is_finite() {
            return Err(Error::LinearSolver(format!("cg breakdown (pAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= 1e-15 * r0 {
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(x)
}

/// Left-preconditioned GMRES from a zero initial guess with a Krylov space
/// of dimension at most `iters` (no restarts).
pub fn gmres(a: &CsrMatrix, b: &[f64], m: &dyn Preconditioner, iters: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    m.apply(b, &mut r);
    let beta = norm2(&r);
    if !beta.is_finite() {
        return Err(Error::LinearSolver("gmres: non-finite preconditioned residual".into()));
    }
    if beta == 0.0 || iters == 0 {
        return Ok(x);
    }
    let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
    let mut h = vec![vec![0.0; iters]; iters + 1];
    let (mut cs, mut sn) = (vec![0.0; iters], vec![0.0; iters]);
    let mut g = vec![0.0; iters + 1];
    g[0] = beta;
    let mut w = vec![0.0; n];
    let mut av = vec![0.0; n];
    let mut k_used = 0;
    for k in 0..iters {
        a.matvec_into(&v[k], &mut av);
        m.apply(&av, &mut w);
        for (i, vi) in v.iter().enumerate() {
            let hik = dot(&w, vi);
            h[i][k] = hik;
            for (wt, vt) in w.iter_mut().zip(vi) {
                *wt -= hik * vt;
            }
        }
        let hn = norm2(&w);
        h[k + 1][k] = hn;
        for i in 0..k {
            let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
            h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
            h[i][k] = t;
        }
        let d = h[k][k].hypot(h[k + 1][k]);
        if !(d > 0.0) || !d.is_finite() {
            if k == 0 {
                return Err(Error::LinearSolver("gmres breakdown".into()));
            }
            break;
        }
        cs[k] = h[k][k] / d;
        sn[k] = h[k + 1][k] / d;
        h[k][k] = d;
        h[k + 1][k] = 0.0;
        g[k + 1] = -sn[k] * g[k];
        g[k] *= cs[k];
        k_used = k + 1;
        if hn <= 1e-14 * beta {
            break;
        }
        v.push(w.iter().map(|t| t / hn).collect());
    }
    let mut y = vec![0.0; k_used];
    for i in (0..k_used).rev() {
        let mut s = g[i];
        for j in i + 1..k_used {
            s -= h[i][j] * y[j];
        }
        y[i] = s / h[i][i];
    }
    for (yi, vi) in y.iter().zip(&v) {
        for (xt, vt) in x.iter_mut().zip(vi) {
            *xt += yi * vt;
        }
    }
    Ok(x)
}
