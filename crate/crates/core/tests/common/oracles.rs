use fascd::smoother::{coarse_solve, rs_newton_smooth};
use fascd::*;

/// Tridiagonal solve (Thomas algorithm); `a` is the sub-, `b` the main and
/// `c` the super-diagonal.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Obstacle p-Laplacian on (-3, 3): minimizes
/// `sum_e h |s_e|^p / p - <l, u>` over `u >= -0.2|x|` by projected Newton
/// with nested iteration from 6 cells up to `cells`.
pub struct Plap1dOracle {
    pub p: f64,
    pub cells: usize,
    pub u: Vec<f64>,
}

fn psi(x: f64) -> f64 {
    -0.2 * x.abs()
}

impl Plap1dOracle {
    pub fn solve(p: f64, cells: usize) -> Self {
        let mut n = 6;
        let mut u: Vec<f64> = (0..=n).map(|i| psi(-3.0 + i as f64)).collect();
        for v in u.iter_mut().take(n).skip(1) {
            *v = v.max(0.0);
        }
        loop {
            projected_newton(p, n, &mut u);
            if n >= cells {
                break;
            }
            let mut fine = vec![0.0; 2 * n + 1];
            for i in 0..=n {
                fine[2 * i] = u[i];
            }
            for i in 0..n {
                fine[2 * i + 1] = 0.5 * (u[i] + u[i + 1]);
            }
            n *= 2;
            u = fine;
        }
        assert_eq!(n, cells, "cells must be 6 * 2^k");
        Self { p, cells, u }
    }

    /// Value at `x`, which must be a node of the oracle mesh.
    pub fn at(&self, x: f64) -> f64 {
        let h = 6.0 / self.cells as f64;
        let i = ((x + 3.0) / h).round() as usize;
        assert!((-3.0 + i as f64 * h - x).abs() < 1e-9 * h);
        self.u[i]
    }
}

fn gradient(p: f64, n: usize, u: &[f64]) -> (Vec<f64>, f64) {
    let h = 6.0 / n as f64;
    let load = |e: usize| if (-3.0 + (e as f64 + 0.5) * h).abs() < 1.0 { 1.0 } else { -1.0 };
    let mut g = vec![0.0; n + 1];
    let mut energy = 0.0;
    for e in 0..n {
        let s = (u[e + 1] - u[e]) / h;
        let flux = if s == 0.0 { 0.0 } else { s.abs().powf(p - 2.0) * s };
        energy += h * s.abs().powf(p) / p - 0.5 * h * load(e) * (u[e] + u[e + 1]);
        g[e] -= flux + 0.5 * h * load(e);
        g[e + 1] += flux - 0.5 * h * load(e);
    }
    (g, energy)
}

fn fb_norm(n: usize, u: &[f64], g: &[f64]) -> f64 {
    let h = 6.0 / n as f64;
    (1..n)
        .map(|i| {
            let a = u[i] - psi(-3.0 + i as f64 * h);
            let b = g[i];
            (a + b - a.hypot(b)).abs()
        })
        .fold(0.0, f64::max)
}

fn projected_newton(p: f64, n: usize, u: &mut [f64]) {
    let h = 6.0 / n as f64;
    let obst: Vec<f64> = (0..=n).map(|i| psi(-3.0 + i as f64 * h)).collect();
    for _ in 0..500 {
        let (g, energy) = gradient(p, n, u);
        let res = fb_norm(n, u, &g);
        if res <= 1e-13 * h {
            return;
        }
        let active: Vec<bool> = (0..=n)
            .map(|i| i == 0 || i == n || (u[i] - obst[i] <= 1e-14 && g[i] > 0.0))
            .collect();
        let k: Vec<f64> = (0..n)
            .map(|e| {
                let s = (u[e + 1] - u[e]) / h;
                (p - 1.0) * (s * s + 1e-20).powf(0.5 * (p - 2.0)) / h
            })
            .collect();
        let mut sub = vec![0.0; n + 1];
        let mut diag = vec![1.0; n + 1];
        let mut sup = vec![0.0; n + 1];
        let mut rhs = vec![0.0; n + 1];
        for i in 0..=n {
            if active[i] {
                continue;
            }
            diag[i] = k[i - 1] + k[i];
            if !active[i - 1] {
                sub[i] = -k[i - 1];
            }
            if !active[i + 1] {
                sup[i] = -k[i];
            }
            rhs[i] = -g[i];
        }
        let d = thomas(&sub, &diag, &sup, &rhs);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..=n).map(|i| (u[i] + t * d[i]).max(obst[i])).collect();
            let (gt, et) = gradient(p, n, &trial);
            let decrease: f64 = (0..=n).map(|i| g[i] * (trial[i] - u[i])).sum();
            if et <= energy + 1e-4 * decrease || fb_norm(n, &trial, &gt) < res {
                u.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}

/// Flat-bed steady dome thickness at distance `r` from the center for
/// mass balance `c (2 - 3 r / l)`: with flux `q = c r (1 - r / l)`,
/// `H^{(2n+2)/n}(r) = (2n+2)/n * int_r^l (q / gamma)^{1/n}`.
pub fn dome_thickness(r: f64, n: f64, gamma: f64, c: f64, l: f64) -> f64 {
    if r >= l {
        return 0.0;
    }
    // rho = l - t^3 removes the endpoint singularity
    let f = |t: f64| {
        let rho = l - t * t * t;
        let q = (c * rho * (1.0 - rho / l)).max(0.0);
        (q / gamma).powf(1.0 / n) * 3.0 * t * t
    };
    let top = (l - r).cbrt();
    let steps = 4000;
    let dt = top / steps as f64;
    let mut s = f(0.0) + f(top);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dt);
    }
    let integral = s * dt / 3.0;
    let e = (2.0 * n + 2.0) / n;
    (e * integral).powf(1.0 / e)
}

/// Textbook FAS V-cycle on the unconstrained level problems: smooth,
/// restrict the iterate by injection and the defect by `R` (Dirichlet rows
/// carry no defect), recurse on `f^{j-1}(v) = f^{j-1}(R u) + R d`, and
/// correct by prolongation of `v - R u`.
pub fn plain_fas(problem: &VIProblem, j: usize, u: &mut [f64], ell: &[f64], cfg: &CycleConfig) {
    let n = u.len();
    let lo = ExtendedNodalFunction::neg_infinity(j, n);
    let hi = ExtendedNodalFunction::infinity(j, n);
    let smooth = |u: &mut [f64], sm: &SmootherConfig, times: usize| {
        for _ in 0..times {
            let mut z = vec![0.0; n];
            rs_newton_smooth(problem, j, ell, &lo, &hi, u, &mut z, sm).unwrap();
            for (a, b) in u.iter_mut().zip(&z) {
                *a += b;
            }
        }
    };
    if j == 0 {
        let mut z = vec![0.0; n];
        coarse_solve(problem, 0, ell, &lo, &hi, u, &mut z, &cfg.coarse).unwrap();
        for (a, b) in u.iter_mut().zip(&z) {
            *a += b;
        }
        return;
    }
    smooth(u, &cfg.down_smoother, cfg.down);
    let mask = problem.dirichlet_mask(j);
    let mut f = vec![0.0; n];
    problem.residual_into(j, u, &mut f).unwrap();
    let defect: Vec<f64> = (0..n).map(|p| if mask[p] { 0.0 } else { ell[p] - f[p] }).collect();
    let plan = problem.transfer();
    let uc = plan.inject(&NodalFunction::from_values(j, u.to_vec())).unwrap();
    let rd = plan.restrict_dual(&DualVector::from_values(j, defect)).unwrap();
    let nc = uc.len();
    let mut fc = vec![0.0; nc];
    problem.residual_into(j - 1, uc.values(), &mut fc).unwrap();
    let cmask = problem.dirichlet_mask(j - 1);
    let ellc: Vec<f64> = (0..nc).map(|p| if cmask[p] { 0.0 } else { fc[p] + rd[p] }).collect();
    let mut vc = uc.values().to_vec();
    plain_fas(problem, j - 1, &mut vc, &ellc, cfg);
    let corr: Vec<f64> = vc.iter().zip(uc.iter()).map(|(a, b)| a - b).collect();
    let pc = plan.prolong(&NodalFunction::from_values(j - 1, corr)).unwrap();
    for p in 0..n {
        if !mask[p] {
            u[p] += pc[p];
        }
    }
    smooth(u, &cfg.up_smoother, cfg.up);
}
