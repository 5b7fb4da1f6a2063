//! Reduced-space (active-set) Newton relaxation for the level VIs, and the
//! coarse solver built from it.

use crate::error::{Error, Result};
use crate::function::{clamp_in_place, norm2, norm_inf, ExtendedNodalFunction};
use crate::linalg::{cg, gmres, BandedLu, CsrMatrix, Ic0, Ilu0, Preconditioner};
use crate::problem::VIProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovMethod {
    Cg,
    Gmres,
    /// Banded LU; `krylov_iters` is ignored.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Ic0,
    Ilu0,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    None,
    QuadraticBacktracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherConfig {
    pub newton_iters: usize,
    pub krylov: KrylovMethod,
    pub krylov_iters: usize,
    pub preconditioner: PreconditionerKind,
    pub line_search: LineSearch,
    /// Bound detection threshold, scaled by `1 + |z|_inf`.
    pub active_tol: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            newton_iters: 1,
            krylov: KrylovMethod::Cg,
            krylov_iters: 3,
            preconditioner: PreconditionerKind::Ic0,
            line_search: LineSearch::None,
            active_tol: 1e-12,
        }
    }
}

impl SmootherConfig {
    pub fn direct(newton_iters: usize) -> Self {
        Self {
            newton_iters,
            krylov: KrylovMethod::Direct,
            krylov_iters: 1,
            preconditioner: PreconditionerKind::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.krylov_iters == 0 {
            return Err(Error::InvalidConfig("krylov_iters must be at least 1".into()));
        }
        if !(self.active_tol >= 0.0) {
            return Err(Error::InvalidConfig("active_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Coarse solver settings: RS Newton with direct solves, run to convergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseConfig {
    pub max_iters: usize,
    /// Relative reduction of the level semi-smooth residual.
    pub rtol: f64,
    pub atol: f64,
    pub line_search: LineSearch,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            rtol: 1e-12,
            atol: 1e-50,
            line_search: LineSearch::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveLabel {
    Inactive,
    LowerActive,
    UpperActive,
    Pinched,
    Dirichlet,
}

impl ActiveLabel {
    pub fn is_active(self) -> bool {
        self != ActiveLabel::Inactive
    }

    /// Small integer code for exports.
    pub fn code(self) -> u8 {
        match self {
            ActiveLabel::Inactive => 0,
            ActiveLabel::LowerActive => 1,
            ActiveLabel::UpperActive => 2,
            ActiveLabel::Pinched => 3,
            ActiveLabel::Dirichlet => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    pub labels: Vec<ActiveLabel>,
}

impl ActiveSet {
    /// Classifies every vertex from the correction `z`, its bounds and the
    /// residual `r`, with threshold `tol`.
    pub fn classify(
        z: &[f64],
        lo: &ExtendedNodalFunction,
        hi: &ExtendedNodalFunction,
        r: &[f64],
        dirichlet: &[bool],
        tol: f64,
    ) -> Self {
        let labels = (0..z.len())
            .map(|p| {
                if dirichlet[p] {
                    return ActiveLabel::Dirichlet;
                }
                let (l, h) = (lo.get(p), hi.get(p));
                if h - l <= tol {
                    ActiveLabel::Pinched
                } else if z[p] - l <= tol && r[p] >= 0.0 {
                    ActiveLabel::LowerActive
                } else if h - z[p] <= tol && r[p] <= 0.0 {
                    ActiveLabel::UpperActive
                } else {
                    ActiveLabel::Inactive
                }
            })
            .collect();
        Self { labels }
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_active()).collect()
    }

    pub fn count(&self, label: ActiveLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmootherDiagnostics {
    pub newton_iters: usize,
    /// Linear solves replaced by a damped diagonal step.
    pub fallback_steps: usize,
    pub backtracks: usize,
}

impl SmootherDiagnostics {
    fn absorb(&mut self, other: &SmootherDiagnostics) {
        self.newton_iters += other.newton_iters;
        self.fallback_steps += other.fallback_steps;
        self.backtracks += other.backtracks;
    }
}

/// Fischer-Burmeister function `a + b - sqrt(a^2 + b^2)`.
#[inline]
pub fn fischer_burmeister(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        return b;
    }
    a + b - a.hypot(b)
}

/// Semi-smooth residual of a box-constrained complementarity system with
/// unknown `x`, bounds `[lo, hi]` and residual `r`; Dirichlet rows keep
/// their residual value.
pub fn fb_residual_into(
    x: &[f64],
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    r: &[f64],
    dirichlet: &[bool],
    out: &mut [f64],
) {
    for p in 0..x.len() {
        out[p] = if dirichlet[p] {
            r[p]
        } else {
            let (l, h) = (lo.get(p), hi.get(p));
            match (l.is_finite(), h.is_finite()) {
                (true, true) => fischer_burmeister(x[p] - l, r[p])
                    .max(fischer_burmeister(h - x[p], -r[p])),
                (true, false) => fischer_burmeister(x[p] - l, r[p]),
                (false, true) => fischer_burmeister(h - x[p], -r[p]),
                (false, false) => r[p],
            }
        };
    }
}

/// Workspace for one level's Newton iterations.
struct Level<'a> {
    problem: &'a VIProblem,
    j: usize,
    ell: &'a [f64],
    lo: &'a ExtendedNodalFunction,
    hi: &'a ExtendedNodalFunction,
    w_base: &'a [f64],
    u: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> Level<'a> {
    /// `r = f^j(w_base + z) - l`.
    fn residual(&mut self, z: &[f64]) -> Result<()> {
        for p in 0..z.len() {
            self.u[p] = self.w_base[p] + z[p];
        }
        self.problem.residual_into(self.j, &self.u, &mut self.r)?;
        let dirichlet = self.problem.dirichlet_mask(self.j);
        for p in 0..z.len() {
            if !dirichlet[p] {
                self.r[p] -= self.ell[p];
            }
        }
        Ok(())
    }

    fn merit(&mut self, z: &[f64]) -> Result<f64> {
        self.residual(z)?;
        let mut out = vec![0.0; z.len()];
        fb_residual_into(z, self.lo, self.hi, &self.r, self.problem.dirichlet_mask(self.j), &mut out);
        Ok(norm2(&out))
    }

    /// Residual norm over the inactive vertices, the line-search merit.
    fn inactive_norm(&mut self, z: &[f64], tol: f64) -> Result<f64> {
        self.residual(z)?;
        let dirichlet = self.problem.dirichlet_mask(self.j);
        let active = ActiveSet::classify(z, self.lo, self.hi, &self.r, dirichlet, tol);
        Ok(active
            .labels
            .iter()
            .zip(&self.r)
            .filter(|(l, _)| !l.is_active())
            .map(|(_, r)| r * r)
            .sum::<f64>()
            .sqrt())
    }
}

fn linear_solve(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &SmootherConfig,
) -> Result<Vec<f64>> {
    match cfg.krylov {
        KrylovMethod::Direct => Ok(BandedLu::new(a)?.solve(b)),
        KrylovMethod::Cg | KrylovMethod::Gmres => {
            let pc: Box<dyn Preconditioner> = match cfg.preconditioner {
                PreconditionerKind::Ic0 => Box::new(Ic0::new(a)?),
                PreconditionerKind::Ilu0 => Box::new(Ilu0::new(a)?),
                PreconditionerKind::None => Box::new(IdentityPc),
            };
            if cfg.krylov == KrylovMethod::Cg {
                cg(a, b, pc.as_ref(), cfg.krylov_iters)
            } else {
                gmres(a, b, pc.as_ref(), cfg.krylov_iters)
            }
        }
    }
}

struct IdentityPc;

impl Preconditioner for IdentityPc {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Approximately solves `A x = b` with the configured method, exposed for
/// testing the embedded solvers.
pub fn solve_linear(a: &CsrMatrix, b: &[f64], cfg: &SmootherConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    linear_solve(a, b, cfg)
}

fn check_bounds(
    j: usize,
    z: &[f64],
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    dirichlet: &[bool],
) -> Result<()> {
    for p in 0..z.len() {
        if z[p] < lo.get(p) || z[p] > hi.get(p) || (dirichlet[p] && z[p] != 0.0) {
            return Err(Error::Inadmissible {
                level: j,
                vertex: p,
                detail: format!("correction {} outside [{}, {}]", z[p], lo.get(p), hi.get(p)),
            });
        }
    }
    Ok(())
}

/// One Newton step in place; returns the active set it used.
fn newton_step(
    lvl: &mut Level<'_>,
    z: &mut [f64],
    cfg: &SmootherConfig,
    diag: &mut SmootherDiagnostics,
) -> Result<(ActiveSet, f64)> {
    let n = z.len();
    let dirichlet = lvl.problem.dirichlet_mask(lvl.j);
    lvl.residual(z)?;
    let tol = cfg.active_tol * (1.0 + norm_inf(z));
    let active = ActiveSet::classify(z, lvl.lo, lvl.hi, &lvl.r, dirichlet, tol);
    let mask = active.mask();
    let rhs: Vec<f64> = (0..n).map(|p| if mask[p] { 0.0 } else { -lvl.r[p] }).collect();
    if rhs.iter().all(|&x| x == 0.0) {
        diag.newton_iters += 1;
        return Ok((active, 0.0));
    }
    let merit0 = if cfg.line_search == LineSearch::QuadraticBacktracking {
        Some(
            (0..n)
                .filter(|&p| !mask[p])
                .map(|p| lvl.r[p] * lvl.r[p])
                .sum::<f64>()
                .sqrt(),
        )
    } else {
        None
    };
    let mut jac = lvl.problem.jacobian_slice(lvl.j, &lvl.u)?;
    jac.mask_identity(&mask);
    let mut delta = match linear_solve(&jac, &rhs, cfg) {
        Ok(d) if d.iter().all(|x| x.is_finite()) => d,
        _ => {
            diag.fallback_steps += 1;
            let d = jac.diag();
            rhs.iter()
                .zip(&d)
                .map(|(&b, &dd)| if dd.abs() > 0.0 { 0.5 * b / dd.abs() } else { 0.0 })
                .collect()
        }
    };
    for p in 0..n {
        if mask[p] {
            delta[p] = 0.0;
        }
    }
    let trial = |t: f64, out: &mut Vec<f64>| {
        out.clear();
        out.extend(z.iter().zip(&delta).map(|(a, b)| a + t * b));
        clamp_in_place(out, lvl.lo, lvl.hi);
    };
    let mut t = 1.0;
    let mut cand = Vec::with_capacity(n);
    trial(t, &mut cand);
    if let Some(m0) = merit0 {
        // quadratic backtracking on half the squared inactive residual norm
        let f0 = 0.5 * m0 * m0;
        let slope = -2.0 * f0;
        let mut ft = match lvl.inactive_norm(&cand, tol) {
            Ok(m) => 0.5 * m * m,
            Err(Error::Inadmissible { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let mut tries = 0;
        while !(ft <= f0 + 1e-4 * t * slope) && tries < 20 {
            let denom = 2.0 * (ft - f0 - slope * t);
            let mut t_new = if denom.is_finite() && denom > 0.0 {
                -slope * t * t / denom
            } else {
                0.5 * t
            };
            t_new = t_new.clamp(0.1 * t, 0.5 * t);
            t = t_new;
            trial(t, &mut cand);
            ft = match lvl.inactive_norm(&cand, tol) {
                Ok(m) => 0.5 * m * m,
                Err(Error::Inadmissible { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            tries += 1;
            diag.backtracks += 1;
        }
    }
    let step = cand
        .iter()
        .zip(z.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    z.copy_from_slice(&cand);
    for p in 0..n {
        if dirichlet[p] {
            z[p] = 0.0;
        }
    }
    diag.newton_iters += 1;
    Ok((active, step))
}

/// Runs `cfg.newton_iters` reduced-space Newton iterations on the level-`j`
/// VI for a correction `z` to `w_base`:
/// find `lo <= z <= hi` with `<f^j(w_base + z) - l, v - z> >= 0`.
#[allow(clippy::too_many_arguments)]
pub fn rs_newton_smooth(
    problem: &VIProblem,
    j: usize,
    ell: &[f64],
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    w_base: &[f64],
    z: &mut [f64],
    cfg: &SmootherConfig,
) -> Result<SmootherDiagnostics> {
    cfg.validate()?;
    let dirichlet = problem.dirichlet_mask(j);
    check_bounds(j, z, lo, hi, dirichlet)?;
    let n = z.len();
    let mut lvl = Level {
        problem,
        j,
        ell,
        lo,
        hi,
        w_base,
        u: vec![0.0; n],
        r: vec![0.0; n],
    };
    let mut diag = SmootherDiagnostics::default();
    for _ in 0..cfg.newton_iters {
        newton_step(&mut lvl, z, cfg, &mut diag)?;
    }
    Ok(diag)
}

/// Norm of the level-`j` semi-smooth residual at correction `z`.
#[allow(clippy::too_many_arguments)]
pub fn level_fb_norm(
    problem: &VIProblem,
    j: usize,
    ell: &[f64],
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    w_base: &[f64],
    z: &[f64],
) -> Result<f64> {
    let n = z.len();
    let mut lvl = Level {
        problem,
        j,
        ell,
        lo,
        hi,
        w_base,
        u: vec![0.0; n],
        r: vec![0.0; n],
    };
    lvl.merit(z)
}

/// Solves the level VI with RS Newton and direct linear solves until the
/// semi-smooth residual has dropped by `cfg.rtol` (or below `cfg.atol`), or
/// the active set repeats with a negligible step.
#[allow(clippy::too_many_arguments)]
pub fn coarse_solve(
    problem: &VIProblem,
    j: usize,
    ell: &[f64],
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    w_base: &[f64],
    z: &mut [f64],
    cfg: &CoarseConfig,
) -> Result<SmootherDiagnostics> {
    let dirichlet = problem.dirichlet_mask(j);
    check_bounds(j, z, lo, hi, dirichlet)?;
    let n = z.len();
    let mut lvl = Level {
        problem,
        j,
        ell,
        lo,
        hi,
        w_base,
        u: vec![0.0; n],
        r: vec![0.0; n],
    };
    let newton = SmootherConfig {
        line_search: cfg.line_search,
        ..SmootherConfig::direct(1)
    };
    let mut diag = SmootherDiagnostics::default();
    let r0 = lvl.merit(z)?;
    let target = cfg.atol.max(cfg.rtol * r0);
    if r0 <= target || r0 == 0.0 {
        return Ok(diag);
    }
    let mut prev: Option<ActiveSet> = None;
    let mut res = r0;
    for _ in 0..cfg.max_iters {
        let (active, step) = newton_step(&mut lvl, z, &newton, &mut diag)?;
        res = lvl.merit(z)?;
        if res <= target {
            return Ok(diag);
        }
        let scale = 1.0 + norm_inf(z) + norm_inf(w_base);
        if prev.as_ref() == Some(&active) && step <= 1e-14 * scale {
            return Ok(diag);
        }
        prev = Some(active);
    }
    Err(Error::CoarseNotConverged {
        iterations: cfg.max_iters,
        residual: res,
    })
}

/// Total diagnostics over several smoother calls.
pub fn merge_diagnostics(items: &[SmootherDiagnostics]) -> SmootherDiagnostics {
    let mut out = SmootherDiagnostics::default();
    for d in items {
        out.absorb(d);
    }
    out
}
