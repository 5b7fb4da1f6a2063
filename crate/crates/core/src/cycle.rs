//! FASCD V-cycles and full multigrid, the semi-smooth residual, and the
//! stopping test.

use crate::constraints::{check_ordering, finest_defects, DefectLadder};
use crate::error::{Error, Result};
use crate::function::{
    admissible, clamp_in_place, ext_sub_fn, norm2, DirichletData, ExtendedNodalFunction,
    NodalFunction,
};
use crate::problem::{ProblemKind, VIProblem};
use crate::smoother::{
    coarse_solve, fb_residual_into, rs_newton_smooth, CoarseConfig, KrylovMethod, LineSearch,
    PreconditionerKind, SmootherConfig, SmootherDiagnostics,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Repeated V-cycles from the natural initial iterate.
    VCycle,
    Fmg,
    /// Single-level RS Newton on the finest mesh.
    RsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    pub down: usize,
    pub up: usize,
    pub down_smoother: SmootherConfig,
    pub up_smoother: SmootherConfig,
    pub coarse: CoarseConfig,
    /// Newton settings for [`SolveMode::RsOnly`].
    pub rs_only: SmootherConfig,
    pub rampv: usize,
    pub atol: f64,
    pub rtol: f64,
    pub stol: f64,
    pub max_cycles: usize,
    /// Per-cycle ladder ordering and admissibility assertions.
    pub debug_checks: bool,
}

impl Default for CycleConfig {
    fn default() -> Self {
        let smoother = SmootherConfig::default();
        Self {
            down: 1,
            up: 1,
            down_smoother: smoother,
            up_smoother: smoother,
            coarse: CoarseConfig::default(),
            rs_only: SmootherConfig {
                krylov_iters: 100,
                ..smoother
            },
            rampv: 1,
            atol: 1e-50,
            rtol: 1e-8,
            stol: 1e-8,
            max_cycles: 200,
            debug_checks: false,
        }
    }
}

impl CycleConfig {
    /// Settings used for each problem's reported experiments.
    pub fn preset(kind: ProblemKind) -> Self {
        let base = Self::default();
        match kind {
            ProblemKind::Ball | ProblemKind::Spiral => base,
            ProblemKind::Plap1d => {
                let s = SmootherConfig {
                    line_search: LineSearch::QuadraticBacktracking,
                    ..SmootherConfig::direct(3)
                };
                Self {
                    down_smoother: s,
                    up_smoother: s,
                    coarse: CoarseConfig {
                        line_search: LineSearch::QuadraticBacktracking,
                        ..CoarseConfig::default()
                    },
                    rs_only: SmootherConfig { newton_iters: 1, ..s },
                    rtol: 1e-6,
                    atol: 1e-12,
                    stol: 1e-12,
                    ..base
                }
            }
            ProblemKind::AdvDiff2d => {
                let s = SmootherConfig {
                    newton_iters: 2,
                    krylov: KrylovMethod::Gmres,
                    krylov_iters: 3,
                    preconditioner: PreconditionerKind::Ilu0,
                    ..SmootherConfig::default()
                };
                Self {
                    down_smoother: s,
                    up_smoother: s,
                    rs_only: SmootherConfig {
                        newton_iters: 1,
                        krylov_iters: 100,
                        ..s
                    },
                    rtol: 1e-5,
                    atol: 1e-9,
                    stol: 1e-9,
                    ..base
                }
            }
            ProblemKind::Sia2d | ProblemKind::SiaDome => {
                let s = SmootherConfig {
                    newton_iters: 4,
                    krylov: KrylovMethod::Gmres,
                    krylov_iters: 3,
                    preconditioner: PreconditionerKind::Ilu0,
                    line_search: LineSearch::QuadraticBacktracking,
                    ..SmootherConfig::default()
                };
                Self {
                    down_smoother: s,
                    up_smoother: s,
                    coarse: CoarseConfig {
                        max_iters: 200,
                        line_search: LineSearch::QuadraticBacktracking,
                        ..CoarseConfig::default()
                    },
                    rs_only: SmootherConfig {
                        newton_iters: 1,
                        krylov_iters: 100,
                        ..s
                    },
                    rtol: 2e-4,
                    atol: 1e-8,
                    ..base
                }
            }
        }
    }

    pub fn validate(&self, levels: usize) -> Result<()> {
        if levels > 1 && self.down + self.up == 0 {
            return Err(Error::InvalidConfig("down + up must be at least 1".into()));
        }
        if self.rampv == 0 {
            return Err(Error::InvalidConfig("rampv must be at least 1".into()));
        }
        if self.max_cycles == 0 {
            return Err(Error::InvalidConfig("max_cycles must be at least 1".into()));
        }
        for t in [self.atol, self.rtol, self.stol] {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!("tolerance {t} must be nonnegative")));
            }
        }
        self.down_smoother.validate()?;
        self.up_smoother.validate()?;
        self.rs_only.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Atol,
    Rtol,
    /// Relative step below `stol`; the residual may still be large.
    Stol,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Finest-level cycles (post-ramp for FMG, Newton steps for RS only).
    pub cycles: usize,
    /// Semi-smooth residual norm of the natural finest-level initial
    /// iterate; the reference for `rtol`.
    pub initial_residual: f64,
    /// FMG only: residual norm of the iterate prolonged from the ramp.
    pub ramp_residual: f64,
    /// Residual norm after each counted cycle.
    pub residual_history: Vec<f64>,
    /// `|dw|_L2 / |w|_L2` after each counted cycle.
    pub step_history: Vec<f64>,
    pub stop: Option<StopReason>,
    /// Cycles run during the FMG ramp, summed over levels.
    pub ramp_cycles: usize,
    /// Peak scalar slots held in per-level vectors during any V-cycle.
    pub peak_storage: usize,
    pub smoother: SmootherDiagnostics,
}

impl SolveStats {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(self.initial_residual)
    }

    /// `(|r_k| / |r_0|)^{1/k}`, or zero without cycles.
    pub fn rate(&self) -> f64 {
        if self.cycles == 0 || self.initial_residual == 0.0 {
            return 0.0;
        }
        (self.final_residual() / self.initial_residual).powf(1.0 / self.cycles as f64)
    }

    /// Stopped on a small step rather than a small residual.
    pub fn stagnated(&self) -> bool {
        self.stop == Some(StopReason::Stol)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub w: NodalFunction,
    pub stats: SolveStats,
}

/// The stopping test on finest-level quantities.  `k` counts cycles done;
/// the relative clauses need `k >= 1`.
pub fn converged(
    r0: f64,
    rk: f64,
    step_rel: Option<f64>,
    k: usize,
    cfg: &CycleConfig,
) -> Option<StopReason> {
    if rk < cfg.atol || rk == 0.0 {
        return Some(StopReason::Atol);
    }
    if k >= 1 {
        if r0 > 0.0 && rk / r0 < cfg.rtol {
            return Some(StopReason::Rtol);
        }
        if let Some(s) = step_rel {
            if s < cfg.stol {
                return Some(StopReason::Stol);
            }
        }
    }
    None
}

/// `r_SS(w)` on level `j` with bounds `[lower, upper]` and source `ell`.
pub fn semi_smooth_residual_at(
    problem: &VIProblem,
    j: usize,
    ell: &[f64],
    lower: &ExtendedNodalFunction,
    upper: &ExtendedNodalFunction,
    w: &[f64],
) -> Result<Vec<f64>> {
    let mut r = vec![0.0; w.len()];
    problem.residual_into(j, w, &mut r)?;
    let dirichlet = problem.dirichlet_mask(j);
    for p in 0..w.len() {
        if !dirichlet[p] {
            r[p] -= ell[p];
        }
    }
    let mut out = vec![0.0; w.len()];
    fb_residual_into(w, lower, upper, &r, dirichlet, &mut out);
    Ok(out)
}

/// Finest-level semi-smooth residual.
pub fn semi_smooth_residual(problem: &VIProblem, w: &NodalFunction) -> Result<Vec<f64>> {
    semi_smooth_residual_at(
        problem,
        problem.finest(),
        problem.source(),
        problem.lower(),
        problem.upper(),
        w,
    )
}

/// Plain residual `f^J(w) - l^J` (zero on Dirichlet rows when `w` meets the
/// boundary data).
pub fn plain_residual(problem: &VIProblem, w: &NodalFunction) -> Result<Vec<f64>> {
    let j = problem.finest();
    let mut r = problem.residual(j, w)?.into_values();
    let dirichlet = problem.dirichlet_mask(j);
    for p in 0..r.len() {
        if !dirichlet[p] {
            r[p] -= problem.source()[p];
        }
    }
    Ok(r)
}

/// Reusable per-level buffers for V-cycles of one problem.
#[derive(Debug, Clone)]
pub struct Workspace {
    w: Vec<Vec<f64>>,
    ell: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    tmp_u: Vec<Vec<f64>>,
    tmp_r: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(problem: &VIProblem) -> Self {
        let dofs = problem.hierarchy().dofs();
        let alloc = || dofs.iter().map(|&m| vec![0.0; m]).collect::<Vec<_>>();
        Self {
            w: alloc(),
            ell: alloc(),
            y: alloc(),
            tmp_u: alloc(),
            tmp_r: alloc(),
        }
    }
}

/// Diagnostics of a single V-cycle.
#[derive(Debug, Clone, Default)]
pub struct CycleReport {
    /// Scalar slots in `w^j`, `l^j`, `y^j = z^j` over levels `0..=top`, the
    /// level defect constraints and their differences, and the top-level
    /// obstacles.  Uniform (constant) bounds take no slots.
    pub storage_slots: usize,
    pub smoother: SmootherDiagnostics,
}

fn zero_dirichlet(v: &mut [f64], mask: &[bool]) {
    for (x, &d) in v.iter_mut().zip(mask) {
        if d {
            *x = 0.0;
        }
    }
}

fn accumulate(total: &mut SmootherDiagnostics, d: &SmootherDiagnostics) {
    total.newton_iters += d.newton_iters;
    total.fallback_steps += d.fallback_steps;
    total.backtracks += d.backtracks;
}

/// One FASCD V-cycle on levels `0..=top`, updating `w` (on level `top`) in
/// place.  `ell`, `lower` and `upper` are the level-`top` source and
/// obstacles; `w` must lie between the obstacles and match the boundary
/// data.
#[allow(clippy::too_many_arguments)]
pub fn vcycle(
    problem: &VIProblem,
    top: usize,
    ell: &[f64],
    lower: &ExtendedNodalFunction,
    upper: &ExtendedNodalFunction,
    w: &mut [f64],
    cfg: &CycleConfig,
    ws: &mut Workspace,
) -> Result<CycleReport> {
    let plan = problem.transfer();
    let mut report = CycleReport::default();
    let wf = NodalFunction::from_values(top, w.to_vec());
    let (chi_lo, chi_hi) = finest_defects(lower, upper, &wf)?;
    let ladder = DefectLadder::build(plan, chi_lo, chi_hi)?;
    if cfg.debug_checks && !check_ordering(plan, &ladder) {
        return Err(Error::InvalidProblem("level defect constraints out of order".into()));
    }
    report.storage_slots = ladder.storage_slots()
        + lower.storage_slots()
        + upper.storage_slots()
        + 3 * (0..=top).map(|j| problem.level(j).num_vertices()).sum::<usize>();

    ws.w[top].copy_from_slice(w);
    ws.ell[top].copy_from_slice(ell);
    for j in (1..=top).rev() {
        let mask = problem.dirichlet_mask(j);
        ws.y[j].iter_mut().for_each(|x| *x = 0.0);
        for _ in 0..cfg.down {
            let d = rs_newton_smooth(
                problem,
                j,
                &ws.ell[j],
                ladder.phi_lo(j),
                ladder.phi_hi(j),
                &ws.w[j],
                &mut ws.y[j],
                &cfg.down_smoother,
            )?;
            accumulate(&mut report.smoother, &d);
        }
        // u = w^j + y^j ; defect d = l^j - f^j(u), zero on Dirichlet rows
        let (lo_w, hi_w) = ws.w.split_at_mut(j);
        let (_, hi_u) = ws.tmp_u.split_at_mut(j);
        let (lo_r, hi_r) = ws.tmp_r.split_at_mut(j);
        let (lo_ell, hi_ell) = ws.ell.split_at_mut(j);
        let u = &mut hi_u[0];
        for p in 0..u.len() {
            u[p] = hi_w[0][p] + ws.y[j][p];
        }
        let r = &mut hi_r[0];
        problem.residual_into(j, u, r)?;
        for p in 0..r.len() {
            r[p] = if mask[p] { 0.0 } else { hi_ell[0][p] - r[p] };
        }
        let coarse_w = &mut lo_w[j - 1];
        plan.inject_into(j, u, coarse_w);
        let coarse_ell = &mut lo_ell[j - 1];
        plan.restrict_into(j, r, coarse_ell);
        let f_coarse = &mut lo_r[j - 1];
        problem.residual_into(j - 1, coarse_w, f_coarse)?;
        let cmask = problem.dirichlet_mask(j - 1);
        for p in 0..coarse_ell.len() {
            coarse_ell[p] = if cmask[p] { 0.0 } else { coarse_ell[p] + f_coarse[p] };
        }
    }

    ws.y[0].iter_mut().for_each(|x| *x = 0.0);
    let d = coarse_solve(
        problem,
        0,
        &ws.ell[0],
        ladder.chi_lo(0),
        ladder.chi_hi(0),
        &ws.w[0],
        &mut ws.y[0],
        &cfg.coarse,
    )?;
    accumulate(&mut report.smoother, &d);

    for j in 1..=top {
        let (lo_y, hi_y) = ws.y.split_at_mut(j);
        let pz = &mut ws.tmp_u[j];
        plan.prolong_into(j, &lo_y[j - 1], pz);
        let z = &mut hi_y[0];
        for p in 0..z.len() {
            z[p] += pz[p];
        }
        let lo = ladder.chi_lo(j);
        let hi = ladder.chi_hi(j);
        if cfg.debug_checks {
            let slack = (0..z.len())
                .map(|p| (lo.get(p) - z[p]).max(z[p] - hi.get(p)))
                .fold(0.0_f64, f64::max);
            if slack > 1e-10 * (1.0 + crate::function::norm_inf(z)) {
                return Err(Error::Inadmissible {
                    level: j,
                    vertex: 0,
                    detail: format!("upward initial iterate leaves its bounds by {slack:e}"),
                });
            }
        }
        clamp_in_place(z, lo, hi);
        zero_dirichlet(z, problem.dirichlet_mask(j));
        for _ in 0..cfg.up {
            let d = rs_newton_smooth(
                problem,
                j,
                &ws.ell[j],
                lo,
                hi,
                &ws.w[j],
                z,
                &cfg.up_smoother,
            )?;
            accumulate(&mut report.smoother, &d);
        }
    }

    let mask = problem.dirichlet_mask(top);
    let g = problem.dirichlet_values(top);
    for p in 0..w.len() {
        w[p] = if mask[p] { g[p] } else { w[p] + ws.y[top][p] };
    }
    clamp_in_place(w, lower, upper);
    if cfg.debug_checks {
        let wf = NodalFunction::from_values(top, w.to_vec());
        let dd = DirichletData { mask, values: g };
        if !admissible(&wf, lower, upper, Some(dd), 0.0) {
            return Err(Error::Inadmissible {
                level: top,
                vertex: 0,
                detail: "V-cycle output not admissible".into(),
            });
        }
    }
    Ok(report)
}

fn relative_step(problem: &VIProblem, prev: &[f64], curr: &[f64]) -> f64 {
    let dw: Vec<f64> = curr.iter().zip(prev).map(|(a, b)| a - b).collect();
    let num = problem.l2_norm(&dw);
    let den = problem.l2_norm(curr);
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Finest-level V-cycles from `w0` until the stopping test holds.
pub fn solve_vcycles(problem: &VIProblem, w0: &NodalFunction, cfg: &CycleConfig) -> Result<Solution> {
    cfg.validate(problem.hierarchy().num_levels())?;
    let top = problem.finest();
    let mut ws = Workspace::new(problem);
    let mut w = w0.values().to_vec();
    let mut stats = SolveStats::default();
    finest_cycles(problem, &mut w, cfg, &mut ws, &mut stats)?;
    Ok(Solution {
        w: NodalFunction::from_values(top, w),
        stats,
    })
}

fn finest_cycles(
    problem: &VIProblem,
    w: &mut Vec<f64>,
    cfg: &CycleConfig,
    ws: &mut Workspace,
    stats: &mut SolveStats,
) -> Result<()> {
    let top = problem.finest();
    let r0 = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
    stats.initial_residual = r0;
    if let Some(s) = converged(r0, r0, None, 0, cfg) {
        stats.stop = Some(s);
        return Ok(());
    }
    for k in 1..=cfg.max_cycles {
        let prev = w.clone();
        let rep = if top == 0 {
            single_level_solve(problem, w, cfg)?
        } else {
            vcycle(
                problem,
                top,
                problem.source(),
                problem.lower(),
                problem.upper(),
                w,
                cfg,
                ws,
            )?
        };
        stats.peak_storage = stats.peak_storage.max(rep.storage_slots);
        accumulate(&mut stats.smoother, &rep.smoother);
        let rk = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
        let step = relative_step(problem, &prev, w);
        stats.cycles = k;
        stats.residual_history.push(rk);
        stats.step_history.push(step);
        if let Some(s) = converged(r0, rk, Some(step), k, cfg) {
            stats.stop = Some(s);
            return Ok(());
        }
    }
    Err(Error::NotConverged {
        cycles: cfg.max_cycles,
        residual: stats.final_residual(),
    })
}

/// With a single level a cycle is one coarse solve.
fn single_level_solve(problem: &VIProblem, w: &mut [f64], cfg: &CycleConfig) -> Result<CycleReport> {
    let lo = ext_sub_fn(problem.lower(), &ExtendedNodalFunction::from_values(0, w.to_vec()))?;
    let hi = ext_sub_fn(problem.upper(), &ExtendedNodalFunction::from_values(0, w.to_vec()))?;
    let mut z = vec![0.0; w.len()];
    let d = coarse_solve(problem, 0, problem.source(), &lo, &hi, w, &mut z, &cfg.coarse)?;
    let mask = problem.dirichlet_mask(0);
    let g = problem.dirichlet_values(0);
    for p in 0..w.len() {
        w[p] = if mask[p] { g[p] } else { w[p] + z[p] };
    }
    clamp_in_place(w, problem.lower(), problem.upper());
    Ok(CycleReport {
        storage_slots: lo.storage_slots() + hi.storage_slots() + 3 * w.len(),
        smoother: d,
    })
}

/// Level sources `l^j` and obstacles by restriction and injection.
struct LevelData {
    ell: Vec<Vec<f64>>,
    lower: Vec<ExtendedNodalFunction>,
    upper: Vec<ExtendedNodalFunction>,
}

fn coarsen_problem_data(problem: &VIProblem) -> Result<LevelData> {
    let plan = problem.transfer();
    let top = problem.finest();
    let mut ell = vec![problem.source().values().to_vec()];
    let mut lower = vec![problem.lower().clone()];
    let mut upper = vec![problem.upper().clone()];
    for j in (1..=top).rev() {
        let fine = ell.last().expect("nonempty");
        let mut coarse = vec![0.0; problem.level(j - 1).num_vertices()];
        plan.restrict_into(j, fine, &mut coarse);
        zero_dirichlet(&mut coarse, problem.dirichlet_mask(j - 1));
        ell.push(coarse);
        lower.push(plan.inject_ext(lower.last().expect("nonempty"))?);
        upper.push(plan.inject_ext(upper.last().expect("nonempty"))?);
    }
    ell.reverse();
    lower.reverse();
    upper.reverse();
    Ok(LevelData { ell, lower, upper })
}

fn boundary_and_clamp(problem: &VIProblem, j: usize, w: &mut [f64], lo: &ExtendedNodalFunction, hi: &ExtendedNodalFunction) {
    clamp_in_place(w, lo, hi);
    let mask = problem.dirichlet_mask(j);
    let g = problem.dirichlet_values(j);
    for p in 0..w.len() {
        if mask[p] {
            w[p] = g[p];
        }
    }
}

/// Full multigrid: coarse solve, then prolong, clamp and run `rampv`
/// V-cycles on each finer level, then V-cycles on the finest level until
/// the stopping test holds.  The relative test is measured against the
/// residual of the natural initial iterate, as for [`solve_vcycles`].
pub fn fmg(problem: &VIProblem, cfg: &CycleConfig) -> Result<Solution> {
    cfg.validate(problem.hierarchy().num_levels())?;
    let plan = problem.transfer();
    let top = problem.finest();
    let data = coarsen_problem_data(problem)?;
    let mut ws = Workspace::new(problem);
    let mut stats = SolveStats {
        initial_residual: norm2(&semi_smooth_residual(problem, problem.initial_iterate())?),
        ..SolveStats::default()
    };

    // natural initial iterate injected to the coarsest level
    let mut w = problem.initial_iterate().values().to_vec();
    for j in (1..=top).rev() {
        let mut coarse = vec![0.0; problem.level(j - 1).num_vertices()];
        plan.inject_into(j, &w, &mut coarse);
        w = coarse;
    }
    boundary_and_clamp(problem, 0, &mut w, &data.lower[0], &data.upper[0]);
    let wext = ExtendedNodalFunction::from_values(0, w.clone());
    let lo = ext_sub_fn(&data.lower[0], &wext)?;
    let hi = ext_sub_fn(&data.upper[0], &wext)?;
    let mut z = vec![0.0; w.len()];
    let d = coarse_solve(problem, 0, &data.ell[0], &lo, &hi, &w, &mut z, &cfg.coarse)?;
    accumulate(&mut stats.smoother, &d);
    for p in 0..w.len() {
        w[p] += z[p];
    }
    boundary_and_clamp(problem, 0, &mut w, &data.lower[0], &data.upper[0]);
    if top == 0 {
        let rk = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(0, w.clone()))?);
        stats.cycles = 1;
        stats.residual_history.push(rk);
        stats.step_history.push(0.0);
        stats.stop = converged(stats.initial_residual, rk, None, 1, cfg).or(Some(StopReason::Atol));
        return Ok(Solution {
            w: NodalFunction::from_values(0, w),
            stats,
        });
    }

    for j in 1..=top {
        let mut fine = vec![0.0; problem.level(j).num_vertices()];
        plan.prolong_into(j, &w, &mut fine);
        w = fine;
        boundary_and_clamp(problem, j, &mut w, &data.lower[j], &data.upper[j]);
        if j < top {
            for _ in 0..cfg.rampv {
                let rep = vcycle(
                    problem,
                    j,
                    &data.ell[j],
                    &data.lower[j],
                    &data.upper[j],
                    &mut w,
                    cfg,
                    &mut ws,
                )?;
                stats.ramp_cycles += 1;
                stats.peak_storage = stats.peak_storage.max(rep.storage_slots);
                accumulate(&mut stats.smoother, &rep.smoother);
            }
        }
    }

    stats.ramp_residual =
        norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
    let r0 = stats.initial_residual;
    for k in 1..=cfg.max_cycles {
        let prev = w.clone();
        let rep = vcycle(
            problem,
            top,
            problem.source(),
            problem.lower(),
            problem.upper(),
            &mut w,
            cfg,
            &mut ws,
        )?;
        stats.peak_storage = stats.peak_storage.max(rep.storage_slots);
        accumulate(&mut stats.smoother, &rep.smoother);
        let rk = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
        let step = relative_step(problem, &prev, &w);
        stats.cycles = k;
        stats.residual_history.push(rk);
        stats.step_history.push(step);
        if let Some(s) = converged(r0, rk, Some(step), k, cfg) {
            stats.stop = Some(s);
            return Ok(Solution {
                w: NodalFunction::from_values(top, w),
                stats,
            });
        }
    }
    Err(Error::NotConverged {
        cycles: cfg.max_cycles,
        residual: stats.final_residual(),
    })
}

/// Single-level RS Newton on the finest level; each Newton step counts as
/// a cycle.
pub fn rs_only(problem: &VIProblem, cfg: &CycleConfig) -> Result<Solution> {
    cfg.validate(1)?;
    let top = problem.finest();
    let mut w = problem.initial_iterate().values().to_vec();
    let mut stats = SolveStats::default();
    let r0 = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
    stats.initial_residual = r0;
    if let Some(s) = converged(r0, r0, None, 0, cfg) {
        stats.stop = Some(s);
        return Ok(Solution {
            w: NodalFunction::from_values(top, w),
            stats,
        });
    }
    let newton = SmootherConfig {
        newton_iters: 1,
        ..cfg.rs_only
    };
    for k in 1..=cfg.max_cycles {
        let prev = w.clone();
        let wext = ExtendedNodalFunction::from_values(top, w.clone());
        let lo = ext_sub_fn(problem.lower(), &wext)?;
        let hi = ext_sub_fn(problem.upper(), &wext)?;
        let mut z = vec![0.0; w.len()];
        let d = rs_newton_smooth(problem, top, problem.source(), &lo, &hi, &w, &mut z, &newton)?;
        accumulate(&mut stats.smoother, &d);
        let mask = problem.dirichlet_mask(top);
        let g = problem.dirichlet_values(top);
        for p in 0..w.len() {
            w[p] = if mask[p] { g[p] } else { w[p] + z[p] };
        }
        clamp_in_place(&mut w, problem.lower(), problem.upper());
        let rk = norm2(&semi_smooth_residual(problem, &NodalFunction::from_values(top, w.clone()))?);
        let step = relative_step(problem, &prev, &w);
        stats.cycles = k;
        stats.residual_history.push(rk);
        stats.step_history.push(step);
        if let Some(s) = converged(r0, rk, Some(step), k, cfg) {
            stats.stop = Some(s);
            return Ok(Solution {
                w: NodalFunction::from_values(top, w),
                stats,
            });
        }
    }
    Err(Error::NotConverged {
        cycles: cfg.max_cycles,
        residual: stats.final_residual(),
    })
}

/// Runs the requested solver.
pub fn solve(problem: &VIProblem, mode: SolveMode, cfg: &CycleConfig) -> Result<Solution> {
    match mode {
        SolveMode::VCycle => solve_vcycles(problem, problem.initial_iterate(), cfg),
        SolveMode::Fmg => fmg(problem, cfg),
        SolveMode::RsOnly => rs_only(problem, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopping_clauses() {
        let cfg = CycleConfig::default();
        assert_eq!(converged(0.0, 0.0, None, 0, &cfg), Some(StopReason::Atol));
        assert_eq!(converged(1.0, 1.0, None, 0, &cfg), None);
        assert_eq!(converged(1.0, 1e-9, Some(1.0), 5, &cfg), Some(StopReason::Rtol));
        assert_eq!(converged(1.0, 0.5, Some(0.0), 5, &cfg), Some(StopReason::Stol));
        assert_eq!(converged(1.0, 0.5, Some(1e-3), 5, &cfg), None);
    }

    #[test]
    fn rate_formula() {
        let s = SolveStats {
            cycles: 2,
            initial_residual: 1.0,
            residual_history: vec![0.1, 0.01],
            ..Default::default()
        };
        assert!((s.rate() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut c = CycleConfig::default();
        c.down = 0;
        c.up = 0;
        assert!(c.validate(3).is_err());
        assert!(c.validate(1).is_ok());
        c.up = 1;
        c.rampv = 0;
        assert!(c.validate(3).is_err());
    }

    #[test]
    fn plap1d_small_fmg_and_vcycle() {
        let p = ProblemKind::Plap1d.build(4, None).unwrap();
        let cfg = CycleConfig {
            debug_checks: true,
            ..CycleConfig::preset(ProblemKind::Plap1d)
        };
        let s = fmg(&p, &cfg).unwrap();
        assert!(s.stats.cycles >= 1);
        let v = solve_vcycles(&p, p.initial_iterate(), &cfg).unwrap();
        assert!(v.stats.cycles <= 8, "{:?}", v.stats);
        let err = v
            .w
            .iter()
            .zip(s.w.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn single_level_is_one_cycle() {
        let p = ProblemKind::AdvDiff2d.build(1, None).unwrap();
        let s = fmg(&p, &CycleConfig::preset(ProblemKind::AdvDiff2d)).unwrap();
        assert_eq!(s.stats.cycles, 1);
        assert!(s.stats.final_residual() < 1e-9);
    }
}
