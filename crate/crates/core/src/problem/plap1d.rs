use super::assembly::{Linearization, PointwiseForm, QuadPoint};
use super::{interpolate, obstacle_start, ProblemData, ProblemKind, VIProblem};
use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::MeshHierarchy;

/// Gradient regularization used in the Jacobian when `p < 2`.
pub const PLAP_DELTA: f64 = 1e-10;

/// `F = |grad u|^{p-2} grad u`.  For `p = 2` this is the Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct PLaplaceForm {
    pub p: f64,
}

impl PointwiseForm for PLaplaceForm {
    fn eval(&self, q: &QuadPoint) -> ([f64; 2], f64) {
        let g = q.grad;
        let n2 = g[0] * g[0] + g[1] * g[1];
        if self.p == 2.0 {
            return (g, 0.0);
        }
        if n2 == 0.0 {
            return ([0.0; 2], 0.0);
        }
        let c = n2.powf(0.5 * (self.p - 2.0));
        ([c * g[0], c * g[1]], 0.0)
    }

    fn linearize(&self, q: &QuadPoint) -> Linearization {
        let g = q.grad;
        let mut lin = Linearization::default();
        if self.p == 2.0 {
            lin.flux_grad = [[1.0, 0.0], [0.0, 1.0]];
            return lin;
        }
        let s = g[0] * g[0] + g[1] * g[1] + PLAP_DELTA * PLAP_DELTA;
        let c = s.powf(0.5 * (self.p - 2.0));
        let d = (self.p - 2.0) * s.powf(0.5 * (self.p - 4.0));
        for a in 0..2 {
            for b in 0..2 {
                lin.flux_grad[a][b] = d * g[a] * g[b] + if a == b { c } else { 0.0 };
            }
        }
        lin
    }
}

fn plap_obstacle(x: f64) -> f64 {
    -0.2 * x.abs()
}

fn plap_load(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0
    } else {
        -1.0
    }
}

/// One-dimensional `p`-Laplacian obstacle problem on `(-3, 3)` with
/// obstacle `-0.2|x|`, load `+1` on `|x| < 1` and `-1` elsewhere, and
/// boundary values `u(+-3) = -0.6`.
pub fn plap1d_problem(hierarchy: MeshHierarchy, p: f64) -> Result<VIProblem> {
    if !(p > 1.0) {
        return Err(Error::InvalidProblem(format!("p-Laplacian needs p > 1, got {p}")));
    }
    if hierarchy.dim() != 1 {
        return Err(Error::InvalidProblem("plap1d needs a 1D hierarchy".into()));
    }
    let top = hierarchy.finest();
    let level = hierarchy.level(top);
    let lower = interpolate(level, |x| plap_obstacle(x[0]));
    let boundary = interpolate(level, |x| plap_obstacle(x[0]));
    let tables = super::assembly::ElementTables::new(level);
    let mut source = DualVector::zeros(top, level.num_vertices());
    super::assembly::assemble_load(level, &tables, &|x| plap_load(x[0]), &mut source);
    let initial = obstacle_start(level, &lower, 0.0, &boundary);
    let m = level.num_vertices();
    VIProblem::new(
        hierarchy,
        ProblemData {
            kind: ProblemKind::Plap1d,
            form: Box::new(PLaplaceForm { p }),
            lower: ExtendedNodalFunction::from_values(top, lower),
            upper: ExtendedNodalFunction::infinity(top, m),
            boundary_values: boundary,
            source,
            initial: NodalFunction::from_values(top, initial),
            aux: None,
            admissibility_required: false,
        },
    )
}

/// Continuum solution of the 1D problem for exponent `p`.
///
/// The flux `q = |u'|^{p-2} u'` is `-x` on `|x| < 1` and `|x| - 2` (with the
/// sign of `x`) out to the free boundary `a = 2 - 0.2^{p-1}`; beyond it the
/// solution is the obstacle.
pub fn plap1d_exact(x: f64, p: f64) -> f64 {
    let a = 2.0 - 0.2f64.powf(p - 1.0);
    let t = x.abs();
    if t >= a {
        return plap_obstacle(t);
    }
    let e = 1.0 / (p - 1.0);
    // u'(s) = -|q|^e with q = s on (0,1), 2 - s on (1,a), for s > 0
    let prim1 = |s: f64| -s.powf(e + 1.0) / (e + 1.0);
    let prim2 = |s: f64| (2.0 - s).powf(e + 1.0) / (e + 1.0);
    let ua = plap_obstacle(a);
    if t >= 1.0 {
        ua - (prim2(a) - prim2(t))
    } else {
        let u1 = ua - (prim2(a) - prim2(1.0));
        u1 - (prim1(1.0) - prim1(t))
    }
}
