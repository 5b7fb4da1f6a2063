use super::plap1d::PLaplaceForm;
use super::{interpolate, obstacle_start, ProblemData, ProblemKind, VIProblem};
use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::{ElementKind, MeshHierarchy};

const SKIRT_RADIUS: f64 = 0.9;

/// Hemispherical obstacle `sqrt(1 - r^2)`, continued linearly beyond
/// `r = 0.9` with matching slope.
pub fn ball_obstacle(x: [f64; 2]) -> f64 {
    let r = x[0].hypot(x[1]);
    if r <= SKIRT_RADIUS {
        (1.0 - r * r).sqrt()
    } else {
        let psi0 = (1.0 - SKIRT_RADIUS * SKIRT_RADIUS).sqrt();
        let dpsi0 = -SKIRT_RADIUS / psi0;
        psi0 + dpsi0 * (r - SKIRT_RADIUS)
    }
}

/// Radius `a` of the contact disk, the root of
/// `a^2 (log 2 - log a) = 1 - a^2` in `(0, 1)`, found by bisection.
pub fn ball_free_boundary_radius() -> f64 {
    let g = |a: f64| a * a * (2f64.ln() - a.ln()) - 1.0 + a * a;
    let (mut lo, mut hi) = (0.1, 0.99);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Radial exact solution on `(-2, 2)^2`: the obstacle inside `r = a`,
/// `-A log r + B` outside, vanishing at `r = 2`.
pub fn ball_exact(x: [f64; 2]) -> f64 {
    let a = ball_free_boundary_radius();
    let r = x[0].hypot(x[1]);
    if r <= a {
        (1.0 - r * r).sqrt()
    } else {
        let big_a = a * a / (1.0 - a * a).sqrt();
        let big_b = big_a * 2f64.ln();
        -big_a * r.ln() + big_b
    }
}

pub fn ball_problem(hierarchy: MeshHierarchy) -> Result<VIProblem> {
    if hierarchy.dim() != 2 || hierarchy.element() != ElementKind::P1 {
        return Err(Error::InvalidProblem("ball needs a 2D P1 hierarchy".into()));
    }
    let top = hierarchy.finest();
    let level = hierarchy.level(top);
    let m = level.num_vertices();
    let lower = interpolate(level, ball_obstacle);
    let boundary = interpolate(level, ball_exact);
    let initial = obstacle_start(level, &lower, 0.0, &boundary);
    VIProblem::new(
        hierarchy,
        ProblemData {
            kind: ProblemKind::Ball,
            form: Box::new(PLaplaceForm { p: 2.0 }),
            lower: ExtendedNodalFunction::from_values(top, lower),
            upper: ExtendedNodalFunction::infinity(top, m),
            boundary_values: boundary,
            source: DualVector::zeros(top, m),
            initial: NodalFunction::from_values(top, initial),
            aux: None,
            admissibility_required: false,
        },
    )
}
