use super::plap1d::PLaplaceForm;
use super::{interpolate, obstacle_start, ProblemData, ProblemKind, VIProblem};
use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::{ElementKind, MeshHierarchy};
use std::f64::consts::PI;

/// Spiral obstacle from Graeser and Kornhuber (2009), problem 7.1.1, in
/// polar coordinates:
/// `sin(2 pi / r + pi / 2 - theta) + r (r + 1) / (r - 2) - 3 r + 3.6`,
/// with value 3.6 at the origin.
pub fn spiral_obstacle(x: [f64; 2]) -> f64 {
    let r = x[0].hypot(x[1]);
    if r < 1e-12 {
        return 3.6;
    }
    let theta = x[1].atan2(x[0]);
    (2.0 * PI / r + PI / 2.0 - theta).sin() + r * (r + 1.0) / (r - 2.0) - 3.0 * r + 3.6
}

pub fn spiral_problem(hierarchy: MeshHierarchy) -> Result<VIProblem> {
    if hierarchy.dim() != 2 || hierarchy.element() != ElementKind::P1 {
        return Err(Error::InvalidProblem("spiral needs a 2D P1 hierarchy".into()));
    }
    let top = hierarchy.finest();
    let level = hierarchy.level(top);
    let m = level.num_vertices();
    let lower = interpolate(level, spiral_obstacle);
    let boundary = vec![0.0; m];
    let initial = obstacle_start(level, &lower, 0.0, &boundary);
    VIProblem::new(
        hierarchy,
        ProblemData {
            kind: ProblemKind::Spiral,
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstacle_finite_and_below_zero_on_boundary() {
        for i in 0..=100 {
            let t = -1.0 + 0.02 * i as f64;
            for x in [[t, -1.0], [t, 1.0], [-1.0, t], [1.0, t]] {
                let v = spiral_obstacle(x);
                assert!(v.is_finite() && v < 0.0, "{x:?} {v}");
            }
        }
        assert_eq!(spiral_obstacle([0.0, 0.0]), 3.6);
    }
}
