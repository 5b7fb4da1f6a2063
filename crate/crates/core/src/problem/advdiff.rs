use super::assembly::{Linearization, PointwiseForm, QuadPoint};
use super::{ProblemData, ProblemKind, VIProblem};
use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::MeshHierarchy;

const DISKS: [[f64; 2]; 3] = [[-0.6, 0.55], [-0.55, -0.5], [-0.35, 0.0]];
const DISK_RADIUS: f64 = 0.2;

/// Source: `+2` on three disks of radius 0.2 in the left half, `-1` on the
/// right half, zero elsewhere.
pub fn advdiff_source(x: [f64; 2]) -> f64 {
    if x[0] > 0.0 {
        return -1.0;
    }
    if DISKS
        .iter()
        .any(|c| (x[0] - c[0]).hypot(x[1] - c[1]) < DISK_RADIUS)
    {
        2.0
    } else {
        0.0
    }
}

/// `<f(u), v> = eps (grad u, grad v) + int (X . grad u) v - int phi v` with
/// wind `X = (7 + 5y, -5x)`.
#[derive(Debug, Clone, Copy)]
pub struct AdvDiffForm {
    pub eps: f64,
    /// Scales the source term; zero leaves the bilinear part only.
    pub source_scale: f64,
}

fn wind(x: [f64; 2]) -> [f64; 2] {
    [7.0 + 5.0 * x[1], -5.0 * x[0]]
}

impl PointwiseForm for AdvDiffForm {
    fn eval(&self, q: &QuadPoint) -> ([f64; 2], f64) {
        let w = wind(q.x);
        let adv = w[0] * q.grad[0] + w[1] * q.grad[1];
        (
            [self.eps * q.grad[0], self.eps * q.grad[1]],
            adv - self.source_scale * advdiff_source(q.x),
        )
    }

    fn linearize(&self, q: &QuadPoint) -> Linearization {
        Linearization {
            flux_grad: [[self.eps, 0.0], [0.0, self.eps]],
            scalar_grad: wind(q.x),
            ..Default::default()
        }
    }
}

/// Advection-diffusion on `(-1, 1)^2` with box constraints `0 <= u <= 1`
/// and zero boundary values.
pub fn advdiff2d_problem(hierarchy: MeshHierarchy, eps: f64) -> Result<VIProblem> {
    if hierarchy.dim() != 2 {
        return Err(Error::InvalidProblem("advdiff2d needs a 2D hierarchy".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidProblem(format!("diffusivity must be positive, got {eps}")));
    }
    let top = hierarchy.finest();
    let m = hierarchy.level(top).num_vertices();
    VIProblem::new(
        hierarchy,
        ProblemData {
            kind: ProblemKind::AdvDiff2d,
            form: Box::new(AdvDiffForm { eps, source_scale: 1.0 }),
            lower: ExtendedNodalFunction::uniform(top, m, 0.0),
            upper: ExtendedNodalFunction::uniform(top, m, 1.0),
            boundary_values: vec![0.0; m],
            source: DualVector::zeros(top, m),
            initial: NodalFunction::zeros(top, m),
            aux: None,
            admissibility_required: false,
        },
    )
}
