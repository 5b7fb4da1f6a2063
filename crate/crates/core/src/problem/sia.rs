use super::assembly::{assemble_load, ElementTables, Linearization, PointwiseForm, QuadPoint};
use super::{ProblemData, ProblemKind, VIProblem};
use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::{MeshHierarchy, MeshLevel};
use std::f64::consts::PI;

/// Side length of the square ice-sheet domain, in meters.
pub(crate) const DOMAIN_LENGTH: f64 = 1.8e6;

/// Shallow-ice constants in meters and years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiaParams {
    /// Glen exponent `n`.
    pub n: f64,
    /// `2 A (rho g)^n / (n + 2)`.
    pub gamma: f64,
    /// Thickness added inside the Jacobian's diffusivity, in meters.
    pub jac_thickness_floor: f64,
    /// Surface slope added inside the Jacobian's diffusivity.
    pub jac_slope_floor: f64,
}

impl Default for SiaParams {
    fn default() -> Self {
        let n = 3.0;
        let a = 1e-16; // Pa^-3 a^-1
        let rho_g: f64 = 910.0 * 9.81;
        Self {
            n,
            gamma: 2.0 * a * rho_g.powf(n) / (n + 2.0),
            jac_thickness_floor: 100.0,
            jac_slope_floor: 1e-3,
        }
    }
}

/// `F = Gamma (s - b)^{n+2} |grad s|^{n-1} grad s` with the bed `b` as the
/// auxiliary field.
#[derive(Debug, Clone, Copy)]
pub struct SiaForm {
    pub params: SiaParams,
}

impl PointwiseForm for SiaForm {
    fn eval(&self, q: &QuadPoint) -> ([f64; 2], f64) {
        let n = self.params.n;
        let h = (q.u - q.aux).max(0.0);
        let g = q.grad;
        let s2 = g[0] * g[0] + g[1] * g[1];
        if h == 0.0 || s2 == 0.0 {
            return ([0.0; 2], 0.0);
        }
        let d = self.params.gamma * h.powf(n + 2.0) * s2.powf(0.5 * (n - 1.0));
        ([d * g[0], d * g[1]], 0.0)
    }

    fn linearize(&self, q: &QuadPoint) -> Linearization {
        let SiaParams {
            n,
            gamma,
            jac_thickness_floor: h0,
            jac_slope_floor: g0,
        } = self.params;
        let h = (q.u - q.aux).max(0.0);
        let g = q.grad;
        let s2 = g[0] * g[0] + g[1] * g[1];
        let hp = h.powf(n + 2.0);
        let sp = s2.powf(0.5 * (n - 1.0));
        let mut lin = Linearization::default();
        let du = gamma * (n + 2.0) * h.powf(n + 1.0) * sp;
        lin.flux_u = [du * g[0], du * g[1]];
        let dreg = gamma * (hp + h0.powf(n + 2.0)) * (s2 + g0 * g0).powf(0.5 * (n - 1.0));
        let c = if s2 > 0.0 {
            gamma * hp * (n - 1.0) * s2.powf(0.5 * (n - 3.0))
        } else {
            0.0
        };
        for a in 0..2 {
            for b in 0..2 {
                lin.flux_grad[a][b] = c * g[a] * g[b] + if a == b { dreg } else { 0.0 };
            }
        }
        lin
    }
}

/// Synthetic bed with an 1800 m elevation range, zero on the boundary.
pub fn sia_bumpy_bed(x: [f64; 2]) -> f64 {
    let (s, t) = (x[0] / DOMAIN_LENGTH, x[1] / DOMAIN_LENGTH);
    900.0 * (3.0 * PI * s).sin() * (2.0 * PI * t).sin()
}

const SMB_MAX: f64 = 0.5;
const SMB_GRADIENT: f64 = 1e-5;
const SMB_ELA_RADIUS: f64 = 450e3;

/// Radial mass balance `min(0.5, 1e-5 (R_el - r))` in m/a, `r` measured from
/// the domain center.
pub fn sia_smb(x: [f64; 2]) -> f64 {
    let c = 0.5 * DOMAIN_LENGTH;
    let r = (x[0] - c).hypot(x[1] - c);
    SMB_MAX.min(SMB_GRADIENT * (SMB_ELA_RADIUS - r))
}

/// Flat-bed dome margin radius and mass-balance scale.
pub(crate) const DOME_RADIUS: f64 = 750e3;
pub(crate) const DOME_SMB_SCALE: f64 = 0.1;

/// Mass balance `c (2 - 3 r / L)`, for which the steady flux is
/// `c r (1 - r / L)` and the ice margin sits at `r = L`.
pub fn sia_dome_smb(x: [f64; 2]) -> f64 {
    let c = 0.5 * DOMAIN_LENGTH;
    let r = (x[0] - c).hypot(x[1] - c);
    DOME_SMB_SCALE * (2.0 - 3.0 * r / DOME_RADIUS)
}

pub(crate) fn nodal_load(level: &MeshLevel, f: &dyn Fn([f64; 2]) -> f64) -> DualVector {
    let mut out = DualVector::zeros(level.index(), level.num_vertices());
    assemble_load(level, &ElementTables::new(level), f, &mut out);
    out
}

/// Ice surface elevation VI `s >= b` with source `<a, v>`.
pub fn sia_problem(
    hierarchy: MeshHierarchy,
    params: SiaParams,
    bed: NodalFunction,
    smb: DualVector,
) -> Result<VIProblem> {
    if hierarchy.dim() != 2 {
        return Err(Error::InvalidProblem("sia needs a 2D hierarchy".into()));
    }
    if !(params.n > 1.0) || !(params.gamma > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "need n > 1 and gamma > 0, got n = {}, gamma = {}",
            params.n, params.gamma
        )));
    }
    let top = hierarchy.finest();
    if bed.level() != top || smb.level() != top {
        return Err(Error::LevelMismatch {
            expected: top,
            found: if bed.level() != top { bed.level() } else { smb.level() },
        });
    }
    let b = bed.into_values();
    VIProblem::new(
        hierarchy,
        ProblemData {
            kind: ProblemKind::Sia2d,
            form: Box::new(SiaForm { params }),
            lower: ExtendedNodalFunction::from_values(top, b.clone()),
            upper: ExtendedNodalFunction::infinity(top, b.len()),
            boundary_values: b.clone(),
            source: smb,
            initial: NodalFunction::from_values(top, b.clone()),
            aux: Some(b),
            admissibility_required: true,
        },
    )
}

/// Flat bed with the dome mass balance.
pub fn sia_dome_problem(hierarchy: MeshHierarchy, params: SiaParams) -> Result<VIProblem> {
    let top = hierarchy.finest();
    let level = hierarchy.level(top);
    let bed = NodalFunction::zeros(top, level.num_vertices());
    let smb = nodal_load(level, &sia_dome_smb);
    let mut p = sia_problem(hierarchy, params, bed, smb)?;
    p.kind = ProblemKind::SiaDome;
    Ok(p)
}
