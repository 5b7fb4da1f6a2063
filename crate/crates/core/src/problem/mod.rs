//! Discrete VI problems: per-level re-discretized residuals and Jacobians,
//! finest-level obstacles, Dirichlet data and source functionals.

mod advdiff;
pub mod assembly;
mod ball;
mod plap1d;
pub mod quadrature;
mod sia;
mod spiral;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::linalg::CsrMatrix;
use crate::mesh::{ElementKind, MeshHierarchy, MeshLevel};
use crate::transfer::TransferPlan;
use assembly::{ElementTables, PointwiseForm};

pub use advdiff::{advdiff2d_problem, advdiff_source, AdvDiffForm};
pub use ball::{ball_free_boundary_radius, ball_exact, ball_obstacle, ball_problem};
pub use plap1d::{plap1d_exact, plap1d_problem, PLaplaceForm};
pub use sia::{
    sia_bumpy_bed, sia_dome_problem, sia_dome_smb, sia_problem, sia_smb, SiaForm, SiaParams,
};
pub use spiral::{spiral_obstacle, spiral_problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Ball,
    Spiral,
    Plap1d,
    AdvDiff2d,
    Sia2d,
    SiaDome,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 6] = [
        ProblemKind::Ball,
        ProblemKind::Spiral,
        ProblemKind::Plap1d,
        ProblemKind::AdvDiff2d,
        ProblemKind::Sia2d,
        ProblemKind::SiaDome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Ball => "ball",
            ProblemKind::Spiral => "spiral",
            ProblemKind::Plap1d => "plap1d",
            ProblemKind::AdvDiff2d => "advdiff2d",
            ProblemKind::Sia2d => "sia2d",
            ProblemKind::SiaDome => "sia-dome",
        }
    }

    pub fn dim(self) -> usize {
        if self == ProblemKind::Plap1d {
            1
        } else {
            2
        }
    }

    /// Default coarsest-level cells per axis.
    pub fn default_coarse(self) -> [usize; 2] {
        match self {
            ProblemKind::Ball | ProblemKind::Spiral => [5, 5],
            ProblemKind::Plap1d => [6, 0],
            ProblemKind::AdvDiff2d => [15, 15],
            ProblemKind::Sia2d | ProblemKind::SiaDome => [20, 20],
        }
    }

    /// Hierarchy with `levels` levels (at least one).
    pub fn hierarchy(self, levels: usize, coarse: Option<[usize; 2]>) -> Result<MeshHierarchy> {
        use crate::mesh::{DirichletSides, Domain};
        let finest = levels.max(1) - 1;
        let coarse = coarse.unwrap_or_else(|| self.default_coarse());
        let (domain, element) = match self {
            ProblemKind::Ball => (Domain::square(-2.0, 2.0)?, ElementKind::P1),
            ProblemKind::Spiral => (Domain::square(-1.0, 1.0)?, ElementKind::P1),
            ProblemKind::Plap1d => (Domain::interval(-3.0, 3.0)?, ElementKind::P1),
            ProblemKind::AdvDiff2d => (Domain::square(-1.0, 1.0)?, ElementKind::P1),
            ProblemKind::Sia2d | ProblemKind::SiaDome => {
                (Domain::square(0.0, sia::DOMAIN_LENGTH)?, ElementKind::Q1)
            }
        };
        MeshHierarchy::build(domain, coarse, finest, element, DirichletSides::ALL)
    }

    /// The problem with its default data on a `levels`-level hierarchy.
    pub fn build(self, levels: usize, coarse: Option<[usize; 2]>) -> Result<VIProblem> {
        let h = self.hierarchy(levels, coarse)?;
        match self {
            ProblemKind::Ball => ball_problem(h),
            ProblemKind::Spiral => spiral_problem(h),
            ProblemKind::Plap1d => plap1d_problem(h, 1.5),
            ProblemKind::AdvDiff2d => advdiff2d_problem(h, 0.1),
            ProblemKind::Sia2d => {
                let params = SiaParams::default();
                let finest = h.level(h.finest());
                let bed = NodalFunction::from_values(
                    h.finest(),
                    (0..finest.num_vertices()).map(|p| sia_bumpy_bed(finest.coords(p))).collect(),
                );
                let smb = sia::nodal_load(finest, &|x| sia_smb(x));
                sia_problem(h, params, bed, smb)
            }
            ProblemKind::SiaDome => sia_dome_problem(h, SiaParams::default()),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidProblem(format!("unknown problem '{s}'")))
    }
}

#[derive(Debug, Clone)]
struct LevelData {
    tables: ElementTables,
    pattern: CsrMatrix,
    dirichlet: Vec<bool>,
    boundary_values: Vec<f64>,
    aux: Option<Vec<f64>>,
}

/// Raw data for [`VIProblem::new`].
#[derive(Debug)]
pub struct ProblemData {
    pub kind: ProblemKind,
    pub form: Box<dyn PointwiseForm>,
    pub lower: ExtendedNodalFunction,
    pub upper: ExtendedNodalFunction,
    /// Finest-level nodal values; only Dirichlet entries are used.
    pub boundary_values: Vec<f64>,
    pub source: DualVector,
    pub initial: NodalFunction,
    /// Finest-level auxiliary field interpolated into the form, injected to
    /// coarser levels.
    pub aux: Option<Vec<f64>>,
    /// The operator is only defined for `u >= aux`.
    pub admissibility_required: bool,
}

#[derive(Debug)]
pub struct VIProblem {
    kind: ProblemKind,
    hierarchy: MeshHierarchy,
    transfer: TransferPlan,
    form: Box<dyn PointwiseForm>,
    levels: Vec<LevelData>,
    lower: ExtendedNodalFunction,
    upper: ExtendedNodalFunction,
    source: DualVector,
    initial: NodalFunction,
    admissibility_required: bool,
    mass: CsrMatrix,
}

/// Relative slack allowed in the admissibility check, covering rounding in
/// sums of admissible corrections.
const ADMISSIBILITY_SLACK: f64 = 1e-12;

impl VIProblem {
    pub fn new(hierarchy: MeshHierarchy, data: ProblemData) -> Result<Self> {
        let top = hierarchy.finest();
        let m = hierarchy.level(top).num_vertices();
        for (name, len) in [
            ("lower obstacle", data.lower.len()),
            ("upper obstacle", data.upper.len()),
            ("boundary values", data.boundary_values.len()),
            ("source", data.source.len()),
            ("initial iterate", data.initial.len()),
        ] {
            if len != m {
                return Err(Error::InvalidProblem(format!(
                    "{name} has {len} entries, finest level has {m}"
                )));
            }
        }
        if let Some(a) = &data.aux {
            if a.len() != m {
                return Err(Error::LengthMismatch { expected: m, found: a.len() });
            }
        }
        let finest = hierarchy.level(top);
        for p in 0..m {
            let (lo, hi) = (data.lower.get(p), data.upper.get(p));
            if lo > hi {
                return Err(Error::InvalidProblem(format!(
                    "obstacles cross at vertex {p}: {lo} > {hi}"
                )));
            }
            if finest.is_dirichlet(p) {
                let g = data.boundary_values[p];
                if g < lo || g > hi {
                    return Err(Error::InvalidProblem(format!(
                        "boundary value {g} at vertex {p} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        let transfer = TransferPlan::new(&hierarchy);
        let mut levels: Vec<LevelData> = Vec::with_capacity(top + 1);
        let mut values = data.boundary_values;
        let mut aux = data.aux;
        for j in (0..=top).rev() {
            let level = hierarchy.level(j);
            if j < top {
                let mut coarse = vec![0.0; level.num_vertices()];
                transfer.inject_into(j + 1, &values, &mut coarse);
                values = coarse;
                if let Some(a) = &aux {
                    let mut coarse = vec![0.0; level.num_vertices()];
                    transfer.inject_into(j + 1, a, &mut coarse);
                    aux = Some(coarse);
                }
            }
            levels.push(LevelData {
                tables: ElementTables::new(level),
                pattern: assembly::pattern(level),
                dirichlet: level.dirichlet_mask(),
                boundary_values: values.clone(),
                aux: aux.clone(),
            });
        }
        levels.reverse();
        let mut source = data.source;
        for p in 0..m {
            if levels[top].dirichlet[p] {
                source[p] = 0.0;
            }
        }
        let mass = assembly::assemble_mass(finest, &levels[top].tables);
        Ok(Self {
            kind: data.kind,
            transfer,
            form: data.form,
            levels,
            lower: data.lower,
            upper: data.upper,
            source,
            initial: data.initial,
            admissibility_required: data.admissibility_required,
            mass,
            hierarchy,
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn transfer(&self) -> &TransferPlan {
        &self.transfer
    }

    /// Index `J` of the finest level.
    pub fn finest(&self) -> usize {
        self.hierarchy.finest()
    }

    pub fn level(&self, j: usize) -> &MeshLevel {
        self.hierarchy.level(j)
    }

    pub fn lower(&self) -> &ExtendedNodalFunction {
        &self.lower
    }

    pub fn upper(&self) -> &ExtendedNodalFunction {
        &self.upper
    }

    /// Finest-level source `l^J`, zero on Dirichlet rows.
    pub fn source(&self) -> &DualVector {
        &self.source
    }

    /// Natural initial iterate on the finest level.
    pub fn initial_iterate(&self) -> &NodalFunction {
        &self.initial
    }

    pub fn admissibility_required(&self) -> bool {
        self.admissibility_required
    }

    pub fn form(&self) -> &dyn PointwiseForm {
        self.form.as_ref()
    }

    pub fn dirichlet_mask(&self, j: usize) -> &[bool] {
        &self.levels[j].dirichlet
    }

    /// Boundary data injected to level `j` (meaningful on Dirichlet vertices).
    pub fn dirichlet_values(&self, j: usize) -> &[f64] {
        &self.levels[j].boundary_values
    }

    /// Auxiliary field on level `j` (the bed for ice problems).
    pub fn aux(&self, j: usize) -> Option<&[f64]> {
        self.levels[j].aux.as_deref()
    }

    fn check_input(&self, j: usize, u: &[f64]) -> Result<()> {
        let level = self.hierarchy.try_level(j)?;
        if u.len() != level.num_vertices() {
            return Err(Error::LengthMismatch {
                expected: level.num_vertices(),
                found: u.len(),
            });
        }
        if let Some(p) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::Inadmissible {
                level: j,
                vertex: p,
                detail: format!("non-finite value {}", u[p]),
            });
        }
        if self.admissibility_required {
            if let Some(b) = &self.levels[j].aux {
                for (p, (&x, &bp)) in u.iter().zip(b).enumerate() {
                    if x < bp - ADMISSIBILITY_SLACK * (1.0 + bp.abs()) {
                        return Err(Error::Inadmissible {
                            level: j,
                            vertex: p,
                            detail: format!("value {x} below obstacle {bp}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Residual `<f^j(u), psi_p>` with Dirichlet rows `u_p - g_p`.
    pub fn residual_into(&self, j: usize, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_input(j, u)?;
        let data = &self.levels[j];
        assembly::assemble_residual(
            self.hierarchy.level(j),
            &data.tables,
            self.form.as_ref(),
            u,
            data.aux.as_deref(),
            out,
        );
        for (p, r) in out.iter_mut().enumerate() {
            if data.dirichlet[p] {
                *r = u[p] - data.boundary_values[p];
            }
        }
        Ok(())
    }

    pub fn residual(&self, j: usize, u: &NodalFunction) -> Result<DualVector> {
        let mut out = DualVector::zeros(j, u.len());
        self.residual_into(j, u, &mut out)?;
        Ok(out)
    }

    /// Jacobian of [`Self::residual`] with identity Dirichlet rows.
    pub fn jacobian_slice(&self, j: usize, u: &[f64]) -> Result<CsrMatrix> {
        self.check_input(j, u)?;
        let data = &self.levels[j];
        let mut mat = data.pattern.clone();
        assembly::assemble_jacobian(
            self.hierarchy.level(j),
            &data.tables,
            self.form.as_ref(),
            u,
            data.aux.as_deref(),
            &mut mat,
        );
        let n = mat.n();
        let ptr = mat.ptr().to_vec();
        let idx = mat.idx().to_vec();
        let vals = mat.val_mut();
        for i in 0..n {
            if data.dirichlet[i] {
                for k in ptr[i]..ptr[i + 1] {
                    vals[k] = if idx[k] == i { 1.0 } else { 0.0 };
                }
            }
        }
        Ok(mat)
    }

    pub fn jacobian(&self, j: usize, u: &NodalFunction) -> Result<CsrMatrix> {
        self.jacobian_slice(j, u)
    }

    /// `sqrt(v^T M v)` with the finest-level mass matrix.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        let mv = self.mass.matvec(v);
        crate::function::dot(v, &mv).max(0.0).sqrt()
    }

    pub fn mass_matrix(&self) -> &CsrMatrix {
        &self.mass
    }
}

/// Nodal interpolant of `f` on a level.
pub fn interpolate(level: &MeshLevel, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    (0..level.num_vertices()).map(|p| f(level.coords(p))).collect()
}

/// Applies `max(u, lower)` in the interior and boundary data on Dirichlet
/// vertices.
fn obstacle_start(level: &MeshLevel, lower: &[f64], floor: f64, boundary: &[f64]) -> Vec<f64> {
    (0..level.num_vertices())
        .map(|p| {
            if level.is_dirichlet(p) {
                boundary[p]
            } else {
                lower[p].max(floor)
            }
        })
        .collect()
}
