//! Full approximation scheme constraint decomposition (FAS-CD) multigrid for
//! nonlinear variational inequalities with bound constraints.

pub mod constraints;
pub mod cycle;
pub mod linalg;
pub mod problem;
pub mod smoother;
pub mod error;
pub mod function;
pub mod mesh;
pub mod transfer;

pub use constraints::{check_ordering, finest_defects, DefectLadder};
pub use error::{Error, Result};
pub use function::{
    admissible, clamp, DirichletData, DualVector, ExtendedNodalFunction, NodalFunction,
};
pub use mesh::{
    BoundaryKind, Cell, DirichletSides, Domain, ElementKind, MeshHierarchy, MeshLevel,
};
pub use transfer::TransferPlan;
pub use cycle::{
    converged, fmg, rs_only, semi_smooth_residual, solve, solve_vcycles, vcycle, CycleConfig,
    Solution, SolveMode, SolveStats, StopReason, Workspace,
};
pub use problem::{ProblemKind, VIProblem};
pub use smoother::{CoarseConfig, KrylovMethod, LineSearch, PreconditionerKind, SmootherConfig};
