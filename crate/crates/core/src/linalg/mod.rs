//! Sparse linear algebra for the Newton steps: CSR storage, incomplete
//! factorizations, fixed-iteration Krylov methods and a banded direct solver.

mod banded;
mod csr;
mod krylov;
mod precond;

pub use banded::BandedLu;
pub use csr::CsrMatrix;
pub use krylov::{cg, gmres};
pub use precond::{Ic0, Ilu0, Preconditioner};
