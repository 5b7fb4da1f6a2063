use super::csr::CsrMatrix;
use crate::error::{Error, Result};

pub trait Preconditioner {
    /// `z = M^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Zero-fill incomplete LU factors stored in the pattern of the matrix:
/// unit lower triangle below the diagonal, upper triangle on and above it.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

fn factor(a: &CsrMatrix, shift: f64, require_positive: bool) -> Result<Ilu0> {
    let mut lu = a.clone();
    let n = lu.n();
    let ptr = lu.ptr().to_vec();
    let idx = lu.idx().to_vec();
    let mut diag_pos = vec![0; n];
    for i in 0..n {
        diag_pos[i] = ptr[i] + idx[ptr[i]..ptr[i + 1]].binary_search(&i).expect("diagonal present");
    }
    let val = lu.val_mut();
    for &d in &diag_pos {
        val[d] += shift;
    }
    // column position scratch for row i
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        for k in ptr[i]..ptr[i + 1] {
            pos[idx[k]] = k;
        }
        for kk in ptr[i]..diag_pos[i] {
            let k = idx[kk];
            let piv = val[diag_pos[k]];
            val[kk] /= piv;
            let lik = val[kk];
            for jj in diag_pos[k] + 1..ptr[k + 1] {
                let p = pos[idx[jj]];
                if p != usize::MAX {
                    val[p] -= lik * val[jj];
                }
            }
        }
        for k in ptr[i]..ptr[i + 1] {
            pos[idx[k]] = usize::MAX;
        }
        let d = val[diag_pos[i]];
        let bad = if require_positive { !(d > 0.0) } else { d == 0.0 || !d.is_finite() };
        if bad {
            return Err(Error::LinearSolver(format!("pivot {d:e} at row {i}")));
        }
    }
    Ok(Ilu0 { lu, diag_pos })
}

fn factor_with_retry(a: &CsrMatrix, require_positive: bool) -> Result<Ilu0> {
    match factor(a, 0.0, require_positive) {
        Ok(f) => Ok(f),
        Err(_) => {
            let scale = a.diag().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
            factor(a, 1e-8 * scale.max(f64::MIN_POSITIVE), require_positive)
        }
    }
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        factor_with_retry(a, false)
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n();
        let (ptr, idx, val) = (self.lu.ptr(), self.lu.idx(), self.lu.val());
        for i in 0..n {
            let mut s = r[i];
            for k in ptr[i]..self.diag_pos[i] {
                s -= val[k] * z[idx[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..ptr[i + 1] {
                s -= val[k] * z[idx[k]];
            }
            z[i] = s / val[self.diag_pos[i]];
        }
    }
}

/// Zero-fill incomplete Cholesky in `L D L^T` form.  For a symmetric matrix
/// the zero-fill LU factors are exactly `L` and `D L^T`, so the factor is
/// shared with [`Ilu0`]; positivity of the pivots is enforced.
#[derive(Debug, Clone)]
pub struct Ic0(Ilu0);

impl Ic0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        factor_with_retry(a, true).map(Ic0)
    }
}

impl Preconditioner for Ic0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.0.apply(r, z)
    }
}
