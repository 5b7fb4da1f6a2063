//! Inter-level transfers: canonical prolongation `P`, dual restriction `R`,
//! nodal injection, and the monotone (max/min over star) injections.
//!
//! Weights are obtained by evaluating each coarse cell's nodal basis at the
//! fine vertices it contains, so the same code covers intervals, split
//! triangles and bilinear quads.

use crate::error::{Error, Result};
use crate::function::{DualVector, ExtendedNodalFunction, NodalFunction};
use crate::mesh::{ElementKind, MeshHierarchy, MeshLevel};

/// Sparse weights between one pair of adjacent levels.
#[derive(Debug, Clone)]
struct LevelPair {
    /// For each fine vertex q, coarse vertices p with `psi_p(x_q) > 0`.
    fine_ptr: Vec<usize>,
    fine_idx: Vec<usize>,
    fine_w: Vec<f64>,
    /// Transpose: for each coarse vertex p, its star `{q : psi_p(x_q) > 0}`.
    star_ptr: Vec<usize>,
    star_idx: Vec<usize>,
    star_w: Vec<f64>,
    coarse_to_fine: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TransferPlan {
    pairs: Vec<LevelPair>,
    dofs: Vec<usize>,
}

/// Coarse basis values at a fine vertex, as `(coarse id, weight)` pairs with
/// positive weights.
fn basis_at_fine_vertex(coarse: &MeshLevel, fine: &MeshLevel, q: usize) -> Vec<(usize, f64)> {
    let (fi, fk) = fine.grid_index(q);
    let [ncx, ncy] = coarse.cells_per_axis();
    let ci = (fi / 2).min(ncx - 1);
    let xi = (fi - 2 * ci) as f64 * 0.5;
    let mut out = Vec::with_capacity(4);
    if coarse.dim() == 1 {
        out.push((ci, 1.0 - xi));
        out.push((ci + 1, xi));
    } else {
        let ck = (fk / 2).min(ncy - 1);
        let eta = (fk - 2 * ck) as f64 * 0.5;
        let v00 = coarse.vertex_id(ci, ck);
        let v10 = coarse.vertex_id(ci + 1, ck);
        let v11 = coarse.vertex_id(ci + 1, ck + 1);
        let v01 = coarse.vertex_id(ci, ck + 1);
        match coarse.element() {
            ElementKind::Q1 => {
                out.push((v00, (1.0 - xi) * (1.0 - eta)));
                out.push((v10, xi * (1.0 - eta)));
                out.push((v11, xi * eta));
                out.push((v01, (1.0 - xi) * eta));
            }
            ElementKind::P1 => {
                if xi >= eta {
                    out.push((v00, 1.0 - xi));
                    out.push((v10, xi - eta));
                    out.push((v11, eta));
                } else {
                    out.push((v00, 1.0 - eta));
                    out.push((v11, xi));
                    out.push((v01, eta - xi));
                }
            }
        }
    }
    out.retain(|&(_, w)| w > 0.0);
    out
}

impl LevelPair {
    fn new(coarse: &MeshLevel, fine: &MeshLevel) -> Self {
        let nf = fine.num_vertices();
        let nc = coarse.num_vertices();
        let mut fine_ptr = Vec::with_capacity(nf + 1);
        let mut fine_idx = Vec::new();
        let mut fine_w = Vec::new();
        fine_ptr.push(0);
        let mut counts = vec![0usize; nc];
        for q in 0..nf {
            for (p, w) in basis_at_fine_vertex(coarse, fine, q) {
                fine_idx.push(p);
                fine_w.push(w);
                counts[p] += 1;
            }
            fine_ptr.push(fine_idx.len());
        }
        let mut star_ptr = vec![0usize; nc + 1];
        for p in 0..nc {
            star_ptr[p + 1] = star_ptr[p] + counts[p];
        }
        let mut fill = star_ptr.clone();
        let mut star_idx = vec![0usize; fine_idx.len()];
        let mut star_w = vec![0.0; fine_idx.len()];
        for q in 0..nf {
            for e in fine_ptr[q]..fine_ptr[q + 1] {
                let p = fine_idx[e];
                star_idx[fill[p]] = q;
                star_w[fill[p]] = fine_w[e];
                fill[p] += 1;
            }
        }
        let coarse_to_fine = (0..nc)
            .map(|p| {
                let (i, k) = coarse.grid_index(p);
                fine.vertex_id(2 * i, 2 * k)
            })
            .collect();
        Self {
            fine_ptr,
            fine_idx,
            fine_w,
            star_ptr,
            star_idx,
            star_w,
            coarse_to_fine,
        }
    }
}

impl TransferPlan {
    pub fn new(hierarchy: &MeshHierarchy) -> Self {
        let pairs = (1..hierarchy.num_levels())
            .map(|j| LevelPair::new(hierarchy.level(j - 1), hierarchy.level(j)))
            .collect();
        Self {
            pairs,
            dofs: hierarchy.dofs(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.dofs.len()
    }

    fn pair(&self, fine_level: usize) -> Result<&LevelPair> {
        if fine_level == 0 || fine_level >= self.dofs.len() {
            return Err(Error::LevelOutOfRange {
                level: fine_level,
                levels: self.dofs.len(),
            });
        }
        Ok(&self.pairs[fine_level - 1])
    }

    fn check(&self, level: usize, len: usize) -> Result<()> {
        match self.dofs.get(level) {
            Some(&m) if m == len => Ok(()),
            Some(&m) => Err(Error::LengthMismatch {
                expected: m,
                found: len,
            }),
            None => Err(Error::LevelOutOfRange {
                level,
                levels: self.dofs.len(),
            }),
        }
    }

    /// Coarse vertices `p` and weights `psi_p(x_q)` for fine vertex `q`.
    pub fn weights(&self, fine_level: usize, q: usize) -> Result<Vec<(usize, f64)>> {
        let pair = self.pair(fine_level)?;
        let r = pair.fine_ptr[q]..pair.fine_ptr[q + 1];
        Ok(pair.fine_idx[r.clone()]
            .iter()
            .copied()
            .zip(pair.fine_w[r].iter().copied())
            .collect())
    }

    /// Fine vertices in the star of coarse vertex `p` (on level `fine_level - 1`).
    pub fn star(&self, fine_level: usize, p: usize) -> Result<&[usize]> {
        let pair = self.pair(fine_level)?;
        Ok(&pair.star_idx[pair.star_ptr[p]..pair.star_ptr[p + 1]])
    }

    /// Fine image of every coarse vertex.
    pub fn coarse_to_fine(&self, fine_level: usize) -> Result<&[usize]> {
        Ok(&self.pair(fine_level)?.coarse_to_fine)
    }

    pub(crate) fn prolong_into(&self, fine_level: usize, coarse: &[f64], fine: &mut [f64]) {
        let pair = &self.pairs[fine_level - 1];
        for (q, out) in fine.iter_mut().enumerate() {
            let mut s = 0.0;
            for e in pair.fine_ptr[q]..pair.fine_ptr[q + 1] {
                s += pair.fine_w[e] * coarse[pair.fine_idx[e]];
            }
            *out = s;
        }
    }

    pub(crate) fn restrict_into(&self, fine_level: usize, fine: &[f64], coarse: &mut [f64]) {
        let pair = &self.pairs[fine_level - 1];
        for (p, out) in coarse.iter_mut().enumerate() {
            let mut s = 0.0;
            for e in pair.star_ptr[p]..pair.star_ptr[p + 1] {
                s += pair.star_w[e] * fine[pair.star_idx[e]];
            }
            *out = s;
        }
    }

    pub(crate) fn inject_into(&self, fine_level: usize, fine: &[f64], coarse: &mut [f64]) {
        let pair = &self.pairs[fine_level - 1];
        for (out, &q) in coarse.iter_mut().zip(&pair.coarse_to_fine) {
            *out = fine[q];
        }
    }

    /// Canonical prolongation from level `coarse.level()` to the next finer level.
    pub fn prolong(&self, coarse: &NodalFunction) -> Result<NodalFunction> {
        let j = coarse.level() + 1;
        self.pair(j)?;
        self.check(coarse.level(), coarse.len())?;
        let mut out = NodalFunction::zeros(j, self.dofs[j]);
        self.prolong_into(j, coarse, &mut out);
        Ok(out)
    }

    /// Prolongation of an extended-real function.  Entries mixing `-inf`
    /// and `+inf` would be indeterminate and are rejected.
    pub fn prolong_ext(&self, coarse: &ExtendedNodalFunction) -> Result<ExtendedNodalFunction> {
        let j = coarse.level() + 1;
        self.pair(j)?;
        self.check(coarse.level(), coarse.len())?;
        if let Some(v) = coarse.uniform_value() {
            return Ok(ExtendedNodalFunction::uniform(j, self.dofs[j], v));
        }
        let src = coarse.to_vec();
        let mut out = vec![0.0; self.dofs[j]];
        self.prolong_into(j, &src, &mut out);
        if let Some(q) = out.iter().position(|x| x.is_nan()) {
            return Err(Error::InvalidProblem(format!(
                "prolongation mixes -inf and +inf at fine vertex {q}"
            )));
        }
        Ok(ExtendedNodalFunction::from_values(j, out))
    }

    /// Canonical (full-weighting) restriction of a dual vector.
    pub fn restrict_dual(&self, fine: &DualVector) -> Result<DualVector> {
        let j = fine.level();
        self.pair(j)?;
        self.check(j, fine.len())?;
        let mut out = DualVector::zeros(j - 1, self.dofs[j - 1]);
        self.restrict_into(j, fine, &mut out);
        Ok(out)
    }

    /// Nodal injection: keep the values at coarse vertices.
    pub fn inject(&self, fine: &NodalFunction) -> Result<NodalFunction> {
        let j = fine.level();
        self.pair(j)?;
        self.check(j, fine.len())?;
        let mut out = NodalFunction::zeros(j - 1, self.dofs[j - 1]);
        self.inject_into(j, fine, &mut out);
        Ok(out)
    }

    pub fn inject_ext(&self, fine: &ExtendedNodalFunction) -> Result<ExtendedNodalFunction> {
        let j = fine.level();
        let pair = self.pair(j)?;
        self.check(j, fine.len())?;
        if let Some(v) = fine.uniform_value() {
            return Ok(ExtendedNodalFunction::uniform(j - 1, self.dofs[j - 1], v));
        }
        let out = pair.coarse_to_fine.iter().map(|&q| fine.get(q)).collect();
        Ok(ExtendedNodalFunction::from_values(j - 1, out))
    }

    fn star_reduce(
        &self,
        fine: &ExtendedNodalFunction,
        init: f64,
        pick: impl Fn(f64, f64) -> f64,
    ) -> Result<ExtendedNodalFunction> {
        let j = fine.level();
        let pair = self.pair(j)?;
        self.check(j, fine.len())?;
        if let Some(v) = fine.uniform_value() {
            return Ok(ExtendedNodalFunction::uniform(j - 1, self.dofs[j - 1], v));
        }
        let out = (0..self.dofs[j - 1])
            .map(|p| {
                pair.star_idx[pair.star_ptr[p]..pair.star_ptr[p + 1]]
                    .iter()
                    .fold(init, |acc, &q| pick(acc, fine.get(q)))
            })
            .collect();
        Ok(ExtendedNodalFunction::from_values(j - 1, out))
    }

    /// Maximum over the star of each coarse vertex.
    pub fn inject_max(&self, fine: &ExtendedNodalFunction) -> Result<ExtendedNodalFunction> {
        self.star_reduce(fine, f64::NEG_INFINITY, f64::max)
    }

    /// Minimum over the star of each coarse vertex.
    pub fn inject_min(&self, fine: &ExtendedNodalFunction) -> Result<ExtendedNodalFunction> {
        self.star_reduce(fine, f64::INFINITY, f64::min)
    }
}
