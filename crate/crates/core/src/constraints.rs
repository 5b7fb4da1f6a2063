//! Defect constraints and the per-level ladder of level defect constraints
//! (LDCs) with their differences.
//!
//! For a correction `z` to an admissible finest iterate `w`, the bounds
//! `chi_lo^J = gamma_lo - w`, `chi_hi^J = gamma_hi - w` are coarsened with
//! the max/min injections.  The differences
//! `phi^j = chi^j - P chi^{j-1}` (with `phi^0 = chi^0`) bound the downward
//! corrections, while the `chi^j` themselves bound the upward ones.

use crate::error::{Error, Result};
use crate::function::{ext_sub, ext_sub_fn, ExtendedNodalFunction, NodalFunction};
use crate::transfer::TransferPlan;

/// Finest-level defect constraints `(gamma_lo - w, gamma_hi - w)`.
pub fn finest_defects(
    lower: &ExtendedNodalFunction,
    upper: &ExtendedNodalFunction,
    w: &NodalFunction,
) -> Result<(ExtendedNodalFunction, ExtendedNodalFunction)> {
    if lower.len() != w.len() || upper.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            found: lower.len().min(upper.len()),
        });
    }
    for (p, &x) in w.iter().enumerate() {
        if x < lower.get(p) || x > upper.get(p) {
            return Err(Error::Inadmissible {
                level: w.level(),
                vertex: p,
                detail: format!(
                    "value {x} outside [{}, {}]",
                    lower.get(p),
                    upper.get(p)
                ),
            });
        }
    }
    let defect = |g: &ExtendedNodalFunction| -> ExtendedNodalFunction {
        match g.uniform_value() {
            Some(v) if v.is_infinite() => g.clone(),
            _ => ExtendedNodalFunction::from_values(
                w.level(),
                w.iter().enumerate().map(|(p, &x)| ext_sub(g.get(p), x)).collect(),
            ),
        }
    };
    Ok((defect(lower), defect(upper)))
}

#[derive(Debug, Clone)]
pub struct DefectLadder {
    chi_lo: Vec<ExtendedNodalFunction>,
    chi_hi: Vec<ExtendedNodalFunction>,
    /// Entries for levels `1..=J`; level 0 shares `chi`.
    phi_lo: Vec<ExtendedNodalFunction>,
    phi_hi: Vec<ExtendedNodalFunction>,
}

impl DefectLadder {
    /// Builds the ladder from finest defects on level `chi_lo.level()`.
    pub fn build(
        plan: &TransferPlan,
        chi_lo: ExtendedNodalFunction,
        chi_hi: ExtendedNodalFunction,
    ) -> Result<Self> {
        let top = chi_lo.level();
        if chi_hi.level() != top {
            return Err(Error::LevelMismatch {
                expected: top,
                found: chi_hi.level(),
            });
        }
        let mut lo = vec![chi_lo];
        let mut hi = vec![chi_hi];
        for _ in 0..top {
            let next_lo = plan.inject_max(lo.last().expect("nonempty"))?;
            let next_hi = plan.inject_min(hi.last().expect("nonempty"))?;
            lo.push(next_lo);
            hi.push(next_hi);
        }
        lo.reverse();
        hi.reverse();
        let mut phi_lo = Vec::with_capacity(top);
        let mut phi_hi = Vec::with_capacity(top);
        for j in 1..=top {
            phi_lo.push(level_difference(plan, &lo[j], &lo[j - 1])?);
            phi_hi.push(level_difference(plan, &hi[j], &hi[j - 1])?);
        }
        let ladder = Self {
            chi_lo: lo,
            chi_hi: hi,
            phi_lo,
            phi_hi,
        };
        debug_assert!(ladder.phi_brackets_zero());
        Ok(ladder)
    }

    /// Hand-assembled ladder, for tests of the ordering check.
    pub fn from_parts(
        chi_lo: Vec<ExtendedNodalFunction>,
        chi_hi: Vec<ExtendedNodalFunction>,
        phi_lo: Vec<ExtendedNodalFunction>,
        phi_hi: Vec<ExtendedNodalFunction>,
    ) -> Self {
        Self {
            chi_lo,
            chi_hi,
            phi_lo,
            phi_hi,
        }
    }

    /// Index of the top (finest) level of the ladder.
    pub fn top(&self) -> usize {
        self.chi_lo.len() - 1
    }

    pub fn chi_lo(&self, j: usize) -> &ExtendedNodalFunction {
        &self.chi_lo[j]
    }

    pub fn chi_hi(&self, j: usize) -> &ExtendedNodalFunction {
        &self.chi_hi[j]
    }

    pub fn phi_lo(&self, j: usize) -> &ExtendedNodalFunction {
        if j == 0 {
            &self.chi_lo[0]
        } else {
            &self.phi_lo[j - 1]
        }
    }

    pub fn phi_hi(&self, j: usize) -> &ExtendedNodalFunction {
        if j == 0 {
            &self.chi_hi[0]
        } else {
            &self.phi_hi[j - 1]
        }
    }

    /// Scalars held in per-vertex storage across the ladder.
    pub fn storage_slots(&self) -> usize {
        self.chi_lo
            .iter()
            .chain(&self.chi_hi)
            .chain(&self.phi_lo)
            .chain(&self.phi_hi)
            .map(ExtendedNodalFunction::storage_slots)
            .sum()
    }

    /// `phi_lo^j <= 0 <= phi_hi^j` on every level.
    pub fn phi_brackets_zero(&self) -> bool {
        (0..=self.top()).all(|j| {
            self.phi_lo(j).iter().all(|x| x <= 0.0) && self.phi_hi(j).iter().all(|x| x >= 0.0)
        })
    }
}

/// `fine - P coarse`, where an infinite `fine` entry wins regardless of the
/// coarse value.
fn level_difference(
    plan: &TransferPlan,
    fine: &ExtendedNodalFunction,
    coarse: &ExtendedNodalFunction,
) -> Result<ExtendedNodalFunction> {
    let pc = plan.prolong_ext(coarse)?;
    Ok(ext_sub_fn(fine, &pc)?.compact())
}

fn prolong_to(
    plan: &TransferPlan,
    f: &ExtendedNodalFunction,
    top: usize,
) -> Result<ExtendedNodalFunction> {
    let mut g = f.clone();
    while g.level() < top {
        g = plan.prolong_ext(&g)?;
    }
    Ok(g)
}

/// Checks `chi_lo^J <= ... <= chi_lo^0 <= 0 <= chi_hi^0 <= ... <= chi_hi^J`,
/// comparing every level after prolongation to the top level.
pub fn check_ordering(plan: &TransferPlan, ladder: &DefectLadder) -> bool {
    let top = ladder.top();
    let lifted = |f: &ExtendedNodalFunction| prolong_to(plan, f, top);
    let mut prev_lo: Option<ExtendedNodalFunction> = None;
    let mut prev_hi: Option<ExtendedNodalFunction> = None;
    for j in (0..=top).rev() {
        let (lo, hi) = match (lifted(ladder.chi_lo(j)), lifted(ladder.chi_hi(j))) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return false,
        };
        if let (Some(pl), Some(ph)) = (&prev_lo, &prev_hi) {
            let n = lo.len();
            if (0..n).any(|q| pl.get(q) > lo.get(q) || ph.get(q) < hi.get(q)) {
                return false;
            }
        }
        prev_lo = Some(lo);
        prev_hi = Some(hi);
    }
    let lo0 = ladder.chi_lo(0);
    let hi0 = ladder.chi_hi(0);
    lo0.iter().all(|x| x <= 0.0) && hi0.iter().all(|x| x >= 0.0)
}
