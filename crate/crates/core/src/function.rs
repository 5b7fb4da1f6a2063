//! Per-level nodal vectors: primal functions, extended-real obstacles, and
//! dual vectors (coefficients of functionals against the nodal basis).

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

macro_rules! level_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            level: usize,
            values: Vec<f64>,
        }

        impl $name {
            pub fn zeros(level: usize, len: usize) -> Self {
                Self { level, values: vec![0.0; len] }
            }

            pub fn from_values(level: usize, values: Vec<f64>) -> Self {
                Self { level, values }
            }

            pub fn constant(level: usize, len: usize, value: f64) -> Self {
                Self { level, values: vec![value; len] }
            }

            pub fn level(&self) -> usize {
                self.level
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.values
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }
    };
}

level_vector!(
    /// Real nodal coefficients of a P1/Q1 function on one level.
    NodalFunction
);

level_vector!(
    /// Values `<sigma, psi_p>` of a linear functional against each basis
    /// function of one level.
    DualVector
);

#[derive(Debug, Clone, PartialEq)]
enum ExtRepr {
    Uniform(f64),
    Nodal(Vec<f64>),
}

/// Nodal function with values in `[-inf, +inf]`.
///
/// A function that is the same everywhere (typically `-inf` or `+inf` for a
/// missing obstacle) is stored as a single value and occupies no per-vertex
/// storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedNodalFunction {
    level: usize,
    len: usize,
    repr: ExtRepr,
}

impl ExtendedNodalFunction {
    pub fn uniform(level: usize, len: usize, value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Self {
            level,
            len,
            repr: ExtRepr::Uniform(value),
        }
    }

    pub fn neg_infinity(level: usize, len: usize) -> Self {
        Self::uniform(level, len, f64::NEG_INFINITY)
    }

    pub fn infinity(level: usize, len: usize) -> Self {
        Self::uniform(level, len, f64::INFINITY)
    }

    pub fn from_values(level: usize, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| !v.is_nan()));
        Self {
            level,
            len: values.len(),
            repr: ExtRepr::Nodal(values),
        }
    }

    pub fn from_nodal(f: &NodalFunction) -> Self {
        Self::from_values(f.level(), f.values().to_vec())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match &self.repr {
            ExtRepr::Uniform(v) => *v,
            ExtRepr::Nodal(v) => v[i],
        }
    }

    /// The common value when stored uniformly.
    pub fn uniform_value(&self) -> Option<f64> {
        match self.repr {
            ExtRepr::Uniform(v) => Some(v),
            ExtRepr::Nodal(_) => None,
        }
    }

    pub fn as_nodal(&self) -> Option<&[f64]> {
        match &self.repr {
            ExtRepr::Uniform(_) => None,
            ExtRepr::Nodal(v) => Some(v),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match &self.repr {
            ExtRepr::Uniform(v) => vec![*v; self.len],
            ExtRepr::Nodal(v) => v.clone(),
        }
    }

    /// `true` if every entry is `+inf` or every entry is `-inf`.
    pub fn is_infinite(&self) -> bool {
        match &self.repr {
            ExtRepr::Uniform(v) => v.is_infinite(),
            ExtRepr::Nodal(v) => {
                v.iter().all(|x| *x == f64::INFINITY) || v.iter().all(|x| *x == f64::NEG_INFINITY)
            }
        }
    }

    /// Number of scalars held in per-vertex storage.
    pub fn storage_slots(&self) -> usize {
        match &self.repr {
            ExtRepr::Uniform(_) => 0,
            ExtRepr::Nodal(v) => v.len(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Entrywise map; uniform storage stays uniform.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let repr = match &self.repr {
            ExtRepr::Uniform(v) => ExtRepr::Uniform(f(*v)),
            ExtRepr::Nodal(v) => ExtRepr::Nodal(v.iter().map(|x| f(*x)).collect()),
        };
        Self {
            level: self.level,
            len: self.len,
            repr,
        }
    }

    /// Collapse to uniform storage when all entries agree.
    pub fn compact(self) -> Self {
        if let ExtRepr::Nodal(v) = &self.repr {
            if let Some(&first) = v.first() {
                if v.iter().all(|x| *x == first) {
                    return Self::uniform(self.level, self.len, first);
                }
            }
        }
        self
    }
}

/// Extended-real difference `x - y` with the conventions
/// `(-inf) - y = -inf`, `(+inf) - y = +inf` for any `y`, and otherwise
/// `x - (-inf) = +inf`, `x - (+inf) = -inf`.
#[inline]
pub fn ext_sub(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else if y == f64::NEG_INFINITY {
        f64::INFINITY
    } else if y == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        x - y
    }
}

/// Extended-real difference of two functions on the same level.
pub fn ext_sub_fn(
    x: &ExtendedNodalFunction,
    y: &ExtendedNodalFunction,
) -> Result<ExtendedNodalFunction> {
    check_level(x.level(), y.level())?;
    check_len(x.len(), y.len())?;
    if let (Some(a), Some(b)) = (x.uniform_value(), y.uniform_value()) {
        return Ok(ExtendedNodalFunction::uniform(x.level(), x.len(), ext_sub(a, b)));
    }
    if let Some(a) = x.uniform_value() {
        if a.is_infinite() {
            return Ok(x.clone());
        }
    }
    let values = (0..x.len()).map(|i| ext_sub(x.get(i), y.get(i))).collect();
    Ok(ExtendedNodalFunction::from_values(x.level(), values))
}

/// Boundary data for admissibility checks.
#[derive(Debug, Clone, Copy)]
pub struct DirichletData<'a> {
    pub mask: &'a [bool],
    pub values: &'a [f64],
}

pub(crate) fn check_level(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LevelMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Pointwise projection of `v` onto `[lo, hi]`.
pub fn clamp(
    v: &NodalFunction,
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
) -> Result<NodalFunction> {
    check_level(v.level(), lo.level())?;
    check_level(v.level(), hi.level())?;
    check_len(v.len(), lo.len())?;
    check_len(v.len(), hi.len())?;
    let mut out = v.clone();
    clamp_in_place(&mut out, lo, hi);
    Ok(out)
}

pub(crate) fn clamp_in_place(v: &mut [f64], lo: &ExtendedNodalFunction, hi: &ExtendedNodalFunction) {
    for (i, x) in v.iter_mut().enumerate() {
        let l = lo.get(i);
        let h = hi.get(i);
        if *x < l {
            *x = l;
        }
        if *x > h {
            *x = h;
        }
    }
}

/// Whether `lo - tol <= v <= hi + tol` everywhere and `|v - g| <= tol` on
/// Dirichlet vertices.
pub fn admissible(
    v: &NodalFunction,
    lo: &ExtendedNodalFunction,
    hi: &ExtendedNodalFunction,
    dirichlet: Option<DirichletData<'_>>,
    tol: f64,
) -> bool {
    if v.len() != lo.len() || v.len() != hi.len() {
        return false;
    }
    let bounds_ok = v
        .iter()
        .enumerate()
        .all(|(i, &x)| x >= lo.get(i) - tol && x <= hi.get(i) + tol);
    if !bounds_ok {
        return false;
    }
    match dirichlet {
        None => true,
        Some(d) => v
            .iter()
            .zip(d.mask.iter().zip(d.values))
            .all(|(&x, (&m, &g))| !m || (x - g).abs() <= tol),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
