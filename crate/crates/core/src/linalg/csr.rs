use crate::error::{Error, Result};

/// Square sparse matrix in compressed sparse row form with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given row patterns.  Each row is sorted and
    /// deduplicated; the diagonal is always included.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        let mut ptr = Vec::with_capacity(n + 1);
        let mut idx = Vec::new();
        ptr.push(0);
        for (i, mut r) in rows.into_iter().enumerate() {
            r.push(i);
            r.sort_unstable();
            r.dedup();
            if let Some(&c) = r.last() {
                if c >= n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        found: c + 1,
                    });
                }
            }
            idx.extend(r);
            ptr.push(idx.len());
        }
        let val = vec![0.0; idx.len()];
        Ok(Self { n, ptr, idx, val })
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut ptr = vec![0];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    idx.push(j);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Self { n, ptr, idx, val }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            ptr: (0..=n).collect(),
            idx: (0..n).collect(),
            val: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.ptr[i]..self.ptr[i + 1];
        (&self.idx[r.clone()], &self.val[r])
    }

    pub(crate) fn ptr(&self) -> &[usize] {
        &self.ptr
    }

    pub(crate) fn idx(&self) -> &[usize] {
        &self.idx
    }

    pub(crate) fn val(&self) -> &[f64] {
        &self.val
    }

    pub(crate) fn val_mut(&mut self) -> &mut [f64] {
        &mut self.val
    }

    fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.ptr[i]..self.ptr[i + 1];
        self.idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.val[k])
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.find(i, j) {
            Some(k) => self.val[k] += v,
            None => panic!("entry ({i}, {j}) outside sparsity pattern"),
        }
    }

    pub fn zero(&mut self) {
        self.val.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.ptr[i]..self.ptr[i + 1] {
                s += self.val[k] * x[self.idx[k]];
            }
            *out = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Replaces every row and column `i` with `fixed[i]` by the identity.
    pub fn mask_identity(&mut self, fixed: &[bool]) {
        for i in 0..self.n {
            for k in self.ptr[i]..self.ptr[i + 1] {
                let j = self.idx[k];
                if fixed[i] || fixed[j] {
                    self.val[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        a
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            let (c, v) = self.row(i);
            c.iter()
                .zip(v)
                .all(|(&j, &x)| (x - self.get(j, i)).abs() <= tol * (1.0 + x.abs()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_and_products() {
        let mut a = CsrMatrix::from_pattern(vec![vec![1], vec![0, 2], vec![1]]).unwrap();
        assert_eq!(a.nnz(), 7);
        for i in 0..3 {
            a.add(i, i, 2.0);
        }
        a.add(0, 1, -1.0);
        a.add(1, 0, -1.0);
        a.add(1, 2, -1.0);
        a.add(2, 1, -1.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(a.bandwidth(), 1);
        assert!(a.is_symmetric(0.0));
        a.mask_identity(&[false, true, false]);
        assert_eq!(
            a.to_dense(),
            vec![
                vec![2.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 2.0]
            ]
        );
    }

    #[test]
    fn rejects_out_of_range_columns() {
        assert!(CsrMatrix::from_pattern(vec![vec![3], vec![]]).is_err());
    }

    #[test]
    #[should_panic]
    fn add_outside_pattern_panics() {
        let mut a = CsrMatrix::identity(3);
        a.add(0, 2, 1.0);
    }
}
