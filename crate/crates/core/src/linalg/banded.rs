use super::csr::CsrMatrix;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting in band storage.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    /// Row stride; the upper band grows to `2 kl` under pivoting.
    width: usize,
    band: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let kl = a.bandwidth();
        let ku = 2 * kl;
        let width = kl + ku + 1;
        // row i, column j stored at i * width + (j + kl - i)
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                band[i * width + j + kl - i] = x;
            }
        }
        let at = |i: usize, j: usize| i * width + j + kl - i;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[at(k, k)].abs();
            for i in k + 1..=last {
                let v = band[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinearSolver(format!("singular matrix at column {k}")));
            }
            piv[k] = p;
            let cmax = (k + ku).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    band.swap(at(k, j), at(p, j));
                }
            }
            let d = band[at(k, k)];
            for i in k + 1..=last {
                let l = band[at(i, k)] / d;
                band[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=cmax {
                        band[at(i, j)] -= l * band[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            band,
            piv,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, width) = (self.n, self.kl, self.width);
        let at = |i: usize, j: usize| i * width + j + kl - i;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                x[i] -= self.band[at(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + 2 * kl).min(n - 1) {
                s -= self.band[at(k, j)] * x[j];
            }
            x[k] = s / self.band[at(k, k)];
        }
        x
    }
}
