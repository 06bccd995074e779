//! Symmetric banded storage with an in-place Cholesky factorization.
//!
//! Node numbering on both meshes keeps every element inside a band of width
//! `nz + 2` (thin) or `1` (limit), so Newton systems factor in `O(n b^2)`.

#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    /// Lower band, row-major: `data[i * (bw + 1) + k] = A[i][i - k]`.
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(
            hi - lo <= self.bw,
            "entry ({i}, {j}) outside band {}",
            self.bw
        );
        hi * (self.bw + 1) + (hi - lo)
    }

    /// Add `v` to `A[i][j]` (and, by symmetry, `A[j][i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    /// Factor `A = L L^T` in place.
    pub fn cholesky(mut self) -> Result<BandCholesky, NotPositiveDefinite> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let first = i.saturating_sub(self.bw);
            for k in first..=i {
                let mut s = self.data[i * w + (i - k)];
                let m0 = first.max(k.saturating_sub(self.bw));
                for m in m0..k {
                    s -= self.data[i * w + (i - m)] * self.data[k * w + (k - m)];
                }
                if k == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(NotPositiveDefinite { row: i, pivot: s });
                    }
                    self.data[i * w] = s.sqrt();
                } else {
                    self.data[i * w + (i - k)] = s / self.data[k * w];
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let SymBand { n, bw, ref data } = self.factor;
        let w = bw + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for m in i.saturating_sub(bw)..i {
                s -= data[i * w + (i - m)] * x[m];
            }
            x[i] = s / data[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for m in (i + 1)..n.min(i + w) {
                s -= data[m * w + (m - i)] * x[m];
            }
            x[i] = s / data[i * w];
        }
        x
    }
}
