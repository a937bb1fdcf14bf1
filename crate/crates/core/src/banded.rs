//! Symmetric band storage and unpivoted `LDL^T` inertia counting.

use nalgebra::DMatrix;

/// Symmetric matrix with half-bandwidth `bandwidth`; only the lower band is
/// stored, row by row: `lower[i * (bw + 1) + k] = A[i][i - k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetricMatrix {
    dim: usize,
    bandwidth: usize,
    lower: Vec<f64>,
}

/// Outcome of an `LDL^T` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdltInertia {
    pub negative: usize,
    pub positive: usize,
    /// Smallest `|pivot| / row scale` seen.
    pub min_relative_pivot: f64,
}

/// Pivot `index` fell below the singularity threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub index: usize,
}

impl BandedSymmetricMatrix {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(dim.saturating_sub(1));
        Self {
            dim,
            bandwidth,
            lower: vec![0.0; dim * (bandwidth + 1)],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len(), 0);
        for (i, &v) in diag.iter().enumerate() {
            out.set(i, i, v);
        }
        out
    }

    /// Band of a dense symmetric matrix; entries outside `bandwidth` are dropped.
    pub fn from_dense(dense: &DMatrix<f64>, bandwidth: usize) -> Self {
        let mut out = Self::zeros(dense.nrows(), bandwidth);
        for i in 0..out.dim {
            for j in i.saturating_sub(out.bandwidth)..=i {
                out.set(i, j, dense[(i, j)]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        let offset = row - col;
        (offset <= self.bandwidth).then(|| row * (self.bandwidth + 1) + offset)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        self.slot(i, j).map_or(0.0, |s| self.lower[s])
    }

    /// Sets `A[i][j] = A[j][i] = value`. Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.lower[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.lower[s] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            bandwidth: self.bandwidth,
            lower: self.lower.iter().map(|v| v * factor).collect(),
        }
    }

    /// Copy with a wider band (extra diagonals are zero).
    pub fn widened(&self, bandwidth: usize) -> Self {
        let mut out = Self::zeros(self.dim, bandwidth.max(self.bandwidth));
        for i in 0..self.dim {
            for j in i.saturating_sub(self.bandwidth)..=i {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// `self - shift * other`; both must share the dimension.
    pub fn shifted(&self, shift: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = Self::zeros(self.dim, bw);
        for i in 0..self.dim {
            for j in i.saturating_sub(bw)..=i {
                out.set(i, j, self.get(i, j) - shift * other.get(i, j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Largest band entry in row `i` (both halves).
    fn row_scale(&self, i: usize) -> f64 {
        let lo = i.saturating_sub(self.bandwidth);
        let hi = (i + self.bandwidth).min(self.dim - 1);
        (lo..=hi).fold(0.0, |acc, j| acc.max(self.get(i, j).abs()))
    }

    /// Unpivoted band `LDL^T`; by Sylvester's law the pivot signs give the
    /// inertia. A pivot with `|d_i| <= threshold * rowscale_i` is reported as
    /// singular. Cost is `O(dim * bw^2)`.
    pub fn ldlt_inertia(&self, threshold: f64) -> Result<LdltInertia, SingularPivot> {
        let bw = self.bandwidth;
        let width = bw + 1;
        // l[i * width + k] = L[i][i - k] for k >= 1; pivots kept separately
        let mut l = vec![0.0; self.dim * width];
        let mut pivots = vec![0.0; self.dim];
        let mut negative = 0;
        let mut min_relative_pivot = f64::INFINITY;

        for j in 0..self.dim {
            let lo = j.saturating_sub(bw);
            let mut pivot = self.get(j, j);
            for k in lo..j {
                let ljk = l[j * width + (j - k)];
                pivot -= ljk * ljk * pivots[k];
            }
            let scale = self.row_scale(j);
            let relative = if scale > 0.0 {
                pivot.abs() / scale
            } else {
                0.0
            };
            if !pivot.is_finite() || relative <= threshold {
                return Err(SingularPivot { index: j });
            }
            min_relative_pivot = min_relative_pivot.min(relative);
            pivots[j] = pivot;
            if pivot < 0.0 {
                negative += 1;
            }

            let hi = (j + bw).min(self.dim - 1);
            for i in j + 1..=hi {
                let mut v = self.get(i, j);
                for k in i.saturating_sub(bw).max(lo)..j {
                    v -= l[i * width + (i - k)] * l[j * width + (j - k)] * pivots[k];
                }
                l[i * width + (i - j)] = v / pivot;
            }
        }
        Ok(LdltInertia {
            negative,
            positive: self.dim - negative,
            min_relative_pivot,
        })
    }
}
