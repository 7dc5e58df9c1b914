//! Sparse matrices and randomized truncated SVD by subspace iteration.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut row_ptr = vec![0; self.rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = values.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// `self · b`
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.cols, b.nrows());
        let mut out = DMatrix::zeros(self.rows, b.ncols());
        for j in 0..b.ncols() {
            for r in 0..self.rows {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * b[(self.col_idx[k], j)];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    /// `selfᵀ · b`
    pub fn tmul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.rows, b.nrows());
        let mut out = DMatrix::zeros(self.cols, b.ncols());
        for j in 0..b.ncols() {
            for r in 0..self.rows {
                let x = b[(r, j)];
                if x == 0.0 {
                    continue;
                }
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    out[(self.col_idx[k], j)] += self.values[k] * x;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdConfig {
    /// Extra basis vectors carried beyond the requested rank.
    pub oversample: usize,
    pub max_iters: usize,
    /// Stop once the top-k singular values change by less than this
    /// relative amount between iterations.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        Self {
            oversample: 10,
            max_iters: 100,
            tol: 1e-12,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// rows × k, orthonormal columns
    pub u: DMatrix<f64>,
    /// non-increasing
    pub singular_values: Vec<f64>,
    /// k × cols
    pub vt: DMatrix<f64>,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Rank-`k` SVD of `a`.
pub fn randomized_svd(a: &CsrMatrix, k: usize, cfg: &SvdConfig) -> Result<TruncatedSvd> {
    let max = a.nrows().min(a.ncols());
    if k == 0 || k > max {
        return Err(Error::RankTooLarge { requested: k, max });
    }
    let l = (k + cfg.oversample).min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let omega = DMatrix::from_fn(a.ncols(), l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.mul_dense(&omega));

    let mut prev: Option<Vec<f64>> = None;
    let mut small_svd = None;
    for _ in 0..cfg.max_iters.max(1) {
        let z = orthonormalize(a.tmul_dense(&q));
        q = orthonormalize(a.mul_dense(&z));
        // B = Qᵀ A, computed as (Aᵀ Q)ᵀ.
        let b = a.tmul_dense(&q).transpose();
        let svd = b.svd(true, true);
        let sv = sorted_values(&svd.singular_values, k);
        let converged = prev.as_ref().is_some_and(|p| {
            p.iter()
                .zip(&sv)
                .all(|(x, y)| (x - y).abs() <= cfg.tol * y.abs().max(f64::MIN_POSITIVE))
        });
        prev = Some(sv);
        small_svd = Some(svd);
        if converged {
            break;
        }
    }

    let svd = small_svd.expect("at least one iteration");
    let ub = svd.u.expect("u requested");
    let vtb = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order.truncate(k);

    let full_u = &q * &ub;
    let u = DMatrix::from_fn(a.nrows(), k, |r, c| full_u[(r, order[c])]);
    let vt = DMatrix::from_fn(k, a.ncols(), |r, c| vtb[(order[r], c)]);
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok(TruncatedSvd {
        u,
        singular_values,
        vt,
    })
}

fn sorted_values(v: &nalgebra::DVector<f64>, k: usize) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.truncate(k);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_products_match_dense() {
        let d = DMatrix::from_row_slice(3, 4, &[1., 0., 2., 0., 0., 0., 0., 3., 4., 5., 0., 0.]);
        let a = CsrMatrix::from_dense(&d);
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.to_dense(), d);
        let b = DMatrix::from_fn(4, 2, |r, c| (r * 2 + c) as f64 - 1.5);
        assert_eq!(a.mul_dense(&b), &d * &b);
        let c = DMatrix::from_fn(3, 2, |r, c| (r + c) as f64 * 0.5);
        assert_eq!(a.tmul_dense(&c), d.transpose() * &c);
    }

    #[test]
    fn duplicate_triplets_sum() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 2.0), (0, 1, 0.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense(), DMatrix::from_row_slice(2, 2, &[2., 0., 0., 3.]));
    }

    #[test]
    fn rank_too_large() {
        let a = CsrMatrix::from_triplets(3, 2, vec![(0, 0, 1.0)]);
        let err = randomized_svd(&a, 3, &SvdConfig::default()).unwrap_err();
        assert!(err.to_string().contains("rank too large"));
    }

    #[test]
    fn diagonal_matrix() {
        let d = DMatrix::from_fn(5, 5, |r, c| if r == c { (5 - r) as f64 } else { 0.0 });
        let s = randomized_svd(&CsrMatrix::from_dense(&d), 3, &SvdConfig::default()).unwrap();
        for (got, want) in s.singular_values.iter().zip([5.0, 4.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
        let utu = s.u.transpose() * &s.u;
        assert!((utu - DMatrix::identity(3, 3)).abs().max() < 1e-10);
    }
}
