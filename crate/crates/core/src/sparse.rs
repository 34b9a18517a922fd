//! Compressed sparse row matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per rayon task in [`SparseMatrix::spmv_into`]; below this the
/// product runs on the calling thread.
const PAR_ROW_CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` entries. Repeated positions
    /// are summed; explicit zeros are kept so the sparsity pattern does not
    /// depend on cancellation.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) outside a {nrows}×{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("matrix entry"));
            }
        }
        // stable sort keeps the summation order of duplicates deterministic
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored value at `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)),
        )
        .expect("transpose of a valid matrix")
    }

    pub fn scaled(&self, c: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `Σ c_k A_k` over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let Some(&(_, first)) = terms.first() else {
            return Err(Error::invalid("empty linear combination"));
        };
        let (nrows, ncols) = (first.nrows, first.ncols);
        for &(_, m) in terms {
            if m.nrows != nrows || m.ncols != ncols {
                return Err(Error::DimensionMismatch {
                    expected: nrows * ncols,
                    actual: m.nrows * m.ncols,
                });
            }
        }
        SparseMatrix::from_triplets(
            nrows,
            ncols,
            terms
                .iter()
                .flat_map(|&(c, m)| m.triplets().map(move |(i, j, v)| (i, j, c * v))),
        )
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, v)| i == j || v == 0.0)
    }

    /// `max |A − Aᵀ|` over all entries; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x` into a caller-owned buffer. Each row is summed in storage
    /// order, so the result does not depend on the thread count.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: x.len(),
            });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: y.len(),
            });
        }
        let row_dot = |i: usize| -> f64 {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
        };
        if self.nrows <= PAR_ROW_CHUNK {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            y.par_chunks_mut(PAR_ROW_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * PAR_ROW_CHUNK;
                    chunk
                        .iter_mut()
                        .enumerate()
                        .for_each(|(k, yi)| *yi = row_dot(base + k));
                });
        }
        Ok(())
    }

    /// `y = Aᵀ x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.triplets() {
            y[j] += v * x[i];
        }
        Ok(y)
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.spmv(x)?;
        Ok(dot(x, &ax))
    }

    /// Rows and columns flagged in `constrained` are zeroed and given a unit
    /// diagonal.
    pub fn eliminate(&self, constrained: &[bool]) -> Result<SparseMatrix> {
        if self.nrows != self.ncols || constrained.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                actual: constrained.len(),
            });
        }
        let kept = self
            .triplets()
            .filter(|&(i, j, _)| !constrained[i] && !constrained[j]);
        let unit = (0..self.nrows)
            .filter(|&i| constrained[i])
            .map(|i| (i, i, 1.0));
        SparseMatrix::from_triplets(self.nrows, self.ncols, kept.chain(unit))
    }
}

/// Sequential dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
