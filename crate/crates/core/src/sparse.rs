//! Row-compressed sparse matrices and the handful of dense vector kernels the
//! ranking operators are built from.
//!
//! Every kernel sums in ascending index order, so results are bit-identical
//! across runs for identical inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vectors are plain `Vec<f64>`; kernels accept slices.
pub type DenseVector = Vec<f64>;

/// Canonical CSR matrix with nonnegative values.
///
/// Columns within a row are strictly increasing; duplicate input entries are
/// summed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicates are summed; explicit zeros are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) has value {v}; values must be finite and nonnegative"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry exists") += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let mut m = Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    /// Binary pattern matrix from `(row, col)` pairs; duplicates collapse to 1.
    pub fn from_pattern(n_rows: usize, n_cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::from_triplets(
            n_rows,
            n_cols,
            &pairs.iter().map(|&(r, c)| (r, c, 1.0)).collect::<Vec<_>>(),
        )?;
        m.values.iter_mut().for_each(|v| *v = 1.0);
        Ok(m)
    }

    /// Validates raw CSR arrays against the canonical-form invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets has length {} for {n_rows} rows",
                row_offsets.len()
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidMatrix(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for i in 0..n_rows {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            if start > end {
                return Err(Error::InvalidMatrix(format!("row_offsets decreases at row {i}")));
            }
            let cols = &col_indices[start..end];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column {c} out of bounds in row {i}"
                    )));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMatrix(format!("invalid value {v}")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense row-major construction, mostly for small fixtures.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    context: "dense row",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut offsets = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::with_capacity(self.col_indices.len());
        let mut vals = Vec::with_capacity(self.values.len());
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                if self.values[k] != 0.0 {
                    cols.push(self.col_indices[k]);
                    vals.push(self.values[k]);
                }
            }
            offsets[i + 1] = cols.len();
        }
        self.row_offsets = offsets;
        self.col_indices = cols;
        self.values = vals;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nonzeros of row `i` as `(column, value)` pairs in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates all nonzeros in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = xᵀ A`, i.e. `y_j = Σ_i x_i A_ij`.
    pub fn left_multiply(&self, x: &[f64]) -> Result<DenseVector> {
        let mut y = vec![0.0; self.n_cols];
        self.left_multiply_into(x, &mut y)?;
        Ok(y)
    }

    /// Overwrites `y` with `xᵀ A`.
    pub fn left_multiply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_len("left_multiply input", self.n_rows, x.len())?;
        self.check_len("left_multiply output", self.n_cols, y.len())?;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                y[self.col_indices[k]] += xi * self.values[k];
            }
        }
        Ok(())
    }

    /// `y = A x`.
    pub fn right_multiply(&self, x: &[f64]) -> Result<DenseVector> {
        let mut y = vec![0.0; self.n_rows];
        self.right_multiply_into(x, &mut y)?;
        Ok(y)
    }

    pub fn right_multiply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_len("right_multiply input", self.n_cols, x.len())?;
        self.check_len("right_multiply output", self.n_rows, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// Row sums, identical to `right_multiply(e)`.
    pub fn row_sums(&self) -> DenseVector {
        (0..self.n_rows)
            .map(|i| {
                let mut acc = 0.0;
                for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                    acc += self.values[k] * 1.0;
                }
                acc
            })
            .collect()
    }

    /// Column sums, identical to `left_multiply(e)`.
    pub fn col_sums(&self) -> DenseVector {
        let mut y = vec![0.0; self.n_cols];
        for (k, &c) in self.col_indices.iter().enumerate() {
            y[c] += self.values[k];
        }
        y
    }

    /// Number of nonzeros in each column.
    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cols];
        for &c in &self.col_indices {
            counts[c] += 1;
        }
        counts
    }

    pub fn transpose(&self) -> Self {
        let mut offsets = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            offsets[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            offsets[j + 1] += offsets[j];
        }
        let mut cursor = offsets.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let c = self.col_indices[k];
                cols[cursor[c]] = i;
                vals[cursor[c]] = self.values[k];
                cursor[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: offsets,
            col_indices: cols,
            values: vals,
        }
    }

    /// Appends a dummy row and column: `[[A, e], [eᵀ, 0]]`.
    pub fn with_dummy(&self) -> Self {
        let (n, m) = (self.n_rows, self.n_cols);
        let mut offsets = Vec::with_capacity(n + 2);
        let mut cols = Vec::with_capacity(self.nnz() + n + m);
        let mut vals = Vec::with_capacity(self.nnz() + n + m);
        offsets.push(0);
        for i in 0..n {
            for (j, v) in self.row(i) {
                cols.push(j);
                vals.push(v);
            }
            cols.push(m);
            vals.push(1.0);
            offsets.push(cols.len());
        }
        cols.extend(0..m);
        vals.extend(std::iter::repeat(1.0).take(m));
        offsets.push(cols.len());
        Self {
            n_rows: n + 1,
            n_cols: m + 1,
            row_offsets: offsets,
            col_indices: cols,
            values: vals,
        }
    }

    /// Keeps only the nonzeros for which `keep(row, col)` returns true.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut offsets = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                if keep(i, j) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            offsets[i + 1] = cols.len();
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets: offsets,
            col_indices: cols,
            values: vals,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Heap bytes held by the index and value arrays.
    pub fn heap_bytes(&self) -> usize {
        self.row_offsets.capacity() * std::mem::size_of::<usize>()
            + self.col_indices.capacity() * std::mem::size_of::<usize>()
            + self.values.capacity() * std::mem::size_of::<f64>()
    }

    fn check_len(&self, context: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected != found {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                found,
            });
        }
        Ok(())
    }
}

fn check_same_len(context: &'static str, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context,
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Componentwise product.
pub fn hadamard(x: &[f64], y: &[f64]) -> Result<DenseVector> {
    check_same_len("hadamard", x, y)?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).collect())
}

/// Entrywise reciprocal; every entry must be strictly positive.
pub fn reciprocal(z: &[f64]) -> Result<DenseVector> {
    z.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(1.0 / value)
            } else {
                Err(Error::DegenerateRow { index, value })
            }
        })
        .collect()
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l1_normalize(x: &[f64]) -> Result<DenseVector> {
    let norm = l1_norm(x);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `‖x − y‖₁`
pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
