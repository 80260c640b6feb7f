use super::{AutodiffError, DenseMat};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    /// Validates raw CSR arrays.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, AutodiffError> {
        if offsets.len() != rows + 1 || offsets[0] != 0 {
            return Err(AutodiffError::BadData("row offsets must have rows+1 entries starting at 0".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(AutodiffError::BadData("row offsets must be monotone".into()));
        }
        if *offsets.last().unwrap() != indices.len() || indices.len() != values.len() {
            return Err(AutodiffError::BadData("offsets, indices and values disagree in length".into()));
        }
        for r in 0..rows {
            let cols_in_row = &indices[offsets[r]..offsets[r + 1]];
            if cols_in_row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(AutodiffError::BadData(format!("column indices of row {r} not strictly increasing")));
            }
            if cols_in_row.last().is_some_and(|&c| c >= cols) {
                return Err(AutodiffError::BadData(format!("column index out of range in row {r}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFiniteInput("sparse values".into()));
        }
        Ok(Self { rows, cols, offsets, indices, values })
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed, exact
    /// zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, AutodiffError> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(AutodiffError::BadData(format!("triplet ({r}, {c}) outside {rows}x{cols}")));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        let mut m = Self::from_csr(rows, cols, offsets, indices, values)?;
        m.drop_zeros();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DenseMat) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), triplets).expect("dense entries are in range")
    }

    fn drop_zeros(&mut self) {
        let mut offsets = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.offsets[r]..self.offsets[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            offsets[r + 1] = indices.len();
        }
        self.offsets = offsets;
        self.indices = indices;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMat {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((c, r, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, triplets).expect("transpose stays in range")
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| (self.get(c, r) - v).abs() <= tol)
        })
    }

    /// `self * x`.
    pub fn matmul_dense(&self, x: &DenseMat) -> Result<DenseMat, AutodiffError> {
        if self.cols != x.rows() {
            return Err(AutodiffError::BadData(format!(
                "sparse product dimensions differ: {}x{} * {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let n = x.cols();
        let mut out = DenseMat::zeros(self.rows, n);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(x.row(c)) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * g`, accumulated by scattering each stored entry.
    pub fn t_matmul_dense(&self, g: &DenseMat) -> Result<DenseMat, AutodiffError> {
        if self.rows != g.rows() {
            return Err(AutodiffError::BadData(format!(
                "transposed sparse product dimensions differ: {} vs {}",
                self.rows,
                g.rows()
            )));
        }
        let n = g.cols();
        let mut out = DenseMat::zeros(self.cols, n);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let g_row = g.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &b) in out.row_mut(c).iter_mut().zip(g_row) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }
}
