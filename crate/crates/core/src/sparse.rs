//! Compressed sparse row and diagonal operators.

use std::io::Write;

use crate::error::{Error, Result};

/// Coordinate-list accumulator. Duplicates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        TripletBuilder {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        TripletBuilder {
            dim,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, value));
    }

    /// Build the CSR matrix. Explicit zeros are kept so the pattern reflects
    /// element connectivity; duplicates are summed in insertion order.
    pub fn build(mut self) -> CsrMatrix {
        // Stable sort keeps insertion order within a (row, col) group, so the
        // summation order is fixed.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored value at `(r, c)`, zero if outside the pattern.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y)?;
        Ok(y)
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        let ax = self.mul_vec(x)?;
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        Ok(y.iter().zip(&ax).map(|(a, b)| a * b).sum())
    }

    /// Entrywise sum of two matrices sharing the dimension.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut b = TripletBuilder::with_capacity(self.dim, self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.dim {
                for (c, v) in m.row(r) {
                    b.add(r, c, v);
                }
            }
        }
        Ok(b.build())
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.dim, self.nnz());
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                b.add(c, r, v);
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    /// Zero the rows and columns listed in `mask` and put ones on their diagonal.
    pub fn mask_dofs(&mut self, mask: &[bool]) {
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if mask[r] || mask[c] {
                    self.values[k] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// Coordinate-list dump: one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# {} {} {}", self.dim, self.dim, self.nnz())?;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    pub values: Vec<f64>,
}

impl DiagonalOperator {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn mask_dofs(&mut self, mask: &[bool]) {
        for (v, &m) in self.values.iter_mut().zip(mask) {
            if m {
                *v = 1.0;
            }
        }
    }

    /// `Σ_i d_i x_i y_i`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(x)
            .zip(y)
            .map(|((d, a), b)| d * a * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = TripletBuilder::new(3);
        b.add(2, 1, 1.0);
        b.add(0, 2, 2.0);
        b.add(0, 0, 1.0);
        b.add(0, 2, 3.0);
        b.add(1, 1, 0.0);
        let m = b.build();
        assert_eq!(m.row_ptr(), &[0, 2, 3, 4]);
        assert_eq!(m.col_idx(), &[0, 2, 1, 1]);
        assert_eq!(m.values(), &[1.0, 5.0, 0.0, 1.0]);
        assert_eq!(m.get(0, 2), 5.0);
        assert_eq!(m.get(2, 2), 0.0);
    }

    #[test]
    fn dimension_checks() {
        let m = TripletBuilder::new(2).build();
        assert!(matches!(
            m.mul_vec(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn masking_is_idempotent() {
        let mut b = TripletBuilder::new(3);
        for r in 0..3 {
            for c in 0..3 {
                b.add(r, c, (r * 3 + c) as f64 + 1.0);
            }
        }
        let mut m = b.build();
        let mask = [false, true, false];
        m.mask_dofs(&mask);
        let once = m.clone();
        m.mask_dofs(&mask);
        assert_eq!(m, once);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(2, 0), 7.0);
    }

    proptest! {
        #[test]
        fn matvec_matches_dense(entries in proptest::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 0..40),
                                x in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let mut dense = vec![vec![0.0; 6]; 6];
            let mut b = TripletBuilder::new(6);
            for &(r, c, v) in &entries {
                dense[r][c] += v;
                b.add(r, c, v);
            }
            let m = b.build();
            for r in 0..6 {
                let cols: Vec<usize> = m.row(r).map(|(c, _)| c).collect();
                prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            }
            let y = m.mul_vec(&x).unwrap();
            for r in 0..6 {
                let expect: f64 = (0..6).map(|c| dense[r][c] * x[c]).sum();
                prop_assert!((y[r] - expect).abs() < 1e-10);
            }
            let t = m.transpose();
            for r in 0..6 {
                for c in 0..6 {
                    prop_assert_eq!(t.get(c, r), m.get(r, c));
                }
            }
        }
    }
}
