//! Minimal compressed-sparse-row matrices: assembly from triplets, matvec,
//! row scaling and row masking. Enough for the finite element systems; no
//! factorization machinery.

/// Square CSR matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) out of bounds for n={n}");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in per_row.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr { n, row_ptr, col_idx, values }
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[i] = acc;
        }
    }

    /// Scales row `i` by `d[i]` in place.
    pub fn scale_rows(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.values[k] *= d[i];
            }
        }
    }

    /// Returns a copy with row `i` kept where `mask[i]` and zeroed otherwise.
    /// Structure is preserved so the fast/slow splitting sums exactly.
    pub fn mask_rows(&self, mask: &[bool]) -> Csr {
        assert_eq!(mask.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            if !mask[i] {
                for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                    out.values[k] = 0.0;
                }
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }
}
