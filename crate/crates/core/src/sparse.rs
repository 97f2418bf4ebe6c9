//! Compressed-row operators for the trajectory inner loops.

use ndarray::Array2;

use crate::hilbert::{C64, ZERO};

/// Storage chosen by [`SparseOp::from_dense`]: nonzero diagonals when the
/// operator is banded (the JC operators in the `2n + s` ordering are), compressed
/// rows otherwise.
#[derive(Clone, Debug, PartialEq)]
enum Layout {
    /// `(offset, values)` with `out[i] += values[i] · x[i + offset]` on the valid range.
    Diagonals(Vec<(isize, Vec<C64>)>),
    Rows {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<C64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    nnz: usize,
    layout: Layout,
}

impl SparseOp {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let mut offsets = std::collections::BTreeSet::new();
        let mut nnz = 0;
        for ((i, j), v) in m.indexed_iter() {
            if *v != ZERO {
                offsets.insert(j as isize - i as isize);
                nnz += 1;
            }
        }
        let layout = if offsets.len() * dim <= 2 * nnz.max(1) {
            let diags = offsets
                .into_iter()
                .map(|off| {
                    let vals = (0..dim)
                        .map(|i| {
                            let j = i as isize + off;
                            if j >= 0 && (j as usize) < dim {
                                m[[i, j as usize]]
                            } else {
                                ZERO
                            }
                        })
                        .collect();
                    (off, vals)
                })
                .collect();
            Layout::Diagonals(diags)
        } else {
            let mut row_ptr = Vec::with_capacity(dim + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            row_ptr.push(0);
            for i in 0..dim {
                for j in 0..m.ncols() {
                    let v = m[[i, j]];
                    if v != ZERO {
                        cols.push(j);
                        vals.push(v);
                    }
                }
                row_ptr.push(cols.len());
            }
            Layout::Rows { row_ptr, cols, vals }
        };
        Self { dim, nnz, layout }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// `out = self · x`
    #[inline]
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        self.apply_add(x, C64::new(1.0, 0.0), out);
    }

    /// `out += scale · self · x`
    #[inline]
    pub fn apply_add(&self, x: &[C64], scale: C64, out: &mut [C64]) {
        let n = self.dim;
        match &self.layout {
            Layout::Diagonals(diags) => {
                for (off, vals) in diags {
                    let (lo, hi) = if *off >= 0 { (0, n - *off as usize) } else { ((-off) as usize, n) };
                    let xs = &x[(lo as isize + off) as usize..(hi as isize + off) as usize];
                    for ((o, v), xv) in out[lo..hi].iter_mut().zip(&vals[lo..hi]).zip(xs) {
                        *o += scale * (v * xv);
                    }
                }
            }
            Layout::Rows { row_ptr, cols, vals } => {
                for i in 0..n {
                    let (a, b) = (row_ptr[i], row_ptr[i + 1]);
                    let mut acc = ZERO;
                    for (c, v) in cols[a..b].iter().zip(&vals[a..b]) {
                        acc += v * x[*c];
                    }
                    out[i] += scale * acc;
                }
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.apply_into(x, &mut out);
        out
    }
}

/// `⟨x|y⟩`
#[inline]
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[inline]
pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockTruncation, JcOperators};

    #[test]
    fn matches_dense_product() {
        let ops = JcOperators::new(FockTruncation::new(5).unwrap());
        let m = ops.a.matrix() + &ops.sp.matrix().mapv(|z| z * C64::new(0.3, -1.2));
        let s = SparseOp::from_dense(&m);
        assert!(s.nnz() < m.len() / 3);
        let dense_like = SparseOp::from_dense(&Array2::from_shape_fn((7, 7), |(i, j)| C64::new((i * 7 + j) as f64, 1.0)));
        let y: Vec<C64> = (0..7).map(|k| C64::new(1.0, k as f64)).collect();
        let full = Array2::from_shape_fn((7, 7), |(i, j)| C64::new((i * 7 + j) as f64, 1.0)).dot(&ndarray::Array1::from(y.clone()));
        for (a, b) in dense_like.apply(&y).iter().zip(full.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
        let x: Vec<C64> = (0..12).map(|k| C64::new(k as f64, 1.0 - k as f64 * 0.5)).collect();
        let dense = m.dot(&ndarray::Array1::from(x.clone()));
        for (a, b) in s.apply(&x).iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
