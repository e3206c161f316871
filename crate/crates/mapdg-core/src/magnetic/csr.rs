//! Sparse complex matrices in CSR form with split real/imaginary planes.

use rayon::prelude::*;

use crate::dense::CMat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Structurally symmetric complex sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCsr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Scalar> ComplexCsr<T> {
    /// Builds from entries sorted by `(row, col)` with no duplicates.
    pub fn from_entries(n: usize, entries: &[(usize, usize, T, T)]) -> Result<Self> {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut re = Vec::with_capacity(entries.len());
        let mut im = Vec::with_capacity(entries.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, vr, vi) in entries {
            if r >= n || c >= n {
                return Err(Error::Shape(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            if let Some(p) = prev {
                if (r, c) <= p {
                    return Err(Error::Parameter("entries must be sorted and unique".into()));
                }
            }
            prev = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            re.push(vr);
            im.push(vi);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, col_idx, re, im })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T], &[T]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.re[span.clone()], &self.im[span])
    }

    /// Flat entry-index range of row `r`.
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// Flat index of entry `(r, c)` if stored.
    pub fn entry_index(&self, r: usize, c: usize) -> Option<usize> {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .binary_search(&c)
            .ok()
            .map(|off| span.start + off)
    }

    pub fn get(&self, r: usize, c: usize) -> Option<(T, T)> {
        self.entry_index(r, c).map(|i| (self.re[i], self.im[i]))
    }

    pub fn values(&self) -> (&[T], &[T]) {
        (&self.re, &self.im)
    }

    pub fn values_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.re, &mut self.im)
    }

    pub fn entry_iter(&self) -> impl Iterator<Item = (usize, usize, T, T)> + '_ {
        (0..self.n).flat_map(move |r| {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            span.map(move |i| (r, self.col_idx[i], self.re[i], self.im[i]))
        })
    }

    /// Largest deviation from `H[r][c] == conj(H[c][r])` over stored entries;
    /// an entry without a stored transpose counts with its full magnitude.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for (r, c, vr, vi) in self.entry_iter() {
            let (tr, ti) = self.get(c, r).unwrap_or((T::zero(), T::zero()));
            let dr = vr - tr;
            let di = vi + ti;
            worst = worst.max((dr * dr + di * di).sqrt());
        }
        worst
    }

    /// Complex matrix product `self * x` on split planes, row-parallel with
    /// a fixed per-row reduction order (bitwise reproducible across thread
    /// counts).
    pub fn spmm(&self, x: &CMat<T>) -> CMat<T> {
        assert_eq!(x.rows(), self.n, "spmm operand rows");
        let f = x.cols();
        let mut out = CMat::zeros(self.n, f);
        out.re
            .data_mut()
            .par_chunks_mut(f)
            .zip(out.im.data_mut().par_chunks_mut(f))
            .enumerate()
            .for_each(|(r, (out_re, out_im))| {
                let (cols, re, im) = self.row(r);
                for ((&c, &p), &q) in cols.iter().zip(re).zip(im) {
                    let xr = x.re.row(c);
                    let xi = x.im.row(c);
                    for j in 0..f {
                        out_re[j] += p * xr[j] - q * xi[j];
                        out_im[j] += p * xi[j] + q * xr[j];
                    }
                }
            });
        out
    }

    /// Complex matrix-vector product on split planes.
    pub fn spmv(&self, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]) {
        assert_eq!(xr.len(), self.n);
        for r in 0..self.n {
            let (cols, re, im) = self.row(r);
            let mut ar = T::zero();
            let mut ai = T::zero();
            for ((&c, &p), &q) in cols.iter().zip(re).zip(im) {
                ar += p * xr[c] - q * xi[c];
                ai += p * xi[c] + q * xr[c];
            }
            yr[r] = ar;
            yi[r] = ai;
        }
    }

    /// Max over rows of the absolute row sum; bounds every eigenvalue
    /// magnitude of a Hermitian matrix.
    pub fn abs_row_sum_max(&self) -> T {
        (0..self.n)
            .map(|r| {
                let (_, re, im) = self.row(r);
                re.iter()
                    .zip(im)
                    .map(|(&p, &q)| (p * p + q * q).sqrt())
                    .sum::<T>()
            })
            .fold(T::zero(), T::max)
    }
}
