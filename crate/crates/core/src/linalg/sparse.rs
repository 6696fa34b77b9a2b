//! Compressed sparse row storage and an ILU(0) preconditioner.

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

/// Square sparse matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            y[r] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `P A Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        let mut inv = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut b = TripletBuilder::new(self.n);
        for (new_r, &old_r) in perm.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.add(new_r, inv[c], v);
            }
        }
        b.build()
    }
}

/// Incomplete LU factorization with the sparsity pattern of the input,
/// optionally computed in a permuted ordering.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    factors: CsrMatrix,
    diag_pos: Vec<usize>,
    perm: Option<Vec<usize>>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::factor(a.clone(), None)
    }

    /// Factorizes `P A Pᵀ` with `perm[new] = old`.
    pub fn with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != a.n() {
            return Err(Error::Config("ordering length does not match matrix".into()));
        }
        Self::factor(a.permuted(&perm), Some(perm))
    }

    fn factor(mut m: CsrMatrix, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = m.n;
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            let (cols, _) = m.row(r);
            match cols.binary_search(&r) {
                Ok(k) => diag_pos[r] = m.row_ptr[r] + k,
                Err(_) => return Err(Error::Factorization(format!("missing diagonal in row {r}"))),
            }
        }
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for p in start..end {
                marker[m.cols[p]] = p;
            }
            for p in start..diag_pos[i] {
                let k = m.cols[p];
                let pivot = m.vals[diag_pos[k]];
                let factor = m.vals[p] / pivot;
                m.vals[p] = factor;
                for q in diag_pos[k] + 1..m.row_ptr[k + 1] {
                    let target = marker[m.cols[q]];
                    if target != usize::MAX {
                        m.vals[target] -= factor * m.vals[q];
                    }
                }
            }
            if m.vals[diag_pos[i]].abs() < 1e-300 {
                return Err(Error::Factorization(format!("zero pivot in row {i}")));
            }
            for p in start..end {
                marker[m.cols[p]] = usize::MAX;
            }
        }
        Ok(Self { factors: m, diag_pos, perm })
    }

    /// `z = (LU)⁻¹ r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = &self.factors;
        let n = m.n;
        let mut work: Vec<f64> = match &self.perm {
            Some(p) => p.iter().map(|&old| r[old]).collect(),
            None => r.to_vec(),
        };
        for i in 0..n {
            let mut s = work[i];
            for p in m.row_ptr[i]..self.diag_pos[i] {
                s -= m.vals[p] * work[m.cols[p]];
            }
            work[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = work[i];
            for p in self.diag_pos[i] + 1..m.row_ptr[i + 1] {
                s -= m.vals[p] * work[m.cols[p]];
            }
            work[i] = s / m.vals[self.diag_pos[i]];
        }
        match &self.perm {
            Some(p) => {
                for (new, &old) in p.iter().enumerate() {
                    z[old] = work[new];
                }
            }
            None => z.copy_from_slice(&work),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.5);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 1, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, -1.0);
        b.add(0, 0, 4.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        let a = laplacian_1d(12);
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; 12];
        a.matvec(&x, &mut b);
        for ilu in [Ilu0::new(&a).unwrap(), Ilu0::with_ordering(&a, (0..12).rev().collect()).unwrap()] {
            let mut z = vec![0.0; 12];
            ilu.apply(&b, &mut z);
            for (u, v) in z.iter().zip(&x) {
                assert!((u - v).abs() < 1e-13);
            }
        }
    }
}
