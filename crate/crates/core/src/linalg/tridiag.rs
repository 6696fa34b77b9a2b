//! Thomas algorithm with a reusable factorization.

use crate::error::{Error, Result};

/// Factorized tridiagonal matrix `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`.
///
/// The elimination runs without pivoting, so the matrix must be
/// nonsingular with nonzero pivots (strict diagonal dominance suffices).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_mod: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::Config("tridiagonal bands must have equal, nonzero length".into()));
        }
        let mut inv_pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i] * prev };
            if pivot.abs() < 1e-300 {
                return Err(Error::Factorization(format!("zero pivot in row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = upper[i] * inv_pivot[i];
            prev = upper_mod[i];
        }
        Ok(Self { lower: lower.to_vec(), inv_pivot, upper_mod })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, d: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(d.len(), n);
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - self.lower[i] * d[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.upper_mod[i] * d[i + 1];
        }
    }

    /// Solves one system per column of a row-major block whose rows are the
    /// line positions: `data[r * width + c]` is entry `r` of system `c`.
    pub fn solve_columns(&self, data: &mut [f64], width: usize) {
        let n = self.len();
        debug_assert_eq!(data.len(), n * width);
        let p0 = self.inv_pivot[0];
        data[..width].iter_mut().for_each(|v| *v *= p0);
        for i in 1..n {
            let (done, rest) = data.split_at_mut(i * width);
            let prev = &done[(i - 1) * width..];
            let cur = &mut rest[..width];
            let (l, p) = (self.lower[i], self.inv_pivot[i]);
            for (c, &q) in cur.iter_mut().zip(prev) {
                *c = (*c - l * q) * p;
            }
        }
        for i in (0..n - 1).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * width);
            let cur = &mut head[i * width..];
            let next = &tail[..width];
            let u = self.upper_mod[i];
            for (c, &q) in cur.iter_mut().zip(next) {
                *c -= u * q;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(l: &[f64], d: &[f64], u: &[f64], x: &[f64]) -> Vec<f64> {
        let n = d.len();
        (0..n)
            .map(|i| {
                let mut s = d[i] * x[i];
                if i > 0 {
                    s += l[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += u[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let n = 9;
        let l: Vec<f64> = (0..n).map(|i| 0.25 + 0.01 * i as f64).collect();
        let d = vec![1.0; n];
        let u: Vec<f64> = (0..n).map(|i| 0.25 - 0.01 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = dense_apply(&l, &d, &u, &x);
        let t = Tridiagonal::new(&l, &d, &u).unwrap();
        t.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn column_solve_matches_line_solve() {
        let n = 7;
        let width = 5;
        let l = vec![1.0 / 12.0; n];
        let d = vec![10.0 / 12.0; n];
        let u = vec![1.0 / 12.0; n];
        let t = Tridiagonal::new(&l, &d, &u).unwrap();
        let data: Vec<f64> = (0..n * width).map(|k| ((k * 7) % 11) as f64 - 5.0).collect();
        let mut block = data.clone();
        t.solve_columns(&mut block, width);
        for c in 0..width {
            let mut line: Vec<f64> = (0..n).map(|r| data[r * width + c]).collect();
            t.solve_in_place(&mut line);
            for r in 0..n {
                assert_eq!(line[r], block[r * width + c]);
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let err = Tridiagonal::new(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Factorization(_)));
    }
}
