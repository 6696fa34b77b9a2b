//! Banded LU factorization with partial pivoting.
//!
//! Row `i` keeps the columns `i - kl ..= i + kl + ku`; row exchanges widen
//! the upper band of `U` to `kl + ku`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factorizes the matrix defined by `entries` (duplicates summed).
    /// Entries outside the declared band are rejected.
    pub fn factor(n: usize, kl: usize, ku: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            rows: vec![0.0; n * width],
            multipliers: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        for (i, j, v) in entries {
            if i >= n || j >= n || j + kl < i || j > i + ku {
                return Err(Error::Factorization(format!("entry ({i}, {j}) outside band")));
            }
            *lu.at_mut(i, j) += v;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[self.pos(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let p = self.pos(i, j);
        &mut self.rows[p]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut scale = 0.0f64;
        for v in &self.rows {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale || best == 0.0 {
                return Err(Error::Factorization(format!("singular matrix at column {k}")));
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.pos(k, j), self.pos(p, j));
                    self.rows.swap(a, b);
                }
            }
            let inv = 1.0 / self.at(k, k);
            for i in k + 1..=last_row {
                let m = self.at(i, k) * inv;
                self.multipliers[k * kl + (i - k - 1)] = m;
                *self.at_mut(i, k) = 0.0;
                if m != 0.0 {
                    let base_k = self.pos(k, k + 1);
                    let base_i = self.pos(i, k + 1);
                    for off in 0..last_col - k {
                        self.rows[base_i + off] -= m * self.rows[base_k + off];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.multipliers[k * kl + (i - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let base = self.pos(k, k);
            let mut s = b[k];
            for off in 1..=last_col - k {
                s -= self.rows[base + off] * b[k + off];
            }
            b[k] = s / self.rows[base];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_solution_with_pivoting() {
        // pentadiagonal, small diagonal forces row exchanges
        let n = 15;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, if i % 3 == 0 { 1e-3 } else { 2.0 }));
            for d in 1..=2usize {
                if i >= d {
                    entries.push((i, i - d, 1.0 + 0.1 * d as f64 + 0.01 * i as f64));
                }
                if i + d < n {
                    entries.push((i, i + d, -0.7 + 0.05 * i as f64));
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b = vec![0.0; n];
        for &(i, j, v) in &entries {
            b[i] += v * x[j];
        }
        let lu = BandedLu::factor(n, 2, 2, entries).unwrap();
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn rejects_out_of_band_and_singular() {
        assert!(BandedLu::factor(3, 1, 1, vec![(0, 2, 1.0)]).is_err());
        assert!(BandedLu::factor(2, 1, 1, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).is_err());
    }
}
