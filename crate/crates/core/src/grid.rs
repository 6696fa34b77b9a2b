//! Uniform tensor-product grid and nodal fields.
//!
//! Nodes are stored row-major with `x` fastest: the value at `(i, j)` sits
//! at `j * (nx + 1) + i`. Boundary nodes are stored like any other node.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{self, BatesParams, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    domain: Domain,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    /// Smallest admissible interval count per direction.
    pub const MIN_INTERVALS: usize = 4;

    pub fn new(domain: Domain, nx: usize, ny: usize) -> Result<Self> {
        if !(domain.x_max > domain.x_min) || !(domain.y_max > domain.y_min) {
            return Err(Error::Config(format!("empty domain {domain:?}")));
        }
        if !(domain.y_min > 0.0) {
            return Err(Error::Domain(format!(
                "y_min must be positive (coefficients are singular at y = 0), got {}",
                domain.y_min
            )));
        }
        if nx < Self::MIN_INTERVALS || ny < Self::MIN_INTERVALS {
            return Err(Error::Config(format!(
                "need at least {} intervals per direction, got {nx} x {ny}",
                Self::MIN_INTERVALS
            )));
        }
        let hx = (domain.x_max - domain.x_min) / nx as f64;
        let hy = (domain.y_max - domain.y_min) / ny as f64;
        Ok(Self { domain, nx, ny, hx, hy })
    }

    /// Grid with spacing as close as possible to `h` in both directions.
    pub fn with_spacing(domain: Domain, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("spacing must be positive, got {h}")));
        }
        let nx = ((domain.x_max - domain.x_min) / h).round() as usize;
        let ny = ((domain.y_max - domain.y_min) / h).round() as usize;
        Self::new(domain, nx, ny)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn x_min(&self) -> f64 {
        self.domain.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.domain.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.domain.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.domain.y_max
    }

    /// Nodes per x-line.
    pub fn row_len(&self) -> usize {
        self.nx + 1
    }
    /// Nodes per y-line.
    pub fn col_len(&self) -> usize {
        self.ny + 1
    }
    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.domain.x_min + i as f64 * self.hx
    }
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.domain.y_min + j as f64 * self.hy
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn coords_of(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| self.x(i)).collect()
    }
    pub fn ys(&self) -> Vec<f64> {
        (0..=self.ny).map(|j| self.y(j)).collect()
    }

    /// Nearest node index to `x` (clamped to the grid).
    pub fn nearest_i(&self, x: f64) -> usize {
        let t = ((x - self.domain.x_min) / self.hx).round();
        t.clamp(0.0, self.nx as f64) as usize
    }
    pub fn nearest_j(&self, y: f64) -> usize {
        let t = ((y - self.domain.y_min) / self.hy).round();
        t.clamp(0.0, self.ny as f64) as usize
    }

    /// True when `i` is on a vertical (Dirichlet) boundary.
    #[inline]
    pub fn is_dirichlet(&self, i: usize) -> bool {
        i == 0 || i == self.nx
    }

    /// Whether every node of `coarse` is also a node of `self`, returning
    /// the integer refinement factors.
    pub fn nesting_factors(&self, coarse: &Grid2D) -> Option<(usize, usize)> {
        if self.domain != coarse.domain || self.nx % coarse.nx != 0 || self.ny % coarse.ny != 0 {
            return None;
        }
        Some((self.nx / coarse.nx, self.ny / coarse.ny))
    }
}

/// Nodal values on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self { grid: *grid, values: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: &Grid2D, c: f64) -> Self {
        Self { grid: *grid, values: vec![c; grid.node_count()] }
    }

    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..=grid.ny() {
            let y = grid.y(j);
            for i in 0..=grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid: *grid, values }
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "field length {} does not match {} grid nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid: *grid, values })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.row_len();
        &self.values[j * n..(j + 1) * n]
    }

    /// Copy of the x-line (fixed `j`) or y-line (fixed `i`) at `index`.
    pub fn line(&self, direction: Direction, index: usize) -> Result<Vec<f64>> {
        match direction {
            Direction::X => {
                if index > self.grid.ny() {
                    return Err(Error::Index { index, len: self.grid.col_len() });
                }
                Ok(self.row(index).to_vec())
            }
            Direction::Y => {
                if index > self.grid.nx() {
                    return Err(Error::Index { index, len: self.grid.row_len() });
                }
                Ok((0..=self.grid.ny()).map(|j| self.get(index, j)).collect())
            }
        }
    }

    pub fn set_line(&mut self, direction: Direction, index: usize, line: &[f64]) -> Result<()> {
        let (count, len) = match direction {
            Direction::X => (self.grid.col_len(), self.grid.row_len()),
            Direction::Y => (self.grid.row_len(), self.grid.col_len()),
        };
        if index >= count {
            return Err(Error::Index { index, len: count });
        }
        if line.len() != len {
            return Err(Error::Config(format!("line length {} != {}", line.len(), len)));
        }
        match direction {
            Direction::X => {
                let start = self.grid.index(0, index);
                self.values[start..start + len].copy_from_slice(line);
            }
            Direction::Y => {
                for (j, &v) in line.iter().enumerate() {
                    self.set(index, j, v);
                }
            }
        }
        Ok(())
    }

    fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &GridField) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&mut self, other: &GridField) -> Result<()> {
        self.axpy(1.0, other)
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Injection onto a coarser grid whose nodes are a subset of ours.
    pub fn restrict_to(&self, coarse: &Grid2D) -> Result<GridField> {
        let (rx, ry) = self
            .grid
            .nesting_factors(coarse)
            .ok_or_else(|| Error::Config("grids are not nested".into()))?;
        Ok(GridField::from_values(
            coarse,
            (0..=coarse.ny())
                .flat_map(|j| (0..=coarse.nx()).map(move |i| (i, j)))
                .map(|(i, j)| self.get(i * rx, j * ry))
                .collect(),
        )?)
    }

    /// Writes `x,y,u` rows, adding `S,v,V` when `unscale` carries the model
    /// parameters and the time to maturity of the field.
    pub fn write_csv<W: Write>(&self, mut w: W, unscale: Option<(&BatesParams, f64)>) -> std::io::Result<()> {
        match unscale {
            Some(_) => writeln!(w, "x,y,u,S,v,V")?,
            None => writeln!(w, "x,y,u")?,
        }
        for j in 0..=self.grid.ny() {
            let y = self.grid.y(j);
            for i in 0..=self.grid.nx() {
                let x = self.grid.x(i);
                let u = self.get(i, j);
                match unscale {
                    Some((p, tau)) => {
                        let s = p.strike * x.exp();
                        let v = p.sigma / y;
                        writeln!(w, "{x},{y},{u},{s},{v},{}", model::unscale_value(u, tau, p))?
                    }
                    None => writeln!(w, "{x},{y},{u}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::initial_condition;
    use proptest::prelude::*;

    #[test]
    fn table_grid_has_1681_nodes() {
        let g = Grid2D::new(Domain::standard(), 40, 40).unwrap();
        assert!((g.hx() - 0.1).abs() < 1e-15 && (g.hy() - 0.1).abs() < 1e-15);
        assert_eq!(g.node_count(), 1681);
        let g2 = Grid2D::with_spacing(Domain::figure1(), 0.1).unwrap();
        assert_eq!(g2.node_count(), 1681);
    }

    #[test]
    fn small_grid_and_guards() {
        let d = Domain { x_min: 0.0, x_max: 1.0, y_min: 1.0, y_max: 2.0 };
        let g = Grid2D::new(d, 4, 4).unwrap();
        assert_eq!(g.hx(), 0.25);
        assert_eq!(g.hy(), 0.25);
        let zero = Domain { y_min: 0.0, ..d };
        assert!(matches!(Grid2D::new(zero, 4, 4), Err(Error::Domain(_))));
        assert!(matches!(Grid2D::new(d, 3, 4), Err(Error::Config(_))));
    }

    #[test]
    fn payoff_lines_are_y_independent() {
        let g = Grid2D::new(Domain::standard(), 8, 6).unwrap();
        let u = initial_condition(&g);
        let first = u.line(Direction::X, 0).unwrap();
        for j in 1..=g.ny() {
            assert_eq!(u.line(Direction::X, j).unwrap(), first);
        }
        for i in 0..=g.nx() {
            let col = u.line(Direction::Y, i).unwrap();
            assert!(col.iter().all(|&v| v == col[0]));
        }
        assert!(matches!(u.line(Direction::Y, 9), Err(Error::Index { .. })));
        assert!(matches!(u.line(Direction::X, 7), Err(Error::Index { .. })));
    }

    #[test]
    fn restriction_matches_shared_nodes() {
        let d = Domain::standard();
        let fine = Grid2D::new(d, 16, 8).unwrap();
        let coarse = Grid2D::new(d, 4, 4).unwrap();
        let f = GridField::from_fn(&fine, |x, y| x * x + y);
        let c = f.restrict_to(&coarse).unwrap();
        let direct = GridField::from_fn(&coarse, |x, y| x * x + y);
        for (a, b) in c.values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(f.restrict_to(&Grid2D::new(d, 5, 4).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn index_maps_are_inverse(nx in 4usize..30, ny in 4usize..30, seed in 0usize..10_000) {
            let g = Grid2D::new(Domain::standard(), nx, ny).unwrap();
            let k = seed % g.node_count();
            let (i, j) = g.coords_of(k);
            prop_assert_eq!(g.index(i, j), k);
            prop_assert_eq!(g.nearest_i(g.x(i)), i);
            prop_assert_eq!(g.nearest_j(g.y(j)), j);
        }

        #[test]
        fn line_round_trip_and_axpy(nx in 4usize..12, ny in 4usize..12, idx in 0usize..5, a in -3.0f64..3.0) {
            let g = Grid2D::new(Domain::standard(), nx, ny).unwrap();
            let mut u = GridField::from_fn(&g, |x, y| x.sin() + y);
            let w = GridField::from_fn(&g, |x, y| x * y);
            let line: Vec<f64> = (0..=ny).map(|j| j as f64 * 0.5).collect();
            u.set_line(Direction::Y, idx, &line).unwrap();
            prop_assert_eq!(u.line(Direction::Y, idx).unwrap(), line);
            let mut v = u.clone();
            v.axpy(a, &w).unwrap();
            let lv = v.line(Direction::X, idx).unwrap();
            let lu = u.line(Direction::X, idx).unwrap();
            let lw = w.line(Direction::X, idx).unwrap();
            for k in 0..lv.len() {
                prop_assert_eq!(lv[k], lu[k] + a * lw[k]);
            }
        }
    }
}
