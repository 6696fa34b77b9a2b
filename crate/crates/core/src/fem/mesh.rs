//! Structured rectangular mesh of biquadratic elements.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::Domain;

/// `E_x × E_y` congruent rectangles; the nodes form the
/// `(2E_x+1) × (2E_y+1)` lattice numbered x-fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemMesh {
    domain: Domain,
    ex: usize,
    ey: usize,
}

impl FemMesh {
    pub fn new(domain: Domain, ex: usize, ey: usize) -> Result<Self> {
        domain.validate()?;
        if ex < 2 || ey < 2 {
            return Err(Error::Config(format!("need at least 2 elements per direction, got {ex} x {ey}")));
        }
        Ok(Self { domain, ex, ey })
    }

    /// Elements of side `h` (rounded to the nearest count).
    pub fn with_element_size(domain: Domain, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("element size must be positive, got {h}")));
        }
        let ex = ((domain.x_max - domain.x_min) / h).round() as usize;
        let ey = ((domain.y_max - domain.y_min) / h).round() as usize;
        Self::new(domain, ex, ey)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn elements_x(&self) -> usize {
        self.ex
    }
    pub fn elements_y(&self) -> usize {
        self.ey
    }
    pub fn element_width(&self) -> f64 {
        (self.domain.x_max - self.domain.x_min) / self.ex as f64
    }
    pub fn element_height(&self) -> f64 {
        (self.domain.y_max - self.domain.y_min) / self.ey as f64
    }

    /// Nodes per lattice row.
    pub fn row_len(&self) -> usize {
        2 * self.ex + 1
    }
    pub fn col_len(&self) -> usize {
        2 * self.ey + 1
    }

    pub fn dof(&self) -> usize {
        self.row_len() * self.col_len()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.row_len() + i
    }

    /// Global nodes of element `(ex, ey)`, local index `a + 3b`.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 9] {
        let mut out = [0; 9];
        for b in 0..3 {
            for a in 0..3 {
                out[a + 3 * b] = self.node(2 * ex + a, 2 * ey + b);
            }
        }
        out
    }

    /// Lower-left corner of element `(ex, ey)`.
    pub fn element_origin(&self, ex: usize, ey: usize) -> (f64, f64) {
        (
            self.domain.x_min + ex as f64 * self.element_width(),
            self.domain.y_min + ey as f64 * self.element_height(),
        )
    }

    /// Vertical boundaries carry Dirichlet data.
    pub fn is_dirichlet(&self, node: usize) -> bool {
        let i = node % self.row_len();
        i == 0 || i == 2 * self.ex
    }

    /// The node lattice as a finite-difference grid, for output and
    /// comparison against grid references.
    pub fn lattice(&self) -> Result<Grid2D> {
        Grid2D::new(self.domain, 2 * self.ex, 2 * self.ey)
    }
}

/// Quadratic Lagrange shape functions on `[−1, 1]` with nodes −1, 0, 1.
#[inline]
pub fn shape(xi: f64) -> [f64; 3] {
    [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)]
}

#[inline]
pub fn shape_derivative(xi: f64) -> [f64; 3] {
    [xi - 0.5, -2.0 * xi, xi + 0.5]
}

/// Three-point Gauss rule on `[−1, 1]`.
pub const GAUSS_POINTS: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
pub const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_count() {
        let m = FemMesh::new(Domain::standard(), 40, 40).unwrap();
        assert_eq!(m.dof(), 6561);
        let m = FemMesh::with_element_size(Domain::standard(), 0.1).unwrap();
        assert_eq!(m.elements_x(), 40);
        assert!(FemMesh::new(Domain::standard(), 1, 4).is_err());
    }

    #[test]
    fn element_connectivity() {
        let m = FemMesh::new(Domain::standard(), 3, 2).unwrap();
        let n = m.element_nodes(1, 1);
        assert_eq!(n[0], m.node(2, 2));
        assert_eq!(n[8], m.node(4, 4));
        assert!(m.is_dirichlet(m.node(0, 3)));
        assert!(m.is_dirichlet(m.node(6, 0)));
        assert!(!m.is_dirichlet(m.node(3, 0)));
    }

    #[test]
    fn shapes_partition_unity_and_gauss_exactness() {
        for xi in [-1.0, -0.3, 0.0, 0.8] {
            assert!((shape(xi).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(shape_derivative(xi).iter().sum::<f64>().abs() < 1e-15);
        }
        let int = |p: i32| GAUSS_POINTS.iter().zip(GAUSS_WEIGHTS).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(4) - 0.4).abs() < 1e-15);
        assert!(int(5).abs() < 1e-15);
    }
}
