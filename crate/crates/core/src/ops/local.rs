//! Local (differential) part of the transformed Bates operator,
//!
//! ```text
//! L u = a u_xx + b u_yy + c u_xy + d u_x + e u_y + f u
//! a = σ/(2y)   b = σy³/2   c = −ρσy   d = (r − λ) − σ/(2y)
//! e = σy² + κy − κθy²/σ    f = 0
//! ```
//!
//! realized matrix-free as a composition of line operators. Rows on the
//! vertical (Dirichlet) boundaries are zero; the horizontal boundaries use
//! the homogeneous Neumann closures.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::model::BatesParams;

use super::line::{apply_rows, Closure, DerivativeKind, LineOperator};
use super::SpatialOrder;

/// Coefficients of `L`. They depend on `y` only and are stored per y-line.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoefficients {
    grid: Grid2D,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
}

impl LocalCoefficients {
    pub fn bates(grid: &Grid2D, p: &BatesParams) -> Self {
        let ys = grid.ys();
        let map = |g: &dyn Fn(f64) -> f64| ys.iter().map(|&y| g(y)).collect::<Vec<_>>();
        Self {
            grid: *grid,
            a: map(&|y| 0.5 * p.sigma / y),
            b: map(&|y| 0.5 * p.sigma * y * y * y),
            c: map(&|y| -p.rho * p.sigma * y),
            d: map(&|y| (p.rate - p.lambda) - 0.5 * p.sigma / y),
            e: map(&|y| p.sigma * y * y + p.kappa * y - p.kappa * p.theta * y * y / p.sigma),
            f: vec![0.0; ys.len()],
        }
    }

    /// Spatially constant coefficients.
    pub fn constant(grid: &Grid2D, a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        let n = grid.col_len();
        Self {
            grid: *grid,
            a: vec![a; n],
            b: vec![b; n],
            c: vec![c; n],
            d: vec![d; n],
            e: vec![e; n],
            f: vec![f; n],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// `(a, b, c, d, e, f)` at node `(i, j)`.
    pub fn at(&self, _i: usize, j: usize) -> [f64; 6] {
        [self.a[j], self.b[j], self.c[j], self.d[j], self.e[j], self.f[j]]
    }
}

/// All first and second derivatives of a field.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub ux: GridField,
    pub uy: GridField,
    pub uxx: GridField,
    pub uyy: GridField,
    pub uxy: GridField,
}

/// Matrix-free `L_h` on a fixed grid.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    grid: Grid2D,
    coeffs: LocalCoefficients,
    order: SpatialOrder,
    dx: LineOperator,
    dxx: LineOperator,
    dy: LineOperator,
    dyy: LineOperator,
}

impl LocalOperator {
    /// Operator with one-sided closures in x and Neumann closures in y.
    pub fn new(coeffs: LocalCoefficients, order: SpatialOrder) -> Result<Self> {
        Self::with_y_closure(coeffs, order, Closure::Neumann)
    }

    pub fn with_y_closure(coeffs: LocalCoefficients, order: SpatialOrder, y_closure: Closure) -> Result<Self> {
        let g = *coeffs.grid();
        let dx = LineOperator::new(DerivativeKind::First, order, Closure::OneSided, g.hx(), g.row_len())?;
        let dxx = LineOperator::new(DerivativeKind::Second, order, Closure::OneSided, g.hx(), g.row_len())?;
        let dy = LineOperator::new(DerivativeKind::First, order, y_closure, g.hy(), g.col_len())?;
        let dyy = LineOperator::new(DerivativeKind::Second, order, y_closure, g.hy(), g.col_len())?;
        Ok(Self { grid: g, coeffs, order, dx, dxx, dy, dyy })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn order(&self) -> SpatialOrder {
        self.order
    }
    pub fn coefficients(&self) -> &LocalCoefficients {
        &self.coeffs
    }

    fn check(&self, u: &GridField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::Config("field grid does not match operator grid".into()));
        }
        Ok(())
    }

    /// x-derivative with the operator's accuracy.
    pub fn dx_into(&self, u: &[f64], out: &mut [f64]) {
        apply_rows(&self.dx, u, out, self.grid.row_len());
    }

    pub fn dx(&self, u: &GridField) -> Result<GridField> {
        self.check(u)?;
        let mut out = GridField::zeros(&self.grid);
        self.dx_into(u.values(), out.values_mut());
        Ok(out)
    }

    pub fn derivatives(&self, u: &GridField) -> Result<Derivatives> {
        self.check(u)?;
        let g = &self.grid;
        let w = g.row_len();
        let mut ux = GridField::zeros(g);
        let mut uxx = GridField::zeros(g);
        let mut uy = GridField::zeros(g);
        let mut uyy = GridField::zeros(g);
        let mut uxy = GridField::zeros(g);
        apply_rows(&self.dx, u.values(), ux.values_mut(), w);
        apply_rows(&self.dxx, u.values(), uxx.values_mut(), w);
        self.dy.apply_columns(u.values(), uy.values_mut(), w);
        self.dyy.apply_columns(u.values(), uyy.values_mut(), w);
        apply_rows(&self.dx, uy.values(), uxy.values_mut(), w);
        Ok(Derivatives { ux, uy, uxx, uyy, uxy })
    }

    /// `out = L_h u` on raw node vectors; zero on the Dirichlet columns.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let w = g.row_len();
        let n = g.node_count();
        let mut ux = vec![0.0; n];
        let mut second = vec![0.0; n];
        let mut uy = vec![0.0; n];
        let mut uxy = vec![0.0; n];
        apply_rows(&self.dx, u, &mut ux, w);
        self.dy.apply_columns(u, &mut uy, w);
        apply_rows(&self.dx, &uy, &mut uxy, w);
        let cf = &self.coeffs;
        for j in 0..=g.ny() {
            let r = j * w..(j + 1) * w;
            let o = &mut out[r.clone()];
            let (c, d, e, f) = (cf.c[j], cf.d[j], cf.e[j], cf.f[j]);
            for (k, ((ov, &x1), (&y1, &xy))) in o.iter_mut().zip(&ux[r.clone()]).zip(uy[r.clone()].iter().zip(&uxy[r.clone()])).enumerate() {
                *ov = c * xy + d * x1 + e * y1 + f * u[j * w + k];
            }
        }
        apply_rows(&self.dxx, u, &mut second, w);
        for j in 0..=g.ny() {
            let a = cf.a[j];
            for k in j * w..(j + 1) * w {
                out[k] += a * second[k];
            }
        }
        self.dyy.apply_columns(u, &mut second, w);
        for j in 0..=g.ny() {
            let b = cf.b[j];
            let row = &mut out[j * w..(j + 1) * w];
            for (ov, &s) in row.iter_mut().zip(&second[j * w..(j + 1) * w]) {
                *ov += b * s;
            }
            row[0] = 0.0;
            row[w - 1] = 0.0;
        }
    }

    pub fn apply(&self, u: &GridField) -> Result<GridField> {
        self.check(u)?;
        let mut out = GridField::zeros(&self.grid);
        self.apply_into(u.values(), out.values_mut());
        Ok(out)
    }

    /// Explicit sparse matrix of `I − factor · L_h` built from the
    /// second-order centered stencils, with identity rows on the Dirichlet
    /// columns. For [`SpatialOrder::Centered2`] this is exactly the
    /// implicit operator; for the compact scheme it is a spectrally close
    /// surrogate used for preconditioning.
    pub fn centered_system_matrix(&self, factor: f64) -> Result<CsrMatrix> {
        let g = &self.grid;
        let closure_y = self.dy.closure();
        let dx = LineOperator::new(DerivativeKind::First, SpatialOrder::Centered2, Closure::OneSided, g.hx(), g.row_len())?;
        let dxx = LineOperator::new(DerivativeKind::Second, SpatialOrder::Centered2, Closure::OneSided, g.hx(), g.row_len())?;
        let dy = LineOperator::new(DerivativeKind::First, SpatialOrder::Centered2, closure_y, g.hy(), g.col_len())?;
        let dyy = LineOperator::new(DerivativeKind::Second, SpatialOrder::Centered2, closure_y, g.hy(), g.col_len())?;
        let mut t = TripletBuilder::new(g.node_count());
        for j in 0..=g.ny() {
            let [a, b, c, d, e, f] = self.coeffs.at(0, j);
            let ry = dy.difference_row(j);
            let ryy = dyy.difference_row(j);
            for i in 0..=g.nx() {
                let row = g.index(i, j);
                t.add(row, row, 1.0);
                if g.is_dirichlet(i) {
                    continue;
                }
                let rx = dx.difference_row(i);
                let rxx = dxx.difference_row(i);
                for &(k, w) in &rxx {
                    t.add(row, g.index(k, j), -factor * a * w);
                }
                for &(k, w) in &rx {
                    t.add(row, g.index(k, j), -factor * d * w);
                }
                for &(k, w) in &ryy {
                    t.add(row, g.index(i, k), -factor * b * w);
                }
                for &(k, w) in &ry {
                    t.add(row, g.index(i, k), -factor * e * w);
                }
                for &(ky, wy) in &ry {
                    for &(kx, wx) in &rx {
                        t.add(row, g.index(kx, ky), -factor * c * wx * wy);
                    }
                }
                t.add(row, row, -factor * f);
            }
        }
        Ok(t.build())
    }

    /// Debug dump `i,j,Lu`.
    pub fn write_action_csv<W: Write>(&self, u: &GridField, mut w: W) -> Result<()> {
        let lu = self.apply(u)?;
        let io = |e: std::io::Error| Error::Config(e.to_string());
        writeln!(w, "i,j,Lu").map_err(io)?;
        for j in 0..=self.grid.ny() {
            for i in 0..=self.grid.nx() {
                writeln!(w, "{i},{j},{}", lu.get(i, j)).map_err(io)?;
            }
        }
        Ok(())
    }
}

/// `L_h U` for the given coefficients and accuracy.
pub fn local_apply(field: &GridField, coeffs: &LocalCoefficients, order: SpatialOrder) -> Result<GridField> {
    if field.grid() != coeffs.grid() {
        return Err(Error::Config("coefficients and field live on different grids".into()));
    }
    LocalOperator::new(coeffs.clone(), order)?.apply(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    #[test]
    fn constant_field_is_annihilated() {
        let g = Grid2D::new(Domain::standard(), 12, 10).unwrap();
        let c = LocalCoefficients::bates(&g, &BatesParams::reference());
        for order in [SpatialOrder::Compact4, SpatialOrder::Centered2] {
            let out = local_apply(&GridField::constant(&g, 0.7), &c, order).unwrap();
            assert!(out.max_abs() < 1e-10, "{order:?}");
        }
    }

    #[test]
    fn convection_coefficient_at_unit_y() {
        let g = Grid2D::new(Domain::standard(), 8, 8).unwrap();
        let c = LocalCoefficients::bates(&g, &BatesParams::reference());
        assert!((c.e[0] - 1.71).abs() < 1e-12);
        assert!(c.a.iter().chain(&c.b).all(|&v| v > 0.0));
        assert!(c.f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centered_matrix_matches_matrix_free_action() {
        let g = Grid2D::new(Domain::figure1(), 9, 7).unwrap();
        let op = LocalOperator::new(LocalCoefficients::bates(&g, &BatesParams::reference()), SpatialOrder::Centered2).unwrap();
        let k = 0.013;
        let m = op.centered_system_matrix(k).unwrap();
        let u = GridField::from_fn(&g, |x, y| (x + 0.3 * y).sin() * y);
        let lu = op.apply(&u).unwrap();
        let mut mu = vec![0.0; g.node_count()];
        m.matvec(u.values(), &mut mu);
        for idx in 0..g.node_count() {
            let expect = u.values()[idx] - k * lu.values()[idx];
            assert!((mu[idx] - expect).abs() < 1e-12, "{idx}");
        }
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let g = Grid2D::new(Domain::standard(), 8, 8).unwrap();
        let h = Grid2D::new(Domain::standard(), 10, 8).unwrap();
        let c = LocalCoefficients::bates(&g, &BatesParams::reference());
        assert!(local_apply(&GridField::zeros(&h), &c, SpatialOrder::Compact4).is_err());
    }
}
