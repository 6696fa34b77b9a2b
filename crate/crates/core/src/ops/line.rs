//! One-dimensional derivative operators `w = M⁻¹ D u`.
//!
//! Compact interior rows:
//!
//! ```text
//! first:   ¼ w[i-1] + w[i] + ¼ w[i+1]            = (u[i+1] − u[i-1]) / 2h
//! second:  (w[i-1] + 10 w[i] + w[i+1]) / 12      = (u[i-1] − 2u[i] + u[i+1]) / h²
//! ```
//!
//! Centered operators use `M = I`. Boundary rows are explicit one-sided
//! formulas (so `M` stays strictly diagonally dominant):
//!
//! * [`Closure::OneSided`]: fourth-order (compact) or second-order
//!   (centered) one-sided differences.
//! * [`Closure::Neumann`]: homogeneous Neumann data, `w = 0` for the first
//!   derivative and a one-sided second derivative that uses `u' = 0`.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};
use crate::linalg::Tridiagonal;

use super::SpatialOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeKind {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    OneSided,
    Neumann,
}

// Left-boundary stencils in units of 1/h (first) or 1/h² (second). The
// right boundary mirrors them, with a sign flip for the first derivative.
const C4_FIRST_ONE_SIDED: [f64; 5] = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
const C4_SECOND_ONE_SIDED: [f64; 6] = [15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0];
const C4_SECOND_NEUMANN: [f64; 5] = [-415.0 / 72.0, 8.0, -3.0, 8.0 / 9.0, -0.125];
const C2_FIRST_ONE_SIDED: [f64; 3] = [-1.5, 2.0, -0.5];
const C2_SECOND_ONE_SIDED: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
const C2_SECOND_NEUMANN: [f64; 3] = [-3.5, 4.0, -0.5];
const ZERO: [f64; 0] = [];

/// Derivative operator along one grid line.
#[derive(Debug, Clone)]
pub struct LineOperator {
    kind: DerivativeKind,
    order: SpatialOrder,
    closure: Closure,
    h: f64,
    len: usize,
    mass: Option<Tridiagonal>,
}

impl LineOperator {
    pub fn new(kind: DerivativeKind, order: SpatialOrder, closure: Closure, h: f64, len: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("line spacing must be positive, got {h}")));
        }
        let boundary_len = Self::boundary_stencil_for(kind, order, closure).len();
        let min_len = boundary_len.max(3);
        if len < min_len {
            return Err(Error::Config(format!(
                "{kind:?} derivative ({order:?}, {closure:?}) needs at least {min_len} nodes, got {len}"
            )));
        }
        let mass = match order {
            SpatialOrder::Centered2 => None,
            SpatialOrder::Compact4 => {
                let (off, mid) = match kind {
                    DerivativeKind::First => (0.25, 1.0),
                    DerivativeKind::Second => (1.0 / 12.0, 10.0 / 12.0),
                };
                let mut lower = vec![off; len];
                let mut diag = vec![mid; len];
                let mut upper = vec![off; len];
                lower[0] = 0.0;
                upper[len - 1] = 0.0;
                // explicit boundary rows
                for b in [0, len - 1] {
                    lower[b] = 0.0;
                    upper[b] = 0.0;
                    diag[b] = 1.0;
                }
                Some(Tridiagonal::new(&lower, &diag, &upper)?)
            }
        };
        Ok(Self { kind, order, closure, h, len, mass })
    }

    fn boundary_stencil_for(kind: DerivativeKind, order: SpatialOrder, closure: Closure) -> &'static [f64] {
        use DerivativeKind::*;
        match (order, kind, closure) {
            (_, First, Closure::Neumann) => &ZERO,
            (SpatialOrder::Compact4, First, Closure::OneSided) => &C4_FIRST_ONE_SIDED,
            (SpatialOrder::Compact4, Second, Closure::OneSided) => &C4_SECOND_ONE_SIDED,
            (SpatialOrder::Compact4, Second, Closure::Neumann) => &C4_SECOND_NEUMANN,
            (SpatialOrder::Centered2, First, Closure::OneSided) => &C2_FIRST_ONE_SIDED,
            (SpatialOrder::Centered2, Second, Closure::OneSided) => &C2_SECOND_ONE_SIDED,
            (SpatialOrder::Centered2, Second, Closure::Neumann) => &C2_SECOND_NEUMANN,
        }
    }

    pub fn kind(&self) -> DerivativeKind {
        self.kind
    }
    pub fn order(&self) -> SpatialOrder {
        self.order
    }
    pub fn closure(&self) -> Closure {
        self.closure
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn boundary_stencil(&self) -> &'static [f64] {
        Self::boundary_stencil_for(self.kind, self.order, self.closure)
    }

    fn scale(&self) -> f64 {
        match self.kind {
            DerivativeKind::First => 1.0 / self.h,
            DerivativeKind::Second => 1.0 / (self.h * self.h),
        }
    }

    /// Sign applied to the mirrored stencil at the right end.
    fn mirror_sign(&self) -> f64 {
        match self.kind {
            DerivativeKind::First => -1.0,
            DerivativeKind::Second => 1.0,
        }
    }

    /// Interior difference weights `(left, centre, right)` before scaling.
    fn interior_weights(&self) -> (f64, f64, f64) {
        match (self.kind, self.order) {
            (DerivativeKind::First, SpatialOrder::Compact4) => (-0.75, 0.0, 0.75),
            (DerivativeKind::First, SpatialOrder::Centered2) => (-0.5, 0.0, 0.5),
            (DerivativeKind::Second, _) => (1.0, -2.0, 1.0),
        }
    }

    /// Row `i` of the explicit difference operator `D` as `(index, weight)`.
    pub fn difference_row(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.len - 1;
        let s = self.scale();
        if i == 0 {
            self.boundary_stencil().iter().enumerate().map(|(k, &c)| (k, c * s)).collect()
        } else if i == n {
            let sign = self.mirror_sign();
            self.boundary_stencil().iter().enumerate().map(|(k, &c)| (n - k, sign * c * s)).collect()
        } else {
            let (l, c, r) = self.interior_weights();
            vec![(i - 1, l * s), (i, c * s), (i + 1, r * s)]
        }
    }

    /// `out = M⁻¹ D u` along a contiguous line.
    ///
    /// Differences are formed relative to the stencil's anchor value, so
    /// constant lines give exactly zero.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.len);
        let n = self.len - 1;
        let s = self.scale();
        match self.kind {
            DerivativeKind::First => {
                let half = self.interior_weights().2 * s;
                for i in 1..n {
                    out[i] = half * (u[i + 1] - u[i - 1]);
                }
            }
            DerivativeKind::Second => {
                for i in 1..n {
                    out[i] = s * ((u[i - 1] - u[i]) + (u[i + 1] - u[i]));
                }
            }
        }
        let st = self.boundary_stencil();
        let sign = self.mirror_sign();
        out[0] = s * st.iter().enumerate().skip(1).map(|(k, &w)| w * (u[k] - u[0])).sum::<f64>();
        out[n] = sign * s * st.iter().enumerate().skip(1).map(|(k, &w)| w * (u[n - k] - u[n])).sum::<f64>();
        if let Some(m) = &self.mass {
            m.solve_in_place(out);
        }
    }

    /// Applies the operator to every column of a row-major block
    /// (`rows == len`, `width` columns): this is the y-direction sweep on a
    /// field stored with x fastest.
    pub fn apply_columns(&self, u: &[f64], out: &mut [f64], width: usize) {
        debug_assert_eq!(u.len(), self.len * width);
        let n = self.len - 1;
        let s = self.scale();
        for i in 1..n {
            let um = &u[(i - 1) * width..i * width];
            let u0 = &u[i * width..(i + 1) * width];
            let up = &u[(i + 1) * width..(i + 2) * width];
            let o = &mut out[i * width..(i + 1) * width];
            match self.kind {
                DerivativeKind::First => {
                    let half = self.interior_weights().2 * s;
                    for k in 0..width {
                        o[k] = half * (up[k] - um[k]);
                    }
                }
                DerivativeKind::Second => {
                    for k in 0..width {
                        o[k] = s * ((um[k] - u0[k]) + (up[k] - u0[k]));
                    }
                }
            }
        }
        let st = self.boundary_stencil();
        let sign = self.mirror_sign();
        for (row, sgn, dir) in [(0usize, 1.0, 1isize), (n, sign, -1isize)] {
            let anchor = &u[row * width..(row + 1) * width];
            let o = &mut out[row * width..(row + 1) * width];
            o.iter_mut().for_each(|v| *v = 0.0);
            for (k, &w) in st.iter().enumerate().skip(1) {
                let src = (row as isize + dir * k as isize) as usize;
                let coef = sgn * s * w;
                let src_row = &u[src * width..(src + 1) * width];
                for ((ov, &uv), &av) in o.iter_mut().zip(src_row).zip(anchor) {
                    *ov += coef * (uv - av);
                }
            }
        }
        if let Some(m) = &self.mass {
            m.solve_columns(out, width);
        }
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply(u, &mut out);
        out
    }
}

fn line_op(kind: DerivativeKind, line: &[f64], h: f64) -> Result<Vec<f64>> {
    let op = LineOperator::new(kind, SpatialOrder::Compact4, Closure::OneSided, h, line.len())?;
    Ok(op.apply_vec(line))
}

/// Compact fourth-order first derivative of samples along x.
pub fn compact_dx(line: &[f64], h: f64) -> Result<Vec<f64>> {
    line_op(DerivativeKind::First, line, h)
}

/// Compact fourth-order second derivative of samples along x.
pub fn compact_dxx(line: &[f64], h: f64) -> Result<Vec<f64>> {
    line_op(DerivativeKind::Second, line, h)
}

/// Compact fourth-order first derivative of samples along y.
pub fn compact_dy(line: &[f64], h: f64) -> Result<Vec<f64>> {
    line_op(DerivativeKind::First, line, h)
}

/// Compact fourth-order second derivative of samples along y.
pub fn compact_dyy(line: &[f64], h: f64) -> Result<Vec<f64>> {
    line_op(DerivativeKind::Second, line, h)
}

/// Mixed derivative `M_x⁻¹ D_x (M_y⁻¹ D_y U)` with one-sided closures on
/// all four sides.
pub fn compact_dxy(field: &GridField) -> Result<GridField> {
    mixed(field, Closure::OneSided, false)
}

/// Mixed derivative with the composition order chosen explicitly
/// (`x_first = true` differentiates in x first).
pub(crate) fn mixed(field: &GridField, y_closure: Closure, x_first: bool) -> Result<GridField> {
    let g = *field.grid();
    let dx = LineOperator::new(DerivativeKind::First, SpatialOrder::Compact4, Closure::OneSided, g.hx(), g.row_len())?;
    let dy = LineOperator::new(DerivativeKind::First, SpatialOrder::Compact4, y_closure, g.hy(), g.col_len())?;
    let mut tmp = GridField::zeros(&g);
    let mut out = GridField::zeros(&g);
    if x_first {
        apply_rows(&dx, field.values(), tmp.values_mut(), g.row_len());
        dy.apply_columns(tmp.values(), out.values_mut(), g.row_len());
    } else {
        dy.apply_columns(field.values(), tmp.values_mut(), g.row_len());
        apply_rows(&dx, tmp.values(), out.values_mut(), g.row_len());
    }
    Ok(out)
}

/// Applies an x-direction operator to every row of a field block.
pub(crate) fn apply_rows(op: &LineOperator, u: &[f64], out: &mut [f64], width: usize) {
    for (src, dst) in u.chunks_exact(width).zip(out.chunks_exact_mut(width)) {
        op.apply(src, dst);
    }
}

/// Convenience for tests and diagnostics.
pub fn grid_line_operator(grid: &Grid2D, kind: DerivativeKind, order: SpatialOrder, along_x: bool, closure: Closure) -> Result<LineOperator> {
    if along_x {
        LineOperator::new(kind, order, closure, grid.hx(), grid.row_len())
    } else {
        LineOperator::new(kind, order, closure, grid.hy(), grid.col_len())
    }
}
