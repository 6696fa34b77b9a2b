//! Element integrals and global assembly of the mass, stiffness and
//! convection matrices.

use super::mesh::{shape, shape_derivative, FemMesh, GAUSS_POINTS, GAUSS_WEIGHTS};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::model::BatesParams;

/// Coefficients of `u_τ = ∇·(A∇u) + b·∇u` on the rectangle. Both may vary
/// with `y` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FemCoefficients {
    /// Divergence form of the Bates local operator.
    Bates(BatesParams),
    Constant { a11: f64, a12: f64, a22: f64, bx: f64, by: f64 },
}

impl FemCoefficients {
    /// `([A11, A12, A22], [b_x, b_y])` at height `y`.
    ///
    /// For the Bates operator `A = [[σ/(2y), −ρσy/2], [−ρσy/2, σy³/2]]`,
    /// and the convection absorbs `∂_y A12` and `∂_y A22`:
    /// `b_x = d + ρσ/2`, `b_y = e − 3σy²/2`.
    pub fn at(&self, y: f64) -> ([f64; 3], [f64; 2]) {
        match *self {
            FemCoefficients::Bates(p) => {
                let s = p.sigma;
                let a11 = s / (2.0 * y);
                let a12 = -p.rho * s * y / 2.0;
                let a22 = s * y.powi(3) / 2.0;
                let d = (p.rate - p.lambda) - s / (2.0 * y);
                let e = s * y * y + p.kappa * y - p.kappa * p.theta * y * y / s;
                ([a11, a12, a22], [d + p.rho * s / 2.0, e - 1.5 * s * y * y])
            }
            FemCoefficients::Constant { a11, a12, a22, bx, by } => ([a11, a12, a22], [bx, by]),
        }
    }
}

/// Global matrices over all lattice nodes, Dirichlet rows included.
///
/// `C` carries the convection `−(b·∇φ_j, φ_i)` and the edge integral
/// `−∫ n_y A12 ∂_xφ_j φ_i` on the horizontal boundaries, which turns the
/// natural condition into `u_y = 0` there.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub mesh: FemMesh,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub convection: CsrMatrix,
}

pub fn assemble(mesh: &FemMesh, coeffs: &FemCoefficients) -> Result<FemSystem> {
    let n = mesh.dof();
    let (hx, hy) = (mesh.element_width(), mesh.element_height());
    let det = hx * hy / 4.0;
    let (sx, sy) = (2.0 / hx, 2.0 / hy);
    let mut mt = TripletBuilder::new(n);
    let mut kt = TripletBuilder::new(n);
    let mut ct = TripletBuilder::new(n);

    // tabulated shape values on the Gauss points
    let nv: Vec<[f64; 3]> = GAUSS_POINTS.iter().map(|&g| shape(g)).collect();
    let nd: Vec<[f64; 3]> = GAUSS_POINTS.iter().map(|&g| shape_derivative(g)).collect();

    for ey in 0..mesh.elements_y() {
        let (_, y0) = mesh.element_origin(0, ey);
        // element matrices depend on the row only
        let mut me = [[0.0; 9]; 9];
        let mut ke = [[0.0; 9]; 9];
        let mut ce = [[0.0; 9]; 9];
        for q in 0..3 {
            let y = y0 + 0.5 * hy * (GAUSS_POINTS[q] + 1.0);
            let ([a11, a12, a22], [bx, by]) = coeffs.at(y);
            if !(a11 >= 0.0 && a22 >= 0.0 && a11 * a22 - a12 * a12 >= 0.0) {
                return Err(Error::Assembly(format!("diffusion tensor not positive semidefinite at y = {y}")));
            }
            for p in 0..3 {
                let w = GAUSS_WEIGHTS[p] * GAUSS_WEIGHTS[q] * det;
                let mut phi = [0.0; 9];
                let mut gx = [0.0; 9];
                let mut gy = [0.0; 9];
                for b in 0..3 {
                    for a in 0..3 {
                        let l = a + 3 * b;
                        phi[l] = nv[p][a] * nv[q][b];
                        gx[l] = nd[p][a] * nv[q][b] * sx;
                        gy[l] = nv[p][a] * nd[q][b] * sy;
                    }
                }
                for i in 0..9 {
                    for j in 0..9 {
                        me[i][j] += w * phi[i] * phi[j];
                        ke[i][j] += w * (a11 * gx[i] * gx[j] + a12 * (gx[i] * gy[j] + gy[i] * gx[j]) + a22 * gy[i] * gy[j]);
                        ce[i][j] -= w * (bx * gx[j] + by * gy[j]) * phi[i];
                    }
                }
            }
        }
        // edge corrections on the bottom (n_y = −1) and top (n_y = +1) rows
        let mut edge = [[0.0; 9]; 9];
        let mut has_edge = false;
        for (on_edge, b, ny, y) in [
            (ey == 0, 0usize, -1.0, y0),
            (ey + 1 == mesh.elements_y(), 2usize, 1.0, y0 + hy),
        ] {
            if !on_edge {
                continue;
            }
            has_edge = true;
            let a12 = coeffs.at(y).0[1];
            for p in 0..3 {
                let w = GAUSS_WEIGHTS[p] * 0.5 * hx;
                for ai in 0..3 {
                    for aj in 0..3 {
                        edge[ai + 3 * b][aj + 3 * b] -= w * ny * a12 * nd[p][aj] * sx * nv[p][ai];
                    }
                }
            }
        }
        for ex in 0..mesh.elements_x() {
            let nodes = mesh.element_nodes(ex, ey);
            for i in 0..9 {
                for j in 0..9 {
                    mt.add(nodes[i], nodes[j], me[i][j]);
                    kt.add(nodes[i], nodes[j], ke[i][j]);
                    let c = ce[i][j] + if has_edge { edge[i][j] } else { 0.0 };
                    ct.add(nodes[i], nodes[j], c);
                }
            }
        }
    }
    Ok(FemSystem { mesh: *mesh, mass: mt.build(), stiffness: kt.build(), convection: ct.build() })
}
