//! Biquadratic finite elements on the same rectangle: Crank–Nicolson in
//! time with the jump load extrapolated by Adams–Bashforth,
//!
//! ```text
//! (M + k/2 (K + C)) Uⁿ⁺¹ = (M − k/2 (K + C)) Uⁿ + k (3/2 Fⁿ − 1/2 Fⁿ⁻¹)
//! ```
//!
//! with the Dirichlet columns eliminated and the free block factored once.

mod assembly;
mod mesh;

pub use assembly::{assemble, FemCoefficients, FemSystem};
pub use mesh::{shape, shape_derivative, FemMesh, GAUSS_POINTS, GAUSS_WEIGHTS};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::jump::JumpQuadrature;
use crate::linalg::{BandedLu, CsrMatrix, TripletBuilder};
use crate::model::{self, BatesParams};

/// Time-stepping operators with the cached factorization of the free block
/// of `A_h = M + k/2 (K + C)`.
#[derive(Debug, Clone)]
pub struct FemStepper {
    mesh: FemMesh,
    k: f64,
    a_h: CsrMatrix,
    b_h: CsrMatrix,
    /// Global node of each free unknown.
    free: Vec<usize>,
    /// Free index of each global node.
    slot: Vec<Option<usize>>,
    bandwidth: usize,
    factor: BandedLu,
}

impl FemStepper {
    pub fn new(system: &FemSystem, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {k}")));
        }
        let mesh = system.mesh;
        let n = mesh.dof();
        let combine = |sign: f64| {
            let mut t = TripletBuilder::new(n);
            for r in 0..n {
                let half = sign * 0.5 * k;
                for (m, w) in [(&system.mass, 1.0), (&system.stiffness, half), (&system.convection, half)] {
                    let (cols, vals) = m.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        t.add(r, c, w * v);
                    }
                }
            }
            t.build()
        };
        let a_h = combine(1.0);
        let b_h = combine(-1.0);
        let mut free = Vec::new();
        let mut slot = vec![None; n];
        for node in 0..n {
            if !mesh.is_dirichlet(node) {
                slot[node] = Some(free.len());
                free.push(node);
            }
        }
        // free nodes of one element differ by at most two lattice rows
        let bandwidth = 2 * (mesh.row_len() - 2) + 2;
        let factor = Self::factor_free(&a_h, &free, &slot, bandwidth)?;
        Ok(Self { mesh, k, a_h, b_h, free, slot, bandwidth, factor })
    }

    fn factor_free(a_h: &CsrMatrix, free: &[usize], slot: &[Option<usize>], bw: usize) -> Result<BandedLu> {
        let entries = free.iter().enumerate().flat_map(|(fi, &node)| {
            let (cols, vals) = a_h.row(node);
            cols.iter().zip(vals).filter_map(move |(&c, &v)| slot[c].map(|fc| (fi, fc, v)))
        });
        BandedLu::factor(free.len(), bw, bw, entries)
    }

    pub fn mesh(&self) -> &FemMesh {
        &self.mesh
    }

    pub fn step_size(&self) -> f64 {
        self.k
    }

    /// Number of unknowns after eliminating the Dirichlet columns.
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// One step from `un` with the combined load `3/2 Fⁿ − 1/2 Fⁿ⁻¹` and
    /// Dirichlet values `(left, right)` at the new time level.
    pub fn step(&self, un: &[f64], load: &[f64], left: f64, right: f64) -> Vec<f64> {
        self.step_with(&self.factor, un, load, left, right)
    }

    /// As [`FemStepper::step`], refactoring `A_h` from scratch.
    pub fn step_refactored(&self, un: &[f64], load: &[f64], left: f64, right: f64) -> Result<Vec<f64>> {
        let factor = Self::factor_free(&self.a_h, &self.free, &self.slot, self.bandwidth)?;
        Ok(self.step_with(&factor, un, load, left, right))
    }

    fn step_with(&self, factor: &BandedLu, un: &[f64], load: &[f64], left: f64, right: f64) -> Vec<f64> {
        let n = self.mesh.dof();
        let w = self.mesh.row_len();
        let mut next = vec![0.0; n];
        for row in next.chunks_mut(w) {
            row[0] = left;
            row[w - 1] = right;
        }
        let mut bu = vec![0.0; n];
        self.b_h.matvec(un, &mut bu);
        let mut rhs: Vec<f64> = self
            .free
            .iter()
            .map(|&node| {
                let (cols, vals) = self.a_h.row(node);
                let lift: f64 = cols
                    .iter()
                    .zip(vals)
                    .filter(|(&c, _)| self.slot[c].is_none())
                    .map(|(&c, &v)| v * next[c])
                    .sum();
                bu[node] + self.k * load[node] - lift
            })
            .collect();
        factor.solve_in_place(&mut rhs);
        for (&node, v) in self.free.iter().zip(rhs) {
            next[node] = v;
        }
        next
    }
}

/// Jump functional `Fᵢ = (I[u_h], φᵢ)` on the 3×3 Gauss points.
///
/// For each Gauss row the trace of `u_h` is a piecewise quadratic in x, so
/// the jump integral at the x-Gauss points is a fixed dense map applied to
/// the collapsed lattice row.
#[derive(Debug, Clone)]
pub struct FemJump {
    mesh: FemMesh,
    params: BatesParams,
    /// `(3E_x) × (2E_x + 1)` row-major.
    kernel: Vec<f64>,
    /// `Σ_{m: left} ω_m (1 − e^{x_q + z_m})⁺` per x-Gauss point.
    left_mass: Vec<f64>,
}

impl FemJump {
    pub fn new(mesh: &FemMesh, params: &BatesParams, quad: &JumpQuadrature) -> Self {
        let (ex_n, cols) = (mesh.elements_x(), mesh.row_len());
        let hx = mesh.element_width();
        let (x_min, x_max) = (mesh.domain().x_min, mesh.domain().x_max);
        let mass = quad.mass();
        let comp = quad.compensator();
        let mut kernel = vec![0.0; 3 * ex_n * cols];
        let mut left_mass = vec![0.0; 3 * ex_n];
        for ex in 0..ex_n {
            let x0 = mesh.element_origin(ex, 0).0;
            for (p, &gp) in GAUSS_POINTS.iter().enumerate() {
                let r = 3 * ex + p;
                let row = &mut kernel[r * cols..(r + 1) * cols];
                let xq = x0 + 0.5 * hx * (gp + 1.0);
                let (nv, nd) = (shape(gp), shape_derivative(gp));
                for a in 0..3 {
                    row[2 * ex + a] -= mass * nv[a] + comp * nd[a] * 2.0 / hx;
                }
                for (&z, &w) in quad.nodes().iter().zip(quad.weights()) {
                    let x = xq + z;
                    if x < x_min {
                        left_mass[r] += w * model::payoff(x);
                    } else if x <= x_max {
                        let e = (((x - x_min) / hx).floor() as usize).min(ex_n - 1);
                        let xi = 2.0 * (x - mesh.element_origin(e, 0).0) / hx - 1.0;
                        for (a, s) in shape(xi).iter().enumerate() {
                            row[2 * e + a] += w * s;
                        }
                    }
                }
            }
        }
        Self { mesh: *mesh, params: *params, kernel, left_mass }
    }

    pub fn load(&self, u: &[f64], tau: f64) -> Vec<f64> {
        let m = &self.mesh;
        let (cols, ex_n) = (m.row_len(), m.elements_x());
        let det = m.element_width() * m.element_height() / 4.0;
        let growth = (self.params.growth_rate() * tau).exp();
        let lambda = self.params.lambda;
        let mut out = vec![0.0; m.dof()];
        let mut trace = vec![0.0; cols];
        let mut jq = vec![0.0; 3 * ex_n];
        for ey in 0..m.elements_y() {
            for (q, &gq) in GAUSS_POINTS.iter().enumerate() {
                let nq = shape(gq);
                for (i, t) in trace.iter_mut().enumerate() {
                    *t = (0..3).map(|b| nq[b] * u[m.node(i, 2 * ey + b)]).sum();
                }
                for (r, j) in jq.iter_mut().enumerate() {
                    let row = &self.kernel[r * cols..(r + 1) * cols];
                    let s: f64 = row.iter().zip(&trace).map(|(a, b)| a * b).sum();
                    *j = lambda * (s + growth * self.left_mass[r]);
                }
                for ex in 0..ex_n {
                    let nodes = m.element_nodes(ex, ey);
                    for (p, &gp) in GAUSS_POINTS.iter().enumerate() {
                        let w = GAUSS_WEIGHTS[p] * GAUSS_WEIGHTS[q] * det * jq[3 * ex + p];
                        let np = shape(gp);
                        for b in 0..3 {
                            for a in 0..3 {
                                out[nodes[a + 3 * b]] += w * np[a] * nq[b];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Result of a finite-element solve, sampled at the lattice nodes.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub field: GridField,
    pub dof: usize,
}

/// Prices with `n_tau` Crank–Nicolson steps on `mesh`.
pub fn solve_fem(params: &BatesParams, mesh: &FemMesh, n_tau: usize, quad: &JumpQuadrature) -> Result<FemSolution> {
    params.validate()?;
    if n_tau == 0 {
        return Err(Error::Config("n_tau must be at least 1".into()));
    }
    let k = params.maturity / n_tau as f64;
    let system = assemble(mesh, &FemCoefficients::Bates(*params))?;
    let stepper = FemStepper::new(&system, k)?;
    let jump = (params.lambda > 0.0).then(|| FemJump::new(mesh, params, quad));
    let lattice = mesh.lattice()?;
    let mut u = model::initial_condition(&lattice).into_values();
    let zero = vec![0.0; u.len()];
    let mut f_prev: Option<Vec<f64>> = None;
    for n in 0..n_tau {
        let tau = n as f64 * k;
        let load = match &jump {
            Some(j) => {
                let f = j.load(&u, tau);
                // first step: Fⁿ⁻¹ := Fⁿ
                let prev = f_prev.as_ref().unwrap_or(&f);
                let combined: Vec<f64> = f.iter().zip(prev).map(|(a, b)| 1.5 * a - 0.5 * b).collect();
                f_prev = Some(f);
                combined
            }
            None => zero.clone(),
        };
        let bv = model::boundary_values(tau + k, &lattice, params);
        u = stepper.step(&u, &load, bv.left, bv.right);
    }
    let field = GridField::from_values(&lattice, u)?;
    if !field.is_finite() {
        return Err(Error::SolverDivergence { iterations: n_tau, residual: f64::NAN });
    }
    Ok(FemSolution { field, dof: mesh.dof() })
}
