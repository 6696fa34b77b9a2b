//! Explicit jump operator
//!
//! ```text
//! I_h[u]_{i,j} = λ Σ_m ω_m [u(x_i + z_m, y_j) − u_{i,j} − (e^{z_m} − 1) D_x u_{i,j}]
//! ```
//!
//! with composite Simpson weights on a truncated uniform grid of log-jump
//! sizes (the Gaussian density folded into `ω_m`), off-grid values from
//! Lagrange interpolation along x, and the Dirichlet asymptotics outside
//! `[x_min, x_max]`.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};
use crate::model::{self, BatesParams};
use crate::ops::line::{apply_rows, Closure, DerivativeKind, LineOperator};
use crate::ops::SpatialOrder;

/// Composite Simpson coefficients `(Δz/3)(1, 4, 2, …, 4, 1)`.
pub fn simpson_weights(intervals: usize, step: f64) -> Result<Vec<f64>> {
    if intervals == 0 || intervals % 2 != 0 {
        return Err(Error::Config(format!("Simpson's rule needs an even, positive interval count, got {intervals}")));
    }
    Ok((0..=intervals)
        .map(|k| {
            let c = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * step / 3.0
        })
        .collect())
}

/// Gaussian density of the log-jump size.
pub fn jump_density(z: f64, mu_j: f64, sigma_j: f64) -> f64 {
    let t = (z - mu_j) / sigma_j;
    (-0.5 * t * t).exp() / (sigma_j * (2.0 * std::f64::consts::PI).sqrt())
}

/// Quadrature nodes `z_m`, `m = −M..=M`, and density-weighted Simpson
/// weights over `[μ_J − Wσ_J, μ_J + Wσ_J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_count: usize,
    half_width: f64,
    mu_j: f64,
    sigma_j: f64,
}

impl JumpQuadrature {
    pub const DEFAULT_NODES: usize = 256;
    pub const DEFAULT_WIDTH: f64 = 8.0;

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// `M`.
    pub fn half_count(&self) -> usize {
        self.half_count
    }
    /// `W` in units of σ_J.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn mu_j(&self) -> f64 {
        self.mu_j
    }
    pub fn sigma_j(&self) -> f64 {
        self.sigma_j
    }

    /// `Σ ω_m`, close to one when the truncation is wide enough.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ ω_m (e^{z_m} − 1)`, the discrete compensator drift.
    pub fn compensator(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * z.exp_m1()).sum()
    }
}

pub fn build_quadrature(mu_j: f64, sigma_j: f64, m: usize, width: f64) -> Result<JumpQuadrature> {
    if m < 1 {
        return Err(Error::Config("jump quadrature needs M >= 1".into()));
    }
    if !(width > 0.0) || !(sigma_j > 0.0) {
        return Err(Error::Config(format!("truncation width {width} and sigma_j {sigma_j} must be positive")));
    }
    let step = width * sigma_j / m as f64;
    let simpson = simpson_weights(2 * m, step)?;
    let lo = mu_j - width * sigma_j;
    let nodes: Vec<f64> = (0..=2 * m).map(|k| lo + k as f64 * step).collect();
    let weights = nodes.iter().zip(&simpson).map(|(&z, &c)| c * jump_density(z, mu_j, sigma_j)).collect();
    Ok(JumpQuadrature { nodes, weights, half_count: m, half_width: width, mu_j, sigma_j })
}

/// Where `x_i + z_m` lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Inside the grid: Lagrange weights on `len` consecutive nodes from `start`.
    Interior { start: usize, len: usize, weights: [f64; 4] },
    /// Left of `x_min`, at the given abscissa.
    Left(f64),
    /// Right of `x_max`.
    Right,
}

/// Off-grid interpolation targets for every `(i, m)`. Independent of the
/// field values.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    row_len: usize,
    node_count: usize,
    targets: Vec<Target>,
    cubic: bool,
}

impl InterpolationPlan {
    /// Cubic (4-point) interpolation for the compact scheme, linear for the
    /// second-order one.
    pub fn new(grid: &Grid2D, quad: &JumpQuadrature, order: SpatialOrder) -> Result<Self> {
        let cubic = matches!(order, SpatialOrder::Compact4);
        let nx = grid.nx();
        if cubic && nx < 3 {
            return Err(Error::Config("cubic interpolation needs at least 4 nodes per line".into()));
        }
        let (x_min, x_max, h) = (grid.x_min(), grid.x_max(), grid.hx());
        let mut targets = Vec::with_capacity(grid.row_len() * quad.nodes().len());
        for i in 0..=nx {
            let xi = grid.x(i);
            for &z in quad.nodes() {
                let x = xi + z;
                let target = if x < x_min {
                    Target::Left(x)
                } else if x > x_max {
                    Target::Right
                } else {
                    let t = (x - x_min) / h;
                    let cell = (t.floor() as usize).min(nx - 1);
                    if cubic {
                        let start = cell.saturating_sub(1).min(nx - 3);
                        let xi = t - start as f64;
                        Target::Interior { start, len: 4, weights: lagrange_cubic(xi) }
                    } else {
                        let f = t - cell as f64;
                        Target::Interior { start: cell, len: 2, weights: [1.0 - f, f, 0.0, 0.0] }
                    }
                };
                targets.push(target);
            }
        }
        Ok(Self { row_len: grid.row_len(), node_count: quad.nodes().len(), targets, cubic })
    }

    pub fn target(&self, i: usize, m: usize) -> Target {
        self.targets[i * self.node_count + m]
    }

    pub fn is_cubic(&self) -> bool {
        self.cubic
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }
}

/// Lagrange weights on nodes 0..=3 at local coordinate `s`.
fn lagrange_cubic(s: f64) -> [f64; 4] {
    let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Assembled jump operator for one grid, quadrature and accuracy.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    grid: Grid2D,
    params: BatesParams,
    quad: JumpQuadrature,
    plan: InterpolationPlan,
    dx: LineOperator,
    /// Row-major `(nx+1)²` interpolation kernel `Σ_m ω_m P_m`, when small
    /// enough to store.
    kernel: Option<Vec<f64>>,
    /// `Σ_{m: left} ω_m (1 − e^{x_i + z_m})⁺` per node column.
    left_mass: Vec<f64>,
}

impl JumpOperator {
    /// Largest row length for which the dense line kernel is formed.
    const DENSE_LIMIT: usize = 2048;

    pub fn new(grid: &Grid2D, params: &BatesParams, quad: JumpQuadrature, order: SpatialOrder) -> Result<Self> {
        let plan = InterpolationPlan::new(grid, &quad, order)?;
        let dx = LineOperator::new(DerivativeKind::First, order, Closure::OneSided, grid.hx(), grid.row_len())?;
        let n = grid.row_len();
        let mut left_mass = vec![0.0; n];
        for (i, lm) in left_mass.iter_mut().enumerate() {
            for (m, &w) in quad.weights().iter().enumerate() {
                if let Target::Left(x) = plan.target(i, m) {
                    *lm += w * model::payoff(x);
                }
            }
        }
        let kernel = (n <= Self::DENSE_LIMIT).then(|| {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                for (m, &w) in quad.weights().iter().enumerate() {
                    if let Target::Interior { start, len, weights } = plan.target(i, m) {
                        for l in 0..len {
                            k[i * n + start + l] += w * weights[l];
                        }
                    }
                }
            }
            k
        });
        Ok(Self { grid: *grid, params: *params, quad, plan, dx, kernel, left_mass })
    }

    pub fn quadrature(&self) -> &JumpQuadrature {
        &self.quad
    }
    pub fn plan(&self) -> &InterpolationPlan {
        &self.plan
    }
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// `out = I_h[u]` at time `tau` with the Dirichlet extensions.
    pub fn apply_into(&self, u: &[f64], tau: f64, out: &mut [f64]) {
        let n = self.grid.row_len();
        let rows = self.grid.col_len();
        let mut dxu = vec![0.0; u.len()];
        apply_rows(&self.dx, u, &mut dxu, n);
        let lambda = self.params.lambda;
        let growth = (self.params.growth_rate() * tau).exp();
        let mass = self.quad.mass();
        let comp = self.quad.compensator();
        match &self.kernel {
            Some(k) => {
                // out = U Kᵀ, rows of U being the x-lines
                unsafe {
                    matrixmultiply::dgemm(
                        rows, n, n, 1.0,
                        u.as_ptr(), n as isize, 1,
                        k.as_ptr(), 1, n as isize,
                        0.0,
                        out.as_mut_ptr(), n as isize, 1,
                    );
                }
                for j in 0..rows {
                    let r = j * n..(j + 1) * n;
                    for ((o, (&uv, &d)), &lm) in out[r.clone()].iter_mut().zip(u[r.clone()].iter().zip(&dxu[r])).zip(&self.left_mass) {
                        *o = lambda * (*o + growth * lm - mass * uv - comp * d);
                    }
                }
            }
            None => {
                let p = self.params;
                self.apply_plan(u, &dxu, |x| model::left_asymptote(x, tau, &p), out);
            }
        }
    }

    /// Evaluation straight from the interpolation plan, with a caller-chosen
    /// extension for abscissae left of the domain (right of it the field is
    /// continued by zero) and a caller-supplied x-derivative.
    pub fn apply_plan(&self, u: &[f64], dxu: &[f64], left: impl Fn(f64) -> f64, out: &mut [f64]) {
        self.apply_plan_with(u, dxu, left, |_| 0.0, out)
    }

    pub fn apply_plan_with(
        &self,
        u: &[f64],
        dxu: &[f64],
        left: impl Fn(f64) -> f64,
        right: impl Fn(f64) -> f64,
        out: &mut [f64],
    ) {
        let n = self.grid.row_len();
        let lambda = self.params.lambda;
        let (nodes, weights) = (self.quad.nodes(), self.quad.weights());
        for j in 0..self.grid.col_len() {
            let row = &u[j * n..(j + 1) * n];
            for i in 0..n {
                let ui = row[i];
                let xi = self.grid.x(i);
                let mut acc = 0.0;
                for (m, (&w, &z)) in weights.iter().zip(nodes).enumerate() {
                    let diff = match self.plan.target(i, m) {
                        Target::Interior { start, len, weights: lw } => {
                            (0..len).map(|l| lw[l] * (row[start + l] - ui)).sum::<f64>()
                        }
                        Target::Left(x) => left(x) - ui,
                        Target::Right => right(xi + z) - ui,
                    };
                    acc += w * (diff - z.exp_m1() * dxu[j * n + i]);
                }
                out[j * n + i] = lambda * acc;
            }
        }
    }

    pub fn apply(&self, u: &GridField, tau: f64) -> Result<GridField> {
        if u.grid() != &self.grid {
            return Err(Error::Config("field grid does not match jump operator grid".into()));
        }
        let mut out = GridField::zeros(&self.grid);
        self.apply_into(u.values(), tau, out.values_mut());
        Ok(out)
    }
}

/// `I_h U` at time `tau`, using the x-derivative and interpolation of the
/// given accuracy.
pub fn apply_jump(field: &GridField, tau: f64, quad: &JumpQuadrature, order: SpatialOrder, p: &BatesParams) -> Result<GridField> {
    JumpOperator::new(field.grid(), p, quad.clone(), order)?.apply(field, tau)
}
