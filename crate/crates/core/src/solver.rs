//! Finite-difference pricing driver: assembles the local and jump
//! operators on a grid and integrates from the payoff to maturity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};
use crate::jump::{build_quadrature, JumpOperator, JumpQuadrature};
use crate::linalg::Ilu0;
use crate::model::{self, BatesParams};
use crate::ops::{LocalCoefficients, LocalOperator, SpatialOrder};
use crate::stepper::{integrate, Dynamics, Preconditioner, SchemeConfig, StepLog};

/// Truncation and resolution of the jump-size quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSettings {
    /// Half the number of Simpson intervals (`M`).
    pub nodes: usize,
    /// Half-width of the truncated range in units of σ_J (`W`).
    pub width: f64,
}

impl Default for JumpSettings {
    fn default() -> Self {
        Self { nodes: JumpQuadrature::DEFAULT_NODES, width: JumpQuadrature::DEFAULT_WIDTH }
    }
}

impl JumpSettings {
    pub fn quadrature(&self, p: &BatesParams) -> Result<JumpQuadrature> {
        build_quadrature(p.mu_j, p.sigma_j, self.nodes, self.width)
    }
}

/// Options of a finite-difference solve beyond grid and time stepping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub jumps: JumpSettings,
    /// Start the compact scheme from the smoothed payoff. Without it the
    /// kink at the strike limits the compact scheme to about second order.
    /// The second-order scheme always starts from the nodal payoff.
    pub smooth_payoff: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { jumps: JumpSettings::default(), smooth_payoff: true }
    }
}

impl FdOptions {
    pub fn initial_condition(&self, grid: &Grid2D, order: SpatialOrder) -> GridField {
        match order {
            SpatialOrder::Compact4 if self.smooth_payoff => model::smoothed_initial_condition(grid),
            _ => model::initial_condition(grid),
        }
    }
}

/// The semi-discrete finite-difference system on one grid.
#[derive(Debug, Clone)]
pub struct FdProblem {
    params: BatesParams,
    local: LocalOperator,
    jump: Option<JumpOperator>,
}

impl FdProblem {
    pub fn new(params: &BatesParams, grid: &Grid2D, order: SpatialOrder, jumps: JumpSettings) -> Result<Self> {
        params.validate()?;
        grid.domain().validate()?;
        let local = LocalOperator::new(LocalCoefficients::bates(grid, params), order)?;
        let jump = if params.lambda > 0.0 {
            Some(JumpOperator::new(grid, params, jumps.quadrature(params)?, order)?)
        } else {
            None
        };
        Ok(Self { params: *params, local, jump })
    }

    pub fn grid(&self) -> &Grid2D {
        self.local.grid()
    }

    pub fn local(&self) -> &LocalOperator {
        &self.local
    }

    pub fn jump_operator(&self) -> Option<&JumpOperator> {
        self.jump.as_ref()
    }
}

impl Dynamics for FdProblem {
    fn len(&self) -> usize {
        self.grid().node_count()
    }

    fn local(&self, u: &[f64], out: &mut [f64]) {
        self.local.apply_into(u, out);
    }

    fn jump(&self, u: &[f64], tau: f64, out: &mut [f64]) {
        match &self.jump {
            Some(op) => {
                op.apply_into(u, tau, out);
                let w = self.grid().row_len();
                for row in out.chunks_mut(w) {
                    row[0] = 0.0;
                    row[w - 1] = 0.0;
                }
            }
            None => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    fn impose_boundary(&self, u: &mut [f64], tau: f64) {
        let bv = model::boundary_values(tau, self.grid(), &self.params);
        let w = self.grid().row_len();
        for row in u.chunks_mut(w) {
            row[0] = bv.left;
            row[w - 1] = bv.right;
        }
    }

    fn preconditioner(&self, theta_k: f64) -> Result<Preconditioner> {
        let a = self.local.centered_system_matrix(theta_k)?;
        // y-fastest elimination order: the y-coupling is the stiff one
        let g = self.grid();
        let perm: Vec<usize> = (0..=g.nx()).flat_map(|i| (0..=g.ny()).map(move |j| g.index(i, j))).collect();
        Ok(Preconditioner::Ilu(Ilu0::with_ordering(&a, perm)?))
    }

    fn jump_free(&self) -> bool {
        self.jump.is_none()
    }
}

/// Result of one finite-difference solve.
#[derive(Debug, Clone)]
pub struct FdSolution {
    /// Scaled value `u` at τ = T.
    pub field: GridField,
    pub steps: Vec<StepLog>,
}

impl FdSolution {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.lin_iters).sum()
    }
}

/// Prices on `grid` from the payoff at τ = 0 up to τ = T.
pub fn solve_fd(
    params: &BatesParams,
    grid: &Grid2D,
    order: SpatialOrder,
    cfg: &SchemeConfig,
    options: &FdOptions,
) -> Result<FdSolution> {
    cfg.validate(params.maturity)?;
    let problem = FdProblem::new(params, grid, order, options.jumps)?;
    let u0 = options.initial_condition(grid, order);
    let mut steps = Vec::with_capacity(cfg.n_tau);
    let values = integrate(&problem, cfg, u0.values(), |log| steps.push(*log))?;
    let field = GridField::from_values(grid, values)?;
    if !field.is_finite() {
        return Err(Error::SolverDivergence { iterations: 0, residual: f64::NAN });
    }
    Ok(FdSolution { field, steps })
}
