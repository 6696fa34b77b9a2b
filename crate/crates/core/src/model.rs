//! Model parameters, the change of variables to the computational
//! coordinates, the payoff and the Dirichlet boundary data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};

/// Market and model constants of the Bates dynamics with a Gaussian
/// log-jump law `z ~ N(mu_j, sigma_j²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatesParams {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub mu_j: f64,
    pub sigma_j: f64,
}

impl Default for BatesParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl BatesParams {
    /// Reference parameter set: K = 110, T = 1, r = 0.03, κ = 1.8,
    /// θ = 0.02, ρ = −0.4, σ = 0.15, λ = 0.25, with the jump law fixed at
    /// μ_J = −0.5, σ_J = 0.4.
    pub fn reference() -> Self {
        Self {
            strike: 110.0,
            maturity: 1.0,
            rate: 0.03,
            kappa: 1.8,
            theta: 0.02,
            sigma: 0.15,
            rho: -0.4,
            lambda: 0.25,
            mu_j: -0.5,
            sigma_j: 0.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("strike", self.strike),
            ("maturity", self.maturity),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("sigma_j", self.sigma_j),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::Domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if !(self.rate.is_finite() && self.mu_j.is_finite()) {
            return Err(Error::Domain("rate and mu_j must be finite".into()));
        }
        Ok(())
    }

    /// Feller condition 2κθ ≥ σ². Reported, never enforced.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// Discount/growth rate r + λ of the value scaling.
    pub fn growth_rate(&self) -> f64 {
        self.rate + self.lambda
    }

    /// Maps the constants to the inverse-variance coordinate `y` of the
    /// long-run variance θ.
    pub fn long_run_y(&self) -> f64 {
        self.sigma / self.theta
    }
}

/// Point in the transformed coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputationalPoint {
    /// Log-moneyness ln(S/K).
    pub x: f64,
    /// Inverse variance scale σ/v.
    pub y: f64,
    /// Time to maturity T − t.
    pub tau: f64,
}

pub fn to_computational(s: f64, v: f64, t: f64, p: &BatesParams) -> Result<ComputationalPoint> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("price must be positive, got {s}")));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {v}")));
    }
    if !(0.0..=p.maturity).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, {}]", p.maturity)));
    }
    Ok(ComputationalPoint { x: (s / p.strike).ln(), y: p.sigma / v, tau: p.maturity - t })
}

/// Inverse of [`to_computational`]; returns `(S, v, t)`.
pub fn from_computational(pt: &ComputationalPoint, p: &BatesParams) -> Result<(f64, f64, f64)> {
    if !(pt.y > 0.0) {
        return Err(Error::Domain(format!("y must be positive, got {}", pt.y)));
    }
    Ok((p.strike * pt.x.exp(), p.sigma / pt.y, p.maturity - pt.tau))
}

/// V = K e^{−(r+λ)τ} u.
pub fn unscale_value(u: f64, tau: f64, p: &BatesParams) -> f64 {
    p.strike * (-p.growth_rate() * tau).exp() * u
}

/// u = e^{(r+λ)τ} V / K.
pub fn scale_value(value: f64, tau: f64, p: &BatesParams) -> f64 {
    (p.growth_rate() * tau).exp() * value / p.strike
}

/// Scaled put payoff max(1 − e^x, 0).
#[inline]
pub fn payoff(x: f64) -> f64 {
    (1.0 - x.exp()).max(0.0)
}

pub fn initial_condition(grid: &Grid2D) -> GridField {
    GridField::from_fn(grid, |x, _| payoff(x))
}

/// Cubic B-spline on `[−2, 2]`.
fn cubic_bspline(t: f64) -> f64 {
    let a = t.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        (4.0 - 6.0 * a * a + 3.0 * a.powi(3)) / 6.0
    }
}

/// `∫ B(t) payoff(x − h t) dt`, split at the unit knots and at the kink.
fn bspline_average(x: f64, h: f64) -> f64 {
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let kink = x / h;
    let mut breaks = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    if kink > -2.0 && kink < 2.0 {
        breaks.push(kink);
        breaks.sort_by(f64::total_cmp);
    }
    breaks
        .windows(2)
        .map(|w| {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(&s, wt)| {
                    let t = mid + half * s;
                    wt * half * cubic_bspline(t) * payoff(x - h * t)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Payoff smoothed with the fourth-order operator whose symbol is
/// `(sin(ω/2)/(ω/2))⁴ (1 + 2/3 sin²(ω/2))`: the cubic B-spline average
/// followed by the discrete correction `I − δ²/6` on the spacing `h`.
/// Agrees with the payoff to `O(h⁴)` away from the kink and removes the
/// high-frequency content that otherwise caps the order of the compact
/// scheme near the strike.
pub fn smoothed_payoff(x: f64, h: f64) -> f64 {
    let v = |x: f64| bspline_average(x, h);
    let (l, c, r) = (v(x - h), v(x), v(x + h));
    c - (l - 2.0 * c + r) / 6.0
}

/// Initial condition built from [`smoothed_payoff`] on the x-spacing of the
/// grid; the Dirichlet columns keep the exact payoff.
pub fn smoothed_initial_condition(grid: &Grid2D) -> GridField {
    let h = grid.hx();
    let line: Vec<f64> = (0..=grid.nx())
        .map(|i| if grid.is_dirichlet(i) { payoff(grid.x(i)) } else { smoothed_payoff(grid.x(i), h) })
        .collect();
    let values = line.iter().copied().cycle().take(grid.node_count()).collect();
    GridField::from_values(grid, values).expect("row-major layout matches the grid")
}

/// Scaled value imposed for log-moneyness at or left of `x_min` at time
/// `tau`. Also used to extend the field to the left of the domain inside
/// the jump integral.
#[inline]
pub fn left_asymptote(x: f64, tau: f64, p: &BatesParams) -> f64 {
    (p.growth_rate() * tau).exp() * (1.0 - x.exp()).max(0.0)
}

/// Dirichlet values on the vertical boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    pub left: f64,
    pub right: f64,
}

/// Left value e^{(r+λ)τ}(1 − e^{x_min}); the right value is zero. The
/// horizontal boundaries carry homogeneous Neumann conditions which the
/// spatial operators enforce.
pub fn boundary_values(tau: f64, grid: &Grid2D, p: &BatesParams) -> BoundaryValues {
    BoundaryValues { left: left_asymptote(grid.x_min(), tau, p), right: 0.0 }
}

/// Rectangle `[x_min, x_max] × [y_min, y_max]` of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self::standard()
    }
}

impl Domain {
    /// Smallest admissible lower bound in `y`; the coefficients σ/(2y) and
    /// the x-drift blow up as y → 0.
    pub const Y_FLOOR: f64 = 0.1;

    /// [−2, 2] × [1, 5]: h = 0.1 gives the 41 × 41 grid.
    pub fn standard() -> Self {
        Self { x_min: -2.0, x_max: 2.0, y_min: 1.0, y_max: 5.0 }
    }

    /// [−2, 2] × [3.5, 7.5], reaching up to the long-run level y = σ/θ.
    pub fn figure1() -> Self {
        Self { x_min: -2.0, x_max: 2.0, y_min: 3.5, y_max: 7.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min) {
            return Err(Error::Config(format!("x_max {} must exceed x_min {}", self.x_max, self.x_min)));
        }
        if !(self.y_max > self.y_min) {
            return Err(Error::Config(format!("y_max {} must exceed y_min {}", self.y_max, self.y_min)));
        }
        if !(self.y_min > 0.0) {
            return Err(Error::Domain(format!("y_min must be positive, got {}", self.y_min)));
        }
        if self.y_min < Self::Y_FLOOR {
            return Err(Error::Config(format!(
                "y_min {} below the floor {}",
                self.y_min,
                Self::Y_FLOOR
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_point_maps_to_unit_moneyness() {
        let p = BatesParams::reference();
        let pt = to_computational(110.0, 0.02, 0.0, &p).unwrap();
        assert_eq!(pt.x, 0.0);
        assert_relative_eq!(pt.y, 7.5, max_relative = 1e-15);
        assert_eq!(pt.tau, 1.0);
    }

    #[test]
    fn identity_case() {
        let p = BatesParams::reference();
        let s = p.strike * 1f64.exp();
        let pt = to_computational(s, p.sigma, p.maturity, &p).unwrap();
        assert_relative_eq!(pt.x, 1.0, max_relative = 1e-15);
        assert_eq!(pt.y, 1.0);
        assert_eq!(pt.tau, 0.0);
        let half = to_computational(55.0, 0.1, 0.5, &p).unwrap();
        assert_relative_eq!(half.x, -std::f64::consts::LN_2, max_relative = 1e-15);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let p = BatesParams::reference();
        assert!(matches!(to_computational(0.0, 0.02, 0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(to_computational(100.0, -0.02, 0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(to_computational(100.0, 0.02, 2.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn value_scaling() {
        let p = BatesParams::reference();
        assert_eq!(unscale_value(1.0, 0.0, &p), 110.0);
        assert_relative_eq!(unscale_value(1.0, 1.0, &p), 110.0 * (-0.28f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(unscale_value(1.0, 1.0, &p), 83.1362, epsilon = 1e-4);
    }

    #[test]
    fn boundary_data() {
        let p = BatesParams::reference();
        let g = Grid2D::new(Domain::standard(), 40, 40).unwrap();
        let b0 = boundary_values(0.0, &g, &p);
        assert_relative_eq!(b0.left, 1.0 - (-2f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(b0.left, 0.864665, epsilon = 1e-6);
        let b1 = boundary_values(1.0, &g, &p);
        assert_relative_eq!(b1.left, 1.144064, epsilon = 1e-6);
        assert_eq!(b1.right, 0.0);
        // compatibility with the payoff at the corner
        assert_eq!(b0.left, payoff(g.x_min()));
    }

    #[test]
    fn payoff_values() {
        assert_eq!(payoff(0.0), 0.0);
        assert_relative_eq!(payoff(0.5f64.ln()), 0.5, max_relative = 1e-15);
        assert_eq!(payoff(0.5), 0.0);
    }

    #[test]
    fn smoothing_is_fourth_order_away_from_the_kink() {
        for x in [-1.3, -0.7, 0.6] {
            let e1 = (smoothed_payoff(x, 0.1) - payoff(x)).abs();
            let e2 = (smoothed_payoff(x, 0.05) - payoff(x)).abs();
            assert!(e1 < 1e-5, "{x}: {e1}");
            if e2 > 1e-13 {
                assert!((e1 / e2).log2() > 3.8, "{x}: {e1} {e2}");
            }
        }
        // close to the kink the value is pulled above the payoff corner
        assert!(smoothed_payoff(0.0, 0.1) > 0.0);
        // the B-spline average of a constant is the constant
        assert!((bspline_average(-30.0, 0.1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_params_are_valid_and_feller() {
        let p = BatesParams::reference();
        p.validate().unwrap();
        assert!(p.feller_satisfied());
        let bad = BatesParams { rho: 1.0, ..p };
        assert!(bad.validate().is_err());
        let bad = BatesParams { sigma_j: 0.0, ..p };
        assert!(bad.validate().is_err());
        let bad = BatesParams { lambda: -0.1, ..p };
        assert!(bad.validate().is_err());
    }
}
