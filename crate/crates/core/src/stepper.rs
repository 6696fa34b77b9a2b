//! Time integration of `dU/dτ = L_h U + I_h U` with the local operator
//! implicit and the jump operator explicit.
//!
//! The integrators only see a [`Dynamics`] implementation, which keeps
//! them usable on scalar surrogates as well as on the full grid problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bicgstab, Ilu0, KrylovStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexCn,
    Bdf2,
    Midpoint,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::ImexCn, Scheme::Bdf2, Scheme::Midpoint];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::ImexCn => "imex_cn",
            Scheme::Bdf2 => "bdf2",
            Scheme::Midpoint => "midpoint",
        }
    }

    /// Weight of `L_h` in the implicit matrix `I − θk L_h`.
    pub fn implicit_weight(&self) -> f64 {
        match self {
            Scheme::ImexCn | Scheme::Midpoint => 0.5,
            Scheme::Bdf2 => 2.0 / 3.0,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "imex_cn" | "cn" => Ok(Scheme::ImexCn),
            "bdf2" => Ok(Scheme::Bdf2),
            "midpoint" | "mp" => Ok(Scheme::Midpoint),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Step size in years.
    pub k: f64,
    pub n_tau: usize,
    /// Relative residual target of each linear solve.
    pub tol_lin: f64,
    pub it_max: usize,
}

impl SchemeConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_IT_MAX: usize = 500;

    /// `n_tau` uniform steps up to `maturity`.
    pub fn new(scheme: Scheme, maturity: f64, n_tau: usize) -> Result<Self> {
        if n_tau == 0 {
            return Err(Error::Config("n_tau must be at least 1".into()));
        }
        let cfg = Self {
            scheme,
            k: maturity / n_tau as f64,
            n_tau,
            tol_lin: Self::DEFAULT_TOL,
            it_max: Self::DEFAULT_IT_MAX,
        };
        cfg.validate(maturity)?;
        Ok(cfg)
    }

    pub fn with_solver(mut self, tol_lin: f64, it_max: usize) -> Result<Self> {
        self.tol_lin = tol_lin;
        self.it_max = it_max;
        self.validate(self.k * self.n_tau as f64)?;
        Ok(self)
    }

    pub fn validate(&self, maturity: f64) -> Result<()> {
        if self.n_tau == 0 || !(self.k > 0.0) {
            return Err(Error::Config("step size and step count must be positive".into()));
        }
        if ((self.k * self.n_tau as f64) - maturity).abs() > 1e-12 * maturity.abs().max(1.0) {
            return Err(Error::Config(format!(
                "k * n_tau = {} does not reach T = {maturity}",
                self.k * self.n_tau as f64
            )));
        }
        if !(self.tol_lin > 0.0 && self.tol_lin <= 1e-6) {
            return Err(Error::Config(format!("tol_lin must lie in (0, 1e-6], got {}", self.tol_lin)));
        }
        if self.it_max == 0 {
            return Err(Error::Config("it_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tau(&self, n: usize) -> f64 {
        n as f64 * self.k
    }
}

/// Approximate inverse of `I − θk L_h` used inside the Krylov solver.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    Ilu(Ilu0),
}

impl Preconditioner {
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Identity => z.copy_from_slice(r),
            Preconditioner::Ilu(ilu) => ilu.apply(r, z),
        }
    }
}

/// Semi-discrete system seen by the integrators.
///
/// `local` and `jump` must vanish on the Dirichlet rows, so that
/// `I − θk L_h` reduces to the identity there.
pub trait Dynamics {
    fn len(&self) -> usize;

    fn local(&self, u: &[f64], out: &mut [f64]);

    fn jump(&self, u: &[f64], tau: f64, out: &mut [f64]);

    /// Overwrites the Dirichlet entries of `u` with the data at `tau`.
    fn impose_boundary(&self, u: &mut [f64], tau: f64);

    fn preconditioner(&self, theta_k: f64) -> Result<Preconditioner>;

    /// Whether the jump term is identically zero (skips its evaluation).
    fn jump_free(&self) -> bool {
        false
    }
}

/// Solves `(I − θk L_h) x = rhs` with `x` holding the initial guess.
pub fn solve_linear<D: Dynamics + ?Sized>(
    dynamics: &D,
    theta_k: f64,
    precond: &Preconditioner,
    rhs: &[f64],
    x: &mut [f64],
    tol_lin: f64,
    it_max: usize,
) -> Result<KrylovStats> {
    let apply = |v: &[f64], out: &mut [f64]| {
        dynamics.local(v, out);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = vi - theta_k * *o;
        }
    };
    bicgstab(apply, |r, z| precond.apply(r, z), rhs, x, tol_lin, it_max)
}

/// Right-hand sides of the three schemes, with `x` receiving the
/// extrapolated initial guess `2Uⁿ − Uⁿ⁻¹` (or `Uⁿ` without history).
fn initial_guess(un: &[f64], unm1: Option<&[f64]>) -> Vec<f64> {
    match unm1 {
        Some(p) => un.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect(),
        None => un.to_vec(),
    }
}

/// One IMEX Crank–Nicolson step:
/// `(I − k/2 L_h) Uⁿ⁺¹ = (I + k/2 L_h) Uⁿ + k I_h Uⁿ`.
pub fn step_imex_cn<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SchemeConfig,
    precond: &Preconditioner,
    un: &[f64],
    jn: &[f64],
    tau_next: f64,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, KrylovStats)> {
    let half = 0.5 * cfg.k;
    let mut rhs = vec![0.0; un.len()];
    dynamics.local(un, &mut rhs);
    for ((r, &u), &j) in rhs.iter_mut().zip(un).zip(jn) {
        *r = u + half * *r + cfg.k * j;
    }
    finish(dynamics, half, cfg, precond, rhs, tau_next, guess.map_or_else(|| un.to_vec(), <[f64]>::to_vec))
}

/// One BDF2 step with a second-order extrapolated jump:
/// `(I − 2k/3 L_h) Uⁿ⁺¹ = (4Uⁿ − Uⁿ⁻¹)/3 + 2k/3 (2Iⁿ − Iⁿ⁻¹)`.
#[allow(clippy::too_many_arguments)]
pub fn step_bdf2<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SchemeConfig,
    precond: &Preconditioner,
    un: &[f64],
    unm1: &[f64],
    jn: &[f64],
    jnm1: &[f64],
    tau_next: f64,
) -> Result<(Vec<f64>, KrylovStats)> {
    let tk = 2.0 * cfg.k / 3.0;
    let rhs: Vec<f64> = (0..un.len())
        .map(|i| (4.0 * un[i] - unm1[i]) / 3.0 + tk * (2.0 * jn[i] - jnm1[i]))
        .collect();
    finish(dynamics, tk, cfg, precond, rhs, tau_next, initial_guess(un, Some(unm1)))
}

/// One implicit midpoint step with the jump extrapolated to `τ_{n+1/2}`:
/// `(I − k/2 L_h) Uⁿ⁺¹ = (I + k/2 L_h) Uⁿ + k (3/2 Iⁿ − 1/2 Iⁿ⁻¹)`.
#[allow(clippy::too_many_arguments)]
pub fn step_midpoint<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SchemeConfig,
    precond: &Preconditioner,
    un: &[f64],
    unm1: &[f64],
    jn: &[f64],
    jnm1: &[f64],
    tau_next: f64,
) -> Result<(Vec<f64>, KrylovStats)> {
    let extrapolated: Vec<f64> = jn.iter().zip(jnm1).map(|(a, b)| 1.5 * a - 0.5 * b).collect();
    let guess = initial_guess(un, Some(unm1));
    step_imex_cn(dynamics, cfg, precond, un, &extrapolated, tau_next, Some(&guess))
}

fn finish<D: Dynamics + ?Sized>(
    dynamics: &D,
    theta_k: f64,
    cfg: &SchemeConfig,
    precond: &Preconditioner,
    mut rhs: Vec<f64>,
    tau_next: f64,
    mut x: Vec<f64>,
) -> Result<(Vec<f64>, KrylovStats)> {
    dynamics.impose_boundary(&mut rhs, tau_next);
    dynamics.impose_boundary(&mut x, tau_next);
    let stats = solve_linear(dynamics, theta_k, precond, &rhs, &mut x, cfg.tol_lin, cfg.it_max)?;
    // the solve reproduces the Dirichlet rows only to tolerance
    dynamics.impose_boundary(&mut x, tau_next);
    Ok((x, stats))
}

/// Per-step record: `n, tau, lin_iters, residual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub n: usize,
    pub tau: f64,
    pub lin_iters: usize,
    pub residual: f64,
}

/// Runs `cfg.n_tau` steps from `u0` (the data at τ = 0). Multistep schemes
/// start with one IMEX–CN step. `observer` sees every step record.
pub fn integrate<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SchemeConfig,
    u0: &[f64],
    mut observer: impl FnMut(&StepLog),
) -> Result<Vec<f64>> {
    if u0.len() != dynamics.len() {
        return Err(Error::Index { index: u0.len(), len: dynamics.len() });
    }
    let cn_precond = dynamics.preconditioner(0.5 * cfg.k)?;
    let main_precond = match cfg.scheme {
        Scheme::Bdf2 => dynamics.preconditioner(cfg.scheme.implicit_weight() * cfg.k)?,
        _ => cn_precond.clone(),
    };
    let n = u0.len();
    let jump_of = |u: &[f64], tau: f64| {
        let mut j = vec![0.0; n];
        if !dynamics.jump_free() {
            dynamics.jump(u, tau, &mut j);
        }
        j
    };

    let mut u = u0.to_vec();
    dynamics.impose_boundary(&mut u, 0.0);
    let mut j = jump_of(&u, 0.0);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for step in 0..cfg.n_tau {
        let tau_next = cfg.tau(step + 1);
        let (next, stats) = match (&prev, cfg.scheme) {
            (None, _) | (_, Scheme::ImexCn) => {
                let guess = prev.as_ref().map(|(p, _)| initial_guess(&u, Some(p)));
                step_imex_cn(dynamics, cfg, &cn_precond, &u, &j, tau_next, guess.as_deref())?
            }
            (Some((up, jp)), Scheme::Bdf2) => step_bdf2(dynamics, cfg, &main_precond, &u, up, &j, jp, tau_next)?,
            (Some((up, jp)), Scheme::Midpoint) => step_midpoint(dynamics, cfg, &main_precond, &u, up, &j, jp, tau_next)?,
        };
        observer(&StepLog { n: step + 1, tau: tau_next, lin_iters: stats.iterations, residual: stats.residual });
        let j_next = if step + 1 < cfg.n_tau { jump_of(&next, tau_next) } else { Vec::new() };
        prev = Some((std::mem::replace(&mut u, next), std::mem::replace(&mut j, j_next)));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `L = a·Id` on the interior, one Dirichlet row with value `g(τ)`.
    struct Scalar {
        a: f64,
        n: usize,
        boundary: Option<fn(f64) -> f64>,
    }

    impl Dynamics for Scalar {
        fn len(&self) -> usize {
            self.n
        }
        fn local(&self, u: &[f64], out: &mut [f64]) {
            for (o, &v) in out.iter_mut().zip(u) {
                *o = self.a * v;
            }
            if self.boundary.is_some() {
                out[0] = 0.0;
            }
        }
        fn jump(&self, _u: &[f64], _tau: f64, out: &mut [f64]) {
            out.iter_mut().for_each(|o| *o = 0.0);
        }
        fn impose_boundary(&self, u: &mut [f64], tau: f64) {
            if let Some(g) = self.boundary {
                u[0] = g(tau);
            }
        }
        fn preconditioner(&self, _theta_k: f64) -> Result<Preconditioner> {
            Ok(Preconditioner::Identity)
        }
        fn jump_free(&self) -> bool {
            true
        }
    }

    fn cfg(scheme: Scheme, n: usize) -> SchemeConfig {
        SchemeConfig::new(scheme, 1.0, n).unwrap().with_solver(1e-14, 50).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(Scheme::ImexCn, 1.0, 0).is_err());
        let c = SchemeConfig::new(Scheme::Bdf2, 1.0, 64).unwrap();
        assert!((c.k * 64.0 - 1.0).abs() < 1e-15);
        assert!(c.with_solver(1e-5, 10).is_err());
        assert!(c.with_solver(1e-8, 0).is_err());
        let bad = SchemeConfig { k: 0.1, ..c };
        assert!(bad.validate(1.0).is_err());
        assert_eq!("bdf2".parse::<Scheme>().unwrap(), Scheme::Bdf2);
        assert_eq!("imex-cn".parse::<Scheme>().unwrap(), Scheme::ImexCn);
        assert!("euler".parse::<Scheme>().is_err());
    }

    #[test]
    fn crank_nicolson_amplification() {
        let a = -3.0;
        let d = Scalar { a, n: 1, boundary: None };
        let c = cfg(Scheme::ImexCn, 10);
        let (u1, _) = step_imex_cn(&d, &c, &Preconditioner::Identity, &[1.0], &[0.0], c.k, None).unwrap();
        let factor = (1.0 + a * c.k / 2.0) / (1.0 - a * c.k / 2.0);
        assert!((u1[0] - factor).abs() < 1e-14);
    }

    #[test]
    fn bdf2_scalar_update() {
        let a = -2.0;
        let d = Scalar { a, n: 1, boundary: None };
        let c = cfg(Scheme::Bdf2, 8);
        let (u, _) = step_bdf2(&d, &c, &Preconditioner::Identity, &[0.8], &[1.0], &[0.0], &[0.0], 2.0 * c.k).unwrap();
        let expected = (4.0 * 0.8 - 1.0) / 3.0 / (1.0 - 2.0 * c.k * a / 3.0);
        assert!((u[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_operator_identities() {
        let d = Scalar { a: 0.0, n: 3, boundary: None };
        let c = cfg(Scheme::Bdf2, 4);
        let un = [1.0, 2.0, 3.0];
        let unm1 = [0.5, 2.0, 4.0];
        let z = [0.0; 3];
        let (u, _) = step_bdf2(&d, &c, &Preconditioner::Identity, &un, &unm1, &z, &z, 0.5).unwrap();
        for i in 0..3 {
            assert!((u[i] - (4.0 * un[i] - unm1[i]) / 3.0).abs() < 1e-14);
        }
        let (u, _) = step_bdf2(&d, &c, &Preconditioner::Identity, &un, &un, &z, &z, 0.5).unwrap();
        assert_eq!(u, un.to_vec());
        let (u, _) = step_midpoint(&d, &c, &Preconditioner::Identity, &un, &unm1, &z, &z, 0.5).unwrap();
        assert_eq!(u, un.to_vec());
    }

    #[test]
    fn midpoint_equals_cn_without_jumps() {
        let d = Scalar { a: -1.5, n: 2, boundary: None };
        let c = cfg(Scheme::Midpoint, 5);
        let u0 = [1.0, -0.5];
        let cn = integrate(&d, &SchemeConfig { scheme: Scheme::ImexCn, ..c }, &u0, |_| {}).unwrap();
        let mp = integrate(&d, &c, &u0, |_| {}).unwrap();
        for (a, b) in cn.iter().zip(&mp) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_rows_refreshed() {
        let d = Scalar { a: -1.0, n: 3, boundary: Some(|t| 1.0 + t * t) };
        for scheme in Scheme::ALL {
            let c = cfg(scheme, 7);
            let mut taus = Vec::new();
            let u = integrate(&d, &c, &[0.0, 1.0, 1.0], |log| taus.push(log.tau)).unwrap();
            assert_eq!(u[0], 2.0);
            assert_eq!(taus.len(), 7);
            assert!((taus[6] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn second_order_on_scalar_decay() {
        let a = -1.0;
        let d = Scalar { a, n: 1, boundary: None };
        for scheme in Scheme::ALL {
            let err = |n| (integrate(&d, &cfg(scheme, n), &[1.0], |_| {}).unwrap()[0] - a.exp()).abs();
            let p = (err(20) / err(40)).log2();
            assert!((p - 2.0).abs() < 0.1, "{scheme}: {p}");
        }
    }
}
