//! Run configuration: built-in defaults, optional TOML file, command-line
//! overrides (in increasing precedence).

use std::path::Path;

use anyhow::{bail, Context, Result};
use bates_core::jump::JumpQuadrature;
use bates_core::solver::{FdOptions, JumpSettings};
use bates_core::{BatesParams, Domain, Grid2D, Scheme, SchemeConfig, SpatialOrder};
use serde::Deserialize;

/// Discretization family selected with `--method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hocfd,
    Fd2,
    Fem,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Hocfd => "hocfd",
            Method::Fd2 => "fd2",
            Method::Fem => "fem",
        }
    }

    /// Spatial order of the finite-difference methods.
    pub fn order(&self) -> Option<SpatialOrder> {
        match self {
            Method::Hocfd => Some(SpatialOrder::Compact4),
            Method::Fd2 => Some(SpatialOrder::Centered2),
            Method::Fem => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hocfd" | "hoc" | "compact" => Ok(Method::Hocfd),
            "fd2" | "fd" => Ok(Method::Fd2),
            "fem" | "q2" => Ok(Method::Fem),
            other => bail!("unknown method '{other}' (expected hocfd, fd2 or fem)"),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Named starting points for the settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Reference parameters on [−2, 2] × [1, 5], 41 × 41 nodes.
    Paper,
    /// Reference parameters on [−2, 2] × [3.5, 7.5], which contains the
    /// long-run level y = σ/θ used for the price slice.
    Figure1,
}

impl std::str::FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "figure1" => Ok(Preset::Figure1),
            other => bail!("unknown preset '{other}' (expected paper or figure1)"),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: BatesParams,
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    /// Explicit step count; derived from `step_ratio` when absent.
    pub n_tau: Option<usize>,
    pub scheme: Scheme,
    pub method: Method,
    pub jump_nodes: usize,
    pub jump_width: f64,
    pub tol_lin: f64,
    pub it_max: usize,
    /// `C` in `k = C h²` for spatial sweeps and derived step counts.
    pub step_ratio: f64,
    /// Start the compact scheme from the smoothed payoff.
    pub smoothing: bool,
    /// Reference grid refinement relative to the finest level.
    pub reference_factor: usize,
    /// Time scheme of the compact reference solutions.
    pub reference_scheme: Scheme,
    pub space_levels: Vec<f64>,
    pub time_levels: Vec<usize>,
    pub time_h: f64,
    pub time_reference_steps: usize,
    pub bench_h: f64,
    pub bench_repeats: usize,
    pub eta_exponent: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

impl Settings {
    pub fn preset(preset: Preset) -> Self {
        let domain = match preset {
            Preset::Paper => Domain::standard(),
            Preset::Figure1 => Domain::figure1(),
        };
        Self {
            params: BatesParams::reference(),
            domain,
            nx: 40,
            ny: 40,
            n_tau: None,
            scheme: Scheme::ImexCn,
            method: Method::Hocfd,
            jump_nodes: JumpQuadrature::DEFAULT_NODES,
            jump_width: JumpQuadrature::DEFAULT_WIDTH,
            tol_lin: SchemeConfig::DEFAULT_TOL,
            it_max: SchemeConfig::DEFAULT_IT_MAX,
            step_ratio: 1.0,
            smoothing: true,
            reference_factor: 4,
            reference_scheme: Scheme::Midpoint,
            space_levels: vec![0.2, 0.1, 0.05],
            time_levels: vec![32, 64, 128],
            time_h: 0.1,
            time_reference_steps: 1024,
            bench_h: 0.1,
            bench_repeats: 3,
            eta_exponent: 1,
        }
    }

    /// Overlays the keys present in a TOML document.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let file: FileConfig = toml::from_str(text).context("parsing configuration")?;
        file.apply(self)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.domain.validate()?;
        if !(self.step_ratio > 0.0) {
            bail!("step_ratio must be positive, got {}", self.step_ratio);
        }
        if !(self.tol_lin > 0.0 && self.tol_lin <= 1e-6) {
            bail!("tol_lin must lie in (0, 1e-6], got {}", self.tol_lin);
        }
        if self.it_max == 0 {
            bail!("it_max must be at least 1");
        }
        if self.reference_factor < 2 {
            bail!("reference_factor must be at least 2");
        }
        if !(self.eta_exponent == 1 || self.eta_exponent == 2) {
            bail!("eta_exponent must be 1 or 2, got {}", self.eta_exponent);
        }
        if self.bench_repeats == 0 {
            bail!("bench_repeats must be at least 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Ok(Grid2D::new(self.domain, self.nx, self.ny)?)
    }

    pub fn grid_with_spacing(&self, h: f64) -> Result<Grid2D> {
        Ok(Grid2D::with_spacing(self.domain, h)?)
    }

    pub fn fd_options(&self) -> FdOptions {
        FdOptions { jumps: JumpSettings { nodes: self.jump_nodes, width: self.jump_width }, smooth_payoff: self.smoothing }
    }

    /// Step count with `k = C h²`, rounded to the nearest integer.
    pub fn steps_for(&self, h: f64) -> usize {
        ((self.params.maturity / (self.step_ratio * h * h)).round() as usize).max(1)
    }

    pub fn scheme_config(&self, scheme: Scheme, n_tau: usize) -> Result<SchemeConfig> {
        Ok(SchemeConfig::new(scheme, self.params.maturity, n_tau)?.with_solver(self.tol_lin, self.it_max)?)
    }
}

/// Every key optional; absent keys keep the current value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    strike: Option<f64>,
    maturity: Option<f64>,
    rate: Option<f64>,
    kappa: Option<f64>,
    theta: Option<f64>,
    sigma: Option<f64>,
    rho: Option<f64>,
    lambda: Option<f64>,
    mu_j: Option<f64>,
    sigma_j: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,
    nx: Option<usize>,
    ny: Option<usize>,
    n_tau: Option<usize>,
    scheme: Option<String>,
    spatial_method: Option<String>,
    jump_nodes: Option<usize>,
    jump_width: Option<f64>,
    tol_lin: Option<f64>,
    it_max: Option<usize>,
    step_ratio: Option<f64>,
    smoothing: Option<bool>,
    reference_factor: Option<usize>,
    reference_scheme: Option<String>,
    space_levels: Option<Vec<f64>>,
    time_levels: Option<Vec<usize>>,
    time_h: Option<f64>,
    time_reference_steps: Option<usize>,
    bench_h: Option<f64>,
    bench_repeats: Option<usize>,
    eta_exponent: Option<u32>,
}

impl FileConfig {
    fn apply(self, s: &mut Settings) -> Result<()> {
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set!(
            strike => s.params.strike,
            maturity => s.params.maturity,
            rate => s.params.rate,
            kappa => s.params.kappa,
            theta => s.params.theta,
            sigma => s.params.sigma,
            rho => s.params.rho,
            lambda => s.params.lambda,
            mu_j => s.params.mu_j,
            sigma_j => s.params.sigma_j,
            x_min => s.domain.x_min,
            x_max => s.domain.x_max,
            y_min => s.domain.y_min,
            y_max => s.domain.y_max,
            nx => s.nx,
            ny => s.ny,
            jump_nodes => s.jump_nodes,
            jump_width => s.jump_width,
            tol_lin => s.tol_lin,
            it_max => s.it_max,
            step_ratio => s.step_ratio,
            smoothing => s.smoothing,
            reference_factor => s.reference_factor,
            space_levels => s.space_levels,
            time_levels => s.time_levels,
            time_h => s.time_h,
            time_reference_steps => s.time_reference_steps,
            bench_h => s.bench_h,
            bench_repeats => s.bench_repeats,
            eta_exponent => s.eta_exponent,
        );
        if let Some(n) = self.n_tau {
            s.n_tau = Some(n);
        }
        if let Some(v) = self.scheme {
            s.scheme = v.parse()?;
        }
        if let Some(v) = self.reference_scheme {
            s.reference_scheme = v.parse()?;
        }
        if let Some(v) = self.spatial_method {
            s.method = v.parse()?;
        }
        Ok(())
    }
}
