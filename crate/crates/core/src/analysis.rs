//! Error norms, observed orders and the cost-accuracy ratio.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, GridField};

/// Discrete errors between a solution and a reference on the same nodes.
///
/// Sums run over `i = 1..=N_x`, `j = 1..=N_y`:
/// `l2 = (h_x h_y Σ e²)^{1/2}`, `rmse = (Σ e² / (N_x N_y))^{1/2}`,
/// `linf = max |e|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2: f64,
    pub rmse: f64,
    pub linf: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

pub fn error_norms(u: &GridField, reference: &GridField) -> Result<ErrorReport> {
    let g = u.grid();
    if g != reference.grid() {
        return Err(Error::Config("solution and reference live on different node sets".into()));
    }
    let (mut sum, mut linf) = (0.0f64, 0.0f64);
    for j in 1..=g.ny() {
        for i in 1..=g.nx() {
            let e = u.get(i, j) - reference.get(i, j);
            sum += e * e;
            linf = linf.max(e.abs());
        }
    }
    let count = (g.nx() * g.ny()) as f64;
    Ok(ErrorReport {
        l2: (g.hx() * g.hy() * sum).sqrt(),
        rmse: (sum / count).sqrt(),
        linf,
        nx: g.nx(),
        ny: g.ny(),
        hx: g.hx(),
        hy: g.hy(),
    })
}

/// Restricts a fine reference by injection, then measures.
pub fn error_vs_reference(u: &GridField, fine_reference: &GridField) -> Result<ErrorReport> {
    let restricted = fine_reference.restrict_to(u.grid())?;
    error_norms(u, &restricted)
}

/// `log(e_coarse / e_fine) / log(ratio)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::Domain(format!("errors must be positive, got {e_coarse} and {e_fine}")));
    }
    if !(ratio > 1.0) {
        return Err(Error::Domain(format!("refinement ratio must exceed 1, got {ratio}")));
    }
    Ok((e_coarse / e_fine).ln() / ratio.ln())
}

/// `η = ε_A^q t_A / (ε_B^q t_B)`.
pub fn efficiency(eps_a: f64, t_a: f64, eps_b: f64, t_b: f64, q: u32) -> Result<f64> {
    if !(eps_a > 0.0 && t_a > 0.0 && eps_b > 0.0 && t_b > 0.0) {
        return Err(Error::Domain("efficiency inputs must be positive".into()));
    }
    if !(q == 1 || q == 2) {
        return Err(Error::Config(format!("efficiency exponent must be 1 or 2, got {q}")));
    }
    let q = q as i32;
    Ok(eps_a.powi(q) * t_a / (eps_b.powi(q) * t_b))
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub h: f64,
    pub k: f64,
    pub errors: ErrorReport,
}

/// Levels ordered from coarse to fine with orders between neighbours.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub levels: Vec<ConvergenceLevel>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a level; `h` (spatial sweeps) or `k` (temporal sweeps)
    /// must decrease.
    pub fn push(&mut self, level: ConvergenceLevel) -> Result<()> {
        if let Some(last) = self.levels.last() {
            if !(level.h < last.h || level.k < last.k) {
                return Err(Error::Config("convergence levels must refine monotonically".into()));
            }
        }
        self.levels.push(level);
        Ok(())
    }

    fn ratio(a: &ConvergenceLevel, b: &ConvergenceLevel) -> f64 {
        if b.h < a.h {
            a.h / b.h
        } else {
            a.k / b.k
        }
    }

    /// Orders between level `i − 1` and `i`, `None` for the first level.
    pub fn orders(&self, norm: impl Fn(&ErrorReport) -> f64) -> Vec<Option<f64>> {
        std::iter::once(None)
            .chain(self.levels.windows(2).map(|w| {
                observed_order(norm(&w[0].errors), norm(&w[1].errors), Self::ratio(&w[0], &w[1])).ok()
            }))
            .take(self.levels.len())
            .collect()
    }

    pub fn l2_orders(&self) -> Vec<Option<f64>> {
        self.orders(|e| e.l2)
    }

    pub fn linf_orders(&self) -> Vec<Option<f64>> {
        self.orders(|e| e.linf)
    }

    /// L² order of the finest pair.
    pub fn final_l2_order(&self) -> Option<f64> {
        self.l2_orders().last().copied().flatten()
    }

    /// `level,h,k,l2,rmse,linf,order_l2,order_linf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level,h,k,l2,rmse,linf,order_l2,order_linf")?;
        let (p2, pi) = (self.l2_orders(), self.linf_orders());
        let fmt = |p: Option<f64>| p.map(|v| format!("{v:.6}")).unwrap_or_default();
        for (n, lvl) in self.levels.iter().enumerate() {
            let e = &lvl.errors;
            writeln!(
                w,
                "{n},{},{},{:.12e},{:.12e},{:.12e},{},{}",
                lvl.h,
                lvl.k,
                e.l2,
                e.rmse,
                e.linf,
                fmt(p2[n]),
                fmt(pi[n])
            )?;
        }
        Ok(())
    }
}

/// One row of the efficiency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub method: String,
    pub dof: usize,
    /// Best of the timed runs.
    pub time_s: f64,
    /// Every timed run.
    pub times: Vec<f64>,
    pub l2: f64,
    pub rmse: f64,
    pub eta: f64,
    pub q: u32,
}

impl EfficiencyRecord {
    /// Fills `eta` of every record relative to `records[baseline]` using
    /// the L² error.
    pub fn rank(records: &mut [EfficiencyRecord], baseline: usize, q: u32) -> Result<()> {
        let base = records.get(baseline).ok_or(Error::Index { index: baseline, len: records.len() })?.clone();
        for r in records.iter_mut() {
            r.q = q;
            r.eta = efficiency(r.l2, r.time_s, base.l2, base.time_s, q)?;
        }
        records[baseline].eta = 1.0;
        Ok(())
    }

    /// `method,dof,time_s,l2,rmse,eta,q`.
    pub fn write_csv<W: Write>(records: &[EfficiencyRecord], mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,dof,time_s,l2,rmse,eta,q")?;
        for r in records {
            writeln!(w, "{},{},{:.6},{:.12e},{:.12e},{:.6e},{}", r.method, r.dof, r.time_s, r.l2, r.rmse, r.eta, r.q)?;
        }
        Ok(())
    }
}

/// Grid `factor` times finer than `grid` in each direction, for
/// references that nest by injection.
pub fn refined_grid(grid: &Grid2D, factor: usize) -> Result<Grid2D> {
    Grid2D::new(grid.domain(), grid.nx() * factor, grid.ny() * factor)
}
