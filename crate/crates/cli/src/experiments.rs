//! The four experiments behind the CLI commands. Each returns its table in
//! memory; writing files is left to the caller.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use bates_core::analysis::{error_vs_reference, ConvergenceLevel, ConvergenceTable, EfficiencyRecord};
use bates_core::fem::{solve_fem, FemMesh};
use bates_core::solver::solve_fd;
use bates_core::{model, Grid2D, GridField, Scheme, SpatialOrder};

use crate::config::{Method, Settings};

/// Output of one solve on one resolution.
#[derive(Debug, Clone)]
pub struct MethodRun {
    /// Scaled value at τ = T on the finite-difference grid or the FEM lattice.
    pub field: GridField,
    pub dof: usize,
    /// Total Krylov iterations; zero for the direct FEM solver.
    pub iterations: usize,
}

/// Solves with `method` at spacing (or element size) `h` and `n_tau` steps.
/// The FEM path has a single time scheme and ignores `scheme`.
pub fn run_method(s: &Settings, method: Method, scheme: Scheme, h: f64, n_tau: usize) -> Result<MethodRun> {
    match method.order() {
        Some(order) => run_fd(s, &s.grid_with_spacing(h)?, order, scheme, n_tau),
        None => {
            let mesh = FemMesh::with_element_size(s.domain, h)?;
            run_fem(s, &mesh, n_tau)
        }
    }
}

fn run_fd(s: &Settings, grid: &Grid2D, order: SpatialOrder, scheme: Scheme, n_tau: usize) -> Result<MethodRun> {
    let cfg = s.scheme_config(scheme, n_tau)?;
    let sol = solve_fd(&s.params, grid, order, &cfg, &s.fd_options())
        .with_context(|| format!("{order:?} solve with {} nodes", grid.node_count()))?;
    let iterations = sol.total_iterations();
    Ok(MethodRun { dof: grid.node_count(), field: sol.field, iterations })
}

fn run_fem(s: &Settings, mesh: &FemMesh, n_tau: usize) -> Result<MethodRun> {
    let quad = s.fd_options().jumps.quadrature(&s.params)?;
    let sol = solve_fem(&s.params, mesh, n_tau, &quad).with_context(|| format!("FEM solve with {} DOF", mesh.dof()))?;
    Ok(MethodRun { field: sol.field, dof: sol.dof, iterations: 0 })
}

// ---------------------------------------------------------------- price

/// One row of the price slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceRow {
    pub s: f64,
    pub v: f64,
    pub intrinsic: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone)]
pub struct PriceResult {
    pub field: GridField,
    /// The `y` of the sliced grid row.
    pub slice_y: f64,
    pub slice: Vec<SliceRow>,
}

pub const SLICE_S_MIN: f64 = 70.0;
pub const SLICE_S_MAX: f64 = 130.0;

/// Prices on the configured grid. FEM uses `nx × ny` elements.
pub fn price(s: &Settings) -> Result<PriceResult> {
    s.validate()?;
    let grid = s.grid()?;
    let h = grid.hx().min(grid.hy());
    let n_tau = s.n_tau.unwrap_or_else(|| s.steps_for(h));
    let run = match s.method.order() {
        Some(order) => run_fd(s, &grid, order, s.scheme, n_tau)?,
        None => run_fem(s, &FemMesh::new(s.domain, s.nx, s.ny)?, n_tau)?,
    };
    let field = run.field;
    let (slice_y, slice) = price_slice(s, &field);
    Ok(PriceResult { field, slice_y, slice })
}

/// Unscaled prices along the grid row nearest the long-run level σ/θ,
/// restricted to `S ∈ [70, 130]`.
pub fn price_slice(s: &Settings, field: &GridField) -> (f64, Vec<SliceRow>) {
    let p = &s.params;
    let g = field.grid();
    let j = g.nearest_j(p.long_run_y());
    let discounted = p.strike * (-p.rate * p.maturity).exp();
    let rows = (0..=g.nx())
        .filter_map(|i| {
            let spot = p.strike * g.x(i).exp();
            (SLICE_S_MIN..=SLICE_S_MAX).contains(&spot).then(|| SliceRow {
                s: spot,
                v: model::unscale_value(field.get(i, j), p.maturity, p),
                intrinsic: (p.strike - spot).max(0.0),
                lower_bound: (discounted - spot).max(0.0),
                upper_bound: discounted,
            })
        })
        .collect();
    (g.y(j), rows)
}

pub fn write_slice<W: std::io::Write>(rows: &[SliceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["S", "V", "intrinsic", "lower_bound", "upper_bound"])?;
    for r in rows {
        out.write_record([r.s, r.v, r.intrinsic, r.lower_bound, r.upper_bound].map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- convergence

fn check_levels<T: PartialOrd + Copy + std::fmt::Debug>(levels: &[T], decreasing: bool) -> Result<()> {
    ensure!(levels.len() >= 2, "a convergence sweep needs at least 2 levels, got {}", levels.len());
    for w in levels.windows(2) {
        let ok = if decreasing { w[1] < w[0] } else { w[1] > w[0] };
        ensure!(ok, "levels must refine strictly, got {levels:?}");
    }
    Ok(())
}

/// Compact reference for a spatial sweep: `reference_factor` times finer
/// than the finest level, same `k = C h²` linkage.
pub fn space_reference(s: &Settings) -> Result<GridField> {
    s.validate()?;
    check_levels(&s.space_levels, true)?;
    let h_min = *s.space_levels.last().expect("checked non-empty");
    let h_ref = h_min / s.reference_factor as f64;
    let run = run_method(s, Method::Hocfd, s.reference_scheme, h_ref, s.steps_for(h_ref))
        .context("computing the spatial reference")?;
    Ok(run.field)
}

/// Sweeps `space_levels` with `k = C h²` against `reference`.
pub fn converge_space_with(s: &Settings, method: Method, scheme: Scheme, reference: &GridField) -> Result<ConvergenceTable> {
    s.validate()?;
    check_levels(&s.space_levels, true)?;
    let mut table = ConvergenceTable::new();
    for &h in &s.space_levels {
        let n_tau = s.steps_for(h);
        let run = run_method(s, method, scheme, h, n_tau)?;
        let errors = error_vs_reference(&run.field, reference)
            .with_context(|| format!("level h = {h} does not nest in the reference grid"))?;
        table.push(ConvergenceLevel { h, k: s.params.maturity / n_tau as f64, errors })?;
    }
    Ok(table)
}

pub fn converge_space(s: &Settings, method: Method, scheme: Scheme) -> Result<ConvergenceTable> {
    let reference = space_reference(s)?;
    converge_space_with(s, method, scheme, &reference)
}

/// Fixes `h = time_h` and sweeps the step counts in `time_levels` against
/// the same discretization with `time_reference_steps` steps.
pub fn converge_time(s: &Settings, method: Method, scheme: Scheme) -> Result<ConvergenceTable> {
    s.validate()?;
    check_levels(&s.time_levels, false)?;
    let finest = *s.time_levels.last().expect("checked non-empty");
    ensure!(
        s.time_reference_steps > finest,
        "reference step count {} must exceed the finest level {finest}",
        s.time_reference_steps
    );
    let h = s.time_h;
    let reference = run_method(s, method, scheme, h, s.time_reference_steps).context("computing the temporal reference")?;
    let mut table = ConvergenceTable::new();
    for &n in &s.time_levels {
        let run = run_method(s, method, scheme, h, n)?;
        let errors = error_vs_reference(&run.field, &reference.field)?;
        table.push(ConvergenceLevel { h, k: s.params.maturity / n as f64, errors })?;
    }
    Ok(table)
}

// ---------------------------------------------------------------- bench

/// The benchmark rows; the first is the baseline.
pub const BENCH_ROWS: [(Method, Scheme); 5] = [
    (Method::Hocfd, Scheme::ImexCn),
    (Method::Fem, Scheme::ImexCn),
    (Method::Fd2, Scheme::ImexCn),
    (Method::Fd2, Scheme::Bdf2),
    (Method::Fd2, Scheme::Midpoint),
];

pub fn bench_label(method: Method, scheme: Scheme) -> String {
    match method {
        Method::Fem => "fem_q2".to_string(),
        _ => format!("{}_{}", method.label(), scheme.label()),
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub records: Vec<EfficiencyRecord>,
    /// Rows that failed, with the error message; their records carry NaN.
    pub failures: Vec<(String, String)>,
}

/// Times every row sequentially (best of `bench_repeats`) and ranks it
/// against the first row using the shared compact reference.
pub fn bench(s: &Settings) -> Result<BenchOutcome> {
    s.validate()?;
    let h = s.bench_h;
    let n_tau = s.n_tau.unwrap_or_else(|| s.steps_for(h));
    let h_ref = h / s.reference_factor as f64;
    let reference = run_method(s, Method::Hocfd, s.reference_scheme, h_ref, s.steps_for(h_ref))
        .context("computing the benchmark reference")?
        .field;

    let mut records = Vec::with_capacity(BENCH_ROWS.len());
    let mut failures = Vec::new();
    for (method, scheme) in BENCH_ROWS {
        let label = bench_label(method, scheme);
        match bench_row(s, method, scheme, h, n_tau, &reference) {
            Ok(mut r) => {
                r.method = label;
                records.push(r);
            }
            Err(e) => {
                failures.push((label.clone(), format!("{e:#}")));
                records.push(EfficiencyRecord {
                    method: label,
                    dof: 0,
                    time_s: f64::NAN,
                    times: Vec::new(),
                    l2: f64::NAN,
                    rmse: f64::NAN,
                    eta: f64::NAN,
                    q: s.eta_exponent,
                });
            }
        }
    }
    if failures.iter().any(|(l, _)| *l == records[0].method) {
        bail!("baseline row failed: {}", failures[0].1);
    }
    let base = records[0].clone();
    for r in records.iter_mut() {
        r.q = s.eta_exponent;
        if r.l2.is_finite() {
            r.eta = bates_core::analysis::efficiency(r.l2, r.time_s, base.l2, base.time_s, s.eta_exponent)?;
        }
    }
    records[0].eta = 1.0;
    Ok(BenchOutcome { records, failures })
}

fn bench_row(s: &Settings, method: Method, scheme: Scheme, h: f64, n_tau: usize, reference: &GridField) -> Result<EfficiencyRecord> {
    let mut times = Vec::with_capacity(s.bench_repeats);
    let mut last = None;
    for _ in 0..s.bench_repeats {
        let start = Instant::now();
        let run = run_method(s, method, scheme, h, n_tau)?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(run);
    }
    let run = last.expect("at least one repeat");
    let errors = error_vs_reference(&run.field, reference)?;
    let time_s = times.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EfficiencyRecord {
        method: String::new(),
        dof: run.dof,
        time_s,
        times,
        l2: errors.l2,
        rmse: errors.rmse,
        eta: f64::NAN,
        q: s.eta_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Settings {
        let mut s = Settings::default();
        s.jump_nodes = 32;
        s.space_levels = vec![0.4, 0.2];
        s.reference_factor = 2;
        s
    }

    #[test]
    fn level_validation() {
        assert!(check_levels(&[0.2], true).is_err());
        assert!(check_levels(&[0.1, 0.2], true).is_err());
        assert!(check_levels(&[0.2, 0.1], true).is_ok());
        assert!(check_levels(&[32, 64], false).is_ok());
        assert!(check_levels(&[64, 64], false).is_err());
    }

    #[test]
    fn small_space_sweep_has_two_levels() {
        let t = converge_space(&small(), Method::Fd2, Scheme::Midpoint).unwrap();
        assert_eq!(t.levels.len(), 2);
        assert!(t.final_l2_order().unwrap() > 0.0);
    }

    #[test]
    fn slice_respects_range() {
        let mut s = small();
        s.nx = 20;
        s.ny = 8;
        s.n_tau = Some(10);
        let r = price(&s).unwrap();
        assert!(!r.slice.is_empty());
        assert!(r.slice.iter().all(|row| (70.0..=130.0).contains(&row.s)));
    }
}
