use bates_core::jump::{build_quadrature, JumpOperator};
use bates_core::ops::{Closure, compact_dx, compact_dxx, compact_dxy, LocalCoefficients, LocalOperator};
use bates_core::solver::{solve_fd, FdOptions, FdProblem, JumpSettings};
use bates_core::stepper::{Dynamics, Scheme, SchemeConfig};
use bates_core::{model, BatesParams, Domain, Grid2D, GridField, SpatialOrder};

fn max_err(a: &[f64], b: impl Fn(usize) -> f64, range: std::ops::Range<usize>) -> f64 {
    range.map(|i| (a[i] - b(i)).abs()).fold(0.0, f64::max)
}

#[test]
fn first_derivative_of_sine_is_fourth_order() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut errs = Vec::new();
    for n in [32usize, 64, 128, 256] {
        let h = two_pi / n as f64;
        let line: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
        let d = compact_dx(&line, h).unwrap();
        errs.push(max_err(&d, |i| (i as f64 * h).cos(), 0..n + 1));
    }
    for w in errs.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 4.0).abs() <= 0.3, "order {p}");
    }
}

#[test]
fn second_derivative_of_exponential_is_fourth_order() {
    let mut errs = Vec::new();
    for n in [16usize, 32, 64, 128] {
        let h = 1.0 / n as f64;
        let line: Vec<f64> = (0..=n).map(|i| (i as f64 * h).exp()).collect();
        let d = compact_dxx(&line, h).unwrap();
        errs.push(max_err(&d, |i| (i as f64 * h).exp(), 0..n + 1));
    }
    for w in errs.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 4.0).abs() <= 0.3, "order {p}");
    }
}

#[test]
fn mixed_derivative_of_sine_product() {
    let domain = Domain { x_min: 0.0, x_max: 1.0, y_min: 1.0, y_max: 2.0 };
    let mut errs = Vec::new();
    for n in [10usize, 20, 40] {
        let g = Grid2D::new(domain, n, n).unwrap();
        let u = GridField::from_fn(&g, |x, y| x.sin() * y.sin());
        let d = compact_dxy(&u).unwrap();
        let exact = GridField::from_fn(&g, |x, y| x.cos() * y.cos());
        errs.push(max_err(d.values(), |k| exact.values()[k], 0..g.node_count()));
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 3.5);
    }
}

/// Interior truncation of the full Bates operator on a smooth field.
fn local_truncation(order: SpatialOrder) -> Vec<f64> {
    let p = BatesParams::reference();
    let u = |x: f64, y: f64| (0.8 * x).sin() * (0.5 * y).cos();
    let ux = |x: f64, y: f64| 0.8 * (0.8 * x).cos() * (0.5 * y).cos();
    let uxx = |x: f64, y: f64| -0.64 * u(x, y);
    let uy = |x: f64, y: f64| -0.5 * (0.8 * x).sin() * (0.5 * y).sin();
    let uyy = |x: f64, y: f64| -0.25 * u(x, y);
    let uxy = |x: f64, y: f64| -0.4 * (0.8 * x).cos() * (0.5 * y).sin();
    let mut errs = Vec::new();
    for n in [10usize, 20, 40] {
        let g = Grid2D::new(Domain::standard(), n, n).unwrap();
        let op = LocalOperator::with_y_closure(LocalCoefficients::bates(&g, &p), order, Closure::OneSided).unwrap();
        let lu = op.apply(&GridField::from_fn(&g, u)).unwrap();
        let (s, r, k, th) = (p.sigma, p.rate, p.kappa, p.theta);
        let mut e = 0.0f64;
        for j in 1..n {
            for i in 1..n {
                let (x, y) = (g.x(i), g.y(j));
                let a = s / (2.0 * y);
                let b = s * y.powi(3) / 2.0;
                let c = -p.rho * s * y;
                let d = (r - p.lambda) - s / (2.0 * y);
                let ee = s * y * y + k * y - k * th * y * y / s;
                let exact = a * uxx(x, y) + b * uyy(x, y) + c * uxy(x, y) + d * ux(x, y) + ee * uy(x, y);
                e = e.max((lu.get(i, j) - exact).abs());
            }
        }
        errs.push(e);
    }
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn compact_local_truncation_is_fourth_order() {
    for p in local_truncation(SpatialOrder::Compact4) {
        assert!(p >= 3.5, "order {p}");
    }
}

#[test]
fn centered_local_truncation_is_second_order() {
    for p in local_truncation(SpatialOrder::Centered2) {
        assert!((p - 2.0).abs() <= 0.3, "order {p}");
    }
}

#[test]
fn jump_of_linear_field_matches_gaussian_moments() {
    let p = BatesParams::reference();
    let quad = build_quadrature(p.mu_j, p.sigma_j, 64, 8.0).unwrap();
    let g = Grid2D::new(Domain::standard(), 40, 4).unwrap();
    let op = JumpOperator::new(&g, &p, quad, SpatialOrder::Centered2).unwrap();
    let u = GridField::from_fn(&g, |x, _| x);
    let dxu = vec![1.0; g.node_count()];
    let mut out = vec![0.0; g.node_count()];
    op.apply_plan_with(u.values(), &dxu, |x| x, |x| x, &mut out);
    let expected = p.lambda * (p.mu_j - (p.mu_j + 0.5 * p.sigma_j * p.sigma_j).exp_m1());
    for v in out {
        assert!((v - expected).abs() < 1e-8, "{v} vs {expected}");
    }
}

#[test]
fn linear_solves_stay_within_iteration_bound() {
    // h = 0.1, k = h²
    let p = BatesParams::reference();
    let g = Grid2D::new(Domain::standard(), 40, 40).unwrap();
    let cfg = SchemeConfig::new(Scheme::ImexCn, p.maturity, 100).unwrap().with_solver(1e-10, 500).unwrap();
    let sol = solve_fd(&p, &g, SpatialOrder::Compact4, &cfg, &FdOptions::default()).unwrap();
    assert_eq!(sol.steps.len(), 100);
    assert!(sol.steps.iter().all(|s| s.lin_iters < 500 && s.residual <= 1e-10));
}

#[test]
fn jump_term_vanishes_on_dirichlet_columns() {
    let p = BatesParams::reference();
    let g = Grid2D::new(Domain::standard(), 20, 20).unwrap();
    let prob = FdProblem::new(&p, &g, SpatialOrder::Compact4, JumpSettings { nodes: 32, width: 8.0 }).unwrap();
    let u = model::initial_condition(&g);
    let mut out = vec![1.0; g.node_count()];
    prob.jump(u.values(), 0.3, &mut out);
    for j in 0..=g.ny() {
        assert_eq!(out[g.index(0, j)], 0.0);
        assert_eq!(out[g.index(g.nx(), j)], 0.0);
    }
    assert!(out.iter().any(|&v| v != 0.0));
}
