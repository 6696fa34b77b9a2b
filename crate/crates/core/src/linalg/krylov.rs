//! Right-preconditioned BiCGStab with restart on breakdown.

use super::{dot, norm2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Final relative residual ‖b − A x‖₂ / ‖b‖₂.
    pub residual: f64,
}

/// Solves `A x = b` to `‖b − A x‖₂ ≤ tol ‖b‖₂`, starting from the contents
/// of `x`. `precond(r, z)` must write an approximation of `A⁻¹ r` into `z`.
pub fn bicgstab<A, P>(
    mut apply: A,
    mut precond: P,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovStats>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats { iterations: 0, residual: 0.0 });
    }
    let target = tol * b_norm;

    let mut r = vec![0.0; n];
    let true_residual = |apply: &mut A, x: &[f64], r: &mut [f64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm2(r)
    };
    let mut r_norm = true_residual(&mut apply, x, &mut r);
    if r_norm <= target {
        return Ok(KrylovStats { iterations: 0, residual: r_norm / b_norm });
    }

    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-30 * r_norm * r_norm || omega == 0.0 {
            // breakdown: restart from the current residual
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|x| *x = 0.0);
            v.iter_mut().for_each(|x| *x = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            iterations -= 1;
            if dot(&r_hat, &r) == 0.0 {
                break;
            }
            iterations += 1;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        precond(&p, &mut p_hat);
        apply(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / denom;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if norm2(&s) <= target {
            for k in 0..n {
                x[k] += alpha * p_hat[k];
            }
            r_norm = true_residual(&mut apply, x, &mut r);
            if r_norm <= target {
                return Ok(KrylovStats { iterations, residual: r_norm / b_norm });
            }
            omega = 0.0;
            continue;
        }
        precond(&s, &mut s_hat);
        apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * p_hat[k] + omega * s_hat[k];
            r[k] = s[k] - omega * t[k];
        }
        r_norm = norm2(&r);
        if r_norm <= target {
            r_norm = true_residual(&mut apply, x, &mut r);
            if r_norm <= target {
                return Ok(KrylovStats { iterations, residual: r_norm / b_norm });
            }
            omega = 0.0;
        }
    }
    let r_norm = true_residual(&mut apply, x, &mut r);
    if r_norm <= target {
        return Ok(KrylovStats { iterations, residual: r_norm / b_norm });
    }
    Err(Error::SolverDivergence { iterations, residual: r_norm / b_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_immediately() {
        let b = vec![1.0, -2.0, 3.0];
        let mut x = vec![0.0; 3];
        let stats = bicgstab(|v, o| o.copy_from_slice(v), |v, o| o.copy_from_slice(v), &b, &mut x, 1e-12, 10).unwrap();
        assert!(stats.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn nonsymmetric_system() {
        let n = 50;
        let apply = |v: &[f64], o: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * v[i];
                if i > 0 {
                    s -= 1.4 * v[i - 1];
                }
                if i + 1 < n {
                    s -= 0.6 * v[i + 1];
                }
                o[i] = s;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let stats = bicgstab(apply, |v, o| o.copy_from_slice(v), &b, &mut x, 1e-12, 200).unwrap();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let res: f64 = ax.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * norm2(&b) * 1.0001, "{stats:?}");
    }

    #[test]
    fn divergence_is_reported() {
        let b = vec![1.0; 20];
        let mut x = vec![0.0; 20];
        // indefinite diagonal with a tiny iteration cap
        let err = bicgstab(
            |v, o| {
                for (i, (a, b)) in v.iter().zip(o.iter_mut()).enumerate() {
                    *b = if i % 2 == 0 { *a } else { -(i as f64) * *a };
                }
            },
            |v, o| o.copy_from_slice(v),
            &b,
            &mut x,
            1e-14,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverDivergence { iterations: 1, .. }));
    }
}
