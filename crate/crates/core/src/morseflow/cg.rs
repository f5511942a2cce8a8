#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradient for a symmetric positive definite operator `apply`.
///
/// Starts from zero, writes the solution into `x`, and stops once
/// `|r| <= rel_tol * |rhs|` or after `max_iter` iterations.
pub fn conjugate_gradient<F>(apply: F, rhs: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = rhs.to_vec();
    let mut rs = dot(&r, &r);
    let rhs_norm = rs.sqrt();
    if rhs_norm == 0.0 {
        return CgOutcome {
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
        };
    }
    let target = rel_tol * rhs_norm;
    let mut p = r.clone();
    let mut ap = vec![0.0; rhs.len()];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            break;
        }
        let alpha = rs / curvature;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= target {
            return CgOutcome {
                iterations: it,
                converged: true,
                relative_residual: rs_new.sqrt() / rhs_norm,
            };
        }
        let beta = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs = rs_new;
    }
    CgOutcome {
        iterations: max_iter,
        converged: false,
        relative_residual: rs.sqrt() / rhs_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // [[4, 1], [1, 3]] x = [1, 2] -> x = [1/11, 7/11]
        let apply = |v: &[f64], out: &mut [f64]| {
            out[0] = 4.0 * v[0] + v[1];
            out[1] = v[0] + 3.0 * v[1];
        };
        let mut x = [0.0; 2];
        let out = conjugate_gradient(apply, &[1.0, 2.0], &mut x, 1e-14, 10);
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let mut x = [5.0; 3];
        let out = conjugate_gradient(|v, o| o.copy_from_slice(v), &[0.0; 3], &mut x, 1e-12, 10);
        assert_eq!(out.iterations, 0);
        assert_eq!(x, [0.0; 3]);
    }
}
