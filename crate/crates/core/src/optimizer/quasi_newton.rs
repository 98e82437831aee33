//! BFGS with Armijo backtracking, generic over how gradients are obtained.

/// Objective exposing values and gradients. Errors abort the minimization
/// and are returned to the caller unchanged.
pub trait GradientObjective {
    type Error;
    fn value(&mut self, x: &[f64]) -> Result<f64, Self::Error>;
    /// `fx` is the already known value at `x`.
    fn gradient(&mut self, x: &[f64], fx: f64) -> Result<Vec<f64>, Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the infinity norm of the gradient drops below this.
    pub grad_tol: f64,
    /// Stop when an accepted step lowers f by less than `f_tol * (1 + |f|)`.
    pub f_tol: f64,
    /// Longest trial step.
    pub max_step: f64,
    pub armijo_c1: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            f_tol: 1e-12,
            max_step: f64::INFINITY,
            armijo_c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn bfgs<O: GradientObjective>(
    obj: &mut O,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<BfgsOutcome, O::Error> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x)?;
    let mut g = obj.gradient(&x, f)?;
    let identity = |n: usize| {
        let mut h = vec![vec![0.0; n]; n];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        h
    };
    let mut h = identity(n);
    let mut first_update = true;

    for iter in 0..opts.max_iter {
        if norm_inf(&g) <= opts.grad_tol {
            return Ok(BfgsOutcome {
                x,
                f,
                iterations: iter,
                converged: true,
            });
        }
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            first_update = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let len = dot(&d, &d).sqrt();
        if len > opts.max_step {
            let s = opts.max_step / len;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let ft = obj.value(&trial)?;
            if ft.is_finite() && ft <= f + opts.armijo_c1 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            return Ok(BfgsOutcome {
                x,
                f,
                iterations: iter,
                converged: false,
            });
        };
        let g_new = obj.gradient(&x_new, f_new)?;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first_update {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, r)| r[i] = scale);
                first_update = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        let drop = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if drop <= opts.f_tol * (1.0 + f.abs()) {
            let converged = norm_inf(&g) <= opts.grad_tol || drop >= 0.0;
            return Ok(BfgsOutcome {
                x,
                f,
                iterations: iter + 1,
                converged,
            });
        }
    }
    let converged = norm_inf(&g) <= opts.grad_tol;
    Ok(BfgsOutcome {
        x,
        f,
        iterations: opts.max_iter,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    struct Rosenbrock;

    impl GradientObjective for Rosenbrock {
        type Error = Infallible;
        fn value(&mut self, x: &[f64]) -> Result<f64, Infallible> {
            Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        }
        fn gradient(&mut self, x: &[f64], _: f64) -> Result<Vec<f64>, Infallible> {
            Ok(vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ])
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let opts = BfgsOptions {
            max_iter: 500,
            grad_tol: 1e-10,
            f_tol: 0.0,
            ..Default::default()
        };
        let r = bfgs(&mut Rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
    }

    struct Quadratic(Vec<f64>);

    impl GradientObjective for Quadratic {
        type Error = Infallible;
        fn value(&mut self, x: &[f64]) -> Result<f64, Infallible> {
            Ok(x.iter().zip(&self.0).map(|(v, c)| c * v * v).sum())
        }
        fn gradient(&mut self, x: &[f64], _: f64) -> Result<Vec<f64>, Infallible> {
            Ok(x.iter().zip(&self.0).map(|(v, c)| 2.0 * c * v).collect())
        }
    }

    #[test]
    fn quadratic_converges_quickly() {
        let mut q = Quadratic(vec![1.0, 10.0, 100.0]);
        let r = bfgs(&mut q, &[1.0, 1.0, 1.0], &BfgsOptions::default()).unwrap();
        assert!(r.f < 1e-14);
        assert!(r.iterations < 30);
    }

    #[test]
    fn already_optimal_returns_immediately() {
        let r = bfgs(&mut Quadratic(vec![1.0]), &[0.0], &BfgsOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }
}
