//! Dense BFGS with Armijo backtracking for small unconstrained problems.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when `|Δf| / max(|f|, 1)` falls below this after an accepted
    /// step, provided the gradient max-norm is also below `f_rel_grad_guard`.
    pub f_rel_tol: f64,
    pub f_rel_grad_guard: f64,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    /// Largest coordinate change attempted by a single step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            f_rel_tol: 1e-8,
            f_rel_grad_guard: 1e-3,
            grad_tol: 1e-5,
            max_step: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(k: usize, scale: f64) -> Vec<f64> {
    let mut h = vec![0.0; k * k];
    for i in 0..k {
        h[i * k + i] = scale;
    }
    h
}

/// Minimizes `objective`, which returns the value and gradient at a point.
pub fn minimize<F>(mut objective: F, x0: &[f64], options: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let k = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective(&x);
    // inverse Hessian approximation, row-major
    let mut h = identity(k, 1.0);
    let mut fresh = true;
    let mut iterations = 0;

    if !f.is_finite() {
        return BfgsResult {
            x,
            f,
            grad: g,
            iterations,
            converged: false,
        };
    }

    while iterations < options.max_iterations {
        if max_norm(&g) < options.grad_tol {
            return BfgsResult {
                x,
                f,
                grad: g,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        let mut d: Vec<f64> = (0..k).map(|r| -dot(&h[r * k..(r + 1) * k], &g)).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            h = identity(k, 1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut step = (options.max_step / max_norm(&d)).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                break;
            }
            // retry from steepest descent before giving up
            h = identity(k, 1.0);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = identity(k, scale);
            }
            // H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..k).map(|r| dot(&h[r * k..(r + 1) * k], &y)).collect();
            let yhy = dot(&y, &hy);
            for r in 0..k {
                for c in 0..k {
                    h[r * k + c] += -rho * (hy[r] * s[c] + s[r] * hy[c])
                        + (rho * rho * yhy + rho) * s[r] * s[c];
                }
            }
            fresh = false;
        }

        let rel_change = (f - f_new).abs() / f.abs().max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if rel_change < options.f_rel_tol && max_norm(&g) < options.f_rel_grad_guard {
            return BfgsResult {
                x,
                f,
                grad: g,
                iterations,
                converged: true,
            };
        }
    }

    let converged = max_norm(&g) < options.grad_tol;
    BfgsResult {
        x,
        f,
        grad: g,
        iterations,
        converged,
    }
}
