//! Unconstrained quasi-Newton minimization (BFGS with backtracking).

/// Stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop after two consecutive iterations with relative decrease below this.
    pub rel_tol: f64,
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            rel_tol: 1e-9,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    RelativeChange,
    LineSearchStalled,
    MaxIterations,
    NonFiniteStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the value and gradient or `None` where the
/// objective is undefined (treated as +∞ by the line search).
pub fn minimize<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let Some((mut fx, mut g)) =
        f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite()))
    else {
        return BfgsResult {
            x,
            value: f64::INFINITY,
            gradient: vec![f64::NAN; n],
            iterations: 0,
            converged: false,
            reason: StopReason::NonFiniteStart,
        };
    };
    let identity = |scale: f64| -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut hinv = identity(1.0);
    let mut fresh = true;
    let mut small_steps = 0;
    let mut dir = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        if max_abs(&g) < opts.grad_tol {
            return finish(x, fx, g, iter - 1, true, StopReason::GradientTolerance);
        }
        for i in 0..n {
            dir[i] = -dot(&hinv[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            hinv = identity(1.0);
            fresh = true;
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
            slope = dot(&dir, &g);
        }
        // First step of a fresh (identity) metric is limited to unit length.
        let mut step = if fresh {
            1.0_f64.min(1.0 / max_abs(&dir).max(1e-300))
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite()
                    && gt.iter().all(|c| c.is_finite())
                    && ft <= fx + 1e-4 * step * slope
                {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if !fresh {
                hinv = identity(1.0);
                fresh = true;
                continue;
            }
            let converged = max_abs(&g) < 100.0 * opts.grad_tol;
            return finish(x, fx, g, iter, converged, StopReason::LineSearchStalled);
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let rel = (fx - f_new).abs() / fx.abs().max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                hinv = identity(scale);
                fresh = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        if rel < opts.rel_tol {
            small_steps += 1;
            if small_steps >= 2 {
                return finish(x, fx, g, iter, true, StopReason::RelativeChange);
            }
        } else {
            small_steps = 0;
        }
    }
    let converged = max_abs(&g) < opts.grad_tol;
    finish(
        x,
        fx,
        g,
        opts.max_iter,
        converged,
        StopReason::MaxIterations,
    )
}

fn finish(
    x: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
    iterations: usize,
    converged: bool,
    reason: StopReason,
) -> BfgsResult {
    BfgsResult {
        x,
        value,
        gradient,
        iterations,
        converged,
        reason,
    }
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ with ρ = 1/(sᵀy).
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
