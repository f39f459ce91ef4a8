//! Dense BFGS with a strong-Wolfe line search, sized for a handful of
//! variables.

#[derive(Debug, Clone, Copy)]
pub struct BfgsSettings {
    pub gradient_tolerance: f64,
    pub cost_tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `‖∇f‖∞` fell below the gradient tolerance.
    Gradient,
    /// An accepted step changed `f` by less than the cost tolerance.
    CostStall,
    /// The line search could not improve `f` further at working precision.
    LineSearchStall,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 40;

/// Minimizes `f` from `x0`. `f` writes the gradient into its second argument
/// and returns the value.
pub fn minimize<F>(mut f: F, x0: &[f64], settings: &BfgsSettings) -> BfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut h = identity(n);
    let mut first_step = true;

    let mut p = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];

    for iteration in 0..settings.max_iterations {
        if inf_norm(&g) < settings.gradient_tolerance {
            return done(x, fx, iteration, Termination::Gradient);
        }

        mat_vec_neg(&h, &g, &mut p);
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            // Lost positive definiteness; restart from steepest descent.
            h = identity(n);
            first_step = true;
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi = -gi;
            }
            slope = dot(&g, &p);
        }
        let alpha0 = if first_step {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let accepted = line_search(&mut f, &x, fx, slope, &p, alpha0, &mut x_new, &mut g_new);
        let Some(f_new) = accepted else {
            return done(x, fx, iteration, Termination::LineSearchStall);
        };

        for i in 0..n {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        let change = fx - f_new;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;

        if change.abs() < settings.cost_tolerance {
            return done(x, fx, iteration + 1, Termination::CostStall);
        }

        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if first_step {
                let yy = dot(&y, &y);
                let scale = sy / yy;
                h = identity(n);
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = scale;
                }
                first_step = false;
            }
            update_inverse_hessian(&mut h, &s, &y, sy);
        }
    }
    done(x, fx, settings.max_iterations, Termination::MaxIterations)
}

fn done(x: Vec<f64>, value: f64, iterations: usize, termination: Termination) -> BfgsOutcome {
    BfgsOutcome {
        x,
        value,
        iterations,
        termination,
    }
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`, `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    let factor = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += factor * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Strong-Wolfe search along `p`. On success `x_out`/`g_out` hold the new
/// point and the value is returned.
#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    p: &[f64],
    alpha0: f64,
    x_out: &mut [f64],
    g_out: &mut [f64],
) -> Option<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut trial_g = vec![0.0; n];
    let mut trial_x = vec![0.0; n];
    let mut eval = |alpha: f64, gx: &mut Vec<f64>, xx: &mut Vec<f64>| -> (f64, f64) {
        for i in 0..n {
            xx[i] = x[i] + alpha * p[i];
        }
        let v = f(xx, gx);
        (v, dot(gx, p))
    };

    // Best Armijo-satisfying point seen so far, used if Wolfe never holds.
    let mut fallback: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let note = |v: f64, alpha: f64, xx: &[f64], gx: &[f64], fb: &mut Option<(f64, Vec<f64>, Vec<f64>)>| {
        if v < f0 + C1 * alpha * slope0 && fb.as_ref().is_none_or(|(best, _, _)| v < *best) {
            *fb = Some((v, xx.to_vec(), gx.to_vec()));
        }
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = alpha0;
    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None;

    for i in 0..MAX_LINE_SEARCH {
        let (fa, da) = eval(alpha, &mut trial_g, &mut trial_x);
        if !fa.is_finite() {
            alpha = 0.5 * (alpha_prev + alpha);
            continue;
        }
        note(fa, alpha, &trial_x, &trial_g, &mut fallback);
        if fa > f0 + C1 * alpha * slope0 || (i > 0 && fa >= f_prev) {
            bracket = Some((alpha_prev, f_prev, slope_prev, alpha, fa, da));
            break;
        }
        if da.abs() <= -C2 * slope0 {
            x_out.copy_from_slice(&trial_x);
            g_out.copy_from_slice(&trial_g);
            return Some(fa);
        }
        if da >= 0.0 {
            bracket = Some((alpha, fa, da, alpha_prev, f_prev, slope_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = fa;
        slope_prev = da;
        alpha *= 2.0;
    }

    if let Some((mut lo, mut f_lo, mut d_lo, mut hi, mut f_hi, mut d_hi)) = bracket {
        for _ in 0..MAX_LINE_SEARCH {
            if (hi - lo).abs() <= 1e-16 * lo.abs().max(hi.abs()).max(1e-300) {
                break;
            }
            let a = interpolate(lo, f_lo, d_lo, hi, f_hi, d_hi);
            let (fa, da) = eval(a, &mut trial_g, &mut trial_x);
            note(fa, a, &trial_x, &trial_g, &mut fallback);
            if !fa.is_finite() || fa > f0 + C1 * a * slope0 || fa >= f_lo {
                hi = a;
                f_hi = fa;
                d_hi = da;
            } else {
                if da.abs() <= -C2 * slope0 {
                    x_out.copy_from_slice(&trial_x);
                    g_out.copy_from_slice(&trial_g);
                    return Some(fa);
                }
                if da * (hi - lo) >= 0.0 {
                    hi = lo;
                    f_hi = f_lo;
                    d_hi = d_lo;
                }
                lo = a;
                f_lo = fa;
                d_lo = da;
            }
        }
    }

    let (v, xx, gx) = fallback?;
    if v < f0 {
        x_out.copy_from_slice(&xx);
        g_out.copy_from_slice(&gx);
        Some(v)
    } else {
        None
    }
}

/// Cubic interpolation on `[lo, hi]`, safeguarded to the middle 80% of the
/// interval; bisection if the cubic is unusable.
fn interpolate(lo: f64, f_lo: f64, d_lo: f64, hi: f64, f_hi: f64, d_hi: f64) -> f64 {
    let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
    let width = b - a;
    let mid = 0.5 * (lo + hi);
    if !(f_hi.is_finite() && d_hi.is_finite()) {
        return mid;
    }
    let d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (lo - hi);
    let disc = d1 * d1 - d_lo * d_hi;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (hi - lo).signum() * disc.sqrt();
    let denom = d_hi - d_lo + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let candidate = hi - (hi - lo) * (d_hi + d2 - d1) / denom;
    if !candidate.is_finite() {
        return mid;
    }
    candidate.clamp(a + 0.1 * width, b - 0.1 * width)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec_neg(h: &[Vec<f64>], g: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(h) {
        *o = -dot(row, g);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
