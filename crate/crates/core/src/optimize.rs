//! Small-dimensional optimizers used by the built-in models and the
//! contour searches: damped Newton with backtracking, Nelder–Mead, bisection,
//! and finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Options for [`newton_maximize`].
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop when the sup-norm of the gradient drops below this.
    pub grad_tol: f64,
    /// Stop when the objective improves by less than this.
    pub value_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-9,
            value_tol: 1e-14,
        }
    }
}

/// Maximize a smooth objective with a damped Newton iteration.
///
/// When the Hessian is not negative definite the step falls back to gradient
/// ascent. Each step is halved until the objective increases.
pub fn newton_maximize(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    hess: &dyn Fn(&[f64]) -> DMatrix<f64>,
    x0: &[f64],
    opts: NewtonOptions,
) -> Optimum {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Optimum {
            x,
            value: fx,
            iterations: 0,
            converged: false,
        };
    }
    for it in 0..opts.max_iter {
        let g = DVector::from_vec(grad(&x));
        if !g.iter().all(|v| v.is_finite()) {
            return Optimum {
                x,
                value: fx,
                iterations: it,
                converged: false,
            };
        }
        let gmax = g.amax();
        if gmax < opts.grad_tol * (1.0 + fx.abs()) {
            return Optimum {
                x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
        let neg_h = -hess(&x);
        let dir = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                // gradient ascent scaled by the Hessian's magnitude
                let scale = neg_h.amax().max(1.0);
                &g / scale
            }
        };
        let mut step = 1.0;
        let mut improved = false;
        let mut trial = vec![0.0; d];
        for _ in 0..60 {
            for i in 0..d {
                trial[i] = x[i] + step * dir[i];
            }
            let ft = f(&trial);
            if ft.is_finite() && ft >= fx {
                let gain = ft - fx;
                x.copy_from_slice(&trial);
                fx = ft;
                improved = true;
                if gain <= opts.value_tol * (1.0 + fx.abs()) {
                    let g2 = DVector::from_vec(grad(&x));
                    let conv = g2.amax() < opts.grad_tol.sqrt() * (1.0 + fx.abs());
                    return Optimum {
                        x,
                        value: fx,
                        iterations: it + 1,
                        converged: conv,
                    };
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            let conv = gmax < opts.grad_tol.sqrt() * (1.0 + fx.abs());
            return Optimum {
                x,
                value: fx,
                iterations: it + 1,
                converged: conv,
            };
        }
    }
    Optimum {
        x,
        value: fx,
        iterations: opts.max_iter,
        converged: false,
    }
}

/// Minimize `f` with the Nelder–Mead simplex method.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], initial_step: &[f64], max_iter: usize, tol: f64) -> Optimum {
    let d = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += if initial_step[i] != 0.0 { initial_step[i] } else { 0.05 };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[d] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + values[0].abs()) && size <= tol.sqrt() {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; d];
        for p in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[d]).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=d {
                    for j in 0..d {
                        simplex[i][j] = best[j] + 0.5 * (simplex[i][j] - best[j]);
                    }
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty simplex");
    Optimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Root of a continuous function on `[lo, hi]` whose endpoint values bracket zero.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Central-difference Jacobian of a gradient, symmetrized. Step for
/// coordinate i is `rel_step * (1 + |x_i|)`.
pub fn fd_hessian_from_gradient(grad: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], rel_step: f64) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    for j in 0..d {
        let step = rel_step * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        let gp = grad(&xp);
        xp[j] = x[j] - step;
        let gm = grad(&xp);
        xp[j] = x[j];
        for i in 0..d {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let opt = nelder_mead(&rosen, &[-1.2, 1.0], &[0.1, 0.1], 5000, 1e-14);
        assert!(
            (opt.x[0] - 1.0).abs() < 1e-4 && (opt.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            opt
        );
    }

    #[test]
    fn newton_on_concave_quadratic() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 3.0).powi(2) - x[0] * x[1];
        let g = |x: &[f64]| vec![-2.0 * (x[0] - 1.0) - x[1], -4.0 * (x[1] + 3.0) - x[0]];
        let h = |_: &[f64]| DMatrix::from_row_slice(2, 2, &[-2.0, -1.0, -1.0, -4.0]);
        let opt = newton_maximize(&f, &g, &h, &[0.0, 0.0], NewtonOptions::default());
        assert!(opt.converged);
        let gr = g(&opt.x);
        assert!(gr[0].abs() < 1e-10 && gr[1].abs() < 1e-10);
    }

    #[test]
    fn bisect_and_fd_hessian() {
        let r = bisect(&|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(&|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_none());
        let g = |x: &[f64]| vec![3.0 * x[0] * x[0] + x[1], x[0]];
        let h = fd_hessian_from_gradient(&g, &[2.0, 1.0], 1e-5);
        assert!((h[(0, 0)] - 12.0).abs() < 1e-6 && (h[(0, 1)] - 1.0).abs() < 1e-8);
    }
}
