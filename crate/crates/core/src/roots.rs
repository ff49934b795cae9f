//! Scalar and two-dimensional root finders.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket, stopping when the bracket is
/// narrower than `xtol` or `f` vanishes.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSolution(format!("bisection bracket [{lo}, {hi}] does not change sign")));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < xtol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brent's method. Returns the root once |f| <= `ftol` or the bracket
/// has collapsed to `xtol`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, ftol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.abs() <= ftol {
        return Ok(a);
    }
    if fb.abs() <= ftol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSolution(format!("Brent bracket [{a}, {b}] does not change sign")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Convergence { iterations: max_iter, residuals: vec![fb] })
}

/// Uniform scan of `f` on [lo, hi] with `n` points; returns every bracket
/// (x_k, x_{k+1}) on which the sign changes.
pub fn scan_brackets<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let h = (hi - lo) / (n - 1) as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..n {
        let x1 = if k == n - 1 { hi } else { lo + h * k as f64 };
        let f1 = f(x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Golden-section maximisation of a unimodal function on [a, b].
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > xtol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Newton2dOptions {
    /// Convergence threshold on max |residual|.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step per coordinate.
    pub fd_step: [f64; 2],
    /// Search box used by the fallback when Newton stalls.
    pub bounds: [(f64, f64); 2],
}

fn norm_inf(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

fn newton_run<F: FnMut([f64; 2]) -> [f64; 2]>(
    f: &mut F,
    x0: [f64; 2],
    opts: &Newton2dOptions,
    budget: &mut usize,
) -> ([f64; 2], [f64; 2]) {
    let mut x = x0;
    let mut r = f(x);
    while *budget > 0 && norm_inf(r) > opts.tol {
        *budget -= 1;
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = opts.fd_step[j] * x[j].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let rp = f(xp);
            let rm = f(xm);
            for i in 0..2 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        // Backtracking damping.
        let mut lambda = 1.0;
        let base = norm_inf(r);
        let mut accepted = false;
        for _ in 0..30 {
            let xn = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            let rn = f(xn);
            if rn.iter().all(|v| v.is_finite()) && norm_inf(rn) < base {
                x = xn;
                r = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, r)
}

/// Damped Newton with a central finite-difference Jacobian. If Newton
/// stalls, the box is sampled on a grid, the best cell restarts Newton,
/// and the box shrinks around it.
pub fn newton_2d<F: FnMut([f64; 2]) -> [f64; 2]>(mut f: F, x0: [f64; 2], opts: Newton2dOptions) -> Result<[f64; 2]> {
    let mut budget = opts.max_iter;
    let (mut x, mut r) = newton_run(&mut f, x0, &opts, &mut budget);
    if norm_inf(r) <= opts.tol {
        return Ok(x);
    }
    let mut bounds = opts.bounds;
    let samples = 21;
    for _ in 0..8 {
        if budget == 0 {
            break;
        }
        let mut best = (x, norm_inf(r));
        for i in 0..samples {
            for j in 0..samples {
                let p = [
                    bounds[0].0 + (bounds[0].1 - bounds[0].0) * i as f64 / (samples - 1) as f64,
                    bounds[1].0 + (bounds[1].1 - bounds[1].0) * j as f64 / (samples - 1) as f64,
                ];
                let v = norm_inf(f(p));
                if v.is_finite() && v < best.1 {
                    best = (p, v);
                }
            }
        }
        let (xn, rn) = newton_run(&mut f, best.0, &opts, &mut budget);
        x = xn;
        r = rn;
        if norm_inf(r) <= opts.tol {
            return Ok(x);
        }
        for (k, b) in bounds.iter_mut().enumerate() {
            let half = 0.25 * (b.1 - b.0);
            *b = (best.0[k] - half, best.0[k] + half);
        }
    }
    Err(Error::Convergence { iterations: opts.max_iter, residuals: r.to_vec() })
}
