//! Scalar root finding on a sign-changing bracket.

use crate::error::{Error, Result};

/// Plain bisection. `f(lo)` and `f(hi)` must have opposite signs (or one of
/// them is zero). Stops when the bracket is narrower than `xtol` or the
/// residual drops below `ftol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootNotFound(format!(
            "bracket [{lo}, {hi}] does not change sign"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 || fmid.abs() < ftol {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo <= xtol.max(4.0 * f64::EPSILON * mid.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration kept inside a shrinking bracket; falls back to bisection
/// whenever a Newton step leaves the bracket or stalls. `fdf` returns the
/// value and the derivative.
pub fn safeguarded_newton<F>(mut fdf: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootNotFound(format!(
            "bracket [{lo}, {hi}] does not change sign"
        )));
    }
    // orient so that f(lo) < 0 < f(hi)
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for _ in 0..200 {
        if fx.abs() <= ftol {
            return Ok(x);
        }
        let newton_out = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        if newton_out || (2.0 * fx).abs() > (dx_old * dfx).abs() || dfx == 0.0 {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            let (f_end, _) = fdf(x);
            if f_end.abs() <= ftol.max(1e-15) * 1e3 {
                return Ok(x);
            }
        }
        let (f_new, df_new) = fdf(x);
        fx = f_new;
        dfx = df_new;
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    if fx.abs() <= ftol {
        Ok(x)
    } else {
        Err(Error::RootNotFound(format!(
            "safeguarded Newton stalled at x = {x}, residual {fx:e}"
        )))
    }
}
