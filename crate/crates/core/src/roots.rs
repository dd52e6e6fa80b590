//! One-dimensional bracketed solvers.

use crate::error::{Error, Result};

const MAX_ITER: usize = 300;

/// Newton iteration safeguarded by a sign-change bracket.
///
/// `f` returns the residual and its derivative. `lo < hi` must bracket a sign
/// change. Any Newton step that leaves the bracket, or is not finite, is
/// replaced by bisection. Stops once the step (or the bracket width) falls
/// below `atol + rtol * |x|`.
pub(crate) fn newton_bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    atol: f64,
    rtol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let (f_hi, _) = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::RootNotFound(
            "interval does not bracket a sign change",
        ));
    }
    let lo_negative = f_lo < 0.0;

    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let tol = atol + rtol * next.abs();
        if next == x || (next - x).abs() <= tol || (hi - lo) <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootNotFound("iteration limit reached"))
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
///
/// Returns the abscissa and value of the minimum.
pub(crate) fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
