//! Direct integration of the relative motion, used as an oracle for the
//! closed-form map.
//!
//! With `s = s_i·y` and `t = T·τ`, `T = √(m s_i³/(2e²))`, the equation
//! `s̈ = 2e²/(m s²)` becomes `y'' = 1/y²` with `y(0) = 1`, `y'(0) = 0` and the
//! conserved energy `y'²/2 + 1/y = 1`. Integration uses the Dormand–Prince
//! 5(4) pair with per-step error control.

use crate::constants::CODATA;
use crate::error::{Error, Result};
use crate::units::{Length, Time, Velocity};

/// Result of an oracle integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSolution {
    /// Separation at the end time.
    pub s_f: Length,
    /// Relative speed `ṡ` at the end time.
    pub s_dot: Velocity,
    /// Largest relative deviation of `(m/4)ṡ² + e²/s` from `e²/s_i` seen at
    /// any accepted step.
    pub energy_drift: f64,
    /// Accepted steps.
    pub steps: usize,
    /// Rejected steps.
    pub rejected: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error estimate
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

#[inline]
fn rhs(s: &State) -> State {
    [s[1], 1.0 / (s[0] * s[0])]
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

#[inline]
fn energy(s: &State) -> f64 {
    0.5 * s[1] * s[1] + 1.0 / s[0]
}

/// Integrate a pair released at rest with separation `s_i` for `dt`.
///
/// `rtol` bounds the local error of each step relative to the state.
pub fn ode_oracle(s_i: Length, dt: Time, rtol: f64) -> Result<OdeSolution> {
    let s0 = s_i.as_nm();
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(Error::Domain {
            what: "initial separation",
            value: s0,
        });
    }
    if !(dt.as_ns() >= 0.0) || !dt.as_ns().is_finite() {
        return Err(Error::Domain {
            what: "integration time",
            value: dt.as_ns(),
        });
    }
    if !(rtol > 0.0) {
        return Err(Error::Domain {
            what: "relative tolerance",
            value: rtol,
        });
    }
    let m = CODATA.electron_mass();
    let t_unit = libm::sqrt(m * s0 * s0 * s0 / (2.0 * CODATA.e2));
    let tau_end = dt.as_ns() / t_unit;

    let mut y: State = [1.0, 0.0];
    let mut tau = 0.0;
    let mut drift = 0.0f64;
    let mut steps = 0;
    let mut rejected = 0;
    let mut h = (0.1 * libm::pow(rtol, 0.2)).min(tau_end);
    let mut k1 = rhs(&y);

    while tau < tau_end {
        if tau + h > tau_end {
            h = tau_end - tau;
        }
        if h <= 1e-14 * tau.max(1.0) && tau_end - tau > h {
            return Err(Error::IntegrationFailed {
                reached: tau * t_unit,
            });
        }
        let k2 = rhs(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&axpy(
            &y,
            h,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = rhs(&axpy(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let next = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = rhs(&next);

        let mut err = 0.0f64;
        for i in 0..2 {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = rtol * y[i].abs().max(next[i].abs()).max(1.0);
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
            rejected += 1;
            continue;
        }
        if err <= 1.0 {
            tau += h;
            y = next;
            k1 = k7;
            steps += 1;
            drift = drift.max((energy(&y) - 1.0).abs());
        } else {
            rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    let v_unit = s0 / t_unit;
    Ok(OdeSolution {
        s_f: Length::nm(y[0] * s0),
        s_dot: Velocity::nm_per_ns(y[1] * v_unit),
        energy_drift: drift,
        steps,
        rejected,
    })
}
