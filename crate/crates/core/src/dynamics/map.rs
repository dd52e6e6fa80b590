//! The dimensionless pair map `u ↦ u·σ(u)`.
//!
//! Internally the expansion ratio is carried as `w = √(σ−1)`. In that
//! variable `h = w√(1+w²) + asinh(w)` and `dh/dw = 2√(1+w²)`, so the
//! implicit equation is a smooth convex root problem and `σ − 1 = w²` keeps
//! full relative precision even when `σ` rounds to one.

use alloc::vec::Vec;

use super::CoulombScale;
use crate::error::{Error, Result};
use crate::roots::newton_bisect;
use crate::units::Length;

/// Tolerance on `|y − y_min|/y_min` inside which a final separation counts as
/// the fold point itself and has a single preimage.
pub const FOLD_TOLERANCE: f64 = 1e-12;

/// `h(σ) = √(σ(σ−1)) + ln(√σ + √(σ−1))` for `σ ≥ 1`.
pub fn expansion_integral(sigma: f64) -> f64 {
    let d = sigma - 1.0;
    libm::sqrt(sigma * d) + libm::log(libm::sqrt(sigma) + libm::sqrt(d))
}

/// `h` written in terms of the excess `d = σ − 1 ≥ 0`.
pub fn expansion_integral_excess(d: f64) -> f64 {
    h_of_w(libm::sqrt(d))
}

#[inline]
pub(crate) fn h_of_w(w: f64) -> f64 {
    w * libm::sqrt(1.0 + w * w) + libm::asinh(w)
}

fn check_u(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain {
            what: "dimensionless separation u",
            value: u,
        });
    }
    // h(σ) = u^{-3/2}
    let target = 1.0 / (u * libm::sqrt(u));
    if !target.is_finite() {
        return Err(Error::Domain {
            what: "dimensionless separation u",
            value: u,
        });
    }
    Ok(target)
}

/// Solve `h(w) = target` for `w = √(σ−1) ≥ 0`.
pub(crate) fn solve_w(target: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    // h(w) ≥ max(2w, w²), so either bound brackets the root from above.
    let hi = (0.5 * target).min(libm::sqrt(target));
    // g is convex and increasing: Newton from the right end never overshoots.
    newton_bisect(
        |w| (h_of_w(w) - target, 2.0 * libm::sqrt(1.0 + w * w)),
        0.0,
        hi,
        hi,
        0.0,
        4.0 * f64::EPSILON,
    )
}

/// A solved point of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MapPoint {
    pub u: f64,
    pub w: f64,
    /// `h(σ(u))`, equal to `u^{-3/2}` by construction.
    pub h: f64,
}

impl MapPoint {
    pub fn solve(u: f64) -> Result<Self> {
        let h = check_u(u)?;
        Ok(Self {
            u,
            w: solve_w(h)?,
            h,
        })
    }

    #[inline]
    pub fn excess(&self) -> f64 {
        self.w * self.w
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        1.0 + self.w * self.w
    }

    /// `u·dσ/du = −(3/2)·h·w/√(1+w²)`.
    #[inline]
    pub fn u_dsigma_du(&self) -> f64 {
        -1.5 * self.h * self.w / libm::sqrt(1.0 + self.w * self.w)
    }

    /// `d(uσ)/du`.
    #[inline]
    pub fn final_slope(&self) -> f64 {
        self.sigma() + self.u_dsigma_du()
    }

    /// `d ln(uσ)/d ln u`.
    #[inline]
    pub fn log_slope(&self) -> f64 {
        1.0 + self.u_dsigma_du() / self.sigma()
    }
}

/// Expansion ratio `σ = s_f/s_i` for `u = s_i/s_c`.
///
/// Unique root of `u^{3/2} h(σ) = 1` with `σ ≥ 1`.
pub fn map_sigma_exact(u: f64) -> Result<f64> {
    MapPoint::solve(u).map(|p| p.sigma())
}

/// `σ(u) − 1`, accurate to full relative precision for large `u`.
pub fn map_excess_exact(u: f64) -> Result<f64> {
    MapPoint::solve(u).map(|p| p.excess())
}

/// `d(uσ)/du`, the slope of the final separation in units of `s_c`.
///
/// Zero at the fold `u*`, negative below it, tending to one for large `u`.
/// When `σ(u)` rounds to exactly one the slope is reported as undefined.
pub fn map_derivative(u: f64) -> Result<f64> {
    let p = MapPoint::solve(u)?;
    if p.sigma() == 1.0 {
        return Err(Error::DerivativeUndefined { u });
    }
    Ok(p.final_slope())
}

/// Piecewise approximation: `s_c(s_c/s_i)^{1/2}` below `s_c`, identity above.
pub fn map_approx(s_i: Length, sc: &CoulombScale) -> Result<Length> {
    let s = s_i.as_nm();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain {
            what: "initial separation",
            value: s,
        });
    }
    Ok(Length::nm(s_c_times(approx_final(s / sc.s_c.as_nm()), sc)))
}

#[inline]
fn s_c_times(y: f64, sc: &CoulombScale) -> f64 {
    y * sc.s_c.as_nm()
}

/// Dimensionless approximate final separation `s_f/s_c` for `u = s_i/s_c`.
#[inline]
pub(crate) fn approx_final(u: f64) -> f64 {
    if u <= 1.0 {
        1.0 / libm::sqrt(u)
    } else {
        u
    }
}

/// Location and depth of the Coulomb hole.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MapMinimum {
    /// `u*`, the initial separation (in `s_c`) of slowest final separation.
    pub u_star: f64,
    /// `σ(u*)`.
    pub sigma_star: f64,
    /// `s_min/s_c = u*·σ(u*)`.
    pub y_min: f64,
}

/// Minimum of `u·σ(u)`.
///
/// The stationarity condition `d(uσ)/du = 0` reduces to
/// `(1+w²)^{3/2} = (3/2)·w·h(w)`, solved here by Newton iteration (its
/// derivative is `−(3/2)h(w)`).
pub fn map_minimum() -> MapMinimum {
    let w = newton_bisect(
        |w| {
            let h = h_of_w(w);
            (libm::pow(1.0 + w * w, 1.5) - 1.5 * w * h, -1.5 * h)
        },
        0.0,
        2.0,
        0.8,
        0.0,
        4.0 * f64::EPSILON,
    )
    .expect("stationarity condition is bracketed on [0, 2]");
    let h = h_of_w(w);
    let u_star = libm::pow(h, -2.0 / 3.0);
    let sigma_star = 1.0 + w * w;
    MapMinimum {
        u_star,
        sigma_star,
        y_min: u_star * sigma_star,
    }
}

/// Branch of the non-monotone map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Branch {
    /// `u < u*`: final separation decreases with initial separation.
    Lower,
    /// `u = u*`, the fold.
    Unique,
    /// `u > u*`: final separation increases with initial separation.
    Upper,
}

impl Branch {
    /// Branch on which `u` lies.
    pub fn of(u: f64, min: &MapMinimum) -> Branch {
        let rel = (u - min.u_star) / min.u_star;
        if rel.abs() <= FOLD_TOLERANCE {
            Branch::Unique
        } else if rel < 0.0 {
            Branch::Lower
        } else {
            Branch::Upper
        }
    }
}

/// One solution of the inverse map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    /// Initial separation.
    pub s_i: Length,
    /// Dimensionless `s_i/s_c`.
    pub u: f64,
    /// Branch of the solution.
    pub branch: Branch,
}

/// Solve `u·σ(u) = y` on one monotone branch, in `ln u`.
pub(crate) fn invert_on_branch(y: f64, branch: Branch, min: &MapMinimum) -> Result<f64> {
    let ln_y = libm::log(y);
    let residual = |x: f64| -> (f64, f64) {
        match MapPoint::solve(libm::exp(x)) {
            Ok(p) => (libm::log(p.u * p.sigma()) - ln_y, p.log_slope()),
            Err(_) => (f64::NAN, f64::NAN),
        }
    };
    let ln_star = libm::log(min.u_star);
    let x = match branch {
        Branch::Unique => return Ok(min.u_star),
        Branch::Upper => {
            // u·σ(u) > u, so u = y lies above the root.
            let hi = ln_y.max(ln_star);
            newton_bisect(residual, ln_star, hi, hi, 1e-15, 0.0)?
        }
        Branch::Lower => {
            // u·σ(u) ≈ u^{-1/2} for small u
            let mut lo = libm::log((0.25 / (y * y)).min(min.u_star)) - 1.0;
            let mut tries = 0;
            while residual(lo).0 <= 0.0 {
                lo -= 2.0;
                tries += 1;
                if tries > 64 {
                    return Err(Error::RootNotFound("no lower bracket for the inverse map"));
                }
            }
            let guess = -2.0 * ln_y;
            newton_bisect(residual, lo, ln_star, guess, 1e-15, 0.0)?
        }
    };
    Ok(libm::exp(x))
}

/// All initial separations mapped onto final separation `s_f`.
///
/// Empty below the hole floor `s_min`, a single [`Branch::Unique`] entry at
/// the floor, otherwise one lower and one upper preimage (in that order).
pub fn invert_map(s_f: Length, sc: &CoulombScale) -> Result<Vec<Preimage>> {
    invert_map_with(s_f, sc, &map_minimum())
}

/// [`invert_map`] with a precomputed minimum.
pub fn invert_map_with(s_f: Length, sc: &CoulombScale, min: &MapMinimum) -> Result<Vec<Preimage>> {
    let s_c = sc.s_c.as_nm();
    let y = s_f.as_nm() / s_c;
    if y.is_nan() || y == f64::INFINITY {
        return Err(Error::Domain {
            what: "final separation",
            value: s_f.as_nm(),
        });
    }
    let mut out = Vec::new();
    let gap = (y - min.y_min) / min.y_min;
    if gap < -FOLD_TOLERANCE {
        return Ok(out);
    }
    let make = |u: f64, branch| Preimage {
        s_i: Length::nm(u * s_c),
        u,
        branch,
    };
    if gap <= FOLD_TOLERANCE {
        out.push(make(min.u_star, Branch::Unique));
        return Ok(out);
    }
    for branch in [Branch::Lower, Branch::Upper] {
        out.push(make(invert_on_branch(y, branch, min)?, branch));
    }
    Ok(out)
}
