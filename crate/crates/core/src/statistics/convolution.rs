//! Gaussian detector-resolution smoothing of a grid function.
//!
//! `f̃(t) = ∫ R(t − t') f(|t'|) dt'` with `R` a unit Gaussian of width `t_r`.
//! The even extension is folded back onto `t' ≥ 0`, so each output point is
//! two half-line integrals with kernels centred at `±t`. Cells are integrated
//! with five-point Gauss–Legendre against the linear interpolant of `f`;
//! cells carrying an inverse-square-root edge use the substitution
//! `t' = t₀ ± x²`, which makes the integrand smooth.

use alloc::vec::Vec;

use super::grid::{GridFunction, GridKind, Side};
use crate::error::{Error, Result};
use crate::units::Time;

/// Kernel half-width in units of `t_r`.
pub const KERNEL_CUTOFF: f64 = 8.5;
/// Extent of the smoothed grid past the input, in units of `t_r`.
pub const OUTPUT_EXTENSION: f64 = 6.0;

const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[inline]
fn kernel(d: f64, tr: f64) -> f64 {
    let z = d / tr;
    libm::exp(-0.5 * z * z) / (tr * libm::sqrt(2.0 * core::f64::consts::PI))
}

/// `∫_{a}^{b} R(t' − c) dt'`.
fn kernel_mass(a: f64, b: f64, c: f64, tr: f64) -> f64 {
    let s = tr * core::f64::consts::SQRT_2;
    // difference of upper tails keeps precision far from the centre
    let q = |x: f64| 0.5 * libm::erfc((x - c) / s);
    if a >= c {
        q(a) - q(b)
    } else if b <= c {
        q(2.0 * c - b) - q(2.0 * c - a)
    } else {
        1.0 - q(b) - q(2.0 * c - a)
    }
}

struct Smoother<'a> {
    t: &'a [f64],
    f: &'a [f64],
    g: &'a GridFunction,
    tr: f64,
}

impl Smoother<'_> {
    fn cell(&self, k: usize, c: f64) -> f64 {
        let (a, b) = (self.t[k], self.t[k + 1]);
        let d = b - a;
        let tr = self.tr;
        match self.g.singular_side(k) {
            Some(side) => {
                // f ≈ A/√(distance from the singular end), A = f(opposite)·√Δ
                let (amp, start, dir) = match side {
                    Side::Left => (self.f[k + 1] * libm::sqrt(d), a, 1.0),
                    Side::Right => (self.f[k] * libm::sqrt(d), b, -1.0),
                };
                let root = libm::sqrt(d);
                let mut s = 0.0;
                for (x, w) in GL_X.iter().zip(GL_W) {
                    let y = 0.5 * root * (x + 1.0);
                    s += w * kernel(start + dir * y * y - c, tr);
                }
                2.0 * amp * 0.5 * root * s
            }
            None => {
                let (fa, fb) = (self.f[k], self.f[k + 1]);
                let mut s = 0.0;
                for (x, w) in GL_X.iter().zip(GL_W) {
                    let r = 0.5 * (x + 1.0);
                    let tp = a + d * r;
                    s += w * kernel(tp - c, tr) * (fa + (fb - fa) * r);
                }
                0.5 * d * s
            }
        }
    }

    /// `∫_{t₀}^{t_N} R(t' − c) f(t') dt'` over cells within the kernel reach.
    fn half_line(&self, c: f64) -> f64 {
        let reach = KERNEL_CUTOFF * self.tr;
        let n = self.t.len();
        let lo = self.t.partition_point(|&s| s < c - reach).saturating_sub(1);
        let hi = self.t.partition_point(|&s| s <= c + reach).min(n - 1);
        (lo..hi).map(|k| self.cell(k, c)).sum()
    }

    fn at(&self, t: f64) -> f64 {
        let n = self.t.len();
        let (first, last) = (self.t[0], self.t[n - 1]);
        let mut s = 0.0;
        for c in [t, -t] {
            s += self.half_line(c);
            if self.g.kind() == GridKind::DimensionlessRatio {
                // hold the end values constant beyond the grid
                s += self.f[n - 1] * kernel_mass(last, f64::INFINITY, c, self.tr);
                if first > 0.0 {
                    s += self.f[0] * kernel_mass(0.0, first, c, self.tr);
                }
            }
        }
        s
    }
}

fn check(f: &GridFunction, t_r: Time) -> Result<f64> {
    let tr = t_r.as_ns();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Domain {
            what: "time resolution",
            value: tr,
        });
    }
    if f.abscissae_ns()[0] < 0.0 {
        return Err(Error::InvalidGrid("function must be defined on t ≥ 0"));
    }
    let spacing = f.max_spacing();
    if spacing > tr {
        return Err(Error::UnderResolved {
            spacing,
            resolution: tr,
        });
    }
    Ok(tr)
}

/// Smoothed values at arbitrary `points`.
///
/// Densities are taken as zero outside the grid; ratios are continued with
/// their end values.
pub fn convolve_resolution_at(f: &GridFunction, t_r: Time, points: &[Time]) -> Result<Vec<f64>> {
    let tr = check(f, t_r)?;
    let s = Smoother {
        t: f.abscissae_ns(),
        f: f.values(),
        g: f,
        tr,
    };
    Ok(points.iter().map(|p| s.at(p.as_ns())).collect())
}

/// Smooth `f` with a Gaussian of width `t_r`, on `f`'s grid extended by
/// `6·t_r` at spacing `t_r/4`.
///
/// Fails with [`Error::UnderResolved`] if any cell is wider than `t_r`.
pub fn convolve_resolution(f: &GridFunction, t_r: Time) -> Result<GridFunction> {
    let tr = check(f, t_r)?;
    let mut pts: Vec<Time> = f.abscissae_ns().iter().copied().map(Time::ns).collect();
    let last = f.abscissae_ns()[f.len() - 1];
    let extra = libm::ceil(OUTPUT_EXTENSION * 4.0) as usize;
    pts.extend((1..=extra).map(|k| Time::ns(last + 0.25 * tr * k as f64)));
    let values = convolve_resolution_at(f, t_r, &pts)?;
    let values = match f.kind() {
        // quadrature noise must not leave a density negative
        GridKind::DensityPerTime => values.into_iter().map(|v| v.max(0.0)).collect(),
        GridKind::DimensionlessRatio => values,
    };
    Ok(GridFunction::new(&pts, values, f.kind())?.with_tau_c(f.tau_c()))
}
