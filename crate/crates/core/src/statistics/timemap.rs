//! Emission interval to arrival interval, at fixed transverse offset.
//!
//! In units of `τ_c` and `s_c`, a pair emitted `τ` apart with transverse
//! offset `ξ` has `u = √(ξ² + τ²)` and arrives `G(τ) = τ·σ(u)` apart. `G` is
//! split into monotone pieces at its critical points so that every arrival
//! interval can be traced back to all of its emission intervals.

use alloc::vec::Vec;

use crate::dynamics::map::{map_minimum, MapPoint};
use crate::error::{Error, Result};
use crate::roots::{golden_section, newton_bisect};

/// Which pair map drives the transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MapModel {
    /// Root of the implicit energy-conservation relation.
    Exact,
    /// Piecewise power law: `(s_c/s_i)^{1/2}` below `s_c`, identity above.
    Approximate,
}

/// A maximal interval of emission intervals on which `G` is monotone.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Piece {
    /// Start, in `τ_c` (may be 0).
    pub lo: f64,
    /// End, in `τ_c` (may be infinite).
    pub hi: f64,
    /// `G(lo)` (infinite when `G` diverges there).
    pub y_lo: f64,
    /// `G(hi)`.
    pub y_hi: f64,
    /// Direction of `G` on the piece.
    pub increasing: bool,
    /// `G'(lo) = 0`.
    pub fold_lo: bool,
    /// `G'(hi) = 0`.
    pub fold_hi: bool,
}

impl Piece {
    fn image(&self) -> (f64, f64) {
        if self.y_lo <= self.y_hi {
            (self.y_lo, self.y_hi)
        } else {
            (self.y_hi, self.y_lo)
        }
    }
}

/// A finite, positive endpoint of some piece's image.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Edge {
    /// Location, in `τ_c`.
    pub y: f64,
    /// Two pieces meet with zero slope: the density diverges here.
    pub fold: bool,
    /// For a fold, whether the folded pieces map above (local minimum of
    /// `G`) rather than below (local maximum).
    pub opens_above: bool,
}

/// One emission interval mapped onto a given arrival interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePreimage {
    /// Index of the monotone piece.
    pub piece: usize,
    /// Emission interval, in `τ_c`.
    pub tau: f64,
    /// `dG/dτ` there.
    pub slope: f64,
}

/// `τ ↦ G(τ)` for one transverse offset and map model.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    model: MapModel,
    xi: f64,
    pieces: Vec<Piece>,
    near_folds: Vec<f64>,
}

const SCAN_POINTS: usize = 800;
const ENDPOINT_TOLERANCE: f64 = 1e-12;
const MAX_LN_TAU: f64 = 709.0;

impl TimeMap {
    /// Map for transverse offset `xi = x_i/s_c ≥ 0`.
    pub fn new(model: MapModel, xi: f64) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::Domain {
                what: "transverse offset x_i/s_c",
                value: xi,
            });
        }
        let mut map = Self {
            model,
            xi,
            pieces: Vec::new(),
            near_folds: Vec::new(),
        };
        let cuts = map.critical_points()?;
        map.pieces = map.build_pieces(&cuts)?;
        map.near_folds = map.slope_minima()?;
        Ok(map)
    }

    /// Model in use.
    pub fn model(&self) -> MapModel {
        self.model
    }

    /// Transverse offset in `s_c`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Monotone pieces in ascending `τ`.
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `G(τ)` and `G'(τ)`.
    pub fn forward(&self, tau: f64) -> Result<(f64, f64)> {
        if !(tau >= 0.0) {
            return Err(Error::Domain {
                what: "emission interval",
                value: tau,
            });
        }
        if tau == f64::INFINITY {
            return Ok((f64::INFINITY, 1.0));
        }
        let u = libm::hypot(self.xi, tau);
        if u == 0.0 {
            return Ok((f64::INFINITY, f64::NEG_INFINITY));
        }
        let c2 = (tau / u) * (tau / u);
        match self.model {
            MapModel::Exact => {
                let p = MapPoint::solve(u)?;
                let s = p.sigma();
                Ok((tau * s, s + c2 * p.u_dsigma_du()))
            }
            MapModel::Approximate => {
                if u <= 1.0 {
                    let s = 1.0 / (u * libm::sqrt(u));
                    Ok((tau * s, s * (1.0 - 1.5 * c2)))
                } else {
                    Ok((tau, 1.0))
                }
            }
        }
    }

    /// Interior points where `G` turns or (for the approximate model)
    /// switches branch, paired with whether the slope vanishes there.
    fn critical_points(&self) -> Result<Vec<(f64, bool)>> {
        let xi = self.xi;
        match self.model {
            MapModel::Approximate => {
                if xi >= 1.0 {
                    return Ok(Vec::new());
                }
                let joint = libm::sqrt(1.0 - xi * xi);
                let turn = core::f64::consts::SQRT_2 * xi;
                let mut out = Vec::new();
                if xi > 0.0 && turn < joint {
                    out.push((turn, true));
                }
                out.push((joint, false));
                Ok(out)
            }
            MapModel::Exact => {
                let star = map_minimum().u_star;
                if xi == 0.0 {
                    return Ok(alloc::vec![(star, true)]);
                }
                if xi >= star {
                    return Ok(Vec::new());
                }
                // G' > 0 wherever u > u*, so only τ < √(u*² − ξ²) can turn.
                let end = libm::sqrt(star * star - xi * xi);
                let start = (1e-3 * xi).min(0.5 * end);
                let (l0, l1) = (libm::log(start), libm::log(end));
                let mut out = Vec::new();
                let mut prev_tau = start;
                let mut prev = self.forward(start)?.1;
                for i in 1..=SCAN_POINTS {
                    let tau = libm::exp(l0 + (l1 - l0) * i as f64 / SCAN_POINTS as f64);
                    let s = self.forward(tau)?.1;
                    if (s < 0.0) != (prev < 0.0) {
                        let root = newton_bisect(
                            |t| (self.forward(t).map_or(f64::NAN, |f| f.1), f64::NAN),
                            prev_tau,
                            tau,
                            0.5 * (prev_tau + tau),
                            0.0,
                            1e-15,
                        )?;
                        out.push((root, true));
                    }
                    prev = s;
                    prev_tau = tau;
                }
                Ok(out)
            }
        }
    }

    /// Emission intervals where `G'` has a positive local minimum: the map
    /// almost folds there and the density has a narrow peak.
    fn slope_minima(&self) -> Result<Vec<f64>> {
        let star = map_minimum().u_star;
        if self.model != MapModel::Exact || self.xi == 0.0 || self.xi >= star {
            return Ok(Vec::new());
        }
        let end = libm::sqrt(star * star - self.xi * self.xi);
        let start = (1e-3 * self.xi).min(0.5 * end);
        let (l0, l1) = (libm::log(start), libm::log(end));
        let tau: Vec<f64> = (0..=SCAN_POINTS)
            .map(|i| libm::exp(l0 + (l1 - l0) * i as f64 / SCAN_POINTS as f64))
            .collect();
        let slope = tau
            .iter()
            .map(|&t| self.forward(t).map(|f| f.1))
            .collect::<Result<Vec<f64>>>()?;
        let mut out = Vec::new();
        for i in 1..SCAN_POINTS {
            if slope[i] > 0.0 && slope[i] < slope[i - 1] && slope[i] <= slope[i + 1] {
                let (t, _) = golden_section(
                    |t| self.forward(t).map_or(f64::INFINITY, |f| f.1),
                    tau[i - 1],
                    tau[i + 1],
                    1e-12,
                );
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Arrival intervals, in `τ_c`, around which a grid should be refined:
    /// every edge plus the image of every near-fold.
    pub fn refinement_points(&self) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self.edges().iter().map(|e| e.y).collect();
        for &t in &self.near_folds {
            out.push(self.forward(t)?.0);
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    fn build_pieces(&self, cuts: &[(f64, bool)]) -> Result<Vec<Piece>> {
        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push((0.0, false));
        bounds.extend_from_slice(cuts);
        bounds.push((f64::INFINITY, false));
        let mut pieces = Vec::with_capacity(bounds.len() - 1);
        for w in bounds.windows(2) {
            let ((lo, fold_lo), (hi, fold_hi)) = (w[0], w[1]);
            let y_lo = self.forward(lo)?.0;
            let y_hi = self.forward(hi)?.0;
            let mid = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * lo.max(1.0)
            };
            let increasing = self.forward(mid)?.1 > 0.0;
            pieces.push(Piece {
                lo,
                hi,
                y_lo,
                y_hi,
                increasing,
                fold_lo,
                fold_hi,
            });
        }
        Ok(pieces)
    }

    /// Finite positive image endpoints, ascending.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = Vec::new();
        for p in &self.pieces {
            for (y, fold, at_hi) in [(p.y_lo, p.fold_lo, false), (p.y_hi, p.fold_hi, true)] {
                if !(y > 0.0 && y.is_finite()) {
                    continue;
                }
                if out.iter().any(|e| same(e.y, y)) {
                    continue;
                }
                // piece i maps from y toward its other end
                let opens_above = if at_hi { !p.increasing } else { p.increasing };
                out.push(Edge {
                    y,
                    fold,
                    opens_above,
                });
            }
        }
        out.sort_by(|a, b| a.y.total_cmp(&b.y));
        out
    }

    /// All emission intervals mapping to arrival interval `y`, in piece order.
    ///
    /// Pieces whose fold endpoint coincides with `y` are skipped (their
    /// density contribution is infinite); other closed endpoints count.
    pub fn preimages(&self, y: f64) -> Result<Vec<TimePreimage>> {
        if y.is_nan() {
            return Err(Error::Domain {
                what: "arrival interval",
                value: y,
            });
        }
        let mut out = Vec::with_capacity(self.pieces.len());
        for (k, p) in self.pieces.iter().enumerate() {
            let (lo, hi) = p.image();
            let at_lo_end = same(y, p.y_lo);
            let at_hi_end = same(y, p.y_hi);
            if (at_lo_end && p.fold_lo) || (at_hi_end && p.fold_hi) {
                continue;
            }
            let tau = if at_lo_end {
                p.lo
            } else if at_hi_end {
                p.hi
            } else if y > lo && y < hi {
                self.solve_on(k, y)?
            } else {
                continue;
            };
            if !tau.is_finite() {
                continue;
            }
            let slope = self.forward(tau)?.1;
            out.push(TimePreimage {
                piece: k,
                tau,
                slope,
            });
        }
        Ok(out)
    }

    /// Emission interval on piece `k` mapping to `y`, for `y` within the
    /// piece's image. Returns the piece end (possibly 0 or ∞) when `y`
    /// equals an image endpoint.
    pub fn solve_on(&self, k: usize, y: f64) -> Result<f64> {
        let p = self.pieces[k];
        if same(y, p.y_lo) {
            return Ok(p.lo);
        }
        if same(y, p.y_hi) {
            return Ok(p.hi);
        }
        let ln_y = libm::log(y);
        let residual = |x: f64| -> (f64, f64) {
            let tau = libm::exp(x);
            match self.forward(tau) {
                Ok((g, s)) => {
                    let r = libm::log(g) - ln_y;
                    // keep the sign at overflowing ends so bracketing still works
                    let r = if r.is_finite() {
                        r
                    } else {
                        r.signum() * f64::MAX
                    };
                    (r, tau * s / g)
                }
                Err(_) => (f64::NAN, f64::NAN),
            }
        };
        // sign of the residual at the piece's low end
        let low_sign_negative = p.increasing;
        let guess = if p.increasing { ln_y } else { -2.0 * ln_y };
        let mut x_lo = if p.lo > 0.0 {
            libm::log(p.lo)
        } else {
            guess.min(if p.hi.is_finite() {
                libm::log(p.hi)
            } else {
                guess
            }) - 1.0
        };
        if p.lo == 0.0 {
            let mut n = 0;
            while (residual(x_lo).0 < 0.0) != low_sign_negative {
                x_lo -= 2.0;
                n += 1;
                if n > 300 {
                    return Err(Error::RootNotFound("no lower bracket for time preimage"));
                }
            }
        }
        let mut x_hi = if p.hi.is_finite() {
            libm::log(p.hi)
        } else {
            guess.max(x_lo) + 1.0
        };
        x_hi = x_hi.min(MAX_LN_TAU);
        if !p.hi.is_finite() {
            let mut n = 0;
            while (residual(x_hi).0 < 0.0) == low_sign_negative {
                if x_hi >= MAX_LN_TAU {
                    return Err(Error::RootNotFound("no upper bracket for time preimage"));
                }
                x_hi = (x_hi + 2.0).min(MAX_LN_TAU);
                n += 1;
                if n > 300 {
                    return Err(Error::RootNotFound("no upper bracket for time preimage"));
                }
            }
        }
        let g = guess.clamp(x_lo, x_hi);
        let x = newton_bisect(residual, x_lo, x_hi, g, 1e-15, 0.0)?;
        Ok(libm::exp(x))
    }
}

#[inline]
fn same(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    a.is_finite() && b.is_finite() && (a - b).abs() <= ENDPOINT_TOLERANCE * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_source_exact_has_two_pieces() {
        let m = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        let min = map_minimum();
        assert_eq!(m.pieces().len(), 2);
        let (a, b) = (m.pieces()[0], m.pieces()[1]);
        assert!(!a.increasing && b.increasing);
        assert!(a.fold_hi && b.fold_lo);
        assert!((a.y_hi - min.y_min).abs() < 1e-14);
        let e = m.edges();
        assert_eq!(e.len(), 1);
        assert!(e[0].fold && e[0].opens_above);
    }

    #[test]
    fn preimages_satisfy_the_forward_map() {
        for xi in [0.0, 0.05, 0.3, 1.0] {
            let m = TimeMap::new(MapModel::Exact, xi).unwrap();
            for y in [0.2, 1.2, 2.0, 10.0, 300.0] {
                for p in m.preimages(y).unwrap() {
                    let (g, _) = m.forward(p.tau).unwrap();
                    assert!(((g - y) / y).abs() < 1e-12, "xi={xi} y={y} g={g}");
                }
            }
        }
    }

    #[test]
    fn small_offset_has_three_pieces() {
        let m = TimeMap::new(MapModel::Exact, 0.05).unwrap();
        assert_eq!(m.pieces().len(), 3);
        let p = m.pieces();
        assert!(p[0].increasing && !p[1].increasing && p[2].increasing);
        assert_eq!(p[0].y_lo, 0.0);
        let e = m.edges();
        assert_eq!(e.len(), 2);
        // local minimum first (opens above), then the local maximum
        assert!(e[0].fold && e[0].opens_above);
        assert!(e[1].fold && !e[1].opens_above);
    }

    #[test]
    fn near_fold_is_reported() {
        let m = TimeMap::new(MapModel::Exact, 0.3).unwrap();
        assert!(m.edges().is_empty());
        let r = m.refinement_points().unwrap();
        assert_eq!(r.len(), 1);
        let y = r[0];
        let tau = m.preimages(y).unwrap()[0].tau;
        let s = m.forward(tau).unwrap().1;
        assert!(s > 0.0 && s < 0.3, "{s}");
    }

    #[test]
    fn huge_arrival_interval_solves() {
        let m = TimeMap::new(MapModel::Exact, 0.05).unwrap();
        let t = m.solve_on(2, 1e300).unwrap();
        assert!((t / 1e300 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wide_offset_is_monotone() {
        let m = TimeMap::new(MapModel::Exact, 2.0).unwrap();
        assert_eq!(m.pieces().len(), 1);
        assert!(m.edges().is_empty());
    }

    #[test]
    fn approximate_point_source() {
        let m = TimeMap::new(MapModel::Approximate, 0.0).unwrap();
        assert_eq!(m.pieces().len(), 2);
        let e = m.edges();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].y, 1.0);
        assert!(!e[0].fold);
        // two preimages above the floor: τ = y^{-2} and τ = y
        let pre = m.preimages(4.0).unwrap();
        assert_eq!(pre.len(), 2);
        assert!((pre[0].tau - 1.0 / 16.0).abs() < 1e-14);
        assert!((pre[1].tau - 4.0).abs() < 1e-12);
        assert!(m.preimages(0.5).unwrap().is_empty());
    }

    #[test]
    fn slope_matches_finite_difference() {
        for (model, xi) in [
            (MapModel::Exact, 0.05),
            (MapModel::Exact, 0.0),
            (MapModel::Approximate, 0.3),
        ] {
            let m = TimeMap::new(model, xi).unwrap();
            for tau in [0.01, 0.1, 0.5, 2.0] {
                let h = 1e-6 * tau;
                let fd =
                    (m.forward(tau + h).unwrap().0 - m.forward(tau - h).unwrap().0) / (2.0 * h);
                let an = m.forward(tau).unwrap().1;
                assert!(
                    (an - fd).abs() < 1e-6 * an.abs().max(1.0),
                    "{model:?} {xi} {tau}: {an} {fd}"
                );
            }
        }
    }
}
