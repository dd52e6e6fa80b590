//! Sampled functions of time with a quadrature that understands fold
//! singularities.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::units::Time;

/// What the sampled values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GridKind {
    /// Probability density, per ns.
    DensityPerTime,
    /// Dimensionless ratio such as `P/P₀`.
    DimensionlessRatio,
}

/// Which end of a cell carries an integrable `|t − t₀|^{-1/2}` singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    /// Singular at the cell's left node.
    Left,
    /// Singular at the cell's right node.
    Right,
}

/// A cell `[t_index, t_index+1]` whose integrand diverges like an inverse
/// square root at one end.
///
/// The node at the singular end holds the finite one-sided limit from the
/// other side of that node; the cell itself is integrated with the local
/// form `A/√|t − t₀|`, `A` fixed by the value at the opposite node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SingularCell {
    /// Index of the cell's left node.
    pub index: usize,
    /// Singular end.
    pub side: Side,
}

/// Conditions that degrade accuracy without invalidating a result.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GridWarning {
    /// An edge of the distribution (hole floor or fold) lies outside the
    /// grid, so the grid does not resolve it.
    EdgeOutsideGrid {
        /// Edge location, ns.
        edge: f64,
    },
    /// The cell next to an edge is wide compared with the edge location.
    CoarseEdge {
        /// Edge location, ns.
        edge: f64,
        /// Width of the adjacent cell, ns.
        width: f64,
    },
    /// The grid stops before the density has decayed.
    TruncatedSupport {
        /// Grid end, ns.
        grid_end: f64,
        /// Recommended end, ns.
        recommended: f64,
    },
}

/// Relative width above which a cell next to an edge is flagged.
pub const EDGE_CELL_TOLERANCE: f64 = 1e-3;

/// Function sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridFunction {
    t: Vec<f64>,
    values: Vec<f64>,
    kind: GridKind,
    singular: Vec<SingularCell>,
    normalization: f64,
    tau_c: Option<Time>,
    warnings: Vec<GridWarning>,
}

impl GridFunction {
    /// Build from abscissae and values with no singular cells.
    pub fn new(t: &[Time], values: Vec<f64>, kind: GridKind) -> Result<Self> {
        let t: Vec<f64> = t.iter().map(|x| x.as_ns()).collect();
        Self::from_parts(t, values, kind, Vec::new(), None, Vec::new())
    }

    pub(crate) fn from_parts(
        t: Vec<f64>,
        values: Vec<f64>,
        kind: GridKind,
        mut singular: Vec<SingularCell>,
        tau_c: Option<Time>,
        warnings: Vec<GridWarning>,
    ) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::InvalidGrid("abscissae and values differ in length"));
        }
        if t.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points"));
        }
        check_increasing(&t)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite value"));
        }
        if kind == GridKind::DensityPerTime && values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidGrid("negative density"));
        }
        singular.sort_by_key(|c| c.index);
        singular.dedup();
        if singular.iter().any(|c| c.index + 1 >= t.len()) {
            return Err(Error::InvalidGrid("singular cell out of range"));
        }
        let mut g = Self {
            t,
            values,
            kind,
            singular,
            normalization: 0.0,
            tau_c,
            warnings,
        };
        g.normalization = g.integral();
        Ok(g)
    }

    /// Abscissae in ns.
    pub fn abscissae_ns(&self) -> &[f64] {
        &self.t
    }

    /// Abscissa `i`.
    pub fn time(&self, i: usize) -> Time {
        Time::ns(self.t[i])
    }

    /// Sampled values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    /// Always false: a grid has at least two points.
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Meaning of the values.
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Cells integrated with the inverse-square-root rule.
    pub fn singular_cells(&self) -> &[SingularCell] {
        &self.singular
    }

    /// Quadrature integral over the grid, computed at construction.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Critical time used to express abscissae as `t/τ_c`, if attached.
    pub fn tau_c(&self) -> Option<Time> {
        self.tau_c
    }

    /// Accuracy warnings collected while building the grid.
    pub fn warnings(&self) -> &[GridWarning] {
        &self.warnings
    }

    pub(crate) fn with_tau_c(mut self, tau_c: Option<Time>) -> Self {
        self.tau_c = tau_c;
        self
    }

    pub(crate) fn singular_side(&self, cell: usize) -> Option<Side> {
        self.singular
            .binary_search_by_key(&cell, |c| c.index)
            .ok()
            .map(|i| self.singular[i].side)
    }

    /// Largest cell width, ns.
    pub fn max_spacing(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Integral of one cell under the grid's quadrature rule.
    pub fn cell_integral(&self, cell: usize) -> f64 {
        let (a, b) = (self.t[cell], self.t[cell + 1]);
        let d = b - a;
        match self.singular_side(cell) {
            // ∫₀^Δ A x^{-1/2} dx = 2A√Δ with A = f(b)√Δ
            Some(Side::Left) => 2.0 * d * self.values[cell + 1],
            Some(Side::Right) => 2.0 * d * self.values[cell],
            None => 0.5 * d * (self.values[cell] + self.values[cell + 1]),
        }
    }

    /// Integral between nodes `i ≤ j`.
    pub fn integral_between(&self, i: usize, j: usize) -> f64 {
        (i..j).map(|c| self.cell_integral(c)).sum()
    }

    /// Integral over the whole grid.
    pub fn integral(&self) -> f64 {
        self.integral_between(0, self.t.len() - 1)
    }

    /// Index of the node equal to `t` (within relative `1e-12`), if any.
    pub fn node_index(&self, t: Time) -> Option<usize> {
        let x = t.as_ns();
        let i = self.t.partition_point(|&s| s < x);
        [i.wrapping_sub(1), i]
            .into_iter()
            .filter(|&k| k < self.t.len())
            .find(|&k| (self.t[k] - x).abs() <= 1e-12 * x.abs().max(f64::MIN_POSITIVE))
    }
}

pub(crate) fn check_increasing(t: &[f64]) -> Result<()> {
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("non-finite abscissa"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("abscissae must be strictly increasing"));
    }
    Ok(())
}

/// Layout of a time grid refined around distribution edges.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridSpec {
    /// Grid end, ns.
    pub t_max: Time,
    /// Largest allowed cell width.
    pub max_spacing: Time,
    /// Log-spaced points per decade of distance from each edge.
    pub points_per_decade: usize,
    /// Closest relative distance from an edge that is sampled.
    pub min_offset: f64,
}

impl GridSpec {
    /// Refinement around `edges` (ns) on top of a uniform grid on
    /// `[0, t_max]`. Log-spaced offsets `edge·(1 ± 10^k)` are added on
    /// both sides of every edge for `k` from `log10(min_offset)` up to
    /// where the offsets exceed the uniform spacing.
    pub fn build(&self, edges: &[f64]) -> Result<Vec<Time>> {
        let t_max = self.t_max.as_ns();
        let dt = self.max_spacing.as_ns();
        if !(t_max > 0.0) || !(dt > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid("grid end and spacing must be positive"));
        }
        if !(self.min_offset > 0.0 && self.min_offset < 1.0) || self.points_per_decade == 0 {
            return Err(Error::InvalidGrid("bad edge refinement settings"));
        }
        let n = libm::ceil(t_max / dt) as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
        for &edge in edges.iter().filter(|&&e| e > 0.0 && e < t_max) {
            pts.push(edge);
            let lo = libm::log10(self.min_offset);
            let hi = libm::log10(2.0 * dt / edge).min(0.0).max(lo);
            let m = libm::ceil((hi - lo) * self.points_per_decade as f64) as usize;
            for k in 0..=m {
                let off = edge * libm::pow(10.0, lo + k as f64 / self.points_per_decade as f64);
                for p in [edge + off, edge - off] {
                    if p > 0.0 && p < t_max {
                        pts.push(p);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1e-300));
        Ok(pts.into_iter().map(Time::ns).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ns(v: &[f64]) -> Vec<Time> {
        v.iter().copied().map(Time::ns).collect()
    }

    #[test]
    fn trapezoid_of_a_line() {
        let g = GridFunction::new(
            &ns(&[0.0, 1.0, 3.0]),
            vec![0.0, 1.0, 3.0],
            GridKind::DensityPerTime,
        )
        .unwrap();
        assert!((g.normalization() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn singular_cell_integrates_inverse_sqrt_exactly() {
        // f = 1/√t on (0, 1]: exact integral 2
        let t = vec![0.0, 1e-6, 1.0];
        let vals = vec![0.0, 1e3, 1.0];
        let g = GridFunction::from_parts(
            t,
            vals,
            GridKind::DensityPerTime,
            vec![SingularCell {
                index: 0,
                side: Side::Left,
            }],
            None,
            vec![],
        )
        .unwrap();
        assert!((g.cell_integral(0) - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let k = GridKind::DensityPerTime;
        assert!(GridFunction::new(&ns(&[0.0, 0.0]), vec![1.0, 1.0], k).is_err());
        assert!(GridFunction::new(&ns(&[0.0, 1.0]), vec![1.0, -1.0], k).is_err());
        assert!(GridFunction::new(&ns(&[0.0, 1.0]), vec![1.0], k).is_err());
        assert!(GridFunction::new(&ns(&[0.0, 1.0]), vec![1.0, f64::NAN], k).is_err());
        // negative values are fine for ratios
        assert!(GridFunction::new(
            &ns(&[0.0, 1.0]),
            vec![1.0, -1.0],
            GridKind::DimensionlessRatio
        )
        .is_ok());
    }

    #[test]
    fn spec_refines_around_edges() {
        let spec = GridSpec {
            t_max: Time::ns(10.0),
            max_spacing: Time::ns(0.5),
            points_per_decade: 10,
            min_offset: 1e-6,
        };
        let g = spec.build(&[2.0]).unwrap();
        let t: Vec<f64> = g.iter().map(|x| x.as_ns()).collect();
        check_increasing(&t).unwrap();
        assert!(t.contains(&2.0));
        assert!(t.iter().any(|&x| (x - 2.0 - 2e-6).abs() < 1e-12));
        assert!(t.iter().any(|&x| (x - 2.0 + 2e-6).abs() < 1e-12));
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 10.0);
        assert!(t.windows(2).all(|w| w[1] - w[0] <= 0.5 + 1e-12));
    }
}
