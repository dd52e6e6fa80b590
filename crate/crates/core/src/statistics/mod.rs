//! Arrival-interval statistics: the Poisson emission density pushed
//! through the pair map, the correlation ratio `C = P/P₀`, and Gaussian
//! detector smoothing.

pub mod convolution;
pub mod grid;
/// Emission density pushed through the time map.
pub mod pushforward;
pub mod timemap;

pub use convolution::{convolve_resolution, convolve_resolution_at};
pub use grid::{GridFunction, GridKind, GridSpec, GridWarning, Side, SingularCell};
pub use pushforward::{
    bin_probabilities, default_time_grid, pushforward_time_density, pushforward_with,
};
pub use timemap::{Edge, MapModel, Piece, TimeMap, TimePreimage};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::units::Time;

/// Independent emissions with exponentially distributed spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EmissionModel {
    t_bar: Time,
}

impl EmissionModel {
    /// Mean interval `t̄ > 0`.
    pub fn new(t_bar: Time) -> Result<Self> {
        let v = t_bar.as_ns();
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain {
                what: "mean emission interval",
                value: v,
            });
        }
        Ok(Self { t_bar })
    }

    /// Mean interval.
    pub fn t_bar(&self) -> Time {
        self.t_bar
    }

    /// `P₀(t)` per ns, for `t` in ns. No domain check.
    #[inline]
    pub fn pdf_ns(&self, t: f64) -> f64 {
        let tb = self.t_bar.as_ns();
        libm::exp(-t / tb) / tb
    }
}

/// `P₀(t) = e^{-t/t̄}/t̄`, per ns.
pub fn poisson_interval_pdf(t: Time, model: &EmissionModel) -> Result<f64> {
    let x = t.as_ns();
    if !(x >= 0.0) {
        return Err(Error::Domain {
            what: "emission interval",
            value: x,
        });
    }
    Ok(model.pdf_ns(x))
}

/// `C(t) = P(t)/P₀(t)` on `p`'s grid. Singular cells carry over.
pub fn correlation_function(p: &GridFunction, model: &EmissionModel) -> Result<GridFunction> {
    if p.kind() != GridKind::DensityPerTime {
        return Err(Error::InvalidGrid("correlation needs a density"));
    }
    let t = p.abscissae_ns();
    if t[0] < 0.0 {
        return Err(Error::InvalidGrid("density must be defined on t ≥ 0"));
    }
    let values: Vec<f64> = t
        .iter()
        .zip(p.values())
        .map(|(&x, &v)| v / model.pdf_ns(x))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid("grid reaches past where P₀ underflows"));
    }
    GridFunction::from_parts(
        t.to_vec(),
        values,
        GridKind::DimensionlessRatio,
        p.singular_cells().to_vec(),
        p.tau_c(),
        p.warnings().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{map_minimum, CoulombScale};
    use crate::units::{Length, Velocity};

    #[test]
    fn pdf_examples() {
        let m = EmissionModel::new(Time::ns(0.2)).unwrap();
        assert_eq!(poisson_interval_pdf(Time::ns(0.0), &m).unwrap(), 5.0);
        let v = poisson_interval_pdf(Time::ns(0.2), &m).unwrap();
        assert!((v - libm::exp(-1.0) / 0.2).abs() < 1e-14);
        assert!(poisson_interval_pdf(Time::ns(-1e-9), &m).is_err());
        assert!(EmissionModel::new(Time::ns(0.0)).is_err());
    }

    #[test]
    fn pdf_normalized_on_forty_means() {
        let m = EmissionModel::new(Time::ns(0.2)).unwrap();
        let n = 200_000;
        let h = 40.0 * 0.2 / n as f64;
        // Simpson
        let mut s = m.pdf_ns(0.0) + m.pdf_ns(8.0);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * m.pdf_ns(k as f64 * h);
        }
        let total = s * h / 3.0;
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn unit_ratio_without_interaction() {
        let m = EmissionModel::new(Time::ns(1.0)).unwrap();
        let t: Vec<Time> = (0..50).map(|k| Time::ns(0.1 * k as f64)).collect();
        let vals = t.iter().map(|x| m.pdf_ns(x.as_ns())).collect();
        let p = GridFunction::new(&t, vals, GridKind::DensityPerTime).unwrap();
        let c = correlation_function(&p, &m).unwrap();
        assert!(c.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert_eq!(c.kind(), GridKind::DimensionlessRatio);
        assert!(correlation_function(&c, &m).is_err());
    }

    #[test]
    fn hole_and_recovery() {
        let sc = CoulombScale::new(Length::nm(1.0), Velocity::nm_per_ns(1.0)).unwrap();
        let m = EmissionModel::new(Time::ns(200.0)).unwrap();
        let map = TimeMap::new(MapModel::Exact, 0.0).unwrap();
        let grid = default_time_grid(&sc, &m, &map, Time::ns(1.0)).unwrap();
        let p = pushforward_with(&grid, &sc, &m, &map).unwrap();
        let c = correlation_function(&p, &m).unwrap();
        let floor = map_minimum().y_min;
        let t = c.abscissae_ns();
        for (x, v) in t.iter().zip(c.values()) {
            if *x < floor {
                assert_eq!(*v, 0.0);
            }
        }
        let p40 = pushforward_with(&[Time::ns(40.0), Time::ns(41.0)], &sc, &m, &map).unwrap();
        let c40 = correlation_function(&p40, &m).unwrap().values()[0];
        assert!((c40 - 1.0).abs() < 0.01, "{c40}");
    }
}
