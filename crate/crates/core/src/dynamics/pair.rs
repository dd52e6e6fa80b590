use super::map::{map_minimum, Branch, MapMinimum, MapPoint};
use super::{critical_scale, BeamParameters, CoulombScale};
use crate::error::{Error, Result};
use crate::units::{Length, Time, Velocity};

/// Emission separation of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInitial {
    /// Transverse separation of the emission points.
    pub x_i: Length,
    /// Emission interval.
    pub t_i: Time,
    /// `√(x_i² + (v t_i)²)`.
    pub s_i: Length,
}

impl PairInitial {
    /// Pair with transverse offset `x_i` and emission interval `t_i` in a
    /// beam moving at `v`.
    pub fn new(x_i: Length, t_i: Time, v: Velocity) -> Result<Self> {
        let (x, t) = (x_i.as_nm(), t_i.as_ns());
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain {
                what: "transverse separation",
                value: x,
            });
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain {
                what: "emission interval",
                value: t,
            });
        }
        let z = v.as_nm_per_ns() * t;
        Ok(Self {
            x_i,
            t_i,
            s_i: Length::nm(libm::hypot(x, z)),
        })
    }
}

/// Final state of a propagated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSolution {
    /// `σ = s_f/s_i`.
    pub sigma: f64,
    /// `σ − 1` at full relative precision.
    pub sigma_minus_one: f64,
    /// Final separation.
    pub s_f: Length,
    /// Final transverse separation.
    pub x_f: Length,
    /// Final arrival interval.
    pub t_f: Time,
    /// Branch of the map the pair started on.
    pub branch: Branch,
}

/// Forward map for one beam, with the scale and fold precomputed.
#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    scale: CoulombScale,
    minimum: MapMinimum,
}

impl Propagator {
    /// Propagator for `beam`.
    pub fn new(beam: &BeamParameters) -> Self {
        Self::with_scale(critical_scale(beam))
    }

    /// Propagator for an explicit scale.
    pub fn with_scale(scale: CoulombScale) -> Self {
        Self {
            scale,
            minimum: map_minimum(),
        }
    }

    /// Critical scale in use.
    pub fn scale(&self) -> &CoulombScale {
        &self.scale
    }

    /// Fold of the map.
    pub fn minimum(&self) -> &MapMinimum {
        &self.minimum
    }

    /// Smallest arrival interval reachable by a pair with no transverse
    /// offset.
    pub fn hole_floor(&self) -> Time {
        Time::ns(self.minimum.y_min * self.scale.tau_c.as_ns())
    }

    /// Propagate one pair. The angle of the separation vector to the beam
    /// axis is conserved, so every component scales by `σ`.
    pub fn propagate(&self, p: &PairInitial) -> Result<MapSolution> {
        let s_i = p.s_i.as_nm();
        if s_i == 0.0 {
            return Err(Error::SingularPair);
        }
        let u = s_i / self.scale.s_c.as_nm();
        let pt = MapPoint::solve(u)?;
        let sigma = pt.sigma();
        Ok(MapSolution {
            sigma,
            sigma_minus_one: pt.excess(),
            s_f: Length::nm(sigma * s_i),
            x_f: Length::nm(sigma * p.x_i.as_nm()),
            t_f: Time::ns(sigma * p.t_i.as_ns()),
            branch: Branch::of(u, &self.minimum),
        })
    }
}

/// Propagate a single pair through `beam`.
pub fn propagate_pair(p: &PairInitial, beam: &BeamParameters) -> Result<MapSolution> {
    Propagator::new(beam).propagate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ode_oracle;
    use crate::units::Energy;

    fn beam() -> BeamParameters {
        BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0)).unwrap()
    }

    #[test]
    fn angle_is_conserved() {
        let b = beam();
        let v = b.speed();
        // x_i = 3 nm, v t_i = 4 nm
        let p = PairInitial::new(Length::nm(3.0), Time::ns(4.0 / v.as_nm_per_ns()), v).unwrap();
        assert!((p.s_i.as_nm() - 5.0).abs() < 1e-12);
        let sol = propagate_pair(&p, &b).unwrap();
        let k = sol.sigma;
        assert!((sol.x_f.as_nm() - 3.0 * k).abs() < 1e-9 * k);
        assert!((v.as_nm_per_ns() * sol.t_f.as_ns() - 4.0 * k).abs() < 1e-9 * k);
        assert!((sol.s_f.as_nm() - 5.0 * k).abs() < 1e-9 * k);
        assert!(sol.sigma > 1.0);
    }

    #[test]
    fn longitudinal_pair() {
        let b = beam();
        let p = PairInitial::new(Length::nm(0.0), Time::ns(1e-4), b.speed()).unwrap();
        let sol = propagate_pair(&p, &b).unwrap();
        assert_eq!(sol.x_f.as_nm(), 0.0);
        assert!((sol.t_f.as_ns() - sol.sigma * 1e-4).abs() < 1e-18);
    }

    #[test]
    fn wide_pair_barely_moves() {
        let b = beam();
        let prop = Propagator::new(&b);
        let t_i = Time::ns(100.0 * prop.scale().tau_c.as_ns());
        let p = PairInitial::new(Length::nm(0.0), t_i, b.speed()).unwrap();
        let sol = prop.propagate(&p).unwrap();
        assert!((sol.t_f / t_i - 1.0).abs() < 1e-3);
        assert_eq!(sol.branch, Branch::Upper);
        // the ODE oracle agrees on the same pair
        let ode = ode_oracle(p.s_i, b.flight_time(), 1e-10).unwrap();
        assert!(((ode.s_f.as_nm() - sol.s_f.as_nm()) / sol.s_f.as_nm()).abs() < 1e-6);
    }

    #[test]
    fn zero_separation_is_singular() {
        let b = beam();
        let p = PairInitial::new(Length::nm(0.0), Time::ns(0.0), b.speed()).unwrap();
        assert_eq!(propagate_pair(&p, &b), Err(Error::SingularPair));
    }

    #[test]
    fn rejects_negative_inputs() {
        let v = beam().speed();
        assert!(PairInitial::new(Length::nm(-1.0), Time::ns(1.0), v).is_err());
        assert!(PairInitial::new(Length::nm(1.0), Time::ns(-1.0), v).is_err());
    }
}
