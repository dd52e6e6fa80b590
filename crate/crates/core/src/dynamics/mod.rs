//! Classical relative motion of an electron pair.
//!
//! The pair starts at relative rest with separation `s_i` and flies for
//! `Δt = L/v`. Energy conservation of the relative coordinate,
//! `m ṡ²/4 + e²/s = e²/s_i`, integrates to an implicit relation for the
//! expansion ratio `σ = s_f/s_i`. Measured in the critical length
//! `s_c = (2e²L²/E_f)^{1/3}` it becomes the parameter-free equation
//!
//! ```text
//! u^{3/2} h(σ) = 1,   u = s_i/s_c,   h(σ) = √(σ(σ−1)) + ln(√σ + √(σ−1))
//! ```
//!
//! whose solution is in [`map`]. The final separation `u·σ(u)` first falls
//! and then rises with `u`, so it has a strictly positive minimum: the
//! Coulomb hole.

mod coulomb;
pub mod map;
mod ode;
mod pair;

use alloc::vec::Vec;

use crate::constants::CODATA;
use crate::error::{Error, Result};
use crate::units::{Energy, Length, Time, Velocity};

pub use coulomb::{coulomb_eta, gamow_factor, turning_point};
pub use map::{
    expansion_integral, expansion_integral_excess, invert_map, map_approx, map_derivative,
    map_excess_exact, map_minimum, map_sigma_exact, Branch, MapMinimum, Preimage,
};
pub use ode::{ode_oracle, OdeSolution};
pub use pair::{propagate_pair, MapSolution, PairInitial, Propagator};

/// Fraction of the rest energy above which the nonrelativistic model is
/// flagged.
pub const RELATIVISTIC_WARNING_FRACTION: f64 = 0.25;

/// Advisory conditions that do not invalidate a beam.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum BeamWarning {
    /// `E_f` exceeds a quarter of mc²; kinematics stay nonrelativistic.
    Relativistic {
        /// Ratio E_f / mc².
        fraction_of_rest_energy: f64,
    },
}

impl core::fmt::Display for BeamWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BeamWarning::Relativistic {
                fraction_of_rest_energy,
            } => write!(
                f,
                "final energy is {fraction_of_rest_energy:.3} of mc^2; \
                 nonrelativistic kinematics are used regardless"
            ),
        }
    }
}

/// Experiment inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BeamParameters {
    e_f: Energy,
    delta_e: Energy,
    l: Length,
    r0: Option<Length>,
    t_bar: Option<Time>,
    t_r: Option<Time>,
}

fn positive<T: Copy>(what: &'static str, x: T, v: f64) -> Result<T> {
    if v > 0.0 && v.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain { what, value: v })
    }
}

impl BeamParameters {
    /// Beam of final energy `e_f`, initial spread `delta_e` and flight
    /// length `l`. All three must be positive and finite.
    pub fn new(e_f: Energy, delta_e: Energy, l: Length) -> Result<Self> {
        Ok(Self {
            e_f: positive("final energy", e_f, e_f.value())?,
            delta_e: positive("energy spread", delta_e, delta_e.value())?,
            l: positive("flight length", l, l.value())?,
            r0: None,
            t_bar: None,
            t_r: None,
        })
    }

    /// Attach the transverse source size.
    pub fn with_source_size(mut self, r0: Length) -> Result<Self> {
        self.r0 = Some(positive("source size", r0, r0.value())?);
        Ok(self)
    }

    /// Attach the mean emission interval.
    pub fn with_emission_interval(mut self, t_bar: Time) -> Result<Self> {
        self.t_bar = Some(positive("mean emission interval", t_bar, t_bar.value())?);
        Ok(self)
    }

    /// Attach the detector resolution time.
    pub fn with_resolution(mut self, t_r: Time) -> Result<Self> {
        self.t_r = Some(positive("resolution time", t_r, t_r.value())?);
        Ok(self)
    }

    /// Final beam energy.
    pub fn e_f(&self) -> Energy {
        self.e_f
    }
    /// Initial energy spread.
    pub fn delta_e(&self) -> Energy {
        self.delta_e
    }
    /// Tip-to-detector distance.
    pub fn l(&self) -> Length {
        self.l
    }
    /// Transverse source size, if known.
    pub fn r0(&self) -> Option<Length> {
        self.r0
    }
    /// Mean emission interval, if known.
    pub fn t_bar(&self) -> Option<Time> {
        self.t_bar
    }
    /// Detector resolution, if known.
    pub fn t_r(&self) -> Option<Time> {
        self.t_r
    }

    /// Beam speed `√(2E_f/m)`.
    pub fn speed(&self) -> Velocity {
        CODATA.speed_for_energy(self.e_f)
    }

    /// Flight time `L/v`.
    pub fn flight_time(&self) -> Time {
        Time::ns(self.l.as_nm() / self.speed().as_nm_per_ns())
    }

    /// Non-fatal conditions worth reporting.
    pub fn warnings(&self) -> Vec<BeamWarning> {
        let mut out = Vec::new();
        let fraction = self.e_f.as_ev() / CODATA.mc2;
        if fraction > RELATIVISTIC_WARNING_FRACTION {
            out.push(BeamWarning::Relativistic {
                fraction_of_rest_energy: fraction,
            });
        }
        out
    }
}

/// Critical Coulomb length and time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CoulombScale {
    /// `s_c = (2e²L²/E_f)^{1/3}`.
    pub s_c: Length,
    /// `τ_c = s_c/v`.
    pub tau_c: Time,
    /// Beam speed used to relate the two.
    pub v: Velocity,
}

impl CoulombScale {
    /// Scale with an explicit length and speed.
    pub fn new(s_c: Length, v: Velocity) -> Result<Self> {
        positive("critical length", s_c, s_c.value())?;
        positive("speed", v, v.value())?;
        Ok(Self {
            s_c,
            tau_c: Time::ns(s_c.as_nm() / v.as_nm_per_ns()),
            v,
        })
    }

    /// Distance travelled at beam speed in `t`.
    pub fn length_of(&self, t: Time) -> Length {
        Length::nm(self.v.as_nm_per_ns() * t.as_ns())
    }
}

/// `s_c` and `τ_c` for a beam.
pub fn critical_scale(beam: &BeamParameters) -> CoulombScale {
    let e_f = beam.e_f.as_ev();
    let l = beam.l.as_nm();
    let s_c = libm::cbrt(2.0 * CODATA.e2 * l * l / e_f);
    let v = beam.speed();
    CoulombScale {
        s_c: Length::nm(s_c),
        tau_c: Time::ns(s_c / v.as_nm_per_ns()),
        v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam(e_kev: f64, l_cm: f64) -> BeamParameters {
        BeamParameters::new(Energy::kev(e_kev), Energy::ev(1.0), Length::cm(l_cm)).unwrap()
    }

    #[test]
    fn kev_centimetre_critical_length() {
        let s_c = critical_scale(&beam(1.0, 1.0)).s_c.as_cm();
        assert!(((s_c - 6.5e-4) / 6.5e-4).abs() < 0.03, "{s_c}");
    }

    #[test]
    fn kot_critical_length() {
        // (2 * 1.43996 eV nm * (1e9 nm)^2 / 5e4 eV)^{1/3}
        let s_c = critical_scale(&beam(50.0, 100.0)).s_c.as_cm();
        assert!(((s_c - 3.861_92e-3) / 3.861_92e-3).abs() < 1e-5, "{s_c}");
    }

    #[test]
    fn critical_length_scaling() {
        let a = critical_scale(&beam(3.0, 2.0)).s_c;
        let b = critical_scale(&beam(3.0, 8.0)).s_c;
        let want = libm::pow(4.0, 2.0 / 3.0);
        assert!((b / a - want).abs() < 1e-13);
    }

    #[test]
    fn scale_invariants() {
        let b = beam(7.0, 30.0);
        let sc = critical_scale(&b);
        let v = b.speed().as_nm_per_ns();
        assert!((sc.s_c.as_nm() - v * sc.tau_c.as_ns()).abs() < 1e-12 * sc.s_c.as_nm());
        let cube = libm::pow(sc.s_c.as_nm(), 3.0);
        let want = 2.0 * CODATA.e2 * libm::pow(b.l().as_nm(), 2.0) / b.e_f().as_ev();
        assert!(((cube - want) / want).abs() < 1e-13);
    }

    #[test]
    fn beam_validation() {
        assert!(BeamParameters::new(Energy::ev(0.0), Energy::ev(1.0), Length::cm(1.0)).is_err());
        assert!(BeamParameters::new(Energy::ev(1.0), Energy::ev(-1.0), Length::cm(1.0)).is_err());
        assert!(
            BeamParameters::new(Energy::ev(1.0), Energy::ev(1.0), Length::cm(f64::NAN)).is_err()
        );
        assert!(beam(1.0, 1.0).with_source_size(Length::nm(0.0)).is_err());
        assert!(beam(1.0, 1.0)
            .with_emission_interval(Time::ns(-1.0))
            .is_err());
        assert!(beam(1.0, 1.0).with_resolution(Time::ns(0.1)).is_ok());
    }

    #[test]
    fn relativistic_flag_is_a_warning() {
        assert!(beam(100.0, 1.0).warnings().is_empty());
        let hot = beam(200.0, 1.0);
        assert_eq!(hot.warnings().len(), 1);
        // still usable
        assert!(critical_scale(&hot).s_c.as_nm() > 0.0);
    }
}
