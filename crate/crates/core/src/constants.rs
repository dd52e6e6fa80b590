//! Physical constants in canonical units (eV, nm, ns).
//!
//! Values are CODATA, rounded to six significant figures. Anything derived
//! (electron mass in canonical units, the practical-unit coefficients used
//! in [`crate::scales`]) is computed from these, never stored.

use crate::units::{Energy, Length, Quantity, Time, Unit, Velocity};

/// Fixed physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PhysicalConstants {
    /// Coulomb constant e² (Gaussian units), eV·nm.
    pub e2: f64,
    /// Reduced Planck constant ħ, eV·ns.
    pub hbar: f64,
    /// Electron rest energy mc², eV.
    pub mc2: f64,
    /// Speed of light, nm/ns.
    pub c: f64,
    /// Bohr radius, nm.
    pub a0: f64,
    /// Rydberg energy, eV.
    pub ry: f64,
}

/// Identifier written into run manifests.
pub const CONSTANTS_VERSION: &str = "CODATA-2018, 6 significant figures";

/// The constant set used throughout the crate.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    e2: 1.43996,
    hbar: 6.58212e-7,
    mc2: 510_998.95,
    c: 2.99792e8,
    a0: 0.052_917_7,
    ry: 13.6057,
};

impl PhysicalConstants {
    /// Electron mass in eV·ns²/nm².
    pub fn electron_mass(&self) -> f64 {
        self.mc2 / (self.c * self.c)
    }

    /// Nonrelativistic speed of an electron with kinetic energy `e`.
    pub fn speed_for_energy(&self, e: Energy) -> Velocity {
        Velocity::nm_per_ns(libm::sqrt(2.0 * e.as_ev() / self.electron_mass()))
    }

    /// e²/ħ, the atomic unit of velocity.
    pub fn atomic_velocity(&self) -> Velocity {
        Velocity::nm_per_ns(self.e2 / self.hbar)
    }

    /// Bohr radius from ħ, c, mc² and e².
    pub fn bohr_radius_from_primitives(&self) -> Length {
        let hbar_c = self.hbar * self.c;
        Length::nm(hbar_c * hbar_c / (self.mc2 * self.e2))
    }

    /// Rydberg energy e²/(2a₀).
    pub fn rydberg_from_primitives(&self) -> Energy {
        Energy::ev(self.e2 / (2.0 * self.a0))
    }

    /// ħ as a tagged quantity.
    pub fn hbar_quantity(&self) -> Quantity {
        Quantity::new(self.hbar, Unit::EvNs)
    }

    /// e² as a tagged quantity.
    pub fn e2_quantity(&self) -> Quantity {
        Quantity::new(self.e2, Unit::EvNm)
    }

    /// ħ/E for an energy, as a time.
    pub fn hbar_over(&self, e: Energy) -> Time {
        Time::ns(self.hbar / e.as_ev())
    }
}
