//! Unit system.
//!
//! Canonical units are eV for energy, nm for length, ns for time and nm/ns
//! for velocity. Every dimensioned argument in the public API is one of the
//! newtypes below ([`Energy`], [`Length`], [`Time`], [`Velocity`]), so a bare
//! `f64` can never stand in for a dimensioned value. [`Quantity`] is the
//! loosely typed carrier used at the edges (parsing, reports).

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Physical dimension of a [`Unit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Dimension {
    /// Pure number.
    Dimensionless,
    /// Energy.
    Energy,
    /// Length.
    Length,
    /// Time.
    Time,
    /// Length per time.
    Velocity,
    /// Energy times length (e.g. the Coulomb constant e²).
    EnergyLength,
    /// Energy times time (e.g. ħ).
    EnergyTime,
}

/// Unit tags understood by the artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Unit {
    /// Pure number.
    Dimensionless,
    /// Electronvolt (canonical energy).
    EV,
    /// Kiloelectronvolt.
    KeV,
    /// Megaelectronvolt.
    MeV,
    /// Nanometre (canonical length).
    Nm,
    /// Micrometre.
    Um,
    /// Millimetre.
    Mm,
    /// Centimetre.
    Cm,
    /// Metre.
    M,
    /// Femtosecond.
    Fs,
    /// Picosecond.
    Ps,
    /// Nanosecond (canonical time).
    Ns,
    /// Second.
    S,
    /// nm/ns (canonical velocity).
    NmPerNs,
    /// cm/s.
    CmPerS,
    /// m/s.
    MPerS,
    /// eV·nm (canonical energy·length).
    EvNm,
    /// eV·ns (canonical energy·time).
    EvNs,
    /// eV·s.
    EvS,
}

impl Unit {
    /// All units, in declaration order.
    pub const ALL: [Unit; 19] = [
        Unit::Dimensionless,
        Unit::EV,
        Unit::KeV,
        Unit::MeV,
        Unit::Nm,
        Unit::Um,
        Unit::Mm,
        Unit::Cm,
        Unit::M,
        Unit::Fs,
        Unit::Ps,
        Unit::Ns,
        Unit::S,
        Unit::NmPerNs,
        Unit::CmPerS,
        Unit::MPerS,
        Unit::EvNm,
        Unit::EvNs,
        Unit::EvS,
    ];

    /// Dimension measured by this unit.
    pub const fn dimension(self) -> Dimension {
        match self {
            Unit::Dimensionless => Dimension::Dimensionless,
            Unit::EV | Unit::KeV | Unit::MeV => Dimension::Energy,
            Unit::Nm | Unit::Um | Unit::Mm | Unit::Cm | Unit::M => Dimension::Length,
            Unit::Fs | Unit::Ps | Unit::Ns | Unit::S => Dimension::Time,
            Unit::NmPerNs | Unit::CmPerS | Unit::MPerS => Dimension::Velocity,
            Unit::EvNm => Dimension::EnergyLength,
            Unit::EvNs | Unit::EvS => Dimension::EnergyTime,
        }
    }

    /// Size of one of this unit in the canonical unit of its dimension.
    pub const fn canonical_factor(self) -> f64 {
        match self {
            Unit::Dimensionless | Unit::EV | Unit::Nm | Unit::Ns => 1.0,
            Unit::KeV => 1e3,
            Unit::MeV => 1e6,
            Unit::Um => 1e3,
            Unit::Mm => 1e6,
            Unit::Cm => 1e7,
            Unit::M => 1e9,
            Unit::Fs => 1e-6,
            Unit::Ps => 1e-3,
            Unit::S => 1e9,
            Unit::NmPerNs => 1.0,
            Unit::CmPerS => 1e-2,
            Unit::MPerS => 1.0,
            Unit::EvNm => 1.0,
            Unit::EvNs => 1.0,
            Unit::EvS => 1e9,
        }
    }

    /// Short symbol, also accepted by the parser.
    pub const fn symbol(self) -> &'static str {
        match self {
            Unit::Dimensionless => "1",
            Unit::EV => "eV",
            Unit::KeV => "keV",
            Unit::MeV => "MeV",
            Unit::Nm => "nm",
            Unit::Um => "um",
            Unit::Mm => "mm",
            Unit::Cm => "cm",
            Unit::M => "m",
            Unit::Fs => "fs",
            Unit::Ps => "ps",
            Unit::Ns => "ns",
            Unit::S => "s",
            Unit::NmPerNs => "nm/ns",
            Unit::CmPerS => "cm/s",
            Unit::MPerS => "m/s",
            Unit::EvNm => "eV*nm",
            Unit::EvNs => "eV*ns",
            Unit::EvS => "eV*s",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        // "KeV" is how the energy unit is often written in the literature.
        let found = match t {
            "KeV" | "KEV" | "kev" => Some(Unit::KeV),
            "" => Some(Unit::Dimensionless),
            "µm" | "μm" => Some(Unit::Um),
            _ => Unit::ALL.iter().copied().find(|u| u.symbol() == t),
        };
        found.ok_or_else(|| Error::UnknownUnit(t.to_string()))
    }
}

/// A value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quantity {
    /// Numeric value in `unit`.
    pub value: f64,
    /// Unit tag.
    pub unit: Unit,
}

impl Quantity {
    /// Tag `value` with `unit`.
    pub const fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// Dimension of the quantity.
    pub const fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }

    /// Value expressed in the canonical unit of its dimension.
    pub fn canonical_value(&self) -> f64 {
        self.value * self.unit.canonical_factor()
    }

    /// Express this quantity in `target`.
    pub fn convert(self, target: Unit) -> Result<Quantity> {
        convert(self, target)
    }

    /// Parse a number followed by a unit suffix, e.g. `50keV`, `0.2 ns`.
    ///
    /// A bare number parses as dimensionless.
    pub fn parse(s: &str) -> Result<Quantity> {
        let t = s.trim();
        let split = t
            .char_indices()
            .find(|&(i, c)| {
                let is_num = c.is_ascii_digit() || c == '.' || c == '+' || c == '-';
                // keep the exponent marker of 1e-3 with the number
                let is_exp = (c == 'e' || c == 'E')
                    && i > 0
                    && t[i + c.len_utf8()..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')
                    && !t[i..].starts_with("eV");
                !(is_num || is_exp)
            })
            .map_or(t.len(), |(i, _)| i);
        let (num, unit) = t.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::BadQuantity(t.to_string()))?;
        let unit: Unit = unit.parse()?;
        Ok(Quantity { value, unit })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit == Unit::Dimensionless {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} {}", self.value, self.unit)
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::parse(s)
    }
}

/// Rescale `q` into `target`. Fails when the dimensions differ.
pub fn convert(q: Quantity, target: Unit) -> Result<Quantity> {
    if q.unit.dimension() != target.dimension() {
        return Err(Error::DimensionMismatch {
            from: q.unit,
            to: target,
        });
    }
    if q.unit == target {
        return Ok(q);
    }
    let value = q.value * q.unit.canonical_factor() / target.canonical_factor();
    Ok(Quantity {
        value,
        unit: target,
    })
}

macro_rules! dimensioned {
    ($(#[$m:meta])* $name:ident, $dim:ident, $canon:ident, $word:literal) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
        #[cfg_attr(feature = "serde", serde(transparent))]
        pub struct $name(f64);

        impl $name {
            /// Construct from a value in the canonical unit.
            pub const fn canonical(value: f64) -> Self {
                Self(value)
            }

            /// Value in the canonical unit.
            pub const fn value(self) -> f64 {
                self.0
            }

            /// Value expressed in `unit`. Fails for a unit of another dimension.
            pub fn in_unit(self, unit: Unit) -> Result<f64> {
                Ok(convert(Quantity::from(self), unit)?.value)
            }

            /// Construct from a value in `unit`.
            pub fn new(value: f64, unit: Unit) -> Result<Self> {
                Self::try_from(Quantity::new(value, unit))
            }
        }

        impl From<$name> for Quantity {
            fn from(x: $name) -> Quantity {
                Quantity::new(x.0, Unit::$canon)
            }
        }

        impl TryFrom<Quantity> for $name {
            type Error = Error;

            fn try_from(q: Quantity) -> Result<Self> {
                if q.dimension() != Dimension::$dim {
                    return Err(Error::WrongDimension {
                        what: stringify!($name),
                        expected: $word,
                        got: q.unit,
                    });
                }
                Ok(Self(q.canonical_value()))
            }
        }

        impl core::ops::Mul<f64> for $name {
            type Output = $name;
            fn mul(self, k: f64) -> $name {
                $name(self.0 * k)
            }
        }

        impl core::ops::Div<$name> for $name {
            type Output = f64;
            fn div(self, other: $name) -> f64 {
                self.0 / other.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                Quantity::from(*self).fmt(f)
            }
        }
    };
}

dimensioned!(
    /// Energy, stored in eV.
    Energy, Energy, EV, "an energy"
);
dimensioned!(
    /// Length, stored in nm.
    Length, Length, Nm, "a length"
);
dimensioned!(
    /// Time interval, stored in ns.
    Time, Time, Ns, "a time"
);
dimensioned!(
    /// Speed, stored in nm/ns.
    Velocity, Velocity, NmPerNs, "a velocity"
);

impl Energy {
    /// Energy in eV.
    pub const fn ev(value: f64) -> Self {
        Self(value)
    }
    /// Energy in keV.
    pub const fn kev(value: f64) -> Self {
        Self(value * 1e3)
    }
    /// Value in eV.
    pub const fn as_ev(self) -> f64 {
        self.0
    }
    /// Value in keV.
    pub fn as_kev(self) -> f64 {
        self.0 / 1e3
    }
}

impl Length {
    /// Length in nm.
    pub const fn nm(value: f64) -> Self {
        Self(value)
    }
    /// Length in cm.
    pub const fn cm(value: f64) -> Self {
        Self(value * 1e7)
    }
    /// Value in nm.
    pub const fn as_nm(self) -> f64 {
        self.0
    }
    /// Value in cm.
    pub fn as_cm(self) -> f64 {
        self.0 / 1e7
    }
}

impl Time {
    /// Time in ns.
    pub const fn ns(value: f64) -> Self {
        Self(value)
    }
    /// Time in s.
    pub const fn s(value: f64) -> Self {
        Self(value * 1e9)
    }
    /// Value in ns.
    pub const fn as_ns(self) -> f64 {
        self.0
    }
    /// Value in s.
    pub fn as_s(self) -> f64 {
        self.0 / 1e9
    }
}

impl Velocity {
    /// Speed in nm/ns.
    pub const fn nm_per_ns(value: f64) -> Self {
        Self(value)
    }
    /// Value in nm/ns.
    pub const fn as_nm_per_ns(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kilo_electronvolt_to_ev() {
        let q = convert(Quantity::new(1.0, Unit::KeV), Unit::EV).unwrap();
        assert_eq!(q, Quantity::new(1000.0, Unit::EV));
    }

    #[test]
    fn centimetre_to_nanometre() {
        let q = convert(Quantity::new(1.0, Unit::Cm), Unit::Nm).unwrap();
        assert_eq!(q.value, 1e7);
    }

    #[test]
    fn identity_conversion() {
        let x = 0.123_456_789;
        assert_eq!(
            convert(Quantity::new(x, Unit::EV), Unit::EV).unwrap().value,
            x
        );
    }

    #[test]
    fn mismatch_names_both_units() {
        let err = convert(Quantity::new(1.0, Unit::EV), Unit::Nm).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                from: Unit::EV,
                to: Unit::Nm
            }
        );
        let msg = alloc::format!("{err}");
        assert!(msg.contains("eV") && msg.contains("nm"), "{msg}");
    }

    #[test]
    fn parse_suffixed() {
        assert_eq!(
            Quantity::parse("50keV").unwrap(),
            Quantity::new(50.0, Unit::KeV)
        );
        assert_eq!(
            Quantity::parse("50KeV").unwrap(),
            Quantity::new(50.0, Unit::KeV)
        );
        assert_eq!(
            Quantity::parse("0.17eV").unwrap(),
            Quantity::new(0.17, Unit::EV)
        );
        assert_eq!(
            Quantity::parse("100 cm").unwrap(),
            Quantity::new(100.0, Unit::Cm)
        );
        assert_eq!(
            Quantity::parse("2e-1ns").unwrap(),
            Quantity::new(0.2, Unit::Ns)
        );
        assert_eq!(
            Quantity::parse("1e3eV").unwrap(),
            Quantity::new(1000.0, Unit::EV)
        );
        assert_eq!(
            Quantity::parse("3").unwrap(),
            Quantity::new(3.0, Unit::Dimensionless)
        );
        assert!(Quantity::parse("3 furlongs").is_err());
        assert!(Quantity::parse("keV").is_err());
    }

    #[test]
    fn newtype_rejects_wrong_dimension() {
        assert!(Energy::try_from(Quantity::new(1.0, Unit::Nm)).is_err());
        assert_eq!(Energy::new(2.0, Unit::KeV).unwrap(), Energy::kev(2.0));
        assert_eq!(Length::new(1.0, Unit::Cm).unwrap().as_nm(), 1e7);
        assert_eq!(Time::new(1.0, Unit::S).unwrap().as_ns(), 1e9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn same_dim_pair() -> impl Strategy<Value = (Unit, Unit)> {
            (0..Unit::ALL.len(), 0..Unit::ALL.len())
                .prop_map(|(a, b)| (Unit::ALL[a], Unit::ALL[b]))
                .prop_filter("same dimension", |(a, b)| a.dimension() == b.dimension())
        }

        proptest! {
            #[test]
            fn round_trip_is_exact_to_rounding(
                x in -1e12f64..1e12,
                (a, b) in same_dim_pair(),
            ) {
                let there = convert(Quantity::new(x, a), b).unwrap();
                let back = convert(there, a).unwrap();
                prop_assert_eq!(back.unit, a);
                prop_assert!((back.value - x).abs() <= 4.0 * f64::EPSILON * x.abs());
            }
        }
    }
}
