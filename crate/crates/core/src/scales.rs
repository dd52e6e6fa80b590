//! Coulomb and quantum-statistical scales of a beam, and the verdict on
//! which one dominates.
//!
//! `t_HBT/τ_c` is computed both from the two definitions and from its power
//! law `2^{-5/6} ħ E_f^{11/6} / (ΔE² m^{1/2} (e²)^{1/3} L^{2/3})`. Rewriting
//! the law with `a₀` and `Ry` is easy to get wrong by `2^{1/6}`, so only the
//! direct form is computed.

use alloc::vec::Vec;

use crate::constants::CODATA;
use crate::dynamics::{critical_scale, BeamParameters};
use crate::error::{Error, Result};
use crate::units::{Energy, Length, Time, Velocity};

/// Every scale derived from one beam.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerivedScales {
    /// Beam energy the scales belong to.
    #[cfg_attr(feature = "serde", serde(rename = "e_f_ev"))]
    pub e_f: Energy,
    /// `√(2E_f/m)`.
    #[cfg_attr(feature = "serde", serde(rename = "v_nm_per_ns"))]
    pub v: Velocity,
    /// Critical Coulomb length.
    #[cfg_attr(feature = "serde", serde(rename = "s_c_nm"))]
    pub s_c: Length,
    /// Critical Coulomb time.
    #[cfg_attr(feature = "serde", serde(rename = "tau_c_ns"))]
    pub tau_c: Time,
    /// Initial temperature `2ΔE`.
    #[cfg_attr(feature = "serde", serde(rename = "t_i_temp_ev"))]
    pub t_i_temp: Energy,
    /// Final longitudinal temperature `2ΔE²/E_f`.
    #[cfg_attr(feature = "serde", serde(rename = "t_f_temp_ev"))]
    pub t_f_temp: Energy,
    /// `ħ/T_f`.
    #[cfg_attr(feature = "serde", serde(rename = "t_hbt_ns"))]
    pub t_hbt: Time,
    /// `ħL/(m v r₀)`, when `r₀` is known.
    #[cfg_attr(
        feature = "serde",
        serde(rename = "s_hbt_nm", skip_serializing_if = "Option::is_none")
    )]
    pub s_hbt: Option<Length>,
    /// `e²/ΔE`.
    #[cfg_attr(feature = "serde", serde(rename = "r_tp_nm"))]
    pub r_tp: Length,
    /// `t_HBT/τ_c`.
    pub ratio_time: f64,
    /// `s_HBT/s_c`, when `r₀` is known.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub ratio_space: Option<f64>,
}

/// Scales of `beam`. `s_hbt` and `ratio_space` are absent without `r₀`.
pub fn derive_scales(beam: &BeamParameters) -> DerivedScales {
    let sc = critical_scale(beam);
    let e_f = beam.e_f().as_ev();
    let de = beam.delta_e().as_ev();
    let t_f_temp = 2.0 * de * de / e_f;
    let t_hbt = Time::ns(CODATA.hbar / t_f_temp);
    let m = CODATA.electron_mass();
    let s_hbt = beam.r0().map(|r0| {
        Length::nm(CODATA.hbar * beam.l().as_nm() / (m * sc.v.as_nm_per_ns() * r0.as_nm()))
    });
    DerivedScales {
        e_f: beam.e_f(),
        v: sc.v,
        s_c: sc.s_c,
        tau_c: sc.tau_c,
        t_i_temp: Energy::ev(2.0 * de),
        t_f_temp: Energy::ev(t_f_temp),
        t_hbt,
        s_hbt,
        r_tp: Length::nm(CODATA.e2 / de),
        ratio_time: t_hbt / sc.tau_c,
        ratio_space: s_hbt.map(|s| s / sc.s_c),
    }
}

/// `t_HBT/τ_c` from its power law alone.
pub fn ratio_time_closed_form(e_f: Energy, delta_e: Energy, l: Length) -> f64 {
    let (e, de, l) = (e_f.as_ev(), delta_e.as_ev(), l.as_nm());
    let m = CODATA.electron_mass();
    libm::pow(2.0, -5.0 / 6.0) * CODATA.hbar * libm::pow(e, 11.0 / 6.0)
        / (de * de * libm::sqrt(m) * libm::cbrt(CODATA.e2) * libm::pow(l, 2.0 / 3.0))
}

/// `s_HBT/s_c` from its power law alone.
pub fn ratio_space_closed_form(e_f: Energy, l: Length, r0: Length) -> f64 {
    let (e, l, r0) = (e_f.as_ev(), l.as_nm(), r0.as_nm());
    let m = CODATA.electron_mass();
    CODATA.hbar * libm::cbrt(l) * libm::pow(e, -1.0 / 6.0)
        / (libm::pow(2.0, 5.0 / 6.0) * libm::sqrt(m) * libm::cbrt(CODATA.e2) * r0)
}

/// `k` in `t_HBT/τ_c = k·E_keV^{11/6}/(ΔE_eV²·L_cm^{2/3})`.
pub fn ratio_time_coefficient() -> f64 {
    ratio_time_closed_form(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0))
}

/// `k` in `s_HBT/s_c = k·L_cm^{1/3}/(E_keV^{1/6}·r₀/10 nm)`.
pub fn ratio_space_coefficient() -> f64 {
    ratio_space_closed_form(Energy::kev(1.0), Length::cm(1.0), Length::nm(10.0))
}

/// `s_c` at 1 keV and 1 cm; scales as `L_cm^{2/3}/E_keV^{1/3}`.
pub fn critical_length_coefficient() -> Length {
    let beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0))
        .expect("unit beam is valid");
    critical_scale(&beam).s_c
}

/// `s_HBT` at 1 keV, 1 cm, r₀ = 10 nm; scales as `L_cm/(E_keV^{1/2} r₀)`.
pub fn hbt_length_coefficient() -> Length {
    let beam = BeamParameters::new(Energy::kev(1.0), Energy::ev(1.0), Length::cm(1.0))
        .and_then(|b| b.with_source_size(Length::nm(10.0)))
        .expect("unit beam is valid");
    derive_scales(&beam).s_hbt.expect("source size was given")
}

/// `r_tp` at ΔE = 1 eV; scales as `1/ΔE_eV`.
pub fn turning_point_coefficient() -> Length {
    Length::nm(CODATA.e2)
}

/// Verdict on the Coulomb effect relative to HBT suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Regime {
    /// HBT scale far above the Coulomb scale.
    CoulombNegligible,
    /// Comparable within two orders of magnitude.
    CoulombRelevant,
    /// Coulomb scale comparable to or above the HBT scale.
    CoulombDominant,
}

impl Regime {
    /// Snake-case label.
    pub fn label(self) -> &'static str {
        match self {
            Regime::CoulombNegligible => "coulomb_negligible",
            Regime::CoulombRelevant => "coulomb_relevant",
            Regime::CoulombDominant => "coulomb_dominant",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Ratio cut points for [`Regime`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeThresholds {
    /// Ratios above this are negligible.
    pub negligible_above: f64,
    /// Ratios at or below this are dominant.
    pub dominant_at_or_below: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            negligible_above: 100.0,
            dominant_at_or_below: 3.0,
        }
    }
}

impl RegimeThresholds {
    /// Custom thresholds, `0 < dominant < negligible`.
    pub fn new(negligible_above: f64, dominant_at_or_below: f64) -> Result<Self> {
        if !(dominant_at_or_below > 0.0 && negligible_above > dominant_at_or_below)
            || !negligible_above.is_finite()
        {
            return Err(Error::InvalidConfig(
                "regime thresholds need 0 < dominant < negligible",
            ));
        }
        Ok(Self {
            negligible_above,
            dominant_at_or_below,
        })
    }

    /// Classify a scale ratio.
    pub fn classify(&self, ratio: f64) -> Regime {
        if ratio > self.negligible_above {
            Regime::CoulombNegligible
        } else if ratio > self.dominant_at_or_below {
            Regime::CoulombRelevant
        } else {
            Regime::CoulombDominant
        }
    }
}

/// Scales and verdicts for one beam energy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeEntry {
    /// All derived scales.
    pub scales: DerivedScales,
    /// Verdict from `t_HBT/τ_c`.
    pub time_regime: Regime,
    /// Verdict from `s_HBT/s_c`, when `r₀` is known.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub space_regime: Option<Regime>,
}

/// Assessment of one or more beams (one per energy of a preset range).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeReport {
    /// Preset name, if the report came from one.
    pub name: Option<&'static str>,
    /// Thresholds used.
    pub thresholds: RegimeThresholds,
    /// One entry per beam, in input order.
    pub entries: Vec<RegimeEntry>,
}

/// Classify each beam.
pub fn regime_report(
    name: Option<&'static str>,
    beams: &[BeamParameters],
    thresholds: &RegimeThresholds,
) -> RegimeReport {
    let entries = beams
        .iter()
        .map(|b| {
            let scales = derive_scales(b);
            RegimeEntry {
                scales,
                time_regime: thresholds.classify(scales.ratio_time),
                space_regime: scales.ratio_space.map(|r| thresholds.classify(r)),
            }
        })
        .collect();
    RegimeReport {
        name,
        thresholds: *thresholds,
        entries,
    }
}

/// A published experiment's beam parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentPreset {
    /// Short name.
    pub name: &'static str,
    /// Lowest final energy.
    pub e_f_min: Energy,
    /// Highest final energy (equal to the lowest for a single value).
    pub e_f_max: Energy,
    /// Initial energy spread.
    pub delta_e: Energy,
    /// Flight length.
    pub l: Length,
}

/// High-energy field-emission source, 50–100 keV over 100 cm.
pub const KOT: ExperimentPreset = ExperimentPreset {
    name: "kot",
    e_f_min: Energy::canonical(50_000.0),
    e_f_max: Energy::canonical(100_000.0),
    delta_e: Energy::canonical(0.17),
    l: Length::canonical(1e9),
};

/// Low-energy field-emission source, 0.9 keV over 1 cm.
pub const KIESEL: ExperimentPreset = ExperimentPreset {
    name: "kiesel",
    e_f_min: Energy::canonical(900.0),
    e_f_max: Energy::canonical(900.0),
    delta_e: Energy::canonical(0.13),
    l: Length::canonical(1e7),
};

/// All presets.
pub const PRESETS: [ExperimentPreset; 2] = [KOT, KIESEL];

impl ExperimentPreset {
    /// Look a preset up by name, ignoring ASCII case.
    pub fn find(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .copied()
            .find(|p| p.name.eq_ignore_ascii_case(name.trim()))
    }

    /// Distinct final energies of the preset, ascending.
    pub fn energies(&self) -> Vec<Energy> {
        if self.e_f_min == self.e_f_max {
            alloc::vec![self.e_f_min]
        } else {
            alloc::vec![self.e_f_min, self.e_f_max]
        }
    }

    /// One beam per energy, with `r₀` attached when given.
    pub fn beams(&self, r0: Option<Length>) -> Result<Vec<BeamParameters>> {
        self.energies()
            .into_iter()
            .map(|e| {
                let b = BeamParameters::new(e, self.delta_e, self.l)?;
                match r0 {
                    Some(r) => b.with_source_size(r),
                    None => Ok(b),
                }
            })
            .collect()
    }

    /// Report over the preset's energies.
    pub fn report(
        &self,
        r0: Option<Length>,
        thresholds: &RegimeThresholds,
    ) -> Result<RegimeReport> {
        Ok(regime_report(Some(self.name), &self.beams(r0)?, thresholds))
    }
}
