use crate::constants::CODATA;
use crate::error::{Error, Result};
use crate::units::{Energy, Length, Velocity};

/// Classical distance of closest approach, `e²/E_rel`.
pub fn turning_point(relative_energy: Energy) -> Result<Length> {
    let e = relative_energy.as_ev();
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::Domain {
            what: "relative energy",
            value: e,
        });
    }
    Ok(Length::nm(CODATA.e2 / e))
}

/// Coulomb parameter `η = z z' e²/(ħ v_rel)`.
pub fn coulomb_eta(v_rel: Velocity, z: i32, z_prime: i32) -> Result<f64> {
    let v = v_rel.as_nm_per_ns();
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain {
            what: "relative velocity",
            value: v,
        });
    }
    Ok(f64::from(z) * f64::from(z_prime) * CODATA.e2 / (CODATA.hbar * v))
}

/// Gamow factor `|ψ_c(0)|² = 2πη/(e^{2πη} − 1)`.
///
/// Exactly 1 at `η = 0`; a short series is used for `|η| < 1e-8`.
pub fn gamow_factor(eta: f64) -> f64 {
    let x = 2.0 * core::f64::consts::PI * eta;
    if eta.abs() < 1e-8 {
        // x/(e^x - 1) = 1 - x/2 + x²/12 - ...
        return 1.0 - 0.5 * x + x * x / 12.0;
    }
    x / libm::expm1(x)
}
