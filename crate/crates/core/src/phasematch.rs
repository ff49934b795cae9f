//! Wave-vector bookkeeping for the two type-II processes and the
//! phase-matching function.
//!
//! Angles are measured from the propagation axis x in the waveguide plane.
//! The grating vector is K(cos θ_g, −sin θ_g): positive slant angles are
//! clockwise. With signal and idler wave vectors β(cos θ, sin θ):
//!
//! ```text
//! Δk_x  = β_p − β_s cos θ_s − β_i cos θ_i − K cos θ_g
//! Δk_y  = β_s sin θ_s + β_i sin θ_i + K sin θ_g
//! Δk    = Δk_x − Δk_y² / (2 β_p)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::dispersion::Polarization;
use crate::error::{Error, Result};
use crate::medium::Medium;

/// Propagation constant 2π n / λ in µm⁻¹.
pub fn beta(n_eff: f64, wavelength: f64) -> Result<f64> {
    if !(n_eff > 0.0 && wavelength > 0.0 && n_eff.is_finite() && wavelength.is_finite()) {
        return Err(Error::InvalidInput(format!("beta needs n_eff > 0 and λ > 0, got n={n_eff}, λ={wavelength}")));
    }
    Ok(2.0 * PI * n_eff / wavelength)
}

/// Idler wavelength from 1/λ_i = 1/λ_p − 1/λ_s.
pub fn idler_wavelength(pump: f64, signal: f64) -> Result<f64> {
    if !(pump > 0.0 && signal > pump) {
        return Err(Error::EnergyConservation { pump, signal });
    }
    Ok(1.0 / (1.0 / pump - 1.0 / signal))
}

/// sin(u)/u with a series branch near zero.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec {
    /// µm.
    pub period: f64,
    /// rad, clockwise from x.
    pub slant: f64,
}

impl GratingSpec {
    pub fn new(period: f64, slant: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite() && slant.is_finite()) {
            return Err(Error::InvalidInput(format!("grating period must be positive, got {period}")));
        }
        Ok(GratingSpec { period, slant })
    }

    pub fn from_vector(kx: f64, ky: f64) -> Self {
        let k = kx.hypot(ky);
        GratingSpec { period: 2.0 * PI / k, slant: -ky.atan2(kx) }
    }

    /// |K| = 2π/Λ.
    pub fn k(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Cartesian (K_x, K_y).
    pub fn vector(&self) -> (f64, f64) {
        let k = self.k();
        (k * self.slant.cos(), -k * self.slant.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessId {
    /// Process 1: H pump → H signal + V idler.
    HV,
    /// Process 2: H pump → V signal + H idler.
    VH,
}

impl ProcessId {
    pub fn signal(self) -> Polarization {
        match self {
            ProcessId::HV => Polarization::H,
            ProcessId::VH => Polarization::V,
        }
    }

    pub fn idler(self) -> Polarization {
        match self {
            ProcessId::HV => Polarization::V,
            ProcessId::VH => Polarization::H,
        }
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcessId::HV => "HV",
            ProcessId::VH => "VH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub id: ProcessId,
    pub grating: GratingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionGeometry {
    pub theta_s: f64,
    pub theta_i: f64,
}

impl EmissionGeometry {
    pub fn new(theta_s: f64, theta_i: f64) -> Self {
        EmissionGeometry { theta_s, theta_i }
    }

    pub fn collinear() -> Self {
        EmissionGeometry { theta_s: 0.0, theta_i: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub dk_x: f64,
    pub dk_y: f64,
    pub dk_eff: f64,
}

/// Indices of the pump (H), signal and idler modes of one process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIndices {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

impl ModeIndices {
    pub fn resolve(medium: &Medium, process: ProcessId, pump_wl: f64, signal_wl: f64) -> Result<Self> {
        let idler_wl = idler_wavelength(pump_wl, signal_wl)?;
        Ok(ModeIndices {
            pump: medium.index(Polarization::H, pump_wl)?,
            signal: medium.index(process.signal(), signal_wl)?,
            idler: medium.index(process.idler(), idler_wl)?,
        })
    }
}

/// Propagation constants (µm⁻¹) of the three interacting modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Betas {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

impl Betas {
    pub fn new(indices: &ModeIndices, pump_wl: f64, signal_wl: f64) -> Result<Self> {
        let idler_wl = idler_wavelength(pump_wl, signal_wl)?;
        Ok(Betas {
            pump: beta(indices.pump, pump_wl)?,
            signal: beta(indices.signal, signal_wl)?,
            idler: beta(indices.idler, idler_wl)?,
        })
    }

    pub fn resolve(medium: &Medium, process: ProcessId, pump_wl: f64, signal_wl: f64) -> Result<Self> {
        Self::new(&ModeIndices::resolve(medium, process, pump_wl, signal_wl)?, pump_wl, signal_wl)
    }
}

/// Mismatch from precomputed propagation constants.
pub fn mismatch_betas(grating: &GratingSpec, geom: &EmissionGeometry, b: &Betas) -> Mismatch {
    let k = grating.k();
    let dk_x = b.pump - b.signal * geom.theta_s.cos() - b.idler * geom.theta_i.cos() - k * grating.slant.cos();
    let dk_y = b.signal * geom.theta_s.sin() + b.idler * geom.theta_i.sin() + k * grating.slant.sin();
    Mismatch { dk_x, dk_y, dk_eff: dk_x - dk_y * dk_y / (2.0 * b.pump) }
}

pub fn mismatch(
    process: &ProcessSpec,
    geom: &EmissionGeometry,
    pump_wl: f64,
    signal_wl: f64,
    indices: &ModeIndices,
) -> Result<Mismatch> {
    let b = Betas::new(indices, pump_wl, signal_wl)?;
    Ok(mismatch_betas(&process.grating, geom, &b))
}

/// Where the longitudinal phase of φ is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseReference {
    /// Crystal entrance: φ carries e^{iΔk L/2}.
    #[default]
    Entrance,
    /// Crystal centre: φ is real.
    Center,
}

/// φ for a given mismatch.
pub fn phi_of(m: &Mismatch, pump_waist: f64, length: f64, reference: PhaseReference) -> Complex64 {
    let u = 0.5 * m.dk_eff * length;
    let gauss = (-(m.dk_y * pump_waist).powi(2) / 4.0).exp();
    let amp = gauss * sinc(u);
    match reference {
        PhaseReference::Entrance => Complex64::from_polar(1.0, u) * amp,
        PhaseReference::Center => Complex64::new(amp, 0.0),
    }
}

/// |φ|², independent of the phase reference.
pub fn phi_norm_sqr(m: &Mismatch, pump_waist: f64, length: f64) -> f64 {
    let u = 0.5 * m.dk_eff * length;
    (-(m.dk_y * pump_waist).powi(2) / 2.0).exp() * sinc(u).powi(2)
}

/// Phase-matching function exp(−(Δk_y W_p)²/4)·sinc(ΔkL/2)·e^{iΔkL/2}.
pub fn phi(
    process: &ProcessSpec,
    geom: &EmissionGeometry,
    pump_wl: f64,
    signal_wl: f64,
    indices: &ModeIndices,
    pump_waist: f64,
    length: f64,
) -> Result<Complex64> {
    if !(pump_waist > 0.0 && length > 0.0) {
        return Err(Error::InvalidInput(format!("W_p and L must be positive, got {pump_waist}, {length}")));
    }
    let m = mismatch(process, geom, pump_wl, signal_wl, indices)?;
    Ok(phi_of(&m, pump_waist, length, PhaseReference::Entrance))
}
