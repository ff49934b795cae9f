//! Refractive indices of anisotropic crystals from Sellmeier coefficient sets.
//!
//! A material file declares one functional form and one coefficient list
//! per crystal axis (wavelengths in µm):
//!
//! | form           | n²(λ)                                  | coefficients     |
//! |----------------|----------------------------------------|------------------|
//! | `two_pole`     | A + B/(λ²−C) + D/(λ²−E)                | A, B, C, D, E    |
//! | `pole_ir`      | A + B/(λ²−C) − Dλ²                     | A, B, C, D       |
//! | `sellmeier_ir` | A + Bλ²/(λ²−C) − Dλ²                   | A, B, C, D       |
//! | `constant`     | A                                      | A                |

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

const KTP_JSON: &str = include_str!("../data/ktp_kato2002.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrystalAxis {
    X,
    Y,
    Z,
}

/// Polarization of a guided photon in the z-cut, x-propagating geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// In the waveguide plane (crystal y).
    H,
    /// Along the optic axis (crystal z).
    V,
}

impl Polarization {
    pub fn axis(self) -> CrystalAxis {
        match self {
            Polarization::H => CrystalAxis::Y,
            Polarization::V => CrystalAxis::Z,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SellmeierForm {
    TwoPole,
    PoleIr,
    SellmeierIr,
    Constant,
}

impl SellmeierForm {
    pub fn coefficient_count(self) -> usize {
        match self {
            SellmeierForm::TwoPole => 5,
            SellmeierForm::PoleIr | SellmeierForm::SellmeierIr => 4,
            SellmeierForm::Constant => 1,
        }
    }

    fn n_squared(self, c: &[f64], lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        match self {
            SellmeierForm::TwoPole => c[0] + c[1] / (l2 - c[2]) + c[3] / (l2 - c[4]),
            SellmeierForm::PoleIr => c[0] + c[1] / (l2 - c[2]) - c[3] * l2,
            SellmeierForm::SellmeierIr => c[0] + c[1] * l2 / (l2 - c[2]) - c[3] * l2,
            SellmeierForm::Constant => c[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCoefficients {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// A crystal's dispersion: one coefficient set per principal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub form: SellmeierForm,
    pub axes: AxisCoefficients,
    pub valid_range: [f64; 2],
}

impl MaterialModel {
    /// The bundled KTP coefficient set.
    pub fn ktp() -> Self {
        Self::from_json(KTP_JSON).expect("bundled KTP data is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: MaterialModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Axis-independent material, mostly useful for tests.
    pub fn constant(name: &str, index: f64, valid_range: [f64; 2]) -> Result<Self> {
        let c = vec![index * index];
        let model = MaterialModel {
            name: name.to_string(),
            version: None,
            source: None,
            form: SellmeierForm::Constant,
            axes: AxisCoefficients { x: c.clone(), y: c.clone(), z: c },
            valid_range,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::Material(format!("valid_range [{lo}, {hi}] must satisfy 0 < min < max")));
        }
        let want = self.form.coefficient_count();
        for (axis, c) in [("x", &self.axes.x), ("y", &self.axes.y), ("z", &self.axes.z)] {
            if c.len() != want {
                return Err(Error::Material(format!(
                    "axes.{axis}: form {:?} needs {want} coefficients, found {}",
                    self.form,
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Material(format!("axes.{axis}: non-finite coefficient")));
            }
        }
        // Every axis must give a real index > 1 across the declared range.
        let samples = 512;
        for axis in [CrystalAxis::X, CrystalAxis::Y, CrystalAxis::Z] {
            for k in 0..=samples {
                let lambda = lo + (hi - lo) * k as f64 / samples as f64;
                let n2 = self.form.n_squared(self.coefficients(axis), lambda);
                if !(n2.is_finite() && n2 > 1.0) {
                    return Err(Error::Material(format!(
                        "axis {axis:?} gives n² = {n2} at {lambda} µm inside valid_range"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn coefficients(&self, axis: CrystalAxis) -> &[f64] {
        match axis {
            CrystalAxis::X => &self.axes.x,
            CrystalAxis::Y => &self.axes.y,
            CrystalAxis::Z => &self.axes.z,
        }
    }

    pub fn index(&self, axis: CrystalAxis, wavelength: f64) -> Result<f64> {
        let [lo, hi] = self.valid_range;
        if !(wavelength >= lo && wavelength <= hi) {
            return Err(Error::WavelengthOutOfRange {
                material: self.name.clone(),
                wavelength,
                min: lo,
                max: hi,
            });
        }
        Ok(self.form.n_squared(self.coefficients(axis), wavelength).sqrt())
    }

    /// Substrate index seen by a photon of the given polarization.
    pub fn substrate_index(&self, pol: Polarization, wavelength: f64) -> Result<f64> {
        self.index(pol.axis(), wavelength)
    }
}
