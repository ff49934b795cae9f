//! Run configuration: one JSON document, with dot-path overrides.
//!
//! Angles are in degrees and wavelengths in nm at this boundary.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

use crate::design::{solve_dual_grating, DesignInput, DesignResult};
use crate::dispersion::MaterialModel;
use crate::error::{Error, Result};
use crate::medium::Waveguide;
use crate::phasematch::{GratingSpec, PhaseReference};
use crate::power::{NonlinearConfig, PowerOptions, PumpConfig};
use crate::state::{CollectionWindow, StateParams};

/// A configuration problem located at a JSON field path.
#[derive(Debug, thiserror::Error)]
#[error("config field '{path}': {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveguideConfig {
    pub depth_um: f64,
    pub delta_n: f64,
    pub n_cover: f64,
}

impl Default for WaveguideConfig {
    fn default() -> Self {
        WaveguideConfig { depth_um: 2.0, delta_n: 0.02, n_cover: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub wavelength_nm: f64,
    pub power_w: f64,
    pub waist_um: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection { wavelength_nm: 405.0, power_w: 1e-3, waist_um: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalSection {
    pub length_um: f64,
    pub d_eff_pm_per_v: f64,
}

impl Default for CrystalSection {
    fn default() -> Self {
        CrystalSection { length_um: 1e4, d_eff_pm_per_v: 3.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub signal_nm: f64,
    pub theta_s_deg: f64,
    pub theta_g1_deg: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection { signal_nm: 807.0, theta_s_deg: 2.5, theta_g1_deg: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GratingConfig {
    pub period_um: f64,
    pub slant_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    /// Defaults to the design angles when absent.
    pub theta_s_deg: Option<f64>,
    pub theta_i_deg: Option<f64>,
    pub half_width_deg: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection { theta_s_deg: None, theta_i_deg: None, half_width_deg: 0.034 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub points: usize,
    pub filter_nm: f64,
    /// Filter centre; defaults to the HV peak.
    pub filter_center_nm: Option<f64>,
    pub phase_reference: PhaseReference,
    pub quadrature_order: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            lo_nm: 803.0,
            hi_nm: 811.0,
            points: 400,
            filter_nm: 0.1,
            filter_center_nm: None,
            phase_reference: PhaseReference::Entrance,
            quadrature_order: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    pub wavelengths_nm: Vec<f64>,
}

impl Default for ModesSection {
    fn default() -> Self {
        ModesSection { wavelengths_nm: vec![405.0, 807.0, 813.02] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSection {
    pub pump_nm: Vec<f64>,
    pub theta_lo_deg: f64,
    pub theta_hi_deg: f64,
    pub theta_step_deg: f64,
    pub spectrum_half_span_nm: f64,
    pub points: usize,
    /// Offsets from the tuned angle at which E is also reported.
    pub e_curve_offsets_deg: Vec<f64>,
}

impl Default for TuneSection {
    fn default() -> Self {
        TuneSection {
            pump_nm: vec![405.0, 406.0],
            theta_lo_deg: 2.0,
            theta_hi_deg: 3.5,
            theta_step_deg: 0.01,
            spectrum_half_span_nm: 4.0,
            points: 400,
            e_curve_offsets_deg: vec![-0.1, -0.05, 0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSection {
    pub periods_um: [f64; 2],
    pub signal_nm: f64,
    pub theta_lo_deg: f64,
    pub theta_hi_deg: f64,
    pub points: usize,
}

impl Default for HyperSection {
    fn default() -> Self {
        HyperSection { periods_um: [9.0, 9.08], signal_nm: 807.0, theta_lo_deg: -0.6, theta_hi_deg: 0.6, points: 1201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSection {
    /// Solved from the collinear condition when absent.
    pub planar_period_um: Option<f64>,
    pub bulk_period_um: Option<f64>,
    pub signal_lo_nm: f64,
    pub signal_hi_nm: f64,
    pub points: usize,
    /// Signal wavelength of the angular comparison.
    pub signal_nm: f64,
    pub angle_lo_deg: f64,
    pub angle_hi_deg: f64,
    pub angle_points: usize,
    pub quadrature: PowerOptions,
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection {
            planar_period_um: None,
            bulk_period_um: None,
            signal_lo_nm: 803.0,
            signal_hi_nm: 811.0,
            points: 41,
            signal_nm: 807.0,
            angle_lo_deg: 0.0,
            angle_hi_deg: 1.0,
            angle_points: 101,
            quadrature: PowerOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Material JSON file; the bundled KTP set when absent.
    pub material: Option<PathBuf>,
    pub waveguide: WaveguideConfig,
    pub pump: PumpSection,
    pub crystal: CrystalSection,
    pub design: DesignSection,
    /// [grating 1 (HV), grating 2 (VH)]; solved from `design` when absent.
    pub gratings: Option<[GratingConfig; 2]>,
    pub window: WindowSection,
    pub spectrum: SpectrumSection,
    pub modes: ModesSection,
    pub tune: TuneSection,
    pub hyper: HyperSection,
    pub power: PowerSection,
}

/// Parses a JSON value strictly, reporting the offending field path.
pub fn from_value(value: Value) -> std::result::Result<RunConfig, SchemaError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| SchemaError::new(e.path().to_string(), e.inner().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file (or defaults) and applies `key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> std::result::Result<RunConfig, SchemaError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| SchemaError::new(".", format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| SchemaError::new(".", e.to_string()))?
        }
        None => Value::Object(Default::default()),
    };
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    from_value(value)
}

/// `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, item: &str) -> std::result::Result<(), SchemaError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| SchemaError::new(item, "override must look like key=value"))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(SchemaError::new(key, "empty path segment"));
    }
    let mut node = root;
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        if let Ok(index) = part.parse::<usize>() {
            let arr = node.as_array_mut().ok_or_else(|| SchemaError::new(key, format!("'{part}' indexes a non-array")))?;
            let slot = arr.get_mut(index).ok_or_else(|| SchemaError::new(key, format!("index {index} out of bounds")))?;
            if last {
                *slot = parsed;
                return Ok(());
            }
            node = slot;
        } else {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let obj = node.as_object_mut().ok_or_else(|| SchemaError::new(key, format!("'{part}' indexes a non-object")))?;
            if last {
                obj.insert(part.to_string(), parsed);
                return Ok(());
            }
            node = obj.entry(part.to_string()).or_insert(Value::Null);
        }
    }
    Ok(())
}

fn positive(path: &str, v: f64) -> std::result::Result<(), SchemaError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SchemaError::new(path, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), SchemaError> {
        positive("waveguide.depth_um", self.waveguide.depth_um)?;
        positive("waveguide.delta_n", self.waveguide.delta_n)?;
        if !(self.waveguide.n_cover >= 1.0) {
            return Err(SchemaError::new("waveguide.n_cover", "must be >= 1"));
        }
        positive("pump.wavelength_nm", self.pump.wavelength_nm)?;
        positive("pump.power_w", self.pump.power_w)?;
        positive("pump.waist_um", self.pump.waist_um)?;
        positive("crystal.length_um", self.crystal.length_um)?;
        positive("crystal.d_eff_pm_per_v", self.crystal.d_eff_pm_per_v)?;
        positive("design.signal_nm", self.design.signal_nm)?;
        if self.design.signal_nm <= self.pump.wavelength_nm {
            return Err(SchemaError::new("design.signal_nm", "must exceed pump.wavelength_nm"));
        }
        if let Some(g) = &self.gratings {
            for (k, gc) in g.iter().enumerate() {
                positive(&format!("gratings[{k}].period_um"), gc.period_um)?;
            }
        }
        positive("window.half_width_deg", self.window.half_width_deg)?;
        if !(self.spectrum.hi_nm > self.spectrum.lo_nm) {
            return Err(SchemaError::new("spectrum.hi_nm", "must exceed spectrum.lo_nm"));
        }
        if self.spectrum.points < 3 {
            return Err(SchemaError::new("spectrum.points", "must be >= 3"));
        }
        positive("spectrum.filter_nm", self.spectrum.filter_nm)?;
        if self.spectrum.quadrature_order == 0 {
            return Err(SchemaError::new("spectrum.quadrature_order", "must be >= 1"));
        }
        for (k, &l) in self.modes.wavelengths_nm.iter().enumerate() {
            positive(&format!("modes.wavelengths_nm[{k}]"), l)?;
        }
        positive("tune.theta_step_deg", self.tune.theta_step_deg)?;
        if !(self.tune.theta_hi_deg > self.tune.theta_lo_deg) {
            return Err(SchemaError::new("tune.theta_hi_deg", "must exceed tune.theta_lo_deg"));
        }
        if self.tune.points < 3 {
            return Err(SchemaError::new("tune.points", "must be >= 3"));
        }
        for (k, &p) in self.hyper.periods_um.iter().enumerate() {
            positive(&format!("hyper.periods_um[{k}]"), p)?;
        }
        if self.hyper.points < 3 || !(self.hyper.theta_hi_deg > self.hyper.theta_lo_deg) {
            return Err(SchemaError::new("hyper", "need points >= 3 and theta_hi_deg > theta_lo_deg"));
        }
        if self.power.points < 3 || self.power.angle_points < 3 {
            return Err(SchemaError::new("power.points", "sweeps need >= 3 points"));
        }
        if self.power.quadrature.gauss_order == 0 || self.power.quadrature.azimuth_order == 0 || self.power.quadrature.nodes_per_lobe == 0 {
            return Err(SchemaError::new("power.quadrature", "orders must be >= 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn material_model(&self) -> Result<MaterialModel> {
        match &self.material {
            Some(p) => MaterialModel::from_file(p),
            None => Ok(MaterialModel::ktp()),
        }
    }

    pub fn waveguide(&self) -> Result<Waveguide> {
        Ok(Waveguide::new(self.material_model()?, self.waveguide.depth_um, self.waveguide.delta_n, self.waveguide.n_cover))
    }

    pub fn pump_wl(&self) -> f64 {
        self.pump.wavelength_nm * 1e-3
    }

    pub fn design_input(&self) -> DesignInput {
        DesignInput {
            pump_wl: self.pump_wl(),
            signal_wl: self.design.signal_nm * 1e-3,
            theta_s: self.design.theta_s_deg.to_radians(),
            theta_g1: self.design.theta_g1_deg.to_radians(),
        }
    }

    pub fn solve_design(&self, wg: &Waveguide) -> Result<DesignResult> {
        solve_dual_grating(&self.design_input(), wg)
    }

    /// Gratings from the config, or from the design solver.
    pub fn gratings(&self, design: &DesignResult) -> [GratingSpec; 2] {
        match &self.gratings {
            Some(g) => [
                GratingSpec { period: g[0].period_um, slant: g[0].slant_deg.to_radians() },
                GratingSpec { period: g[1].period_um, slant: g[1].slant_deg.to_radians() },
            ],
            None => [design.grating1, design.grating2],
        }
    }

    pub fn window(&self, design: &DesignResult) -> Result<CollectionWindow> {
        CollectionWindow::new(
            self.window.theta_s_deg.map_or(design.theta_s, f64::to_radians),
            self.window.theta_i_deg.map_or(design.theta_i, f64::to_radians),
            self.window.half_width_deg.to_radians(),
        )
    }

    pub fn state_params(&self) -> StateParams {
        StateParams {
            pump_waist: self.pump.waist_um,
            length: self.crystal.length_um,
            reference: self.spectrum.phase_reference,
            order: self.spectrum.quadrature_order,
        }
    }

    pub fn pump_config(&self) -> PumpConfig {
        PumpConfig { wavelength: self.pump_wl(), power: self.pump.power_w, waist: self.pump.waist_um }
    }

    pub fn nonlinear(&self) -> NonlinearConfig {
        NonlinearConfig { d_eff: self.crystal.d_eff_pm_per_v, length: self.crystal.length_um }
    }
}

impl From<SchemaError> for Error {
    fn from(e: SchemaError) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
