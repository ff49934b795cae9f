//! Guided modes of the asymmetric step-index slab.
//!
//! The film occupies 0 ≤ z ≤ d, the cover z < 0 and the substrate z > d.
//! Guided modes satisfy the phase condition
//!
//! ```text
//! κ d − atan(p_s γ_s / κ) − atan(p_c γ_c / κ) = m π
//! ```
//!
//! with κ = k₀√(n_f² − n²), γ = k₀√(n² − n_{s,c}²), and p = 1 for TE or
//! (n_f/n_{s,c})² for TM. The field is cos(κz − φ_c) in the film and decays
//! exponentially on either side.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::simpson_uniform;

/// Gap kept between a scanned effective index and the bounding indices.
const EDGE: f64 = 1e-9;
const SCAN_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolClass {
    TE,
    TM,
}

impl fmt::Display for PolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolClass::TE => "TE",
            PolClass::TM => "TM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabGeometry {
    /// Film depth, µm.
    pub depth: f64,
    pub n_film: f64,
    pub n_substrate: f64,
    pub n_cover: f64,
}

impl SlabGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = self.depth > 0.0
            && self.depth.is_finite()
            && self.n_film > self.n_substrate
            && self.n_substrate >= self.n_cover
            && self.n_cover >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "need depth > 0 and n_film > n_substrate >= n_cover >= 1, got {self:?}"
            )))
        }
    }

    /// Cladding weights (p_s, p_c) for the polarization class.
    fn weights(&self, pol: PolClass) -> (f64, f64) {
        match pol {
            PolClass::TE => (1.0, 1.0),
            PolClass::TM => {
                let f2 = self.n_film * self.n_film;
                (f2 / (self.n_substrate * self.n_substrate), f2 / (self.n_cover * self.n_cover))
            }
        }
    }

    fn wavenumbers(&self, wavelength: f64, n_eff: f64) -> (f64, f64, f64) {
        let k0 = 2.0 * PI / wavelength;
        let n2 = n_eff * n_eff;
        let kappa = k0 * (self.n_film * self.n_film - n2).max(0.0).sqrt();
        let gamma_s = k0 * (n2 - self.n_substrate * self.n_substrate).max(0.0).sqrt();
        let gamma_c = k0 * (n2 - self.n_cover * self.n_cover).max(0.0).sqrt();
        (kappa, gamma_s, gamma_c)
    }

    /// Transverse phase κd − φ_s − φ_c; strictly decreasing in `n_eff`.
    pub fn dispersion_phase(&self, wavelength: f64, pol: PolClass, n_eff: f64) -> f64 {
        let (p_s, p_c) = self.weights(pol);
        let (kappa, gs, gc) = self.wavenumbers(wavelength, n_eff);
        kappa * self.depth - (p_s * gs).atan2(kappa) - (p_c * gc).atan2(kappa)
    }

    /// Residual of the order-`order` dispersion equation.
    pub fn dispersion_residual(&self, wavelength: f64, pol: PolClass, order: usize, n_eff: f64) -> f64 {
        self.dispersion_phase(wavelength, pol, n_eff) - order as f64 * PI
    }
}

/// Uniform sampling of the confinement axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
}

impl ZGrid {
    /// [−3d, 4d] with 4001 samples.
    pub fn for_depth(depth: f64) -> Self {
        ZGrid { z_min: -3.0 * depth, z_max: 4.0 * depth, n: 4001 }
    }

    pub fn refined(&self) -> Self {
        ZGrid { n: 2 * (self.n - 1) + 1, ..*self }
    }

    pub fn step(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n - 1) as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z_min + self.step() * k as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.z(k))
    }

    pub fn integrate(&self, samples: &[f64]) -> f64 {
        simpson_uniform(samples, self.step())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabMode {
    pub order: usize,
    pub pol_class: PolClass,
    pub n_eff: f64,
    pub wavelength: f64,
    pub grid: ZGrid,
    /// ψ(z) normalized so that ∫ψ² dz = 1 on `grid`.
    pub profile: Vec<f64>,
}

impl SlabMode {
    /// Propagation constant 2π n_eff / λ, µm⁻¹.
    pub fn beta(&self) -> f64 {
        2.0 * PI * self.n_eff / self.wavelength
    }

    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.profile.iter().map(|p| p * p).collect();
        self.grid.integrate(&sq)
    }
}

/// Effective indices of all guided modes, ordered by decreasing n_eff.
pub fn effective_indices(geom: &SlabGeometry, wavelength: f64, pol: PolClass) -> Result<Vec<f64>> {
    geom.validate()?;
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::InvalidInput(format!("wavelength must be positive, got {wavelength}")));
    }
    let lo = geom.n_substrate + EDGE;
    let hi = geom.n_film - EDGE;
    if lo >= hi {
        return Ok(Vec::new());
    }
    let phase = |n: f64| geom.dispersion_phase(wavelength, pol, n);
    // Scan sin(phase): it changes sign exactly where the phase crosses mπ.
    let brackets = crate::roots::scan_brackets(|n| phase(n).sin(), lo, hi, SCAN_POINTS);
    let mut out = Vec::with_capacity(brackets.len());
    for (a, b) in brackets {
        let order = (phase(a).max(phase(b)) / PI).floor().max(0.0) as usize;
        let residual = |n: f64| geom.dispersion_residual(wavelength, pol, order, n);
        if residual(a).signum() == residual(b).signum() {
            continue;
        }
        let coarse = crate::roots::bisect(residual, a, b, (b - a) * 1e-3, 64)?;
        let width = (b - a).max(1e-12);
        let (ra, rb) = ((coarse - width).max(a), (coarse + width).min(b));
        let (ra, rb) = if residual(ra).signum() != residual(rb).signum() { (ra, rb) } else { (a, b) };
        let root = crate::roots::brent(residual, ra, rb, 1e-16, 1e-13, 200)?;
        out.push(root);
    }
    out.sort_by(|x, y| y.total_cmp(x));
    Ok(out)
}

/// All guided modes with profiles on the default grid.
pub fn solve_modes(geom: &SlabGeometry, wavelength: f64, pol: PolClass) -> Result<Vec<SlabMode>> {
    solve_modes_on(geom, wavelength, pol, ZGrid::for_depth(geom.depth))
}

pub fn solve_modes_on(geom: &SlabGeometry, wavelength: f64, pol: PolClass, grid: ZGrid) -> Result<Vec<SlabMode>> {
    let indices = effective_indices(geom, wavelength, pol)?;
    Ok(indices
        .into_iter()
        .enumerate()
        .map(|(order, n_eff)| build_mode(geom, wavelength, pol, order, n_eff, grid))
        .collect())
}

pub fn mode_count(geom: &SlabGeometry, wavelength: f64, pol: PolClass) -> Result<usize> {
    Ok(effective_indices(geom, wavelength, pol)?.len())
}

/// Fundamental mode on `grid`, or `NoGuidedMode` below cutoff.
pub fn fundamental_mode(geom: &SlabGeometry, wavelength: f64, pol: PolClass, grid: ZGrid) -> Result<SlabMode> {
    let n_eff = effective_indices(geom, wavelength, pol)?
        .first()
        .copied()
        .ok_or(Error::NoGuidedMode { pol: pol.to_string(), wavelength })?;
    Ok(build_mode(geom, wavelength, pol, 0, n_eff, grid))
}

/// Unnormalized analytic field at depth `z`.
fn raw_field(geom: &SlabGeometry, wavelength: f64, pol: PolClass, n_eff: f64, z: f64) -> f64 {
    let (_, p_c) = geom.weights(pol);
    let (kappa, gs, gc) = geom.wavenumbers(wavelength, n_eff);
    let phi_c = (p_c * gc).atan2(kappa);
    if z < 0.0 {
        phi_c.cos() * (gc * z).exp()
    } else if z <= geom.depth {
        (kappa * z - phi_c).cos()
    } else {
        (kappa * geom.depth - phi_c).cos() * (-gs * (z - geom.depth)).exp()
    }
}

fn build_mode(geom: &SlabGeometry, wavelength: f64, pol: PolClass, order: usize, n_eff: f64, grid: ZGrid) -> SlabMode {
    let mut profile: Vec<f64> = grid.points().map(|z| raw_field(geom, wavelength, pol, n_eff, z)).collect();
    let sq: Vec<f64> = profile.iter().map(|p| p * p).collect();
    let scale = grid.integrate(&sq).sqrt();
    for p in &mut profile {
        *p /= scale;
    }
    SlabMode { order, pol_class: pol, n_eff, wavelength, grid, profile }
}

/// Closed-form ∫ψ² dz over the whole axis for the unnormalized field.
pub fn analytic_power(geom: &SlabGeometry, wavelength: f64, pol: PolClass, n_eff: f64) -> f64 {
    let (_, p_c) = geom.weights(pol);
    let (kappa, gs, gc) = geom.wavenumbers(wavelength, n_eff);
    let phi_c = (p_c * gc).atan2(kappa);
    let d = geom.depth;
    let cover = phi_c.cos().powi(2) / (2.0 * gc);
    let film = 0.5 * d + ((2.0 * (kappa * d - phi_c)).sin() + (2.0 * phi_c).sin()) / (4.0 * kappa);
    let substrate = (kappa * d - phi_c).cos().powi(2) / (2.0 * gs);
    cover + film + substrate
}

/// Triple overlap ∫ψ_p ψ_s ψ_i dz (real profiles), µm^(−1/2).
pub fn overlap_integral(pump: &SlabMode, signal: &SlabMode, idler: &SlabMode) -> Result<f64> {
    if pump.grid != signal.grid || pump.grid != idler.grid {
        return Err(Error::Dimension(format!(
            "profiles sampled on different grids: {:?}, {:?}, {:?}",
            pump.grid, signal.grid, idler.grid
        )));
    }
    if pump.profile.len() != pump.grid.n || signal.profile.len() != pump.grid.n || idler.profile.len() != pump.grid.n {
        return Err(Error::Dimension("profile length does not match grid".into()));
    }
    let product: Vec<f64> = pump
        .profile
        .iter()
        .zip(&signal.profile)
        .zip(&idler.profile)
        .map(|((p, s), i)| p * s * i)
        .collect();
    Ok(pump.grid.integrate(&product))
}
