//! Signal power spectral and angular densities for the planar waveguide
//! and for bulk crystal, and their peak ratios.
//!
//! Planar:
//! ```text
//! dP/dλ = 2(2π)^{3/2} ħc d² P_p L² W_p I_z² / (ε₀ n_p n_s n_i λ_s⁴ λ_i)
//!         × ∬ dk_sy dk_iy exp(−Δk_y² W_p²/2) sinc²(Δk L/2)
//! ```
//! Bulk:
//! ```text
//! dP/dλ = 2ħc d² P_p L² W_p² / (ε₀ n_p n_s n_i λ_s⁴ λ_i)
//!         × ∫d⁴k exp(−(ΔK_y² + ΔK_z²) W_p²/2) sinc²(ΔK_x L/2)
//! ```
//! Bulk mismatch uses plane waves in the substrate with the pump and the
//! grating along x. All transverse integrals are truncated where the
//! Gaussian drops below 1e-8 of its peak.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dispersion::{MaterialModel, Polarization};
use crate::error::{Error, Result};
use crate::medium::{Medium, Waveguide};
use crate::phasematch::{beta, idler_wavelength, sinc, ProcessId};
use crate::quadrature::{adaptive, pairwise_sum, AdaptiveOptions, GaussLegendre};
use crate::roots::golden_max;
use crate::slabmode::overlap_integral;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const C: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Gaussian cut: exp(−u²W²/2) = 1e-8 at |u| = GAUSS_CUT / W.
fn gauss_cut() -> f64 {
    (2.0 * 1e8f64.ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// µm.
    pub wavelength: f64,
    /// W.
    pub power: f64,
    /// µm.
    pub waist: f64,
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wavelength > 0.0 && self.power > 0.0 && self.waist > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("pump wavelength, power and waist must be positive: {self:?}")))
        }
    }
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig { wavelength: 0.405, power: 1e-3, waist: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConfig {
    /// pm/V.
    pub d_eff: f64,
    /// µm.
    pub length: f64,
}

impl NonlinearConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_eff > 0.0 && self.length > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("d_eff and L must be positive: {self:?}")))
        }
    }
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        NonlinearConfig { d_eff: 3.6, length: 1e4 }
    }
}

/// Resolution of the transverse-wavevector quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerOptions {
    /// Gauss–Legendre order per Gaussian (pump-mismatch) axis.
    pub gauss_order: usize,
    /// Gauss–Legendre order around the phase-matching ring (bulk).
    pub azimuth_order: usize,
    /// Nodes per sinc² oscillation in the radial variable (bulk).
    pub nodes_per_lobe: usize,
    /// The sinc² argument ΔkL/2 at which the ring integration stops.
    pub sinc_cut: f64,
    /// Relative tolerance of the adaptive planar integrals.
    pub rel_tol: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { gauss_order: 16, azimuth_order: 12, nodes_per_lobe: 8, sinc_cut: 400.0, rel_tol: 1e-9 }
    }
}

/// A pair source: planar waveguide or bulk crystal with an untilted grating.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Planar { waveguide: Waveguide, process: ProcessId, period: f64 },
    Bulk { material: MaterialModel, process: ProcessId, period: f64 },
}

impl Source {
    fn period(&self) -> f64 {
        match self {
            Source::Planar { period, .. } | Source::Bulk { period, .. } => *period,
        }
    }
}

/// Wavevectors (µm⁻¹) and the SI prefactor in W/m per µm⁻ⁿ of integral.
struct Setup {
    kp: f64,
    ks: f64,
    ki: f64,
    kg: f64,
    /// Converts the transverse integral (in µm⁻²) to W per nm.
    prefactor: f64,
}

fn sinc2(u: f64) -> f64 {
    let s = sinc(u);
    s * s
}

fn setup(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64) -> Result<Setup> {
    pump.validate()?;
    nl.validate()?;
    if !(source.period() > 0.0) {
        return Err(Error::InvalidInput(format!("grating period must be positive, got {}", source.period())));
    }
    let lp = pump.wavelength;
    let li = idler_wavelength(lp, signal_wl)?;
    let d = nl.d_eff * 1e-12;
    let len = nl.length * 1e-6;
    let w = pump.waist * 1e-6;
    let (ls_m, li_m) = (signal_wl * 1e-6, li * 1e-6);
    let (np, ns, ni, extra) = match source {
        Source::Planar { waveguide, process, .. } => {
            let p = waveguide.fundamental(Polarization::H, lp)?;
            let s = waveguide.fundamental(process.signal(), signal_wl)?;
            let i = waveguide.fundamental(process.idler(), li)?;
            // µm^(-1/2) → m^(-1/2)
            let iz = overlap_integral(&p, &s, &i)? * 1e3;
            (p.n_eff, s.n_eff, i.n_eff, 2.0 * (2.0 * PI).powf(1.5) * w * iz * iz)
        }
        Source::Bulk { material, process, .. } => {
            let m = Medium::Bulk(material.clone());
            (
                m.index(Polarization::H, lp)?,
                m.index(process.signal(), signal_wl)?,
                m.index(process.idler(), li)?,
                2.0 * w * w,
            )
        }
    };
    let dims = match source {
        Source::Planar { .. } => 2,
        Source::Bulk { .. } => 4,
    };
    // µm⁻ⁿ → m⁻ⁿ for the integral, W/m → W/nm for the density.
    let scale = 1e6f64.powi(dims) * 1e-9;
    let prefactor = extra * HBAR * C * d * d * pump.power * len * len / (EPS0 * np * ns * ni * ls_m.powi(4) * li_m) * scale;
    Ok(Setup {
        kp: beta(np, lp)?,
        ks: beta(ns, signal_wl)?,
        ki: beta(ni, li)?,
        kg: 2.0 * PI / source.period(),
        prefactor,
    })
}

/// Ring geometry shared by the planar and bulk integrands: the mismatch is
/// ≈ Δ_c + ρ²/(2μ) about the transverse centre u k_s/(k_s + k_i).
fn ring_half_width_sq(s: &Setup, delta_c: f64, length: f64, cut: f64) -> f64 {
    let mu = s.ks * s.ki / (s.ks + s.ki);
    let reach = 2.0 * cut / length;
    2.0 * mu * (reach - delta_c).max(reach)
}

/// Planar signal power spectral density dP_s/dλ_s in W/nm.
pub fn planar_power_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, opts: &PowerOptions) -> Result<f64> {
    if !matches!(source, Source::Planar { .. }) {
        return Err(Error::InvalidInput("planar density needs a planar source".into()));
    }
    let s = setup(source, pump, nl, signal_wl)?;
    let (w, len) = (pump.waist, nl.length);
    let u_max = gauss_cut() / w;
    let rule = GaussLegendre::new(opts.gauss_order);
    let inner = |u: f64| -> f64 {
        let vc = u * s.ks / (s.ks + s.ki);
        let dk_at = |v: f64| {
            let a = s.ks * s.ks - v * v;
            let b = s.ki * s.ki - (u - v) * (u - v);
            if a <= 0.0 || b <= 0.0 {
                return f64::INFINITY;
            }
            s.kp - a.sqrt() - b.sqrt() - s.kg - u * u / (2.0 * s.kp)
        };
        let h = ring_half_width_sq(&s, dk_at(vc), len, opts.sinc_cut).sqrt().min(0.5 * s.ks.min(s.ki));
        let aopts = AdaptiveOptions { abs_tol: 0.0, rel_tol: opts.rel_tol, initial_panels: 64, max_intervals: 20000 };
        adaptive(|v| sinc2(0.5 * dk_at(v) * len), vc - h, vc + h, aopts).value
    };
    let total = pairwise_sum(rule.mapped(-u_max, u_max).map(|(u, wu)| wu * (-(u * w).powi(2) / 2.0).exp() * inner(u)));
    Ok(s.prefactor * total)
}

/// Bulk signal power spectral density dP_s/dλ_s in W/nm.
pub fn bulk_power_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, opts: &PowerOptions) -> Result<f64> {
    if !matches!(source, Source::Bulk { .. }) {
        return Err(Error::InvalidInput("bulk density needs a bulk source".into()));
    }
    let s = setup(source, pump, nl, signal_wl)?;
    Ok(s.prefactor * bulk_integral(&s, pump.waist, nl.length, opts))
}

/// I_B over (u_y, u_z) = k_s⊥ + k_i⊥ and the signal offset from the ring
/// centre in polar form with s = ρ²: ∫ρ dρ dα = ½∫ds dα.
fn bulk_integral(s: &Setup, w: f64, len: f64, opts: &PowerOptions) -> f64 {
    let u_max = gauss_cut() / w;
    let gauss = GaussLegendre::new(opts.gauss_order);
    let azim = GaussLegendre::new(opts.azimuth_order);
    let radial = GaussLegendre::new(opts.nodes_per_lobe);
    let uy: Vec<(f64, f64)> = gauss.mapped(-u_max, u_max).collect();
    let rows: Vec<f64> = uy
        .par_iter()
        .map(|&(u_y, w_y)| {
            let mut row = Vec::with_capacity(uy.len());
            for &(u_z, w_z) in &uy {
                let g = (-(u_y * u_y + u_z * u_z) * w * w / 2.0).exp();
                row.push(w_y * w_z * g * bulk_ring(s, [u_y, u_z], len, opts, &azim, &radial));
            }
            pairwise_sum(row)
        })
        .collect();
    pairwise_sum(rows)
}

fn bulk_mismatch(s: &Setup, u: [f64; 2], ks_perp: [f64; 2]) -> f64 {
    let a = s.ks * s.ks - ks_perp[0] * ks_perp[0] - ks_perp[1] * ks_perp[1];
    let (dy, dz) = (u[0] - ks_perp[0], u[1] - ks_perp[1]);
    let b = s.ki * s.ki - dy * dy - dz * dz;
    if a <= 0.0 || b <= 0.0 {
        return f64::INFINITY;
    }
    s.kp - a.sqrt() - b.sqrt() - s.kg
}

fn bulk_ring(s: &Setup, u: [f64; 2], len: f64, opts: &PowerOptions, azim: &GaussLegendre, radial: &GaussLegendre) -> f64 {
    let f = s.ks / (s.ks + s.ki);
    let c = [u[0] * f, u[1] * f];
    let s_max = ring_half_width_sq(s, bulk_mismatch(s, u, c), len, opts.sinc_cut).min(0.25 * s.ks.min(s.ki).powi(2));
    // ΔK L/2 grows by π every 4πμ/L in s: one sinc² lobe per panel.
    let mu = s.ks * s.ki / (s.ks + s.ki);
    let lobe = 4.0 * PI * mu / len;
    let panels = ((s_max / lobe).ceil() as usize).max(4);
    let h = s_max / panels as f64;
    let mut total = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = h * p as f64;
        let mut panel = 0.0;
        for (sv, ws) in radial.mapped(lo, lo + h) {
            let rho = sv.sqrt();
            let mut ring = 0.0;
            for (a, wa) in azim.mapped(0.0, 2.0 * PI) {
                let k = [c[0] + rho * a.cos(), c[1] + rho * a.sin()];
                ring += wa * sinc2(0.5 * bulk_mismatch(s, u, k) * len);
            }
            panel += ws * ring;
        }
        total.push(panel);
    }
    0.5 * pairwise_sum(total)
}

/// Spectral density of either kind of source.
pub fn power_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, opts: &PowerOptions) -> Result<f64> {
    match source {
        Source::Planar { .. } => planar_power_density(source, pump, nl, signal_wl, opts),
        Source::Bulk { .. } => bulk_power_density(source, pump, nl, signal_wl, opts),
    }
}

/// Planar d²P/(dλ_s dθ_s) in W/(nm·rad) for in-plane signal angle θ_s.
pub fn planar_angular_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, theta_s: f64, opts: &PowerOptions) -> Result<f64> {
    if !matches!(source, Source::Planar { .. }) {
        return Err(Error::InvalidInput("planar density needs a planar source".into()));
    }
    let s = setup(source, pump, nl, signal_wl)?;
    let (w, len) = (pump.waist, nl.length);
    let ksy = s.ks * theta_s.sin();
    let u_max = gauss_cut() / w;
    let integrand = |u: f64| {
        let kiy = u - ksy;
        let b = s.ki * s.ki - kiy * kiy;
        let a = s.ks * s.ks - ksy * ksy;
        if a <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        let dk = s.kp - a.sqrt() - b.sqrt() - s.kg - u * u / (2.0 * s.kp);
        (-(u * w).powi(2) / 2.0).exp() * sinc2(0.5 * dk * len)
    };
    let aopts = AdaptiveOptions { abs_tol: 0.0, rel_tol: opts.rel_tol, initial_panels: 32, max_intervals: 20000 };
    let total = adaptive(integrand, -u_max, u_max, aopts).value;
    Ok(s.prefactor * total * s.ks * theta_s.cos())
}

/// Bulk d³P/(dλ_s dθ dϕ) in W/(nm·rad²) at polar angle θ from x in the
/// ϕ = 0 (x–y) plane.
pub fn bulk_angular_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, theta: f64, opts: &PowerOptions) -> Result<f64> {
    if !matches!(source, Source::Bulk { .. }) {
        return Err(Error::InvalidInput("bulk density needs a bulk source".into()));
    }
    let s = setup(source, pump, nl, signal_wl)?;
    let (w, len) = (pump.waist, nl.length);
    let ks_perp = [s.ks * theta.sin(), 0.0];
    let u_max = gauss_cut() / w;
    let rule = GaussLegendre::new(opts.gauss_order);
    let panels = 4;
    let h = 2.0 * u_max / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels).flat_map(|p| {
        let lo = -u_max + h * p as f64;
        rule.mapped(lo, lo + h).collect::<Vec<_>>()
    }).collect();
    let mut rows = Vec::with_capacity(nodes.len());
    for &(uy, wy) in &nodes {
        let mut row = Vec::with_capacity(nodes.len());
        for &(uz, wz) in &nodes {
            let g = (-(uy * uy + uz * uz) * w * w / 2.0).exp();
            row.push(wy * wz * g * sinc2(0.5 * bulk_mismatch(&s, [uy, uz], ks_perp) * len));
        }
        rows.push(pairwise_sum(row));
    }
    let jac = s.ks * s.ks * theta.sin() * theta.cos();
    Ok(s.prefactor * pairwise_sum(rows) * jac)
}

pub fn angular_density(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, theta: f64, opts: &PowerOptions) -> Result<f64> {
    match source {
        Source::Planar { .. } => planar_angular_density(source, pump, nl, signal_wl, theta, opts),
        Source::Bulk { .. } => bulk_angular_density(source, pump, nl, signal_wl, theta, opts),
    }
}

/// Location and value of a sampled-then-refined maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub x: f64,
    pub value: f64,
}

fn refine_peak<F: Fn(f64) -> Result<f64> + Sync>(f: F, grid: &[f64]) -> Result<(Peak, Vec<f64>)> {
    let values: Result<Vec<f64>> = grid.par_iter().map(|&x| f(x)).collect();
    let values = values?;
    let k = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidInput("empty sweep".into()))?;
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let (x, v) = golden_max(|x| f(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-6 * (hi - lo).abs().max(1e-12));
    let peak = if v >= values[k] { Peak { x, value: v } } else { Peak { x: grid[k], value: values[k] } };
    Ok((peak, values))
}

/// Spectral density sweep over a signal grid plus its refined peak.
pub fn spectral_sweep(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, grid: &[f64], opts: &PowerOptions) -> Result<(Peak, Vec<f64>)> {
    refine_peak(|l| power_density(source, pump, nl, l, opts), grid)
}

pub fn angular_sweep(source: &Source, pump: &PumpConfig, nl: &NonlinearConfig, signal_wl: f64, grid: &[f64], opts: &PowerOptions) -> Result<(Peak, Vec<f64>)> {
    refine_peak(|t| angular_density(source, pump, nl, signal_wl, t, opts), grid)
}

fn ratio(num: Peak, den: Peak) -> Result<f64> {
    if !(den.value > 0.0) {
        return Err(Error::Degenerate("denominator peak density is zero".into()));
    }
    Ok(num.value / den.value)
}

/// Peak spectral density of `num` over that of `den`, both searched on `grid`.
pub fn enhancement_spectral(pump: &PumpConfig, nl: &NonlinearConfig, num: &Source, den: &Source, grid: &[f64], opts: &PowerOptions) -> Result<f64> {
    ratio(spectral_sweep(num, pump, nl, grid, opts)?.0, spectral_sweep(den, pump, nl, grid, opts)?.0)
}

/// Peak angular density ratio at a fixed signal wavelength.
pub fn enhancement_angular(pump: &PumpConfig, nl: &NonlinearConfig, num: &Source, den: &Source, signal_wl: f64, grid: &[f64], opts: &PowerOptions) -> Result<f64> {
    ratio(angular_sweep(num, pump, nl, signal_wl, grid, opts)?.0, angular_sweep(den, pump, nl, signal_wl, grid, opts)?.0)
}

/// Least-squares slope of ln y against ln x.
pub fn log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || y.iter().any(|v| !(*v > 0.0)) || x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("log fit needs >= 2 positive pairs".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(period: f64) -> Source {
        Source::Planar { waveguide: Waveguide::ktp_default(), process: ProcessId::HV, period }
    }

    #[test]
    fn far_from_matching_is_negligible() {
        let p = planar_power_density(&planar(30.0), &PumpConfig::default(), &NonlinearConfig::default(), 0.807, &PowerOptions::default()).unwrap();
        let q = planar_power_density(&planar(9.0005), &PumpConfig::default(), &NonlinearConfig::default(), 0.807, &PowerOptions::default()).unwrap();
        assert!(p >= 0.0 && p < 1e-5 * q, "{p} vs {q}");
    }

    #[test]
    fn wrong_source_kind_rejected() {
        let src = planar(9.0);
        assert!(bulk_power_density(&src, &PumpConfig::default(), &NonlinearConfig::default(), 0.807, &PowerOptions::default()).is_err());
    }

    #[test]
    fn log_slope_recovers_power_law() {
        let x = [50.0, 100.0, 200.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((log_slope(&x, &y).unwrap() - 1.7).abs() < 1e-12);
    }
}
