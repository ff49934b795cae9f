//! Two-photon state coefficients, spectra, concurrence and angular
//! emission profiles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::medium::{Medium, Waveguide};
use crate::phasematch::{
    idler_wavelength, mismatch_betas, phi_norm_sqr, phi_of, Betas, EmissionGeometry, GratingSpec, PhaseReference,
    ProcessId, ProcessSpec,
};
use crate::quadrature::{trapezoid, GaussLegendre};
use crate::slabmode::overlap_integral;

/// Speed of light in µm/fs; angular frequencies are in rad/fs.
pub const C_UM_PER_FS: f64 = 0.299_792_458;

pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * C_UM_PER_FS / wavelength
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionWindow {
    pub theta_s0: f64,
    pub theta_i0: f64,
    /// Half-width δθ, rad.
    pub half_width: f64,
}

impl CollectionWindow {
    pub fn new(theta_s0: f64, theta_i0: f64, half_width: f64) -> Result<Self> {
        let w = CollectionWindow { theta_s0, theta_i0, half_width };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("collection half-width must be positive, got {}", self.half_width)));
        }
        if self.theta_s0 * self.theta_i0 > 0.0 {
            return Err(Error::InvalidInput(format!(
                "signal and idler windows must lie on opposite sides of the axis, got {} and {}",
                self.theta_s0, self.theta_i0
            )));
        }
        Ok(())
    }
}

/// Beam and crystal parameters shared by all state computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    /// Pump waist W_p, µm.
    pub pump_waist: f64,
    /// Interaction length L, µm.
    pub length: f64,
    pub reference: PhaseReference,
    /// Gauss–Legendre points per angular axis.
    pub order: usize,
}

impl Default for StateParams {
    fn default() -> Self {
        StateParams { pump_waist: 100.0, length: 1e4, reference: PhaseReference::Entrance, order: 24 }
    }
}

/// f = √(ω_s ω_i) · I_z · β_s β_i · ∬ φ dθ_s dθ_i over the window.
pub fn coefficient_f(
    grating: &GratingSpec,
    window: &CollectionWindow,
    pump_wl: f64,
    signal_wl: f64,
    betas: &Betas,
    overlap: f64,
    params: &StateParams,
) -> Result<Complex64> {
    let rule = GaussLegendre::new(params.order);
    coefficient_f_with(&rule, grating, window, pump_wl, signal_wl, betas, overlap, params)
}

#[allow(clippy::too_many_arguments)]
fn coefficient_f_with(
    rule: &GaussLegendre,
    grating: &GratingSpec,
    window: &CollectionWindow,
    pump_wl: f64,
    signal_wl: f64,
    betas: &Betas,
    overlap: f64,
    params: &StateParams,
) -> Result<Complex64> {
    window.validate()?;
    let idler_wl = idler_wavelength(pump_wl, signal_wl)?;
    let dt = window.half_width;
    let integral: Complex64 = rule.integrate_2d(
        (window.theta_s0 - dt, window.theta_s0 + dt),
        (window.theta_i0 - dt, window.theta_i0 + dt),
        |ts, ti| {
            let m = mismatch_betas(grating, &EmissionGeometry::new(ts, ti), betas);
            phi_of(&m, params.pump_waist, params.length, params.reference)
        },
    );
    let pref = (angular_frequency(signal_wl) * angular_frequency(idler_wl)).sqrt() * overlap * betas.signal * betas.idler;
    Ok(integral * pref)
}

/// Propagation constants and overlap of one process at one signal wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    pub betas: Betas,
    pub overlap: f64,
}

/// Fundamental-mode betas and I_z for a process in the waveguide.
pub fn mode_point(wg: &Waveguide, process: ProcessId, pump_wl: f64, signal_wl: f64) -> Result<ModePoint> {
    let idler_wl = idler_wavelength(pump_wl, signal_wl)?;
    let p = wg.fundamental(crate::dispersion::Polarization::H, pump_wl)?;
    let s = wg.fundamental(process.signal(), signal_wl)?;
    let i = wg.fundamental(process.idler(), idler_wl)?;
    let overlap = overlap_integral(&p, &s, &i)?;
    Ok(ModePoint { betas: Betas { pump: p.beta(), signal: s.beta(), idler: i.beta() }, overlap })
}

/// Sampled f_HV and f_VH over a uniform signal-wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    /// µm, strictly increasing.
    pub lambda_s: Vec<f64>,
    pub f_hv: Vec<Complex64>,
    pub f_vh: Vec<Complex64>,
    pub pump_wl: f64,
    pub params: StateParams,
    pub windows: [CollectionWindow; 2],
    pub gratings: [GratingSpec; 2],
}

impl JointSpectrum {
    pub fn intensity(&self, process: ProcessId) -> Vec<f64> {
        let f = match process {
            ProcessId::HV => &self.f_hv,
            ProcessId::VH => &self.f_vh,
        };
        f.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Intensity normalized to its maximum over the sweep.
    pub fn normalized(&self, process: ProcessId) -> Vec<f64> {
        let v = self.intensity(process);
        let max = v.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            v.iter().map(|x| x / max).collect()
        } else {
            v
        }
    }

    /// Grid wavelength of the intensity maximum, µm.
    pub fn peak(&self, process: ProcessId) -> f64 {
        let v = self.intensity(process);
        let k = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
        self.lambda_s[k]
    }

    /// FWHM of |f|² in nm.
    pub fn fwhm_nm(&self, process: ProcessId) -> Result<f64> {
        Ok(1e3 * fwhm(&self.lambda_s, &self.intensity(process))?)
    }

    pub fn step(&self) -> f64 {
        self.lambda_s[1] - self.lambda_s[0]
    }
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 || !(hi > lo) {
        return Err(Error::InvalidInput(format!("grid needs N >= 3 and hi > lo, got [{lo}, {hi}] N={n}")));
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

/// Mode data for both processes on a wavelength grid, reusable across windows.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub pump_wl: f64,
    pub lambda_s: Vec<f64>,
    pub hv: Vec<ModePoint>,
    pub vh: Vec<ModePoint>,
}

impl ModeTable {
    pub fn build(wg: &Waveguide, pump_wl: f64, lambda_s: Vec<f64>) -> Result<Self> {
        let rows: Result<Vec<(ModePoint, ModePoint)>> = lambda_s
            .par_iter()
            .map(|&l| Ok((mode_point(wg, ProcessId::HV, pump_wl, l)?, mode_point(wg, ProcessId::VH, pump_wl, l)?)))
            .collect();
        let (hv, vh) = rows?.into_iter().unzip();
        Ok(ModeTable { pump_wl, lambda_s, hv, vh })
    }
}

/// Both coefficients over `table`'s grid.
pub fn spectrum_from_table(
    table: &ModeTable,
    processes: &[ProcessSpec; 2],
    windows: &[CollectionWindow; 2],
    params: &StateParams,
) -> Result<JointSpectrum> {
    let (p_hv, p_vh) = ordered(processes)?;
    let rule = GaussLegendre::new(params.order);
    let n = table.lambda_s.len();
    let values: Result<Vec<(Complex64, Complex64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let l = table.lambda_s[k];
            let a = coefficient_f_with(&rule, &p_hv.0.grating, &windows[p_hv.1], table.pump_wl, l, &table.hv[k].betas, table.hv[k].overlap, params)?;
            let b = coefficient_f_with(&rule, &p_vh.0.grating, &windows[p_vh.1], table.pump_wl, l, &table.vh[k].betas, table.vh[k].overlap, params)?;
            Ok((a, b))
        })
        .collect();
    let (f_hv, f_vh) = values?.into_iter().unzip();
    Ok(JointSpectrum {
        lambda_s: table.lambda_s.clone(),
        f_hv,
        f_vh,
        pump_wl: table.pump_wl,
        params: *params,
        windows: [windows[p_hv.1], windows[p_vh.1]],
        gratings: [p_hv.0.grating, p_vh.0.grating],
    })
}

type Indexed<'a> = (&'a ProcessSpec, usize);

/// Returns (spec, index) for the HV and the VH process.
fn ordered(processes: &[ProcessSpec; 2]) -> Result<(Indexed<'_>, Indexed<'_>)> {
    match (processes[0].id, processes[1].id) {
        (ProcessId::HV, ProcessId::VH) => Ok(((&processes[0], 0), (&processes[1], 1))),
        (ProcessId::VH, ProcessId::HV) => Ok(((&processes[1], 1), (&processes[0], 0))),
        _ => Err(Error::InvalidInput("need exactly one HV and one VH process".into())),
    }
}

/// Samples f_HV and f_VH on N uniform signal wavelengths in [lo, hi] µm.
#[allow(clippy::too_many_arguments)]
pub fn spectrum(
    wg: &Waveguide,
    processes: &[ProcessSpec; 2],
    windows: &[CollectionWindow; 2],
    pump_wl: f64,
    lo: f64,
    hi: f64,
    n: usize,
    params: &StateParams,
) -> Result<JointSpectrum> {
    let table = ModeTable::build(wg, pump_wl, uniform_grid(lo, hi, n)?)?;
    spectrum_from_table(&table, processes, windows, params)
}

/// Full width at half maximum of single-peaked samples, linearly
/// interpolated; same units as `x`.
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Dimension(format!("fwhm needs matching arrays of length >= 3, got {} and {}", x.len(), y.len())));
    }
    let (k, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Shape("empty samples".into()))?;
    if !(peak > 0.0) {
        return Err(Error::Shape("peak is not positive".into()));
    }
    let half = 0.5 * peak;
    let left = (0..k).rev().find(|&j| y[j] < half).ok_or_else(|| Error::Shape("no half-maximum crossing left of peak".into()))?;
    let right = (k + 1..y.len()).find(|&j| y[j] < half).ok_or_else(|| Error::Shape("no half-maximum crossing right of peak".into()))?;
    let xl = x[left] + (half - y[left]) / (y[left + 1] - y[left]) * (x[left + 1] - x[left]);
    let xr = x[right - 1] + (half - y[right - 1]) / (y[right] - y[right - 1]) * (x[right] - x[right - 1]);
    Ok(xr - xl)
}

/// E = 2|∫ f_HV f_VH* dω| / ∫(|f_HV|² + |f_VH|²) dω on samples over a
/// wavelength grid (µm), optionally restricted to [lo, hi].
pub fn concurrence_samples(lambda: &[f64], f_hv: &[Complex64], f_vh: &[Complex64], filter: Option<(f64, f64)>) -> Result<f64> {
    if lambda.len() != f_hv.len() || lambda.len() != f_vh.len() {
        return Err(Error::Dimension("concurrence arrays differ in length".into()));
    }
    let keep: Vec<usize> = (0..lambda.len())
        .filter(|&k| filter.is_none_or(|(lo, hi)| lambda[k] >= lo && lambda[k] <= hi))
        .collect();
    if keep.len() < 2 {
        return Err(Error::Degenerate("filter keeps fewer than two grid points".into()));
    }
    let x: Vec<f64> = keep.iter().map(|&k| lambda[k]).collect();
    // dω = 2πc/λ² dλ; the constant cancels in the ratio.
    let jac: Vec<f64> = x.iter().map(|l| 1.0 / (l * l)).collect();
    let cross: Vec<Complex64> = keep.iter().zip(&jac).map(|(&k, j)| f_hv[k] * f_vh[k].conj() * *j).collect();
    let re: Vec<f64> = cross.iter().map(|z| z.re).collect();
    let im: Vec<f64> = cross.iter().map(|z| z.im).collect();
    let den: Vec<f64> = keep.iter().zip(&jac).map(|(&k, j)| (f_hv[k].norm_sqr() + f_vh[k].norm_sqr()) * j).collect();
    let num = Complex64::new(trapezoid(&x, &re), trapezoid(&x, &im)).norm();
    let den = trapezoid(&x, &den);
    if !(den > 0.0) {
        return Err(Error::Degenerate("both spectra vanish on the integration domain".into()));
    }
    Ok((2.0 * num / den).min(1.0))
}

pub fn concurrence(js: &JointSpectrum, filter: Option<(f64, f64)>) -> Result<f64> {
    concurrence_samples(&js.lambda_s, &js.f_hv, &js.f_vh, filter)
}

/// Crossing of the two normalized angular curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    /// rad.
    pub theta_s: f64,
    /// Normalized intensity at the crossing.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectra {
    /// rad.
    pub theta_s: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub intersections: Vec<Intersection>,
    /// The curves agree at every sample.
    pub coincident: bool,
}

/// |φ|² per emission direction for two θ_g = 0 processes, with θ_i set
/// by transverse matching (β_s sin θ_s + β_i sin θ_i = 0) per process.
#[allow(clippy::too_many_arguments)]
pub fn angular_spectra(
    medium: &Medium,
    processes: &[ProcessSpec; 2],
    pump_wl: f64,
    signal_wl: f64,
    theta_lo: f64,
    theta_hi: f64,
    n: usize,
    params: &StateParams,
) -> Result<AngularSpectra> {
    for p in processes {
        if p.grating.slant != 0.0 {
            return Err(Error::InvalidInput(format!("angular spectra need untilted gratings, {} has θ_g = {}", p.id, p.grating.slant)));
        }
    }
    let theta = uniform_grid(theta_lo, theta_hi, n)?;
    let curve = |p: &ProcessSpec| -> Result<Vec<f64>> {
        let b = Betas::resolve(medium, p.id, pump_wl, signal_wl)?;
        let raw: Vec<f64> = theta
            .iter()
            .map(|&ts| {
                let ti = (-b.signal * ts.sin() / b.idler).asin();
                phi_norm_sqr(&mismatch_betas(&p.grating, &EmissionGeometry::new(ts, ti), &b), params.pump_waist, params.length)
            })
            .collect();
        let max = raw.iter().cloned().fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(Error::Degenerate(format!("process {} has no emission in the angular range", p.id)));
        }
        Ok(raw.iter().map(|v| v / max).collect())
    };
    let p1 = curve(&processes[0])?;
    let p2 = curve(&processes[1])?;
    let (intersections, coincident) = crossings(&theta, &p1, &p2);
    Ok(AngularSpectra { theta_s: theta, p1, p2, intersections, coincident })
}

fn crossings(x: &[f64], a: &[f64], b: &[f64]) -> (Vec<Intersection>, bool) {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    if d.iter().all(|v| v.abs() < 1e-12) {
        let all = x.iter().zip(a).map(|(&t, &l)| Intersection { theta_s: t, level: l }).collect();
        return (all, true);
    }
    let mut out = Vec::new();
    for k in 0..x.len() - 1 {
        if d[k] == 0.0 {
            out.push(Intersection { theta_s: x[k], level: a[k] });
        } else if d[k].signum() * d[k + 1].signum() < 0.0 {
            let t = d[k] / (d[k] - d[k + 1]);
            out.push(Intersection { theta_s: x[k] + t * (x[k + 1] - x[k]), level: a[k] + t * (a[k + 1] - a[k]) });
        }
    }
    (out, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triangle_fwhm_is_exact() {
        let x: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&v| (1.0 - (v - 2.0).abs() / 1.5).max(0.0)).collect();
        assert!((fwhm(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fwhm_without_crossing_is_shape_error() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(fwhm(&x, &[1.0, 0.9, 0.8, 0.7]), Err(Error::Shape(_))));
    }

    #[test]
    fn concurrence_extremes() {
        let l: Vec<f64> = (0..50).map(|k| 0.8 + 1e-4 * k as f64).collect();
        let a: Vec<Complex64> = l.iter().map(|x| c((-(x - 0.8025f64).powi(2) * 1e6).exp(), 0.1)).collect();
        assert!((concurrence_samples(&l, &a, &a, None).unwrap() - 1.0).abs() < 1e-12);
        let z = vec![c(0.0, 0.0); l.len()];
        assert!(concurrence_samples(&l, &a, &z, None).unwrap().abs() < 1e-15);
        assert!(matches!(concurrence_samples(&l, &z, &z, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_integrand_gives_window_area() {
        let g = GratingSpec::new(9.0, 0.0).unwrap();
        let w = CollectionWindow::new(0.0, 0.0, 1e-3).unwrap();
        let b = Betas { pump: 30.0, signal: 14.0, idler: 16.0 };
        // Choose K so that the collinear mismatch vanishes; the window is tiny.
        let g = GratingSpec { period: 2.0 * PI / (b.pump - b.signal - b.idler), ..g };
        let p = StateParams { pump_waist: 1e-9, length: 1e-9, ..Default::default() };
        let f = coefficient_f(&g, &w, 0.405, 0.807, &b, 0.7, &p).unwrap();
        let li = idler_wavelength(0.405, 0.807).unwrap();
        let pref = (angular_frequency(0.807) * angular_frequency(li)).sqrt() * 0.7 * b.signal * b.idler;
        assert!((f.re / (pref * 4e-6) - 1.0).abs() < 1e-9);
        assert!(f.im.abs() < 1e-12 * f.re);
    }

    #[test]
    fn window_quadrant_rule() {
        assert!(CollectionWindow::new(0.04, 0.04, 1e-3).is_err());
        assert!(CollectionWindow::new(0.04, -0.04, 0.0).is_err());
    }

    #[test]
    fn crossing_detection_interpolates() {
        let x = [0.0, 1.0, 2.0];
        let (c, same) = crossings(&x, &[0.0, 1.0, 1.0], &[1.0, 0.0, 0.5]);
        assert!(!same);
        assert_eq!(c.len(), 1);
        assert!((c[0].theta_s - 0.5).abs() < 1e-15 && (c[0].level - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separated_curves_have_no_crossing() {
        let (c, same) = crossings(&[0.0, 1.0, 2.0], &[1.0, 0.9, 0.8], &[0.5, 0.4, 0.3]);
        assert!(c.is_empty() && !same);
    }
}
