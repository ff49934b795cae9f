//! Inverse design of the dual grating and pump-wavelength tuning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::medium::{Medium, Waveguide};
use crate::phasematch::{
    idler_wavelength, mismatch_betas, phi_norm_sqr, Betas, EmissionGeometry, GratingSpec, ProcessId, ProcessSpec,
};
use crate::roots::{brent, golden_max, newton_2d, scan_brackets, Newton2dOptions};
use crate::state::{concurrence, spectrum_from_table, uniform_grid, CollectionWindow, ModeTable, StateParams};

/// Λ = 2π / (β_p − β_s − β_i) for collinear emission and an untilted grating.
pub fn solve_collinear_period(pump_wl: f64, signal_wl: f64, process: ProcessId, medium: &Medium) -> Result<f64> {
    let b = Betas::resolve(medium, process, pump_wl, signal_wl)?;
    let dk = b.pump - b.signal - b.idler;
    if !(dk > 1e-12 * b.pump) {
        return Err(Error::NoSolution(format!("collinear mismatch β_p − β_s − β_i = {dk} µm⁻¹ is not positive")));
    }
    Ok(2.0 * PI / dk)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInput {
    /// µm.
    pub pump_wl: f64,
    /// Anchor signal wavelength, µm.
    pub signal_wl: f64,
    /// rad.
    pub theta_s: f64,
    /// Slant of grating 1, rad.
    pub theta_g1: f64,
}

impl Default for DesignInput {
    fn default() -> Self {
        DesignInput { pump_wl: 0.405, signal_wl: 0.807, theta_s: 2.5f64.to_radians(), theta_g1: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub grating1: GratingSpec,
    pub grating2: GratingSpec,
    pub theta_s: f64,
    pub theta_i: f64,
    pub pump_wl: f64,
    pub signal_wl: f64,
    pub idler_wl: f64,
    /// [Δk_x1, Δk_y1, Δk_x2, Δk_y2], µm⁻¹.
    pub residuals: [f64; 4],
}

impl DesignResult {
    pub fn processes(&self) -> [ProcessSpec; 2] {
        [
            ProcessSpec { id: ProcessId::HV, grating: self.grating1 },
            ProcessSpec { id: ProcessId::VH, grating: self.grating2 },
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

const RESIDUAL_TOL: f64 = 1e-10;

/// Minimum |φ₂|² accepted as a tuned match.
const MAIN_LOBE: f64 = 0.1;

/// Solves both processes' phase matching at the anchor wavelengths.
///
/// Stage 1 finds θ_i from the transverse condition of process 1 (with
/// Λ₁ eliminated through its longitudinal condition when grating 1 is
/// slanted); stage 2 sets Λ₁; stage 3 solves process 2 for (Λ₂, θ_g2) by
/// Newton iteration seeded from grating 1.
pub fn solve_dual_grating(input: &DesignInput, wg: &Waveguide) -> Result<DesignResult> {
    if input.theta_s == 0.0 {
        return Err(Error::InvalidInput("dual-grating design needs a non-collinear signal angle".into()));
    }
    if input.theta_s.abs() >= FRAC_PI_2 || input.theta_g1.abs() >= FRAC_PI_2 {
        return Err(Error::InvalidInput("angles must lie inside (−90°, 90°)".into()));
    }
    let medium = Medium::Planar(wg.clone());
    let (lp, ls) = (input.pump_wl, input.signal_wl);
    let b1 = Betas::resolve(&medium, ProcessId::HV, lp, ls)?;
    let b2 = Betas::resolve(&medium, ProcessId::VH, lp, ls)?;
    let ts = input.theta_s;
    let tg1 = input.theta_g1;

    // Stage 1: K₁(θ_i) from Δk_x1 = 0, then Δk_y1(θ_i) = 0.
    let k1_of = |ti: f64| (b1.pump - b1.signal * ts.cos() - b1.idler * ti.cos()) / tg1.cos();
    let dky1 = |ti: f64| b1.signal * ts.sin() + b1.idler * ti.sin() + k1_of(ti) * tg1.sin();
    let span = 0.49 * PI;
    let brackets = scan_brackets(dky1, -span, span, 4001);
    let bracket = brackets
        .iter()
        .filter(|(a, b)| (0.5 * (a + b)) * ts <= 0.0)
        .min_by(|x, y| ((x.0 + x.1) * 0.5 + ts).abs().total_cmp(&((y.0 + y.1) * 0.5 + ts).abs()))
        .ok_or_else(|| Error::NoSolution("no idler angle satisfies transverse matching for process 1".into()))?;
    let ti = brent(dky1, bracket.0, bracket.1, 1e-16, 1e-14, 200)?;

    // Stage 2.
    let k1 = k1_of(ti);
    if !(k1 > 0.0) {
        return Err(Error::NoSolution(format!("grating 1 would need non-positive |K| = {k1}")));
    }
    let grating1 = GratingSpec { period: 2.0 * PI / k1, slant: tg1 };
    let geom = EmissionGeometry::new(ts, ti);

    // Stage 3.
    let residual2 = |x: [f64; 2]| {
        let g = GratingSpec { period: x[0], slant: x[1] };
        let m = mismatch_betas(&g, &geom, &b2);
        [m.dk_x, m.dk_y]
    };
    let opts = Newton2dOptions {
        tol: RESIDUAL_TOL,
        max_iter: 200,
        fd_step: [1e-7, 1e-7],
        bounds: [(0.5 * grating1.period, 2.0 * grating1.period), (-0.5, 0.5)],
    };
    let x = newton_2d(residual2, [grating1.period, grating1.slant], opts)?;
    let grating2 = GratingSpec { period: x[0], slant: x[1] };

    let m1 = mismatch_betas(&grating1, &geom, &b1);
    let m2 = mismatch_betas(&grating2, &geom, &b2);
    let result = DesignResult {
        grating1,
        grating2,
        theta_s: ts,
        theta_i: ti,
        pump_wl: lp,
        signal_wl: ls,
        idler_wl: idler_wavelength(lp, ls)?,
        residuals: [m1.dk_x, m1.dk_y, m2.dk_x, m2.dk_y],
    };
    if result.max_residual() > RESIDUAL_TOL {
        return Err(Error::Convergence { iterations: opts.max_iter, residuals: result.residuals.to_vec() });
    }
    Ok(result)
}

/// Settings for [`tuning_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOptions {
    /// Scanned signal angles [lo, hi] and step, rad.
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_step: f64,
    pub window_half_width: f64,
    /// Spectrum half-span around the tuned signal wavelength, µm.
    pub spectrum_half_span: f64,
    pub spectrum_points: usize,
    /// Filter width for the reported filtered concurrence, µm.
    pub filter_width: f64,
    /// Angular offsets (rad) from the tuned angle at which E is also evaluated.
    pub e_curve_offsets: Vec<f64>,
    pub params: StateParams,
}

impl Default for TuningOptions {
    fn default() -> Self {
        TuningOptions {
            theta_lo: 2.0f64.to_radians(),
            theta_hi: 3.5f64.to_radians(),
            theta_step: 0.01f64.to_radians(),
            window_half_width: 0.034f64.to_radians(),
            spectrum_half_span: 0.004,
            spectrum_points: 400,
            filter_width: 1e-4,
            e_curve_offsets: Vec::new(),
            params: StateParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPoint {
    pub theta_s: f64,
    pub theta_i: f64,
    pub signal_wl: f64,
    pub e_full: f64,
    pub e_filtered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub pump_wl: f64,
    pub matched: bool,
    pub theta_s: f64,
    pub theta_i: f64,
    pub signal_wl: f64,
    pub idler_wl: f64,
    /// |φ_VH|² at the process-1 phase-matched point.
    pub efficiency: f64,
    pub e_full: f64,
    pub e_filtered: f64,
    pub e_curve: Vec<EPoint>,
}

impl TuningPoint {
    fn unmatched(pump_wl: f64) -> Self {
        TuningPoint {
            pump_wl,
            matched: false,
            theta_s: f64::NAN,
            theta_i: f64::NAN,
            signal_wl: f64::NAN,
            idler_wl: f64::NAN,
            efficiency: 0.0,
            e_full: f64::NAN,
            e_filtered: f64::NAN,
            e_curve: Vec::new(),
        }
    }
}

/// (λ_s, θ_i) at which process 1 is fully phase matched for signal angle θ_s.
pub fn process1_match(base: &DesignResult, wg: &Waveguide, pump_wl: f64, theta_s: f64, seed: [f64; 2]) -> Result<[f64; 2]> {
    let medium = Medium::Planar(wg.clone());
    let residual = |x: [f64; 2]| match Betas::resolve(&medium, ProcessId::HV, pump_wl, x[0]) {
        Ok(b) => {
            let m = mismatch_betas(&base.grating1, &EmissionGeometry::new(theta_s, x[1]), &b);
            [m.dk_x, m.dk_y]
        }
        Err(_) => [f64::NAN, f64::NAN],
    };
    let opts = Newton2dOptions {
        tol: 1e-11,
        max_iter: 200,
        fd_step: [1e-8, 1e-8],
        bounds: [(seed[0] - 0.01, seed[0] + 0.01), (seed[1] - 0.02, seed[1] + 0.02)],
    };
    newton_2d(residual, seed, opts)
}

fn process2_efficiency(base: &DesignResult, wg: &Waveguide, pump_wl: f64, theta_s: f64, x: [f64; 2], p: &StateParams) -> Result<f64> {
    let b = Betas::resolve(&Medium::Planar(wg.clone()), ProcessId::VH, pump_wl, x[0])?;
    let m = mismatch_betas(&base.grating2, &EmissionGeometry::new(theta_s, x[1]), &b);
    Ok(phi_norm_sqr(&m, p.pump_waist, p.length))
}

/// Concurrence of the spectrum collected around (θ_s, θ_i).
fn concurrence_at(table: &ModeTable, base: &DesignResult, theta_s: f64, theta_i: f64, centre: f64, opts: &TuningOptions) -> Result<(f64, f64)> {
    let w = CollectionWindow::new(theta_s, theta_i, opts.window_half_width)?;
    let js = spectrum_from_table(table, &base.processes(), &[w, w], &opts.params)?;
    let half = 0.5 * opts.filter_width;
    Ok((concurrence(&js, None)?, concurrence(&js, Some((centre - half, centre + half)))?))
}

/// With both gratings frozen, finds for each pump wavelength the signal
/// angle at which process 2 is best matched while process 1 is exactly
/// matched, and evaluates the concurrence there.
pub fn tuning_curve(base: &DesignResult, wg: &Waveguide, pump_wls: &[f64], opts: &TuningOptions) -> Result<Vec<TuningPoint>> {
    pump_wls.par_iter().map(|&lp| tune_one(base, wg, lp, opts)).collect()
}

fn tune_one(base: &DesignResult, wg: &Waveguide, lp: f64, opts: &TuningOptions) -> Result<TuningPoint> {
    let n = ((opts.theta_hi - opts.theta_lo) / opts.theta_step).round() as usize + 1;
    // Signal wavelength scaled with the pump as a first guess.
    let mut seed = [base.signal_wl * lp / base.pump_wl, -opts.theta_lo];
    let mut scan = Vec::with_capacity(n);
    for k in 0..n {
        let ts = opts.theta_lo + opts.theta_step * k as f64;
        match process1_match(base, wg, lp, ts, [seed[0], -ts]) {
            Ok(x) => {
                seed = x;
                let eff = process2_efficiency(base, wg, lp, ts, x, &opts.params)?;
                scan.push((ts, x, eff));
            }
            Err(Error::Convergence { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let Some((best, &(ts0, x0, eff0))) = scan.iter().enumerate().max_by(|a, b| a.1 .2.total_cmp(&b.1 .2)) else {
        return Ok(TuningPoint::unmatched(lp));
    };
    // Require the main sinc² lobe (side lobes peak at 0.047) away from the
    // scan edges; otherwise the match lies outside the scanned range.
    if !(eff0 > MAIN_LOBE) || best == 0 || best + 1 == scan.len() {
        return Ok(TuningPoint::unmatched(lp));
    }
    // Refine between the neighbouring scan angles.
    let (ts, _) = golden_max(
        |t| {
            process1_match(base, wg, lp, t, x0)
                .and_then(|x| process2_efficiency(base, wg, lp, t, x, &opts.params))
                .unwrap_or(0.0)
        },
        ts0 - opts.theta_step,
        ts0 + opts.theta_step,
        1e-9,
    );
    let x = process1_match(base, wg, lp, ts, x0)?;
    let efficiency = process2_efficiency(base, wg, lp, ts, x, &opts.params)?;
    let (ls, ti) = (x[0], x[1]);

    let grid = uniform_grid(ls - opts.spectrum_half_span, ls + opts.spectrum_half_span, opts.spectrum_points)?;
    let table = ModeTable::build(wg, lp, grid)?;
    let (e_full, e_filtered) = concurrence_at(&table, base, ts, ti, ls, opts)?;
    let mut e_curve = Vec::with_capacity(opts.e_curve_offsets.len());
    for &off in &opts.e_curve_offsets {
        let t = ts + off;
        let xo = process1_match(base, wg, lp, t, x)?;
        let (ef, eflt) = concurrence_at(&table, base, t, xo[1], xo[0], opts)?;
        e_curve.push(EPoint { theta_s: t, theta_i: xo[1], signal_wl: xo[0], e_full: ef, e_filtered: eflt });
    }
    Ok(TuningPoint {
        pump_wl: lp,
        matched: true,
        theta_s: ts,
        theta_i: ti,
        signal_wl: ls,
        idler_wl: idler_wavelength(lp, ls)?,
        efficiency,
        e_full,
        e_filtered,
        e_curve,
    })
}
