//! Subcommand implementations: run an engine, write CSV/JSON into the
//! output directory.
//!
//! CSV files start with a `# config=<json>` provenance line followed by a
//! fixed header row. Numbers carry 12 significant digits.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, SchemaError};
use crate::design::{solve_collinear_period, tuning_curve, TuningOptions};
use crate::dispersion::Polarization;
use crate::error::Error;
use crate::medium::{pol_class, Medium};
use crate::phasematch::{GratingSpec, ProcessId, ProcessSpec};
use crate::power::{angular_sweep, spectral_sweep, Source};
use crate::state::{angular_spectra, concurrence, spectrum, uniform_grid, JointSpectrum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{context}: {source}")]
    Engine { context: String, source: Error },
}

impl CliError {
    /// 2 for schema violations, 3 for non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Engine { source: Error::Convergence { .. }, .. } => 3,
            CliError::Engine { .. } => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for crate::error::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Engine { context: what.to_string(), source })
    }
}

/// `%.12g`-style formatting.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_json().to_string().as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(cfg: &RunConfig, header: &[&str]) -> Self {
        let mut text = format!("# config={}\n", cfg.to_json());
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(Error::from).context("creating output directory")?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(Error::from).context(&format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from).context("serializing output")?;
    text.push('\n');
    write_file(dir, name, &text)
}

fn grating_json(g: &GratingSpec) -> Value {
    json!({ "period_um": g.period, "slant_deg": g.slant.to_degrees() })
}

/// Fundamental n_eff per (λ, polarization); rows without a guided mode
/// are flagged.
pub fn cmd_modes(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let wg = cfg.waveguide().context("loading material")?;
    let mut csv = Csv::new(cfg, &["lambda_nm", "polarization", "pol_class", "order", "n_eff", "status"]);
    for &l_nm in &cfg.modes.wavelengths_nm {
        for pol in [Polarization::H, Polarization::V] {
            let modes = wg.modes(pol, l_nm * 1e-3).context(&format!("solving {pol} modes at {l_nm} nm"))?;
            match modes.first() {
                Some(m) => csv.row([fmt_num(l_nm), pol.to_string(), pol_class(pol).to_string(), "0".into(), fmt_num(m.n_eff), "guided".into()]),
                None => csv.row([fmt_num(l_nm), pol.to_string(), pol_class(pol).to_string(), String::new(), String::new(), "no guided mode".into()]),
            }
        }
    }
    Ok(vec![write_file(out, "modes.csv", &csv.text)?])
}

pub fn cmd_design(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let wg = cfg.waveguide().context("loading material")?;
    let d = cfg.solve_design(&wg).context("dual-grating design")?;
    let value = json!({
        "config": cfg.to_json(),
        "result": {
            "grating1": grating_json(&d.grating1),
            "grating2": grating_json(&d.grating2),
            "theta_s_deg": d.theta_s.to_degrees(),
            "theta_i_deg": d.theta_i.to_degrees(),
            "pump_nm": d.pump_wl * 1e3,
            "signal_nm": d.signal_wl * 1e3,
            "idler_nm": d.idler_wl * 1e3,
            "residuals_per_um": d.residuals,
        }
    });
    Ok(vec![write_json(out, "design.json", &value)?])
}

fn joint_spectrum(cfg: &RunConfig) -> CliResult<JointSpectrum> {
    let wg = cfg.waveguide().context("loading material")?;
    let d = cfg.solve_design(&wg).context("dual-grating design")?;
    let g = cfg.gratings(&d);
    let w = cfg.window(&d).context("collection window")?;
    let processes = [ProcessSpec { id: ProcessId::HV, grating: g[0] }, ProcessSpec { id: ProcessId::VH, grating: g[1] }];
    spectrum(
        &wg,
        &processes,
        &[w, w],
        cfg.pump_wl(),
        cfg.spectrum.lo_nm * 1e-3,
        cfg.spectrum.hi_nm * 1e-3,
        cfg.spectrum.points,
        &cfg.state_params(),
    )
    .context("joint spectrum")
}

fn filter_window(cfg: &RunConfig, js: &JointSpectrum) -> (f64, f64) {
    let centre = cfg.spectrum.filter_center_nm.map_or(js.peak(ProcessId::HV), |c| c * 1e-3);
    let half = 0.5 * cfg.spectrum.filter_nm * 1e-3;
    (centre - half, centre + half)
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let js = joint_spectrum(cfg)?;
    let n_hv = js.normalized(ProcessId::HV);
    let n_vh = js.normalized(ProcessId::VH);
    let mut csv = Csv::new(cfg, &["lambda_s_nm", "re_fHV", "im_fHV", "re_fVH", "im_fVH", "norm_fHV2", "norm_fVH2"]);
    for k in 0..js.lambda_s.len() {
        csv.row([
            fmt_num(js.lambda_s[k] * 1e3),
            fmt_num(js.f_hv[k].re),
            fmt_num(js.f_hv[k].im),
            fmt_num(js.f_vh[k].re),
            fmt_num(js.f_vh[k].im),
            fmt_num(n_hv[k]),
            fmt_num(n_vh[k]),
        ]);
    }
    let summary = json!({
        "config": cfg.to_json(),
        "peak_hv_nm": js.peak(ProcessId::HV) * 1e3,
        "peak_vh_nm": js.peak(ProcessId::VH) * 1e3,
        "fwhm_hv_nm": js.fwhm_nm(ProcessId::HV).ok(),
        "fwhm_vh_nm": js.fwhm_nm(ProcessId::VH).ok(),
        "grid_step_nm": js.step() * 1e3,
        "concurrence": concurrence(&js, None).context("concurrence")?,
    });
    Ok(vec![write_file(out, "spectrum.csv", &csv.text)?, write_json(out, "spectrum.json", &summary)?])
}

pub fn cmd_concurrence(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let js = joint_spectrum(cfg)?;
    let (lo, hi) = filter_window(cfg, &js);
    let value = json!({
        "config": cfg.to_json(),
        "concurrence_full": concurrence(&js, None).context("concurrence")?,
        "concurrence_filtered": concurrence(&js, Some((lo, hi))).context("filtered concurrence")?,
        "filter_nm": [lo * 1e3, hi * 1e3],
    });
    Ok(vec![write_json(out, "concurrence.json", &value)?])
}

pub fn cmd_power(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let wg = cfg.waveguide().context("loading material")?;
    let material = wg.material.clone();
    let lp = cfg.pump_wl();
    let ls = cfg.power.signal_nm * 1e-3;
    let planar_period = match cfg.power.planar_period_um {
        Some(p) => p,
        None => solve_collinear_period(lp, ls, ProcessId::HV, &Medium::Planar(wg.clone())).context("planar collinear period")?,
    };
    let bulk_period = match cfg.power.bulk_period_um {
        Some(p) => p,
        None => solve_collinear_period(lp, ls, ProcessId::HV, &Medium::Bulk(material.clone())).context("bulk collinear period")?,
    };
    let planar = Source::Planar { waveguide: wg, process: ProcessId::HV, period: planar_period };
    let bulk = Source::Bulk { material, process: ProcessId::HV, period: bulk_period };
    let pump = cfg.pump_config();
    let nl = cfg.nonlinear();
    let q = cfg.power.quadrature;
    let hash = config_hash(cfg);

    let grid = uniform_grid(cfg.power.signal_lo_nm * 1e-3, cfg.power.signal_hi_nm * 1e-3, cfg.power.points).context("signal grid")?;
    let (pp, pv) = spectral_sweep(&planar, &pump, &nl, &grid, &q).context("planar spectral density")?;
    let (bp, bv) = spectral_sweep(&bulk, &pump, &nl, &grid, &q).context("bulk spectral density")?;
    let angles = uniform_grid(cfg.power.angle_lo_deg.to_radians(), cfg.power.angle_hi_deg.to_radians(), cfg.power.angle_points).context("angle grid")?;
    let (pa, pav) = angular_sweep(&planar, &pump, &nl, ls, &angles, &q).context("planar angular density")?;
    let (ba, bav) = angular_sweep(&bulk, &pump, &nl, ls, &angles, &q).context("bulk angular density")?;

    let spectral_csv = |values: &[f64]| {
        let mut csv = Csv::new(cfg, &["lambda_s_nm", "dP_dlambda_W_per_nm", "config_hash"]);
        for (l, v) in grid.iter().zip(values) {
            csv.row([fmt_num(l * 1e3), fmt_num(*v), hash.clone()]);
        }
        csv.text
    };
    let mut ang = Csv::new(cfg, &["theta_deg", "planar_W_per_nm_rad", "bulk_W_per_nm_rad2", "config_hash"]);
    for k in 0..angles.len() {
        ang.row([fmt_num(angles[k].to_degrees()), fmt_num(pav[k]), fmt_num(bav[k]), hash.clone()]);
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    let report = json!({
        "spectral_ratio": ratio(pp.value, bp.value),
        "angular_ratio": ratio(pa.value, ba.value),
        "planar_spectral_peak": { "lambda_s_nm": pp.x * 1e3, "W_per_nm": pp.value },
        "bulk_spectral_peak": { "lambda_s_nm": bp.x * 1e3, "W_per_nm": bp.value },
        "planar_angular_peak": { "theta_deg": pa.x.to_degrees(), "W_per_nm_rad": pa.value },
        "bulk_angular_peak": { "theta_deg": ba.x.to_degrees(), "W_per_nm_rad2": ba.value },
        "planar_period_um": planar_period,
        "bulk_period_um": bulk_period,
        "config_hash": hash,
        "configs": cfg.to_json(),
    });
    Ok(vec![
        write_file(out, "power_planar.csv", &spectral_csv(&pv))?,
        write_file(out, "power_bulk.csv", &spectral_csv(&bv))?,
        write_file(out, "power_angular.csv", &ang.text)?,
        write_json(out, "power_compare.json", &report)?,
    ])
}

pub fn cmd_tune(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let wg = cfg.waveguide().context("loading material")?;
    let mut base = cfg.solve_design(&wg).context("dual-grating design")?;
    let g = cfg.gratings(&base);
    base.grating1 = g[0];
    base.grating2 = g[1];
    let t = &cfg.tune;
    let opts = TuningOptions {
        theta_lo: t.theta_lo_deg.to_radians(),
        theta_hi: t.theta_hi_deg.to_radians(),
        theta_step: t.theta_step_deg.to_radians(),
        window_half_width: cfg.window.half_width_deg.to_radians(),
        spectrum_half_span: t.spectrum_half_span_nm * 1e-3,
        spectrum_points: t.points,
        filter_width: cfg.spectrum.filter_nm * 1e-3,
        e_curve_offsets: t.e_curve_offsets_deg.iter().map(|d| d.to_radians()).collect(),
        params: cfg.state_params(),
    };
    let pumps: Vec<f64> = t.pump_nm.iter().map(|p| p * 1e-3).collect();
    let points = tuning_curve(&base, &wg, &pumps, &opts).context("tuning curve")?;
    let mut csv = Csv::new(cfg, &["pump_nm", "matched", "theta_s_deg", "theta_i_deg", "signal_nm", "idler_nm", "efficiency", "E_full", "E_filtered"]);
    let mut rows = Vec::new();
    for p in &points {
        csv.row([
            fmt_num(p.pump_wl * 1e3),
            p.matched.to_string(),
            fmt_num(p.theta_s.to_degrees()),
            fmt_num(p.theta_i.to_degrees()),
            fmt_num(p.signal_wl * 1e3),
            fmt_num(p.idler_wl * 1e3),
            fmt_num(p.efficiency),
            fmt_num(p.e_full),
            fmt_num(p.e_filtered),
        ]);
        let curve: Vec<Value> = p
            .e_curve
            .iter()
            .map(|e| json!({"theta_s_deg": e.theta_s.to_degrees(), "theta_i_deg": e.theta_i.to_degrees(), "signal_nm": e.signal_wl * 1e3, "E_full": e.e_full, "E_filtered": e.e_filtered}))
            .collect();
        rows.push(json!({
            "pump_nm": p.pump_wl * 1e3,
            "matched": p.matched,
            "theta_s_deg": p.matched.then(|| p.theta_s.to_degrees()),
            "theta_i_deg": p.matched.then(|| p.theta_i.to_degrees()),
            "signal_nm": p.matched.then_some(p.signal_wl * 1e3),
            "idler_nm": p.matched.then_some(p.idler_wl * 1e3),
            "efficiency": p.efficiency,
            "E_full": p.matched.then_some(p.e_full),
            "E_filtered": p.matched.then_some(p.e_filtered),
            "E_curve": curve,
        }));
    }
    let value = json!({ "config": cfg.to_json(), "gratings": [grating_json(&g[0]), grating_json(&g[1])], "points": rows });
    Ok(vec![write_file(out, "tuning.csv", &csv.text)?, write_json(out, "tuning.json", &value)?])
}

pub fn cmd_hyper(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let wg = cfg.waveguide().context("loading material")?;
    let h = &cfg.hyper;
    let processes = [
        ProcessSpec { id: ProcessId::HV, grating: GratingSpec::new(h.periods_um[0], 0.0).context("grating 1")? },
        ProcessSpec { id: ProcessId::VH, grating: GratingSpec::new(h.periods_um[1], 0.0).context("grating 2")? },
    ];
    let a = angular_spectra(
        &Medium::Planar(wg),
        &processes,
        cfg.pump_wl(),
        h.signal_nm * 1e-3,
        h.theta_lo_deg.to_radians(),
        h.theta_hi_deg.to_radians(),
        h.points,
        &cfg.state_params(),
    )
    .context("angular spectra")?;
    let mut csv = Csv::new(cfg, &["theta_s_deg", "p1_norm", "p2_norm"]);
    for k in 0..a.theta_s.len() {
        csv.row([fmt_num(a.theta_s[k].to_degrees()), fmt_num(a.p1[k]), fmt_num(a.p2[k])]);
    }
    let crossings: Vec<Value> = if a.coincident {
        Vec::new()
    } else {
        a.intersections.iter().map(|c| json!({"theta_s_deg": c.theta_s.to_degrees(), "level": c.level})).collect()
    };
    let value = json!({ "config": cfg.to_json(), "coincident": a.coincident, "intersections": crossings });
    Ok(vec![write_file(out, "hyper.csv", &csv.text)?, write_json(out, "hyper.json", &value)?])
}
