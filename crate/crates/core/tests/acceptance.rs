//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use planar_spdc::config::RunConfig;
use planar_spdc::design::{solve_collinear_period, solve_dual_grating, tuning_curve, DesignInput, TuningOptions};
use planar_spdc::dispersion::Polarization;
use planar_spdc::medium::{Medium, Waveguide};
use planar_spdc::phasematch::{mismatch_betas, phi_of, Betas, EmissionGeometry, GratingSpec, PhaseReference, ProcessId, ProcessSpec};
use planar_spdc::power::{angular_sweep, power_density, spectral_sweep, NonlinearConfig, PowerOptions, PumpConfig, Source};
use planar_spdc::slabmode::{PolClass, SlabGeometry};
use planar_spdc::state::{angular_spectra, concurrence, concurrence_samples, spectrum, uniform_grid, StateParams};

/// One named sub-check of a criterion.
struct Check {
    label: String,
    ok: bool,
}

#[derive(Default)]
struct Report {
    checks: Vec<Check>,
}

impl Report {
    fn check(&mut self, ok: bool, label: impl Into<String>) {
        self.checks.push(Check { label: label.into(), ok });
    }

    fn within(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.check(value >= lo && value <= hi, format!("{name}={value:.6} in [{lo:.6}, {hi:.6}]"));
    }
}

type Outcome = Result<Report, String>;

fn run(id: usize, title: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(mut r) => {
            r.check(elapsed <= limit, format!("runtime {:.2}s <= {}s", elapsed.as_secs_f64(), limit.as_secs()));
            let ok = r.checks.iter().all(|c| c.ok);
            let detail: Vec<String> = r.checks.iter().map(|c| format!("{}{}", if c.ok { "" } else { "!! " }, c.label)).collect();
            (ok, detail.join("; "))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {id} {title}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    ok
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Dispersion relation in the pole-free product form
/// sin(κd)(κ² − p_s p_c γ_s γ_c) − cos(κd) κ (p_s γ_s + p_c γ_c).
fn slab_determinant(g: &SlabGeometry, wavelength: f64, pol: PolClass, n: f64) -> f64 {
    let k0 = 2.0 * PI / wavelength;
    let kappa = k0 * (g.n_film.powi(2) - n * n).sqrt();
    let gs = k0 * (n * n - g.n_substrate.powi(2)).sqrt();
    let gc = k0 * (n * n - g.n_cover.powi(2)).sqrt();
    let (ps, pc) = match pol {
        PolClass::TE => (1.0, 1.0),
        PolClass::TM => ((g.n_film / g.n_substrate).powi(2), (g.n_film / g.n_cover).powi(2)),
    };
    let phase = kappa * g.depth;
    phase.sin() * (kappa * kappa - ps * pc * gs * gc) - phase.cos() * kappa * (ps * gs + pc * gc)
}

/// Highest-index root from a 1e-6 sign-change scan, then plain bisection.
fn brute_fundamental(g: &SlabGeometry, wavelength: f64, pol: PolClass) -> Option<f64> {
    let step = 1e-6;
    let top = g.n_film - 1e-9;
    let count = ((top - g.n_substrate) / step) as usize;
    let f = |n: f64| slab_determinant(g, wavelength, pol, n);
    let mut hi = top;
    let mut f_hi = f(hi);
    for k in 1..=count {
        let lo = top - step * k as f64;
        let f_lo = f(lo);
        if f_lo == 0.0 {
            return Some(lo);
        }
        if f_lo.signum() != f_hi.signum() {
            let (mut a, mut b, fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            return Some(0.5 * (a + b));
        }
        hi = lo;
        f_hi = f_lo;
    }
    None
}

fn criterion_1() -> Outcome {
    let wg = Waveguide::ktp_default();
    let mut r = Report::default();
    let mut worst: f64 = 0.0;
    for wl in [0.405, 0.807, 0.813] {
        for pol in [Polarization::H, Polarization::V] {
            let class = planar_spdc::medium::pol_class(pol);
            let solved = e(wg.fundamental(pol, wl))?.n_eff;
            let geom = e(wg.geometry(pol, wl))?;
            let oracle = brute_fundamental(&geom, wl, class).ok_or_else(|| format!("scan found no mode at {wl} µm {class}"))?;
            worst = worst.max((solved - oracle).abs());
        }
    }
    r.check(worst < 1e-9, format!("max |dn_eff|={worst:.2e} < 1e-9"));
    Ok(r)
}

fn criterion_2() -> Outcome {
    let wg = Waveguide::ktp_default();
    let d = e(solve_dual_grating(&DesignInput::default(), &wg))?;
    let mut r = Report::default();
    r.within("period1_um", d.grating1.period, 8.62 * 0.97, 8.62 * 1.03);
    r.within("period2_um", d.grating2.period, 8.75 * 0.97, 8.75 * 1.03);
    r.within("theta_g2_deg", d.grating2.slant.to_degrees(), -4.64 - 0.5, -4.64 + 0.5);
    r.within("theta_i_deg", d.theta_i.to_degrees(), -2.4 - 0.15, -2.4 + 0.15);
    r.within("idler_nm", d.idler_wl * 1e3, 813.02 - 1.0, 813.02 + 1.0);
    r.check(d.max_residual() < 1e-8, format!("max residual {:.2e} < 1e-8 /um", d.max_residual()));
    Ok(r)
}

fn criterion_3() -> Outcome {
    let wg = Waveguide::ktp_default();
    let planar = e(solve_collinear_period(0.405, 0.807, ProcessId::HV, &Medium::Planar(wg.clone())))?;
    let bulk = e(solve_collinear_period(0.405, 0.807, ProcessId::HV, &Medium::Bulk(wg.material.clone())))?;
    let mut r = Report::default();
    r.within("planar_period_um", planar, 9.0 * 0.97, 9.0 * 1.03);
    r.within("bulk_period_um", bulk, 10.06 * 0.97, 10.06 * 1.03);
    Ok(r)
}

fn design_processes(cfg: &RunConfig) -> Result<(Waveguide, planar_spdc::design::DesignResult, [ProcessSpec; 2]), String> {
    let wg = e(cfg.waveguide())?;
    let d = e(cfg.solve_design(&wg))?;
    let g = cfg.gratings(&d);
    let processes = [ProcessSpec { id: ProcessId::HV, grating: g[0] }, ProcessSpec { id: ProcessId::VH, grating: g[1] }];
    Ok((wg, d, processes))
}

fn criterion_4() -> Outcome {
    let cfg = RunConfig::default();
    let (wg, d, processes) = design_processes(&cfg)?;
    let w = e(cfg.window(&d))?;
    let s = &cfg.spectrum;
    let js = e(spectrum(&wg, &processes, &[w, w], cfg.pump_wl(), s.lo_nm * 1e-3, s.hi_nm * 1e-3, 400, &cfg.state_params()))?;
    let mut r = Report::default();
    let gap = (js.peak(ProcessId::HV) - js.peak(ProcessId::VH)).abs();
    r.check(gap <= js.step() * (1.0 + 1e-9), format!("peak gap {:.4} nm <= step {:.4} nm", gap * 1e3, js.step() * 1e3));
    r.within("fwhm_hv_nm", e(js.fwhm_nm(ProcessId::HV))?, 1.3 * 0.7, 1.3 * 1.3);
    r.within("fwhm_vh_nm", e(js.fwhm_nm(ProcessId::VH))?, 1.3 * 0.7, 1.3 * 1.3);
    let conc = e(concurrence(&js, None))?;
    r.check(conc > 0.99, format!("E={conc:.5} > 0.99"));
    Ok(r)
}

fn criterion_5() -> Outcome {
    let cfg = RunConfig::default();
    let (wg, base, _) = design_processes(&cfg)?;
    let opts = TuningOptions {
        window_half_width: cfg.window.half_width_deg.to_radians(),
        filter_width: 1e-4,
        params: cfg.state_params(),
        ..TuningOptions::default()
    };
    let points = e(tuning_curve(&base, &wg, &[0.406], &opts))?;
    let p = &points[0];
    let mut r = Report::default();
    r.check(p.matched, "process 1 matched at 406 nm");
    r.within("theta_s_deg", p.theta_s.to_degrees(), 2.94 - 0.15, 2.94 + 0.15);
    r.within("signal_nm", p.signal_wl * 1e3, 808.92 - 1.0, 808.92 + 1.0);
    r.within("E_filtered", p.e_filtered, 0.96 - 0.05, 0.96 + 0.05);
    Ok(r)
}

fn criterion_6() -> Outcome {
    let wg = Waveguide::ktp_default();
    let material = wg.material.clone();
    let (lp, ls) = (0.405, 0.807);
    let planar_period = e(solve_collinear_period(lp, ls, ProcessId::HV, &Medium::Planar(wg.clone())))?;
    let bulk_period = e(solve_collinear_period(lp, ls, ProcessId::HV, &Medium::Bulk(material.clone())))?;
    let planar = Source::Planar { waveguide: wg, process: ProcessId::HV, period: planar_period };
    let bulk = Source::Bulk { material, process: ProcessId::HV, period: bulk_period };
    let pump = PumpConfig::default();
    let nl = NonlinearConfig::default();
    let q = PowerOptions::default();
    let mut r = Report::default();

    let grid = e(uniform_grid(0.803, 0.811, 41))?;
    let (pp, _) = e(spectral_sweep(&planar, &pump, &nl, &grid, &q))?;
    let (bp, _) = e(spectral_sweep(&bulk, &pump, &nl, &grid, &q))?;
    r.within("spectral_ratio", pp.value / bp.value, 5.0, 20.0);

    let angles = e(uniform_grid(0.0, 1f64.to_radians(), 101))?;
    let (pa, _) = e(angular_sweep(&planar, &pump, &nl, ls, &angles, &q))?;
    let (ba, _) = e(angular_sweep(&bulk, &pump, &nl, ls, &angles, &q))?;
    r.within("angular_ratio", pa.value / ba.value, 100.0, 1000.0);

    for (name, src, at) in [("planar", &planar, pp.x), ("bulk", &bulk, bp.x)] {
        let base = e(power_density(src, &pump, &nl, at, &q))?;
        let more_power = e(power_density(src, &PumpConfig { power: 3.0 * pump.power, ..pump }, &nl, at, &q))?;
        let more_d = e(power_density(src, &pump, &NonlinearConfig { d_eff: 2.0 * nl.d_eff, ..nl }, at, &q))?;
        let lin_p = (more_power / (3.0 * base) - 1.0).abs();
        let lin_d = (more_d / (4.0 * base) - 1.0).abs();
        r.check(lin_p < 1e-9, format!("{name} P_p linearity {lin_p:.1e} < 1e-9"));
        r.check(lin_d < 1e-9, format!("{name} d_eff^2 linearity {lin_d:.1e} < 1e-9"));
    }

    let waists = [50.0, 100.0, 200.0];
    for (name, src, at, expected) in [("planar", &planar, pp.x, 1.0), ("bulk", &bulk, bp.x, 2.0)] {
        let values: Result<Vec<f64>, String> =
            waists.iter().map(|&w| e(power_density(src, &PumpConfig { waist: w, ..pump }, &nl, at, &q))).collect();
        let slope = e(planar_spdc::power::log_slope(&waists, &values?))?;
        r.within(&format!("{name}_W_p_exponent"), slope, expected - 0.05, expected + 0.05);
    }
    Ok(r)
}

fn criterion_7() -> Outcome {
    let wg = Waveguide::ktp_default();
    let processes = [
        ProcessSpec { id: ProcessId::HV, grating: e(GratingSpec::new(9.0, 0.0))? },
        ProcessSpec { id: ProcessId::VH, grating: e(GratingSpec::new(9.08, 0.0))? },
    ];
    let params = StateParams::default();
    let a = e(angular_spectra(&Medium::Planar(wg), &processes, 0.405, 0.807, (-0.6f64).to_radians(), 0.6f64.to_radians(), 1201, &params))?;
    let mut r = Report::default();
    r.check(!a.coincident, "curves distinct");
    // The principal crossings: highest common level on each side of the axis.
    let best = |positive: bool| {
        a.intersections
            .iter()
            .filter(|c| (c.theta_s > 0.0) == positive)
            .max_by(|x, y| x.level.total_cmp(&y.level))
            .map(|c| c.theta_s.to_degrees())
    };
    match (best(false), best(true)) {
        (Some(neg), Some(pos)) => {
            r.within("crossing_neg_deg", neg, -0.15, -0.05);
            r.within("crossing_pos_deg", pos, 0.05, 0.15);
        }
        _ => r.check(false, "crossings on both sides"),
    }
    let lim = 0.4f64.to_radians();
    let inside: Vec<usize> = (0..a.theta_s.len()).filter(|&k| a.theta_s[k].abs() <= lim).collect();
    let overlap: f64 = inside.iter().map(|&k| a.p1[k].min(a.p2[k])).sum::<f64>() / inside.len() as f64;
    r.check(overlap > 0.0, format!("mean min(p1,p2) over +-0.4 deg = {overlap:.4} > 0"));
    Ok(r)
}

fn criterion_8() -> Outcome {
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let lambda: Vec<f64> = (0..200).map(|k| 0.80 + 5e-5 * k as f64).collect();
    let mut bounds_ok = true;
    let mut worst_prop: f64 = 0.0;
    for _ in 0..1000 {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            let centre = rng.gen_range(0.801..0.809);
            let width = rng.gen_range(1e-4..3e-3);
            let slope = rng.gen_range(-5e3..5e3);
            lambda
                .iter()
                .map(|l| {
                    let amp = (-((l - centre) / width).powi(2)).exp() + 0.05 * rng.gen_range(0.0..1.0);
                    Complex64::from_polar(amp, slope * (l - centre) + rng.gen_range(-0.3..0.3))
                })
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let value = e(concurrence_samples(&lambda, &a, &b, None))?;
        bounds_ok &= (0.0..=1.0).contains(&value);
        let c = Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI));
        let scaled: Vec<Complex64> = a.iter().map(|z| z * c).collect();
        // E = 2|c|/(1+|c|²) for b = c·a; equal magnitudes give exactly 1.
        let unit = c / c.norm();
        let rotated: Vec<Complex64> = a.iter().map(|z| z * unit).collect();
        worst_prop = worst_prop.max((e(concurrence_samples(&lambda, &a, &rotated, None))? - 1.0).abs());
        let expected = 2.0 * c.norm() / (1.0 + c.norm_sqr());
        worst_prop = worst_prop.max((e(concurrence_samples(&lambda, &a, &scaled, None))? - expected).abs());
    }
    r.check(bounds_ok, "E in [0,1] on 1000 random spectra");
    r.check(worst_prop < 1e-9, format!("proportional spectra error {worst_prop:.1e} < 1e-9"));

    let mut phi_max: f64 = 0.0;
    for _ in 0..100_000 {
        let b = Betas { pump: rng.gen_range(20.0..40.0), signal: rng.gen_range(10.0..20.0), idler: rng.gen_range(10.0..20.0) };
        let g = GratingSpec { period: rng.gen_range(1.0..50.0), slant: rng.gen_range(-0.3..0.3) };
        let geom = EmissionGeometry::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let m = mismatch_betas(&g, &geom, &b);
        let reference = if rng.gen_bool(0.5) { PhaseReference::Entrance } else { PhaseReference::Center };
        phi_max = phi_max.max(phi_of(&m, rng.gen_range(1.0..500.0), rng.gen_range(10.0..5e4), reference).norm());
    }
    r.check(phi_max <= 1.0, format!("max |phi|={phi_max:.6} <= 1 on 1e5 samples"));

    let cfg = RunConfig::default();
    let (wg, d, processes) = design_processes(&cfg)?;
    let w = e(cfg.window(&d))?;
    let run = |order: usize| {
        let params = StateParams { order, ..cfg.state_params() };
        e(spectrum(&wg, &processes, &[w, w], cfg.pump_wl(), 0.805, 0.809, 41, &params))
    };
    let (lo, hi) = (run(16)?, run(32)?);
    let mut rel: f64 = 0.0;
    for (a, b) in [(&lo.f_hv, &hi.f_hv), (&lo.f_vh, &hi.f_vh)] {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        rel = rel.max(diff / scale);
    }
    r.check(rel < 1e-3, format!("order 16 vs 32 rel diff {rel:.1e} < 1e-3"));

    let dir = e(tempfile::tempdir())?;
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let status = e(Command::new(env!("CARGO_BIN_EXE_planar-spdc"))
            .args(["spectrum", "--set", "spectrum.points=60", "--out"])
            .arg(&out)
            .output())?;
        if !status.status.success() {
            return Err(format!("spectrum run failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push((e(std::fs::read(out.join("spectrum.csv")))?, e(std::fs::read(out.join("spectrum.json")))?));
    }
    r.check(outputs[0] == outputs[1], "byte-identical reruns");
    Ok(r)
}

fn main() {
    // libtest-style flags (e.g. from `cargo test -- --nocapture`) are ignored.
    let results = [
        run(1, "mode solver vs brute-force scan", Duration::from_secs(1), criterion_1),
        run(2, "dual-grating design point", Duration::from_secs(10), criterion_2),
        run(3, "collinear periods", Duration::from_secs(5), criterion_3),
        run(4, "spectral overlap and bandwidth", Duration::from_secs(60), criterion_4),
        run(5, "tunability at 406 nm", Duration::from_secs(120), criterion_5),
        run(6, "power enhancement and scaling", Duration::from_secs(300), criterion_6),
        run(7, "hyper-entanglement crossings", Duration::from_secs(60), criterion_7),
        run(8, "property suite", Duration::from_secs(120), criterion_8),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
