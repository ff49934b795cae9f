use planar_spdc::design::{solve_dual_grating, DesignInput};
use planar_spdc::dispersion::MaterialModel;
use planar_spdc::medium::{Medium, Waveguide};
use planar_spdc::phasematch::{mismatch_betas, Betas, EmissionGeometry, GratingSpec, ProcessId, ProcessSpec};
use planar_spdc::state::{angular_spectra, spectrum, CollectionWindow, StateParams};

#[test]
fn sinc_only_width_matches_analytic_width() {
    let wg = Waveguide::ktp_default();
    let d = solve_dual_grating(&DesignInput::default(), &wg).unwrap();
    // Point-like window and a vanishing waist leave sinc²(ΔkL/2) alone.
    let w = CollectionWindow::new(d.theta_s, d.theta_i, 1e-8).unwrap();
    let params = StateParams { pump_waist: 1e-6, order: 4, ..StateParams::default() };
    let js = spectrum(&wg, &d.processes(), &[w, w], 0.405, 0.8055, 0.8085, 1201, &params).unwrap();
    let medium = Medium::Planar(wg);
    let geom = EmissionGeometry::new(d.theta_s, d.theta_i);
    for (p, grating) in [(ProcessId::HV, d.grating1), (ProcessId::VH, d.grating2)] {
        let dk = |l: f64| mismatch_betas(&grating, &geom, &Betas::resolve(&medium, p, 0.405, l).unwrap()).dk_eff;
        let h = 1e-5;
        let slope = (dk(0.807 + h) - dk(0.807 - h)) / (2.0 * h);
        // sinc²(u) = 1/2 at u = 1.391557.
        let analytic = 4.0 * 1.391_557_4 / (params.length * slope.abs());
        let numeric = js.fwhm_nm(p).unwrap() * 1e-3;
        assert!((numeric / analytic - 1.0).abs() < 0.01, "{p}: {numeric} vs {analytic} µm");
    }
}

#[test]
fn peak_is_stable_under_grid_halving() {
    let wg = Waveguide::ktp_default();
    let d = solve_dual_grating(&DesignInput::default(), &wg).unwrap();
    let w = CollectionWindow::new(d.theta_s, d.theta_i, 0.034f64.to_radians()).unwrap();
    let params = StateParams::default();
    let coarse = spectrum(&wg, &d.processes(), &[w, w], 0.405, 0.803, 0.811, 201, &params).unwrap();
    let fine = spectrum(&wg, &d.processes(), &[w, w], 0.405, 0.803, 0.811, 401, &params).unwrap();
    for p in [ProcessId::HV, ProcessId::VH] {
        assert!((coarse.peak(p) - fine.peak(p)).abs() < coarse.step(), "{p}");
    }
}

fn hyper_processes(p1: f64, p2: f64) -> [ProcessSpec; 2] {
    [
        ProcessSpec { id: ProcessId::HV, grating: GratingSpec::new(p1, 0.0).unwrap() },
        ProcessSpec { id: ProcessId::VH, grating: GratingSpec::new(p2, 0.0).unwrap() },
    ]
}

fn principal_crossings(n: usize) -> (f64, f64) {
    let a = angular_spectra(
        &Medium::Planar(Waveguide::ktp_default()),
        &hyper_processes(9.0, 9.08),
        0.405,
        0.807,
        (-0.6f64).to_radians(),
        0.6f64.to_radians(),
        n,
        &StateParams::default(),
    )
    .unwrap();
    let best = |positive: bool| {
        a.intersections.iter().filter(|c| (c.theta_s > 0.0) == positive).max_by(|x, y| x.level.total_cmp(&y.level)).unwrap().theta_s
    };
    (best(false).to_degrees(), best(true).to_degrees())
}

#[test]
fn crossings_are_stable_under_grid_halving() {
    let (n0, p0) = principal_crossings(601);
    let (n1, p1) = principal_crossings(1201);
    assert!((n0 - n1).abs() < 0.01 && (p0 - p1).abs() < 0.01, "{n0},{p0} vs {n1},{p1}");
    assert!((n1 + p1).abs() < 1e-9);
}

#[test]
fn identical_processes_in_degenerate_medium_coincide() {
    let flat = MaterialModel::constant("flat", 1.8, [0.3, 2.0]).unwrap();
    let a = angular_spectra(&Medium::Bulk(flat), &hyper_processes(9.0, 9.0), 0.405, 0.81, -0.01, 0.01, 101, &StateParams::default()).unwrap();
    assert!(a.coincident);
    assert_eq!(a.intersections.len(), a.theta_s.len());
}
