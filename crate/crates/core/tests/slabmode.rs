use std::f64::consts::PI;

use planar_spdc::dispersion::Polarization;
use planar_spdc::medium::Waveguide;
use planar_spdc::slabmode::{effective_indices, fundamental_mode, mode_count, overlap_integral, PolClass, SlabGeometry, ZGrid};

/// sin(κd)(κ² − p_s p_c γ_s γ_c) − cos(κd) κ (p_s γ_s + p_c γ_c): zero
/// exactly at guided-mode indices, with no poles.
fn determinant(g: &SlabGeometry, wavelength: f64, pol: PolClass, n: f64) -> f64 {
    let k0 = 2.0 * PI / wavelength;
    let kappa = k0 * (g.n_film.powi(2) - n * n).sqrt();
    let gs = k0 * (n * n - g.n_substrate.powi(2)).sqrt();
    let gc = k0 * (n * n - g.n_cover.powi(2)).sqrt();
    let (ps, pc) = match pol {
        PolClass::TE => (1.0, 1.0),
        PolClass::TM => ((g.n_film / g.n_substrate).powi(2), (g.n_film / g.n_cover).powi(2)),
    };
    let t = kappa * g.depth;
    t.sin() * (kappa * kappa - ps * pc * gs * gc) - t.cos() * kappa * (ps * gs + pc * gc)
}

/// All roots from a 1e-6 sign-change scan, bisected; highest index first.
fn brute_roots(g: &SlabGeometry, wavelength: f64, pol: PolClass) -> Vec<f64> {
    let f = |n: f64| determinant(g, wavelength, pol, n);
    let (lo, hi) = (g.n_substrate + 1e-9, g.n_film - 1e-9);
    let steps = ((hi - lo) / 1e-6).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev = (hi, f(hi));
    for k in 1..=steps {
        let x = (hi - 1e-6 * k as f64).max(lo);
        let fx = f(x);
        if fx.signum() != prev.1.signum() {
            let (mut a, mut b) = (x, prev.0);
            let fa = fx;
            while b - a > 1e-15 {
                let m = 0.5 * (a + b);
                if f(m).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
                if m == a && m == b {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (x, fx);
    }
    roots
}

fn geometries() -> Vec<(SlabGeometry, f64)> {
    let wg = Waveguide::ktp_default();
    let mut out = Vec::new();
    for (pol, wl) in [(Polarization::H, 0.405), (Polarization::V, 0.405), (Polarization::H, 0.807), (Polarization::V, 0.813)] {
        out.push((wg.geometry(pol, wl).unwrap(), wl));
    }
    out.push((SlabGeometry { depth: 8.0, n_film: 1.80, n_substrate: 1.77, n_cover: 1.0 }, 0.6));
    out.push((SlabGeometry { depth: 5.0, n_film: 2.2, n_substrate: 2.14, n_cover: 1.45 }, 1.55));
    out
}

#[test]
fn every_root_matches_brute_force_scan() {
    for (g, wl) in geometries() {
        for pol in [PolClass::TE, PolClass::TM] {
            let solved = effective_indices(&g, wl, pol).unwrap();
            let oracle = brute_roots(&g, wl, pol);
            assert_eq!(solved.len(), oracle.len(), "{g:?} {pol} at {wl}");
            for (a, b) in solved.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{g:?} {pol}: {a} vs {b}");
            }
        }
    }
}

/// Mode count from the asymmetric-slab V parameter.
fn v_count(g: &SlabGeometry, wl: f64, pol: PolClass) -> usize {
    let na2 = g.n_film.powi(2) - g.n_substrate.powi(2);
    let v = 2.0 * PI / wl * g.depth * na2.sqrt();
    let a = (g.n_substrate.powi(2) - g.n_cover.powi(2)) / na2;
    let weight = match pol {
        PolClass::TE => 1.0,
        PolClass::TM => (g.n_film / g.n_cover).powi(2),
    };
    let cutoff = (weight * a.sqrt()).atan();
    (0..).take_while(|m| v > *m as f64 * PI + cutoff).count()
}

#[test]
fn mode_count_matches_v_parameter_formula() {
    for (g, wl) in geometries() {
        for pol in [PolClass::TE, PolClass::TM] {
            assert_eq!(mode_count(&g, wl, pol).unwrap(), v_count(&g, wl, pol), "{g:?} {pol} at {wl}");
        }
    }
    let thin = SlabGeometry { depth: 0.05, n_film: 1.86, n_substrate: 1.84, n_cover: 1.0 };
    assert_eq!(v_count(&thin, 0.81, PolClass::TE), 0);
    assert_eq!(mode_count(&thin, 0.81, PolClass::TE).unwrap(), 0);
}

#[test]
fn te_and_tm_differ_on_asymmetric_slab() {
    let wg = Waveguide::ktp_default();
    for wl in [0.405, 0.807] {
        let g = wg.geometry(Polarization::H, wl).unwrap();
        let te = effective_indices(&g, wl, PolClass::TE).unwrap()[0];
        let tm = effective_indices(&g, wl, PolClass::TM).unwrap()[0];
        assert!(te > tm + 1e-6, "TE {te} TM {tm}");
    }
}

#[test]
fn normalization_and_overlap_survive_grid_refinement() {
    let wg = Waveguide::ktp_default();
    let coarse = wg.grid();
    let fine = coarse.refined();
    let modes = |grid: ZGrid| {
        let p = fundamental_mode(&wg.geometry(Polarization::H, 0.405).unwrap(), 0.405, PolClass::TE, grid).unwrap();
        let s = fundamental_mode(&wg.geometry(Polarization::H, 0.807).unwrap(), 0.807, PolClass::TE, grid).unwrap();
        let i = fundamental_mode(&wg.geometry(Polarization::V, 0.81302).unwrap(), 0.81302, PolClass::TM, grid).unwrap();
        (p, s, i)
    };
    let (p0, s0, i0) = modes(coarse);
    let (p1, s1, i1) = modes(fine);
    for m in [&p0, &s0, &i0, &p1, &s1, &i1] {
        assert!((m.norm() - 1.0).abs() < 1e-8);
    }
    for (a, b) in [(&p0, &p1), (&s0, &s1), (&i0, &i1)] {
        let peak = a.profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let drift = (0..a.profile.len()).map(|k| (a.profile[k] - b.profile[2 * k]).abs()).fold(0.0, f64::max);
        // The film edges fall between nodes, so Simpson's rule is only
        // second order there; the normalized profiles agree to ~1.5e-8.
        assert!(drift / peak < 1e-7, "profile drift {drift:e}");
    }
    let iz0 = overlap_integral(&p0, &s0, &i0).unwrap();
    let iz1 = overlap_integral(&p1, &s1, &i1).unwrap();
    assert!((iz0 / iz1 - 1.0).abs() < 1e-6, "{iz0} vs {iz1}");
}
