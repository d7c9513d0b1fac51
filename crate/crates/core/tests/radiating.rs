//! End-to-end behavior of the radiating chain: resolvent boundary values,
//! pole cancellation and the two time-evolution routes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use domino_core::chain::{green_finite, ChainSpec};
use domino_core::field::{
    build_energy_grid, default_eps0, EnergyGrid, Field, FieldParams, FormFactorProfile, GridSpec,
};
use domino_core::propagator::{
    auto_mode_count, build_discretized, Discretized, FourierRoute, FourierSettings, Propagator,
};
use domino_core::resolvent::Resolvent;
use domino_core::Complex64;

const PROFILE: FormFactorProfile = FormFactorProfile { alpha: 0.25, delta: 0.7 };

fn params(v: f64) -> FieldParams {
    let eps0 = default_eps0(1.0, 1.0, v, PROFILE, 0.5).unwrap();
    FieldParams { a: 1.0, b: 1.0, eps0, v, profile: PROFILE }
}

fn resolvent_for(v: f64) -> Resolvent {
    let field = Field::new(params(v)).unwrap();
    let grid = build_energy_grid(&field, &GridSpec::default()).unwrap();
    Resolvent::new(ChainSpec::new(6).unwrap(), field, grid)
}

fn shared() -> &'static Resolvent {
    static RES: OnceLock<Resolvent> = OnceLock::new();
    RES.get_or_init(|| resolvent_for(1.1))
}

fn discretized(v: f64, k: usize) -> Discretized {
    let p = params(v);
    let field = Field::new(p).unwrap();
    let grid: EnergyGrid = build_energy_grid(&field, &GridSpec { node_count: k, ..Default::default() }).unwrap();
    build_discretized(ChainSpec::new(6).unwrap(), &p, &grid).unwrap()
}

#[test]
fn plemelj_extrapolation() {
    let res = shared();
    // f(p - i nu) is smooth in nu; Neville extrapolation to nu = 0
    let nus = [1e-1, 1e-2, 1e-3, 1e-4];
    for p in [-2.9, -1.0, 0.3, 1.7, 5.0] {
        let mut t: Vec<Complex64> = nus.iter().map(|&nu| res.f_sigma_nn(Complex64::new(p, -nu))).collect();
        for level in 1..nus.len() {
            for i in (level..nus.len()).rev() {
                let (a, b) = (nus[i - level], nus[i]);
                t[i] = (t[i] * a - t[i - 1] * b) / (a - b);
            }
        }
        let limit = t[nus.len() - 1];
        let boundary = res.f_sigma_boundary(p);
        assert!((limit - boundary).norm() < 1e-6, "p={p}: {limit} vs {boundary}");
    }
}

#[test]
fn imaginary_part_is_the_density() {
    let res = shared();
    let eps0 = res.field().params().eps0;
    for k in 0..400 {
        let p = res.p_threshold() - 0.5 + k as f64 * 0.1;
        let want = -PI * res.field().rho(p + eps0);
        assert!((res.f_sigma_boundary(p).im - want).abs() < 1e-10, "p={p}");
    }
}

#[test]
fn poles_cancel_in_coupled_resolvent() {
    let res = shared();
    let last = 5;
    for (j, &x) in res.eigen().eigenvalues().iter().enumerate() {
        for eta in [1e-5, 1e-7] {
            let xi = Complex64::new(x + eta, -1e-8);
            let big = res.big_f(last, last, xi).unwrap();
            assert!((eta * big).norm() < 1e-6 * (eta / 1e-7), "j={j} eta={eta}");
            let bare = (Complex64::new(eta, -1e-8)) * res.f_mn(last, last, xi).unwrap();
            let a = res.eigen().weight(j, last, last);
            assert!((bare - a).norm() < 1e-4, "j={j}");
            assert!(a.abs() > 0.01);
        }
    }
}

#[test]
fn residue_identity() {
    let eig = shared().eigen();
    let last = 5;
    for r in 0..6 {
        for n in 0..6 {
            for m in 0..6 {
                let lhs = eig.weight(r, n, m) * eig.weight(r, last, last);
                let rhs = eig.weight(r, n, last) * eig.weight(r, last, m);
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn coupled_resolvent_is_symmetric() {
    let res = shared();
    for xi in [Complex64::new(-1.3, -0.05), Complex64::new(0.4, -1.0), Complex64::new(2.2, 0.0)] {
        for n in 0..6 {
            for m in 0..n {
                let d = res.big_f(n, m, xi).unwrap() - res.big_f(m, n, xi).unwrap();
                assert!(d.norm() < 1e-13, "{xi} {n} {m}");
            }
        }
    }
}

#[test]
fn far_field_asymptotics() {
    let res = shared();
    let xi = Complex64::new(1e6, -1.0);
    for n in 0..6usize {
        for m in 0..6usize {
            // xi f = -(1 + H/xi + ...), H the nearest-neighbour adjacency
            let id = if n == m { 1.0 } else { 0.0 };
            let h = if n.abs_diff(m) == 1 { 1.0 } else { 0.0 };
            let want = -(id + h / xi);
            assert!((xi * res.f_mn(n, m, xi).unwrap() - want).norm() < 1e-11, "{n} {m}");
        }
    }
    // f_sigma(xi) = -sum w rho / (xi + eps0 - eps); expand to first order in 1/xi
    let xi = Complex64::new(-1e4, 0.0);
    let g = res.grid();
    let mean: f64 = g.nodes().iter().zip(g.weights()).zip(g.rho()).map(|((e, w), r)| e * w * r).sum();
    let eps0 = res.field().params().eps0;
    let fs = res.f_sigma(xi).unwrap();
    let want = -(1.0 + (mean - eps0) / xi.re) / xi.re;
    assert!(fs.im.abs() < 1e-15);
    assert!(((fs.re - want) / want).abs() < 1e-6, "{fs} vs {want}");
}

#[test]
fn preflight_regression() {
    let pf = shared().preflight();
    assert!(pf.passed && pf.admissibility.strong);
    assert!(pf.scan.roots.is_empty());
    assert!((pf.scan.min - 0.5209).abs() < 1e-3, "{}", pf.scan.min);
}

#[test]
fn too_small_eps0_fails_preflight() {
    let mut p = params(1.1);
    p.eps0 = 1.1;
    let field = Field::new(p).unwrap();
    let grid = build_energy_grid(&field, &GridSpec::default()).unwrap();
    let pf = Resolvent::new(ChainSpec::new(6).unwrap(), field, grid).preflight();
    assert!(!pf.passed);
    assert!(pf.diagnosis().is_some());
}

#[test]
fn decoupled_modes_keep_chain_spectrum() {
    let d = discretized(0.0, 2000);
    let chain = shared().eigen().eigenvalues();
    let mut vals = d.eigenvalues();
    assert_eq!(vals.len(), d.dimension());
    vals.sort_by(|a, b| a.total_cmp(b));
    for &x in chain {
        assert!(vals.iter().any(|&v| (v - x).abs() < 1e-12), "{x}");
    }
    let mut modes = d.mode_energies().to_vec();
    modes.extend_from_slice(chain);
    modes.sort_by(|a, b| a.total_cmp(b));
    for (a, b) in vals.iter().zip(&modes) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn weak_coupling_approaches_bare_chain() {
    let spec = ChainSpec::new(6).unwrap();
    let mut errs = Vec::new();
    for v in [0.5, 0.1, 0.01] {
        let d = discretized(v, 2000);
        let err = (0..6)
            .map(|n| (d.amplitude(n, 0, 10.0).unwrap() - green_finite(&spec, n, 0, 10.0).unwrap().conj()).norm())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 1e-5, "{errs:?}");
}

#[test]
fn routes_agree_and_refine() {
    let res = shared();
    let f = FourierRoute::new(res, FourierSettings::default()).unwrap();
    let range = res.grid().upper() - res.grid().lower();
    let k = auto_mode_count(60.0, range, 2.5);
    let d1 = discretized(1.1, k);
    let d2 = discretized(1.1, 2 * k);
    assert!(d1.recurrence_time() > 120.0);
    for t in [0.0, 3.0, 17.5, 41.0, 60.0] {
        let (a, b, c) = (f.column(0, t).unwrap(), d1.column(0, t).unwrap(), d2.column(0, t).unwrap());
        for n in 0..6 {
            assert!((a[n] - b[n]).norm() < 1e-6, "t={t} n={n}");
            assert!((b[n] - c[n]).norm() < 1e-6, "t={t} n={n}");
        }
    }
}

#[test]
fn amplitudes_are_symmetric_and_time_reversible() {
    let res = shared();
    let f = FourierRoute::new(res, FourierSettings::default()).unwrap();
    let d = discretized(1.1, 3000);
    for t in [0.7, 12.0, 33.3] {
        for n in 0..6 {
            for m in 0..6 {
                for p in [&f as &dyn Propagator, &d] {
                    let a = p.amplitude(n, m, t).unwrap();
                    assert!((a - p.amplitude(m, n, t).unwrap()).norm() < 1e-12);
                    assert!((a.conj() - p.amplitude(n, m, -t).unwrap()).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn spectral_weights_and_emission() {
    let res = shared();
    let f = FourierRoute::new(res, FourierSettings::default()).unwrap();
    for n in 0..6 {
        for m in 0..6 {
            let want = if n == m { 1.0 } else { 0.0 };
            assert!((f.spectral_weight(n, m).unwrap() - want).abs() < 1e-4);
        }
    }
    assert!(f.emission_probability(0, 0.0).unwrap().abs() < 1e-12);
    assert!(f.emission_probability(0, 200.0).unwrap() > f.emission_probability(0, 1.0).unwrap());
    assert!(f.amplitude(0, 0, 501.0).is_err());
}

#[test]
fn uncoupled_fourier_route_is_the_chain() {
    let res = resolvent_for(0.0);
    let f = FourierRoute::new(&res, FourierSettings::default()).unwrap();
    let spec = ChainSpec::new(6).unwrap();
    for t in [0.0, 5.0, 80.0] {
        assert!(f.emission_probability(2, t).unwrap().abs() < 1e-12);
        let g = green_finite(&spec, 1, 2, t).unwrap().conj();
        assert!((f.amplitude(1, 2, t).unwrap() - g).norm() < 1e-15);
    }
}
