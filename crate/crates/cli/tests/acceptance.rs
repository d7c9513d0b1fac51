//! Acceptance suite: one PASS/FAIL line per criterion, exact tolerances.
//!
//! Runs without the libtest harness so the lines come out in order and
//! unbuffered; the process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use domino_cli::commands::{build_model, discretized_for, Setup};
use domino_cli::RunConfig;
use domino_core::bessel::Sommerfeld;
use domino_core::chain::{flip_deficit_with, green_finite, ChainSpec};
use domino_core::fit::fit_decay;
use domino_core::propagator::{ft_density, FourierRoute, Propagator};
use domino_core::quadrature::GaussLegendre;
use domino_core::Complex64;
use nalgebra::{DMatrix, SymmetricEigen};

struct Verdict {
    pass: bool,
    measured: String,
}

fn verdict(pass: bool, measured: String) -> Verdict {
    Verdict { pass, measured }
}

fn setup() -> (RunConfig, Setup) {
    let cfg = RunConfig::defaults().expect("default config");
    let model = build_model(&cfg).expect("default model");
    (cfg, model)
}

/// Dense `exp(-itH)` for the path graph.
fn dense_propagator(n: usize, t: f64) -> Vec<Complex64> {
    let h = DMatrix::<f64>::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
    let eig = SymmetricEigen::new(h);
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] += eig.eigenvectors[(a, k)] * eig.eigenvectors[(b, k)] * ph;
            }
        }
    }
    g
}

fn finite_chain() -> Verdict {
    let mut err: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for n in [2usize, 4, 8, 16] {
        let spec = ChainSpec::new(n).unwrap();
        for t in [0.5, 2.0, 10.0, 50.0] {
            let oracle = dense_propagator(n, t);
            let mut g = vec![Complex64::new(0.0, 0.0); n * n];
            for a in 0..n {
                for b in 0..n {
                    g[a * n + b] = green_finite(&spec, a, b, t).unwrap();
                    err = err.max((g[a * n + b] - oracle[a * n + b]).norm());
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let s: Complex64 = (0..n).map(|k| g[a * n + k] * g[b * n + k].conj()).sum();
                    let id = if a == b { 1.0 } else { 0.0 };
                    unit = unit.max((s - id).norm());
                }
            }
        }
    }
    verdict(
        err < 1e-12 && unit < 1e-10,
        format!("oracle error {err:.2e} (< 1e-12), unitarity defect {unit:.2e} (< 1e-10)"),
    )
}

fn infinite_chain() -> Verdict {
    let bessel = Sommerfeld::default();
    let t: Vec<f64> = (0..=4500).map(|k| 50.0 + 0.1 * k as f64).collect();
    let y: Vec<f64> = t.iter().map(|&t| flip_deficit_with(&bessel, 4, t).unwrap()).collect();
    match fit_decay(&t, &y, (50.0, 500.0)) {
        Ok(r) => {
            let k = r.power.exponent;
            verdict((k - 3.0).abs() <= 0.1, format!("exponent {k:.4} (3.0 +- 0.1), {} points", r.usable))
        }
        Err(e) => verdict(false, format!("fit failed: {e}")),
    }
}

fn plemelj(model: &Setup) -> Verdict {
    let res = &model.resolvent;
    let f = &model.field;
    let eps0 = f.params().eps0;
    let nodes = res.grid().nodes();
    let stride = nodes.len() / 200;
    let pts: Vec<f64> = (0..200).map(|k| nodes[k * stride] - eps0).collect();
    let im = pts.iter().map(|&p| (res.f_sigma_boundary(p).im + PI * f.rho(p + eps0)).abs()).fold(0.0, f64::max);
    // Neville extrapolation of f_sigma(p - i nu) to nu = 0
    let nus = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut ext: f64 = 0.0;
    for &p in pts.iter().step_by(10) {
        let mut t: Vec<Complex64> = nus.iter().map(|&nu| res.f_sigma_nn(Complex64::new(p, -nu))).collect();
        for level in 1..nus.len() {
            for i in (level..nus.len()).rev() {
                let (a, b) = (nus[i - level], nus[i]);
                t[i] = (t[i] * a - t[i - 1] * b) / (a - b);
            }
        }
        ext = ext.max((t[nus.len() - 1] - res.f_sigma_boundary(p)).norm());
    }
    verdict(
        im < 1e-10 && ext < 1e-6,
        format!("max |Im f_sigma + pi rho| {im:.2e} (< 1e-10) on 200 points, nu -> 0 limit {ext:.2e} (< 1e-6) on 20"),
    )
}

fn pole_cancellation(model: &Setup) -> Verdict {
    let res = &model.resolvent;
    let last = res.len() - 1;
    let eig = res.eigen();
    let mut coupled: f64 = 0.0;
    let mut residue_gap: f64 = 0.0;
    let mut smallest: f64 = f64::INFINITY;
    for (j, &x) in eig.eigenvalues().iter().enumerate() {
        let p = x + 1e-7;
        let xi = Complex64::new(p, -1e-8);
        coupled = coupled.max(((p - x) * res.big_f(last, last, xi).unwrap()).norm());
        let a = eig.weight(j, last, last);
        // (p - x_j) f -> a_j as p -> x_j
        let bare = (p - x) * res.f_mn(last, last, Complex64::new(p, 0.0)).unwrap();
        residue_gap = residue_gap.max((bare - a).norm());
        smallest = smallest.min(a.abs());
    }
    let mut identity: f64 = 0.0;
    for r in 0..res.len() {
        for n in 0..res.len() {
            for m in 0..res.len() {
                let d =
                    eig.weight(r, n, m) * eig.weight(r, last, last) - eig.weight(r, n, last) * eig.weight(r, last, m);
                identity = identity.max(d.abs());
            }
        }
    }
    verdict(
        coupled < 1e-6 && smallest > 0.01 && residue_gap < 1e-5 && identity < 1e-14,
        format!(
            "|(p-x_j)F| {coupled:.2e} (< 1e-6), min |a_j| {smallest:.3} (> 0.01, bare limit gap {residue_gap:.1e}), residue identity {identity:.1e} (< 1e-14)"
        ),
    )
}

fn routes(cfg: &RunConfig, model: &Setup) -> Verdict {
    let f = FourierRoute::new(&model.resolvent, cfg.fourier).unwrap();
    let d = discretized_for(cfg, model, 100.0).unwrap();
    let k = d.dimension() - cfg.chain.len();
    let n = cfg.chain.len();
    let mut worst: f64 = 0.0;
    for step in 0..=1000 {
        let t = 0.1 * step as f64;
        for m in 0..n {
            let (a, b) = (f.column(m, t).unwrap(), d.column(m, t).unwrap());
            worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).norm()));
        }
    }
    verdict(
        worst < 1e-3 && k >= 2000,
        format!("max |A_fourier - A_discretized| {worst:.2e} (< 1e-3) over t in [0, 100], K = {k}"),
    )
}

fn super_polynomial(cfg: &RunConfig, model: &Setup) -> Verdict {
    let f = FourierRoute::new(&model.resolvent, cfg.fourier).unwrap();
    let t: Vec<f64> = (0..=480).map(|k| 0.5 * k as f64).collect();
    let y: Vec<f64> = t.iter().map(|&t| 1.0 - f.emission_probability(0, t).unwrap()).collect();
    let windows = [(20.0, 60.0), (60.0, 120.0), (120.0, 240.0)];
    let mut ks = Vec::new();
    for w in windows {
        match fit_decay(&t, &y, w) {
            Ok(r) => ks.push(r.power.exponent),
            Err(e) => return verdict(false, format!("fit on {w:?} failed: {e}")),
        }
    }
    let whole = match fit_decay(&t, &y, (20.0, 240.0)) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("fit on [20, 240] failed: {e}")),
    };
    let increasing = ks.windows(2).all(|w| w[1] > w[0]);
    let pass = increasing && ks[2] > 6.0 && whole.exp_floor.rss < whole.power.rss;
    verdict(
        pass,
        format!(
            "exponents {:.2} < {:.2} < {:.2} (last > 6); on [20, 240] exp+floor rss {:.3e} vs power-law rss {:.3e}",
            ks[0], ks[1], ks[2], whole.exp_floor.rss, whole.power.rss
        ),
    )
}

/// Scan minimum at the default parameters, recorded from a reference run.
const SCAN_MIN_REGRESSION: f64 = 0.52093;

fn admissibility(cfg: &RunConfig, model: &Setup) -> Verdict {
    let pf = model.resolvent.preflight();
    let ok_default =
        pf.passed && pf.admissibility.strong && pf.scan.min > 0.0 && (pf.scan.min - SCAN_MIN_REGRESSION).abs() < 1e-4;
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    let eps0 = cfg.params.a * cfg.params.b * cfg.params.b + 0.1;
    std::fs::write(&config, format!("eps0 = {eps0}\n")).unwrap();
    let out = dir.path().join("radiate.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_domino"))
        .args(["radiate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap_or_default())
            .unwrap_or_default();
    let reported = report["result"]["preflight"]["scan"]["min"].as_f64();
    let code = status.status.code();
    verdict(
        ok_default && code == Some(3) && reported.is_some() && !out.exists(),
        format!(
            "default scan min {:.5} (regression {SCAN_MIN_REGRESSION}); eps0 = ab^2 + 0.1 -> exit {:?}, reported min {:?}",
            pf.scan.min, code, reported
        ),
    )
}

fn normalizations(model: &Setup) -> Verdict {
    let res = &model.resolvent;
    let f = &model.field;
    let gl = GaussLegendre::new(10);
    let lo = f.params().threshold();
    let hi = model.grid.upper();
    let panels = 5000;
    let w = (hi - lo) / panels as f64;
    let mass: f64 = (0..panels).map(|k| gl.integrate(lo + k as f64 * w, lo + (k + 1) as f64 * w, |e| f.rho(e))).sum();
    let mass_err = (mass + model.grid.tail_mass() - 1.0).abs();

    let mut breaks = vec![res.p_threshold()];
    while *breaks.last().unwrap() < res.p_upper() {
        let x = *breaks.last().unwrap();
        breaks.push((x + if x.abs() < 3.0 { 0.004 } else { 0.04 }).min(res.p_upper()));
    }
    let n = res.len();
    let mut im_f = vec![0.0; n];
    let mut ft = [0.0; 2];
    for b in breaks.windows(2) {
        let (c, h) = (0.5 * (b[0] + b[1]), 0.5 * (b[1] - b[0]));
        for (u, wt) in gl.nodes.iter().zip(&gl.weights) {
            let p = c + h * u;
            for (k, slot) in im_f.iter_mut().enumerate() {
                *slot += h * wt * res.im_f_boundary(k, k, p).unwrap();
            }
            ft[0] += h * wt * ft_density(res, 0, 0, p).unwrap();
            ft[1] += h * wt * ft_density(res, n - 1, n - 1, p).unwrap();
        }
    }
    let im_err = im_f.iter().map(|v| (-v / PI - 1.0).abs()).fold(0.0, f64::max);
    let ft_err = ft.iter().map(|v| (v / (2.0 * PI).sqrt() - 1.0).abs()).fold(0.0, f64::max);
    verdict(
        mass_err < 1e-8 && ft_err < 1e-4 && im_err < 1e-4,
        format!("|int rho - 1| {mass_err:.1e} (< 1e-8), ft_density {ft_err:.1e} (< 1e-4), -(1/pi) int Im F_nn {im_err:.1e} (< 1e-4)"),
    )
}

fn run(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    let pass = v.pass && took <= limit;
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {title}: {} in {:.2} s (limit {} s)", v.measured, took.as_secs_f64(), limit.as_secs());
    pass
}

fn main() {
    let (cfg, model) = setup();
    let secs = Duration::from_secs;
    let results = [
        run(1, "finite-chain Green function", secs(5), finite_chain),
        run(2, "infinite-chain t^-3 law", secs(10), infinite_chain),
        run(3, "Sokhotski-Plemelj boundary values", secs(5), || plemelj(&model)),
        run(4, "pole cancellation", secs(5), || pole_cancellation(&model)),
        run(5, "route cross-validation", secs(120), || routes(&cfg, &model)),
        run(6, "super-polynomial decay", secs(300), || super_polynomial(&cfg, &model)),
        run(7, "admissibility scan", secs(60), || admissibility(&cfg, &model)),
        run(8, "normalizations", secs(60), || normalizations(&model)),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
