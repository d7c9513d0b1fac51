//! Invariant suite behind `domino validate`.
//!
//! Each check compares library output with an oracle written here, so a
//! regression in the library cannot also move the reference.

use std::f64::consts::PI;

use domino_core::bessel::{bessel_j, bessel_jn, i_pow};
use domino_core::chain::{flip_probability, green_finite, green_infinite, green_matrix, ChainSpec};
use domino_core::field::check_epsilon0;
use domino_core::fit::{fit_decay, Model};
use domino_core::propagator::{ft_density, FourierRoute, Propagator};
use domino_core::quadrature::GaussLegendre;
use domino_core::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{build_model, discretized_for, Setup};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const GROUPS: [&str; 6] = ["bessel", "chain", "field", "resolvent", "propagator", "fit"];

/// Accepts the short group names and the module names.
pub fn group_of(name: &str) -> Option<&'static str> {
    Some(match name {
        "bessel" | "special_functions" => "bessel",
        "chain" | "chain_dynamics" => "chain",
        "field" | "field_model" => "field",
        "resolvent" | "resolvent_engine" => "resolvent",
        "propagator" => "propagator",
        "fit" => "fit",
        _ => return None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: &'static str,
    /// The measured quantity; compared against `tolerance` as described.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

struct Suite {
    group: &'static str,
    checks: Vec<Check>,
}

impl Suite {
    /// Passes when `value < tol`.
    fn below(&mut self, name: &'static str, value: domino_core::Result<f64>, tol: f64, detail: &str) {
        self.record(name, value, tol, detail, |v| v < tol);
    }

    /// Passes when `value > tol`.
    fn above(&mut self, name: &'static str, value: domino_core::Result<f64>, tol: f64, detail: &str) {
        self.record(name, value, tol, detail, |v| v > tol);
    }

    fn record(
        &mut self,
        name: &'static str,
        value: domino_core::Result<f64>,
        tol: f64,
        detail: &str,
        ok: impl Fn(f64) -> bool,
    ) {
        let (value, passed, detail) = match value {
            Ok(v) => (Some(v), v.is_finite() && ok(v), detail.to_string()),
            Err(e) => (None, false, format!("{detail}; error: {e}")),
        };
        self.checks.push(Check { group: self.group, name, value, tolerance: tol, passed, detail });
    }
}

fn max_of(it: impl IntoIterator<Item = domino_core::Result<f64>>) -> domino_core::Result<f64> {
    let mut m: f64 = 0.0;
    for v in it {
        m = m.max(v?);
    }
    Ok(m)
}

/// Power series of `J_n`, accurate for small arguments.
fn series_j(n: u32, x: f64) -> f64 {
    let h = x / 2.0;
    let mut term = (1..=n).fold(1.0, |acc, k| acc * h / k as f64);
    let mut sum = term;
    for k in 1..400u32 {
        term *= -h * h / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_checks(s: &mut Suite) {
    s.below(
        "series_oracle",
        max_of((0..8u32).flat_map(|n| {
            [0.3, 1.0, 2.0, 5.0, 9.5].map(move |x| bessel_j(n as i64, x).map(|v| (v - series_j(n, x)).abs()))
        })),
        1e-11,
        "max |J_n(x) - power series|, n < 8, x <= 9.5",
    );
    s.below(
        "three_term_recurrence",
        max_of((1..25i64).flat_map(|n| {
            [0.5, 3.0, 17.3, 50.0].map(move |x| -> domino_core::Result<f64> {
                let l = bessel_j(n - 1, x)? + bessel_j(n + 1, x)?;
                Ok((l - 2.0 * n as f64 / x * bessel_j(n, x)?).abs())
            })
        })),
        1e-12,
        "max |J_{n-1} + J_{n+1} - (2n/x) J_n|",
    );
    s.below("decay_above_argument", bessel_j(60, 10.0).map(f64::abs), 1e-14, "|J_60(10)|");
    s.below(
        "finite_sum_endpoints",
        max_of([(400usize, 3i64, 2.0f64), (50, 0, 7.0), (25, 5, 1.5)].map(|(big, n, x)| {
            let v = bessel_jn(big, n, x)?;
            let ends = i_pow(n)
                * 0.5
                * (Complex64::from_polar(1.0, -x)
                    + Complex64::from_polar(1.0, x) * if n % 2 == 0 { 1.0 } else { -1.0 });
            let trap = v + ends / (big as f64 + 1.0);
            Ok((trap - Complex64::new(bessel_j(n, x)?, 0.0)).norm())
        })),
        1e-12,
        "finite sum plus trapezoid endpoints vs J_n",
    );
}

/// `sum_j v_j(n) v_j(m) exp(-i x_j t)` from the sine eigenvectors.
fn eigen_oracle(len: usize, n: usize, m: usize, t: f64) -> Complex64 {
    let h = PI / (len as f64 + 1.0);
    (1..=len)
        .map(|j| {
            let th = j as f64 * h;
            let w = 2.0 / (len as f64 + 1.0) * (th * (n + 1) as f64).sin() * (th * (m + 1) as f64).sin();
            Complex64::from_polar(w, -2.0 * th.cos() * t)
        })
        .sum()
}

fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    c
}

fn chain_checks(s: &mut Suite) {
    let sizes = [2usize, 4, 8, 16];
    let times = [0.5, 2.0, 10.0, 50.0];
    let mut oracle = Ok(0.0f64);
    let mut unitary = Ok(0.0f64);
    let mut group = Ok(0.0f64);
    for &len in &sizes {
        let spec = ChainSpec::new(len).unwrap();
        for &t in &times {
            oracle = oracle.and_then(|acc| {
                let mut m = acc;
                for a in 0..len {
                    for b in 0..len {
                        m = m.max((green_finite(&spec, a, b, t)? - eigen_oracle(len, a, b, t)).norm());
                    }
                }
                Ok(m)
            });
            unitary = unitary.and_then(|acc| {
                let g = green_matrix(&spec, t)?;
                let gh: Vec<Complex64> = (0..len * len).map(|k| g[(k % len) * len + k / len].conj()).collect();
                let p = matmul(&g, &gh, len);
                Ok((0..len * len).fold(acc, |m, k| {
                    let id = if k / len == k % len { 1.0 } else { 0.0 };
                    m.max((p[k] - id).norm())
                }))
            });
            group = group.and_then(|acc| {
                let lhs = green_matrix(&spec, t + 1.25)?;
                let rhs = matmul(&green_matrix(&spec, t)?, &green_matrix(&spec, 1.25)?, len);
                Ok(lhs.iter().zip(&rhs).fold(acc, |m, (x, y)| m.max((x - y).norm())))
            });
        }
    }
    s.below("green_vs_eigen_oracle", oracle, 1e-12, "N in {2,4,8,16}, t in {0.5,2,10,50}");
    s.below("unitarity", unitary, 1e-10, "max |G G^H - I|");
    s.below("group_law", group, 1e-10, "max |G(t+s) - G(t) G(s)|");
    s.above(
        "flip_at_t500",
        (1..=6).map(|j| flip_probability(j, 500.0)).try_fold(1.0f64, |m, v| v.map(|v| m.min(v))),
        0.999,
        "min_j<=6 flip_probability(j, 500)",
    );
    s.below(
        "infinite_row_norm",
        max_of([(1usize, 5.0f64), (3, 5.0), (2, 20.0)].map(|(m, t)| {
            let mut sum = 0.0;
            for n in 1..=200 {
                sum += green_infinite(n, m, t)?.norm_sqr();
            }
            Ok((sum - 1.0).abs())
        })),
        1e-10,
        "|sum_n |<n|U(t)|m>|^2 - 1| with 200 sites",
    );
}

fn field_checks(s: &mut Suite, setup: &Setup) {
    let f = &setup.field;
    let g = &setup.grid;
    s.below("grid_mass", Ok((g.mass() - 1.0).abs()), 1e-8, "|sum w rho - 1|");
    s.below("grid_tail", Ok(g.tail_mass()), 1e-10, "mass above eps_max");
    // independent composite rule on uniform panels
    let gl = GaussLegendre::new(20);
    let lo = f.params().threshold();
    let hi = g.upper();
    let panels = 4000;
    let w = (hi - lo) / panels as f64;
    let total: f64 = (0..panels).map(|k| gl.integrate(lo + k as f64 * w, lo + (k + 1) as f64 * w, |e| f.rho(e))).sum();
    s.below("rho_normalization", Ok((total + g.tail_mass() - 1.0).abs()), 1e-8, "uniform-panel integral of rho");
    let mut cum: f64 = 0.0;
    let mut acc = 0.0;
    for k in 0..panels / 4 {
        acc += gl.integrate(lo + k as f64 * w, lo + (k + 1) as f64 * w, |e| f.rho(e));
        if k % 50 == 49 {
            cum = cum.max((f.cumulative(lo + (k + 1) as f64 * w) - acc).abs());
        }
    }
    s.below("cumulative_consistency", Ok(cum), 1e-10, "cumulative(eps) vs integral of rho");
    let moment: f64 =
        (0..panels).map(|k| gl.integrate(lo + k as f64 * w, lo + (k + 1) as f64 * w, |e| f.rho(e) / (e - lo))).sum();
    s.below(
        "threshold_moment",
        Ok((f.threshold_moment() - moment).abs() / moment),
        1e-8,
        "relative error of int rho/(eps - a b^2)",
    );
    let adm = check_epsilon0(f);
    s.above("eps0_margin", Ok(f.params().eps0 - adm.strong_bound), 0.0, "eps0 minus the strong bound");
}

fn resolvent_checks(s: &mut Suite, setup: &Setup) {
    let res = &setup.resolvent;
    let f = &setup.field;
    let eps0 = f.params().eps0;
    let (lo, hi) = (res.p_threshold(), res.p_upper().min(res.p_threshold() + 40.0));
    let pts: Vec<f64> = (0..200).map(|k| lo - 1.0 + (hi - lo + 1.0) * (k as f64 + 0.37) / 200.0).collect();
    s.below(
        "plemelj_imaginary",
        Ok(pts.iter().map(|&p| (res.f_sigma_boundary(p).im + PI * f.rho(p + eps0)).abs()).fold(0.0, f64::max)),
        1e-10,
        "max |Im f_sigma(p) + pi rho(p + eps0)| on 200 points",
    );
    // Richardson in nu on a few points inside the continuum
    let probe = [lo + 0.3, lo + 1.1, 0.0, 2.5, lo + 6.0];
    let mut worst: f64 = 0.0;
    for &p in &probe {
        let at = |nu: f64| res.f_sigma_nn(Complex64::new(p, -nu));
        let (a, b) = (at(1e-3), at(5e-4));
        let extrap = 2.0 * b - a;
        worst = worst.max((extrap - res.f_sigma_boundary(p)).norm());
    }
    s.below("plemelj_small_nu", Ok(worst), 1e-6, "Richardson limit of f_sigma(p - i nu) vs boundary value");
    let last = res.len() - 1;
    let mut cancel: domino_core::Result<f64> = Ok(0.0);
    let mut residue: f64 = f64::INFINITY;
    for j in 0..res.len() {
        let x = res.eigen().eigenvalues()[j];
        let p = x + 1e-7;
        let xi = Complex64::new(p, -1e-8);
        cancel = cancel.and_then(|m| Ok(m.max(((p - x) * res.big_f(last, last, xi)?).norm())));
        if let Ok(fv) = res.f_mn(last, last, xi) {
            residue = residue.min(((p - x) * fv).norm());
        }
    }
    s.below("pole_cancellation", cancel, 1e-6, "max_j |(p - x_j) F_{N-1,N-1}(p - 1e-8 i)|, p = x_j + 1e-7");
    s.above("bare_residues", Ok(residue), 0.01, "min_j |(p - x_j) f_{N-1,N-1}|");
    let xi = Complex64::new(0.37, -0.2);
    s.below(
        "F_symmetry",
        max_of(
            (0..res.len())
                .flat_map(|n| (0..res.len()).map(move |m| Ok((res.big_f(n, m, xi)? - res.big_f(m, n, xi)?).norm()))),
        ),
        1e-13,
        "max |F_nm - F_mn| at 0.37 - 0.2i",
    );
    s.below(
        "far_field",
        res.f_mn(0, 0, Complex64::new(1e6, -1.0)).map(|v| (v * Complex64::new(1e6, -1.0) + 1.0).norm()),
        1e-9,
        "|xi f_00(xi) + 1| at xi = 1e6 - i",
    );
    let pf = res.preflight();
    s.above(
        "preflight_scan_min",
        Ok(if pf.passed { pf.scan.min } else { 0.0 }),
        1e-3,
        "denominator scan minimum when the pre-flight passes",
    );
}

fn propagator_checks(s: &mut Suite, setup: &Setup, cfg: &RunConfig) -> CliResult<()> {
    let res = &setup.resolvent;
    let n = res.len();
    let route = FourierRoute::new(res, cfg.fourier)?;
    s.below(
        "fourier_spectral_weights",
        max_of((0..n).flat_map(|a| {
            let route = &route;
            (0..n).map(move |b| Ok((route.spectral_weight(a, b)? - if a == b { 1.0 } else { 0.0 }).abs()))
        })),
        1e-4,
        "max |int -(1/pi) Im F_nm - delta_nm|",
    );
    // independent integration of the Fourier density
    let gl = GaussLegendre::new(10);
    let mut breaks = vec![res.p_threshold()];
    while *breaks.last().unwrap() < res.p_upper() {
        let x = *breaks.last().unwrap();
        let step = if x.abs() < 3.0 { 0.004 } else { 0.04 };
        breaks.push((x + step).min(res.p_upper()));
    }
    let density = (0..n)
        .map(|m| {
            let mut acc = 0.0;
            for w in breaks.windows(2) {
                for (u, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let p = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * u;
                    acc += 0.5 * (w[1] - w[0]) * wt * ft_density(res, m, m, p)?;
                }
            }
            Ok((acc / (2.0 * PI).sqrt() - 1.0).abs())
        })
        .collect::<domino_core::Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    s.below("ft_density_normalization", density, 1e-4, "max_m |(2 pi)^-1/2 int ft_density(m, m)| - 1");
    s.below("survival_at_zero", route.survival(0, 0.0).map(|v| (v - 1.0).abs()), 1e-6, "|survival(0) - 1|");
    let disc = discretized_for(cfg, setup, 100.0)?;
    let m = cfg.radiate.initial;
    let mut worst = Ok(0.0f64);
    for k in 0..=200 {
        let t = 0.5 * k as f64;
        worst = worst.and_then(|w: f64| {
            let a = route.column(m, t)?;
            let b = disc.column(m, t)?;
            Ok(a.iter().zip(&b).fold(w, |w, (x, y)| w.max((x - y).norm())))
        });
    }
    s.below("route_agreement", worst, 1e-3, "max |A_fourier - A_discretized| on [0, 100]");
    s.above(
        "emission_grows",
        (|| Ok(route.emission_probability(m, 200.0)? - route.emission_probability(m, 1.0)?))(),
        0.0,
        "emission(200) - emission(1)",
    );
    Ok(())
}

fn fit_checks(s: &mut Suite) {
    let t: Vec<f64> = (1..=200).map(|k| k as f64).collect();
    let y: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-4.5)).collect();
    s.below(
        "power_law_recovery",
        fit_decay(&t, &y, (5.0, 200.0)).map(|r| (r.power.exponent - 4.5).abs()),
        1e-10,
        "|k - 4.5| for y = 3 t^-4.5",
    );
    let y: Vec<f64> = t.iter().map(|t| 2.0 * (-0.1 * t).exp()).collect();
    s.below(
        "exponential_recovery",
        fit_decay(&t, &y, (1.0, 200.0)).map(|r| {
            let pref = matches!(r.preferred, Model::Exponential | Model::ExpFloor);
            if pref {
                (r.exponential.log_slope + 0.1).abs()
            } else {
                f64::INFINITY
            }
        }),
        1e-10,
        "|s + 0.1| for y = 2 exp(-0.1 t), preferred model exponential",
    );
}

pub fn run_checks(cfg: &RunConfig, only: &[&'static str]) -> CliResult<Vec<Check>> {
    let wanted = |g: &str| only.is_empty() || only.contains(&g);
    let mut out = Vec::new();
    let needs_model = ["field", "resolvent", "propagator"].iter().any(|g| wanted(g));
    let setup = if needs_model { Some(build_model(cfg)?) } else { None };
    for g in GROUPS {
        if !wanted(g) {
            continue;
        }
        let mut s = Suite { group: g, checks: Vec::new() };
        match g {
            "bessel" => bessel_checks(&mut s),
            "chain" => chain_checks(&mut s),
            "field" => field_checks(&mut s, setup.as_ref().unwrap()),
            "resolvent" => resolvent_checks(&mut s, setup.as_ref().unwrap()),
            "propagator" => propagator_checks(&mut s, setup.as_ref().unwrap(), cfg)?,
            _ => fit_checks(&mut s),
        }
        out.extend(s.checks);
    }
    Ok(out)
}

pub fn summary(checks: &[Check]) -> Value {
    let failed = checks.iter().filter(|c| !c.passed).count();
    json!({ "passed": failed == 0, "total": checks.len(), "failed": failed, "checks": checks })
}

/// Resolves `--only` names; unknown names are usage errors.
pub fn parse_only(names: &[String]) -> CliResult<Vec<&'static str>> {
    names
        .iter()
        .map(|n| {
            group_of(n)
                .ok_or_else(|| CliError::Config(format!("unknown check group {n:?}; expected one of {GROUPS:?}")))
        })
        .collect()
}
