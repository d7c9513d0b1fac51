//! The experiment subcommands. Each `compute_*` returns the CSV table and
//! the JSON payload; [`Outcome::write`] puts them on disk.

use std::path::Path;

use domino_core::bessel::Sommerfeld;
use domino_core::chain::flip_deficit_with;
use domino_core::field::{build_energy_grid, EnergyGrid, Field, GridSpec};
use domino_core::fit::{bootstrap_exponent, fit_decay, FitReport, Model};
use domino_core::propagator::{auto_mode_count, build_discretized, Discretized, FourierRoute, Propagator};
use domino_core::resolvent::{Preflight, Resolvent};
use domino_core::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{json_path, num, report, write_json, Csv};

/// Output of one subcommand.
pub struct Outcome {
    pub command: &'static str,
    pub csv: Csv,
    pub report: Value,
}

impl Outcome {
    /// Writes `out` and its `.json` companion.
    pub fn write(&self, cfg: &RunConfig, out: &Path) -> CliResult<()> {
        self.csv.write(out, &cfg.snapshot)?;
        write_json(&json_path(out), &report(self.command, &cfg.snapshot, self.report.clone()))
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::PowerLaw => "power_law",
        Model::Exponential => "exponential",
        Model::ExpFloor => "exp_floor",
    }
}

pub fn fit_json(r: &FitReport, bootstrap: Option<(f64, f64)>) -> Value {
    json!({
        "window": [r.window.0, r.window.1],
        "usable_points": r.usable,
        "power_law": {
            "exponent": num(r.power.exponent),
            "ci95": [num(r.power.ci95.0), num(r.power.ci95.1)],
            "bootstrap_ci95": bootstrap.map(|b| json!([num(b.0), num(b.1)])),
            "rss": num(r.power.rss),
        },
        "exponential": { "log_slope": num(r.exponential.log_slope), "rss": num(r.exponential.rss) },
        "exp_floor": {
            "log_slope": num(r.exp_floor.log_slope),
            "amplitude": num(r.exp_floor.amplitude),
            "floor": num(r.exp_floor.floor),
            "rss": num(r.exp_floor.rss),
        },
        "preferred": model_name(r.preferred),
    })
}

/// Fit plus seeded bootstrap, or the reason no fit was possible.
fn fit_entry(t: &[f64], y: &[f64], window: (f64, f64), resamples: usize, rng: &mut ChaCha8Rng) -> Value {
    match fit_decay(t, y, window) {
        Ok(r) => {
            let boot = if resamples > 0 { bootstrap_exponent(t, y, window, rng, resamples).ok() } else { None };
            fit_json(&r, boot)
        }
        Err(e) => json!({ "window": [window.0, window.1], "error": e.to_string() }),
    }
}

/// Field, quadrature grid and resolvent for a configuration.
pub struct Setup {
    pub field: Field,
    pub grid: EnergyGrid,
    pub resolvent: Resolvent,
}

pub fn build_model(cfg: &RunConfig) -> CliResult<Setup> {
    let field = Field::new(cfg.params)?;
    let grid = build_energy_grid(&field, &cfg.grid)?;
    let resolvent = Resolvent::new(cfg.chain, field.clone(), grid.clone());
    Ok(Setup { field, grid, resolvent })
}

pub fn preflight_json(pf: &Preflight) -> Value {
    json!({
        "passed": pf.passed,
        "diagnosis": pf.diagnosis(),
        "admissibility": {
            "basic": pf.admissibility.basic,
            "strong": pf.admissibility.strong,
            "threshold_moment": num(pf.admissibility.integral),
            "strong_bound": num(pf.admissibility.strong_bound),
        },
        "scan": {
            "min": num(pf.scan.min),
            "argmin": num(pf.scan.argmin),
            "bound_state_roots": pf.scan.roots,
            "points": pf.scan.points,
            "p_range": [num(pf.scan.p_lo), num(pf.scan.p_hi)],
        },
        "min_abs_f_sigma_at_eigenvalues": num(pf.sigma_at_poles),
    })
}

/// Runs the pre-flight; on failure writes the report alone and stops.
fn gate(cfg: &RunConfig, command: &'static str, model: &Setup, out: Option<&Path>) -> CliResult<Value> {
    let pf = model.resolvent.preflight();
    let js = preflight_json(&pf);
    if pf.passed {
        return Ok(js);
    }
    if let Some(out) = out {
        write_json(&json_path(out), &report(command, &cfg.snapshot, json!({ "preflight": js })))?;
    }
    Err(CliError::Preflight(format!(
        "{} (scan minimum {:e} at p = {}, eps0 = {})",
        pf.diagnosis().unwrap_or("unknown"),
        pf.scan.min,
        pf.scan.argmin,
        cfg.params.eps0
    )))
}

// ---- infinite ----

pub fn compute_infinite(cfg: &RunConfig) -> CliResult<Outcome> {
    let inf = &cfg.infinite;
    if inf.sites.is_empty() {
        return Err(CliError::Config("infinite.sites is empty".into()));
    }
    if let Some(&j) = inf.sites.iter().find(|&&j| j == 0) {
        return Err(CliError::Config(format!("infinite.sites are one based, got {j}")));
    }
    let times = inf.time.points();
    let bessel = Sommerfeld::default();
    let mut columns = vec!["t".to_string()];
    for j in &inf.sites {
        columns.push(format!("flip_{j}"));
        columns.push(format!("deficit_{j}"));
    }
    let mut csv = Csv::new("infinite", columns);
    csv.note("flip_j = probability that spin j (one based) has flipped; deficit_j = 1 - flip_j without cancellation");
    let mut deficits = vec![Vec::with_capacity(times.len()); inf.sites.len()];
    for &t in &times {
        let mut row = vec![t];
        for (k, &j) in inf.sites.iter().enumerate() {
            let d = flip_deficit_with(&bessel, j, t)?;
            row.push((1.0 - d).clamp(0.0, 1.0));
            row.push(d);
            deficits[k].push(d);
        }
        csv.push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fits: Vec<Value> = inf
        .sites
        .iter()
        .zip(&deficits)
        .map(|(&j, d)| {
            json!({ "site": j, "fit": fit_entry(&times, d, inf.fit_window, cfg.radiate.bootstrap, &mut rng) })
        })
        .collect();
    Ok(Outcome { command: "infinite", csv, report: json!({ "series": "1 - flip_probability", "fits": fits }) })
}

// ---- resolvent ----

pub fn compute_resolvent(cfg: &RunConfig, out: Option<&Path>) -> CliResult<Outcome> {
    let model = build_model(cfg)?;
    let pre = gate(cfg, "resolvent", &model, out)?;
    let res = &model.resolvent;
    let rs = cfg.resolvent;
    let lo = rs.p_min.unwrap_or(res.p_threshold() - 1.0);
    let hi = rs.p_max.unwrap_or(4.0);
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Config(format!("resolvent p range [{lo}, {hi}] is empty")));
    }
    let h = (hi - lo) / (rs.samples - 1) as f64;
    let mut csv = Csv::new(
        "resolvent",
        ["p", "f_re", "f_im", "f_sigma_re", "f_sigma_im", "F_re", "F_im"].iter().map(|s| s.to_string()).collect(),
    );
    csv.note(format!("matrix element (n, m) = ({}, {}) zero based; boundary values at p - i0", rs.n, rs.m));
    let mut skipped = Vec::new();
    for k in 0..rs.samples {
        let p = lo + k as f64 * h;
        match res.samples(rs.n, rs.m, &[p]) {
            Ok(s) => {
                let [f, sig, big] = s[0];
                csv.push(vec![p, f.value.re, f.value.im, sig.value.re, sig.value.im, big.value.re, big.value.im]);
            }
            // exactly on a chain eigenvalue f_mn itself is infinite
            Err(domino_core::Error::Pole { .. }) => skipped.push(p),
            Err(e) => return Err(e.into()),
        }
    }
    let weight = res.grid().mass();
    Ok(Outcome {
        command: "resolvent",
        csv,
        report: json!({
            "preflight": pre,
            "p_threshold": res.p_threshold(),
            "grid": { "nodes": res.grid().len(), "eps_max": res.grid().upper(), "mass": weight },
            "skipped_at_poles": skipped,
        }),
    })
}

// ---- radiate ----

/// Energy grid for the discretized route: either the configured number of
/// modes or enough that the recurrence time stays beyond the window.
pub fn discretized_for(cfg: &RunConfig, model: &Setup, t_max: f64) -> CliResult<Discretized> {
    let range = model.grid.upper() - model.grid.lower();
    let k = cfg.modes.unwrap_or_else(|| auto_mode_count(t_max, range, cfg.safety));
    let grid = build_energy_grid(&model.field, &GridSpec { node_count: k, ..cfg.grid })?;
    let d = build_discretized(cfg.chain, &cfg.params, &grid)?;
    if t_max > 0.5 * d.recurrence_time() {
        return Err(CliError::Config(format!(
            "time.t_max = {t_max} exceeds half the recurrence time {} of {} modes; raise discretized.modes",
            d.recurrence_time(),
            grid.len()
        )));
    }
    Ok(d)
}

pub fn compute_radiate(cfg: &RunConfig, out: Option<&Path>) -> CliResult<Outcome> {
    let model = build_model(cfg)?;
    let pre = gate(cfg, "radiate", &model, out)?;
    let times = cfg.time.points();
    let m = cfg.radiate.initial;
    let fourier = if cfg.route.fourier() {
        if cfg.time.t_max > cfg.fourier.t_max {
            return Err(CliError::Config(format!(
                "time.t_max = {} exceeds fourier.t_limit = {}",
                cfg.time.t_max, cfg.fourier.t_max
            )));
        }
        Some(FourierRoute::new(&model.resolvent, cfg.fourier)?)
    } else {
        None
    };
    let disc = if cfg.route.discretized() { Some(discretized_for(cfg, &model, cfg.time.t_max)?) } else { None };

    let mut columns = vec!["t".to_string()];
    if fourier.is_some() {
        columns.push("emission_fourier".into());
        columns.push("survival_fourier".into());
    }
    if disc.is_some() {
        columns.push("emission_discretized".into());
        columns.push("survival_discretized".into());
    }
    let both = fourier.is_some() && disc.is_some();
    if both {
        columns.push("agreement".into());
    }
    let mut csv = Csv::new("radiate", columns);
    csv.note(format!("initial site {m} (zero based); survival = sum_n |A_nm(t)|^2, emission = 1 - survival"));
    if both {
        csv.note("agreement = max_n |A_nm fourier - A_nm discretized|");
    }

    let mut survival = Vec::with_capacity(times.len());
    let mut agreement: f64 = 0.0;
    for &t in &times {
        let mut row = vec![t];
        let mut cols: Vec<Vec<Complex64>> = Vec::new();
        if let Some(f) = &fourier {
            cols.push(f.column(m, t)?);
        }
        if let Some(d) = &disc {
            cols.push(d.column(m, t)?);
        }
        for c in &cols {
            let s: f64 = c.iter().map(|a| a.norm_sqr()).sum();
            if !(-1e-6..=1.0 + 1e-6).contains(&s) {
                return Err(CliError::Numerical(format!("survival {s} out of range at t = {t}")));
            }
            let s = s.clamp(0.0, 1.0);
            row.push(1.0 - s);
            row.push(s);
        }
        survival.push(row[2]);
        if both {
            let a = cols[0].iter().zip(&cols[1]).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            agreement = agreement.max(a);
            row.push(a);
        }
        csv.push(row);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fits: Vec<Value> =
        cfg.radiate.windows.iter().map(|&w| fit_entry(&times, &survival, w, cfg.radiate.bootstrap, &mut rng)).collect();
    let mut body = json!({
        "preflight": pre,
        "fit_series": if fourier.is_some() { "survival_fourier" } else { "survival_discretized" },
        "fits": fits,
    });
    if let Some(f) = &fourier {
        let n = cfg.chain.len();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((f.spectral_weight(a, b)? - target).abs());
            }
        }
        body["fourier"] = json!({ "panels": f.panel_count(), "spectral_weight_defect": worst });
    }
    if let Some(d) = &disc {
        body["discretized"] =
            json!({ "modes": d.dimension() - cfg.chain.len(), "recurrence_time": d.recurrence_time() });
    }
    if both {
        body["route_agreement_max"] = json!(agreement);
    }
    Ok(Outcome { command: "radiate", csv, report: body })
}
