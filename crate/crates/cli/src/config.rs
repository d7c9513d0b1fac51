//! TOML run configuration.
//!
//! Every key is optional. Missing keys take built-in defaults, and the
//! parameter snapshot written into each output marks them as such: the
//! defaults are implementation choices, not values fixed by the model.

use std::fmt::Display;
use std::path::Path;

use domino_core::chain::{ChainSpec, Convention};
use domino_core::field::{default_eps0, FieldParams, FormFactorProfile, GridSpec};
use domino_core::propagator::FourierSettings;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RouteSel {
    Fourier,
    Discretized,
    Both,
}

impl RouteSel {
    pub fn fourier(self) -> bool {
        matches!(self, RouteSel::Fourier | RouteSel::Both)
    }

    pub fn discretized(self) -> bool {
        matches!(self, RouteSel::Discretized | RouteSel::Both)
    }

    fn name(self) -> &'static str {
        match self {
            RouteSel::Fourier => "fourier",
            RouteSel::Discretized => "discretized",
            RouteSel::Both => "both",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nodes: Option<usize>,
    eps_max_tail: Option<f64>,
    cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_min: Option<f64>,
    t_max: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFourier {
    panel_width: Option<f64>,
    outer_width: Option<f64>,
    core: Option<f64>,
    t_limit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscretized {
    modes: Option<usize>,
    safety: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInfinite {
    sites: Option<Vec<usize>>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    samples: Option<usize>,
    fit_window: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadiate {
    initial: Option<usize>,
    windows: Option<Vec<(f64, f64)>>,
    bootstrap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResolvent {
    n: Option<usize>,
    m: Option<usize>,
    p_min: Option<f64>,
    p_max: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: Option<usize>,
    a: Option<f64>,
    b: Option<f64>,
    v: Option<f64>,
    alpha: Option<f64>,
    delta: Option<f64>,
    eps0: Option<f64>,
    margin: Option<f64>,
    seed: Option<u64>,
    index_base: Option<u8>,
    route: Option<RouteSel>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    fourier: RawFourier,
    #[serde(default)]
    discretized: RawDiscretized,
    #[serde(default)]
    infinite: RawInfinite,
    #[serde(default)]
    radiate: RawRadiate,
    #[serde(default)]
    resolvent: RawResolvent,
}

/// One line of the parameter snapshot.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub default: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.t_min];
        }
        let h = (self.t_max - self.t_min) / (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.t_min + k as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteSettings {
    /// One-based sites of the semi-infinite chain.
    pub sites: Vec<usize>,
    pub time: TimeGrid,
    pub fit_window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiateSettings {
    /// Zero-based initial site.
    pub initial: usize,
    pub windows: Vec<(f64, f64)>,
    pub bootstrap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSettings {
    /// Zero-based matrix indices.
    pub n: usize,
    pub m: usize,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub chain: ChainSpec,
    pub params: FieldParams,
    pub margin: f64,
    pub grid: GridSpec,
    pub time: TimeGrid,
    pub route: RouteSel,
    pub seed: u64,
    pub fourier: FourierSettings,
    /// `None` picks the mode count from the time window.
    pub modes: Option<usize>,
    pub safety: f64,
    pub infinite: InfiniteSettings,
    pub radiate: RadiateSettings,
    pub resolvent: ResolventSettings,
    pub snapshot: Vec<Entry>,
}

struct Snap(Vec<Entry>);

impl Snap {
    fn take<T: Display + Clone>(&mut self, key: &str, given: Option<T>, default: T) -> T {
        let is_default = given.is_none();
        let v = given.unwrap_or(default);
        self.0.push(Entry { key: key.into(), value: v.to_string(), default: is_default });
        v
    }

    fn take_with<T>(&mut self, key: &str, given: Option<T>, default: T, show: impl Fn(&T) -> String) -> T {
        let is_default = given.is_none();
        let v = given.unwrap_or(default);
        self.0.push(Entry { key: key.into(), value: show(&v), default: is_default });
        v
    }
}

fn show_pairs(w: &[(f64, f64)]) -> String {
    let parts: Vec<String> = w.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
    format!("[{}]", parts.join(", "))
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn check_time(name: &str, t: &TimeGrid) -> CliResult<()> {
    require(t.t_min.is_finite() && t.t_max.is_finite() && t.t_min >= 0.0 && t.t_max > t.t_min, || {
        format!("{name}: need 0 <= t_min < t_max, got [{}, {}]", t.t_min, t.t_max)
    })?;
    require(t.samples >= 2, || format!("{name}.samples must be at least 2"))
}

impl RunConfig {
    /// Built-in defaults only.
    pub fn defaults() -> CliResult<Self> {
        Self::from_raw(RawConfig::default())
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn from_raw(raw: RawConfig) -> CliResult<Self> {
        let mut s = Snap(Vec::new());
        let len = s.take("n", raw.n, 6usize);
        let base = s.take("index_base", raw.index_base, 0u8);
        let convention = match base {
            0 => Convention::ZeroBased,
            1 => Convention::OneBased,
            _ => return Err(CliError::Config(format!("index_base must be 0 or 1, got {base}"))),
        };
        let chain = ChainSpec::with_convention(len, convention)?;
        let a = s.take("a", raw.a, 1.0);
        let b = s.take("b", raw.b, 1.0);
        let v = s.take("v", raw.v, 1.1);
        let alpha = s.take("alpha", raw.alpha, 0.25);
        let delta = s.take("delta", raw.delta, 0.7);
        let margin = s.take("margin", raw.margin, 0.5);
        let profile = FormFactorProfile { alpha, delta };
        // validate before the automatic eps0 touches the form factor
        FieldParams { a, b, eps0: 1.0, v, profile }.validate()?;
        let eps0 = match raw.eps0 {
            Some(e) => s.take("eps0", Some(e), e),
            None => {
                let e = default_eps0(a, b, v, profile, margin)?;
                s.0.push(Entry { key: "eps0".into(), value: format!("{e} (strong bound + margin)"), default: true });
                e
            }
        };
        let params = FieldParams { a, b, eps0, v, profile };
        params.validate()?;

        let gd = GridSpec::default();
        let grid = GridSpec {
            node_count: s.take("grid.nodes", raw.grid.nodes, gd.node_count),
            tail_tol: s.take("grid.eps_max_tail", raw.grid.eps_max_tail, gd.tail_tol),
            cap_offset: s.take("grid.cap", raw.grid.cap, gd.cap_offset),
        };
        require(grid.node_count >= 16, || "grid.nodes must be at least 16".into())?;
        require(grid.tail_tol > 0.0 && grid.tail_tol < 1e-3, || "grid.eps_max_tail must lie in (0, 1e-3)".into())?;
        require(grid.cap_offset > 0.0 && grid.cap_offset.is_finite(), || "grid.cap must be positive".into())?;

        let time = TimeGrid {
            t_min: s.take("time.t_min", raw.time.t_min, 0.0),
            t_max: s.take("time.t_max", raw.time.t_max, 240.0),
            samples: s.take("time.samples", raw.time.samples, 481),
        };
        check_time("time", &time)?;
        let route = s.take_with("route", raw.route, RouteSel::Fourier, |r| r.name().into());
        let seed = s.take("seed", raw.seed, 1);

        let fd = FourierSettings::default();
        let fourier = FourierSettings {
            panel_width: s.take("fourier.panel_width", raw.fourier.panel_width, fd.panel_width),
            outer_width: s.take("fourier.outer_width", raw.fourier.outer_width, fd.outer_width),
            core: s.take("fourier.core", raw.fourier.core, fd.core),
            t_max: s.take("fourier.t_limit", raw.fourier.t_limit, fd.t_max),
        };
        let modes = s.take_with("discretized.modes", raw.discretized.modes, 0, |m| {
            if *m == 0 {
                "auto".into()
            } else {
                m.to_string()
            }
        });
        let safety = s.take("discretized.safety", raw.discretized.safety, 2.5);
        require(safety >= 1.0, || "discretized.safety must be at least 1".into())?;

        let sites = s.take_with("infinite.sites", raw.infinite.sites, vec![1, 2, 3, 4], |v| format!("{v:?}"));
        let itime = TimeGrid {
            t_min: s.take("infinite.t_min", raw.infinite.t_min, 50.0),
            t_max: s.take("infinite.t_max", raw.infinite.t_max, 500.0),
            samples: s.take("infinite.samples", raw.infinite.samples, 4501),
        };
        check_time("infinite", &itime)?;
        let fit_window = s.take_with("infinite.fit_window", raw.infinite.fit_window, (50.0, 500.0), |w| {
            format!("[{}, {}]", w.0, w.1)
        });

        let initial_raw = s.take("radiate.initial", raw.radiate.initial, base as usize);
        let initial = chain.site(initial_raw)?;
        let windows = s.take_with(
            "radiate.windows",
            raw.radiate.windows,
            vec![(20.0, 60.0), (60.0, 120.0), (120.0, 240.0)],
            |w| show_pairs(w),
        );
        for w in &windows {
            require(w.0 < w.1, || format!("radiate.windows: empty window [{}, {}]", w.0, w.1))?;
        }
        let bootstrap = s.take("radiate.bootstrap", raw.radiate.bootstrap, 200);

        let last = base as usize + len - 1;
        let rn = s.take("resolvent.n", raw.resolvent.n, last);
        let rm = s.take("resolvent.m", raw.resolvent.m, last);
        let p_min = raw.resolvent.p_min;
        let p_max = raw.resolvent.p_max;
        s.take_with("resolvent.p_min", p_min.map(Some), None, |p| p.map_or("threshold - 1".into(), |v| v.to_string()));
        s.take_with("resolvent.p_max", p_max.map(Some), None, |p| p.map_or("4".into(), |v| v.to_string()));
        let rsamples = s.take("resolvent.samples", raw.resolvent.samples, 801);
        require(rsamples >= 2, || "resolvent.samples must be at least 2".into())?;
        let resolvent = ResolventSettings { n: chain.site(rn)?, m: chain.site(rm)?, p_min, p_max, samples: rsamples };

        Ok(RunConfig {
            chain,
            params,
            margin,
            grid,
            time,
            route,
            seed,
            fourier,
            modes: if modes == 0 { None } else { Some(modes) },
            safety,
            infinite: InfiniteSettings { sites, time: itime, fit_window },
            radiate: RadiateSettings { initial, windows, bootstrap },
            resolvent,
            snapshot: s.0,
        })
    }

    /// Overrides the route from the command line.
    pub fn set_route(&mut self, route: RouteSel) {
        self.route = route;
        if let Some(e) = self.snapshot.iter_mut().find(|e| e.key == "route") {
            e.value = route.name().into();
            e.default = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_marked() {
        let c = RunConfig::defaults().unwrap();
        assert!(c.snapshot.iter().all(|e| e.default));
        assert_eq!(c.chain.len(), 6);
        assert!((c.params.eps0 - 4.3738103953041705).abs() < 1e-9);
    }

    #[test]
    fn given_keys_are_not_defaults() {
        let c = RunConfig::from_toml("v = 0.5\n[time]\nt_max = 10.0\n").unwrap();
        let v = c.snapshot.iter().find(|e| e.key == "v").unwrap();
        assert!(!v.default);
        assert_eq!(c.time.t_max, 10.0);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in ["b = -1.0", "b = 0.0", "n = 0", "index_base = 2", "typo = 1", "[time]\nt_max = -1.0"] {
            let e = RunConfig::from_toml(text).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{text}: {e}");
        }
    }

    #[test]
    fn one_based_indices() {
        let c = RunConfig::from_toml("index_base = 1\n[radiate]\ninitial = 1\n").unwrap();
        assert_eq!(c.radiate.initial, 0);
        assert_eq!(c.resolvent.n, 5);
        assert!(RunConfig::from_toml("index_base = 1\n[radiate]\ninitial = 0\n").is_err());
    }
}
