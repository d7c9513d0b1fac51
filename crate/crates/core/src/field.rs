//! Form factor, dispersion `eps(p) = a p^2` and the induced spectral
//! density on the energy axis.
//!
//! The form factor is radial, `g(p) = C exp(-alpha p^2) exp(-delta/(p-b))`
//! for `p > b` and zero otherwise. It is smooth at the gap edge with every
//! derivative vanishing there, and `C` makes `int 4 pi p^2 g^2 dp = 1`.
//! With `p = sqrt(eps/a)` the density of the pushed-forward measure is
//! `rho(eps) = (2 pi / a) p g(p)^2`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, ceil, exp, sqrt, PI};
use crate::quadrature::{graded_breaks, GaussLegendre};

/// Shape parameters of the form factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormFactorProfile {
    /// Gaussian falloff rate.
    pub alpha: f64,
    /// Width of the smooth switch-on above the gap.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Dispersion coefficient.
    pub a: f64,
    /// Momentum gap.
    pub b: f64,
    /// Level shift of the emitting site.
    pub eps0: f64,
    /// Coupling; only `v^2` and `v^4` enter.
    pub v: f64,
    pub profile: FormFactorProfile,
}

impl FieldParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("a", self.a, self.a > 0.0),
            ("b", self.b, self.b > 0.0),
            ("eps0", self.eps0, self.eps0 > 0.0),
            ("v", self.v, self.v.is_finite()),
            ("alpha", self.profile.alpha, self.profile.alpha > 0.0),
            ("delta", self.profile.delta, self.profile.delta > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Bottom of the continuum, `a b^2`.
    pub fn threshold(&self) -> f64 {
        self.a * self.b * self.b
    }

    pub fn v4(&self) -> f64 {
        let v2 = self.v * self.v;
        v2 * v2
    }
}

/// Normalized form factor together with the parameters it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    params: FieldParams,
    norm: f64,
    p_hi: f64,
}

/// Panels used for the radial integrals in momentum space.
const RADIAL_PANELS: usize = 400;

impl Field {
    pub fn new(params: FieldParams) -> Result<Self> {
        params.validate()?;
        let b = params.b;
        // exp(-2 alpha p^2) < 1e-39 beyond this point
        let p_hi = b + sqrt(45.0 / params.profile.alpha);
        let mut f = Field { params, norm: 1.0, p_hi };
        let raw = f.radial_integral(b, p_hi, |p, g| 4.0 * PI * p * p * g * g);
        if !(raw > 0.0) || !raw.is_finite() {
            return Err(Error::NumericalAccuracy { what: "form factor normalization", residual: raw });
        }
        f.norm = 1.0 / sqrt(raw);
        Ok(f)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    /// Normalization constant `C`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Radius beyond which the form factor is treated as zero.
    pub fn p_cut(&self) -> f64 {
        self.p_hi
    }

    /// `g(p)`, zero on `[0, b]`.
    pub fn form_factor(&self, p: f64) -> f64 {
        let b = self.params.b;
        if p <= b {
            return 0.0;
        }
        let pr = &self.params.profile;
        self.norm * exp(-pr.alpha * p * p - pr.delta / (p - b))
    }

    /// `rho_mu(eps)`; zero for `eps <= a b^2`.
    pub fn rho(&self, eps: f64) -> f64 {
        if eps <= self.params.threshold() {
            return 0.0;
        }
        let a = self.params.a;
        let p = sqrt(eps / a);
        let g = self.form_factor(p);
        2.0 * PI / a * p * g * g
    }

    /// `F_mu(eps) = int_{a p^2 < eps} g^2 d^3p`, evaluated radially.
    pub fn cumulative(&self, eps: f64) -> f64 {
        if eps <= self.params.threshold() {
            return 0.0;
        }
        let p = sqrt(eps / self.params.a).min(self.p_hi);
        self.radial_integral(self.params.b, p, |p, g| 4.0 * PI * p * p * g * g)
    }

    /// `int_eps^inf rho`.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        let b = self.params.b;
        let p = sqrt(eps.max(0.0) / self.params.a).max(b);
        if p >= self.p_hi {
            return 0.0;
        }
        self.radial_integral(p, self.p_hi, |p, g| 4.0 * PI * p * p * g * g)
    }

    /// `int rho(eps) / (eps - a b^2) d eps`, done in momentum space where it
    /// reads `int 4 pi p^2 g^2 / (a (p^2 - b^2)) dp`.
    pub fn threshold_moment(&self) -> f64 {
        let (a, b) = (self.params.a, self.params.b);
        self.radial_integral(b, self.p_hi, |p, g| {
            let d = a * (p * p - b * b);
            if d > 0.0 {
                4.0 * PI * p * p * g * g / d
            } else {
                0.0
            }
        })
    }

    /// Largest value of `rho`, located by sampling in momentum.
    pub fn rho_max(&self) -> f64 {
        let (a, b) = (self.params.a, self.params.b);
        let n = 4000;
        let mut best = 0.0f64;
        for k in 1..n {
            let p = b + (self.p_hi - b) * k as f64 / n as f64;
            best = best.max(self.rho(a * p * p));
        }
        best
    }

    fn radial_integral<F: Fn(f64, f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let rule = GaussLegendre::new(16);
        // crowd panels toward the gap edge where g switches on
        let power = if lo <= self.params.b { 2.0 } else { 1.0 };
        let breaks = graded_breaks(lo, hi, RADIAL_PANELS, power);
        rule.integrate_panels(&breaks, |p| f(p, self.form_factor(p)))
    }
}

/// Where to cut the continuum and how finely to resolve it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Minimum number of nodes; the grid may refine beyond this.
    pub node_count: usize,
    /// Tail mass allowed beyond `eps_max`.
    pub tail_tol: f64,
    /// `eps_max` may not exceed `a b^2 + cap_offset`.
    pub cap_offset: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { node_count: 2048, tail_tol: 1e-12, cap_offset: 1e4 }
    }
}

/// Gauss–Legendre panels on `[a b^2, eps_max]` with `rho` cached at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    breaks: Vec<f64>,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rho: Vec<f64>,
    tail: f64,
}

/// Points per panel of the energy grid.
pub const GRID_ORDER: usize = 16;

/// Tolerance on `|sum w rho - 1|` after refinement.
const MASS_TOL: f64 = 1e-9;

impl EnergyGrid {
    pub fn lower(&self) -> f64 {
        self.breaks[0]
    }

    /// `eps_max`.
    pub fn upper(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `rho` at each node.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panel_count(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Tail mass beyond `eps_max`.
    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// `sum w_k rho_k`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.rho).map(|(w, r)| w * r).sum()
    }

    /// Panel containing `s`, if `s` lies strictly inside the grid.
    pub fn panel_of(&self, s: f64) -> Option<usize> {
        if s <= self.lower() || s >= self.upper() {
            return None;
        }
        // breaks are sorted
        let i = self.breaks.partition_point(|&x| x <= s);
        Some(i - 1)
    }

    /// Node index range belonging to panel `i`.
    pub fn panel_nodes(&self, i: usize) -> core::ops::Range<usize> {
        i * self.order..(i + 1) * self.order
    }
}

/// Builds the energy grid, choosing `eps_max` from the tail criterion and
/// doubling the panel count until the total mass is resolved.
pub fn build_energy_grid(field: &Field, spec: &GridSpec) -> Result<EnergyGrid> {
    if spec.node_count < 64 {
        return Err(Error::InvalidParameter { name: "grid.nodes", value: spec.node_count as f64 });
    }
    if !(spec.tail_tol > 0.0 && spec.tail_tol < 1e-6) {
        return Err(Error::InvalidParameter { name: "grid.eps_max_tail", value: spec.tail_tol });
    }
    let lo = field.params().threshold();
    let eps_max = find_eps_max(field, spec)?;
    let rule = GaussLegendre::new(GRID_ORDER);
    let mut panels = ceil(spec.node_count as f64 / GRID_ORDER as f64) as usize;
    let mut last = f64::NAN;
    for _ in 0..8 {
        let breaks = graded_breaks(lo, eps_max, panels, 1.5);
        let mut nodes = Vec::with_capacity(panels * GRID_ORDER);
        let mut weights = Vec::with_capacity(panels * GRID_ORDER);
        for ab in breaks.windows(2) {
            rule.push_panel(ab[0], ab[1], &mut nodes, &mut weights);
        }
        let rho: Vec<f64> = nodes.iter().map(|&e| field.rho(e)).collect();
        let grid = EnergyGrid { breaks, order: GRID_ORDER, nodes, weights, rho, tail: field.tail_mass(eps_max) };
        last = grid.mass() - 1.0;
        if abs(last) < MASS_TOL {
            return Ok(grid);
        }
        panels *= 2;
    }
    Err(Error::NumericalAccuracy { what: "energy grid mass", residual: last })
}

fn find_eps_max(field: &Field, spec: &GridSpec) -> Result<f64> {
    let lo = field.params().threshold();
    let peak = field.rho_max();
    let ok = |e: f64| field.tail_mass(e) < spec.tail_tol && field.rho(e) < 1e-14 * peak;
    let mut step = field.params().a.max(1.0);
    let mut hi = lo + step;
    while !ok(hi) {
        if step > spec.cap_offset {
            return Err(Error::TailUnreachable {
                cap: lo + spec.cap_offset,
                tail: field.tail_mass(lo + spec.cap_offset),
            });
        }
        step *= 2.0;
        hi = lo + step.min(spec.cap_offset);
    }
    let mut below = lo + 0.5 * step;
    if ok(below) {
        below = lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (below + hi);
        if ok(mid) {
            hi = mid;
        } else {
            below = mid;
        }
        if hi - below < 1e-9 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Result of checking the level shift against the sufficient conditions
/// for an absolutely continuous spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `eps0 > a b^2 + 2`.
    pub basic: bool,
    /// `eps0 > 2 + a b^2 + 2 v^4 I`.
    pub strong: bool,
    /// `I = int rho(eps)/(eps - a b^2) d eps`.
    pub integral: f64,
    /// Right-hand side of the strong bound.
    pub strong_bound: f64,
}

pub fn check_epsilon0(field: &Field) -> Admissibility {
    let p = field.params();
    let integral = field.threshold_moment();
    let strong_bound = 2.0 + p.threshold() + 2.0 * p.v4() * integral;
    Admissibility { basic: p.eps0 > p.threshold() + 2.0, strong: p.eps0 > strong_bound, integral, strong_bound }
}

/// Smallest level shift passing the strong bound by `margin`.
pub fn default_eps0(a: f64, b: f64, v: f64, profile: FormFactorProfile, margin: f64) -> Result<f64> {
    let probe = FieldParams { a, b, eps0: 1.0, v, profile };
    let field = Field::new(probe)?;
    let adm = check_epsilon0(&field);
    Ok(adm.strong_bound + margin)
}
