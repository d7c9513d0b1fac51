//! Gauss–Legendre rules and composite-panel helpers.

use alloc::vec::Vec;

use crate::math::{cos, PI};

#[allow(clippy::excessive_precision)]
const GL8_X: [f64; 4] =
    [0.18343464249564980494, 0.52553240991632898582, 0.79666647741362673959, 0.96028985649753623168];
#[allow(clippy::excessive_precision)]
const GL8_W: [f64; 4] =
    [0.36268378337836198297, 0.31370664587788728734, 0.22238103445337447054, 0.10122853629037625915];
#[allow(clippy::excessive_precision)]
const GL16_X: [f64; 8] = [
    0.095012509837637440185,
    0.28160355077925891323,
    0.45801677765722738634,
    0.61787624440264374845,
    0.75540440835500303390,
    0.86563120238783174388,
    0.94457502307323257608,
    0.98940093499164993260,
];
#[allow(clippy::excessive_precision)]
const GL16_W: [f64; 8] = [
    0.18945061045506849629,
    0.18260341504492358887,
    0.16915651939500253819,
    0.14959598881657673208,
    0.12462897125553387205,
    0.095158511682492784810,
    0.062253523938647892863,
    0.027152459411754094852,
];
#[allow(clippy::excessive_precision)]
const GL32_X: [f64; 16] = [
    0.048307665687738316235,
    0.14447196158279649349,
    0.23928736225213707454,
    0.33186860228212764978,
    0.42135127613063534536,
    0.50689990893222939002,
    0.58771575724076232904,
    0.66304426693021520098,
    0.73218211874028968039,
    0.79448379596794240696,
    0.84936761373256997013,
    0.89632115576605212397,
    0.93490607593773968917,
    0.96476225558750643077,
    0.98561151154526833540,
    0.99726386184948156354,
];
#[allow(clippy::excessive_precision)]
const GL32_W: [f64; 16] = [
    0.096540088514727800567,
    0.095638720079274859419,
    0.093844399080804565639,
    0.091173878695763884713,
    0.087652093004403811143,
    0.083311924226946755222,
    0.078193895787070306472,
    0.072345794108848506225,
    0.065822222776361846838,
    0.058684093478535547145,
    0.050998059262376176196,
    0.042835898022226680657,
    0.034273862913021433103,
    0.025392065309262059456,
    0.016274394730905670605,
    0.0070186100094700966004,
];

/// Gauss–Legendre rule on [-1, 1], nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Tabulated rules exist for 8, 16 and 32 points; other orders are
    /// computed by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        match n {
            8 => Self::from_half(&GL8_X, &GL8_W),
            16 => Self::from_half(&GL16_X, &GL16_W),
            32 => Self::from_half(&GL32_X, &GL32_W),
            _ => Self::newton(n),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn from_half(x: &[f64], w: &[f64]) -> Self {
        let mut nodes = Vec::with_capacity(2 * x.len());
        let mut weights = Vec::with_capacity(2 * x.len());
        for i in (0..x.len()).rev() {
            nodes.push(-x[i]);
            weights.push(w[i]);
        }
        for i in 0..x.len() {
            nodes.push(x[i]);
            weights.push(w[i]);
        }
        GaussLegendre { nodes, weights }
    }

    fn newton(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if crate::math::abs(dx) < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over [lo, hi] with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks.windows(2).map(|ab| self.integrate(ab[0], ab[1], &mut f)).sum()
    }

    /// Appends the mapped nodes and weights of panel [lo, hi].
    pub fn push_panel(&self, lo: f64, hi: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(c + h * x);
            weights.push(h * w);
        }
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = if crate::math::abs(1.0 - x * x) < 1e-300 {
        0.5 * (n as f64) * (n as f64 + 1.0) * if x > 0.0 { 1.0 } else { crate::math::parity(n as i64 + 1) }
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Breakpoints `lo + (hi-lo) u^power` for `u = k/panels`, which crowd
/// panels toward `lo` when `power > 1`.
pub fn graded_breaks(lo: f64, hi: f64, panels: usize, power: f64) -> Vec<f64> {
    (0..=panels)
        .map(|k| {
            if k == panels {
                hi
            } else {
                let u = k as f64 / panels as f64;
                lo + (hi - lo) * crate::math::pow(u, power)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_match_newton() {
        for n in [8, 16, 32] {
            let t = GaussLegendre::new(n);
            let nw = GaussLegendre::newton(n);
            for i in 0..n {
                assert!((t.nodes[i] - nw.nodes[i]).abs() < 1e-15, "n={n} i={i}");
                assert!((t.weights[i] - nw.weights[i]).abs() < 1e-15, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(16);
        // degree 31 is the highest integrated exactly
        let v = r.integrate(0.0, 1.0, |x| crate::math::powi(x, 31));
        assert!((v - 1.0 / 32.0).abs() < 1e-15);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_newton() {
        let r = GaussLegendre::new(7);
        assert!(r.nodes[3].abs() < 1e-15);
        let v = r.integrate(-1.0, 1.0, |x| x.powi(12));
        assert!((v - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn graded_breaks_hit_endpoints() {
        let b = graded_breaks(1.0, 5.0, 10, 1.5);
        assert_eq!(b[0], 1.0);
        assert_eq!(b[10], 5.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!(b[1] - b[0] < b[10] - b[9]);
    }
}
