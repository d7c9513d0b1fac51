//! Windowed decay fits of a positive series `y(t)`.
//!
//! Three models are fitted by least squares in `ln y`:
//! a power law `y = C t^-k`, an exponential `y = A e^{s t}`, and an
//! exponential sitting on a constant floor `y = A e^{s t} + F`.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt};

/// Values below this are treated as numerical noise and dropped.
pub const FLOOR: f64 = 1e-12;
/// Fewer usable points than this is an error.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    LinearFit { slope, intercept, slope_se: sqrt(rss / dof / sxx), rss }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    PowerLaw,
    Exponential,
    ExpFloor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    /// `k` in `t^-k`.
    pub exponent: f64,
    /// Normal-theory 95% interval.
    pub ci95: (f64, f64),
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    /// `s` in `e^{s t}`.
    pub log_slope: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFloorFit {
    pub log_slope: f64,
    pub amplitude: f64,
    pub floor: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub window: (f64, f64),
    pub usable: usize,
    pub power: PowerFit,
    pub exponential: ExpFit,
    pub exp_floor: ExpFloorFit,
    /// Smallest residual per degree of freedom.
    pub preferred: Model,
}

fn usable(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&a, &b) in t.iter().zip(y) {
        if a >= window.0 && a <= window.1 && a > 0.0 && b > FLOOR && b.is_finite() {
            ts.push(a);
            ys.push(b);
        }
    }
    if ts.len() < MIN_POINTS {
        return Err(Error::InsufficientData { usable: ts.len(), required: MIN_POINTS });
    }
    Ok((ts, ys))
}

fn power(ts: &[f64], ys: &[f64]) -> PowerFit {
    let lx: Vec<f64> = ts.iter().map(|&t| ln(t)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| ln(y)).collect();
    let f = ols(&lx, &ly);
    let k = -f.slope;
    PowerFit { exponent: k, ci95: (k - 1.96 * f.slope_se, k + 1.96 * f.slope_se), rss: f.rss }
}

/// Exponential on a floor: scan the floor in `[0, min y)`, fit the rest
/// log-linearly and score residuals in `ln y`.
fn exp_floor(ts: &[f64], ys: &[f64]) -> ExpFloorFit {
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let ly: Vec<f64> = ys.iter().map(|&y| ln(y)).collect();
    let score = |floor: f64| -> ExpFloorFit {
        let lz: Vec<f64> = ys.iter().map(|&y| ln(y - floor)).collect();
        let f = ols(ts, &lz);
        let amp = exp(f.intercept);
        let rss = ts
            .iter()
            .zip(&ly)
            .map(|(&t, &l)| {
                let model = amp * exp(f.slope * t) + floor;
                if model > 0.0 {
                    (l - ln(model)) * (l - ln(model))
                } else {
                    f64::INFINITY
                }
            })
            .sum();
        ExpFloorFit { log_slope: f.slope, amplitude: amp, floor, rss }
    };
    let mut best = score(0.0);
    // floors approach min y geometrically
    for i in 1..=240 {
        let q = 1.0 - crate::math::pow(10.0, -(i as f64) / 20.0);
        let cand = score(q * ymin);
        if cand.rss < best.rss {
            best = cand;
        }
    }
    best
}

pub fn fit_decay(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<FitReport> {
    let (ts, ys) = usable(t, y, window)?;
    let pw = power(&ts, &ys);
    let ly: Vec<f64> = ys.iter().map(|&v| ln(v)).collect();
    let ex = ols(&ts, &ly);
    let exponential = ExpFit { log_slope: ex.slope, rss: ex.rss };
    let ef = exp_floor(&ts, &ys);
    let n = ts.len() as f64;
    let per_dof = [
        (Model::PowerLaw, pw.rss / (n - 2.0)),
        (Model::Exponential, ex.rss / (n - 2.0)),
        (Model::ExpFloor, ef.rss / (n - 3.0)),
    ];
    let preferred = per_dof.iter().fold(per_dof[0], |a, b| if b.1 < a.1 { *b } else { a }).0;
    Ok(FitReport { window, usable: ts.len(), power: pw, exponential, exp_floor: ef, preferred })
}

/// Percentile bootstrap 95% interval of the power-law exponent.
pub fn bootstrap_exponent<R: RngCore>(
    t: &[f64],
    y: &[f64],
    window: (f64, f64),
    rng: &mut R,
    resamples: usize,
) -> Result<(f64, f64)> {
    let (ts, ys) = usable(t, y, window)?;
    let n = ts.len();
    let mut est = Vec::with_capacity(resamples);
    let mut bt = alloc::vec![0.0; n];
    let mut by = alloc::vec![0.0; n];
    while est.len() < resamples {
        for i in 0..n {
            // unbiased enough for n << 2^64
            let k = ((rng.next_u64() as u128 * n as u128) >> 64) as usize;
            bt[i] = ts[k];
            by[i] = ys[k];
        }
        let k = power(&bt, &by).exponent;
        if k.is_finite() {
            est.push(k);
        }
    }
    est.sort_by(|a, b| a.total_cmp(b));
    let lo = est[((resamples as f64) * 0.025) as usize];
    let hi = est[(((resamples as f64) * 0.975) as usize).min(resamples - 1)];
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (0..100).map(|k| 0.1 + 0.1 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let r = fit_decay(&t, &y, (0.0, 100.0)).unwrap();
        assert!((r.exponential.log_slope + 1.0).abs() < 1e-3);
        assert!(r.exp_floor.rss < 1e-20);
    }

    #[test]
    fn exact_power() {
        let t: Vec<f64> = (1..200).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 5.0 * t.powf(-3.0)).collect();
        let r = fit_decay(&t, &y, (1.0, 300.0)).unwrap();
        assert!((r.power.exponent - 3.0).abs() < 1e-12);
        assert_eq!(r.preferred, Model::PowerLaw);
    }

    #[test]
    fn floor_is_recovered() {
        let t: Vec<f64> = (0..200).map(|k| 0.5 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (-0.3 * t).exp() + 1e-6).collect();
        let r = fit_decay(&t, &y, (0.0, 100.0)).unwrap();
        assert!((r.exp_floor.floor - 1e-6).abs() < 5e-8, "{}", r.exp_floor.floor);
        assert_eq!(r.preferred, Model::ExpFloor);
    }

    #[test]
    fn too_few_points() {
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let mut y = [1.0; 9];
        y[0] = 1e-13;
        y[1] = 0.0;
        assert!(matches!(fit_decay(&t, &y, (0.0, 10.0)), Err(Error::InsufficientData { usable: 7, .. })));
    }

    #[test]
    fn bootstrap_covers_truth_and_is_seeded() {
        use rand_chacha::rand_core::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        let t: Vec<f64> = (1..=120).map(|k| 10.0 + k as f64).collect();
        // deterministic wiggle standing in for noise
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, t)| t.powf(-4.0) * (1.0 + 0.05 * ((i * 7919 % 13) as f64 - 6.0) / 6.0))
            .collect();
        let run = |seed| bootstrap_exponent(&t, &y, (0.0, 200.0), &mut ChaCha8Rng::seed_from_u64(seed), 400).unwrap();
        let (lo, hi) = run(3);
        assert!(lo < 4.0 && 4.0 < hi, "[{lo}, {hi}]");
        assert!(hi - lo < 0.2);
        assert_eq!(run(3), (lo, hi));
    }
}
