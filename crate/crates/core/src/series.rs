//! Asymptotic fits for positive sequences.

use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit `t_n ≈ C (n + 1)^exponent` on a log-log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub samples: usize,
}

impl PowerFit {
    pub fn eval(&self, n: usize) -> f64 {
        (self.log_prefactor + self.exponent * ((n + 1) as f64).ln()).exp()
    }

    /// Integral bound `∫_N^∞ t(x) dx` for a decaying power law, `None` when the
    /// exponent is not below `-1`. `last` is the observed term at `N`; the
    /// larger of it and the fitted value is used.
    pub fn tail_bound(&self, n: usize, last: f64) -> Option<f64> {
        if self.exponent >= -1.0 {
            return None;
        }
        let at_n = self.eval(n).max(last);
        Some(at_n * (n + 1) as f64 / (-self.exponent - 1.0))
    }
}

/// Geometrically spaced sample indices in `[from, to)`, deduplicated.
pub fn sample_indices(from: usize, to: usize, count: usize) -> Vec<usize> {
    if to <= from {
        return Vec::new();
    }
    let lo = (from.max(1)) as f64;
    let hi = (to - 1).max(from.max(1)) as f64;
    let count = count.max(2);
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            (lo * (hi / lo).powf(t)).round() as usize
        })
        .filter(|&i| i >= from && i < to)
        .collect();
    out.dedup();
    out
}

/// Fits a power law to `term(n)` over `n ∈ [from, to)` using up to `samples`
/// geometrically spaced points. Non-positive or non-finite terms are skipped;
/// fewer than eight usable points is a failure.
pub fn fit_power_law(
    term: impl Fn(usize) -> f64,
    from: usize,
    to: usize,
    samples: usize,
) -> Result<PowerFit> {
    let points: Vec<(f64, f64)> = sample_indices(from, to, samples)
        .into_iter()
        .filter_map(|n| {
            let t = term(n);
            (t > 0.0 && t.is_finite()).then(|| (((n + 1) as f64).ln(), t.ln()))
        })
        .collect();
    if points.len() < 8 {
        return Err(Error::ExponentFitFailure(format!(
            "only {} usable samples in [{from}, {to})",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::ExponentFitFailure("degenerate sample range".into()));
    }
    let exponent = sxy / sxx;
    if !exponent.is_finite() {
        return Err(Error::ExponentFitFailure("non-finite slope".into()));
    }
    Ok(PowerFit {
        exponent,
        log_prefactor: my - exponent * mx,
        samples: points.len(),
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let k = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
