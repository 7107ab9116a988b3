//! Limit-point / limit-circle evidence for Jacobi matrices from the ℓ²-mass of
//! solutions of `b_n u_{n+1} = (a_n − z) u_n − b_{n−1} u_{n−1}`.
//!
//! Two solutions are propagated: `P` with `u_0 = 1` and `Q` with `u_0 = 0`,
//! `u_1 = 1/b_0`. Both are renormalized periodically and their masses are kept
//! on a log scale, so growth of any speed is representable. The mass of each
//! dyadic block `[2^k, 2^{k+1})` is recorded; the slope of `log2(mass)` over
//! the last blocks decides summability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::slope;

use super::jacobi::JacobiSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencyClass {
    /// Some solution is not square summable: deficiency indices (0, 0).
    LimitPointEvidence,
    /// Every solution is square summable: deficiency indices (1, 1).
    LimitCircleEvidence,
    Inconclusive,
}

impl DeficiencyClass {
    pub fn indices(self) -> Option<(usize, usize)> {
        match self {
            DeficiencyClass::LimitPointEvidence => Some((0, 0)),
            DeficiencyClass::LimitCircleEvidence => Some((1, 1)),
            DeficiencyClass::Inconclusive => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeficiencyConfig {
    /// Initial number of recurrence steps.
    pub steps: usize,
    /// Steps are doubled up to this bound while the result is inconclusive.
    pub max_steps: usize,
    pub renormalize_every: usize,
    /// Number of trailing dyadic blocks in the slope fit.
    pub fit_blocks: usize,
    /// A solution is summable when its block-mass slope is at most this.
    pub summable_slope: f64,
    /// A solution is divergent when its block-mass slope is at least this.
    pub divergent_slope: f64,
    /// Summable also when the mass beyond `N/2` is below this fraction of
    /// the mass up to `N/2`.
    pub tail_ratio: f64,
    /// Divergent also when the mass grows by more than this factor over the
    /// last doubling.
    pub growth_factor: f64,
}

impl Default for DeficiencyConfig {
    fn default() -> Self {
        DeficiencyConfig {
            steps: 100_000,
            max_steps: 1_000_000,
            renormalize_every: 64,
            fit_blocks: 6,
            summable_slope: -0.1,
            divergent_slope: -0.05,
            tail_ratio: 1e-3,
            growth_factor: 10.0,
        }
    }
}

/// Tail statistics of one solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionTail {
    pub name: &'static str,
    /// `(k, log2 of the mass on [2^k, 2^{k+1}))`.
    pub block_log2_mass: Vec<(usize, f64)>,
    pub slope: Option<f64>,
    /// Mass beyond `N/2` over mass up to `N/2`.
    pub tail_ratio: f64,
    /// Mass up to `N` over mass up to `N/2`.
    pub growth_factor: f64,
    pub summable: bool,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencyEvidence {
    pub class: DeficiencyClass,
    pub z: (f64, f64),
    pub steps: usize,
    pub solutions: Vec<SolutionTail>,
    pub indices: Option<(usize, usize)>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-scale running mass of one solution.
struct Propagator {
    prev: Complex64,
    cur: Complex64,
    /// `ln` of the factor the stored values must be multiplied by.
    log_scale: f64,
    window: f64,
    /// Natural-log masses: index 0 holds `|u_0|²`, index `k + 1` the block
    /// `[2^k, 2^{k+1})`.
    blocks: Vec<f64>,
}

impl Propagator {
    fn new(u0: Complex64, u1: Complex64) -> Self {
        let mut blocks = vec![f64::NEG_INFINITY; 64];
        blocks[0] = if u0.norm_sqr() > 0.0 {
            u0.norm_sqr().ln()
        } else {
            f64::NEG_INFINITY
        };
        Propagator {
            prev: u0,
            cur: u1,
            log_scale: 0.0,
            window: 0.0,
            blocks,
        }
    }

    fn flush(&mut self, block: usize) {
        if self.window > 0.0 {
            let add = self.window.ln() + 2.0 * self.log_scale;
            self.blocks[block] = log_add(self.blocks[block], add);
        }
        self.window = 0.0;
    }

    fn renormalize(&mut self, block: usize) {
        self.flush(block);
        let s = (self.prev.norm_sqr() + self.cur.norm_sqr()).sqrt();
        if s > 0.0 && s.is_finite() {
            self.prev /= s;
            self.cur /= s;
            self.log_scale += s.ln();
        }
    }
}

fn block_of(n: usize) -> usize {
    // n ≥ 1 lies in [2^k, 2^{k+1}) with k = floor(log2 n); stored at k + 1.
    (usize::BITS - n.leading_zeros()) as usize
}

/// Runs the recurrence for `steps` indices and classifies the solutions.
fn classify_once(
    source: &dyn JacobiSource,
    z: Complex64,
    steps: usize,
    config: &DeficiencyConfig,
) -> Result<DeficiencyEvidence> {
    let b0 = source.off_diagonal(0);
    let a0 = source.diagonal(0);
    let mut sols = [
        Propagator::new(Complex64::new(1.0, 0.0), (a0 - z) / b0),
        Propagator::new(Complex64::new(0.0, 0.0), Complex64::new(1.0 / b0, 0.0)),
    ];
    let mut b_prev = b0;
    for n in 1..steps {
        let block = block_of(n);
        for s in sols.iter_mut() {
            s.window += s.cur.norm_sqr();
        }
        if n + 1 == steps {
            break;
        }
        if block_of(n + 1) != block {
            for s in sols.iter_mut() {
                s.flush(block);
            }
        }
        let (a, b) = (source.diagonal(n), source.off_diagonal(n));
        for s in sols.iter_mut() {
            let next = ((a - z) * s.cur - s.prev * b_prev) / b;
            s.prev = s.cur;
            s.cur = next;
            let size = s.cur.norm_sqr();
            if !size.is_finite() {
                return Err(Error::Overflow(n));
            }
            if size > 1e200 {
                s.renormalize(block);
            }
        }
        if n % config.renormalize_every == 0 {
            for s in sols.iter_mut() {
                s.renormalize(block);
            }
        }
        b_prev = b;
    }
    let last_block = block_of(steps - 1);
    for s in sols.iter_mut() {
        s.flush(last_block);
    }
    // Blocks 1..=complete are full.
    let complete = (usize::BITS - 1 - steps.leading_zeros()) as usize;
    let names = ["P", "Q"];
    let solutions: Vec<SolutionTail> = sols
        .iter()
        .zip(names)
        .map(|(s, name)| tail_statistics(name, &s.blocks, complete, config))
        .collect();
    let class = if solutions.iter().all(|t| t.summable) {
        DeficiencyClass::LimitCircleEvidence
    } else if solutions.iter().any(|t| t.divergent && !t.summable) {
        DeficiencyClass::LimitPointEvidence
    } else {
        DeficiencyClass::Inconclusive
    };
    Ok(DeficiencyEvidence {
        class,
        z: (z.re, z.im),
        steps,
        solutions,
        indices: class.indices(),
    })
}

fn tail_statistics(
    name: &'static str,
    blocks: &[f64],
    complete: usize,
    config: &DeficiencyConfig,
) -> SolutionTail {
    let ln2 = std::f64::consts::LN_2;
    let block_log2_mass: Vec<(usize, f64)> = (1..=complete).map(|k| (k - 1, blocks[k] / ln2)).collect();
    let first = complete.saturating_sub(config.fit_blocks).max(1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (first..=complete)
        .filter(|&k| blocks[k].is_finite())
        .map(|k| ((k - 1) as f64, blocks[k] / ln2))
        .unzip();
    let fitted = slope(&xs, &ys);
    let head = blocks[..complete]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, log_add);
    let tail = blocks[complete];
    let tail_ratio = (tail - head).exp();
    let growth_factor = 1.0 + tail_ratio;
    let summable = fitted.is_some_and(|s| s <= config.summable_slope) || tail_ratio < config.tail_ratio;
    let divergent =
        fitted.is_some_and(|s| s >= config.divergent_slope) || growth_factor > config.growth_factor;
    SolutionTail {
        name,
        block_log2_mass,
        slope: fitted,
        tail_ratio,
        growth_factor,
        summable,
        divergent,
    }
}

/// Limit-point / limit-circle evidence at a non-real `z`. The number of steps
/// starts at `config.steps` and doubles up to `config.max_steps` while the
/// result is inconclusive; finite sources cap it at their size.
pub fn jacobi_deficiency_evidence(
    source: &dyn JacobiSource,
    z: Complex64,
    config: &DeficiencyConfig,
) -> Result<DeficiencyEvidence> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter(
            "spectral parameter must be non-real".into(),
        ));
    }
    let cap = source
        .size()
        .map_or(config.max_steps, |s| s.min(config.max_steps));
    let mut steps = config.steps.min(cap);
    if steps < 100 {
        return Err(Error::InvalidParameter(format!(
            "deficiency evidence needs at least 100 steps, got {steps}"
        )));
    }
    loop {
        let ev = classify_once(source, z, steps, config)?;
        if ev.class != DeficiencyClass::Inconclusive || steps >= cap {
            return Ok(ev);
        }
        steps = (steps * 2).min(cap);
    }
}

/// Evidence at `z = i` and `z = −i`, which must agree for real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatePair {
    pub plus: DeficiencyEvidence,
    pub minus: DeficiencyEvidence,
    pub agree: bool,
}

impl ConjugatePair {
    /// The common class, or `Inconclusive` when the two disagree.
    pub fn class(&self) -> DeficiencyClass {
        if self.agree {
            self.plus.class
        } else {
            DeficiencyClass::Inconclusive
        }
    }
}

pub fn deficiency_at_conjugates(
    source: &dyn JacobiSource,
    config: &DeficiencyConfig,
) -> Result<ConjugatePair> {
    let plus = jacobi_deficiency_evidence(source, Complex64::new(0.0, 1.0), config)?;
    let minus = jacobi_deficiency_evidence(source, Complex64::new(0.0, -1.0), config)?;
    let agree = plus.class == minus.class;
    Ok(ConjugatePair { plus, minus, agree })
}
