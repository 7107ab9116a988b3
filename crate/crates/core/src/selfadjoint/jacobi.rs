//! Jacobi matrices: storage, factorized nonnegativity, truncated spectra and
//! the Akhiezer series.

use serde::Serialize;

use crate::eigen::tridiagonal_min;
use crate::error::{Error, Result};
use crate::operators::check_nonincreasing;
use crate::series::fit_power_law;

/// A (possibly infinite) Jacobi matrix with diagonal `a_n` and positive
/// off-diagonal `b_n`, optionally factorized as
/// `a_n = m_n (l_{n-1} + l_n)`, `b_n = l_n √(m_n m_{n+1})` with `l_{-1} = 0`.
pub trait JacobiSource: Send + Sync {
    fn diagonal(&self, n: usize) -> f64;

    fn off_diagonal(&self, n: usize) -> f64;

    /// Number of rows, `None` when infinite.
    fn size(&self) -> Option<usize>;

    /// `(m_n, l_n)` when a factorization is known.
    fn factor(&self, n: usize) -> Option<(f64, f64)>;

    fn has_factorization(&self) -> bool {
        self.factor(0).is_some()
    }

    fn label(&self) -> String;
}

/// Relative tolerance for factorization identities.
pub const FACTORIZATION_RTOL: f64 = 1e-12;

/// Finite Jacobi data. `b` has `a.len() − 1` entries, or `a.len()` when the
/// coupling to the next (absent) row is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiData {
    a: Vec<f64>,
    b: Vec<f64>,
    factorization: Option<(Vec<f64>, Vec<f64>)>,
}

fn close(expected: f64, found: f64, scale: f64) -> bool {
    (expected - found).abs() <= FACTORIZATION_RTOL * scale.abs().max(1.0)
}

impl JacobiData {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptyTruncation);
        }
        if b.len() + 1 != a.len() && b.len() != a.len() {
            return Err(Error::InvalidParameter(format!(
                "{} diagonal entries need {} or {} off-diagonal entries, got {}",
                a.len(),
                a.len() - 1,
                a.len(),
                b.len()
            )));
        }
        if let Some(k) = a.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("a_{k} is not finite")));
        }
        if let Some(index) = b.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::NonPositiveOffDiagonal {
                index,
                value: b[index],
            });
        }
        Ok(JacobiData {
            a,
            b,
            factorization: None,
        })
    }

    /// Builds `a` and `b` from a factorization. `m` needs one more entry than
    /// the number of rows for the last off-diagonal, otherwise the last
    /// coupling is omitted.
    pub fn from_factorization(m: Vec<f64>, l: Vec<f64>, rows: usize) -> Result<Self> {
        if rows == 0 || m.len() < rows || l.len() < rows {
            return Err(Error::InvalidParameter(
                "factorization shorter than the requested size".into(),
            ));
        }
        let a: Vec<f64> = (0..rows)
            .map(|n| m[n] * (if n == 0 { 0.0 } else { l[n - 1] } + l[n]))
            .collect();
        let couplings = if m.len() > rows { rows } else { rows - 1 };
        let b: Vec<f64> = (0..couplings).map(|n| l[n] * (m[n] * m[n + 1]).sqrt()).collect();
        let mut data = Self::new(a, b)?;
        data.factorization = Some((m, l));
        Ok(data)
    }

    /// Attaches a factorization after checking it reproduces `a` and `b`.
    pub fn with_factorization(mut self, m: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        let n = self.a.len();
        if m.len() < n || l.len() < n || (self.b.len() == n && m.len() <= n) {
            return Err(Error::InvalidParameter(
                "factorization shorter than the Jacobi data".into(),
            ));
        }
        check_factorization(&self, |k| (m[k], l[k]), n)?;
        self.factorization = Some((m, l));
        Ok(self)
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Leading principal `rows × rows` block.
    pub fn truncated(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.a.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot take {rows} rows of a {}-row matrix",
                self.a.len()
            )));
        }
        Ok(JacobiData {
            a: self.a[..rows].to_vec(),
            b: self.b[..rows.min(self.b.len())].to_vec(),
            factorization: self.factorization.clone(),
        })
    }

    /// Copies the first `rows` rows (and the next coupling) of any source.
    pub fn from_source(source: &dyn JacobiSource, rows: usize) -> Result<Self> {
        let a = (0..rows).map(|n| source.diagonal(n)).collect();
        let couplings = match source.size() {
            Some(s) if s <= rows => rows - 1,
            _ => rows,
        };
        let b = (0..couplings).map(|n| source.off_diagonal(n)).collect();
        let mut data = Self::new(a, b)?;
        let (m, l): (Vec<f64>, Vec<f64>) = (0..=rows).map_while(|n| source.factor(n)).unzip();
        if m.len() >= rows {
            data.factorization = Some((m, l));
        }
        Ok(data)
    }
}

impl JacobiSource for JacobiData {
    fn diagonal(&self, n: usize) -> f64 {
        self.a[n]
    }

    fn off_diagonal(&self, n: usize) -> f64 {
        self.b[n]
    }

    fn size(&self) -> Option<usize> {
        Some(self.a.len())
    }

    fn factor(&self, n: usize) -> Option<(f64, f64)> {
        self.factorization
            .as_ref()
            .and_then(|(m, l)| Some((*m.get(n)?, *l.get(n)?)))
    }

    fn label(&self) -> String {
        format!("jacobi data ({} rows)", self.a.len())
    }
}

/// Checks both factorization identities on rows `0..rows`. Returns the largest
/// relative discrepancy.
pub fn check_factorization(
    source: &dyn JacobiSource,
    factor: impl Fn(usize) -> (f64, f64),
    rows: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut prev_l = 0.0;
    for n in 0..rows {
        let (m, l) = factor(n);
        let expected_a = m * (prev_l + l);
        let found_a = source.diagonal(n);
        if !close(expected_a, found_a, expected_a) {
            return Err(Error::FactorizationMismatch {
                which: "diagonal",
                index: n,
                expected: expected_a,
                found: found_a,
            });
        }
        worst = worst.max((expected_a - found_a).abs() / expected_a.abs().max(1.0));
        let has_coupling = match source.size() {
            Some(s) => n + 1 < s,
            None => true,
        };
        if has_coupling {
            let (m_next, _) = factor(n + 1);
            let expected_b = l * (m * m_next).sqrt();
            let found_b = source.off_diagonal(n);
            if !close(expected_b, found_b, expected_b) {
                return Err(Error::FactorizationMismatch {
                    which: "off-diagonal",
                    index: n,
                    expected: expected_b,
                    found: found_b,
                });
            }
            worst = worst.max((expected_b - found_b).abs() / expected_b.abs().max(1.0));
        }
        prev_l = l;
    }
    Ok(worst)
}

/// Lowest eigenvalue of the leading `rows × rows` block.
pub fn truncation_lambda_min(source: &dyn JacobiSource, rows: usize) -> Result<f64> {
    if rows == 0 {
        return Err(Error::EmptyTruncation);
    }
    if let Some(s) = source.size() {
        if rows > s {
            return Err(Error::InvalidParameter(format!(
                "truncation to {rows} rows of a {s}-row matrix"
            )));
        }
    }
    let diag: Vec<f64> = (0..rows).map(|n| source.diagonal(n)).collect();
    let off: Vec<f64> = (0..rows - 1).map(|n| -source.off_diagonal(n)).collect();
    tridiagonal_min(&diag, &off)
}

/// `λ_min` of the leading blocks of the given (strictly ascending) sizes.
pub fn jacobi_lambda_min_sequence(
    source: &dyn JacobiSource,
    sizes: &[usize],
    monotonicity_tol: f64,
) -> Result<Vec<f64>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly ascending".into()));
    }
    let values = sizes
        .iter()
        .map(|&n| truncation_lambda_min(source, n))
        .collect::<Result<Vec<_>>>()?;
    check_nonincreasing(&values, sizes, monotonicity_tol)?;
    Ok(values)
}

/// Truncation sizes used by the nonnegativity check.
pub const DEFAULT_CHECK_SIZES: [usize; 4] = [10, 100, 1000, 2000];

/// Lowest truncation eigenvalue accepted as nonnegative.
pub const NONNEG_TOL: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationCheck {
    pub holds: bool,
    pub rows_checked: usize,
    pub max_identity_error: f64,
    /// `(rows, λ_min)` per inspected truncation.
    pub lambda_min: Vec<(usize, f64)>,
}

/// Verifies the factorization identities and that truncations have
/// `λ_min ≥ −1e−10`, which the sum-of-squares form guarantees.
pub fn nonneg_factorization_check(source: &dyn JacobiSource, sizes: &[usize]) -> Result<FactorizationCheck> {
    if !source.has_factorization() {
        return Err(Error::MissingFactorization);
    }
    let sizes: Vec<usize> = match source.size() {
        Some(s) => {
            let mut v: Vec<usize> = sizes.iter().map(|&n| n.min(s)).collect();
            v.dedup();
            v
        }
        None => sizes.to_vec(),
    };
    let rows = sizes.iter().copied().max().unwrap_or(0);
    let max_identity_error =
        check_factorization(source, |n| source.factor(n).expect("factorization present"), rows)?;
    let values = jacobi_lambda_min_sequence(source, &sizes, 1e-9)?;
    let holds = values.iter().all(|&x| x >= NONNEG_TOL);
    Ok(FactorizationCheck {
        holds,
        rows_checked: rows,
        max_identity_error,
        lambda_min: sizes.into_iter().zip(values).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    ConvergesEvidence,
    DivergesEvidence,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEvidence {
    pub verdict: SeriesVerdict,
    pub terms: usize,
    pub partial_sum: f64,
    pub exponent: f64,
    pub tail_bound: Option<f64>,
    pub total_bound: Option<f64>,
    /// `(terms, partial sum)` at dyadic checkpoints.
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub terms: usize,
    /// Convergence needs `tail_bound ≤ tolerance · partial_sum`.
    pub tolerance: f64,
    /// Exponents at or above `-1 - divergence_margin` count as divergent.
    pub divergence_margin: f64,
    /// Exponents below `-1 - convergence_margin` may count as convergent.
    pub convergence_margin: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            terms: 100_000,
            tolerance: 0.25,
            divergence_margin: 0.02,
            convergence_margin: 0.1,
        }
    }
}

/// Classifies `Σ term(n)` over `n < config.terms` from a power-law fit of the
/// terms on `[N/8, N)` plus an integral tail bound.
pub fn series_evidence(term: impl Fn(usize) -> f64, config: &SeriesConfig) -> Result<SeriesEvidence> {
    let n = config.terms;
    if n < 64 {
        return Err(Error::InvalidParameter("series needs at least 64 terms".into()));
    }
    let terms: Vec<f64> = (0..n).map(term).collect();
    let mut partial = 0.0;
    let mut trace = Vec::new();
    let mut checkpoint = 1;
    for (k, &t) in terms.iter().enumerate() {
        partial += t;
        if k + 1 == checkpoint || k + 1 == n {
            trace.push((k + 1, partial));
            checkpoint *= 2;
        }
    }
    let fit = fit_power_law(|k| terms[k], n / 8, n, 200)?;
    let mut ev = SeriesEvidence {
        verdict: SeriesVerdict::Inconclusive,
        terms: n,
        partial_sum: partial,
        exponent: fit.exponent,
        tail_bound: None,
        total_bound: None,
        trace,
    };
    if fit.exponent >= -1.0 - config.divergence_margin {
        ev.verdict = SeriesVerdict::DivergesEvidence;
    } else if fit.exponent < -1.0 - config.convergence_margin {
        let tail = fit.tail_bound(n - 1, terms[n - 1]).expect("exponent below -1");
        ev.tail_bound = Some(tail);
        ev.total_bound = Some(partial + tail);
        if tail <= config.tolerance * partial {
            ev.verdict = SeriesVerdict::ConvergesEvidence;
        }
    }
    Ok(ev)
}

/// `Σ_n (1/m_n)(Σ_{k<n} 1/l_k)²`, finite exactly for the limit-circle case of
/// a factorized nonnegative Jacobi matrix.
pub fn akhiezer_criterion(
    m: impl Fn(usize) -> f64,
    l: impl Fn(usize) -> f64,
    config: &SeriesConfig,
) -> Result<SeriesEvidence> {
    let mut inner = Vec::with_capacity(config.terms);
    let mut acc = 0.0;
    for k in 0..config.terms {
        inner.push(acc);
        acc += 1.0 / l(k);
    }
    series_evidence(|n| inner[n] * inner[n] / m(n), config)
}

/// Akhiezer series of a source carrying a factorization.
pub fn jacobi_akhiezer(source: &dyn JacobiSource, config: &SeriesConfig) -> Result<SeriesEvidence> {
    if !source.has_factorization() {
        return Err(Error::MissingFactorization);
    }
    let factor = |n: usize| source.factor(n).expect("factorization present");
    akhiezer_criterion(|n| factor(n).0, |n| factor(n).1, config)
}
