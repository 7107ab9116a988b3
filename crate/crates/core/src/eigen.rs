//! Extremal eigenvalues of real symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Matrices with fewer rows than this are diagonalized densely.
pub const DENSE_LIMIT: usize = 512;

/// All eigenvalues of a symmetric matrix, ascending.
pub fn dense_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    if matrix.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = d - x - if i == 0 { 0.0 } else { coupling / q };
        if q == 0.0 {
            q = -f64::MIN_POSITIVE;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection on
/// Sturm counts. Accurate to a few ulps of the bracket, independent of the
/// matrix norm.
pub fn tridiagonal_min(diag: &[f64], off: &[f64]) -> Result<f64> {
    if diag.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    if off.len() + 1 != diag.len() {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal matrix of order {} needs {} off-diagonal entries, got {}",
            diag.len(),
            diag.len() - 1,
            off.len()
        )));
    }
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = off.get(i).map_or(0.0, |x| x.abs());
        left + right
    };
    let mut lo = (0..diag.len())
        .map(|i| diag[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter("non-finite tridiagonal entry".into()));
    }
    // lo has no eigenvalue below it; hi has at least one at or below it.
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Krylov dimension between restarts.
    pub basis_size: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            max_iterations: 10_000,
            tolerance: 1e-10,
            seed: 42,
            basis_size: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest eigenvalue of the symmetric operator `matvec` of order `n` by
/// restarted Lanczos with full reorthogonalization. `scale` is an upper bound
/// on the spectral radius; convergence means a Ritz residual below
/// `tolerance · max(1, scale)`.
pub fn lanczos_min(
    n: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    scale: f64,
    config: &LanczosConfig,
) -> Result<EigenEstimate> {
    if n == 0 {
        return Err(Error::EmptyTruncation);
    }
    let threshold = config.tolerance * scale.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let mut iterations = 0;
    let mut scratch = vec![0.0; n];
    let m = config.basis_size.clamp(2, n.max(2));
    loop {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        loop {
            let j = basis.len() - 1;
            let mut w = vec![0.0; n];
            matvec(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&w, &basis[j]);
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if basis.len() == m || basis.len() == n || b <= 1e-14 * scale.max(1.0) {
                break;
            }
            w.iter_mut().for_each(|x| *x /= b);
            betas.push(b);
            basis.push(w);
        }
        let k = alphas.len();
        let tri = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty Krylov basis");
        let coeffs: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        let mut ritz = vec![0.0; n];
        for (q, c) in basis.iter().zip(coeffs.iter()) {
            ritz.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= rn);
        matvec(&ritz, &mut scratch);
        iterations += 1;
        let residual = scratch
            .iter()
            .zip(&ritz)
            .map(|(ay, y)| (ay - theta * y).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= threshold {
            return Ok(EigenEstimate {
                value: theta,
                residual,
                iterations,
            });
        }
        if iterations >= config.max_iterations {
            return Err(Error::ConvergenceFailure { iterations, residual });
        }
        start = ritz;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian_path(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn sturm_bisection_matches_closed_form() {
        for n in [1, 2, 10, 1000] {
            let (d, e) = laplacian_path(n);
            let exact = 2.0 - 2.0 * (PI / (n as f64 + 1.0)).cos();
            let got = tridiagonal_min(&d, &e).unwrap();
            assert!((got - exact).abs() < 1e-12, "n={n}: {got} vs {exact}");
        }
    }

    #[test]
    fn sturm_count_brackets_every_eigenvalue() {
        let (d, e) = laplacian_path(7);
        for k in 1..=7 {
            let lam = 2.0 - 2.0 * (k as f64 * PI / 8.0).cos();
            assert_eq!(sturm_count(&d, &e, lam - 1e-9), k - 1);
            assert_eq!(sturm_count(&d, &e, lam + 1e-9), k);
        }
    }

    #[test]
    fn dense_matches_closed_form() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let vals = dense_eigenvalues(&m);
        assert!((vals[0] - (2.0 - 2.0 * (PI / 13.0).cos())).abs() < 1e-13);
    }

    #[test]
    fn lanczos_matches_sturm() {
        let n = 800;
        let d: Vec<f64> = (0..n).map(|i| 2.0 + (i % 7) as f64 * 0.1).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| -1.0 - (i % 3) as f64 * 0.05).collect();
        let matvec = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = d[i] * x[i];
                if i > 0 {
                    s += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += e[i] * x[i + 1];
                }
                y[i] = s;
            }
        };
        let est = lanczos_min(n, matvec, 5.0, &LanczosConfig::default()).unwrap();
        let exact = tridiagonal_min(&d, &e).unwrap();
        assert!((est.value - exact).abs() < 1e-8, "{} vs {exact}", est.value);
    }

    #[test]
    fn lanczos_reports_nonconvergence() {
        let n = 2000;
        let matvec = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        };
        let config = LanczosConfig {
            max_iterations: 30,
            basis_size: 10,
            ..LanczosConfig::default()
        };
        assert!(matches!(
            lanczos_min(n, matvec, 4.0, &config),
            Err(Error::ConvergenceFailure { .. })
        ));
    }
}
