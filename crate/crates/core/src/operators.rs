//! The Schrödinger expression `L_α`, its quadratic form, Dirichlet
//! truncations and their lowest eigenvalues.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::{dense_eigenvalues, lanczos_min, tridiagonal_min, LanczosConfig, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::family::LazyFamily;
use crate::graph::{VertexId, WeightedGraph};
use crate::metrics::{dijkstra, EdgeWeightFunction};

/// Scalars `L_α` can act on.
pub trait Scalar:
    Copy + Default + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// `(L_α f)(v) = (1/m(v)) (Σ_u b(v,u)(f(v) − f(u)) + α(v) f(v))` for a finitely
/// supported `f`, evaluated on the support and its neighbors.
pub fn apply_schrodinger<T: Scalar>(
    g: &WeightedGraph,
    f: &BTreeMap<VertexId, T>,
) -> Result<BTreeMap<VertexId, T>> {
    let mut dense = vec![T::default(); g.len()];
    let mut touched = vec![false; g.len()];
    for (&id, &value) in f {
        let p = g.position(id)?;
        dense[p] = value;
        touched[p] = true;
        for nb in g.neighbors(p) {
            touched[nb.vertex] = true;
        }
    }
    Ok(touched
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(v, _)| {
            let fv = dense[v];
            let sum = g.neighbors(v).iter().fold(fv * g.alpha(v), |acc, nb| {
                acc + (fv - dense[nb.vertex]) * nb.weight
            });
            (g.id(v), sum * (1.0 / g.measure(v)))
        })
        .collect())
}

/// `Σ_{edges} b(u,v)(f(u) − f(v))² + Σ_v α(v) f(v)²` for finitely supported `f`.
pub fn quadratic_form(g: &WeightedGraph, f: &BTreeMap<VertexId, f64>) -> Result<f64> {
    let mut dense = vec![0.0; g.len()];
    let mut support = vec![false; g.len()];
    for (&id, &value) in f {
        let p = g.position(id)?;
        dense[p] = value;
        support[p] = true;
    }
    let mut total = 0.0;
    for (u, _) in support.iter().enumerate().filter(|(_, &s)| s) {
        total += g.alpha(u) * dense[u] * dense[u];
        for nb in g.neighbors(u) {
            if !support[nb.vertex] {
                total += nb.weight * dense[u] * dense[u];
            } else if nb.vertex > u {
                total += nb.weight * (dense[u] - dense[nb.vertex]).powi(2);
            }
        }
    }
    Ok(total)
}

/// `⟨f, g⟩_{ℓ²(m)}` for finitely supported real functions.
pub fn inner_product(
    g: &WeightedGraph,
    f: &BTreeMap<VertexId, f64>,
    h: &BTreeMap<VertexId, f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (id, a) in f {
        if let Some(b) = h.get(id) {
            total += a * b * g.measure(g.position(*id)?);
        }
    }
    Ok(total)
}

/// Compression of `L_α` to functions supported in a finite set `Ω`, in the
/// coordinates `u ↦ √m · u` where it is symmetric. Boundary vertices keep
/// their full ambient diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetrizedTruncation {
    pub vertices: Vec<VertexId>,
    pub diagonal: Vec<f64>,
    /// `(i, j, value)` with `i < j`, local indices into `vertices`.
    pub off_diagonal: Vec<(usize, usize, f64)>,
    pub symmetrized: bool,
}

impl SymmetrizedTruncation {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diagonal));
        for &(i, j, x) in &self.off_diagonal {
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (yi, (d, xi)) in y.iter_mut().zip(self.diagonal.iter().zip(x)) {
            *yi = d * xi;
        }
        for &(i, j, a) in &self.off_diagonal {
            y[i] += a * x[j];
            y[j] += a * x[i];
        }
    }

    /// Diagonal and off-diagonal when every coupling joins consecutive indices.
    pub fn as_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let mut off = vec![0.0; n.saturating_sub(1)];
        for &(i, j, x) in &self.off_diagonal {
            if j != i + 1 {
                return None;
            }
            off[i] = x;
        }
        Some((self.diagonal.clone(), off))
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        let mut rows: Vec<f64> = self.diagonal.iter().map(|d| d.abs()).collect();
        for &(i, j, x) in &self.off_diagonal {
            rows[i] += x.abs();
            rows[j] += x.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Lowest eigenvalue: Sturm bisection for tridiagonal matrices, dense
    /// diagonalization below [`DENSE_LIMIT`], Lanczos otherwise.
    pub fn lambda_min(&self, lanczos: &LanczosConfig) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyTruncation);
        }
        if let Some((d, e)) = self.as_tridiagonal() {
            return tridiagonal_min(&d, &e);
        }
        if self.len() < DENSE_LIMIT {
            return Ok(dense_eigenvalues(&self.to_dense())[0]);
        }
        let scale = self.gershgorin_radius();
        lanczos_min(self.len(), |x, y| self.matvec(x, y), scale, lanczos).map(|e| e.value)
    }
}

fn local_index(g: &WeightedGraph, omega: &[VertexId]) -> Result<Vec<usize>> {
    if omega.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    let mut local = vec![usize::MAX; g.len()];
    for (k, &id) in omega.iter().enumerate() {
        let p = g.position(id)?;
        if local[p] != usize::MAX {
            return Err(Error::DuplicateVertex(id));
        }
        local[p] = k;
    }
    Ok(local)
}

/// Dirichlet truncation of `L_α` to `Ω`, symmetrized.
pub fn assemble_truncation(g: &WeightedGraph, omega: &[VertexId]) -> Result<SymmetrizedTruncation> {
    let local = local_index(g, omega)?;
    let mut diagonal = Vec::with_capacity(omega.len());
    let mut off_diagonal = Vec::new();
    for (i, &id) in omega.iter().enumerate() {
        let p = g.position(id)?;
        diagonal.push((g.strength(p) + g.alpha(p)) / g.measure(p));
        for nb in g.neighbors(p) {
            let j = local[nb.vertex];
            if j != usize::MAX && i < j {
                let scale = (g.measure(p) * g.measure(nb.vertex)).sqrt();
                off_diagonal.push((i, j, -nb.weight / scale));
            }
        }
    }
    off_diagonal.sort_by_key(|&(i, j, _)| (i, j));
    Ok(SymmetrizedTruncation {
        vertices: omega.to_vec(),
        diagonal,
        off_diagonal,
        symmetrized: true,
    })
}

/// The compression in plain `ℓ²(m)` coordinates, `A_{vu} = −b(u,v)/m(v)`.
/// Not symmetric; its eigenvalues equal those of [`assemble_truncation`].
pub fn plain_compression(g: &WeightedGraph, omega: &[VertexId]) -> Result<DMatrix<f64>> {
    let local = local_index(g, omega)?;
    let n = omega.len();
    let mut a = DMatrix::zeros(n, n);
    for (i, &id) in omega.iter().enumerate() {
        let p = g.position(id)?;
        let m = g.measure(p);
        a[(i, i)] = (g.strength(p) + g.alpha(p)) / m;
        for nb in g.neighbors(p) {
            let j = local[nb.vertex];
            if j != usize::MAX {
                a[(i, j)] = -nb.weight / m;
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBounds {
    /// `sup Deg`.
    pub lower: f64,
    /// `2 sup Deg`.
    pub upper: f64,
    /// Norm of the Laplacian (`α ≡ 0`), for finite graphs.
    pub exact: Option<f64>,
}

/// Bounds `sup Deg ≤ ‖L‖ ≤ 2 sup Deg` together with the exact norm of the
/// finite Laplacian.
pub fn operator_norm_bounds(g: &WeightedGraph, lanczos: &LanczosConfig) -> Result<NormBounds> {
    let deg = (0..g.len()).map(|v| g.weighted_degree_at(v)).fold(0.0, f64::max);
    let exact = if g.is_empty() {
        0.0
    } else {
        let laplacian = laplacian_truncation(g);
        if g.len() < DENSE_LIMIT {
            *dense_eigenvalues(&laplacian.to_dense()).last().expect("nonempty")
        } else {
            let scale = laplacian.gershgorin_radius();
            let est = lanczos_min(
                g.len(),
                |x, y| {
                    laplacian.matvec(x, y);
                    y.iter_mut().for_each(|v| *v = -*v);
                },
                scale,
                lanczos,
            )?;
            -est.value
        }
    };
    Ok(NormBounds {
        lower: deg,
        upper: 2.0 * deg,
        exact: Some(exact),
    })
}

fn laplacian_truncation(g: &WeightedGraph) -> SymmetrizedTruncation {
    let mut t = assemble_truncation(g, g.ids()).expect("full vertex set is a valid truncation");
    for (k, d) in t.diagonal.iter_mut().enumerate() {
        *d -= g.alpha(k) / g.measure(k);
    }
    t
}

/// Norm bounds of a family from its closed-form degree supremum.
pub fn family_norm_bounds(family: &LazyFamily) -> Result<NormBounds> {
    let deg = family
        .summary()
        .and_then(|s| s.weighted_degree_sup())
        .ok_or(Error::UnboundedDegreeUnknown)?;
    Ok(NormBounds {
        lower: deg,
        upper: 2.0 * deg,
        exact: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub lanczos: LanczosConfig,
    /// Allowed increase between consecutive values, relative to
    /// `max(1, |λ|)`, before monotonicity counts as violated.
    pub monotonicity_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            lanczos: LanczosConfig::default(),
            monotonicity_tol: 1e-9,
        }
    }
}

/// Fails with [`Error::MonotonicityViolation`] unless `values` is
/// nonincreasing up to the tolerance. `labels` name the positions.
pub fn check_nonincreasing(values: &[f64], labels: &[usize], tol: f64) -> Result<()> {
    for k in 1..values.len() {
        let (prev, cur) = (values[k - 1], values[k]);
        if cur > prev + tol * prev.abs().max(cur.abs()).max(1.0) {
            return Err(Error::MonotonicityViolation {
                depth: labels[k],
                previous: prev,
                current: cur,
            });
        }
    }
    Ok(())
}

/// `λ_min` of the truncations to nested sets `Ω_1 ⊂ Ω_2 ⊂ …`.
pub fn lambda_min_sequence(
    g: &WeightedGraph,
    exhaustion: &[Vec<VertexId>],
    config: &SpectralConfig,
) -> Result<Vec<f64>> {
    for (k, pair) in exhaustion.windows(2).enumerate() {
        let outer: std::collections::BTreeSet<_> = pair[1].iter().collect();
        if let Some(v) = pair[0].iter().find(|v| !outer.contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "exhaustion set {} contains {v} missing from set {}",
                k,
                k + 1
            )));
        }
    }
    let values = exhaustion
        .iter()
        .map(|omega| assemble_truncation(g, omega)?.lambda_min(&config.lanczos))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = (0..values.len()).collect();
    check_nonincreasing(&values, &labels, config.monotonicity_tol)?;
    Ok(values)
}

/// `λ_min` of the truncations of a family to layers `0..=d` for each `d` in
/// `depths` (strictly ascending). The ambient graph is one layer deeper, so
/// the outermost layer keeps its full diagonal.
pub fn family_lambda_min_sequence(
    family: &LazyFamily,
    depths: &[usize],
    config: &SpectralConfig,
) -> Result<Vec<f64>> {
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "depths must be strictly ascending".into(),
        ));
    }
    let Some(&deepest) = depths.last() else {
        return Ok(Vec::new());
    };
    let ambient = match family.max_depth() {
        Some(max) if deepest >= max => max,
        _ => deepest + 1,
    };
    let truncation = family.truncate(ambient)?;
    let sets: Vec<Vec<VertexId>> = depths
        .iter()
        .map(|&d| truncation.vertices_through(d.min(ambient)))
        .collect();
    let values = sets
        .iter()
        .map(|omega| assemble_truncation(&truncation.graph, omega)?.lambda_min(&config.lanczos))
        .collect::<Result<Vec<_>>>()?;
    check_nonincreasing(&values, depths, config.monotonicity_tol)?;
    Ok(values)
}

/// A finitely supported function with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffFunction {
    values: BTreeMap<VertexId, f64>,
}

impl CutoffFunction {
    pub fn get(&self, v: VertexId) -> f64 {
        self.values.get(&v).copied().unwrap_or(0.0)
    }

    /// The support with its values.
    pub fn support(&self) -> &BTreeMap<VertexId, f64> {
        &self.values
    }
}

/// `φ(v) = max(0, 1 − ρ_p(v, core)/radius)`.
pub fn cutoff(
    g: &WeightedGraph,
    p: &EdgeWeightFunction,
    core: &[VertexId],
    radius: f64,
) -> Result<CutoffFunction> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let sources = core
        .iter()
        .map(|&id| g.position(id))
        .collect::<Result<Vec<_>>>()?;
    let (dist, _) = dijkstra(g, &sources, |u, k| p.at_edge(g.neighbors(u)[k].edge));
    let values = dist
        .iter()
        .enumerate()
        .filter_map(|(k, &d)| {
            let phi = (1.0 - d / radius).max(0.0);
            (phi > 0.0).then(|| (g.id(k), phi))
        })
        .collect();
    Ok(CutoffFunction { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(i: usize) -> VertexId {
        VertexId(i)
    }

    fn graph(measure: &[f64], edges: &[(usize, usize, f64)], alpha: Option<&[f64]>) -> WeightedGraph {
        WeightedGraph::from_dense(measure.to_vec(), edges, alpha.map(|a| a.to_vec())).unwrap()
    }

    fn func(values: &[f64]) -> BTreeMap<VertexId, f64> {
        values.iter().enumerate().map(|(i, &x)| (v(i), x)).collect()
    }

    #[test]
    fn k2_eigenvector() {
        let g = graph(&[1.0, 1.0], &[(0, 1, 1.0)], None);
        let out = apply_schrodinger(&g, &func(&[1.0, -1.0])).unwrap();
        assert_eq!(out, func(&[2.0, -2.0]));
        assert_eq!(quadratic_form(&g, &func(&[1.0, -1.0])).unwrap(), 4.0);
    }

    #[test]
    fn k2_with_potential() {
        let g = graph(&[1.0, 1.0], &[(0, 1, 1.0)], Some(&[3.0, 0.0]));
        let out = apply_schrodinger(&g, &BTreeMap::from([(v(0), 1.0)])).unwrap();
        assert_eq!(out, func(&[4.0, -1.0]));
    }

    #[test]
    fn constants_are_harmonic() {
        let g = graph(
            &[1.0, 2.0, 0.5, 3.0],
            &[(0, 1, 1.5), (1, 2, 0.2), (2, 3, 4.0), (0, 3, 1.0)],
            None,
        );
        let c = func(&[2.5; 4]);
        for (_, x) in apply_schrodinger(&g, &c).unwrap() {
            assert!(x.abs() < 1e-14);
        }
        assert!(quadratic_form(&g, &c).unwrap().abs() < 1e-14);
    }

    #[test]
    fn complex_functions() {
        let g = graph(&[1.0, 1.0], &[(0, 1, 1.0)], None);
        let f = BTreeMap::from([
            (v(0), Complex64::new(0.0, 1.0)),
            (v(1), Complex64::new(0.0, -1.0)),
        ]);
        let out = apply_schrodinger(&g, &f).unwrap();
        assert_eq!(out[&v(0)], Complex64::new(0.0, 2.0));
    }

    #[test]
    fn single_vertex_form() {
        let g = graph(&[1.0], &[], Some(&[-5.0]));
        assert_eq!(quadratic_form(&g, &func(&[1.0])).unwrap(), -5.0);
    }

    #[test]
    fn unknown_support_vertex() {
        let g = graph(&[1.0], &[], None);
        assert_eq!(
            apply_schrodinger(&g, &BTreeMap::from([(v(3), 1.0)])),
            Err(Error::UnknownVertex(v(3)))
        );
    }

    #[test]
    fn assembled_matrices() {
        let p3 = graph(&[1.0, 4.0, 1.0], &[(0, 1, 1.0), (1, 2, 1.0)], None);
        let t = assemble_truncation(&p3, &[v(0), v(1), v(2)]).unwrap();
        assert_eq!(t.diagonal, vec![1.0, 0.5, 1.0]);
        assert_eq!(t.off_diagonal, vec![(0, 1, -0.5), (1, 2, -0.5)]);

        let k2 = graph(&[1.0, 1.0], &[(0, 1, 1.0)], None);
        let m = assemble_truncation(&k2, &[v(0), v(1)]).unwrap().to_dense();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        assert_eq!(assemble_truncation(&k2, &[]), Err(Error::EmptyTruncation));
    }

    #[test]
    fn dirichlet_truncation_of_a_path_keeps_ambient_diagonal() {
        // Vertices 0..=n; truncate to 1..=n-1 to get tridiag(-1, 2, -1).
        let n = 12;
        let edges: Vec<_> = (0..n).map(|i| (i, i + 1, 1.0)).collect();
        let g = graph(&vec![1.0; n + 1], &edges, None);
        let omega: Vec<_> = (1..n).map(v).collect();
        let t = assemble_truncation(&g, &omega).unwrap();
        assert!(t.diagonal.iter().all(|&d| d == 2.0));
        let free = assemble_truncation(&g, g.ids()).unwrap();
        assert_eq!(free.diagonal[0], 1.0);
        let lam = t.lambda_min(&LanczosConfig::default()).unwrap();
        assert!((lam - (2.0 - 2.0 * (PI / n as f64).cos())).abs() < 1e-12);
    }

    #[test]
    fn norm_bounds_small_graphs() {
        let k2 = graph(&[1.0, 1.0], &[(0, 1, 1.0)], None);
        let b = operator_norm_bounds(&k2, &LanczosConfig::default()).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 2.0));
        assert!((b.exact.unwrap() - 2.0).abs() < 1e-14);

        let p3 = graph(&[1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)], None);
        let b = operator_norm_bounds(&p3, &LanczosConfig::default()).unwrap();
        assert_eq!((b.lower, b.upper), (2.0, 4.0));
        assert!((b.exact.unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn nested_sequences_decrease() {
        let n = 40;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0 + i as f64 * 0.1)).collect();
        let g = graph(&vec![1.0; n], &edges, Some(&vec![0.3; n]));
        let sets: Vec<Vec<VertexId>> = (1..=n).step_by(5).map(|k| (0..k).map(v).collect()).collect();
        let vals = lambda_min_sequence(&g, &sets, &SpectralConfig::default()).unwrap();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let bad = vec![vec![v(3)], vec![v(0), v(1)]];
        assert!(matches!(
            lambda_min_sequence(&g, &bad, &SpectralConfig::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn monotonicity_guard() {
        assert!(check_nonincreasing(&[1.0, 0.5, 0.5], &[1, 2, 3], 1e-9).is_ok());
        assert_eq!(
            check_nonincreasing(&[1.0, 0.5, 0.7], &[10, 20, 30], 1e-9),
            Err(Error::MonotonicityViolation {
                depth: 30,
                previous: 0.5,
                current: 0.7
            })
        );
    }

    #[test]
    fn cutoff_on_a_ray() {
        let edges: Vec<_> = (0..5).map(|i| (i, i + 1, 1.0)).collect();
        let g = graph(&[1.0; 6], &edges, None);
        let p = EdgeWeightFunction::from_fn(&g, |_, _, _| 1.0).unwrap();
        let phi = cutoff(&g, &p, &[v(0)], 2.0).unwrap();
        let got: Vec<f64> = (0..6).map(|i| phi.get(v(i))).collect();
        assert_eq!(got, vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let ind = cutoff(&g, &p, &[v(2), v(3)], 0.5).unwrap();
        assert_eq!(
            ind.support().keys().copied().collect::<Vec<_>>(),
            vec![v(2), v(3)]
        );
        assert!(cutoff(&g, &p, &[v(0)], 0.0).is_err());
    }
}
