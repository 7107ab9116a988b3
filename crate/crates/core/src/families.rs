//! Concrete families: antitrees, their radial Jacobi matrices, the
//! two-exponent antitree family with factorized Jacobi parameters, and path
//! graphs of Jacobi matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::family::{FamilyWeight, Layer, LayerGenerator, LayerSummary, LazyFamily};
use crate::graph::{VertexId, WeightedGraph};
use crate::operators::assemble_truncation;
use crate::selfadjoint::{JacobiData, JacobiSource};

type SphereFn = Arc<dyn Fn(usize) -> u64 + Send + Sync>;
type RadialFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Sphere numbers `s_n` of an antitree and an optional radial potential
/// `α|_{S_n} ≡ α_n`.
#[derive(Clone)]
pub struct AntitreeSpec {
    label: String,
    spheres: SphereFn,
    potential: Option<RadialFn>,
    depth: Option<usize>,
}

impl fmt::Debug for AntitreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AntitreeSpec")
            .field("label", &self.label)
            .field("depth", &self.depth)
            .field("potential", &self.potential.is_some())
            .finish()
    }
}

impl AntitreeSpec {
    /// Finite antitree with the given sphere numbers; `s_0` must be 1.
    pub fn from_spheres(spheres: Vec<u64>) -> Result<Self> {
        if spheres.first() != Some(&1) {
            return Err(Error::InvalidParameter(
                "an antitree has a single root: s_0 = 1".into(),
            ));
        }
        if let Some(n) = spheres.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!("sphere {n} is empty")));
        }
        let depth = spheres.len() - 1;
        let label = format!("antitree {spheres:?}");
        Ok(AntitreeSpec {
            label,
            spheres: Arc::new(move |n| spheres[n]),
            potential: None,
            depth: Some(depth),
        })
    }

    /// Infinite antitree with `s_n = ⌊(n+1)^{c1}⌋ ⌊(n+1)^{c2}⌋`.
    pub fn power(c1: f64, c2: f64) -> Result<Self> {
        let ex = Example67::new(c1, c2)?;
        Ok(AntitreeSpec {
            label: format!("antitree s_n = floor((n+1)^{c1}) floor((n+1)^{c2})"),
            spheres: Arc::new(move |n| ex.sphere(n)),
            potential: None,
            depth: None,
        })
    }

    /// Attaches a radial potential given by its values on spheres `0..len`.
    /// Spheres beyond the list get potential zero.
    pub fn with_radial_potential(mut self, alpha: Vec<f64>) -> Result<Self> {
        if let Some(k) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "potential on sphere {k} is not finite"
            )));
        }
        self.potential = Some(Arc::new(move |n| alpha.get(n).copied().unwrap_or(0.0)));
        Ok(self)
    }

    fn with_potential_fn(mut self, alpha: RadialFn) -> Self {
        self.potential = Some(alpha);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `s_n`, zero beyond the last sphere of a finite antitree.
    pub fn sphere(&self, n: usize) -> u64 {
        match self.depth {
            Some(d) if n > d => 0,
            _ => (self.spheres)(n),
        }
    }

    pub fn radial_potential(&self, n: usize) -> f64 {
        self.potential.as_ref().map_or(0.0, |a| a(n))
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    /// Deepest sphere of a finite antitree.
    pub fn depth(&self) -> Option<usize> {
        self.depth
    }

    /// Degree on sphere `n`: `s_{n-1} + s_{n+1}`.
    pub fn sphere_degree(&self, n: usize) -> u64 {
        let below = if n > 0 { self.sphere(n - 1) } else { 0 };
        below.saturating_add(self.sphere(n + 1))
    }
}

struct AntitreeLayers(AntitreeSpec);

impl LayerGenerator for AntitreeLayers {
    fn layer_size(&self, n: usize) -> usize {
        usize::try_from(self.0.sphere(n)).unwrap_or(usize::MAX)
    }

    fn forward_edge_count(&self, n: usize) -> usize {
        self.layer_size(n).saturating_mul(self.layer_size(n + 1))
    }

    fn layer(&self, n: usize) -> Layer {
        let size = self.layer_size(n);
        let next = self.layer_size(n + 1);
        let alpha = if self.0.has_potential() {
            vec![self.0.radial_potential(n); size]
        } else {
            Vec::new()
        };
        Layer {
            measure: vec![1.0; size],
            alpha,
            inner_edges: Vec::new(),
            forward_edges: (0..size)
                .flat_map(|i| (0..next).map(move |j| (i, j, 1.0)))
                .collect(),
        }
    }

    fn has_potential(&self) -> bool {
        self.0.has_potential()
    }

    fn max_depth(&self) -> Option<usize> {
        self.0.depth()
    }
}

struct AntitreeSummary(AntitreeSpec);

impl LayerSummary for AntitreeSummary {
    fn ray_increment(&self, weight: FamilyWeight, n: usize) -> f64 {
        match weight {
            // Every edge between S_n and S_{n+1} has b = 1 and the same endpoint
            // degrees, and max(deg) ≥ 1 keeps the weight below 1.
            FamilyWeight::Wouk | FamilyWeight::CappedWouk => {
                let deg = self.0.sphere_degree(n).max(self.0.sphere_degree(n + 1));
                1.0 / (deg as f64).sqrt()
            }
            FamilyWeight::VertexMeasure => 1.0,
        }
    }

    fn weight_sup(&self, _weight: FamilyWeight) -> Option<f64> {
        Some(1.0)
    }

    fn potential_floor(&self, n: usize) -> f64 {
        self.0.radial_potential(n)
    }

    fn weighted_degree_sup(&self) -> Option<f64> {
        let d = self.0.depth()?;
        (0..=d).map(|n| self.0.sphere_degree(n) as f64).reduce(f64::max)
    }
}

/// The antitree as a lazy family, with its closed-form layer summary.
pub fn antitree_family(spec: &AntitreeSpec) -> LazyFamily {
    LazyFamily::new(spec.label(), Arc::new(AntitreeLayers(spec.clone())))
        .with_summary(Arc::new(AntitreeSummary(spec.clone())))
}

/// The antitree on spheres `0..=depth`: `m ≡ 1`, unit weights between
/// consecutive spheres, no edges inside a sphere. Vertices are numbered sphere
/// by sphere starting at the root `0`.
pub fn antitree(spec: &AntitreeSpec, depth: usize) -> Result<WeightedGraph> {
    Ok(antitree_family(spec).truncate(depth)?.graph)
}

/// Jacobi matrix of the radial part: `b_n = √(s_n s_{n+1})` and
/// `a_n = α_n + s_{n-1} + s_{n+1}` with `s_{-1} = 0`, for rows
/// `0..alpha_radial.len()`.
pub fn antitree_to_jacobi(spec: &AntitreeSpec, alpha_radial: &[f64]) -> Result<JacobiData> {
    let rows = alpha_radial.len();
    if let Some(d) = spec.depth() {
        if rows > d + 1 {
            return Err(Error::InvalidParameter(format!(
                "{rows} rows requested from an antitree with {} spheres",
                d + 1
            )));
        }
    }
    let a = alpha_radial
        .iter()
        .enumerate()
        .map(|(n, &alpha)| alpha + spec.sphere_degree(n) as f64)
        .collect();
    let b = (0..rows)
        .map(|n| (spec.sphere(n) as f64 * spec.sphere(n + 1) as f64).sqrt())
        .take_while(|&b| b > 0.0)
        .collect();
    JacobiData::new(a, b)
}

/// The spheres of a graph seen as an antitree rooted at its first vertex.
/// Fails unless `m ≡ 1`, all weights are 1 and consecutive spheres are
/// completely joined with no other edges.
pub fn antitree_spheres(g: &WeightedGraph) -> Result<Vec<Vec<usize>>> {
    if g.is_empty() {
        return Err(Error::NotAnAntitree("empty graph".into()));
    }
    if !g.has_unit_measure() {
        return Err(Error::NotAnAntitree("measure is not identically 1".into()));
    }
    let mut level = vec![usize::MAX; g.len()];
    level[0] = 0;
    let mut spheres = vec![vec![0usize]];
    loop {
        let mut next = Vec::new();
        let n = spheres.len() - 1;
        for &u in &spheres[n] {
            for nb in g.neighbors(u) {
                if level[nb.vertex] == usize::MAX {
                    level[nb.vertex] = n + 1;
                    next.push(nb.vertex);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        spheres.push(next);
    }
    if level.contains(&usize::MAX) {
        return Err(Error::NotAnAntitree("graph is disconnected".into()));
    }
    for e in g.edges() {
        if e.b != 1.0 {
            return Err(Error::NotAnAntitree(format!(
                "edge {}-{} has weight {}",
                g.id(e.u),
                g.id(e.v),
                e.b
            )));
        }
        if level[e.u].abs_diff(level[e.v]) != 1 {
            return Err(Error::NotAnAntitree(format!(
                "edge {}-{} does not join consecutive spheres",
                g.id(e.u),
                g.id(e.v)
            )));
        }
    }
    let expected: usize = spheres.windows(2).map(|w| w[0].len() * w[1].len()).sum();
    if expected != g.edges().len() {
        return Err(Error::NotAnAntitree(
            "consecutive spheres are not completely joined".into(),
        ));
    }
    Ok(spheres)
}

/// Compression of the Dirichlet truncation to spheres `0..=depth` onto the
/// span of the normalized sphere indicators `1_{S_n}/√s_n`. Boundary rows keep
/// the ambient diagonal, so the entry for sphere `depth` counts `s_{depth+1}`
/// when `g` extends beyond it.
pub fn radial_compression(g: &WeightedGraph, depth: usize) -> Result<DMatrix<f64>> {
    let spheres = antitree_spheres(g)?;
    if depth >= spheres.len() {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} exceeds the {} spheres of the graph",
            spheres.len()
        )));
    }
    let mut sphere_of = vec![0usize; g.len()];
    for (n, s) in spheres.iter().enumerate() {
        for &u in s {
            sphere_of[u] = n;
        }
    }
    let omega: Vec<VertexId> = spheres[..=depth].iter().flatten().map(|&u| g.id(u)).collect();
    let t = assemble_truncation(g, &omega)?;
    let position_in_omega: Vec<usize> = omega
        .iter()
        .map(|&id| g.position(id).expect("vertex of g"))
        .collect();
    let norm: Vec<f64> = spheres.iter().map(|s| (s.len() as f64).sqrt()).collect();
    let rows = depth + 1;
    let mut c = DMatrix::zeros(rows, rows);
    for (k, &d) in t.diagonal.iter().enumerate() {
        let n = sphere_of[position_in_omega[k]];
        c[(n, n)] += d / (norm[n] * norm[n]);
    }
    for &(i, j, x) in &t.off_diagonal {
        let (n, k) = (sphere_of[position_in_omega[i]], sphere_of[position_in_omega[j]]);
        let scaled = x / (norm[n] * norm[k]);
        c[(n, k)] += scaled;
        c[(k, n)] += scaled;
    }
    Ok(c)
}

/// `⌊k^c⌋` for `k ≥ 1`, exact when `c` is a rational with small denominator.
pub fn floor_power(k: u64, c: f64) -> u64 {
    let estimate = (k as f64).powf(c);
    for q in 1u32..=12 {
        let p = c * q as f64;
        if (p - p.round()).abs() > 1e-12 || p.round() > 64.0 {
            continue;
        }
        let p = p.round() as u32;
        // r = ⌊k^{p/q}⌋ is the largest r with r^q ≤ k^p.
        let Some(target) = (k as u128).checked_pow(p) else {
            break;
        };
        let fits = |r: u64| (r as u128).checked_pow(q).is_some_and(|x| x <= target);
        let mut r = estimate.floor().max(0.0) as u64;
        while r > 0 && !fits(r) {
            r -= 1;
        }
        while fits(r + 1) {
            r += 1;
        }
        return r;
    }
    let lo = (estimate * (1.0 - 1e-12)).floor();
    let hi = (estimate * (1.0 + 1e-12)).floor();
    if lo == hi {
        lo as u64
    } else {
        estimate.round() as u64
    }
}

/// The antitree family with `m_n = ⌊(n+1)^{c1}⌋`, `γ_n = ⌊(n+1)^{c2}⌋`,
/// `s_n = m_n γ_n`, `l_n = √(γ_n γ_{n+1})` and
/// `α_n = m_n (l_{n-1} + l_n) − (s_{n-1} + s_{n+1})`, so that its radial
/// Jacobi matrix factorizes with `(m_n, l_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example67 {
    pub c1: f64,
    pub c2: f64,
}

/// Sequences of [`Example67`] on `n = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example67Sequences {
    pub m: Vec<u64>,
    pub gamma: Vec<u64>,
    pub l: Vec<f64>,
    pub s: Vec<u64>,
    pub alpha: Vec<f64>,
}

impl Example67 {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        for c in [c1, c2] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidExponent(c));
            }
        }
        Ok(Example67 { c1, c2 })
    }

    pub fn m(&self, n: usize) -> u64 {
        floor_power(n as u64 + 1, self.c1)
    }

    pub fn gamma(&self, n: usize) -> u64 {
        floor_power(n as u64 + 1, self.c2)
    }

    /// `s_n`, saturating at `u64::MAX`.
    pub fn sphere(&self, n: usize) -> u64 {
        self.m(n).saturating_mul(self.gamma(n))
    }

    fn sphere_f64(&self, n: usize) -> f64 {
        self.m(n) as f64 * self.gamma(n) as f64
    }

    pub fn l(&self, n: usize) -> f64 {
        (self.gamma(n) as f64 * self.gamma(n + 1) as f64).sqrt()
    }

    pub fn alpha(&self, n: usize) -> f64 {
        let (l_prev, s_prev) = if n > 0 {
            (self.l(n - 1), self.sphere_f64(n - 1))
        } else {
            (0.0, 0.0)
        };
        self.m(n) as f64 * (l_prev + self.l(n)) - (s_prev + self.sphere_f64(n + 1))
    }

    pub fn sequences(&self, len: usize) -> Example67Sequences {
        Example67Sequences {
            m: (0..len).map(|n| self.m(n)).collect(),
            gamma: (0..len).map(|n| self.gamma(n)).collect(),
            l: (0..len).map(|n| self.l(n)).collect(),
            s: (0..len).map(|n| self.sphere(n)).collect(),
            alpha: (0..len).map(|n| self.alpha(n)).collect(),
        }
    }

    pub fn antitree_spec(&self) -> AntitreeSpec {
        let ex = *self;
        AntitreeSpec {
            label: self.label(),
            spheres: Arc::new(move |n| ex.sphere(n)),
            potential: None,
            depth: None,
        }
        .with_potential_fn(Arc::new(move |n| ex.alpha(n)))
    }

    /// The antitree with its radial Jacobi matrix attached.
    pub fn family(&self) -> LazyFamily {
        antitree_family(&self.antitree_spec()).with_jacobi(Arc::new(*self))
    }
}

impl JacobiSource for Example67 {
    fn diagonal(&self, n: usize) -> f64 {
        let s_prev = if n > 0 { self.sphere_f64(n - 1) } else { 0.0 };
        self.alpha(n) + s_prev + self.sphere_f64(n + 1)
    }

    fn off_diagonal(&self, n: usize) -> f64 {
        (self.sphere_f64(n) * self.sphere_f64(n + 1)).sqrt()
    }

    fn size(&self) -> Option<usize> {
        None
    }

    fn factor(&self, n: usize) -> Option<(f64, f64)> {
        Some((self.m(n) as f64, self.l(n)))
    }

    fn label(&self) -> String {
        format!("example67 c1={} c2={}", self.c1, self.c2)
    }
}

/// `⌊(n+1)^{c1}⌋, ⌊(n+1)^{c2}⌋, …` for `n < len`.
pub fn example67(c1: f64, c2: f64, len: usize) -> Result<Example67Sequences> {
    if len == 0 {
        return Err(Error::InvalidParameter("at least one term is required".into()));
    }
    Ok(Example67::new(c1, c2)?.sequences(len))
}

/// Weighted path Laplacian on `ℕ_0`: `b_n = (n+1)^exponent`,
/// `a_n = b_{n-1} + b_n`. Factorizes with `m ≡ 1`, `l_n = b_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLaplacian {
    pub exponent: f64,
}

impl JacobiSource for PathLaplacian {
    fn diagonal(&self, n: usize) -> f64 {
        let prev = if n > 0 { self.off_diagonal(n - 1) } else { 0.0 };
        prev + self.off_diagonal(n)
    }

    fn off_diagonal(&self, n: usize) -> f64 {
        ((n + 1) as f64).powf(self.exponent)
    }

    fn size(&self) -> Option<usize> {
        None
    }

    fn factor(&self, n: usize) -> Option<(f64, f64)> {
        Some((1.0, self.off_diagonal(n)))
    }

    fn label(&self) -> String {
        format!("path laplacian b_n = (n+1)^{}", self.exponent)
    }
}

/// Jacobi matrix with constant entries, `a_n ≡ a` and `b_n ≡ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantJacobi {
    pub a: f64,
    pub b: f64,
}

impl ConstantJacobi {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("diagonal {a} is not finite")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::NonPositiveOffDiagonal { index: 0, value: b });
        }
        Ok(ConstantJacobi { a, b })
    }
}

impl JacobiSource for ConstantJacobi {
    fn diagonal(&self, _n: usize) -> f64 {
        self.a
    }

    fn off_diagonal(&self, _n: usize) -> f64 {
        self.b
    }

    fn size(&self) -> Option<usize> {
        None
    }

    fn factor(&self, _n: usize) -> Option<(f64, f64)> {
        None
    }

    fn label(&self) -> String {
        format!("constant jacobi a = {}, b = {}", self.a, self.b)
    }
}

/// Potential that turns the path graph with `m ≡ 1` into the Jacobi matrix:
/// `α_n = a_n − b_{n-1} − b_n`, where a missing coupling counts as zero.
fn path_potential(source: &dyn JacobiSource, n: usize) -> f64 {
    let prev = if n > 0 { source.off_diagonal(n - 1) } else { 0.0 };
    let next = match source.size() {
        Some(s) if n + 1 >= s => 0.0,
        _ => source.off_diagonal(n),
    };
    source.diagonal(n) - prev - next
}

struct PathLayers(Arc<dyn JacobiSource>);

impl LayerGenerator for PathLayers {
    fn layer_size(&self, n: usize) -> usize {
        usize::from(self.0.size().is_none_or(|s| n < s))
    }

    fn forward_edge_count(&self, n: usize) -> usize {
        usize::from(self.0.size().is_none_or(|s| n + 1 < s))
    }

    fn layer(&self, n: usize) -> Layer {
        Layer {
            measure: vec![1.0],
            alpha: vec![path_potential(self.0.as_ref(), n)],
            inner_edges: Vec::new(),
            forward_edges: if self.forward_edge_count(n) == 1 {
                vec![(0, 0, self.0.off_diagonal(n))]
            } else {
                Vec::new()
            },
        }
    }

    fn has_potential(&self) -> bool {
        true
    }

    fn max_depth(&self) -> Option<usize> {
        self.0.size().map(|s| s.saturating_sub(1))
    }
}

struct PathSummary(Arc<dyn JacobiSource>);

impl LayerSummary for PathSummary {
    fn ray_increment(&self, weight: FamilyWeight, n: usize) -> f64 {
        let deg = |k: usize| -> f64 {
            if k == 0 {
                1.0
            } else {
                2.0
            }
        };
        match weight {
            FamilyWeight::Wouk => 1.0 / (self.0.off_diagonal(n) * deg(n).max(deg(n + 1))).sqrt(),
            FamilyWeight::CappedWouk => self.ray_increment(FamilyWeight::Wouk, n).min(1.0),
            FamilyWeight::VertexMeasure => 1.0,
        }
    }

    fn weight_sup(&self, weight: FamilyWeight) -> Option<f64> {
        match weight {
            FamilyWeight::Wouk => None,
            FamilyWeight::CappedWouk | FamilyWeight::VertexMeasure => Some(1.0),
        }
    }

    fn potential_floor(&self, n: usize) -> f64 {
        path_potential(self.0.as_ref(), n)
    }

    fn weighted_degree_sup(&self) -> Option<f64> {
        None
    }
}

/// The path graph over `ℕ_0` whose Schrödinger operator is the Jacobi matrix.
pub fn path_family(source: Arc<dyn JacobiSource>) -> LazyFamily {
    let label = format!("path of {}", source.label());
    LazyFamily::new(label, Arc::new(PathLayers(source.clone())))
        .with_summary(Arc::new(PathSummary(source.clone())))
        .with_jacobi(source)
}

/// Path graph with `m ≡ 1`, `b(n, n+1) = b_n` and `α_n = a_n − b_{n-1} − b_n`
/// together with the Jacobi data it realizes. With `b.len() == a.len()` the
/// last coupling leads out of the truncation and is kept in the diagonal.
pub fn path_graph_jacobi(a: &[f64], b: &[f64]) -> Result<(WeightedGraph, JacobiData)> {
    let data = JacobiData::new(a.to_vec(), b.to_vec())?;
    let n = a.len();
    let alpha: Vec<f64> = (0..n)
        .map(|k| {
            let prev = if k > 0 { b[k - 1] } else { 0.0 };
            let next = b.get(k).copied().unwrap_or(0.0);
            a[k] - prev - next
        })
        .collect();
    let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|k| (k, k + 1, b[k])).collect();
    let graph = WeightedGraph::from_dense(vec![1.0; n], &edges, Some(alpha))?;
    Ok((graph, data))
}
