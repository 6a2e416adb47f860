//! Discrete spacelike graphs over planar discs and annuli: the immersion
//! data structure, its induced Lorentzian geometry (area, volume, normals,
//! mean curvature), boundary frames against a support surface, and wetted
//! areas.
//!
//! Surfaces are height fields `(x1, x2) -> (x1, x2, u)` over a triangulated
//! planar domain, so the lift is injective by construction and the spacelike
//! condition is the per-triangle gradient bound `|grad u| <= 1 - delta`.

use crate::lorentz::{minkowski_inner, normalized_timelike, LorentzVector};
use crate::umbilic::{
    orthonormal_spacelike_complement, surface_normal, SupportSurface, UmbilicError,
};
use thiserror::Error;

/// Default margin keeping triangle gradients away from the null bound.
pub const DELTA_SPACE: f64 = 1e-3;

/// Relative tolerance for boundary vertices lying on the support surface.
pub const TOL_MESH_SUPPORT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle} violates the spacelike bound: |grad u| = {grad_norm:.6}")]
    SpacelikeViolation { triangle: usize, grad_norm: f64 },
    #[error("triangle {0} is degenerate or flipped")]
    DegenerateTriangle(usize),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("height count {got} does not match vertex count {expected}")]
    HeightCount { expected: usize, got: usize },
    #[error("boundary vertex {vertex} is off the support surface (residual {residual:.3e})")]
    BoundaryOffSupport { vertex: usize, residual: f64 },
    #[error("boundary is not a graph over the reference circle: {0}")]
    BoundaryNotGraph(String),
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Umbilic(#[from] UmbilicError),
}

/// Structured polar domain description.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Disc { radius: f64, resolution: usize },
    Annulus {
        inner_radius: f64,
        outer_radius: f64,
        resolution: usize,
    },
}

impl DomainSpec {
    /// Number of angular sectors used by the structured triangulation.
    pub fn sectors(&self) -> usize {
        3 * self.resolution()
    }

    pub fn resolution(&self) -> usize {
        match self {
            DomainSpec::Disc { resolution, .. } => *resolution,
            DomainSpec::Annulus { resolution, .. } => *resolution,
        }
    }

    fn validate(&self) -> Result<(), MeshError> {
        match self {
            DomainSpec::Disc { radius, resolution } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(MeshError::InvalidDomain(format!(
                        "disc radius must be positive, got {radius}"
                    )));
                }
                if *resolution < 2 {
                    return Err(MeshError::InvalidDomain(
                        "disc resolution must be at least 2".into(),
                    ));
                }
            }
            DomainSpec::Annulus {
                inner_radius,
                outer_radius,
                resolution,
            } => {
                if !(*inner_radius > 0.0) || !(*outer_radius > *inner_radius) {
                    return Err(MeshError::InvalidDomain(format!(
                        "annulus radii must satisfy 0 < inner < outer, got {inner_radius}, {outer_radius}"
                    )));
                }
                if *resolution < 2 {
                    return Err(MeshError::InvalidDomain(
                        "annulus resolution must be at least 2".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Triangulated spacelike graph. Immutable after construction; solvers
/// derive updated copies through [`SpacelikeGraph::with_geometry`].
#[derive(Clone, Debug)]
pub struct SpacelikeGraph {
    planar: Vec<[f64; 2]>,
    heights: Vec<f64>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    is_boundary: Vec<bool>,
    support: Option<SupportSurface>,
    delta_space: f64,
}

/// Per-triangle planar geometry: doubled area and the affine gradients.
struct TriGeom {
    area2: f64,
    grad_u: [f64; 2],
}

fn rot90(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl SpacelikeGraph {
    /// Validating constructor from raw parts. Triangles must be listed
    /// counterclockwise; boundary loops keep the domain on their left.
    pub fn from_parts(
        planar: Vec<[f64; 2]>,
        heights: Vec<f64>,
        triangles: Vec<[usize; 3]>,
        boundary_loops: Vec<Vec<usize>>,
        support: Option<SupportSurface>,
        delta_space: f64,
    ) -> Result<Self, MeshError> {
        if heights.len() != planar.len() {
            return Err(MeshError::HeightCount {
                expected: planar.len(),
                got: heights.len(),
            });
        }
        if !(delta_space > 0.0 && delta_space < 1.0) {
            return Err(MeshError::InvalidDomain(format!(
                "delta_space must lie in (0,1), got {delta_space}"
            )));
        }
        let n = planar.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(MeshError::InvalidDomain(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
        }
        let mut is_boundary = vec![false; n];
        for bloop in &boundary_loops {
            for &i in bloop {
                if i >= n {
                    return Err(MeshError::InvalidDomain(
                        "boundary loop references a vertex out of range".into(),
                    ));
                }
                is_boundary[i] = true;
            }
        }
        let g = SpacelikeGraph {
            planar,
            heights,
            triangles,
            boundary_loops,
            is_boundary,
            support,
            delta_space,
        };
        g.validate_geometry()?;
        g.validate_support()?;
        Ok(g)
    }

    /// Copy with new planar positions and heights on the same connectivity,
    /// revalidated. Used by solvers that slide boundary vertices along the
    /// support.
    pub fn with_geometry(
        &self,
        planar: Vec<[f64; 2]>,
        heights: Vec<f64>,
    ) -> Result<Self, MeshError> {
        if planar.len() != self.planar.len() || heights.len() != self.heights.len() {
            return Err(MeshError::HeightCount {
                expected: self.planar.len(),
                got: heights.len(),
            });
        }
        let g = SpacelikeGraph {
            planar,
            heights,
            triangles: self.triangles.clone(),
            boundary_loops: self.boundary_loops.clone(),
            is_boundary: self.is_boundary.clone(),
            support: self.support.clone(),
            delta_space: self.delta_space,
        };
        g.validate_geometry()?;
        g.validate_support()?;
        Ok(g)
    }

    /// Copy with new heights only (planar domain unchanged).
    pub fn with_heights(&self, heights: Vec<f64>) -> Result<Self, MeshError> {
        self.with_geometry(self.planar.clone(), heights)
    }

    fn validate_geometry(&self) -> Result<(), MeshError> {
        for (t, _) in self.triangles.iter().enumerate() {
            let geom = self.tri_geom(t);
            let scale = self.tri_scale(t);
            if !(geom.area2 > 1e-14 * scale) {
                return Err(MeshError::DegenerateTriangle(t));
            }
            let g2 = dot2(geom.grad_u, geom.grad_u);
            let bound = 1.0 - self.delta_space;
            if g2 > bound * bound {
                return Err(MeshError::SpacelikeViolation {
                    triangle: t,
                    grad_norm: g2.sqrt(),
                });
            }
        }
        Ok(())
    }

    fn validate_support(&self) -> Result<(), MeshError> {
        if let Some(s) = &self.support {
            for (i, b) in self.is_boundary.iter().enumerate() {
                if !b {
                    continue;
                }
                let r = s.residual(&self.position(i)).abs();
                if r > TOL_MESH_SUPPORT {
                    return Err(MeshError::BoundaryOffSupport {
                        vertex: i,
                        residual: r,
                    });
                }
            }
        }
        Ok(())
    }

    fn tri_scale(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        let e1 = sub2(self.planar[j], self.planar[i]);
        let e2 = sub2(self.planar[k], self.planar[i]);
        dot2(e1, e1).max(dot2(e2, e2))
    }

    fn tri_geom(&self, t: usize) -> TriGeom {
        let [i, j, k] = self.triangles[t];
        let (pi, pj, pk) = (self.planar[i], self.planar[j], self.planar[k]);
        let area2 = (pj[0] - pi[0]) * (pk[1] - pi[1]) - (pj[1] - pi[1]) * (pk[0] - pi[0]);
        // grad u = sum_v u_v rot90(opposite edge) / (2A).
        let gi = rot90(sub2(pk, pj));
        let gj = rot90(sub2(pi, pk));
        let gk = rot90(sub2(pj, pi));
        let grad_u = [
            (self.heights[i] * gi[0] + self.heights[j] * gj[0] + self.heights[k] * gk[0]) / area2,
            (self.heights[i] * gi[1] + self.heights[j] * gj[1] + self.heights[k] * gk[1]) / area2,
        ];
        TriGeom { area2, grad_u }
    }

    /// Gradient of the hat function of local vertex `local` (0..3) on
    /// triangle `t`.
    fn hat_grad(&self, t: usize, local: usize) -> [f64; 2] {
        let [i, j, k] = self.triangles[t];
        let (pi, pj, pk) = (self.planar[i], self.planar[j], self.planar[k]);
        let area2 = (pj[0] - pi[0]) * (pk[1] - pi[1]) - (pj[1] - pi[1]) * (pk[0] - pi[0]);
        let g = match local {
            0 => rot90(sub2(pk, pj)),
            1 => rot90(sub2(pi, pk)),
            _ => rot90(sub2(pj, pi)),
        };
        [g[0] / area2, g[1] / area2]
    }

    pub fn vertex_count(&self) -> usize {
        self.planar.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn planar(&self, i: usize) -> [f64; 2] {
        self.planar[i]
    }

    pub fn planar_all(&self) -> &[[f64; 2]] {
        &self.planar
    }

    pub fn height(&self, i: usize) -> f64 {
        self.heights[i]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn position(&self, i: usize) -> LorentzVector {
        LorentzVector::xyz(self.planar[i][0], self.planar[i][1], self.heights[i])
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&i| !self.is_boundary[i])
            .collect()
    }

    pub fn support(&self) -> Option<&SupportSurface> {
        self.support.as_ref()
    }

    pub fn delta_space(&self) -> f64 {
        self.delta_space
    }

    /// Longest planar edge; the refinement parameter h.
    pub fn mesh_size(&self) -> f64 {
        let mut h2: f64 = 0.0;
        for tri in &self.triangles {
            for e in 0..3 {
                let d = sub2(self.planar[tri[(e + 1) % 3]], self.planar[tri[e]]);
                h2 = h2.max(dot2(d, d));
            }
        }
        h2.sqrt()
    }

    /// Vertex adjacency derived from triangle edges.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for tri in &self.triangles {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                if !adj[u].contains(&v) {
                    adj[u].push(v);
                }
                if !adj[v].contains(&u) {
                    adj[v].push(u);
                }
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Per-vertex incident triangle lists.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut stars = vec![Vec::new(); self.vertex_count()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                stars[v].push(t);
            }
        }
        stars
    }
}

/// Structured triangulation of the domain: vertices, triangles and boundary
/// loops (domain kept on the left of every loop).
fn domain_mesh(
    spec: &DomainSpec,
) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<Vec<usize>>), MeshError> {
    spec.validate()?;
    let s = spec.sectors();
    let tau = std::f64::consts::TAU;
    match spec {
        DomainSpec::Disc { radius, resolution } => {
            let n = *resolution;
            let mut planar = Vec::with_capacity(1 + n * s);
            planar.push([0.0, 0.0]);
            for k in 1..=n {
                let rho = radius * k as f64 / n as f64;
                for j in 0..s {
                    let phi = tau * j as f64 / s as f64;
                    planar.push([rho * phi.cos(), rho * phi.sin()]);
                }
            }
            let vid = |k: usize, j: usize| 1 + (k - 1) * s + (j % s);
            let mut triangles = Vec::with_capacity(s * (2 * n - 1));
            for j in 0..s {
                triangles.push([0, vid(1, j), vid(1, j + 1)]);
            }
            for k in 1..n {
                for j in 0..s {
                    triangles.push([vid(k, j), vid(k + 1, j), vid(k + 1, j + 1)]);
                    triangles.push([vid(k, j), vid(k + 1, j + 1), vid(k, j + 1)]);
                }
            }
            let outer = (0..s).map(|j| vid(n, j)).collect();
            Ok((planar, triangles, vec![outer]))
        }
        DomainSpec::Annulus {
            inner_radius,
            outer_radius,
            resolution,
        } => {
            let m = *resolution;
            let mut planar = Vec::with_capacity((m + 1) * s);
            for k in 0..=m {
                let rho = inner_radius + (outer_radius - inner_radius) * k as f64 / m as f64;
                for j in 0..s {
                    let phi = tau * j as f64 / s as f64;
                    planar.push([rho * phi.cos(), rho * phi.sin()]);
                }
            }
            let vid = |k: usize, j: usize| k * s + (j % s);
            let mut triangles = Vec::with_capacity(2 * m * s);
            for k in 0..m {
                for j in 0..s {
                    triangles.push([vid(k, j), vid(k + 1, j), vid(k + 1, j + 1)]);
                    triangles.push([vid(k, j), vid(k + 1, j + 1), vid(k, j + 1)]);
                }
            }
            let outer: Vec<usize> = (0..s).map(|j| vid(m, j)).collect();
            // Inner loop in decreasing angle so the domain stays on the left.
            let inner: Vec<usize> = (0..s).map(|j| vid(0, (s - j) % s)).collect();
            Ok((planar, triangles, vec![outer, inner]))
        }
    }
}

/// Build a spacelike graph by sampling a height function on the structured
/// domain.
pub fn build_graph<F: Fn(f64, f64) -> f64>(
    spec: &DomainSpec,
    height: F,
    support: Option<SupportSurface>,
) -> Result<SpacelikeGraph, MeshError> {
    let (planar, triangles, loops) = domain_mesh(spec)?;
    let heights: Vec<f64> = planar.iter().map(|p| height(p[0], p[1])).collect();
    if let Some(bad) = heights.iter().position(|h| !h.is_finite()) {
        return Err(MeshError::InvalidDomain(format!(
            "height at vertex {bad} is not finite"
        )));
    }
    SpacelikeGraph::from_parts(planar, heights, triangles, loops, support, DELTA_SPACE)
}

/// Build a spacelike graph from one height sample per structured vertex.
pub fn build_graph_from_samples(
    spec: &DomainSpec,
    heights: Vec<f64>,
    support: Option<SupportSurface>,
) -> Result<SpacelikeGraph, MeshError> {
    let (planar, triangles, loops) = domain_mesh(spec)?;
    SpacelikeGraph::from_parts(planar, heights, triangles, loops, support, DELTA_SPACE)
}

/// Lorentzian surface area: sum over triangles of
/// `sqrt(1 - |grad u|^2) * planar area`.
pub fn area(g: &SpacelikeGraph) -> f64 {
    let mut total = 0.0;
    for t in 0..g.triangle_count() {
        let geom = g.tri_geom(t);
        total += (1.0 - dot2(geom.grad_u, geom.grad_u)).sqrt() * geom.area2 / 2.0;
    }
    total
}

/// Signed volume between the graph and the plane `x3 = 0`:
/// `integral of u over the domain`.
pub fn algebraic_volume(g: &SpacelikeGraph) -> f64 {
    let mut total = 0.0;
    for (t, tri) in g.triangles().iter().enumerate() {
        let geom = g.tri_geom(t);
        let mean = (g.height(tri[0]) + g.height(tri[1]) + g.height(tri[2])) / 3.0;
        total += mean * geom.area2 / 2.0;
    }
    total
}

/// Future unit timelike normal per vertex: triangle normals
/// `(grad u, 1)/sqrt(1 - |grad u|^2)` averaged with Lorentz-area weights and
/// renormalised. The weighted sum telescopes to
/// `sum_T planar_area_T * (grad u_T, 1)`.
pub fn future_normal(g: &SpacelikeGraph) -> Vec<LorentzVector> {
    let mut acc = vec![[0.0f64; 3]; g.vertex_count()];
    for (t, tri) in g.triangles().iter().enumerate() {
        let geom = g.tri_geom(t);
        let w = geom.area2 / 2.0;
        for &v in tri {
            acc[v][0] += w * geom.grad_u[0];
            acc[v][1] += w * geom.grad_u[1];
            acc[v][2] += w;
        }
    }
    acc.into_iter()
        .map(|c| {
            let v = LorentzVector::xyz(c[0], c[1], c[2]);
            normalized_timelike(&v).expect("vertex normal accumulates a timelike direction")
        })
        .collect()
}

/// Mixed (Voronoi-clamped) planar vertex areas. Circumcentric cells for
/// non-obtuse triangles; obtuse triangles give half their area to the
/// obtuse corner and a quarter to each other corner. This is the vertex
/// area under which the weak-form curvature is pointwise consistent, fan
/// centres included.
pub fn mixed_vertex_areas(g: &SpacelikeGraph) -> Vec<f64> {
    let mut area = vec![0.0f64; g.vertex_count()];
    for (t, tri) in g.triangles().iter().enumerate() {
        let geom = g.tri_geom(t);
        let a = geom.area2 / 2.0;
        let p = [
            g.planar(tri[0]),
            g.planar(tri[1]),
            g.planar(tri[2]),
        ];
        // Squared edge lengths opposite each corner.
        let opp = |i: usize| {
            let d = sub2(p[(i + 2) % 3], p[(i + 1) % 3]);
            dot2(d, d)
        };
        let l = [opp(0), opp(1), opp(2)];
        // cot at corner i relates to the squared edges and the area.
        let cot = [
            (l[1] + l[2] - l[0]) / (4.0 * a),
            (l[2] + l[0] - l[1]) / (4.0 * a),
            (l[0] + l[1] - l[2]) / (4.0 * a),
        ];
        if cot.iter().all(|c| *c >= 0.0) {
            for i in 0..3 {
                // Circumcentric share: (|e_j|^2 cot_j + |e_k|^2 cot_k)/8
                // over the two edges incident to corner i.
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                area[tri[i]] += (l[j] * cot[j] + l[k] * cot[k]) / 8.0;
            }
        } else {
            for i in 0..3 {
                area[tri[i]] += if cot[i] < 0.0 { a / 2.0 } else { a / 4.0 };
            }
        }
    }
    area
}

/// Discrete mean curvature per vertex, sign convention `H = 1/r` on upper
/// hyperbolic caps.
///
/// Interior vertices use the finite-element weak form of
/// `2H = div(grad u / sqrt(1 - |grad u|^2))` normalised by the mixed
/// Voronoi vertex area, which keeps the value pointwise consistent on
/// structured stars including the fan centre. Boundary vertices carry the
/// average of their interior neighbours (one-sided stars cannot support the
/// weak form).
pub fn mean_curvature(g: &SpacelikeGraph) -> Vec<f64> {
    let n = g.vertex_count();
    let (num, _) = area_gradient_and_mass(g);
    let mass = mixed_vertex_areas(g);
    let mut h: Vec<f64> = (0..n).map(|i| num[i] / (2.0 * mass[i])).collect();
    // Extrapolate to the boundary from interior neighbours.
    let adj = g.neighbors();
    let interior_h = h.clone();
    for i in 0..n {
        if !g.is_boundary(i) {
            continue;
        }
        let vals: Vec<f64> = adj[i]
            .iter()
            .filter(|&&j| !g.is_boundary(j))
            .map(|&j| interior_h[j])
            .collect();
        if !vals.is_empty() {
            h[i] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }
    h
}

/// Mean curvature normalised by the 1/3-lumped planar vertex mass instead
/// of the mixed area: `num_i / (2 M_i)` with `num_i = d Area / d u_i`.
///
/// This is the variant the discrete Euler-Lagrange equation makes exactly
/// constant at converged constrained solves (the height gradient of area is
/// proportional to the height gradient of volume, whose exact derivative is
/// the same lumped mass), at the price of a fan-centre bias on analytic
/// meshes. Boundary vertices carry the average of their interior
/// neighbours.
pub fn mean_curvature_lumped(g: &SpacelikeGraph) -> Vec<f64> {
    let n = g.vertex_count();
    let (num, mass) = area_gradient_and_mass(g);
    let mut h: Vec<f64> = (0..n).map(|i| num[i] / (2.0 * mass[i])).collect();
    let adj = g.neighbors();
    let interior_h = h.clone();
    for i in 0..n {
        if !g.is_boundary(i) {
            continue;
        }
        let vals: Vec<f64> = adj[i]
            .iter()
            .filter(|&&j| !g.is_boundary(j))
            .map(|&j| interior_h[j])
            .collect();
        if !vals.is_empty() {
            h[i] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }
    h
}

/// Raw area-gradient data behind [`mean_curvature`]: for every vertex the
/// derivative of the Lorentz area with respect to its height, and the lumped
/// planar vertex area.
pub fn area_gradient_and_mass(g: &SpacelikeGraph) -> (Vec<f64>, Vec<f64>) {
    let n = g.vertex_count();
    let mut grad = vec![0.0f64; n];
    let mut mass = vec![0.0f64; n];
    for (t, tri) in g.triangles().iter().enumerate() {
        let geom = g.tri_geom(t);
        let a = geom.area2 / 2.0;
        let w = (1.0 - dot2(geom.grad_u, geom.grad_u)).sqrt();
        let field = [geom.grad_u[0] / w, geom.grad_u[1] / w];
        for local in 0..3 {
            let v = tri[local];
            grad[v] -= a * dot2(field, g.hat_grad(t, local));
            mass[v] += a / 3.0;
        }
    }
    (grad, mass)
}

/// Boundary frame pair (surface frame and support frame sharing the tangent)
/// at every boundary vertex, ordered loop by loop.
///
/// tau follows the stored loop orientation (domain on the left), N is the
/// discrete vertex normal orthogonalised exactly, nu completes det(tau, nu,
/// N) = 1 (the inward conormal for domain-left loops), N_Sigma is the
/// analytic support normal and nu_Sigma completes det(tau, nu_Sigma,
/// N_Sigma) = 1.
pub fn boundary_frames(
    g: &SpacelikeGraph,
    support: &SupportSurface,
) -> Result<Vec<crate::lorentz::BoundaryFrame>, MeshError> {
    use crate::lorentz::{cross_l, normalized_spacelike, BoundaryFrame, SupportClass};
    let normals = future_normal(g);
    let class = match support {
        SupportSurface::Pseudosphere { .. } => SupportClass::Timelike,
        _ => SupportClass::Spacelike,
    };
    let mut frames = Vec::new();
    for bloop in g.boundary_loops() {
        let m = bloop.len();
        if m < 3 {
            return Err(MeshError::InvalidDomain("boundary loop too short".into()));
        }
        for (pos, &i) in bloop.iter().enumerate() {
            let x = g.position(i);
            let res = support.residual(&x).abs();
            if res > TOL_MESH_SUPPORT {
                return Err(MeshError::BoundaryOffSupport {
                    vertex: i,
                    residual: res,
                });
            }
            let prev = g.position(bloop[(pos + m - 1) % m]);
            let next = g.position(bloop[(pos + 1) % m]);
            let chord = next.sub(&prev);
            if minkowski_inner(&chord, &chord) <= 0.0 {
                return Err(MeshError::BoundaryNotGraph(format!(
                    "boundary tangent at vertex {i} is not spacelike"
                )));
            }
            let n = normals[i].clone();
            let n_sigma = surface_normal(support, &x)?;
            // The boundary tangent spans the intersection of the discrete
            // tangent plane with the support tangent plane, so both frames
            // are exactly orthonormal; the chord only orients it.
            let tau_raw = cross_l(&n, &n_sigma).expect("dim 3");
            let tau = normalized_spacelike(&tau_raw)
                .map_err(|_| MeshError::BoundaryNotGraph(format!("degenerate tangent at {i}")))?;
            let tau = if minkowski_inner(&tau, &chord) >= 0.0 {
                tau
            } else {
                tau.scaled(-1.0)
            };
            let nu = normalized_spacelike(&cross_l(&n, &tau).expect("dim 3"))
                .map_err(|_| MeshError::BoundaryNotGraph(format!("degenerate conormal at {i}")))?;
            let nu_sigma_raw = cross_l(&n_sigma, &tau).expect("dim 3");
            let (nu_sigma, n_sigma) = match class {
                SupportClass::Timelike => {
                    let v = normalized_timelike(&nu_sigma_raw).map_err(|_| {
                        MeshError::BoundaryNotGraph(format!("degenerate support conormal at {i}"))
                    })?;
                    // det(tau, nu_sigma, N_sigma) = 1 fixes the sign.
                    let d = crate::lorentz::det3(&tau, &v, &n_sigma);
                    (if d > 0.0 { v } else { v.scaled(-1.0) }, n_sigma)
                }
                SupportClass::Spacelike => {
                    let v = normalized_spacelike(&nu_sigma_raw).map_err(|_| {
                        MeshError::BoundaryNotGraph(format!("degenerate support conormal at {i}"))
                    })?;
                    let d = crate::lorentz::det3(&tau, &v, &n_sigma);
                    (if d > 0.0 { v } else { v.scaled(-1.0) }, n_sigma)
                }
            };
            frames.push(BoundaryFrame {
                tau,
                nu,
                n,
                nu_sigma,
                n_sigma,
                class,
            });
        }
    }
    Ok(frames)
}

/// Contact-angle field `<N, N_Sigma>` along the boundary, one value per
/// vertex in flattened boundary-loop order, extrapolated from the interior.
///
/// One-sided boundary stars bias the discrete vertex normal at first order
/// in the mesh size, while interior stars are point-symmetric and carry
/// second-order normals. The angle is therefore sampled at the interior
/// neighbours of each boundary vertex and at their interior neighbours,
/// against the ambient extension of the support normal, and extrapolated
/// linearly in the inward distance. Vertices without two interior levels
/// keep their one-sided value.
pub fn boundary_contact_angles(
    g: &SpacelikeGraph,
    support: &SupportSurface,
) -> Result<Vec<f64>, MeshError> {
    let normals = future_normal(g);
    let adj = g.neighbors();
    let mut out = Vec::new();
    for bloop in g.boundary_loops() {
        for &b in bloop {
            let xb = g.position(b);
            let level1: Vec<usize> = adj[b]
                .iter()
                .copied()
                .filter(|&j| !g.is_boundary(j))
                .collect();
            let mut level2: Vec<usize> = Vec::new();
            for &j in &level1 {
                for &k in &adj[j] {
                    if !g.is_boundary(k) && !level1.contains(&k) && !level2.contains(&k) {
                        level2.push(k);
                    }
                }
            }
            // Least-squares linear fit of the interior angle samples in the
            // planar offsets from the boundary vertex, evaluated at zero
            // offset. A fit is unbiased in the sample-cloud anisotropy,
            // unlike extrapolation along the mean inward distance.
            let mut rows: Vec<[f64; 3]> = Vec::new();
            let mut rhs: Vec<f64> = Vec::new();
            for &i in level1.iter().chain(level2.iter()) {
                let x = g.position(i);
                let ns = crate::umbilic::ambient_normal(support, &x)?;
                let [px, py] = g.planar(i);
                let [bx, by] = [xb[0], xb[1]];
                rows.push([1.0, px - bx, py - by]);
                rhs.push(crate::lorentz::minkowski_inner(&normals[i], &ns));
            }
            let fitted = fit_constant_term(&rows, &rhs);
            match fitted {
                Some(v) => out.push(v),
                None => {
                    let ns = crate::umbilic::surface_normal(support, &xb)?;
                    out.push(crate::lorentz::minkowski_inner(&normals[b], &ns));
                }
            }
        }
    }
    Ok(out)
}

/// Constant term of the least-squares linear model `v ~ a0 + a1 dx + a2 dy`
/// through sample rows `[1, dx, dy]`. None when the normal equations are
/// singular or underdetermined.
fn fit_constant_term(rows: &[[f64; 3]], rhs: &[f64]) -> Option<f64> {
    if rows.len() < 3 {
        return None;
    }
    let mut ata = [0.0f64; 9];
    let mut atb = [0.0f64; 3];
    for (row, &v) in rows.iter().zip(rhs) {
        for a in 0..3 {
            for b in 0..3 {
                ata[3 * a + b] += row[a] * row[b];
            }
            atb[a] += row[a] * v;
        }
    }
    let sol = crate::numerics::solve_dense(&mut ata, &mut atb, 3)?;
    Some(sol[0])
}

/// Signed band integral of a pseudosphere-boundary loop against the waist:
/// `r^2 * integral of sinh(t(phi)) dphi` by the trapezoid rule in the waist
/// angle. Positive above the waist for counterclockwise loops.
pub fn wetted_band_from_boundary(
    points: &[LorentzVector],
    support: &SupportSurface,
) -> Result<f64, MeshError> {
    let (center, radius) = match support {
        SupportSurface::Pseudosphere { center, radius } => (center, *radius),
        _ => {
            return Err(MeshError::Unsupported(
                "band integral requires a pseudosphere support".into(),
            ))
        }
    };
    let m = points.len();
    if m < 3 {
        return Err(MeshError::BoundaryNotGraph("loop too short".into()));
    }
    let mut phi = Vec::with_capacity(m);
    let mut sinh_t = Vec::with_capacity(m);
    for (idx, x) in points.iter().enumerate() {
        let res = support.residual(x).abs();
        if res > TOL_MESH_SUPPORT {
            return Err(MeshError::BoundaryOffSupport {
                vertex: idx,
                residual: res,
            });
        }
        let q = x.sub(center).scaled(1.0 / radius);
        phi.push(q[1].atan2(q[0]));
        sinh_t.push(q[2]);
    }
    let mut total = 0.0;
    let mut winding = 0.0;
    let mut sign_ref = 0.0;
    for j in 0..m {
        let k = (j + 1) % m;
        let mut dphi = phi[k] - phi[j];
        while dphi > std::f64::consts::PI {
            dphi -= std::f64::consts::TAU;
        }
        while dphi < -std::f64::consts::PI {
            dphi += std::f64::consts::TAU;
        }
        if dphi == 0.0 {
            return Err(MeshError::BoundaryNotGraph(
                "repeated waist angle along the boundary".into(),
            ));
        }
        if sign_ref == 0.0 {
            sign_ref = dphi.signum();
        } else if dphi.signum() != sign_ref {
            return Err(MeshError::BoundaryNotGraph(
                "waist angle is not monotone along the boundary".into(),
            ));
        }
        winding += dphi;
        total += 0.5 * (sinh_t[j] + sinh_t[k]) * dphi;
    }
    if (winding.abs() - std::f64::consts::TAU).abs() > 1e-8 {
        return Err(MeshError::BoundaryNotGraph(format!(
            "boundary winds {winding:.6} around the waist axis"
        )));
    }
    Ok(radius * radius * total)
}

/// Area of the wetted region of the support surface bounded by the graph
/// boundary.
///
/// Pseudosphere: signed band between the boundary and the waist circle,
/// positive above the waist. Spacelike plane: induced (Euclidean) area
/// enclosed by the boundary polygon. Hyperbolic plane: induced hyperbolic
/// area of the radial region under the boundary. Loops are summed with
/// their stored orientation, so annulus holes subtract.
pub fn wetted_area(g: &SpacelikeGraph, support: &SupportSurface) -> Result<f64, MeshError> {
    match support {
        SupportSurface::Pseudosphere { .. } => {
            let mut total = 0.0;
            for bloop in g.boundary_loops() {
                let pts: Vec<LorentzVector> = bloop.iter().map(|&i| g.position(i)).collect();
                total += wetted_band_from_boundary(&pts, support)?;
            }
            Ok(total)
        }
        SupportSurface::SpacelikePlane { point, normal } => {
            let (e1, e2) = orthonormal_spacelike_complement(normal)?;
            let mut total = 0.0;
            for bloop in g.boundary_loops() {
                let coords: Vec<[f64; 2]> = bloop
                    .iter()
                    .map(|&i| {
                        let d = g.position(i).sub(point);
                        [minkowski_inner(&d, &e1), minkowski_inner(&d, &e2)]
                    })
                    .collect();
                let m = coords.len();
                for j in 0..m {
                    let k = (j + 1) % m;
                    total += 0.5 * (coords[j][0] * coords[k][1] - coords[k][0] * coords[j][1]);
                }
            }
            Ok(total)
        }
        SupportSurface::HyperbolicPlane { center, radius, .. } => {
            let mut total = 0.0;
            for bloop in g.boundary_loops() {
                let m = bloop.len();
                let mut phi = Vec::with_capacity(m);
                let mut f = Vec::with_capacity(m);
                for &i in bloop {
                    let x = g.position(i);
                    let res = support.residual(&x).abs();
                    if res > TOL_MESH_SUPPORT {
                        return Err(MeshError::BoundaryOffSupport {
                            vertex: i,
                            residual: res,
                        });
                    }
                    let dx = x[0] - center[0];
                    let dy = x[1] - center[1];
                    let rho2 = dx * dx + dy * dy;
                    phi.push(dy.atan2(dx));
                    f.push(radius * ((radius * radius + rho2).sqrt() - radius));
                }
                for j in 0..m {
                    let k = (j + 1) % m;
                    let mut dphi = phi[k] - phi[j];
                    while dphi > std::f64::consts::PI {
                        dphi -= std::f64::consts::TAU;
                    }
                    while dphi < -std::f64::consts::PI {
                        dphi += std::f64::consts::TAU;
                    }
                    total += 0.5 * (f[j] + f[k]) * dphi;
                }
            }
            Ok(total)
        }
    }
}

/// Export as indexed-triangle text (OBJ-compatible: `v` and `f` records).
pub fn export_obj(g: &SpacelikeGraph) -> String {
    let mut out = String::new();
    for i in 0..g.vertex_count() {
        let p = g.planar(i);
        out.push_str(&format!("v {:.17} {:.17} {:.17}\n", p[0], p[1], g.height(i)));
    }
    for tri in g.triangles() {
        out.push_str(&format!("f {} {} {}\n", tri[0] + 1, tri[1] + 1, tri[2] + 1));
    }
    out
}

/// Per-vertex CSV: planar coordinates, height and discrete mean curvature.
pub fn export_csv(g: &SpacelikeGraph) -> String {
    let h = mean_curvature(g);
    let mut out = String::from("x1,x2,u,H\n");
    for i in 0..g.vertex_count() {
        let p = g.planar(i);
        out.push_str(&format!(
            "{:.17},{:.17},{:.17},{:.17}\n",
            p[0], p[1], g.height(i), h[i]
        ));
    }
    out
}

/// Rebuild a graph from indexed-triangle text. Boundary loops are recovered
/// from unpaired directed edges; counterclockwise triangles keep the domain
/// on the left of every recovered loop.
pub fn import_obj(
    text: &str,
    support: Option<SupportSurface>,
) -> Result<SpacelikeGraph, MeshError> {
    let mut planar = Vec::new();
    let mut heights = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    *c = it
                        .next()
                        .ok_or_else(|| MeshError::Parse(format!("short vertex at line {}", ln + 1)))?
                        .parse::<f64>()
                        .map_err(|e| MeshError::Parse(format!("line {}: {e}", ln + 1)))?;
                }
                planar.push([coords[0], coords[1]]);
                heights.push(coords[2]);
            }
            Some("f") => {
                let mut idx = [0usize; 3];
                for v in idx.iter_mut() {
                    let token = it
                        .next()
                        .ok_or_else(|| MeshError::Parse(format!("short face at line {}", ln + 1)))?;
                    let head = token.split('/').next().unwrap_or(token);
                    let one_based: usize = head
                        .parse()
                        .map_err(|e| MeshError::Parse(format!("line {}: {e}", ln + 1)))?;
                    if one_based == 0 {
                        return Err(MeshError::Parse(format!(
                            "line {}: face index must be positive",
                            ln + 1
                        )));
                    }
                    *v = one_based - 1;
                }
                triangles.push(idx);
            }
            _ => {}
        }
    }
    // Directed boundary edges: present once in counterclockwise triangles.
    let mut edge_set = std::collections::HashSet::new();
    for tri in &triangles {
        for e in 0..3 {
            edge_set.insert((tri[e], tri[(e + 1) % 3]));
        }
    }
    let mut succ = std::collections::BTreeMap::new();
    for tri in &triangles {
        for e in 0..3 {
            let (u, v) = (tri[e], tri[(e + 1) % 3]);
            if !edge_set.contains(&(v, u)) {
                succ.insert(u, v);
            }
        }
    }
    let mut loops = Vec::new();
    let mut visited = std::collections::HashSet::new();
    let starts: Vec<usize> = succ.keys().copied().collect();
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut cur = start;
        let mut bloop = Vec::new();
        loop {
            bloop.push(cur);
            visited.insert(cur);
            cur = *succ
                .get(&cur)
                .ok_or_else(|| MeshError::Parse("open boundary chain".into()))?;
            if cur == start {
                break;
            }
            if bloop.len() > planar.len() {
                return Err(MeshError::Parse("boundary chain does not close".into()));
            }
        }
        loops.push(bloop);
    }
    loops.sort_by_key(|l| l.iter().copied().min().unwrap_or(usize::MAX));
    SpacelikeGraph::from_parts(planar, heights, triangles, loops, support, DELTA_SPACE)
}
