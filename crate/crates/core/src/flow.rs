//! Stationary capillary graphs on a support surface.
//!
//! The solver moves interior vertices vertically and slides boundary vertices
//! along fixed azimuth rays inside the support, so every iterate is a
//! spacelike graph with boundary exactly on the support. Stationary states
//! are saddle points of the constrained energy, so the solver runs Newton
//! iterations on the stationarity system instead of a monotone flow; a
//! volume constraint is restored after every trial step by a vertical shift
//! of the interior, or the system targets a prescribed constant mean
//! curvature. The module also classifies converged meshes against the
//! umbilical families, integrates rotational constant-mean-curvature
//! profiles and applies seeded interior perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lorentz::{minkowski_inner, LorentzVector};
use crate::mesh::{self, MeshError, SpacelikeGraph};
use crate::numerics;
use crate::umbilic::{self, Branch, SupportSurface, UmbilicError};
use crate::variational::{self, StationarityReport, VariationalError};

/// Relative tolerance on the restored volume after each accepted step.
pub const TOL_VOLUME_PROJECTION: f64 = 1e-10;
/// Classification threshold: a fit is accepted when its rms residual is
/// below `FIT_TOL` times the mesh diameter.
pub const FIT_TOL: f64 = 1e-5;
/// Fitted quadric radii above `FIT_RADIUS_MAX` times the mesh diameter are
/// rejected as plane-like.
pub const FIT_RADIUS_MAX: f64 = 1e4;

/// Maximum halvings before a line search gives up.
const MAX_HALVINGS: usize = 60;
/// Sufficient-decrease fraction per unit step of the line search.
const ARMIJO: f64 = 1e-4;
/// Floating-point slack added to every acceptance test.
const FP_SLACK: f64 = 1e-14;
/// Merit norms below this level sit at the floating-point floor of the
/// assembly; iterating further cannot improve the configuration.
const MERIT_FLOOR: f64 = 1e-12;
/// Relative tolerance of the inner Krylov solve for a Newton direction.
const INNER_TOL: f64 = 0.05;
/// Iteration cap of the inner Krylov solve.
const INNER_MAX: usize = 3000;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid solve options: {0}")]
    InvalidOptions(String),
    #[error("lambda = {0} is inadmissible on a spacelike support (requires lambda <= -1)")]
    InadmissibleLambda(f64),
    #[error("line search found no admissible decreasing step at iteration {iter}")]
    StepUnderflow { iter: usize },
    #[error("volume restoration stalled with residual {residual:.3e}")]
    VolumeProjection { residual: f64 },
    #[error("rotational profile range touches the conical point rho = 0 with c = {c}")]
    ConicalPoint { c: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Umbilic(#[from] UmbilicError),
}

/// Constraint mode of the stationary solve: exactly one of a volume target
/// or a mean-curvature target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstraintMode {
    /// Keep the algebraic volume at the target after every accepted step.
    Volume(f64),
    /// Solve the stationarity system of `energy - 2 * target * volume`;
    /// stationary points have constant mean curvature equal to the target.
    MeanCurvature(f64),
}

/// Options of [`solve_stationary`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Capillary constant weighting the wetted area.
    pub lambda: f64,
    pub mode: ConstraintMode,
    pub max_iters: usize,
    /// Scale of the fallback merit-descent step when a Newton direction is
    /// rejected; zero selects `0.1 * mesh_size^2`.
    pub step0: f64,
    /// Convergence threshold on the stationarity residual (the larger of the
    /// interior mean-curvature and boundary contact-angle deviations).
    pub residual_tol: f64,
    /// Recorded with the run for reproducible pipelines; the solve itself
    /// draws no random numbers.
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(lambda: f64, mode: ConstraintMode) -> Self {
        SolveOptions {
            lambda,
            mode,
            max_iters: 20_000,
            step0: 0.0,
            residual_tol: 1e-6,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), FlowError> {
        if !self.lambda.is_finite() {
            return Err(FlowError::InvalidOptions(format!(
                "lambda must be finite, got {}",
                self.lambda
            )));
        }
        let target = match self.mode {
            ConstraintMode::Volume(v) => v,
            ConstraintMode::MeanCurvature(h) => h,
        };
        if !target.is_finite() {
            return Err(FlowError::InvalidOptions(format!(
                "constraint target must be finite, got {target}"
            )));
        }
        if !(self.residual_tol > 0.0) {
            return Err(FlowError::InvalidOptions(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if !self.step0.is_finite() || self.step0 < 0.0 {
            return Err(FlowError::InvalidOptions(format!(
                "step0 must be zero or positive, got {}",
                self.step0
            )));
        }
        if self.max_iters == 0 {
            return Err(FlowError::InvalidOptions("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One iterate of the solve. `energy` is the capillary energy
/// `area + lambda * wetted`; in mean-curvature mode the stationary
/// functional is `energy - 2 * target * volume`.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub area: f64,
    pub wetted: f64,
    pub volume: f64,
    pub residual: f64,
}

/// Per-iteration history of a solve, one row per iterate including the
/// initial state.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,area,wetted,volume,residual\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.iter, r.energy, r.area, r.wetted, r.volume, r.residual
            ));
        }
        out
    }
}

/// Recognised limit shapes of the flow.
#[derive(Clone, Debug)]
pub enum ClassKind {
    /// Horizontal plane `x3 = height`.
    PlanarDisc { height: f64 },
    /// Branch of `<x - center, x - center> = -radius^2`.
    HyperbolicCap { center: LorentzVector, radius: f64 },
    Other,
}

/// Best umbilical fit of a mesh. `kind` is `Other` whenever the best rms
/// residual reaches `fit_tol * diameter`.
#[derive(Clone, Debug)]
pub struct Classification {
    pub kind: ClassKind,
    /// Rms distance residual of the best fit.
    pub rms_fit: f64,
    /// Euclidean bounding-box diagonal of the vertex set.
    pub diameter: f64,
}

/// Classify a mesh against the umbilical families with the default
/// tolerance [`FIT_TOL`].
pub fn classify(g: &SpacelikeGraph) -> Classification {
    classify_with_tol(g, FIT_TOL)
}

/// Classify a mesh: least-squares fits of a horizontal plane and of a
/// hyperbolic cap are compared by rms residual, smaller rms winning ties.
pub fn classify_with_tol(g: &SpacelikeGraph, fit_tol: f64) -> Classification {
    let n = g.vertex_count();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for i in 0..n {
        let p = g.planar(i);
        let c = [p[0], p[1], g.height(i)];
        for d in 0..3 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let diameter = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2))
        .sqrt();

    let mean_u: f64 = g.heights().iter().sum::<f64>() / n as f64;
    let rms_plane = (g
        .heights()
        .iter()
        .map(|u| (u - mean_u) * (u - mean_u))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let mut kind = ClassKind::PlanarDisc { height: mean_u };
    let mut rms = rms_plane;
    if let Some((center, radius, rms_quadric)) = fit_quadric(g, diameter) {
        if rms_quadric < rms {
            kind = ClassKind::HyperbolicCap { center, radius };
            rms = rms_quadric;
        }
    }
    if !(rms < fit_tol * diameter) {
        kind = ClassKind::Other;
    }
    Classification {
        kind,
        rms_fit: rms,
        diameter,
    }
}

/// Least-squares hyperbolic cap through the vertex set. The defining
/// equation `<x,x> - 2<x,p> - gamma = 0` is linear in `(p, gamma)`; the
/// radius follows from `radius^2 = -gamma - <p,p>`. Returns the center, the
/// radius and the rms distance residual, or `None` when the system is
/// singular, the radius is imaginary, or the radius exceeds
/// [`FIT_RADIUS_MAX`] times the diameter.
fn fit_quadric(g: &SpacelikeGraph, diameter: f64) -> Option<(LorentzVector, f64, f64)> {
    let n = g.vertex_count();
    let mut ata = [0.0f64; 16];
    let mut atb = [0.0f64; 4];
    for i in 0..n {
        let p = g.planar(i);
        let u = g.height(i);
        let row = [2.0 * p[0], 2.0 * p[1], -2.0 * u, 1.0];
        let q = p[0] * p[0] + p[1] * p[1] - u * u;
        for a in 0..4 {
            for b in 0..4 {
                ata[a * 4 + b] += row[a] * row[b];
            }
            atb[a] += row[a] * q;
        }
    }
    let z = numerics::solve_dense(&mut ata, &mut atb, 4)?;
    let center = LorentzVector::xyz(z[0], z[1], z[2]);
    let gamma = z[3];
    let r2 = -gamma - minkowski_inner(&center, &center);
    if !(r2 > 0.0) {
        return None;
    }
    let radius = r2.sqrt();
    if radius > FIT_RADIUS_MAX * diameter {
        return None;
    }
    let mut sq = 0.0;
    for i in 0..n {
        let p = g.planar(i);
        let u = g.height(i);
        let q = p[0] * p[0] + p[1] * p[1] - u * u;
        let e = q - 2.0 * (p[0] * z[0] + p[1] * z[1] - u * z[2]) - gamma;
        sq += e * e;
    }
    let rms = (sq / n as f64).sqrt() / (2.0 * radius);
    Some((center, radius, rms))
}

/// Meridian profile `(rho, u(rho))` of a rotational surface with constant
/// mean curvature `h`: the first integral gives
/// `u'(rho) = (h rho^2 + c) / sqrt(rho^2 + (h rho^2 + c)^2)`, integrated
/// from the left endpoint with `u(rho_min) = 0` over `n_samples` uniform
/// samples. A range touching `rho = 0` with `c != 0` hits the conical point
/// and is rejected.
pub fn rotational_cmc_profile(
    h: f64,
    c: f64,
    rho_range: [f64; 2],
    n_samples: usize,
) -> Result<Vec<(f64, f64)>, FlowError> {
    let [a, b] = rho_range;
    if !(h.is_finite() && c.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(FlowError::InvalidOptions(
            "profile parameters must be finite".into(),
        ));
    }
    if !(a >= 0.0 && b > a) {
        return Err(FlowError::InvalidOptions(format!(
            "profile range must satisfy 0 <= rho_min < rho_max, got [{a}, {b}]"
        )));
    }
    if n_samples < 2 {
        return Err(FlowError::InvalidOptions(
            "profile needs at least two samples".into(),
        ));
    }
    if a == 0.0 && c != 0.0 {
        return Err(FlowError::ConicalPoint { c });
    }
    let slope = move |rho: f64| {
        if rho == 0.0 && c == 0.0 {
            return 0.0;
        }
        let s = h * rho * rho + c;
        s / (rho * rho + s * s).sqrt()
    };
    let mut samples = Vec::with_capacity(n_samples);
    samples.push((a, 0.0));
    let mut u = 0.0;
    let mut prev = a;
    for k in 1..n_samples {
        let rho = a + (b - a) * k as f64 / (n_samples - 1) as f64;
        u += numerics::integrate(&slope, prev, rho, 1e-13);
        samples.push((rho, u));
        prev = rho;
    }
    Ok(samples)
}

/// Deterministic interior perturbation: four seeded low-frequency Fourier
/// modes, weighted so the perturbation vanishes at every boundary vertex and
/// attains `amplitude` in maximum norm. Amplitude zero returns the input
/// heights unchanged.
pub fn perturb(g: &SpacelikeGraph, amplitude: f64, seed: u64) -> Result<SpacelikeGraph, FlowError> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(FlowError::InvalidOptions(format!(
            "amplitude must be finite and nonnegative, got {amplitude}"
        )));
    }
    let n = g.vertex_count();
    let mut weight = vec![1.0f64; n];
    for bloop in g.boundary_loops() {
        for (i, w) in weight.iter_mut().enumerate() {
            let p = g.planar(i);
            let mut d2 = f64::INFINITY;
            for &bj in bloop {
                let q = g.planar(bj);
                let dx = p[0] - q[0];
                let dy = p[1] - q[1];
                d2 = d2.min(dx * dx + dy * dy);
            }
            *w *= d2.sqrt();
        }
    }
    let wmax = weight.iter().cloned().fold(0.0, f64::max);
    if wmax > 0.0 {
        for w in &mut weight {
            *w /= wmax;
        }
    }

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for i in 0..n {
        let p = g.planar(i);
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let scale = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt().max(1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut delta = vec![0.0f64; n];
    for _ in 0..4 {
        let coeff: f64 = rng.gen_range(-1.0..1.0);
        let kx: f64 = rng.gen_range(-1.5..1.5) * tau / scale;
        let ky: f64 = rng.gen_range(-1.5..1.5) * tau / scale;
        let phase: f64 = rng.gen_range(0.0..tau);
        for i in 0..n {
            let p = g.planar(i);
            delta[i] += coeff * (kx * p[0] + ky * p[1] + phase).sin();
        }
    }
    let peak = (0..n)
        .map(|i| (weight[i] * delta[i]).abs())
        .fold(0.0, f64::max);
    let factor = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let heights: Vec<f64> = (0..n)
        .map(|i| g.height(i) + factor * weight[i] * delta[i])
        .collect();
    g.with_heights(heights).map_err(FlowError::from)
}

/// Boundary sliding chart: one scalar degree of freedom per boundary vertex
/// along a fixed azimuth ray inside the support.
enum BoundaryChart {
    /// Geodesic parameter `t`; the vertex sits at
    /// `center + radius (cosh t cos phi, cosh t sin phi, sinh t)`.
    Pseudosphere { center: LorentzVector, radius: f64 },
    /// Planar radius about the boundary centroid inside the plane
    /// `<x - point, normal> = 0`.
    Plane {
        point: LorentzVector,
        normal: LorentzVector,
        offset: f64,
        base: [f64; 2],
        e1: LorentzVector,
        e2: LorentzVector,
    },
    /// Planar radius about the quadric axis; the height follows the branch.
    Hyperbolic {
        center: LorentzVector,
        radius: f64,
        upper: bool,
    },
}

/// Degree-of-freedom layout of a solve: interior heights first, then one
/// sliding scalar per boundary vertex in flattened loop order.
struct DofMap {
    interior: Vec<usize>,
    bverts: Vec<usize>,
    loop_spans: Vec<(usize, usize)>,
    cos_phi: Vec<f64>,
    sin_phi: Vec<f64>,
    /// Wrapped azimuth step to the loop successor of each boundary vertex.
    dphi_next: Vec<f64>,
    /// Height slope along the ray, plane chart only.
    plane_slope: Vec<f64>,
    chart: BoundaryChart,
}

fn wrap_angle(mut d: f64) -> f64 {
    while d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    while d < -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

impl DofMap {
    fn new(init: &SpacelikeGraph, support: &SupportSurface) -> Result<Self, FlowError> {
        if support.dim() != 3 {
            return Err(FlowError::InvalidOptions(
                "solver requires a three-dimensional support".into(),
            ));
        }
        let interior = init.interior_vertices();
        let mut bverts = Vec::new();
        let mut loop_spans = Vec::new();
        for bloop in init.boundary_loops() {
            loop_spans.push((bverts.len(), bloop.len()));
            bverts.extend_from_slice(bloop);
        }
        if bverts.is_empty() {
            return Err(FlowError::InvalidOptions("graph has no boundary".into()));
        }

        let chart = match support {
            SupportSurface::Pseudosphere { center, radius } => BoundaryChart::Pseudosphere {
                center: center.clone(),
                radius: *radius,
            },
            SupportSurface::SpacelikePlane { point, normal } => {
                let (e1, e2) = umbilic::orthonormal_spacelike_complement(normal)?;
                let mut base = [0.0f64; 2];
                for &b in &bverts {
                    let p = init.planar(b);
                    base[0] += p[0];
                    base[1] += p[1];
                }
                base[0] /= bverts.len() as f64;
                base[1] /= bverts.len() as f64;
                let offset = point[0] * normal[0] + point[1] * normal[1] - point[2] * normal[2];
                BoundaryChart::Plane {
                    point: point.clone(),
                    normal: normal.clone(),
                    offset,
                    base,
                    e1,
                    e2,
                }
            }
            SupportSurface::HyperbolicPlane {
                center,
                radius,
                branch,
            } => BoundaryChart::Hyperbolic {
                center: center.clone(),
                radius: *radius,
                upper: matches!(branch, Branch::Upper),
            },
        };

        let axis = match &chart {
            BoundaryChart::Pseudosphere { center, .. } => [center[0], center[1]],
            BoundaryChart::Plane { base, .. } => *base,
            BoundaryChart::Hyperbolic { center, .. } => [center[0], center[1]],
        };
        let nb = bverts.len();
        let mut cos_phi = Vec::with_capacity(nb);
        let mut sin_phi = Vec::with_capacity(nb);
        let mut phis = Vec::with_capacity(nb);
        let mut plane_slope = vec![0.0f64; nb];
        for (j, &b) in bverts.iter().enumerate() {
            let p = init.planar(b);
            let phi = (p[1] - axis[1]).atan2(p[0] - axis[0]);
            phis.push(phi);
            cos_phi.push(phi.cos());
            sin_phi.push(phi.sin());
            if let BoundaryChart::Plane { normal, .. } = &chart {
                plane_slope[j] = (normal[0] * cos_phi[j] + normal[1] * sin_phi[j]) / normal[2];
            }
        }
        let mut dphi_next = vec![0.0f64; nb];
        for &(start, len) in &loop_spans {
            for idx in 0..len {
                let j = start + idx;
                let k = start + (idx + 1) % len;
                let d = wrap_angle(phis[k] - phis[j]);
                if d == 0.0 {
                    return Err(FlowError::InvalidOptions(
                        "coincident boundary azimuths in the sliding chart".into(),
                    ));
                }
                dphi_next[j] = d;
            }
        }
        Ok(DofMap {
            interior,
            bverts,
            loop_spans,
            cos_phi,
            sin_phi,
            dphi_next,
            plane_slope,
            chart,
        })
    }

    fn n_interior(&self) -> usize {
        self.interior.len()
    }

    fn dof_count(&self) -> usize {
        self.interior.len() + self.bverts.len()
    }

    fn prev_next(&self, j: usize) -> (usize, usize) {
        for &(start, len) in &self.loop_spans {
            if j >= start && j < start + len {
                let idx = j - start;
                return (start + (idx + len - 1) % len, start + (idx + 1) % len);
            }
        }
        unreachable!("boundary index outside every loop span");
    }

    fn init_dofs(&self, g: &SpacelikeGraph) -> Result<Vec<f64>, FlowError> {
        let mut x = Vec::with_capacity(self.dof_count());
        for &i in &self.interior {
            x.push(g.height(i));
        }
        for (j, &b) in self.bverts.iter().enumerate() {
            let p = g.planar(b);
            let s = match &self.chart {
                BoundaryChart::Pseudosphere { center, radius } => {
                    ((g.height(b) - center[2]) / radius).asinh()
                }
                BoundaryChart::Plane { base, .. } => {
                    let dx = p[0] - base[0];
                    let dy = p[1] - base[1];
                    (dx * dx + dy * dy).sqrt()
                }
                BoundaryChart::Hyperbolic { center, .. } => {
                    let dx = p[0] - center[0];
                    let dy = p[1] - center[1];
                    (dx * dx + dy * dy).sqrt()
                }
            };
            if matches!(
                self.chart,
                BoundaryChart::Plane { .. } | BoundaryChart::Hyperbolic { .. }
            ) && s < 1e-9
            {
                return Err(FlowError::InvalidOptions(format!(
                    "boundary vertex {b} sits on the chart axis"
                )));
            }
            let _ = j;
            x.push(s);
        }
        Ok(x)
    }

    fn boundary_position(&self, j: usize, s: f64) -> ([f64; 2], f64) {
        match &self.chart {
            BoundaryChart::Pseudosphere { center, radius } => {
                let ch = s.cosh();
                (
                    [
                        center[0] + radius * ch * self.cos_phi[j],
                        center[1] + radius * ch * self.sin_phi[j],
                    ],
                    center[2] + radius * s.sinh(),
                )
            }
            BoundaryChart::Plane {
                normal,
                offset,
                base,
                ..
            } => {
                let px = base[0] + s * self.cos_phi[j];
                let py = base[1] + s * self.sin_phi[j];
                let u = (normal[0] * px + normal[1] * py - offset) / normal[2];
                ([px, py], u)
            }
            BoundaryChart::Hyperbolic {
                center,
                radius,
                upper,
            } => {
                let px = center[0] + s * self.cos_phi[j];
                let py = center[1] + s * self.sin_phi[j];
                let root = (radius * radius + s * s).sqrt();
                let u = center[2] + if *upper { root } else { -root };
                ([px, py], u)
            }
        }
    }

    /// Velocity of the chart ray at parameter `s` in ambient coordinates.
    fn boundary_velocity(&self, j: usize, s: f64) -> [f64; 3] {
        match &self.chart {
            BoundaryChart::Pseudosphere { radius, .. } => [
                radius * s.sinh() * self.cos_phi[j],
                radius * s.sinh() * self.sin_phi[j],
                radius * s.cosh(),
            ],
            BoundaryChart::Plane { .. } => {
                [self.cos_phi[j], self.sin_phi[j], self.plane_slope[j]]
            }
            BoundaryChart::Hyperbolic { radius, upper, .. } => {
                let du = s / (radius * radius + s * s).sqrt();
                [
                    self.cos_phi[j],
                    self.sin_phi[j],
                    if *upper { du } else { -du },
                ]
            }
        }
    }

    /// Acceleration of the chart ray at parameter `s` in ambient coordinates.
    fn boundary_acceleration(&self, j: usize, s: f64) -> [f64; 3] {
        match &self.chart {
            BoundaryChart::Pseudosphere { radius, .. } => [
                radius * s.cosh() * self.cos_phi[j],
                radius * s.cosh() * self.sin_phi[j],
                radius * s.sinh(),
            ],
            BoundaryChart::Plane { .. } => [0.0, 0.0, 0.0],
            BoundaryChart::Hyperbolic { radius, upper, .. } => {
                let r2 = radius * radius;
                let ddu = r2 / (r2 + s * s).powf(1.5);
                [0.0, 0.0, if *upper { ddu } else { -ddu }]
            }
        }
    }

    fn build(&self, base: &SpacelikeGraph, x: &[f64]) -> Result<SpacelikeGraph, MeshError> {
        let mut planar = base.planar_all().to_vec();
        let mut heights = base.heights().to_vec();
        for (i, &id) in self.interior.iter().enumerate() {
            heights[id] = x[i];
        }
        let n_int = self.interior.len();
        for (j, &b) in self.bverts.iter().enumerate() {
            let (p, u) = self.boundary_position(j, x[n_int + j]);
            planar[b] = p;
            heights[b] = u;
        }
        base.with_geometry(planar, heights)
    }

    /// Derivative of the wetted area with respect to every sliding scalar.
    /// Azimuths are fixed along the flow, so the trapezoid angle weights are
    /// constant and the derivative acts through the meridian terms only.
    fn wetted_gradient(&self, g: &SpacelikeGraph, sb: &[f64]) -> Vec<f64> {
        let nb = self.bverts.len();
        let mut dw = vec![0.0f64; nb];
        match &self.chart {
            BoundaryChart::Pseudosphere { radius, .. } => {
                for j in 0..nb {
                    let (p, _) = self.prev_next(j);
                    let wsum = 0.5 * (self.dphi_next[p] + self.dphi_next[j]);
                    dw[j] = radius * radius * sb[j].cosh() * wsum;
                }
            }
            BoundaryChart::Hyperbolic { radius, .. } => {
                for j in 0..nb {
                    let (p, _) = self.prev_next(j);
                    let wsum = 0.5 * (self.dphi_next[p] + self.dphi_next[j]);
                    let s = sb[j];
                    dw[j] = radius * s / (radius * radius + s * s).sqrt() * wsum;
                }
            }
            BoundaryChart::Plane { point, e1, e2, .. } => {
                let coords: Vec<[f64; 2]> = self
                    .bverts
                    .iter()
                    .map(|&b| {
                        let d = g.position(b).sub(point);
                        [minkowski_inner(&d, e1), minkowski_inner(&d, e2)]
                    })
                    .collect();
                for j in 0..nb {
                    let (p, nx) = self.prev_next(j);
                    let gx = 0.5 * (coords[nx][1] - coords[p][1]);
                    let gy = -0.5 * (coords[nx][0] - coords[p][0]);
                    let ray = LorentzVector::xyz(self.cos_phi[j], self.sin_phi[j], self.plane_slope[j]);
                    let dc = [minkowski_inner(&ray, e1), minkowski_inner(&ray, e2)];
                    dw[j] = gx * dc[0] + gy * dc[1];
                }
            }
        }
        dw
    }
}

/// Derivative of the star Lorentz area and star algebraic volume around
/// vertex `b` with respect to its ambient position, contracted with the
/// velocity `w`. Vertical slots carry the Lorentz metric sign.
fn star_derivative(g: &SpacelikeGraph, tris: &[usize], b: usize, w: [f64; 3]) -> (f64, f64) {
    let mut da = 0.0;
    let mut dv = 0.0;
    for &t in tris {
        let tri = g.triangles()[t];
        let l = tri.iter().position(|&v| v == b).expect("vertex in its star");
        let i1 = tri[(l + 1) % 3];
        let i2 = tri[(l + 2) % 3];
        let p0 = g.planar(b);
        let p1 = g.planar(i1);
        let p2 = g.planar(i2);
        let u0 = g.height(b);
        let u1 = g.height(i1);
        let u2 = g.height(i2);
        let e1 = [p1[0] - p0[0], p1[1] - p0[1], u1 - u0];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1], u2 - u0];
        let g11 = e1[0] * e1[0] + e1[1] * e1[1] - e1[2] * e1[2];
        let g22 = e2[0] * e2[0] + e2[1] * e2[1] - e2[2] * e2[2];
        let g12 = e1[0] * e2[0] + e1[1] * e2[1] - e1[2] * e2[2];
        let det = (g11 * g22 - g12 * g12).max(1e-300);
        let s = det.sqrt();
        let c1 = g12 - g22;
        let c2 = g12 - g11;
        da += (c1 * (e1[0] * w[0] + e1[1] * w[1] - e1[2] * w[2])
            + c2 * (e2[0] * w[0] + e2[1] * w[1] - e2[2] * w[2]))
            / (2.0 * s);
        let a2 = e1[0] * e2[1] - e1[1] * e2[0];
        let usum = u0 + u1 + u2;
        dv += usum / 6.0 * ((p1[1] - p2[1]) * w[0] + (p2[0] - p1[0]) * w[1]) + a2 / 6.0 * w[2];
    }
    (da, dv)
}

struct Eval {
    /// Gradient of the capillary energy in the dof layout.
    ge: Vec<f64>,
    /// Gradient of the algebraic volume in the dof layout.
    gv: Vec<f64>,
    /// Lumped planar vertex masses of the current mesh.
    mass: Vec<f64>,
}

fn std_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Gradients of the capillary energy and of the algebraic volume in the dof
/// layout. Interior rows are the analytic vertical derivatives; boundary
/// rows chain the analytic position derivatives of the star area, star
/// volume and wetted band through the chart velocity.
fn evaluate(
    g: &SpacelikeGraph,
    lambda: f64,
    map: &DofMap,
    stars: &[Vec<usize>],
    x: &[f64],
) -> Eval {
    let (num, mass) = mesh::area_gradient_and_mass(g);
    let n_int = map.n_interior();
    let nb = map.bverts.len();
    let mut ge = vec![0.0f64; n_int + nb];
    let mut gv = vec![0.0f64; n_int + nb];
    for (i, &id) in map.interior.iter().enumerate() {
        ge[i] = num[id];
        gv[i] = mass[id];
    }
    let sb = &x[n_int..];
    let dw = map.wetted_gradient(g, sb);
    for j in 0..nb {
        let b = map.bverts[j];
        let w = map.boundary_velocity(j, sb[j]);
        let (da, dvol) = star_derivative(g, &stars[b], b, w);
        ge[n_int + j] = da + lambda * dw[j];
        gv[n_int + j] = dvol;
    }
    Eval { ge, gv, mass }
}

/// Stationarity residual of the report measure: the larger of the interior
/// lumped mean-curvature deviation and the boundary contact-angle deviation.
fn report_residual(
    g: &SpacelikeGraph,
    support: &SupportSurface,
    map: &DofMap,
    eval: &Eval,
) -> Result<f64, FlowError> {
    let h_int: Vec<f64> = map
        .interior
        .iter()
        .enumerate()
        .map(|(i, &id)| eval.ge[i] / (2.0 * eval.mass[id]))
        .collect();
    let frames = mesh::boundary_frames(g, support)?;
    let angles: Vec<f64> = frames.iter().map(|f| f.angle_projection()).collect();
    Ok(std_of(&h_int).max(std_of(&angles)))
}

/// Sparse symmetric Hessians of the capillary energy and of the algebraic
/// volume in the dof layout, stored as lower-triangle triplets over a shared
/// index pattern.
struct HessPair {
    rows: Vec<u32>,
    cols: Vec<u32>,
    he: Vec<f64>,
    hv: Vec<f64>,
    n: usize,
}

impl HessPair {
    fn push(&mut self, a: usize, b: usize, he: f64, hv: f64) {
        let (i, j) = if a >= b { (a, b) } else { (b, a) };
        self.rows.push(i as u32);
        self.cols.push(j as u32);
        self.he.push(he);
        self.hv.push(hv);
    }

    /// `(ce * He + cv * Hv) x` expanded over the symmetric pattern.
    fn apply(&self, ce: f64, cv: f64, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0f64; self.n];
        for k in 0..self.rows.len() {
            let i = self.rows[k] as usize;
            let j = self.cols[k] as usize;
            let v = ce * self.he[k] + cv * self.hv[k];
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }
}

fn mdot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

/// Second variation of one triangle's Lorentz area under edge variations
/// `(y1, y2)` and `(z1, z2)` of `(e1, e2)`.
#[allow(clippy::too_many_arguments)]
fn area_bilinear(
    e1: &[f64; 3],
    e2: &[f64; 3],
    g11: f64,
    g12: f64,
    g22: f64,
    s: f64,
    y1: &[f64; 3],
    y2: &[f64; 3],
    z1: &[f64; 3],
    z2: &[f64; 3],
) -> f64 {
    let da = |v1: &[f64; 3], v2: &[f64; 3]| {
        ((g22 * mdot3(e1, v1) - g12 * mdot3(e2, v1))
            + (g11 * mdot3(e2, v2) - g12 * mdot3(e1, v2)))
            / (2.0 * s)
    };
    let az_y1 = 2.0 * mdot3(e2, z2) * mdot3(e1, y1) + g22 * mdot3(z1, y1)
        - (mdot3(z1, e2) + mdot3(e1, z2)) * mdot3(e2, y1)
        - g12 * mdot3(z2, y1);
    let bz_y2 = 2.0 * mdot3(e1, z1) * mdot3(e2, y2) + g11 * mdot3(z2, y2)
        - (mdot3(z2, e1) + mdot3(e2, z1)) * mdot3(e1, y2)
        - g12 * mdot3(z1, y2);
    (az_y1 + bz_y2) / (2.0 * s) - 2.0 * da(y1, y2) * da(z1, z2) / s
}

/// Edge variation of one vertex slot moving with velocity `w`: variations of
/// `(e1, e2)` plus the vertical component sum entering the volume form.
fn slot_field(l: usize, w: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    match l {
        0 => ([-w[0], -w[1], -w[2]], [-w[0], -w[1], -w[2]]),
        1 => (*w, [0.0; 3]),
        _ => ([0.0; 3], *w),
    }
}

/// Exact Hessians of the capillary energy and the algebraic volume at the
/// current iterate. Interior dofs move vertically, boundary dofs move along
/// the chart rays; boundary diagonals carry the chart acceleration through
/// the first-derivative rows and the wetted band curvature.
fn assemble_hessians(g: &SpacelikeGraph, map: &DofMap, lambda: f64, x: &[f64]) -> HessPair {
    let n_int = map.n_interior();
    let nb = map.bverts.len();
    let nv = g.vertex_count();
    let mut dof_of = vec![usize::MAX; nv];
    for (i, &id) in map.interior.iter().enumerate() {
        dof_of[id] = i;
    }
    for (j, &b) in map.bverts.iter().enumerate() {
        dof_of[b] = n_int + j;
    }
    let sb = &x[n_int..];
    let mut vel = vec![[0.0f64, 0.0, 1.0]; nv];
    let mut acc = vec![[0.0f64; 3]; nv];
    for (j, &b) in map.bverts.iter().enumerate() {
        vel[b] = map.boundary_velocity(j, sb[j]);
        acc[b] = map.boundary_acceleration(j, sb[j]);
    }

    let tri_count = g.triangles().len();
    let mut out = HessPair {
        rows: Vec::with_capacity(6 * tri_count + 3 * nb),
        cols: Vec::with_capacity(6 * tri_count + 3 * nb),
        he: Vec::with_capacity(6 * tri_count + 3 * nb),
        hv: Vec::with_capacity(6 * tri_count + 3 * nb),
        n: map.dof_count(),
    };

    for tri in g.triangles() {
        let p: [[f64; 3]; 3] = [
            point_of(g, tri[0]),
            point_of(g, tri[1]),
            point_of(g, tri[2]),
        ];
        let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
        let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
        let g11 = mdot3(&e1, &e1);
        let g22 = mdot3(&e2, &e2);
        let g12 = mdot3(&e1, &e2);
        let det = (g11 * g22 - g12 * g12).max(1e-300);
        let s = det.sqrt();
        let usum = p[0][2] + p[1][2] + p[2][2];

        let da_of = |v1: &[f64; 3], v2: &[f64; 3]| {
            ((g22 * mdot3(&e1, v1) - g12 * mdot3(&e2, v1))
                + (g11 * mdot3(&e2, v2) - g12 * mdot3(&e1, v2)))
                / (2.0 * s)
        };
        let da2_of = |v1: &[f64; 3], v2: &[f64; 3]| {
            v1[0] * e2[1] - v1[1] * e2[0] + e1[0] * v2[1] - e1[1] * v2[0]
        };
        let dv_of = |v1: &[f64; 3], v2: &[f64; 3], uz: f64| {
            uz / 6.0 * (e1[0] * e2[1] - e1[1] * e2[0]) + usum / 6.0 * da2_of(v1, v2)
        };

        let fields: [([f64; 3], [f64; 3], f64); 3] = [
            {
                let (a, b) = slot_field(0, &vel[tri[0]]);
                (a, b, vel[tri[0]][2])
            },
            {
                let (a, b) = slot_field(1, &vel[tri[1]]);
                (a, b, vel[tri[1]][2])
            },
            {
                let (a, b) = slot_field(2, &vel[tri[2]]);
                (a, b, vel[tri[2]][2])
            },
        ];

        for l in 0..3 {
            let (y1, y2, uzy) = &fields[l];
            for m in l..3 {
                let (z1, z2, uzz) = &fields[m];
                let ha = area_bilinear(&e1, &e2, g11, g12, g22, s, y1, y2, z1, z2);
                let hv = uzy / 6.0 * da2_of(z1, z2)
                    + uzz / 6.0 * da2_of(y1, y2)
                    + usum / 6.0 * (y1[0] * z2[1] - y1[1] * z2[0] + z1[0] * y2[1] - z1[1] * y2[0]);
                out.push(dof_of[tri[l]], dof_of[tri[m]], ha, hv);
            }
            let a = &acc[tri[l]];
            if a[0] != 0.0 || a[1] != 0.0 || a[2] != 0.0 {
                let (a1, a2v) = slot_field(l, a);
                let d = dof_of[tri[l]];
                out.push(d, d, da_of(&a1, &a2v), dv_of(&a1, &a2v, a[2]));
            }
        }
    }

    match &map.chart {
        BoundaryChart::Pseudosphere { radius, .. } => {
            for j in 0..nb {
                let (pj, _) = map.prev_next(j);
                let wsum = 0.5 * (map.dphi_next[pj] + map.dphi_next[j]);
                let d = n_int + j;
                out.push(d, d, lambda * radius * radius * sb[j].sinh() * wsum, 0.0);
            }
        }
        BoundaryChart::Hyperbolic { radius, .. } => {
            for j in 0..nb {
                let (pj, _) = map.prev_next(j);
                let wsum = 0.5 * (map.dphi_next[pj] + map.dphi_next[j]);
                let r2 = radius * radius;
                let d = n_int + j;
                out.push(
                    d,
                    d,
                    lambda * radius * r2 / (r2 + sb[j] * sb[j]).powf(1.5) * wsum,
                    0.0,
                );
            }
        }
        BoundaryChart::Plane { e1, e2, .. } => {
            let dc: Vec<[f64; 2]> = (0..nb)
                .map(|j| {
                    let ray = LorentzVector::xyz(map.cos_phi[j], map.sin_phi[j], map.plane_slope[j]);
                    [minkowski_inner(&ray, e1), minkowski_inner(&ray, e2)]
                })
                .collect();
            for j in 0..nb {
                let (_, nx) = map.prev_next(j);
                let cross = dc[j][0] * dc[nx][1] - dc[j][1] * dc[nx][0];
                out.push(n_int + j, n_int + nx, lambda * 0.5 * cross, 0.0);
            }
        }
    }
    out
}

fn point_of(g: &SpacelikeGraph, i: usize) -> [f64; 3] {
    let p = g.planar(i);
    [p[0], p[1], g.height(i)]
}

/// Restore the volume target by vertical shifts of the interior heights.
/// The volume is affine in a uniform interior shift, so one Newton step is
/// exact up to rounding.
fn project_volume(
    map: &DofMap,
    base: &SpacelikeGraph,
    x: &mut [f64],
    mut g: SpacelikeGraph,
    target: f64,
) -> Result<SpacelikeGraph, FlowError> {
    for _ in 0..4 {
        let v = mesh::algebraic_volume(&g);
        if (v - target).abs() <= TOL_VOLUME_PROJECTION * (1.0 + target.abs()) {
            return Ok(g);
        }
        let (_, mass) = mesh::area_gradient_and_mass(&g);
        let pool: f64 = map.interior.iter().map(|&id| mass[id]).sum();
        if !(pool > 0.0) {
            return Err(FlowError::VolumeProjection {
                residual: v - target,
            });
        }
        let delta = (target - v) / pool;
        for xi in x.iter_mut().take(map.n_interior()) {
            *xi += delta;
        }
        g = map.build(base, x)?;
    }
    let v = mesh::algebraic_volume(&g);
    if (v - target).abs() <= TOL_VOLUME_PROJECTION * (1.0 + target.abs()) {
        Ok(g)
    } else {
        Err(FlowError::VolumeProjection {
            residual: v - target,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Least-squares multiplier fitting the energy gradient to the volume
/// gradient over all rows; the stationarity system with it vanishes exactly
/// at constrained stationary states.
fn ls_multiplier(eval: &Eval) -> f64 {
    -dot(&eval.ge, &eval.gv) / dot(&eval.gv, &eval.gv)
}

/// Stationarity system in the dof layout: the gradient of the constrained
/// capillary functional. In volume mode the multiplier is the least-squares
/// fit, in mean-curvature mode it is fixed by the target.
fn stationarity_system(eval: &Eval, mode: &ConstraintMode) -> Vec<f64> {
    match mode {
        ConstraintMode::Volume(_) => {
            let mu = ls_multiplier(eval);
            eval.ge
                .iter()
                .zip(&eval.gv)
                .map(|(e, v)| e + mu * v)
                .collect()
        }
        ConstraintMode::MeanCurvature(ht) => eval
            .ge
            .iter()
            .zip(&eval.gv)
            .map(|(e, v)| e - 2.0 * ht * v)
            .collect(),
    }
}

/// Minimum-residual solve of the symmetric indefinite system `A x = b`
/// given the operator action. Returns the iterate at the tolerance, the
/// iteration cap or a Lanczos breakdown, whichever comes first.
fn minres<F>(mut apply: F, b: &[f64], rel_tol: f64, max_iters: usize) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0f64; n];

    let r1 = b.to_vec();
    let beta1sq = dot(&r1, &r1);
    if !(beta1sq > 0.0) {
        return x;
    }
    let beta1 = beta1sq.sqrt();
    let mut y = r1.clone();
    let mut r1 = r1;
    let mut r2 = r1.clone();
    let mut oldb = 0.0f64;
    let mut beta = beta1;
    let mut dbar = 0.0f64;
    let mut epsln = 0.0f64;
    let mut phibar = beta1;
    let mut cs = -1.0f64;
    let mut sn = 0.0f64;
    let mut w = vec![0.0f64; n];
    let mut w2 = vec![0.0f64; n];

    for _ in 0..max_iters {
        let v: Vec<f64> = y.iter().map(|t| t / beta).collect();
        let mut ay = apply(&v);
        if oldb > 0.0 {
            let c = beta / oldb;
            for (a, r) in ay.iter_mut().zip(&r1) {
                *a -= c * r;
            }
        }
        let alfa = dot(&v, &ay);
        let c = alfa / beta;
        for (a, r) in ay.iter_mut().zip(&r2) {
            *a -= c * r;
        }
        r1 = std::mem::replace(&mut r2, ay);
        y = r2.clone();
        oldb = beta;
        let betasq = dot(&r2, &y);
        if !(betasq >= 0.0) || !betasq.is_finite() {
            break;
        }
        beta = betasq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = (0..n)
            .map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma)
            .collect();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += phi * wi;
        }
        if phibar <= rel_tol * beta1 || beta <= 1e-300 {
            break;
        }
    }
    x
}

/// Shared pieces of one stationarity-system evaluation.
struct SysCtx<'a> {
    map: &'a DofMap,
    init: &'a SpacelikeGraph,
    stars: &'a [Vec<usize>],
    lambda: f64,
    mode: ConstraintMode,
}

impl SysCtx<'_> {
    /// Build the graph at `x` (projecting the volume in volume mode, which
    /// adjusts `x` in place) and evaluate the stationarity system there.
    fn rebuild(&self, x: &mut Vec<f64>) -> Result<(SpacelikeGraph, Eval, Vec<f64>), FlowError> {
        let g = self.map.build(self.init, x)?;
        let g = if let ConstraintMode::Volume(target) = self.mode {
            project_volume(self.map, self.init, x, g, target)?
        } else {
            g
        };
        let eval = evaluate(&g, self.lambda, self.map, self.stars, x);
        let r = stationarity_system(&eval, &self.mode);
        Ok((g, eval, r))
    }

    /// Action of the current constrained Hessian on `v`. In volume mode the
    /// input and output are projected onto the tangent space of the volume
    /// constraint so the operator stays symmetric on that subspace.
    fn system_apply(&self, jac: &HessPair, eval: &Eval, v: &[f64]) -> Vec<f64> {
        match self.mode {
            ConstraintMode::MeanCurvature(ht) => jac.apply(1.0, -2.0 * ht, v),
            ConstraintMode::Volume(_) => {
                let gvn2 = dot(&eval.gv, &eval.gv);
                let mu = ls_multiplier(eval);
                let mut vin = v.to_vec();
                if gvn2 > 0.0 {
                    let c = dot(&vin, &eval.gv) / gvn2;
                    for (a, b) in vin.iter_mut().zip(&eval.gv) {
                        *a -= c * b;
                    }
                }
                let mut out = jac.apply(1.0, mu, &vin);
                if gvn2 > 0.0 {
                    let c = dot(&out, &eval.gv) / gvn2;
                    for (a, b) in out.iter_mut().zip(&eval.gv) {
                        *a -= c * b;
                    }
                }
                out
            }
        }
    }
}

/// Drive the graph to a stationary capillary configuration on `support`.
///
/// Interior vertices move vertically; boundary vertices slide along fixed
/// azimuth rays inside the support, so every iterate keeps its boundary
/// exactly on the support. Stationary configurations are saddle points of
/// the constrained energy: the Lorentz area integrand is concave in the
/// height gradient while boundary slides carry the opposite curvature sign,
/// so no monotone flow reaches them. The solver instead runs damped Newton
/// iterations on the stationarity system, with directions from a
/// preconditioned minimum-residual solve under finite-difference Jacobian
/// products; a backtracking line search accepts steps that keep the mesh
/// spacelike and shrink the residual norm, falling back to the
/// preconditioned merit gradient when the Newton direction is rejected. In
/// volume mode the target volume is restored exactly after every trial
/// step. The run terminates when the stationarity residual falls below
/// `residual_tol`, after `max_iters` accepted steps, or when the residual
/// norm stops improving at its floating point floor; the trace records one
/// row per iterate including the initial state. Non-convergence within
/// `max_iters` is visible in the returned report rather than an error.
pub fn solve_stationary(
    support: &SupportSurface,
    opts: &SolveOptions,
    init: &SpacelikeGraph,
) -> Result<(SpacelikeGraph, StationarityReport, Trace), FlowError> {
    opts.validate()?;
    let spacelike_support = matches!(
        support,
        SupportSurface::SpacelikePlane { .. } | SupportSurface::HyperbolicPlane { .. }
    );
    if spacelike_support && opts.lambda > -1.0 {
        return Err(FlowError::InadmissibleLambda(opts.lambda));
    }
    if let Some(s) = init.support() {
        if s != support {
            return Err(FlowError::InvalidOptions(
                "initial graph carries a different support surface".into(),
            ));
        }
    }

    let map = DofMap::new(init, support)?;
    let stars = init.vertex_stars();
    let ctx = SysCtx {
        map: &map,
        init,
        stars: &stars,
        lambda: opts.lambda,
        mode: opts.mode,
    };
    let mut x = map.init_dofs(init)?;
    let (mut g, mut eval, mut r) = ctx.rebuild(&mut x)?;
    let h_mesh = g.mesh_size();
    let sd_scale = if opts.step0 > 0.0 {
        opts.step0
    } else {
        0.1 * h_mesh * h_mesh
    };

    let mut breakdown = variational::energy(&g, support, opts.lambda)?;
    let mut residual = report_residual(&g, support, &map, &eval)?;
    let mut m = norm(&r);
    let mut trace = Trace::default();
    let mut it = 0usize;
    let mut stall = 0usize;

    loop {
        trace.rows.push(TraceRow {
            iter: it,
            energy: breakdown.energy,
            area: breakdown.surface_area,
            wetted: breakdown.wetted_area,
            volume: breakdown.volume,
            residual,
        });
        if residual < opts.residual_tol
            || it >= opts.max_iters
            || stall >= 3
            || m <= MERIT_FLOOR
        {
            break;
        }

        let jac = assemble_hessians(&g, &map, opts.lambda, &x);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let newton = minres(
            |v| ctx.system_apply(&jac, &eval, v),
            &rhs,
            INNER_TOL,
            INNER_MAX.min(map.dof_count()),
        );
        let newton =
            Some(newton).filter(|d| d.iter().all(|v| v.is_finite()) && inf_norm(d) > 0.0);

        let mut accepted = match &newton {
            Some(dir) => try_direction(&ctx, &x, dir, m),
            None => None,
        };
        let plain_t = accepted.as_ref().map(|a| a.5).unwrap_or(0.0);
        if plain_t < 0.25 {
            if let Some(dir) = &newton {
                let soc = try_corrected(&ctx, &x, dir, m);
                accepted = match (accepted, soc) {
                    (Some(p), Some(s)) => Some(if s.4 < p.4 { s } else { p }),
                    (None, s @ Some(_)) => s,
                    (p, None) => p,
                };
            }
        }
        if accepted.is_none() {
            // Fallback direction: gradient of the squared residual norm.
            // The system operator is symmetric, so the gradient is one more
            // product with the residual itself.
            let gm = ctx.system_apply(&jac, &eval, &r);
            let dir: Vec<f64> = gm.iter().map(|v| -sd_scale * v).collect();
            if dir.iter().all(|v| v.is_finite()) {
                accepted = try_direction(&ctx, &x, &dir, m);
            }
        }
        let Some((x_new, g_new, eval_new, r_new, m_new, _)) = accepted else {
            return Err(FlowError::StepUnderflow { iter: it });
        };
        if m_new >= m * (1.0 - 1e-9) {
            stall += 1;
        } else {
            stall = 0;
        }
        x = x_new;
        g = g_new;
        eval = eval_new;
        r = r_new;
        m = m_new;
        breakdown = variational::energy(&g, support, opts.lambda)?;
        residual = report_residual(&g, support, &map, &eval)?;
        it += 1;
    }

    let report = variational::stationarity_report(&g, support)?;
    Ok((g, report, trace))
}

/// Backtracking line search along `dir`: the first step that builds a
/// spacelike mesh and shrinks the residual norm wins.
fn try_direction(
    ctx: &SysCtx,
    x: &[f64],
    dir: &[f64],
    m0: f64,
) -> Option<(Vec<f64>, SpacelikeGraph, Eval, Vec<f64>, f64, f64)> {
    let mut t = 1.0f64;
    for _ in 0..MAX_HALVINGS {
        let mut xt: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        if let Ok((gt, et, rt)) = ctx.rebuild(&mut xt) {
            let mt = norm(&rt);
            if mt <= m0 * (1.0 - ARMIJO * t) + FP_SLACK * (1.0 + m0) {
                return Some((xt, gt, et, rt, mt, t));
            }
        }
        t *= 0.5;
    }
    None
}

/// Predictor along `dir` followed by a short Newton corrector loop at the
/// predicted point, accepted against the Armijo bound for the predictor
/// length. Stationary families curve through the dof space, so a straight
/// step pays a quadratic transversal penalty that caps its length; the
/// correctors remove that penalty and restore full-length progress along
/// the family.
fn try_corrected(
    ctx: &SysCtx,
    x: &[f64],
    dir: &[f64],
    m0: f64,
) -> Option<(Vec<f64>, SpacelikeGraph, Eval, Vec<f64>, f64, f64)> {
    let mut tau = 1.0f64;
    for _ in 0..4 {
        let mut xc: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + tau * d).collect();
        if let Ok((mut gc, mut ec, mut rc)) = ctx.rebuild(&mut xc) {
            let mut mc = norm(&rc);
            let bound = m0 * (1.0 - ARMIJO * tau) + FP_SLACK * (1.0 + m0);
            for _ in 0..4 {
                if mc <= bound {
                    break;
                }
                let jac = assemble_hessians(&gc, ctx.map, ctx.lambda, &xc);
                let rhs: Vec<f64> = rc.iter().map(|v| -v).collect();
                let d1 = minres(
                    |v| ctx.system_apply(&jac, &ec, v),
                    &rhs,
                    INNER_TOL,
                    INNER_MAX.min(ctx.map.dof_count()),
                );
                if !d1.iter().all(|v| v.is_finite()) {
                    break;
                }
                let mut xn: Vec<f64> = xc.iter().zip(&d1).map(|(a, d)| a + d).collect();
                let Ok((gn, en, rn)) = ctx.rebuild(&mut xn) else {
                    break;
                };
                let mn = norm(&rn);
                if mn >= 0.5 * mc {
                    break;
                }
                xc = xn;
                gc = gn;
                ec = en;
                rc = rn;
                mc = mn;
            }
            if mc <= bound {
                return Some((xc, gc, ec, rc, mc, tau));
            }
        }
        tau *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_graph, build_graph_from_samples, DomainSpec};
    use std::f64::consts::PI;

    fn waist() -> SupportSurface {
        SupportSurface::unit_pseudosphere()
    }

    fn flat_disc(res: usize) -> SpacelikeGraph {
        build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: res,
            },
            |_, _| 0.0,
            Some(waist()),
        )
        .expect("flat disc")
    }

    /// Cap of constant mean curvature one with boundary on the waist.
    fn stationary_cap(res: usize) -> SpacelikeGraph {
        build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: res,
            },
            |x, y| (1.0 + x * x + y * y).sqrt() - 2.0f64.sqrt(),
            Some(waist()),
        )
        .expect("stationary cap")
    }

    fn cmc_annulus(res: usize) -> SpacelikeGraph {
        let samples = rotational_cmc_profile(1.0, 0.5, [0.3, 1.2], res + 1).expect("profile");
        let sectors = 3 * res;
        let mut heights = Vec::with_capacity((res + 1) * sectors);
        for (_, u) in &samples {
            for _ in 0..sectors {
                heights.push(*u);
            }
        }
        build_graph_from_samples(
            &DomainSpec::Annulus {
                inner_radius: 0.3,
                outer_radius: 1.2,
                resolution: res,
            },
            heights,
            None,
        )
        .expect("revolved annulus")
    }


    #[test]
    fn profile_matches_cap_meridian() {
        let samples = rotational_cmc_profile(1.0, 0.0, [0.0, 1.0], 65).expect("profile");
        for &(rho, u) in &samples {
            let exact = (1.0 + rho * rho).sqrt() - 1.0;
            assert!(
                (u - exact).abs() < 1e-10,
                "rho {rho}: u {u} vs exact {exact}"
            );
        }
        let flat = rotational_cmc_profile(0.0, 0.0, [0.0, 1.0], 17).expect("flat profile");
        for &(_, u) in &flat {
            assert!(u.abs() < 1e-14);
        }
    }

    #[test]
    fn profile_flags_invalid_ranges() {
        assert!(matches!(
            rotational_cmc_profile(1.0, 0.5, [0.0, 1.0], 16),
            Err(FlowError::ConicalPoint { .. })
        ));
        assert!(matches!(
            rotational_cmc_profile(1.0, 0.0, [-0.1, 1.0], 16),
            Err(FlowError::InvalidOptions(_))
        ));
        assert!(matches!(
            rotational_cmc_profile(1.0, 0.0, [1.0, 0.5], 16),
            Err(FlowError::InvalidOptions(_))
        ));
        assert!(matches!(
            rotational_cmc_profile(1.0, 0.0, [0.0, 1.0], 1),
            Err(FlowError::InvalidOptions(_))
        ));
    }

    #[test]
    fn profile_revolved_annulus_is_cmc() {
        let g = cmc_annulus(64);
        let h = mesh::mean_curvature(&g);
        let mut worst = 0.0f64;
        for i in 0..g.vertex_count() {
            if g.is_boundary(i) {
                continue;
            }
            worst = worst.max((h[i] - 1.0).abs());
        }
        assert!(worst < 5e-3, "interior mean curvature deviation {worst}");
    }

    #[test]
    fn perturb_is_deterministic_and_scaled() {
        let g = stationary_cap(16);
        let same = perturb(&g, 0.0, 9).expect("identity");
        assert_eq!(g.heights(), same.heights());

        let a = perturb(&g, 0.02, 7).expect("perturb a");
        let b = perturb(&g, 0.02, 7).expect("perturb b");
        assert_eq!(a.heights(), b.heights());

        let c = perturb(&g, 0.02, 8).expect("perturb c");
        assert!(a.heights() != c.heights());

        let peak = (0..g.vertex_count())
            .map(|i| (a.height(i) - g.height(i)).abs())
            .fold(0.0, f64::max);
        assert!((peak - 0.02).abs() < 1e-12, "peak {peak}");
        for (i, bv) in (0..g.vertex_count()).map(|i| (i, g.is_boundary(i))) {
            if bv {
                assert_eq!(a.height(i), g.height(i));
            }
        }
    }

    #[test]
    fn perturbation_raises_residual() {
        let g = stationary_cap(32);
        let before = variational::stationarity_report(&g, &waist())
            .expect("report")
            .residual;
        let p = perturb(&g, 0.02, 7).expect("perturb");
        let after = variational::stationarity_report(&p, &waist())
            .expect("report")
            .residual;
        assert!(after > 1e-3, "perturbed residual {after}");
        assert!(after > 5.0 * before, "before {before}, after {after}");
    }

    fn check_rows_against_fd(g: &SpacelikeGraph, support: &SupportSurface, lambda: f64) {
        let map = DofMap::new(g, support).expect("map");
        let stars = g.vertex_stars();
        let mut x = map.init_dofs(g).expect("dofs");
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.013 * (0.7 * k as f64).sin();
        }
        let gp = map.build(g, &x).expect("build");
        let eval = evaluate(&gp, lambda, &map, &stars, &x);

        let probe = |x: &[f64]| {
            let gg = map.build(g, x).expect("build");
            let e = variational::energy(&gg, support, lambda).expect("energy");
            (e.energy, mesh::algebraic_volume(&gg))
        };
        let h = 1e-5;
        for k in 0..map.dof_count() {
            let mut xp = x.clone();
            xp[k] += h;
            let (ep, vp) = probe(&xp);
            xp[k] = x[k] - h;
            let (em, vm) = probe(&xp);
            let fde = (ep - em) / (2.0 * h);
            let fdv = (vp - vm) / (2.0 * h);
            assert!(
                (eval.ge[k] - fde).abs() <= 1e-7 + 1e-5 * fde.abs(),
                "energy row {k}: analytic {} vs fd {fde}",
                eval.ge[k]
            );
            assert!(
                (eval.gv[k] - fdv).abs() <= 1e-7 + 1e-5 * fdv.abs(),
                "volume row {k}: analytic {} vs fd {fdv}",
                eval.gv[k]
            );
        }
    }

    fn check_hessians_against_fd(g: &SpacelikeGraph, support: &SupportSurface, lambda: f64) {
        let map = DofMap::new(g, support).expect("map");
        let stars = g.vertex_stars();
        let mut x = map.init_dofs(g).expect("dofs");
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.013 * (0.7 * k as f64).sin();
        }
        let gp = map.build(g, &x).expect("build");
        let jac = assemble_hessians(&gp, &map, lambda, &x);

        let n = map.dof_count();
        let probe = |x: &[f64]| {
            let gg = map.build(g, x).expect("build");
            let e = evaluate(&gg, lambda, &map, &stars, x);
            (e.ge, e.gv)
        };
        let h = 1e-5;
        for dir in 0..3 {
            let v: Vec<f64> = (0..n).map(|k| (0.37 * (k + dir) as f64).cos()).collect();
            let he_v = jac.apply(1.0, 0.0, &v);
            let hv_v = jac.apply(0.0, 1.0, &v);
            let xp: Vec<f64> = x.iter().zip(&v).map(|(a, d)| a + h * d).collect();
            let xm: Vec<f64> = x.iter().zip(&v).map(|(a, d)| a - h * d).collect();
            let (gep, gvp) = probe(&xp);
            let (gem, gvm) = probe(&xm);
            for k in 0..n {
                let fde = (gep[k] - gem[k]) / (2.0 * h);
                let fdv = (gvp[k] - gvm[k]) / (2.0 * h);
                assert!(
                    (he_v[k] - fde).abs() <= 1e-6 + 1e-5 * fde.abs(),
                    "energy hessian row {k}: analytic {} vs fd {fde}",
                    he_v[k]
                );
                assert!(
                    (hv_v[k] - fdv).abs() <= 1e-6 + 1e-5 * fdv.abs(),
                    "volume hessian row {k}: analytic {} vs fd {fdv}",
                    hv_v[k]
                );
            }
        }
    }

    #[test]
    fn hessian_products_match_finite_differences() {
        check_hessians_against_fd(&stationary_cap(8), &waist(), 1.0);

        let plane = SupportSurface::spacelike_plane(
            LorentzVector::xyz(0.0, 0.0, 0.5),
            LorentzVector::xyz(0.3, 0.0, 1.0),
        )
        .expect("plane");
        let tilted = build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: 8,
            },
            |x, _| 0.5 + 0.3 * x,
            Some(plane.clone()),
        )
        .expect("tilted disc");
        check_hessians_against_fd(&tilted, &plane, -1.3);

        let bowl = SupportSurface::hyperbolic_plane(
            LorentzVector::zeros(3),
            1.0,
            crate::umbilic::Branch::Upper,
        )
        .expect("bowl");
        let sheet = build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: 8,
            },
            |x, y| (1.0 + x * x + y * y).sqrt(),
            Some(bowl.clone()),
        )
        .expect("sheet");
        check_hessians_against_fd(&sheet, &bowl, -1.3);
    }

    #[test]
    fn gradient_rows_match_finite_differences() {
        check_rows_against_fd(&stationary_cap(8), &waist(), 1.0);

        let plane = SupportSurface::spacelike_plane(
            LorentzVector::xyz(0.0, 0.0, 0.5),
            LorentzVector::xyz(0.3, 0.0, 1.0),
        )
        .expect("plane");
        let tilted = build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: 8,
            },
            |x, _| 0.5 + 0.3 * x,
            Some(plane.clone()),
        )
        .expect("tilted disc");
        check_rows_against_fd(&tilted, &plane, -1.3);

        let bowl = SupportSurface::hyperbolic_plane(
            LorentzVector::zeros(3),
            1.0,
            crate::umbilic::Branch::Upper,
        )
        .expect("bowl");
        let sheet = build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: 8,
            },
            |x, y| (1.0 + x * x + y * y).sqrt(),
            Some(bowl.clone()),
        )
        .expect("sheet");
        check_rows_against_fd(&sheet, &bowl, -1.3);
    }

    #[test]
    fn flat_disc_is_immediate_fixed_point() {
        let g = flat_disc(16);
        let mut opts = SolveOptions::new(0.0, ConstraintMode::Volume(0.0));
        opts.residual_tol = 1e-10;
        opts.max_iters = 50;
        let (out, report, trace) = solve_stationary(&waist(), &opts, &g).expect("solve");
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].iter, 0);
        assert!(trace.rows[0].residual < 1e-10);
        assert!(report.residual < 1e-10);
        for i in 0..out.vertex_count() {
            assert!(out.height(i).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_cap_converges_in_mean_curvature_mode() {
        let init = perturb(&stationary_cap(32), 0.02, 7).expect("perturb");
        let mut opts = SolveOptions::new(1.0, ConstraintMode::MeanCurvature(1.0));
        opts.max_iters = 200;
        opts.residual_tol = 1e-6;
        let (out, report, trace) = solve_stationary(&waist(), &opts, &init).expect("solve");
        assert!(report.residual < 1e-6, "residual {}", report.residual);
        let first = trace.rows.first().expect("rows").residual;
        let last = trace.rows.last().expect("rows").residual;
        assert!(last < 1e-3 * first, "first {first}, last {last}");

        let class = classify_with_tol(&out, 1e-4);
        assert!(class.rms_fit < 1e-4 * class.diameter, "rms {}", class.rms_fit);
        match class.kind {
            ClassKind::HyperbolicCap { center, radius } => {
                assert!(center[0].abs() < 5e-3);
                assert!(center[1].abs() < 5e-3);
                assert!((center[2] + 2.0f64.sqrt()).abs() < 5e-3, "center {center:?}");
                assert!((radius - 1.0).abs() < 5e-3, "radius {radius}");
            }
            other => panic!("expected a hyperbolic cap, got {other:?}"),
        }
    }

    #[test]
    fn volume_mode_recovers_cap_and_conserves_volume() {
        let cap = stationary_cap(32);
        let target = mesh::algebraic_volume(&cap);
        let init = perturb(&cap, 0.02, 3).expect("perturb");
        let mut opts = SolveOptions::new(1.0, ConstraintMode::Volume(target));
        opts.max_iters = 200;
        opts.residual_tol = 5e-5;
        let (out, report, trace) = solve_stationary(&waist(), &opts, &init).expect("solve");
        assert!(report.residual < 5e-5, "residual {}", report.residual);

        for r in &trace.rows {
            assert!(
                (r.volume - target).abs() <= 1e-8 * target.abs() + 1e-12,
                "volume drift {} at iter {}",
                r.volume - target,
                r.iter
            );
        }

        match classify_with_tol(&out, 1e-4).kind {
            ClassKind::HyperbolicCap { radius, .. } => {
                assert!((radius - 1.0).abs() < 5e-3, "radius {radius}");
            }
            other => panic!("expected a hyperbolic cap, got {other:?}"),
        }
    }

    #[test]
    fn classify_recognises_cap_disc_and_other() {
        let cap = classify(&stationary_cap(24));
        assert!(cap.rms_fit < 1e-10);
        match cap.kind {
            ClassKind::HyperbolicCap { center, radius } => {
                assert!(center[0].abs() < 1e-8);
                assert!(center[1].abs() < 1e-8);
                assert!((center[2] + 2.0f64.sqrt()).abs() < 1e-8);
                assert!((radius - 1.0).abs() < 1e-8);
            }
            other => panic!("expected a hyperbolic cap, got {other:?}"),
        }

        let disc = classify(&flat_disc(16));
        assert!(disc.rms_fit < 1e-14);
        match disc.kind {
            ClassKind::PlanarDisc { height } => assert!(height.abs() < 1e-14),
            other => panic!("expected a planar disc, got {other:?}"),
        }

        let annulus = classify(&cmc_annulus(24));
        assert!(matches!(annulus.kind, ClassKind::Other), "{annulus:?}");
    }

    #[test]
    fn lambda_admissibility_gate() {
        let plane = SupportSurface::spacelike_plane(
            LorentzVector::xyz(0.0, 0.0, 0.5),
            LorentzVector::xyz(0.0, 0.0, 1.0),
        )
        .expect("plane");
        let disc = build_graph(
            &DomainSpec::Disc {
                radius: 1.0,
                resolution: 8,
            },
            |_, _| 0.5,
            Some(plane.clone()),
        )
        .expect("raised disc");

        let opts = SolveOptions::new(0.3, ConstraintMode::Volume(0.5 * PI));
        assert!(matches!(
            solve_stationary(&plane, &opts, &disc),
            Err(FlowError::InadmissibleLambda(_))
        ));

        let mut ok = SolveOptions::new(-1.2, ConstraintMode::Volume(0.5 * PI));
        ok.max_iters = 1;
        ok.residual_tol = 1e9;
        assert!(solve_stationary(&plane, &ok, &disc).is_ok());

        let mut waist_opts = SolveOptions::new(0.3, ConstraintMode::Volume(0.0));
        waist_opts.max_iters = 1;
        waist_opts.residual_tol = 1e9;
        assert!(solve_stationary(&waist(), &waist_opts, &flat_disc(8)).is_ok());
    }

    #[test]
    fn options_are_validated() {
        let g = flat_disc(8);
        let mut opts = SolveOptions::new(0.0, ConstraintMode::Volume(0.0));
        opts.residual_tol = 0.0;
        assert!(matches!(
            solve_stationary(&waist(), &opts, &g),
            Err(FlowError::InvalidOptions(_))
        ));

        let mut opts = SolveOptions::new(0.0, ConstraintMode::Volume(0.0));
        opts.max_iters = 0;
        assert!(matches!(
            solve_stationary(&waist(), &opts, &g),
            Err(FlowError::InvalidOptions(_))
        ));

        let opts = SolveOptions::new(f64::NAN, ConstraintMode::Volume(0.0));
        assert!(matches!(
            solve_stationary(&waist(), &opts, &g),
            Err(FlowError::InvalidOptions(_))
        ));

        let mut opts = SolveOptions::new(0.0, ConstraintMode::MeanCurvature(f64::NAN));
        opts.max_iters = 5;
        assert!(matches!(
            solve_stationary(&waist(), &opts, &g),
            Err(FlowError::InvalidOptions(_))
        ));

        let mut opts = SolveOptions::new(0.0, ConstraintMode::Volume(0.0));
        opts.step0 = -1.0;
        assert!(matches!(
            solve_stationary(&waist(), &opts, &g),
            Err(FlowError::InvalidOptions(_))
        ));
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let g = flat_disc(8);
        let mut opts = SolveOptions::new(0.0, ConstraintMode::Volume(0.0));
        opts.residual_tol = 1e-10;
        let (_, _, trace) = solve_stationary(&waist(), &opts, &g).expect("solve");
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("iter,energy,area,wetted,volume,residual")
        );
        assert_eq!(lines.count(), trace.rows.len());
    }
}
