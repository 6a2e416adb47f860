//! Analytic umbilical surfaces of L^3 and the pseudosphere geometry used by
//! the capillary problem: spacelike planes, the two branches of hyperbolic
//! planes, and the pseudosphere (de Sitter surface) together with its waist
//! circle, timelike-geodesic parametrisation and the projection onto the
//! waist.
//!
//! Every pseudosphere operation is computed on the normalised surface
//! `S(O, 1)` and transported by the affine map `x -> p + r x`, which scales
//! lengths uniformly and preserves all angle projections.

use crate::lorentz::{
    is_future_directed, minkowski_inner, normalized_timelike, CausalCharacter, LorentzVector,
    TAU_NULL,
};
use thiserror::Error;

/// Relative tolerance for "point lies on the surface" checks.
pub const TOL_SUPPORT: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum UmbilicError {
    #[error("point is not on the surface (defect {0:.3e})")]
    NotOnSurface(f64),
    #[error("invalid surface parameter: {0}")]
    InvalidParameter(String),
    #[error("surfaces do not intersect")]
    EmptyIntersection,
    #[error("intersection lies on the other branch of the hyperbolic plane")]
    BranchMismatch,
    #[error("configuration not supported: {0}")]
    Unsupported(String),
    #[error("operation requires ambient dimension 3, got {0}")]
    NotThreeDimensional(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Branch of a hyperbolic plane `<x - p, x - p> = -r^2`: `Upper` is the
/// future sheet (`x_last >= p_last + r`), `Lower` the past one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

/// The three umbilical surface families of L^3 (any ambient dimension for
/// the quadric data; the parametrised operations assume dimension 3).
#[derive(Clone, Debug, PartialEq)]
pub enum SupportSurface {
    /// `{ x : <x - point, normal> = 0 }` with `normal` unit future timelike.
    SpacelikePlane {
        point: LorentzVector,
        normal: LorentzVector,
    },
    /// One branch of `{ x : <x - center, x - center> = -radius^2 }`.
    HyperbolicPlane {
        center: LorentzVector,
        radius: f64,
        branch: Branch,
    },
    /// `{ x : <x - center, x - center> = radius^2 }`, a timelike surface.
    Pseudosphere {
        center: LorentzVector,
        radius: f64,
    },
}

impl SupportSurface {
    pub fn spacelike_plane(
        point: LorentzVector,
        normal: LorentzVector,
    ) -> Result<Self, UmbilicError> {
        if point.dim() != normal.dim() {
            return Err(UmbilicError::InvalidParameter(format!(
                "dimension mismatch {} vs {}",
                point.dim(),
                normal.dim()
            )));
        }
        let q = minkowski_inner(&normal, &normal);
        if q >= 0.0 {
            return Err(UmbilicError::InvalidParameter(
                "plane normal must be timelike".into(),
            ));
        }
        let normal = normalized_timelike(&normal)
            .map_err(|_| UmbilicError::InvalidParameter("degenerate plane normal".into()))?;
        if !is_future_directed(&normal).unwrap_or(false) {
            return Err(UmbilicError::InvalidParameter(
                "plane normal must be future-directed".into(),
            ));
        }
        Ok(SupportSurface::SpacelikePlane { point, normal })
    }

    pub fn hyperbolic_plane(
        center: LorentzVector,
        radius: f64,
        branch: Branch,
    ) -> Result<Self, UmbilicError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(UmbilicError::InvalidParameter(format!(
                "hyperbolic plane radius must be positive, got {radius}"
            )));
        }
        Ok(SupportSurface::HyperbolicPlane {
            center,
            radius,
            branch,
        })
    }

    pub fn pseudosphere(center: LorentzVector, radius: f64) -> Result<Self, UmbilicError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(UmbilicError::InvalidParameter(format!(
                "pseudosphere radius must be positive, got {radius}"
            )));
        }
        Ok(SupportSurface::Pseudosphere { center, radius })
    }

    /// Unit pseudosphere centred at the origin of L^3.
    pub fn unit_pseudosphere() -> Self {
        SupportSurface::Pseudosphere {
            center: LorentzVector::zeros(3),
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SupportSurface::SpacelikePlane { point, .. } => point.dim(),
            SupportSurface::HyperbolicPlane { center, .. } => center.dim(),
            SupportSurface::Pseudosphere { center, .. } => center.dim(),
        }
    }

    /// Signed defect of the defining equation at `x`, scaled to be
    /// comparable with [`TOL_SUPPORT`].
    pub fn residual(&self, x: &LorentzVector) -> f64 {
        match self {
            SupportSurface::SpacelikePlane { point, normal } => {
                minkowski_inner(&x.sub(point), normal)
            }
            SupportSurface::HyperbolicPlane { center, radius, .. } => {
                let d = x.sub(center);
                (minkowski_inner(&d, &d) + radius * radius) / (radius * radius)
            }
            SupportSurface::Pseudosphere { center, radius } => {
                let d = x.sub(center);
                (minkowski_inner(&d, &d) - radius * radius) / (radius * radius)
            }
        }
    }

    fn require_on_surface(&self, x: &LorentzVector) -> Result<(), UmbilicError> {
        let defect = self.residual(x).abs();
        let scale = 1.0 + x.euclid_norm_sq();
        if defect > TOL_SUPPORT * scale {
            Err(UmbilicError::NotOnSurface(defect))
        } else {
            Ok(())
        }
    }
}

/// Gauss map at a point of the surface.
///
/// Spacelike planes and hyperbolic planes carry their future unit timelike
/// normal (so the `Lower` branch gets `-(x - p)/r`); the pseudosphere is
/// timelike and carries the outward unit spacelike normal `(x - p)/r`.
pub fn surface_normal(
    surface: &SupportSurface,
    x: &LorentzVector,
) -> Result<LorentzVector, UmbilicError> {
    surface.require_on_surface(x)?;
    match surface {
        SupportSurface::SpacelikePlane { normal, .. } => Ok(normal.clone()),
        SupportSurface::HyperbolicPlane {
            center,
            radius,
            branch,
        } => {
            let d = x.sub(center);
            let d_last = d[d.dim() - 1];
            match branch {
                Branch::Upper if d_last < 0.0 => Err(UmbilicError::BranchMismatch),
                Branch::Lower if d_last > 0.0 => Err(UmbilicError::BranchMismatch),
                Branch::Upper => Ok(d.scaled(1.0 / radius)),
                Branch::Lower => Ok(d.scaled(-1.0 / radius)),
            }
        }
        SupportSurface::Pseudosphere { center, radius } => {
            Ok(x.sub(center).scaled(1.0 / radius))
        }
    }
}

/// Smooth extension of [`surface_normal`] to points near but not on the
/// surface: the level-set normal of the defining quadric through `x`.
///
/// Planes keep their constant normal; hyperbolic planes return the future
/// unit timelike direction of `x - p` (branch-signed); pseudospheres return
/// the unit spacelike direction of `x - p`. Errors when `x - p` is not of
/// the causal type the family's level sets require.
pub fn ambient_normal(
    surface: &SupportSurface,
    x: &LorentzVector,
) -> Result<LorentzVector, UmbilicError> {
    match surface {
        SupportSurface::SpacelikePlane { normal, .. } => Ok(normal.clone()),
        SupportSurface::HyperbolicPlane { center, branch, .. } => {
            let d = x.sub(center);
            let d_last = d[d.dim() - 1];
            match branch {
                Branch::Upper if d_last < 0.0 => Err(UmbilicError::BranchMismatch),
                Branch::Lower if d_last > 0.0 => Err(UmbilicError::BranchMismatch),
                Branch::Upper => crate::lorentz::normalized_timelike(&d).map_err(|_| {
                    UmbilicError::InvalidParameter("offset from center is not timelike".into())
                }),
                Branch::Lower => {
                    crate::lorentz::normalized_timelike(&d.scaled(-1.0)).map_err(|_| {
                        UmbilicError::InvalidParameter("offset from center is not timelike".into())
                    })
                }
            }
        }
        SupportSurface::Pseudosphere { center, .. } => {
            crate::lorentz::normalized_spacelike(&x.sub(center)).map_err(|_| {
                UmbilicError::InvalidParameter("offset from center is not spacelike".into())
            })
        }
    }
}

/// Mean curvature with respect to the orientation of [`surface_normal`]:
/// `0` for planes, `+1/r` for upper hyperbolic branches, `-1/r` for lower
/// ones, and `None` for the pseudosphere (its normal is spacelike, so the
/// future-normal convention does not apply).
pub fn mean_curvature_analytic(surface: &SupportSurface) -> Option<f64> {
    match surface {
        SupportSurface::SpacelikePlane { .. } => Some(0.0),
        SupportSurface::HyperbolicPlane { radius, branch, .. } => Some(match branch {
            Branch::Upper => 1.0 / radius,
            Branch::Lower => -1.0 / radius,
        }),
        SupportSurface::Pseudosphere { .. } => None,
    }
}

fn expect_pseudosphere(
    surface: &SupportSurface,
) -> Result<(&LorentzVector, f64), UmbilicError> {
    match surface {
        SupportSurface::Pseudosphere { center, radius } => Ok((center, *radius)),
        _ => Err(UmbilicError::Unsupported(
            "operation requires a pseudosphere".into(),
        )),
    }
}

/// Waist circle of a pseudosphere of L^3: the slice through the centre
/// height, `S(p, r) ∩ { x_3 = p_3 }`.
#[derive(Clone, Debug)]
pub struct WaistCircle {
    pub center: LorentzVector,
    pub radius: f64,
}

impl WaistCircle {
    pub fn of(surface: &SupportSurface) -> Result<Self, UmbilicError> {
        let (center, radius) = expect_pseudosphere(surface)?;
        if center.dim() != 3 {
            return Err(UmbilicError::NotThreeDimensional(center.dim()));
        }
        Ok(WaistCircle {
            center: center.clone(),
            radius,
        })
    }

    /// Point of the waist at polar angle `phi`.
    pub fn point(&self, phi: f64) -> LorentzVector {
        LorentzVector::xyz(
            self.center[0] + self.radius * phi.cos(),
            self.center[1] + self.radius * phi.sin(),
            self.center[2],
        )
    }

    /// Unit tangent of the waist at angle `phi` (spacelike).
    pub fn tangent(&self, phi: f64) -> LorentzVector {
        LorentzVector::xyz(-phi.sin(), phi.cos(), 0.0)
    }
}

/// Timelike-geodesic parametrisation of the pseudosphere through its waist:
/// `F(t, phi) = p + r (cosh t q(phi) + sinh t a)` with `q(phi)` the unit
/// waist direction. `t` is the signed geodesic parameter, `t = 0` on the
/// waist.
pub fn geodesic_param(
    surface: &SupportSurface,
    t: f64,
    phi: f64,
) -> Result<LorentzVector, UmbilicError> {
    let (center, radius) = expect_pseudosphere(surface)?;
    if center.dim() != 3 {
        return Err(UmbilicError::NotThreeDimensional(center.dim()));
    }
    Ok(LorentzVector::xyz(
        center[0] + radius * t.cosh() * phi.cos(),
        center[1] + radius * t.cosh() * phi.sin(),
        center[2] + radius * t.sinh(),
    ))
}

/// Velocity `dF/dt` of the geodesic parametrisation; timelike of causal norm
/// `-r^2`, future-directed.
pub fn geodesic_velocity(
    surface: &SupportSurface,
    t: f64,
    phi: f64,
) -> Result<LorentzVector, UmbilicError> {
    let (center, radius) = expect_pseudosphere(surface)?;
    if center.dim() != 3 {
        return Err(UmbilicError::NotThreeDimensional(center.dim()));
    }
    Ok(LorentzVector::xyz(
        radius * t.sinh() * phi.cos(),
        radius * t.sinh() * phi.sin(),
        radius * t.cosh(),
    ))
}

/// Projection of the unit pseudosphere onto its waist circle along the
/// timelike geodesics:
///
/// ```text
/// pi(p) = (p + <p,a> a) / sqrt(1 + <p,a>^2)
/// ```
///
/// For a general pseudosphere the input is normalised first. The image lies
/// on the waist and `pi` restricted to the waist is the identity.
pub fn project_pi(
    surface: &SupportSurface,
    x: &LorentzVector,
) -> Result<LorentzVector, UmbilicError> {
    let (center, radius) = expect_pseudosphere(surface)?;
    surface.require_on_surface(x)?;
    let p = x.sub(center).scaled(1.0 / radius);
    let d = p.dim();
    let pa = -p[d - 1];
    let g = (1.0 + pa * pa).sqrt();
    let mut horiz = p.as_slice().to_vec();
    horiz[d - 1] = 0.0;
    let pi = LorentzVector::new(horiz).scaled(1.0 / g);
    Ok(pi.scaled(radius).add(center))
}

/// Exact differential of [`project_pi`] on the unit pseudosphere:
///
/// ```text
/// dpi_p(v) = (v + <v,a> a)/g - (p + <p,a> a) <p,a><v,a> / g^3,
/// g = sqrt(1 + <p,a>^2).
/// ```
///
/// For tangent `v` the image is tangent to the waist and satisfies the
/// covering norm identity
///
/// ```text
/// <dpi(v), dpi(v)> (1 + <p,a>^2) = <v, v> + <v,a>^2 / (1 + <p,a>^2),
/// ```
///
/// so spacelike directions can never be crushed: the projection of a
/// spacelike curve is an immersion.
pub fn project_pi_differential(
    surface: &SupportSurface,
    x: &LorentzVector,
    v: &LorentzVector,
) -> Result<LorentzVector, UmbilicError> {
    let (center, radius) = expect_pseudosphere(surface)?;
    surface.require_on_surface(x)?;
    if v.dim() != x.dim() {
        return Err(UmbilicError::InvalidParameter(format!(
            "dimension mismatch {} vs {}",
            v.dim(),
            x.dim()
        )));
    }
    let p = x.sub(center).scaled(1.0 / radius);
    let d = p.dim();
    let pa = -p[d - 1];
    let va = -v[d - 1];
    let g2 = 1.0 + pa * pa;
    let g = g2.sqrt();
    let mut horiz_v = v.as_slice().to_vec();
    horiz_v[d - 1] = 0.0;
    let mut horiz_p = p.as_slice().to_vec();
    horiz_p[d - 1] = 0.0;
    let first = LorentzVector::new(horiz_v).scaled(1.0 / g);
    let second = LorentzVector::new(horiz_p).scaled(pa * va / (g2 * g));
    // The differential is scale-equivariant; v is a velocity, not a point,
    // so only the radius normalisation of v enters and cancels against the
    // final rescale.
    Ok(first.sub(&second))
}

/// Height of the circle `H^2((0,0,c), r) ∩ S^2_1(O, 1)`, obtained by
/// subtracting the two quadric equations: `x_3 = (c^2 - r^2 - 1) / (2c)`.
/// The intersection is never empty for `c != 0` and lies on the upper branch
/// for `c < 0`, on the lower one for `c > 0`.
pub fn cap_boundary_height(c: f64, r: f64) -> Result<f64, UmbilicError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(UmbilicError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if c == 0.0 || !c.is_finite() {
        return Err(UmbilicError::InvalidParameter(
            "axis height c must be nonzero".into(),
        ));
    }
    Ok((c * c - r * r - 1.0) / (2.0 * c))
}

/// Closed-form contact angle projection `<N, N_S>` along the intersection of
/// an umbilical surface with a pseudosphere support.
///
/// After normalising the pseudosphere to `S(O, 1)`:
/// - spacelike plane through `p` with future unit normal `v`: `<p, v>`;
/// - hyperbolic plane `H^2(p, r)` (timelike centre): `(1 - r^2 - <p,p>)/(2r)`
///   on the upper branch and its negative on the lower one.
///
/// The intersection is validated by explicit parametrisation; an empty
/// intersection or one lying on the other branch is an error.
pub fn analytic_contact_angle(
    surface: &SupportSurface,
    support: &SupportSurface,
) -> Result<f64, UmbilicError> {
    let (s_center, s_radius) = expect_pseudosphere(support)?;
    if s_center.dim() != 3 {
        return Err(UmbilicError::NotThreeDimensional(s_center.dim()));
    }
    match surface {
        SupportSurface::SpacelikePlane { point, normal } => {
            let p = point.sub(s_center).scaled(1.0 / s_radius);
            Ok(minkowski_inner(&p, normal))
        }
        SupportSurface::HyperbolicPlane {
            center,
            radius,
            branch,
        } => {
            let p = center.sub(s_center).scaled(1.0 / s_radius);
            let r = radius / s_radius;
            let pp = minkowski_inner(&p, &p);
            if matches!(
                crate::lorentz::causal_character(&p, TAU_NULL),
                CausalCharacter::Spacelike | CausalCharacter::Lightlike
            ) {
                return Err(UmbilicError::Unsupported(
                    "hyperbolic centre must be timelike relative to the pseudosphere centre"
                        .into(),
                ));
            }
            // Intersection circle: <p, x> = k on the unit pseudosphere.
            let k = (1.0 + pp + r * r) / 2.0;
            let rad_sq = 1.0 - k * k / pp;
            if rad_sq <= 0.0 {
                return Err(UmbilicError::EmptyIntersection);
            }
            // Branch check: sign of the last coordinate of x - p along the
            // circle, sampled at the extremes of the parametrisation.
            let x0 = p.scaled(k / pp);
            let (e1, e2) = orthonormal_spacelike_complement(&p)?;
            let rad = rad_sq.sqrt();
            for i in 0..8 {
                let phi = std::f64::consts::TAU * i as f64 / 8.0;
                let x = x0
                    .add(&e1.scaled(rad * phi.cos()))
                    .add(&e2.scaled(rad * phi.sin()));
                let d_last = x[2] - p[2];
                let ok = match branch {
                    Branch::Upper => d_last > 0.0,
                    Branch::Lower => d_last < 0.0,
                };
                if !ok {
                    return Err(UmbilicError::BranchMismatch);
                }
            }
            let base = (1.0 - r * r - pp) / (2.0 * r);
            Ok(match branch {
                Branch::Upper => base,
                Branch::Lower => -base,
            })
        }
        SupportSurface::Pseudosphere { .. } => Err(UmbilicError::Unsupported(
            "contact angle is defined for spacelike surfaces meeting the support".into(),
        )),
    }
}

/// Orthonormal spacelike pair spanning the orthogonal complement of a
/// timelike vector in L^3.
pub fn orthonormal_spacelike_complement(
    p: &LorentzVector,
) -> Result<(LorentzVector, LorentzVector), UmbilicError> {
    if p.dim() != 3 {
        return Err(UmbilicError::NotThreeDimensional(p.dim()));
    }
    let pp = minkowski_inner(p, p);
    if pp >= 0.0 {
        return Err(UmbilicError::InvalidParameter(
            "complement basis requires a timelike vector".into(),
        ));
    }
    // Start from a coordinate direction least aligned with p and project.
    let trial = if p[0].abs() <= p[1].abs() {
        LorentzVector::xyz(1.0, 0.0, 0.0)
    } else {
        LorentzVector::xyz(0.0, 1.0, 0.0)
    };
    let e1 = {
        let coef = minkowski_inner(&trial, p) / pp;
        let v = trial.sub(&p.scaled(coef));
        crate::lorentz::normalized_spacelike(&v)
            .map_err(|_| UmbilicError::InvalidParameter("degenerate complement".into()))?
    };
    let e2 = {
        let c = crate::lorentz::cross_l(p, &e1)
            .map_err(|_| UmbilicError::NotThreeDimensional(p.dim()))?;
        crate::lorentz::normalized_spacelike(&c)
            .map_err(|_| UmbilicError::InvalidParameter("degenerate complement".into()))?
    };
    Ok((e1, e2))
}

/// Parametrise the intersection circle of an umbilical surface with the
/// support pseudosphere. Returns points on both surfaces, suitable for
/// sampled contact-angle verification.
pub fn intersection_circle(
    surface: &SupportSurface,
    support: &SupportSurface,
    samples: usize,
) -> Result<Vec<LorentzVector>, UmbilicError> {
    let (s_center, s_radius) = expect_pseudosphere(support)?;
    match surface {
        SupportSurface::SpacelikePlane { point, normal } => {
            let p = point.sub(s_center).scaled(1.0 / s_radius);
            let d = minkowski_inner(&p, normal);
            let (e1, e2) = orthonormal_spacelike_complement(normal)?;
            let x0 = normal.scaled(-d);
            let rad = (1.0 + d * d).sqrt();
            Ok((0..samples)
                .map(|i| {
                    let phi = std::f64::consts::TAU * i as f64 / samples as f64;
                    let x = x0
                        .add(&e1.scaled(rad * phi.cos()))
                        .add(&e2.scaled(rad * phi.sin()));
                    x.scaled(s_radius).add(s_center)
                })
                .collect())
        }
        SupportSurface::HyperbolicPlane { center, radius, .. } => {
            let p = center.sub(s_center).scaled(1.0 / s_radius);
            let r = radius / s_radius;
            let pp = minkowski_inner(&p, &p);
            if pp >= 0.0 {
                return Err(UmbilicError::Unsupported(
                    "hyperbolic centre must be timelike relative to the pseudosphere centre"
                        .into(),
                ));
            }
            let k = (1.0 + pp + r * r) / 2.0;
            let rad_sq = 1.0 - k * k / pp;
            if rad_sq <= 0.0 {
                return Err(UmbilicError::EmptyIntersection);
            }
            let x0 = p.scaled(k / pp);
            let (e1, e2) = orthonormal_spacelike_complement(&p)?;
            let rad = rad_sq.sqrt();
            Ok((0..samples)
                .map(|i| {
                    let phi = std::f64::consts::TAU * i as f64 / samples as f64;
                    let x = x0
                        .add(&e1.scaled(rad * phi.cos()))
                        .add(&e2.scaled(rad * phi.sin()));
                    x.scaled(s_radius).add(s_center)
                })
                .collect())
        }
        SupportSurface::Pseudosphere { .. } => Err(UmbilicError::Unsupported(
            "intersection circle is defined for spacelike surfaces".into(),
        )),
    }
}

impl std::fmt::Display for SupportSurface {
    /// Plain-text structured form consumed by the CLI config loader.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt_vec = |v: &LorentzVector| {
            v.as_slice()
                .iter()
                .map(|c| format!("{c:.17}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            SupportSurface::SpacelikePlane { point, normal } => {
                writeln!(f, "kind = plane")?;
                writeln!(f, "point = {}", fmt_vec(point))?;
                write!(f, "normal = {}", fmt_vec(normal))
            }
            SupportSurface::HyperbolicPlane {
                center,
                radius,
                branch,
            } => {
                writeln!(f, "kind = hyperbolic")?;
                writeln!(f, "center = {}", fmt_vec(center))?;
                writeln!(f, "radius = {radius:.17}")?;
                write!(
                    f,
                    "branch = {}",
                    match branch {
                        Branch::Upper => "upper",
                        Branch::Lower => "lower",
                    }
                )
            }
            SupportSurface::Pseudosphere { center, radius } => {
                writeln!(f, "kind = pseudosphere")?;
                writeln!(f, "center = {}", fmt_vec(center))?;
                write!(f, "radius = {radius:.17}")
            }
        }
    }
}

impl std::str::FromStr for SupportSurface {
    type Err = UmbilicError;

    fn from_str(text: &str) -> Result<Self, UmbilicError> {
        let mut kv = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UmbilicError::Parse(format!("expected key = value, got {line:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |key: &str| {
            kv.get(key)
                .cloned()
                .ok_or_else(|| UmbilicError::Parse(format!("missing key {key:?}")))
        };
        let parse_vec = |s: &str| -> Result<LorentzVector, UmbilicError> {
            let coords: Result<Vec<f64>, _> =
                s.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let coords = coords.map_err(|e| UmbilicError::Parse(e.to_string()))?;
            if coords.len() < 2 {
                return Err(UmbilicError::Parse("vector needs at least 2 entries".into()));
            }
            Ok(LorentzVector::new(coords))
        };
        let parse_f = |s: &str| -> Result<f64, UmbilicError> {
            s.parse::<f64>().map_err(|e| UmbilicError::Parse(e.to_string()))
        };
        match get("kind")?.as_str() {
            "plane" => SupportSurface::spacelike_plane(
                parse_vec(&get("point")?)?,
                parse_vec(&get("normal")?)?,
            ),
            "hyperbolic" => {
                let branch = match get("branch")?.as_str() {
                    "upper" => Branch::Upper,
                    "lower" => Branch::Lower,
                    other => {
                        return Err(UmbilicError::Parse(format!("unknown branch {other:?}")))
                    }
                };
                SupportSurface::hyperbolic_plane(
                    parse_vec(&get("center")?)?,
                    parse_f(&get("radius")?)?,
                    branch,
                )
            }
            "pseudosphere" => SupportSurface::pseudosphere(
                parse_vec(&get("center")?)?,
                parse_f(&get("radius")?)?,
            ),
            other => Err(UmbilicError::Parse(format!("unknown surface kind {other:?}"))),
        }
    }
}
