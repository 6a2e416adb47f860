//! Minkowski linear algebra: the Lorentzian inner product, causal
//! classification, hyperbolic contact angles and the orthonormal frame
//! algebra along free boundaries.
//!
//! Vectors are dimension-generic: a [`LorentzVector`] with `d` components
//! lives in L^d with signature (+, ..., +, -), the last coordinate being the
//! timelike one. The distinguished future-pointing unit timelike axis is
//! `a = (0, ..., 0, 1)`.

use thiserror::Error;

/// Relative threshold below which a squared causal norm counts as zero.
///
/// A vector `v` is classified lightlike when `|<v,v>| <= TAU_NULL * |v|_e^2`
/// with `|v|_e` the Euclidean norm, so the test is scale-invariant.
pub const TAU_NULL: f64 = 1e-10;

/// Tolerance for orthonormal-frame identities (unit norms, orthogonality,
/// determinant consistency).
pub const TOL_FRAME: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum LorentzError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operation requires a causal (timelike or lightlike) vector; got a spacelike one")]
    NotCausal,
    #[error("operation defined only in ambient dimension 3, got {0}")]
    NotThreeDimensional(usize),
    #[error("spacelike support requires <N, N_Sigma> <= -1, got {0}")]
    InadmissibleAngle(f64),
    #[error("projection constraint epsilon (m^2 - s^2) = -1 violated by {0:.3e}")]
    ProjectionConstraint(f64),
    #[error("input frame is not orthonormal for the given support class (defect {0:.3e})")]
    NotOrthonormal(f64),
    #[error("cannot normalise a vector of causal norm {0:.3e}")]
    DegenerateNorm(f64),
}

/// Causal type of a vector with respect to the Minkowski product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalCharacter {
    Spacelike,
    Lightlike,
    Timelike,
}

/// Causal class of a support surface. The sign `epsilon` is +1 for timelike
/// supports (the pseudosphere) and -1 for spacelike ones (spacelike and
/// hyperbolic planes); it fixes the causal types of the support frame:
/// `<N_Sigma, N_Sigma> = epsilon` and `<nu_Sigma, nu_Sigma> = -epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportClass {
    Timelike,
    Spacelike,
}

impl SupportClass {
    pub fn epsilon(self) -> f64 {
        match self {
            SupportClass::Timelike => 1.0,
            SupportClass::Spacelike => -1.0,
        }
    }
}

/// A point or vector of L^d, `d >= 2`, held as plain coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzVector {
    coords: Vec<f64>,
}

impl LorentzVector {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() >= 2, "ambient dimension must be at least 2");
        Self { coords }
    }

    /// Three-dimensional convenience constructor (the surface-theory case).
    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new(vec![x, y, z])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    /// The future unit timelike axis `a = (0, ..., 0, 1)` of L^dim.
    pub fn time_axis(dim: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[dim - 1] = 1.0;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn euclid_norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.coords.iter().map(|c| s * c).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim(), rhs.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim(), rhs.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for LorentzVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// Minkowski product `<u, v> = sum_{i < d-1} u_i v_i - u_{d-1} v_{d-1}`.
pub fn minkowski_inner(u: &LorentzVector, v: &LorentzVector) -> f64 {
    assert_eq!(
        u.dim(),
        v.dim(),
        "minkowski_inner: dimension mismatch {} vs {}",
        u.dim(),
        v.dim()
    );
    let d = u.dim();
    let mut acc = 0.0;
    for i in 0..d - 1 {
        acc += u[i] * v[i];
    }
    acc - u[d - 1] * v[d - 1]
}

/// Classify `v` as spacelike, lightlike or timelike. The lightlike band is
/// `|<v,v>| <= tau_null * |v|_e^2`, so rescaling `v` never changes the verdict.
pub fn causal_character(v: &LorentzVector, tau_null: f64) -> CausalCharacter {
    let q = minkowski_inner(v, v);
    let scale = v.euclid_norm_sq();
    if q.abs() <= tau_null * scale {
        CausalCharacter::Lightlike
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    }
}

/// Whether a causal vector points to the future, i.e. `<v, a> < 0` with `a`
/// the future time axis. Spacelike vectors have no time orientation and are
/// rejected.
pub fn is_future_directed(v: &LorentzVector) -> Result<bool, LorentzError> {
    match causal_character(v, TAU_NULL) {
        CausalCharacter::Spacelike => Err(LorentzError::NotCausal),
        _ => {
            let a = LorentzVector::time_axis(v.dim());
            Ok(minkowski_inner(v, &a) < 0.0)
        }
    }
}

/// Hyperbolic contact angle from the projection `m = <N, N_Sigma>`.
///
/// For a timelike support, `m = sinh(theta)` and every real value is
/// admissible. For a spacelike support the normals are both timelike and
/// future-directed, so `m = -cosh(theta) <= -1`; values above -1 are
/// rejected as inadmissible capillary data.
pub fn hyperbolic_angle(class: SupportClass, m: f64) -> Result<f64, LorentzError> {
    match class {
        SupportClass::Timelike => Ok(m.asinh()),
        SupportClass::Spacelike => {
            if m > -1.0 {
                Err(LorentzError::InadmissibleAngle(m))
            } else {
                Ok((-m).acosh())
            }
        }
    }
}

/// Lorentzian cross product in L^3: the unique `w` with
/// `<w, z> = det(u, v, z)` for all `z` (rows in that order). Coordinates:
/// `w = eta (u x v)` with `eta = diag(1, 1, -1)` and `x` the Euclidean cross.
pub fn cross_l(u: &LorentzVector, v: &LorentzVector) -> Result<LorentzVector, LorentzError> {
    if u.dim() != 3 || v.dim() != 3 {
        return Err(LorentzError::NotThreeDimensional(u.dim().max(v.dim())));
    }
    let c = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    Ok(LorentzVector::xyz(c[0], c[1], -c[2]))
}

/// Determinant of the 3x3 matrix with rows `u`, `v`, `w`.
pub fn det3(u: &LorentzVector, v: &LorentzVector, w: &LorentzVector) -> f64 {
    assert!(u.dim() == 3 && v.dim() == 3 && w.dim() == 3);
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

/// Orthonormal frame data along a free boundary point.
///
/// `tau` is the unit boundary tangent, `nu` the inward unit conormal of the
/// surface, `n` its future unit normal; `nu_sigma`, `n_sigma` are the
/// corresponding support conormal and support normal. Both triples obey
/// `det(tau, nu, n) = det(tau, nu_sigma, n_sigma) = 1`, which pins the sign
/// of `nu_sigma`.
#[derive(Clone, Debug)]
pub struct BoundaryFrame {
    pub tau: LorentzVector,
    pub nu: LorentzVector,
    pub n: LorentzVector,
    pub nu_sigma: LorentzVector,
    pub n_sigma: LorentzVector,
    pub class: SupportClass,
}

impl BoundaryFrame {
    /// Largest deviation among the orthonormality, determinant and projection
    /// identities this frame is supposed to satisfy.
    pub fn defect(&self) -> f64 {
        let e = self.class.epsilon();
        let s = minkowski_inner(&self.n, &self.nu_sigma);
        let m = minkowski_inner(&self.n, &self.n_sigma);
        let checks = [
            minkowski_inner(&self.tau, &self.tau) - 1.0,
            minkowski_inner(&self.nu, &self.nu) - 1.0,
            minkowski_inner(&self.n, &self.n) + 1.0,
            minkowski_inner(&self.tau, &self.nu),
            minkowski_inner(&self.tau, &self.n),
            minkowski_inner(&self.nu, &self.n),
            minkowski_inner(&self.nu_sigma, &self.nu_sigma) + e,
            minkowski_inner(&self.n_sigma, &self.n_sigma) - e,
            minkowski_inner(&self.nu_sigma, &self.n_sigma),
            minkowski_inner(&self.tau, &self.nu_sigma),
            minkowski_inner(&self.tau, &self.n_sigma),
            det3(&self.tau, &self.nu, &self.n) - 1.0,
            det3(&self.tau, &self.nu_sigma, &self.n_sigma) - 1.0,
            e * (m * m - s * s) + 1.0,
        ];
        checks.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    /// Contact angle projection `<N, N_Sigma>` of this frame.
    pub fn angle_projection(&self) -> f64 {
        minkowski_inner(&self.n, &self.n_sigma)
    }
}

/// Recover the surface frame `(N, nu)` from its projections onto the support
/// frame: `s = <N, nu_Sigma>`, `m = <N, N_Sigma>`.
///
/// The expansion in the orthonormal pair `(nu_Sigma, N_Sigma)` of the normal
/// plane of the boundary reads
///
/// ```text
/// N  = -eps s nu_Sigma + eps m N_Sigma
/// nu = -m  nu_Sigma    + s  N_Sigma
/// ```
///
/// subject to `eps (m^2 - s^2) = -1`. Inputs are validated: the support pair
/// must be orthonormal for `class` and `(s, m)` must satisfy the constraint
/// within [`TOL_FRAME`].
pub fn frame_from_projections(
    s: f64,
    m: f64,
    class: SupportClass,
    nu_sigma: &LorentzVector,
    n_sigma: &LorentzVector,
) -> Result<(LorentzVector, LorentzVector), LorentzError> {
    if nu_sigma.dim() != n_sigma.dim() {
        return Err(LorentzError::DimensionMismatch(nu_sigma.dim(), n_sigma.dim()));
    }
    let e = class.epsilon();
    let defect = [
        minkowski_inner(nu_sigma, nu_sigma) + e,
        minkowski_inner(n_sigma, n_sigma) - e,
        minkowski_inner(nu_sigma, n_sigma),
    ]
    .iter()
    .fold(0.0_f64, |acc, c| acc.max(c.abs()));
    if defect > TOL_FRAME {
        return Err(LorentzError::NotOrthonormal(defect));
    }
    let c = e * (m * m - s * s) + 1.0;
    if c.abs() > TOL_FRAME {
        return Err(LorentzError::ProjectionConstraint(c));
    }
    let n = nu_sigma.scaled(-e * s).add(&n_sigma.scaled(e * m));
    let nu = nu_sigma.scaled(-m).add(&n_sigma.scaled(s));
    Ok((n, nu))
}

/// Normalise a spacelike vector to unit causal norm.
pub fn normalized_spacelike(v: &LorentzVector) -> Result<LorentzVector, LorentzError> {
    let q = minkowski_inner(v, v);
    if q <= 0.0 || !q.is_finite() {
        return Err(LorentzError::DegenerateNorm(q));
    }
    Ok(v.scaled(1.0 / q.sqrt()))
}

/// Normalise a timelike vector to causal norm -1, preserving orientation.
pub fn normalized_timelike(v: &LorentzVector) -> Result<LorentzVector, LorentzError> {
    let q = minkowski_inner(v, v);
    if q >= 0.0 || !q.is_finite() {
        return Err(LorentzError::DegenerateNorm(q));
    }
    Ok(v.scaled(1.0 / (-q).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn inner_product_signature() {
        let a = LorentzVector::time_axis(3);
        assert_relative_eq!(minkowski_inner(&a, &a), -1.0, epsilon = 1e-15);
        let v = LorentzVector::xyz(SQRT2, 0.0, 1.0);
        assert_relative_eq!(minkowski_inner(&v, &v), 1.0, epsilon = 1e-15);
        // Bilinearity spot check in dimension 4.
        let u = LorentzVector::new(vec![1.0, 2.0, 3.0, 4.0]);
        let w = LorentzVector::new(vec![-2.0, 0.5, 1.0, 1.0]);
        assert_relative_eq!(minkowski_inner(&u, &w), -2.0 + 1.0 + 3.0 - 4.0, epsilon = 1e-15);
    }

    #[test]
    fn causal_classification_with_relative_null_band() {
        let tau = TAU_NULL;
        assert_eq!(
            causal_character(&LorentzVector::xyz(1.0, 0.0, 0.0), tau),
            CausalCharacter::Spacelike
        );
        assert_eq!(
            causal_character(&LorentzVector::xyz(0.0, 0.0, 1.0), tau),
            CausalCharacter::Timelike
        );
        assert_eq!(
            causal_character(&LorentzVector::xyz(1.0, 0.0, 1.0), tau),
            CausalCharacter::Lightlike
        );
        // The band is relative: scaling a nearly-null vector keeps its class.
        let nearly = LorentzVector::xyz(1.0, 0.0, 1.0 + 4e-11);
        assert_eq!(causal_character(&nearly, tau), CausalCharacter::Lightlike);
        assert_eq!(
            causal_character(&nearly.scaled(1e8), tau),
            CausalCharacter::Lightlike
        );
        assert_eq!(
            causal_character(&LorentzVector::xyz(1.0, 0.0, 1.1), tau),
            CausalCharacter::Timelike
        );
    }

    #[test]
    fn future_orientation() {
        assert!(is_future_directed(&LorentzVector::xyz(0.0, 0.0, 1.0)).unwrap());
        assert!(!is_future_directed(&LorentzVector::xyz(0.3, 0.0, -2.0)).unwrap());
        assert!(is_future_directed(&LorentzVector::xyz(1.0, 0.0, 1.0)).unwrap());
        assert_eq!(
            is_future_directed(&LorentzVector::xyz(1.0, 0.0, 0.0)),
            Err(LorentzError::NotCausal)
        );
    }

    #[test]
    fn hyperbolic_angle_branches() {
        let th = hyperbolic_angle(SupportClass::Timelike, 1.0).unwrap();
        assert_relative_eq!(th, 1.0_f64.asinh(), epsilon = 1e-12);
        assert_relative_eq!(th, 0.881373587019543, epsilon = 1e-12);

        assert_relative_eq!(
            hyperbolic_angle(SupportClass::Spacelike, -1.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            hyperbolic_angle(SupportClass::Spacelike, -(0.7_f64.cosh())).unwrap(),
            0.7,
            epsilon = 1e-12
        );
        assert!(matches!(
            hyperbolic_angle(SupportClass::Spacelike, -0.5),
            Err(LorentzError::InadmissibleAngle(_))
        ));
    }

    #[test]
    fn cross_product_is_determinant_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let u = LorentzVector::xyz(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let v = LorentzVector::xyz(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let w = LorentzVector::xyz(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let c = cross_l(&u, &v).unwrap();
            assert_relative_eq!(minkowski_inner(&c, &w), det3(&u, &v, &w), epsilon = 1e-12);
        }
    }

    /// Random Lorentz transform of the canonical support frame for a class:
    /// a rotation about the time axis composed with boosts in the two
    /// coordinate timelike planes.
    fn random_frame(rng: &mut ChaCha8Rng, class: SupportClass) -> (LorentzVector, LorentzVector) {
        let (mut nu, mut ns) = match class {
            // Pseudosphere-like: nu_Sigma timelike, N_Sigma spacelike.
            SupportClass::Timelike => (LorentzVector::xyz(0.0, 0.0, 1.0), LorentzVector::xyz(1.0, 0.0, 0.0)),
            // Plane-like: nu_Sigma spacelike, N_Sigma timelike.
            SupportClass::Spacelike => (LorentzVector::xyz(1.0, 0.0, 0.0), LorentzVector::xyz(0.0, 0.0, 1.0)),
        };
        let apply = |v: &LorentzVector, th: f64, b1: f64, b2: f64| {
            // rotation in (x, y)
            let (c, s) = (th.cos(), th.sin());
            let r = LorentzVector::xyz(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]);
            // boost in (x, z)
            let (ch, sh) = (b1.cosh(), b1.sinh());
            let r = LorentzVector::xyz(ch * r[0] + sh * r[2], r[1], sh * r[0] + ch * r[2]);
            // boost in (y, z)
            let (ch, sh) = (b2.cosh(), b2.sinh());
            LorentzVector::xyz(r[0], ch * r[1] + sh * r[2], sh * r[1] + ch * r[2])
        };
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        let b1 = 2.0 * rng.gen::<f64>() - 1.0;
        let b2 = 2.0 * rng.gen::<f64>() - 1.0;
        nu = apply(&nu, th, b1, b2);
        ns = apply(&ns, th, b1, b2);
        (nu, ns)
    }

    #[test]
    fn frame_from_projections_canonical_example() {
        // Orthogonal spacelike-support contact: s = 0, m = -1 gives N = N_Sigma,
        // nu = nu_Sigma.
        let nu_sigma = LorentzVector::xyz(1.0, 0.0, 0.0);
        let n_sigma = LorentzVector::xyz(0.0, 0.0, 1.0);
        let (n, nu) =
            frame_from_projections(0.0, -1.0, SupportClass::Spacelike, &nu_sigma, &n_sigma)
                .unwrap();
        assert_relative_eq!(minkowski_inner(&n.sub(&n_sigma), &n.sub(&n_sigma)), 0.0, epsilon = 1e-15);
        assert_eq!(n.as_slice(), n_sigma.as_slice());
        assert_eq!(nu.as_slice(), nu_sigma.as_slice());
    }

    #[test]
    fn frame_from_projections_invariants_hold_over_random_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..1000 {
            let class = if k % 2 == 0 {
                SupportClass::Timelike
            } else {
                SupportClass::Spacelike
            };
            let psi: f64 = 2.0 * rng.gen::<f64>() - 1.0;
            // Admissible projections on the constraint eps (m^2 - s^2) = -1.
            let (s, m) = match class {
                SupportClass::Timelike => (psi.cosh() * if rng.gen::<bool>() { 1.0 } else { -1.0 }, psi.sinh()),
                SupportClass::Spacelike => (psi.sinh(), -psi.cosh()),
            };
            let (nu_sigma, n_sigma) = random_frame(&mut rng, class);
            let (n, nu) = frame_from_projections(s, m, class, &nu_sigma, &n_sigma).unwrap();

            assert_relative_eq!(minkowski_inner(&n, &n), -1.0, epsilon = 1e-9);
            assert_relative_eq!(minkowski_inner(&nu, &nu), 1.0, epsilon = 1e-9);
            assert!(minkowski_inner(&n, &nu).abs() < 1e-9);
            // The projections are recovered exactly.
            assert_relative_eq!(minkowski_inner(&n, &nu_sigma), s, epsilon = 1e-9);
            assert_relative_eq!(minkowski_inner(&n, &n_sigma), m, epsilon = 1e-9);

            // Determinant consistency: complete (nu_sigma, n_sigma) with the
            // tangent tau that makes det(tau, nu_Sigma, N_Sigma) = 1; the
            // reconstructed basis must share it.
            let tau_raw = cross_l(&nu_sigma, &n_sigma).unwrap();
            let tau = normalized_spacelike(&tau_raw).unwrap();
            let tau = if det3(&tau, &nu_sigma, &n_sigma) > 0.0 {
                tau
            } else {
                tau.scaled(-1.0)
            };
            assert_relative_eq!(det3(&tau, &nu_sigma, &n_sigma), 1.0, epsilon = 1e-8);
            assert_relative_eq!(det3(&tau, &nu, &n), 1.0, epsilon = 1e-8);

            let frame = BoundaryFrame {
                tau,
                nu,
                n,
                nu_sigma,
                n_sigma,
                class,
            };
            assert!(frame.defect() < TOL_FRAME, "defect {}", frame.defect());
        }
    }

    #[test]
    fn frame_from_projections_rejects_bad_inputs() {
        let nu_sigma = LorentzVector::xyz(1.0, 0.0, 0.0);
        let n_sigma = LorentzVector::xyz(0.0, 0.0, 1.0);
        // Constraint violated.
        assert!(matches!(
            frame_from_projections(0.5, -1.0, SupportClass::Spacelike, &nu_sigma, &n_sigma),
            Err(LorentzError::ProjectionConstraint(_))
        ));
        // Frame with the wrong causal types for the class.
        assert!(matches!(
            frame_from_projections(0.0, 0.0, SupportClass::Timelike, &nu_sigma, &n_sigma),
            Err(LorentzError::NotOrthonormal(_))
        ));
    }
}
