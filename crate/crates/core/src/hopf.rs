//! Conformal parametrisation of rotational spacelike surfaces and the
//! quadratic differential built from their second fundamental form.
//!
//! A rotational surface with spacelike meridian `(rho(t), u(t))` admits polar
//! conformal coordinates `z = r e^{i theta}` on the unit disc, or on an
//! annulus when the meridian stays away from the axis: integrating
//! `d(log r) = (meridian arc length) / rho` turns the induced metric into
//! `E(r)^2 |dz|^2`. On such a patch the combination
//! `phi = h11 - h22 - 2 i h12` of second-fundamental coefficients is the
//! coefficient of a quadratic differential `phi dz^2`. It vanishes exactly at
//! umbilical points, it is holomorphic precisely when the mean curvature is
//! constant, and on the boundary circle `Im(z^2 phi)` equals
//! `-2 r sigma(d_r, d_theta)`, the mixed curvature that constant contact
//! angles annihilate. Rotational symmetry makes `Im(z^2 phi)` vanish
//! identically on every patch produced here, so the boundary check is a
//! consistency trace rather than a discriminating test on this family.
//!
//! General conformal mapping of non-rotational meshes is out of scope: the
//! one-dimensional reduction is what keeps every field verifiable against
//! meridian closed forms.

use crate::numerics::{cumulative_integral, fd_weights, integrate_samples};
use num_complex::Complex64;
use thiserror::Error;

/// Bound on the normalised conformality residual
/// `max(|<x_u,x_u> - <x_v,x_v>|, 2 |<x_u,x_v>|) / E^2` accepted by the patch
/// constructor. Grids too coarse to carry the conformal structure are
/// rejected rather than silently degraded.
pub const TOL_CONFORMAL: f64 = 1e-6;

/// Meridian slope magnitude at the axis above which the surface has a cone
/// point instead of a smooth cap centre.
const CONE_SLOPE_MAX: f64 = 1e-3;

/// Width of the radial finite-difference windows (one-sided at the edges).
const STENCIL: usize = 7;

/// Sliding-window width for the sampled integrals (conformal radius, area).
const QUAD_WINDOW: usize = 6;

const MIN_RINGS: usize = 9;
const MIN_ANGLES: usize = 16;

#[derive(Debug, Error)]
pub enum HopfError {
    #[error("invalid meridian profile: {0}")]
    InvalidProfile(String),
    #[error("meridian is not spacelike at sample {index}: |du/drho| = {slope:.6}")]
    NotSpacelike { index: usize, slope: f64 },
    #[error("meridian reaches the axis with slope {slope:.3e}: cone point")]
    ConePoint { slope: f64 },
    #[error("conformality residual {residual:.3e} exceeds {tol:.1e}")]
    ConformalityViolated { residual: f64, tol: f64 },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
}

/// Rotational surface samples in polar conformal coordinates.
///
/// Rings are stored from the innermost radius outward; the outermost ring
/// sits at `r = 1`. Disc-type patches omit the axis point itself (the polar
/// chart degenerates there) and remember that the surface continues across
/// it, which the area quadrature uses to close the missing centre.
#[derive(Debug, Clone)]
pub struct ConformalPatch {
    r: Vec<f64>,
    theta: Vec<f64>,
    e_conf: Vec<f64>,
    x: Vec<[f64; 3]>,
    h11: Vec<f64>,
    h12: Vec<f64>,
    h22: Vec<f64>,
    conf_residual: f64,
    includes_axis: bool,
}

impl ConformalPatch {
    pub fn n_rings(&self) -> usize {
        self.r.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    /// Ring radii in the conformal disc, increasing, last entry 1.
    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Uniform angular nodes in `[0, 2 pi)`.
    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Conformal factor per ring: `<x_u,x_u> = <x_v,x_v> = E^2`.
    pub fn conformal_factor(&self) -> &[f64] {
        &self.e_conf
    }

    /// Immersion sample at ring `j`, angle `k`.
    pub fn position(&self, j: usize, k: usize) -> [f64; 3] {
        self.x[j * self.theta.len() + k]
    }

    /// Second-fundamental coefficients `(h11, h12, h22)` at ring `j`,
    /// angle `k`, taken against the future unit normal.
    pub fn second_fundamental(&self, j: usize, k: usize) -> [f64; 3] {
        let i = j * self.theta.len() + k;
        [self.h11[i], self.h12[i], self.h22[i]]
    }

    /// Largest normalised conformality defect measured on the grid.
    pub fn conformality_residual(&self) -> f64 {
        self.conf_residual
    }

    /// True when the surface continues across the (omitted) axis point.
    pub fn includes_axis(&self) -> bool {
        self.includes_axis
    }

    /// Surface area from the conformal data alone: `2 pi int E^2 r dr`, with
    /// the omitted axis disc closed by a zero node at `r = 0`.
    pub fn surface_area(&self) -> f64 {
        let mut nodes = Vec::with_capacity(self.r.len() + 1);
        let mut vals = Vec::with_capacity(self.r.len() + 1);
        if self.includes_axis {
            nodes.push(0.0);
            vals.push(0.0);
        }
        for (rj, ej) in self.r.iter().zip(&self.e_conf) {
            nodes.push(*rj);
            vals.push(ej * ej * rj);
        }
        2.0 * std::f64::consts::PI * integrate_samples(&nodes, &vals, QUAD_WINDOW)
    }
}

/// Quadratic-differential coefficient `phi = h11 - h22 - 2 i h12` per node.
#[derive(Debug, Clone)]
pub struct HopfField {
    r: Vec<f64>,
    theta: Vec<f64>,
    phi: Vec<Complex64>,
}

impl HopfField {
    pub fn n_rings(&self) -> usize {
        self.r.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// All values, ring-major.
    pub fn values(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn value(&self, j: usize, k: usize) -> Complex64 {
        self.phi[j * self.theta.len() + k]
    }
}

fn mdot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

/// Lorentzian cross product in coordinates: `eta (a x b)`, `eta = diag(1,1,-1)`.
fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        -(a[0] * b[1] - a[1] * b[0]),
    ]
}

/// Validated meridian data: radii, heights, slopes and the axis flag.
struct Meridian {
    rho: Vec<f64>,
    u: Vec<f64>,
    slope: Vec<f64>,
    includes_axis: bool,
}

fn validate_profile(profile: &[(f64, f64)]) -> Result<Meridian, HopfError> {
    let n = profile.len();
    if n < MIN_RINGS + 1 {
        return Err(HopfError::InvalidProfile(format!(
            "need at least {} samples, got {n}",
            MIN_RINGS + 1
        )));
    }
    for (i, (rho, u)) in profile.iter().enumerate() {
        if !rho.is_finite() || !u.is_finite() {
            return Err(HopfError::InvalidProfile(format!(
                "sample {i} is not finite"
            )));
        }
        if *rho < 0.0 {
            return Err(HopfError::InvalidProfile(format!(
                "negative radius at sample {i}"
            )));
        }
    }
    if !profile.windows(2).all(|p| p[1].0 > p[0].0) {
        return Err(HopfError::InvalidProfile(
            "radii must be strictly increasing".into(),
        ));
    }
    let rho: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let u: Vec<f64> = profile.iter().map(|p| p.1).collect();

    let mut slope = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub((STENCIL - 1) / 2).min(n - STENCIL);
        let w = fd_weights(rho[i], &rho[lo..lo + STENCIL], 1);
        slope[i] = w.iter().zip(&u[lo..lo + STENCIL]).map(|(a, b)| a * b).sum();
    }
    for (i, s) in slope.iter().enumerate() {
        if s.abs() >= 1.0 - 1e-9 {
            return Err(HopfError::NotSpacelike {
                index: i,
                slope: *s,
            });
        }
    }
    let includes_axis = rho[0] == 0.0;
    if includes_axis && slope[0].abs() > CONE_SLOPE_MAX {
        return Err(HopfError::ConePoint { slope: slope[0] });
    }
    Ok(Meridian {
        rho,
        u,
        slope,
        includes_axis,
    })
}

/// Conformal radius at each meridian sample, normalised to 1 at the outer
/// boundary. Disc-type meridians integrate the regularised density
/// `(w - 1)/rho` (finite at the axis) so the logarithmic singularity of
/// `log r` is carried by `log rho` exactly.
fn conformal_radii(m: &Meridian) -> Vec<f64> {
    let n = m.rho.len();
    let w: Vec<f64> = m.slope.iter().map(|s| (1.0 - s * s).sqrt()).collect();
    let last = n - 1;
    if m.includes_axis {
        let density: Vec<f64> = m
            .rho
            .iter()
            .zip(&w)
            .map(|(rho, wi)| if *rho == 0.0 { 0.0 } else { (wi - 1.0) / rho })
            .collect();
        let cum = cumulative_integral(&m.rho, &density, QUAD_WINDOW);
        (1..n)
            .map(|i| (m.rho[i] / m.rho[last]) * (cum[i] - cum[last]).exp())
            .collect()
    } else {
        let density: Vec<f64> = m.rho.iter().zip(&w).map(|(rho, wi)| wi / rho).collect();
        let cum = cumulative_integral(&m.rho, &density, QUAD_WINDOW);
        (0..n).map(|i| (cum[i] - cum[last]).exp()).collect()
    }
}

/// Build the conformal patch of a rotational surface from meridian samples
/// `(rho, u)` with strictly increasing radii. A meridian starting at
/// `rho = 0` yields a disc-type patch (the axis point itself is omitted);
/// otherwise the patch covers an annulus. Second-fundamental coefficients
/// come from finite differences of the immersion and its future unit normal,
/// one-sided at the edge rings.
pub fn conformal_parametrize_rotational(
    profile: &[(f64, f64)],
    n_theta: usize,
) -> Result<ConformalPatch, HopfError> {
    if n_theta < MIN_ANGLES {
        return Err(HopfError::DegenerateGrid(format!(
            "need at least {MIN_ANGLES} angular nodes, got {n_theta}"
        )));
    }
    let m = validate_profile(profile)?;
    let r = conformal_radii(&m);
    let skip = usize::from(m.includes_axis);
    let nr = r.len();
    if nr < MIN_RINGS {
        return Err(HopfError::DegenerateGrid(format!(
            "need at least {MIN_RINGS} rings, got {nr}"
        )));
    }
    let nt = n_theta;
    let rho = &m.rho[skip..];
    let u = &m.u[skip..];
    let e_conf: Vec<f64> = rho.iter().zip(&r).map(|(p, rj)| p / rj).collect();

    let theta: Vec<f64> = (0..nt)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / nt as f64)
        .collect();
    let mut x = vec![[0.0f64; 3]; nr * nt];
    for j in 0..nr {
        for (k, th) in theta.iter().enumerate() {
            x[j * nt + k] = [rho[j] * th.cos(), rho[j] * th.sin(), u[j]];
        }
    }

    // Angular stencils: uniform, periodic, exact on low-degree trigonometry
    // to well below the conformality tolerance.
    let ht = 2.0 * std::f64::consts::PI / nt as f64;
    let half = (STENCIL - 1) / 2;
    let tnodes: Vec<f64> = (0..STENCIL).map(|q| (q as f64 - half as f64) * ht).collect();
    let tw1 = fd_weights(0.0, &tnodes, 1);
    let tw2 = fd_weights(0.0, &tnodes, 2);

    // Radial stencils per ring, one-sided at the edges.
    let mut rlo = vec![0usize; nr];
    let mut rw1 = vec![vec![0.0f64; STENCIL]; nr];
    let mut rw2 = vec![vec![0.0f64; STENCIL]; nr];
    for j in 0..nr {
        let lo = j.saturating_sub(half).min(nr - STENCIL);
        rlo[j] = lo;
        rw1[j] = fd_weights(r[j], &r[lo..lo + STENCIL], 1);
        rw2[j] = fd_weights(r[j], &r[lo..lo + STENCIL], 2);
    }

    let idx = |j: usize, k: usize| j * nt + k;
    let mut x_t = vec![[0.0f64; 3]; nr * nt];
    let mut x_tt = vec![[0.0f64; 3]; nr * nt];
    for j in 0..nr {
        for k in 0..nt {
            let mut d1 = [0.0f64; 3];
            let mut d2 = [0.0f64; 3];
            for q in 0..STENCIL {
                let kk = (k + nt + q - half) % nt;
                let p = &x[idx(j, kk)];
                for c in 0..3 {
                    d1[c] += tw1[q] * p[c];
                    d2[c] += tw2[q] * p[c];
                }
            }
            x_t[idx(j, k)] = d1;
            x_tt[idx(j, k)] = d2;
        }
    }

    let mut h11 = vec![0.0f64; nr * nt];
    let mut h12 = vec![0.0f64; nr * nt];
    let mut h22 = vec![0.0f64; nr * nt];
    let mut worst = 0.0f64;
    for j in 0..nr {
        let rj = r[j];
        let lo = rlo[j];
        for (k, th) in theta.iter().enumerate() {
            let mut xr = [0.0f64; 3];
            let mut xrr = [0.0f64; 3];
            let mut xrt = [0.0f64; 3];
            for q in 0..STENCIL {
                let p = &x[idx(lo + q, k)];
                let pt = &x_t[idx(lo + q, k)];
                for c in 0..3 {
                    xr[c] += rw1[j][q] * p[c];
                    xrr[c] += rw2[j][q] * p[c];
                    xrt[c] += rw1[j][q] * pt[c];
                }
            }
            let xt = &x_t[idx(j, k)];
            let xtt = &x_tt[idx(j, k)];
            let (sin, cos) = th.sin_cos();
            let (ss, cc, sc) = (sin * sin, cos * cos, sin * cos);
            let mut xu = [0.0f64; 3];
            let mut xv = [0.0f64; 3];
            let mut xuu = [0.0f64; 3];
            let mut xvv = [0.0f64; 3];
            let mut xuv = [0.0f64; 3];
            for c in 0..3 {
                xu[c] = cos * xr[c] - sin / rj * xt[c];
                xv[c] = sin * xr[c] + cos / rj * xt[c];
                xuu[c] = cc * xrr[c] - 2.0 * sc / rj * xrt[c]
                    + ss / (rj * rj) * xtt[c]
                    + ss / rj * xr[c]
                    + 2.0 * sc / (rj * rj) * xt[c];
                xvv[c] = ss * xrr[c] + 2.0 * sc / rj * xrt[c] + cc / (rj * rj) * xtt[c]
                    + cc / rj * xr[c]
                    - 2.0 * sc / (rj * rj) * xt[c];
                xuv[c] = sc * xrr[c] + (cc - ss) / rj * xrt[c]
                    - sc / (rj * rj) * xtt[c]
                    - sc / rj * xr[c]
                    - (cc - ss) / (rj * rj) * xt[c];
            }

            let e2 = e_conf[j] * e_conf[j];
            let defect = (mdot3(&xu, &xu) - mdot3(&xv, &xv))
                .abs()
                .max(2.0 * mdot3(&xu, &xv).abs())
                / e2;
            worst = worst.max(defect);

            let raw = cross3(&xu, &xv);
            let q = mdot3(&raw, &raw);
            if !(q < 0.0) {
                return Err(HopfError::DegenerateGrid(format!(
                    "tangent plane at ring {j}, node {k} is not spacelike"
                )));
            }
            let inv = 1.0 / (-q).sqrt();
            let sign = if raw[2] < 0.0 { -inv } else { inv };
            let n = [raw[0] * sign, raw[1] * sign, raw[2] * sign];
            h11[idx(j, k)] = mdot3(&xuu, &n);
            h12[idx(j, k)] = mdot3(&xuv, &n);
            h22[idx(j, k)] = mdot3(&xvv, &n);
        }
    }
    if worst > TOL_CONFORMAL {
        return Err(HopfError::ConformalityViolated {
            residual: worst,
            tol: TOL_CONFORMAL,
        });
    }

    Ok(ConformalPatch {
        r,
        theta,
        e_conf,
        x,
        h11,
        h12,
        h22,
        conf_residual: worst,
        includes_axis: m.includes_axis,
    })
}

/// Assemble `phi = h11 - h22 - 2 i h12` on the patch grid.
pub fn hopf_differential(patch: &ConformalPatch) -> Result<HopfField, HopfError> {
    let nr = patch.n_rings();
    let nt = patch.n_theta();
    if nr < 3 || nt < 3 {
        return Err(HopfError::DegenerateGrid(format!(
            "field needs at least a 3 x 3 grid, got {nr} x {nt}"
        )));
    }
    let phi = (0..nr * nt)
        .map(|i| Complex64::new(patch.h11[i] - patch.h22[i], -2.0 * patch.h12[i]))
        .collect();
    Ok(HopfField {
        r: patch.r.clone(),
        theta: patch.theta.clone(),
        phi,
    })
}

/// Largest `|d phi / d zbar|` over interior nodes, from centred differences:
/// in polar coordinates `2 d/dzbar = e^{i theta} (d_r + (i/r) d_theta)` and
/// the leading phase drops out of the modulus. For a field sampled from a
/// constant-mean-curvature surface this refines to zero at second order; a
/// varying mean curvature leaves a resolution-independent floor.
pub fn holomorphicity_residual(field: &HopfField) -> f64 {
    let nr = field.r.len();
    let nt = field.theta.len();
    debug_assert!(nr >= 3 && nt >= 3);
    let idx = |j: usize, k: usize| j * nt + k;
    let ht = 2.0 * std::f64::consts::PI / nt as f64;
    let mut worst = 0.0f64;
    for j in 1..nr - 1 {
        let w = fd_weights(field.r[j], &field.r[j - 1..=j + 1], 1);
        for k in 0..nt {
            let mut dr = Complex64::new(0.0, 0.0);
            for (q, wq) in w.iter().enumerate() {
                dr += wq * field.phi[idx(j - 1 + q, k)];
            }
            let dt = (field.phi[idx(j, (k + 1) % nt)] - field.phi[idx(j, (k + nt - 1) % nt)])
                / (2.0 * ht);
            let dbar = 0.5 * (dr + Complex64::i() / field.r[j] * dt);
            worst = worst.max(dbar.norm());
        }
    }
    worst
}

/// `Im(z^2 phi)` at every node, ring-major; `z = r e^{i theta}`.
pub fn imz2phi(field: &HopfField) -> Vec<f64> {
    let nt = field.theta.len();
    let mut out = Vec::with_capacity(field.phi.len());
    for (j, rj) in field.r.iter().enumerate() {
        for (k, th) in field.theta.iter().enumerate() {
            let p = field.phi[j * nt + k];
            let (s2, c2) = (2.0 * th).sin_cos();
            out.push(rj * rj * (s2 * p.re + c2 * p.im));
        }
    }
    out
}

/// `Im(z^2 phi)` on the outermost ring (`|z| = 1`), one value per angle.
pub fn boundary_imz2phi(field: &HopfField) -> Vec<f64> {
    let nt = field.theta.len();
    let nr = field.r.len();
    imz2phi(field)[(nr - 1) * nt..].to_vec()
}

/// One ring of the umbilicity-relation log: `phi_sq` is the angular mean of
/// `|phi|^2`; the two candidate right-hand sides combine the mean curvature
/// `H = (h11 + h22) / (2 E^2)` with the intrinsic curvature
/// `K = -(Delta log E) / E^2` of the conformal metric as `4 E^4 (H^2 + K)`
/// (`quartic_form`) and `(H^2 + K) / (4 E^2)` (`inverse_form`).
#[derive(Debug, Clone, Copy)]
pub struct IdentitySample {
    pub r: f64,
    pub phi_sq: f64,
    pub quartic_form: f64,
    pub inverse_form: f64,
}

/// Evaluate both candidate normalisations of the relation between `|phi|^2`
/// and the curvature invariants, ring by ring. The samples are reported for
/// logging; only the quartic form matches the data and nothing here asserts
/// either form.
pub fn umbilicity_identity_samples(patch: &ConformalPatch) -> Vec<IdentitySample> {
    let nr = patch.n_rings();
    let nt = patch.n_theta();
    let half = (STENCIL - 1) / 2;
    let loge: Vec<f64> = patch.e_conf.iter().map(|e| e.ln()).collect();
    let mut out = Vec::with_capacity(nr);
    for j in 0..nr {
        let lo = j.saturating_sub(half).min(nr - STENCIL);
        let w1 = fd_weights(patch.r[j], &patch.r[lo..lo + STENCIL], 1);
        let w2 = fd_weights(patch.r[j], &patch.r[lo..lo + STENCIL], 2);
        let d1: f64 = w1.iter().zip(&loge[lo..lo + STENCIL]).map(|(a, b)| a * b).sum();
        let d2: f64 = w2.iter().zip(&loge[lo..lo + STENCIL]).map(|(a, b)| a * b).sum();
        let e2 = patch.e_conf[j] * patch.e_conf[j];
        let k_int = -(d2 + d1 / patch.r[j]) / e2;

        let mut phi_sq = 0.0;
        let mut h_mean = 0.0;
        for k in 0..nt {
            let i = j * nt + k;
            let dh = patch.h11[i] - patch.h22[i];
            phi_sq += dh * dh + 4.0 * patch.h12[i] * patch.h12[i];
            h_mean += (patch.h11[i] + patch.h22[i]) / (2.0 * e2);
        }
        phi_sq /= nt as f64;
        h_mean /= nt as f64;
        let core = h_mean * h_mean + k_int;
        out.push(IdentitySample {
            r: patch.r[j],
            phi_sq,
            quartic_form: 4.0 * e2 * e2 * core,
            inverse_form: core / (4.0 * e2),
        });
    }
    out
}

/// CSV dump of the field: one row per node, ring-major.
pub fn field_csv(field: &HopfField) -> String {
    let nt = field.theta.len();
    let im = imz2phi(field);
    let mut out = String::from("r,theta,re_phi,im_phi,im_z2phi\n");
    for (j, rj) in field.r.iter().enumerate() {
        for (k, th) in field.theta.iter().enumerate() {
            let p = field.phi[j * nt + k];
            out.push_str(&format!(
                "{rj:.12e},{th:.12e},{:.12e},{:.12e},{:.12e}\n",
                p.re,
                p.im,
                im[j * nt + k]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::rotational_cmc_profile;

    fn linear_profile(n: usize, slope: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let rho = i as f64 / (n - 1) as f64;
                (rho, slope * rho)
            })
            .collect()
    }

    fn paraboloid_profile(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let rho = i as f64 / (n - 1) as f64;
                (rho, 0.3 * rho * rho)
            })
            .collect()
    }

    #[test]
    fn flat_disc_parametrization_is_identity() {
        let patch = conformal_parametrize_rotational(&linear_profile(65, 0.0), 64).unwrap();
        assert!(patch.includes_axis());
        assert_eq!(patch.n_rings(), 64);
        for (j, rj) in patch.radii().iter().enumerate() {
            let rho = (j + 1) as f64 / 64.0;
            assert!((rj - rho).abs() < 1e-12, "ring {j}: {rj} vs {rho}");
        }
        for e in patch.conformal_factor() {
            assert!((e - 1.0).abs() < 1e-12);
        }
        let field = hopf_differential(&patch).unwrap();
        let max_phi = field.values().iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(max_phi < 1e-10, "flat disc max |phi| = {max_phi:.3e}");
        let max_b = boundary_imz2phi(&field)
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(max_b < 1e-10, "flat disc boundary trace {max_b:.3e}");
        assert!(holomorphicity_residual(&field) < 1e-8);
    }

    #[test]
    fn cap_patch_matches_closed_forms() {
        let profile = rotational_cmc_profile(1.0, 0.0, [0.0, 1.0], 129).unwrap();
        let patch = conformal_parametrize_rotational(&profile, 256).unwrap();
        assert!(patch.conformality_residual() < 1e-8);

        // Conformal radius of the meridian: r = rho (1 + sqrt 2) / (1 + sqrt(1 + rho^2)).
        let c = 1.0 + 2.0f64.sqrt();
        for (j, rj) in patch.radii().iter().enumerate() {
            let rho = (j + 1) as f64 / 128.0;
            let exact = rho * c / (1.0 + (1.0 + rho * rho).sqrt());
            assert!((rj - exact).abs() < 1e-9, "ring {j}: {rj} vs {exact}");
        }

        let area = patch.surface_area();
        let exact = 2.0 * std::f64::consts::PI * (2.0f64.sqrt() - 1.0);
        assert!((area - exact).abs() < 1e-6 * exact, "area {area} vs {exact}");
    }

    #[test]
    fn cap_field_is_umbilic_with_vanishing_boundary_trace() {
        let profile = rotational_cmc_profile(1.0, 0.0, [0.0, 1.0], 129).unwrap();
        let patch = conformal_parametrize_rotational(&profile, 256).unwrap();
        let field = hopf_differential(&patch).unwrap();
        let max_phi = field.values().iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(max_phi < 1e-6, "cap max |phi| = {max_phi:.3e}");
        let max_b = boundary_imz2phi(&field)
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(max_b < 1e-6, "cap boundary trace {max_b:.3e}");
        let max_i = imz2phi(&field).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(max_i < 1e-5, "cap interior trace {max_i:.3e}");
    }

    #[test]
    fn annulus_field_is_holomorphic_and_bounded_below() {
        let coarse = {
            let p = rotational_cmc_profile(1.0, 0.5, [0.3, 1.2], 65).unwrap();
            conformal_parametrize_rotational(&p, 128).unwrap()
        };
        let fine = {
            let p = rotational_cmc_profile(1.0, 0.5, [0.3, 1.2], 129).unwrap();
            conformal_parametrize_rotational(&p, 256).unwrap()
        };
        let fc = hopf_differential(&coarse).unwrap();
        let ff = hopf_differential(&fine).unwrap();

        // First integral of the meridian gives |phi| = 2c / r^2 exactly.
        for (j, rj) in ff.radii().iter().enumerate() {
            let oracle = 1.0 / (rj * rj);
            for k in 0..ff.n_theta() {
                let got = ff.value(j, k).norm();
                assert!(
                    (got - oracle).abs() < 1e-6 * oracle,
                    "ring {j} angle {k}: |phi| {got} vs {oracle}"
                );
            }
        }
        let min_phi = ff.values().iter().map(|p| p.norm()).fold(f64::MAX, f64::min);
        assert!(min_phi > 1e-2, "min |phi| = {min_phi:.3e}");

        let rc = holomorphicity_residual(&fc);
        let rf = holomorphicity_residual(&ff);
        assert!(
            rc / rf >= 3.4,
            "refinement ratio {:.2} (coarse {rc:.3e}, fine {rf:.3e})",
            rc / rf
        );

        let max_b = boundary_imz2phi(&ff)
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(max_b < 1e-6, "annulus boundary trace {max_b:.3e}");
    }

    #[test]
    fn curvature_relation_matches_quartic_form_on_annulus() {
        let p = rotational_cmc_profile(1.0, 0.5, [0.3, 1.2], 129).unwrap();
        let patch = conformal_parametrize_rotational(&p, 256).unwrap();
        let samples = umbilicity_identity_samples(&patch);
        let mut inverse_gap = 0.0f64;
        for s in &samples {
            assert!(
                (s.phi_sq - s.quartic_form).abs() < 1e-5 * (1.0 + s.phi_sq),
                "at r = {}: |phi|^2 {} vs quartic {}",
                s.r,
                s.phi_sq,
                s.quartic_form
            );
            inverse_gap = inverse_gap.max((s.phi_sq - s.inverse_form).abs() / s.phi_sq);
        }
        // The two normalisations cross where 16 E^6 = 1, so the inverse form
        // can agree on one ring; it must fail across the patch.
        assert!(inverse_gap > 0.5, "inverse-form gap only {inverse_gap:.3}");
    }

    #[test]
    fn non_cmc_control_keeps_residual_floor() {
        let coarse = {
            let patch = conformal_parametrize_rotational(&paraboloid_profile(65), 128).unwrap();
            holomorphicity_residual(&hopf_differential(&patch).unwrap())
        };
        let fine = {
            let patch = conformal_parametrize_rotational(&paraboloid_profile(129), 256).unwrap();
            holomorphicity_residual(&hopf_differential(&patch).unwrap())
        };
        assert!(fine > 1e-3, "non-CMC residual collapsed to {fine:.3e}");
        assert!(
            coarse / fine < 3.0,
            "non-CMC control refined like a CMC field: {:.2}",
            coarse / fine
        );
    }

    #[test]
    fn degenerate_profiles_are_rejected() {
        assert!(matches!(
            conformal_parametrize_rotational(&linear_profile(65, 0.9), 64),
            Err(HopfError::ConePoint { .. })
        ));
        let steep: Vec<(f64, f64)> = (0..65)
            .map(|i| {
                let rho = 0.5 + 0.5 * i as f64 / 64.0;
                (rho, 1.2 * rho)
            })
            .collect();
        assert!(matches!(
            conformal_parametrize_rotational(&steep, 64),
            Err(HopfError::NotSpacelike { .. })
        ));
        assert!(matches!(
            conformal_parametrize_rotational(&linear_profile(5, 0.0), 64),
            Err(HopfError::InvalidProfile(_))
        ));
        assert!(matches!(
            conformal_parametrize_rotational(&linear_profile(65, 0.0), 8),
            Err(HopfError::DegenerateGrid(_))
        ));
        let mut bad = linear_profile(65, 0.0);
        bad[10].0 = bad[9].0;
        assert!(matches!(
            conformal_parametrize_rotational(&bad, 64),
            Err(HopfError::InvalidProfile(_))
        ));
    }

    #[test]
    fn csv_export_covers_every_node() {
        let p = rotational_cmc_profile(1.0, 0.5, [0.3, 1.2], 33).unwrap();
        let patch = conformal_parametrize_rotational(&p, 64).unwrap();
        let field = hopf_differential(&patch).unwrap();
        let csv = field_csv(&field);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("r,theta,re_phi,im_phi,im_z2phi"));
        assert_eq!(lines.count(), field.n_rings() * field.n_theta());
        let first = csv.lines().nth(1).unwrap();
        assert_eq!(first.split(',').count(), 5);
    }
}
