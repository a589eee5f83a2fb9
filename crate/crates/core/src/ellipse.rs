//! 2×2 information matrices and their geometric duals.
//!
//! An [`InfoMatrix2`] is decomposed as `F = Θ(α) diag(μ, η) Θ(α)ᵀ` with
//! `μ ≥ η ≥ 0`. The triple `(μ, η, α)` is an [`EllipseParams`]: the
//! Information Ellipse (IE) has semi-axes `√μ`, `√η` with the major axis at
//! angle `α`. The inverse matrix (the CRLB) is the Error Ellipse (EE)
//! `(1/η, 1/μ, α + π/2)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which two eigenvalues are treated as equal.
pub const TIE_TOL: f64 = 1e-12;
/// Relative tolerance for small negative eigenvalues caused by rounding.
pub const PSD_TOL: f64 = 1e-12;
/// Relative determinant threshold for invertibility.
pub const DET_TOL: f64 = 1e-14;

/// Symmetric 2×2 matrix `[[f11, f12], [f12, f22]]`.
///
/// Used for information matrices (1/m²) and, where noted, for 2×2
/// covariances (m²).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InfoMatrix2 {
    pub f11: f64,
    pub f12: f64,
    pub f22: f64,
}

impl InfoMatrix2 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 1.0);

    pub const fn new(f11: f64, f12: f64, f22: f64) -> Self {
        Self { f11, f12, f22 }
    }

    pub fn diagonal(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn scaled_identity(a: f64) -> Self {
        Self::new(a, 0.0, a)
    }

    /// `v vᵀ`
    pub fn outer(v: [f64; 2]) -> Self {
        Self::new(v[0] * v[0], v[0] * v[1], v[1] * v[1])
    }

    pub fn trace(&self) -> f64 {
        self.f11 + self.f22
    }

    pub fn det(&self) -> f64 {
        self.f11 * self.f22 - self.f12 * self.f12
    }

    /// Largest absolute diagonal entry; the scale used by relative tolerances.
    pub fn scale(&self) -> f64 {
        self.f11.abs().max(self.f22.abs())
    }

    /// Correlation coefficient `ρ = f12 / √(f11 f22)`, if defined.
    pub fn correlation(&self) -> Option<f64> {
        let p = self.f11 * self.f22;
        (p > 0.0).then(|| self.f12 / p.sqrt())
    }

    /// Eigenvalues `(larger, smaller)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.f11 + self.f22);
        let r = (0.5 * (self.f11 - self.f22)).hypot(self.f12);
        (mid + r, mid - r)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn is_psd(&self) -> bool {
        let (hi, lo) = self.eigenvalues();
        lo >= -PSD_TOL * hi.abs().max(self.scale())
    }

    /// Matrix product `self · other` (not symmetric in general).
    pub fn matmul(&self, other: &Self) -> [[f64; 2]; 2] {
        [
            [
                self.f11 * other.f11 + self.f12 * other.f12,
                self.f11 * other.f12 + self.f12 * other.f22,
            ],
            [
                self.f12 * other.f11 + self.f22 * other.f12,
                self.f12 * other.f12 + self.f22 * other.f22,
            ],
        ]
    }

    /// `A · self · Aᵀ` for a general 2×2 `A`; the result is symmetric.
    pub fn congruence(&self, a: [[f64; 2]; 2]) -> Self {
        let m = [
            [
                a[0][0] * self.f11 + a[0][1] * self.f12,
                a[0][0] * self.f12 + a[0][1] * self.f22,
            ],
            [
                a[1][0] * self.f11 + a[1][1] * self.f12,
                a[1][0] * self.f12 + a[1][1] * self.f22,
            ],
        ];
        Self::new(
            m[0][0] * a[0][0] + m[0][1] * a[0][1],
            m[0][0] * a[1][0] + m[0][1] * a[1][1],
            m[1][0] * a[1][0] + m[1][1] * a[1][1],
        )
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.f11 * v[0] + self.f12 * v[1],
            self.f12 * v[0] + self.f22 * v[1],
        ]
    }

    /// `vᵀ · self · v`
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        let w = self.mul_vec(v);
        v[0] * w[0] + v[1] * w[1]
    }

    /// Inverse, or `None` when the determinant is below `DET_TOL · scale²`.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        let s = self.scale();
        if !(det > DET_TOL * s * s) || s == 0.0 {
            return None;
        }
        Some(Self::new(self.f22 / det, -self.f12 / det, self.f11 / det))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.f11 * self.f11 + 2.0 * self.f12 * self.f12 + self.f22 * self.f22).sqrt()
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.f11, self.f12], [self.f12, self.f22]]
    }

    pub fn is_finite(&self) -> bool {
        self.f11.is_finite() && self.f12.is_finite() && self.f22.is_finite()
    }
}

impl Add for InfoMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.f11 + o.f11, self.f12 + o.f12, self.f22 + o.f22)
    }
}

impl Sub for InfoMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.f11 - o.f11, self.f12 - o.f12, self.f22 - o.f22)
    }
}

impl Neg for InfoMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.f11, -self.f12, -self.f22)
    }
}

impl Mul<InfoMatrix2> for f64 {
    type Output = InfoMatrix2;
    fn mul(self, m: InfoMatrix2) -> InfoMatrix2 {
        InfoMatrix2::new(self * m.f11, self * m.f12, self * m.f22)
    }
}

impl std::iter::Sum for InfoMatrix2 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// Rotation matrix `Θ(α)`; its columns are `v_μ` and `v_η`.
pub fn rotation(alpha: f64) -> [[f64; 2]; 2] {
    let (s, c) = alpha.sin_cos();
    [[c, -s], [s, c]]
}

/// Maps an angle to the canonical range `(−π/2, π/2]`.
pub fn normalize_angle(alpha: f64) -> f64 {
    let mut a = alpha.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    // rem_euclid can return exactly PI for tiny negative inputs
    if a <= -FRAC_PI_2 {
        a += PI;
    }
    a
}

/// Smallest distance between two orientations, modulo π.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Eigenvalue pair and orientation of a 2×2 information (or covariance) matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    /// μ, the larger eigenvalue.
    pub major: f64,
    /// η, the smaller eigenvalue.
    pub minor: f64,
    /// α in (−π/2, π/2], orientation of the major axis.
    pub angle: f64,
}

impl EllipseParams {
    /// Builds canonical parameters: swaps the axes if needed, normalizes the
    /// angle and zeroes it when the two eigenvalues tie.
    pub fn new(major: f64, minor: f64, angle: f64) -> Result<Self> {
        if !(major.is_finite() && minor.is_finite() && angle.is_finite()) {
            return Err(Error::DegenerateInput("non-finite ellipse parameter"));
        }
        let (mut major, mut minor, mut angle) = (major, minor, angle);
        if minor > major {
            std::mem::swap(&mut major, &mut minor);
            angle += FRAC_PI_2;
        }
        if minor < 0.0 {
            if minor < -PSD_TOL * major.abs() {
                return Err(Error::NotPsd {
                    min_eigenvalue: minor,
                });
            }
            minor = 0.0;
        }
        Ok(Self::canonical(major, minor, angle))
    }

    fn canonical(major: f64, minor: f64, angle: f64) -> Self {
        let angle = if major - minor <= TIE_TOL * major.abs() {
            0.0
        } else {
            normalize_angle(angle)
        };
        Self {
            major,
            minor,
            angle,
        }
    }

    /// Degenerate (rank-1 or zero) ellipse: all information along one axis.
    pub fn is_degenerate(&self) -> bool {
        self.minor == 0.0
    }

    pub fn is_circle(&self) -> bool {
        self.major - self.minor <= TIE_TOL * self.major.abs()
    }

    /// Unit eigenvector of the major axis, `[cos α, sin α]`.
    pub fn major_axis(&self) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c, s]
    }

    /// Unit eigenvector of the minor axis, `[−sin α, cos α]`.
    pub fn minor_axis(&self) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [-s, c]
    }
}

/// Confidence scaling for ellipse regions, `k = −2 ln(1 − Pₑ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceScale {
    pub k: f64,
    pub p_e: f64,
}

impl ConfidenceScale {
    pub fn from_k(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::DegenerateInput("confidence scale k must be positive"));
        }
        Ok(Self {
            k,
            p_e: -(-0.5 * k).exp_m1(),
        })
    }

    pub fn from_probability(p_e: f64) -> Result<Self> {
        if !(p_e > 0.0 && p_e < 1.0) {
            return Err(Error::DegenerateInput("confidence probability must be in (0, 1)"));
        }
        Ok(Self {
            k: -2.0 * (-p_e).ln_1p(),
            p_e,
        })
    }
}

/// PCA of a PSD information matrix.
pub fn fim_to_ellipse(f: &InfoMatrix2) -> Result<EllipseParams> {
    if !f.is_finite() {
        return Err(Error::DegenerateInput("non-finite matrix entry"));
    }
    let (mu, eta) = f.eigenvalues();
    let scale = mu.abs().max(f.scale());
    if eta < -PSD_TOL * scale || f.f11 < -PSD_TOL * scale || f.f22 < -PSD_TOL * scale {
        return Err(Error::NotPsd { min_eigenvalue: eta });
    }
    let eta = eta.max(0.0);
    let mu = mu.max(0.0);
    // 2α from the quadrant-aware arctangent; ties handled by `canonical`
    let alpha = 0.5 * (2.0 * f.f12).atan2(f.f11 - f.f22);
    Ok(EllipseParams::canonical(mu, eta, alpha))
}

/// `Θ(α) diag(μ, η) Θ(α)ᵀ`
pub fn ellipse_to_fim(e: &EllipseParams) -> InfoMatrix2 {
    let (s, c) = e.angle.sin_cos();
    let d = e.major - e.minor;
    InfoMatrix2::new(
        e.minor + d * c * c,
        d * s * c,
        e.minor + d * s * s,
    )
}

/// Cramér-Rao lower bound, the inverse of a positive definite FIM.
pub fn crlb_from_fim(f: &InfoMatrix2) -> Result<InfoMatrix2> {
    f.inverse().ok_or(Error::SingularFim)
}

/// Error Ellipse of a FIM: `(1/η, 1/μ, α + π/2)`.
pub fn error_ellipse(f: &InfoMatrix2) -> Result<EllipseParams> {
    let ie = fim_to_ellipse(f)?;
    ie_to_ee(&ie)
}

/// Error Ellipse of an Information Ellipse.
pub fn ie_to_ee(ie: &EllipseParams) -> Result<EllipseParams> {
    if !(ie.minor > 0.0) {
        return Err(Error::SingularFim);
    }
    EllipseParams::new(1.0 / ie.minor, 1.0 / ie.major, ie.angle + FRAC_PI_2)
}

/// `ξ = √(1 − η/μ)`
pub fn eccentricity(e: &EllipseParams) -> Result<f64> {
    if !(e.major > 0.0) {
        return Err(Error::DegenerateInput("eccentricity undefined for a zero ellipse"));
    }
    Ok((1.0 - e.minor / e.major).clamp(0.0, 1.0).sqrt())
}

/// `A = π √(μ η)`
pub fn area(e: &EllipseParams) -> f64 {
    PI * (e.major * e.minor).sqrt()
}

/// Position error bound `√(1/μ + 1/η)` in meters.
pub fn peb(e: &EllipseParams) -> Result<f64> {
    if !(e.minor > 0.0) {
        return Err(Error::SingularFim);
    }
    Ok((1.0 / e.major + 1.0 / e.minor).sqrt())
}

/// Membership test `xᵀ F⁻¹ x ≤ k` for the ellipse's matrix `F`.
pub fn ellipse_contains(e: &EllipseParams, point: [f64; 2], k: f64) -> Result<bool> {
    if !(e.minor > 0.0) {
        return Err(Error::SingularFim);
    }
    if !(k > 0.0) {
        return Err(Error::DegenerateInput("k must be positive"));
    }
    let u = e.major_axis();
    let v = e.minor_axis();
    let a = point[0] * u[0] + point[1] * u[1];
    let b = point[0] * v[0] + point[1] * v[1];
    Ok(a * a / e.major + b * b / e.minor <= k)
}
