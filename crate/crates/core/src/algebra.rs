//! Closed-form sums and differences of Information Ellipses.
//!
//! Adding an ellipse models an independent piece of information; subtracting
//! one models an information loss (for instance from jointly estimating a
//! nuisance parameter). Both are computed directly from the eigen-parameters
//! without forming the matrices.

use std::f64::consts::FRAC_PI_2;

use crate::ellipse::{
    ellipse_to_fim, normalize_angle, EllipseParams, InfoMatrix2, PSD_TOL,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineSign {
    Add,
    Subtract,
}

impl CombineSign {
    fn factor(self) -> f64 {
        match self {
            CombineSign::Add => 1.0,
            CombineSign::Subtract => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MaxInfo,
    MinInfo,
}

/// Eigen-parameters of `F(E1) ± F(E2)`.
///
/// Subtraction requires `F(E1) − F(E2)` to be positive definite; a result
/// whose minor eigenvalue vanishes within rounding is returned degenerate
/// (minor = 0) instead of failing.
pub fn combine(e1: &EllipseParams, e2: &EllipseParams, sign: CombineSign) -> Result<EllipseParams> {
    let s = sign.factor();
    let d1 = e1.major - e1.minor;
    let d2 = e2.major - e2.minor;
    let two_delta = 2.0 * (e2.angle - e1.angle);
    let (sin2, cos2) = two_delta.sin_cos();

    let mid = 0.5 * (e1.major + e1.minor + s * (e2.major + e2.minor));
    // difference of diagonal entries and twice the off-diagonal entry, in the
    // frame rotated by α1
    let x = d1 + s * d2 * cos2;
    let y = s * d2 * sin2;
    let half_root = 0.5 * x.hypot(y);

    let major = mid + half_root;
    let mut minor = mid - half_root;
    let scale = e1.major.max(e2.major).max(major.abs());
    if minor <= PSD_TOL * scale {
        if sign == CombineSign::Subtract && minor < -PSD_TOL * scale {
            return Err(Error::IllConditionedSubtraction {
                min_eigenvalue: minor,
            });
        }
        if minor < -PSD_TOL * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: minor,
            });
        }
        minor = 0.0;
    }
    let angle = if x == 0.0 && y == 0.0 {
        e1.angle
    } else {
        e1.angle + 0.5 * y.atan2(x)
    };
    EllipseParams::new(major.max(0.0), minor, angle)
}

/// Checks the subtraction precondition `F(E1) ≻ F(E2)` on the actual
/// difference matrix. Returns the smallest eigenvalue of the difference.
pub fn subtraction_margin(e1: &EllipseParams, e2: &EllipseParams) -> f64 {
    (ellipse_to_fim(e1) - ellipse_to_fim(e2)).min_eigenvalue()
}

/// PEB of `F(E1) ± F(E2)` from the eigen-parameters alone.
pub fn combined_peb(e1: &EllipseParams, e2: &EllipseParams, sign: CombineSign) -> Result<f64> {
    let s = sign.factor();
    if sign == CombineSign::Subtract {
        let m = subtraction_margin(e1, e2);
        let scale = e1.major.max(e2.major);
        if m < -PSD_TOL * scale {
            return Err(Error::IllConditionedSubtraction { min_eigenvalue: m });
        }
    }
    let delta = e2.angle - e1.angle;
    let (sn, cs) = delta.sin_cos();
    let trace = e1.major + e1.minor + s * (e2.major + e2.minor);
    let det = e1.major * e1.minor
        + e2.major * e2.minor
        + s * (e1.major * e2.major + e1.minor * e2.minor) * sn * sn
        + s * (e1.major * e2.minor + e1.minor * e2.major) * cs * cs;
    let scale = e1.major.max(e2.major);
    if !(det > crate::ellipse::DET_TOL * scale * scale) {
        return Err(Error::SingularFim);
    }
    Ok((trace / det).sqrt())
}

/// Orientation of the second ellipse that maximizes or minimizes the
/// combined information, for fixed eigenvalues `(mu2, eta2)`.
pub fn extremal_angle(
    e1: &EllipseParams,
    mu2: f64,
    eta2: f64,
    sign: CombineSign,
    objective: Objective,
) -> Result<f64> {
    if !(mu2 >= eta2 && eta2 >= 0.0) {
        return Err(Error::DegenerateInput("expected mu2 >= eta2 >= 0"));
    }
    let orthogonal = match (sign, objective) {
        (CombineSign::Add, Objective::MaxInfo) => true,
        (CombineSign::Add, Objective::MinInfo) => false,
        (CombineSign::Subtract, Objective::MaxInfo) => false,
        (CombineSign::Subtract, Objective::MinInfo) => true,
    };
    let angle = normalize_angle(if orthogonal {
        e1.angle + FRAC_PI_2
    } else {
        e1.angle
    });
    if sign == CombineSign::Subtract {
        let e2 = EllipseParams::new(mu2, eta2, angle)?;
        let m = subtraction_margin(e1, &e2);
        if !(m > 0.0) {
            return Err(Error::IllConditionedSubtraction { min_eigenvalue: m });
        }
    }
    Ok(angle)
}

/// Matrix-level combination, used where the ellipse form is not needed.
pub fn combine_matrices(f1: &InfoMatrix2, f2: &InfoMatrix2, sign: CombineSign) -> InfoMatrix2 {
    match sign {
        CombineSign::Add => *f1 + *f2,
        CombineSign::Subtract => *f1 - *f2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipse::{angle_distance, fim_to_ellipse, peb};

    fn ep(a: f64, b: f64, c: f64) -> EllipseParams {
        EllipseParams::new(a, b, c).unwrap()
    }

    #[test]
    fn orthogonal_addition_swaps_axes() {
        let e1 = ep(5.0, 1.0, 0.3);
        let e2 = ep(2.0, 0.5, 0.3 + FRAC_PI_2);
        let c = combine(&e1, &e2, CombineSign::Add).unwrap();
        // μ1+η2 = 5.5 > η1+μ2 = 3
        assert!((c.major - 5.5).abs() < 1e-12);
        assert!((c.minor - 3.0).abs() < 1e-12);
        assert!(angle_distance(c.angle, 0.3) < 1e-12);

        let e2 = ep(6.0, 0.5, 0.3 - FRAC_PI_2);
        let c = combine(&e1, &e2, CombineSign::Add).unwrap();
        // η1+μ2 = 7 > μ1+η2 = 5.5 → angle α1 + π/2
        assert!((c.major - 7.0).abs() < 1e-12);
        assert!((c.minor - 5.5).abs() < 1e-12);
        assert!(angle_distance(c.angle, 0.3 + FRAC_PI_2) < 1e-12);
    }

    #[test]
    fn aligned_addition_adds_eigenvalues() {
        let c = combine(&ep(3.0, 1.0, -0.8), &ep(2.0, 0.25, -0.8), CombineSign::Add).unwrap();
        assert!((c.major - 5.0).abs() < 1e-12);
        assert!((c.minor - 1.25).abs() < 1e-12);
        assert!(angle_distance(c.angle, -0.8) < 1e-12);
    }

    #[test]
    fn ill_conditioned_subtraction() {
        let e1 = ep(4.0, 3.0, 0.0);
        assert!(combine(&e1, &ep(1.0, 0.5, 1.0), CombineSign::Subtract).is_ok());
        // η1 < μ2, but aligned axes still leave a definite difference
        let c = combine(&ep(4.0, 1.0, 0.0), &ep(2.0, 0.5, 0.0), CombineSign::Subtract).unwrap();
        assert!((c.major - 2.0).abs() < 1e-12 && (c.minor - 0.5).abs() < 1e-12);
        // same eigenvalues, orthogonal: 1 - 2 < 0
        assert!(combine(&ep(4.0, 1.0, 0.0), &ep(2.0, 0.5, FRAC_PI_2), CombineSign::Subtract).is_err());
        let err = combine(&ep(1.0, 0.5, 0.0), &ep(2.0, 0.1, 0.0), CombineSign::Subtract);
        assert!(matches!(err, Err(Error::IllConditionedSubtraction { .. })));
    }

    #[test]
    fn degenerate_subtraction_is_flagged() {
        let e1 = ep(3.0, 1.0, 0.2);
        let e2 = ep(1.0, 0.0, 0.2 + FRAC_PI_2);
        let c = combine(&e1, &e2, CombineSign::Subtract).unwrap();
        assert!(c.is_degenerate());
        assert!((c.major - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_addition_keeps_peb() {
        let e1 = ep(2.0, 0.7, 0.4);
        let z = ep(0.0, 0.0, 0.0);
        let p = combined_peb(&e1, &z, CombineSign::Add).unwrap();
        assert!((p - peb(&e1).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn extremal_angles() {
        let e1 = ep(2.0, 1.0, 0.4);
        let a = extremal_angle(&e1, 0.5, 0.2, CombineSign::Add, Objective::MaxInfo).unwrap();
        assert!(angle_distance(a, 0.4 + FRAC_PI_2) < 1e-15);
        let a = extremal_angle(&e1, 0.5, 0.2, CombineSign::Add, Objective::MinInfo).unwrap();
        assert!(angle_distance(a, 0.4) < 1e-15);
        let a = extremal_angle(&e1, 0.5, 0.2, CombineSign::Subtract, Objective::MaxInfo).unwrap();
        let c = combine(&e1, &ep(0.5, 0.2, a), CombineSign::Subtract).unwrap();
        assert!((c.major - 1.5).abs() < 1e-12 && (c.minor - 0.8).abs() < 1e-12);
        assert!(extremal_angle(&e1, 1.5, 0.2, CombineSign::Subtract, Objective::MinInfo).is_err());
    }

    #[test]
    fn matrices_agree_with_closed_form() {
        let e1 = ep(3.0, 1.0, 0.1);
        let e2 = ep(1.0, 0.4, 1.1);
        for sign in [CombineSign::Add, CombineSign::Subtract] {
            let c = combine(&e1, &e2, sign).unwrap();
            let m = fim_to_ellipse(&combine_matrices(
                &ellipse_to_fim(&e1),
                &ellipse_to_fim(&e2),
                sign,
            ))
            .unwrap();
            assert!((c.major - m.major).abs() < 1e-12);
            assert!((c.minor - m.minor).abs() < 1e-12);
            assert!(angle_distance(c.angle, m.angle) < 1e-12);
        }
    }
}
