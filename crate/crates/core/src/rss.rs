//! Log-distance path-loss model and the single-source FIM with known anchors.

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::ellipse::{EllipseParams, InfoMatrix2};
use crate::error::{Error, Result};

/// Position in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Angle of `other` as seen from `self`.
    pub fn bearing_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation about `center` by `beta` radians.
    pub fn rotated_about(&self, center: &Point, beta: f64) -> Point {
        let (s, c) = beta.sin_cos();
        let (dx, dy) = (self.x - center.x, self.y - center.y);
        Point::new(center.x + c * dx - s * dy, center.y + s * dx + c * dy)
    }
}

/// Log-distance path loss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    /// Received power at the reference distance, dBm (`p_TX − L0`).
    pub p0_dbm: f64,
    /// Path-loss exponent γ.
    pub gamma: f64,
    /// Reference distance d0, meters.
    pub d0_m: f64,
    /// Shadowing standard deviation σ, dB.
    pub sigma_db: f64,
}

impl PropagationModel {
    /// Indoor parameter set used throughout the examples:
    /// p0 = 0 dBm, γ = 3.5, d0 = 1 m, σ = 5 dB.
    pub const INDOOR: PropagationModel = PropagationModel {
        p0_dbm: 0.0,
        gamma: 3.5,
        d0_m: 1.0,
        sigma_db: 5.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !self.p0_dbm.is_finite() {
            return Err(Error::InvalidModel("p0 must be finite".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidModel("gamma must be positive".into()));
        }
        if !(self.d0_m > 0.0 && self.d0_m.is_finite()) {
            return Err(Error::InvalidModel("d0 must be positive".into()));
        }
        if !(self.sigma_db > 0.0 && self.sigma_db.is_finite()) {
            return Err(Error::InvalidModel("sigma must be positive".into()));
        }
        Ok(())
    }

    /// Rejects distances below the reference distance.
    pub fn check_distance(&self, d: f64) -> Result<()> {
        if d < self.d0_m || !d.is_finite() {
            return Err(Error::BelowReferenceDistance {
                distance: d,
                d0: self.d0_m,
                pair: None,
            });
        }
        Ok(())
    }

    /// Mean of the received power without the validity check; used by the
    /// estimator, which may probe positions outside the model's region.
    pub(crate) fn mean_rss_unchecked(&self, d: f64) -> f64 {
        self.p0_dbm - 10.0 * self.gamma * (d / self.d0_m).log10()
    }

    /// `10 γ / (ln 10 · d)`: derivative of the mean power w.r.t. distance,
    /// with the sign flipped.
    pub(crate) fn slope(&self, d: f64) -> f64 {
        10.0 * self.gamma / (LN_10 * d)
    }
}

/// Mean received power at distance `d`, dBm.
pub fn mean_rss(model: &PropagationModel, d: f64) -> Result<f64> {
    model.check_distance(d)?;
    Ok(model.mean_rss_unchecked(d))
}

/// Per-anchor information coefficient `λ = (10γ / (σ ln 10 d))²`.
pub fn lambda_coeff(model: &PropagationModel, d: f64) -> Result<f64> {
    model.check_distance(d)?;
    Ok(lambda_unchecked(model, d))
}

pub(crate) fn lambda_unchecked(model: &PropagationModel, d: f64) -> f64 {
    let g = model.slope(d) / model.sigma_db;
    g * g
}

/// Rank-one bearing matrix `q qᵀ` with `q = [cos φ, sin φ]`.
pub fn bearing_matrix(phi: f64) -> InfoMatrix2 {
    let (s, c) = phi.sin_cos();
    InfoMatrix2::outer([c, s])
}

/// `(λ_k, φ_k)` for every anchor as seen from `source`.
pub fn anchor_terms(
    anchors: &[Point],
    source: &Point,
    model: &PropagationModel,
) -> Result<Vec<(f64, f64)>> {
    model.validate()?;
    anchors
        .iter()
        .map(|a| {
            let d = source.distance(a);
            Ok((lambda_coeff(model, d)?, source.bearing_to(a)))
        })
        .collect()
}

/// Source FIM `Σ λ_k R_k` for precisely known anchors.
pub fn source_fim(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<InfoMatrix2> {
    if anchors.is_empty() {
        return Err(Error::DegenerateInput("at least one anchor is required"));
    }
    Ok(anchor_terms(anchors, source, model)?
        .into_iter()
        .map(|(lambda, phi)| lambda * bearing_matrix(phi))
        .sum())
}

/// True when every anchor lies on a single line through the source, in
/// which case the source FIM is singular.
pub fn geometry_is_degenerate(anchors: &[Point], source: &Point) -> bool {
    let mut phis = anchors.iter().map(|a| source.bearing_to(a));
    let Some(first) = phis.next() else {
        return true;
    };
    phis.all(|p| (p - first).sin().abs() < 1e-9)
}

/// IE parameters of `Σ λ_k R(φ_k)` from the pairwise closed form.
pub fn source_ie_closed_form(lambdas: &[f64], phis: &[f64]) -> Result<EllipseParams> {
    if lambdas.is_empty() || lambdas.len() != phis.len() {
        return Err(Error::DegenerateInput("lambdas and phis must be non-empty and equal length"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::DegenerateInput("lambdas must be positive"));
    }
    let total: f64 = lambdas.iter().sum();
    let mut disc: f64 = lambdas.iter().map(|l| l * l).sum();
    for i in 0..lambdas.len() {
        for j in (i + 1)..lambdas.len() {
            disc += 2.0 * lambdas[i] * lambdas[j] * (2.0 * (phis[i] - phis[j])).cos();
        }
    }
    let half_root = 0.5 * disc.max(0.0).sqrt();
    let (mut sn, mut cs) = (0.0, 0.0);
    for (l, p) in lambdas.iter().zip(phis) {
        let (s, c) = (2.0 * p).sin_cos();
        sn += l * s;
        cs += l * c;
    }
    EllipseParams::new(
        0.5 * total + half_root,
        0.5 * total - half_root,
        0.5 * sn.atan2(cs),
    )
}

/// `Σ_{i<j} cos 2(φ_i − φ_j)` for `n` equally spaced bearings.
pub fn equal_spacing_cosine_sum(n: usize, phi1: f64) -> f64 {
    let phis = circle_bearings(n, phi1);
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += (2.0 * (phis[i] - phis[j])).cos();
        }
    }
    s
}

/// `φ_i = φ1 + (i − 1)·2π/n`
pub fn circle_bearings(n: usize, phi1: f64) -> Vec<f64> {
    (0..n)
        .map(|i| phi1 + i as f64 * 2.0 * PI / n as f64)
        .collect()
}

/// IE at the center of `n ≥ 3` anchors equally spaced on a circle of radius
/// `d`: a circle with `μ = η = nλ/2`, independent of `phi1`.
pub fn circle_scenario_ie(n: usize, d: f64, model: &PropagationModel, phi1: f64) -> Result<EllipseParams> {
    if n < 3 {
        return Err(Error::DegenerateInput("circle geometry needs n >= 3"));
    }
    if !phi1.is_finite() {
        return Err(Error::DegenerateInput("phi1 must be finite"));
    }
    model.validate()?;
    let lambda = lambda_coeff(model, d)?;
    let half = 0.5 * n as f64 * lambda;
    EllipseParams::new(half, half, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipse::fim_to_ellipse;

    const M: PropagationModel = PropagationModel::INDOOR;

    #[test]
    fn mean_rss_values() {
        assert_eq!(mean_rss(&M, 1.0).unwrap(), 0.0);
        assert!((mean_rss(&M, 10.0).unwrap() + 35.0).abs() < 1e-12);
        assert!((mean_rss(&M, 3.0).unwrap() + 35.0 * 3f64.log10()).abs() < 1e-12);
        assert!(matches!(mean_rss(&M, 0.5), Err(Error::BelowReferenceDistance { .. })));
    }

    #[test]
    fn lambda_scaling() {
        // (10·3.5 / (5·ln 10))² = (7/ln 10)²
        let expected = (7.0 / LN_10).powi(2);
        assert!((lambda_coeff(&M, 1.0).unwrap() - expected).abs() < 1e-13);
        assert!((expected - 9.241_973_153_569_08).abs() < 1e-12);
        let l3 = lambda_coeff(&M, 3.0).unwrap();
        assert!((lambda_coeff(&M, 6.0).unwrap() * 4.0 - l3).abs() < 1e-14);
        let m2 = PropagationModel { gamma: 7.0, ..M };
        assert!((lambda_coeff(&m2, 3.0).unwrap() - 4.0 * l3).abs() < 1e-13);
        assert!(lambda_coeff(&M, 0.99).is_err());
    }

    #[test]
    fn bearing_matrix_examples() {
        assert_eq!(bearing_matrix(0.0), InfoMatrix2::new(1.0, 0.0, 0.0));
        let r = bearing_matrix(PI / 4.0);
        for v in [r.f11, r.f12, r.f22] {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn single_anchor_is_rank_one() {
        let f = source_fim(&[Point::new(3.0, 4.0)], &Point::ORIGIN, &M).unwrap();
        assert!(f.det().abs() < 1e-12 * f.scale() * f.scale());
        assert!(geometry_is_degenerate(&[Point::new(3.0, 4.0), Point::new(-6.0, -8.0)], &Point::ORIGIN));
        assert!(!geometry_is_degenerate(&[Point::new(3.0, 4.0), Point::new(-6.0, 8.0)], &Point::ORIGIN));
    }

    #[test]
    fn closed_form_single_term() {
        let e = source_ie_closed_form(&[1.0], &[0.9]).unwrap();
        assert!((e.major - 1.0).abs() < 1e-15);
        assert_eq!(e.minor, 0.0);
        assert!((e.angle - 0.9).abs() < 1e-15);
        assert!(source_ie_closed_form(&[1.0, 2.0], &[0.1]).is_err());
        assert!(source_ie_closed_form(&[], &[]).is_err());
    }

    #[test]
    fn circle_is_rotation_invariant() {
        for phi1 in [0.0, PI / 7.0, 0.7] {
            let e = circle_scenario_ie(7, 4.0, &M, phi1).unwrap();
            let lambda = lambda_coeff(&M, 4.0).unwrap();
            assert_eq!((e.major, e.minor, e.angle), (3.5 * lambda, 3.5 * lambda, 0.0));
        }
        assert!(circle_scenario_ie(2, 4.0, &M, 0.0).is_err());
        assert!(circle_scenario_ie(5, 0.5, &M, 0.0).is_err());
    }

    #[test]
    fn center_of_circle_matrix_path() {
        let n = 9;
        let anchors: Vec<Point> = circle_bearings(n, 0.3)
            .into_iter()
            .map(|p| Point::new(5.0 * p.cos(), 5.0 * p.sin()))
            .collect();
        let e = fim_to_ellipse(&source_fim(&anchors, &Point::ORIGIN, &M).unwrap()).unwrap();
        let expected = 0.5 * n as f64 * lambda_coeff(&M, 5.0).unwrap();
        assert!((e.major - expected).abs() < 1e-12 * expected);
        assert!((e.minor - expected).abs() < 1e-12 * expected);
    }
}
