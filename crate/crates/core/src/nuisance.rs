//! Source localization when the transmit power or the path-loss exponent is
//! unknown and must be estimated jointly with the position.
//!
//! Each nuisance parameter adds one row/column to the FIM. Eliminating it
//! (Schur complement) leaves the pure source FIM `Ψ` minus a rank-one loss,
//! represented by [`LossEllipse`].

use nalgebra::{Matrix3, Matrix4};

use crate::ellipse::{normalize_angle, InfoMatrix2};
use crate::error::{Error, Result};
use crate::rss::{anchor_terms, bearing_matrix, Point, PropagationModel};

/// Symmetric 3×3 FIM over `[x_TX, y_TX, nuisance]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fim3(pub Matrix3<f64>);

impl Fim3 {
    /// Upper-left 2×2 block, the pure source information `Ψ`.
    pub fn position_block(&self) -> InfoMatrix2 {
        InfoMatrix2::new(self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 1)])
    }

    /// Schur complement onto the position block.
    pub fn schur_position(&self) -> Result<InfoMatrix2> {
        let c = self.0[(2, 2)];
        if !(c > 0.0) {
            return Err(Error::SingularFim);
        }
        let b = [self.0[(0, 2)], self.0[(1, 2)]];
        Ok(self.position_block() - (1.0 / c) * InfoMatrix2::outer(b))
    }

    /// Ratio of smallest to largest singular value.
    pub fn condition_ratio(&self) -> f64 {
        singular_ratio(self.0.symmetric_eigenvalues().iter().copied())
    }
}

/// Rank-one information loss `a · R(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEllipse {
    pub magnitude: f64,
    /// Direction of the loss in (−π/2, π/2]; 0 when the magnitude is 0.
    pub angle: f64,
}

impl LossEllipse {
    /// `v vᵀ / c` expressed as magnitude `|v|²/c` and direction of `v`.
    fn from_direction(v: [f64; 2], c: f64) -> Self {
        let norm2 = v[0] * v[0] + v[1] * v[1];
        if norm2 == 0.0 {
            return Self {
                magnitude: 0.0,
                angle: 0.0,
            };
        }
        Self {
            magnitude: norm2 / c,
            angle: normalize_angle(v[1].atan2(v[0])),
        }
    }

    pub fn to_fim(&self) -> InfoMatrix2 {
        self.magnitude * bearing_matrix(self.angle)
    }
}

struct Terms {
    lambda: f64,
    phi: f64,
    /// log10(d/d0)
    log_ratio: f64,
}

fn terms(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<Vec<Terms>> {
    if anchors.is_empty() {
        return Err(Error::DegenerateInput("at least one anchor is required"));
    }
    let lp = anchor_terms(anchors, source, model)?;
    Ok(anchors
        .iter()
        .zip(lp)
        .map(|(a, (lambda, phi))| Terms {
            lambda,
            phi,
            log_ratio: (source.distance(a) / model.d0_m).log10(),
        })
        .collect())
}

fn psi(ts: &[Terms]) -> InfoMatrix2 {
    ts.iter().map(|t| t.lambda * bearing_matrix(t.phi)).sum()
}

fn assemble3(psi: InfoMatrix2, cross: [f64; 2], corner: f64) -> Fim3 {
    Fim3(Matrix3::new(
        psi.f11, psi.f12, cross[0], //
        psi.f12, psi.f22, cross[1], //
        cross[0], cross[1], corner,
    ))
}

/// FIM over `[x_TX, y_TX, p_TX]`. Independent of the value of p0.
pub fn fim_unknown_power(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<Fim3> {
    let ts = terms(anchors, source, model)?;
    let sigma = model.sigma_db;
    let mut cross = [0.0; 2];
    for t in &ts {
        let w = t.lambda.sqrt() / sigma;
        cross[0] += w * t.phi.cos();
        cross[1] += w * t.phi.sin();
    }
    let corner = ts.len() as f64 / (sigma * sigma);
    Ok(assemble3(psi(&ts), cross, corner))
}

/// FIM over `[x_TX, y_TX, γ]`.
///
/// The γ–γ entry is `(100/σ²) Σ log10²(d_k/d0)`; the `1/σ²` factor follows
/// from the score of the Gaussian likelihood and is confirmed by the Monte
/// Carlo score oracle in the tests.
pub fn fim_unknown_gamma(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<Fim3> {
    let ts = terms(anchors, source, model)?;
    let sigma = model.sigma_db;
    let mut cross = [0.0; 2];
    let mut corner = 0.0;
    for t in &ts {
        let w = -10.0 * t.lambda.sqrt() / sigma * t.log_ratio;
        cross[0] += w * t.phi.cos();
        cross[1] += w * t.phi.sin();
        corner += 100.0 * t.log_ratio * t.log_ratio / (sigma * sigma);
    }
    Ok(assemble3(psi(&ts), cross, corner))
}

/// Equivalent source FIM with unknown transmit power, and the rank-one loss
/// `a1 · R(β1)` with `a1 = |Σ √λ_k q_k|² / n`.
pub fn equivalent_fim_unknown_power(
    anchors: &[Point],
    source: &Point,
    model: &PropagationModel,
) -> Result<(InfoMatrix2, LossEllipse)> {
    if anchors.len() < 2 {
        return Err(Error::DegenerateInput("at least two anchors are required"));
    }
    let ts = terms(anchors, source, model)?;
    let n = ts.len() as f64;
    let mut v = [0.0; 2];
    for t in &ts {
        v[0] += t.lambda.sqrt() * t.phi.cos();
        v[1] += t.lambda.sqrt() * t.phi.sin();
    }
    let loss = LossEllipse::from_direction(v, n);
    let eq = psi(&ts) - loss.to_fim();
    check_nonsingular(&eq)?;
    Ok((eq, loss))
}

/// Pairwise form of the unknown-power loss magnitude:
/// `(1/n)[Σ λ_k + 2 Σ_{i<j} √(λ_i λ_j) cos(φ_i − φ_j)]`.
pub fn power_loss_magnitude_pairwise(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<f64> {
    let ts = terms(anchors, source, model)?;
    let mut a: f64 = ts.iter().map(|t| t.lambda).sum();
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            a += 2.0 * (ts[i].lambda * ts[j].lambda).sqrt() * (ts[i].phi - ts[j].phi).cos();
        }
    }
    Ok(a / ts.len() as f64)
}

/// Equivalent source FIM with unknown path-loss exponent, and the rank-one
/// loss `a2 · R(β2)` with `a2 = |Σ √λ_k q_k log10(d_k/d0)|² / Σ log10²(d_k/d0)`.
pub fn equivalent_fim_unknown_gamma(
    anchors: &[Point],
    source: &Point,
    model: &PropagationModel,
) -> Result<(InfoMatrix2, LossEllipse)> {
    if anchors.len() < 2 {
        return Err(Error::DegenerateInput("at least two anchors are required"));
    }
    let ts = terms(anchors, source, model)?;
    let mut v = [0.0; 2];
    let mut denom = 0.0;
    for t in &ts {
        let w = t.lambda.sqrt() * t.log_ratio;
        v[0] += w * t.phi.cos();
        v[1] += w * t.phi.sin();
        denom += t.log_ratio * t.log_ratio;
    }
    if !(denom > 0.0) {
        return Err(Error::SingularFim);
    }
    let loss = LossEllipse::from_direction(v, denom);
    let eq = psi(&ts) - loss.to_fim();
    check_nonsingular(&eq)?;
    Ok((eq, loss))
}

fn check_nonsingular(f: &InfoMatrix2) -> Result<()> {
    match f.inverse() {
        Some(_) => Ok(()),
        None => Err(Error::SingularFim),
    }
}

/// FIM over `[x_TX, y_TX, p_TX, γ]`.
pub fn fim_power_and_gamma(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<Matrix4<f64>> {
    let ts = terms(anchors, source, model)?;
    let sigma = model.sigma_db;
    let mut f = Matrix4::zeros();
    for t in &ts {
        // row of the Jacobian of the mean power, scaled by 1/σ
        let g = t.lambda.sqrt();
        let row = [
            g * t.phi.cos(),
            g * t.phi.sin(),
            1.0 / sigma,
            -10.0 * t.log_ratio / sigma,
        ];
        for i in 0..4 {
            for j in 0..4 {
                f[(i, j)] += row[i] * row[j];
            }
        }
    }
    Ok(f)
}

/// Singular-value ratio `σ_min/σ_max` of the 4×4 FIM with both transmit
/// power and path-loss exponent unknown. Values near zero indicate the
/// joint problem is unidentifiable.
pub fn joint_power_gamma_singularity(anchors: &[Point], source: &Point, model: &PropagationModel) -> Result<f64> {
    let f = fim_power_and_gamma(anchors, source, model)?;
    Ok(singular_ratio(f.symmetric_eigenvalues().iter().copied()))
}

fn singular_ratio(eigs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = eigs.fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
        (lo.min(e.abs()), hi.max(e.abs()))
    });
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}
