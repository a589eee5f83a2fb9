//! Joint estimation of source and uncertain-anchor positions.
//!
//! Sources transmit one at a time; anchor `k` collects `t_j` RSS samples from
//! source `j`. Uncertain anchors additionally carry `a_k` prior position
//! estimates with covariance `K_k`. The parameter vector stacks the positions
//! of the unknown-position sources first, then the uncertain anchors:
//!
//! ```text
//! F = [ Ξ   Γ ]     Ξ = diag(t_j Ψʲ)          Ψʲ = Σ_{k∈N} λ_kʲ R_kʲ
//!     [ Γᵀ  Ω ]     Ω = diag(Ω_k)             Ω_k = a_k K_k⁻¹ + Σ_{j∈S} t_j λ_kʲ R_kʲ
//!                   Γ_{jk} = −t_j λ_kʲ R_kʲ
//! ```
//!
//! Marginal FIMs of single nodes are computed by block elimination. Sources
//! with known positions own no parameter block but still contribute to `Ω`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ellipse::{InfoMatrix2, DET_TOL};
use crate::error::{Error, Result};
use crate::rss::{bearing_matrix, lambda_unchecked, Point, PropagationModel};

/// Anchor with a precisely known position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub position: Point,
}

impl Anchor {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            position: Point::new(x, y),
        }
    }
}

/// Anchor whose position is known only through prior estimates.
///
/// `position` is the true position at which bounds are evaluated; it is an
/// evaluation point, not knowledge available to an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainAnchor {
    pub id: String,
    pub position: Point,
    /// Covariance `K_k` of each prior estimate, m².
    pub prior_cov: InfoMatrix2,
    /// Number of prior estimates `a_k`.
    pub prior_count: u32,
}

impl UncertainAnchor {
    /// Isotropic prior `K = Δ² I` with a single prior estimate.
    pub fn isotropic(id: impl Into<String>, x: f64, y: f64, delta: f64) -> Self {
        Self {
            id: id.into(),
            position: Point::new(x, y),
            prior_cov: InfoMatrix2::scaled_identity(delta * delta),
            prior_count: 1,
        }
    }

    /// `a_k K_k⁻¹`
    pub fn prior_information(&self) -> Result<InfoMatrix2> {
        let inv = self.prior_cov.inverse().ok_or_else(|| {
            Error::PreconditionViolation(format!("prior covariance of `{}` is not invertible", self.id))
        })?;
        Ok(self.prior_count as f64 * inv)
    }

    /// Δ when the prior covariance is `Δ² I`.
    pub fn isotropic_delta(&self) -> Option<f64> {
        let k = &self.prior_cov;
        let tol = 1e-12 * k.scale();
        ((k.f11 - k.f22).abs() <= tol && k.f12.abs() <= tol && k.f11 > 0.0).then(|| k.f11.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    pub position: Point,
    /// RSS samples `t` collected by each anchor while this source transmits.
    pub sample_count: u32,
    /// Whether the position is given (no parameter block).
    pub known_position: bool,
}

impl Source {
    pub fn unknown(id: impl Into<String>, x: f64, y: f64, sample_count: u32) -> Self {
        Self {
            id: id.into(),
            position: Point::new(x, y),
            sample_count,
            known_position: false,
        }
    }

    pub fn known(id: impl Into<String>, x: f64, y: f64, sample_count: u32) -> Self {
        Self {
            known_position: true,
            ..Self::unknown(id, x, y, sample_count)
        }
    }
}

/// Full network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub model: PropagationModel,
    pub certain_anchors: Vec<Anchor>,
    pub uncertain_anchors: Vec<UncertainAnchor>,
    pub sources: Vec<Source>,
}

/// Reference to a node with an unknown position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    /// Index into `Scenario::sources`.
    Source(usize),
    /// Index into `Scenario::uncertain_anchors`.
    Anchor(usize),
}

impl Scenario {
    pub fn anchor_count(&self) -> usize {
        self.certain_anchors.len() + self.uncertain_anchors.len()
    }

    /// Positions of all anchors: certain first, then uncertain.
    pub fn anchor_positions(&self) -> Vec<Point> {
        self.certain_anchors
            .iter()
            .map(|a| a.position)
            .chain(self.uncertain_anchors.iter().map(|a| a.position))
            .collect()
    }

    pub fn anchor_id(&self, k: usize) -> &str {
        let v = self.certain_anchors.len();
        if k < v {
            &self.certain_anchors[k].id
        } else {
            &self.uncertain_anchors[k - v].id
        }
    }

    /// Indices of the sources with unknown position, in scenario order.
    pub fn unknown_sources(&self) -> Vec<usize> {
        self.sources
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.known_position)
            .map(|(i, _)| i)
            .collect()
    }

    /// Every node with an unknown position, sources first.
    pub fn unknown_nodes(&self) -> Vec<NodeRef> {
        self.unknown_sources()
            .into_iter()
            .map(NodeRef::Source)
            .chain((0..self.uncertain_anchors.len()).map(NodeRef::Anchor))
            .collect()
    }

    pub fn node_id(&self, node: NodeRef) -> &str {
        match node {
            NodeRef::Source(j) => &self.sources[j].id,
            NodeRef::Anchor(k) => &self.uncertain_anchors[k].id,
        }
    }

    pub fn node_position(&self, node: NodeRef) -> Point {
        match node {
            NodeRef::Source(j) => self.sources[j].position,
            NodeRef::Anchor(k) => self.uncertain_anchors[k].position,
        }
    }

    pub fn find_node(&self, id: &str) -> Option<NodeRef> {
        if let Some(j) = self.sources.iter().position(|s| s.id == id) {
            return Some(NodeRef::Source(j));
        }
        self.uncertain_anchors
            .iter()
            .position(|a| a.id == id)
            .map(NodeRef::Anchor)
    }

    /// Checks the model, the sample/prior counts, the prior covariances and
    /// every source–anchor distance against d0.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        for s in &self.sources {
            if s.sample_count == 0 {
                return Err(Error::PreconditionViolation(format!(
                    "source `{}` has zero samples",
                    s.id
                )));
            }
        }
        for a in &self.uncertain_anchors {
            if a.prior_count == 0 {
                return Err(Error::PreconditionViolation(format!(
                    "uncertain anchor `{}` has zero prior estimates",
                    a.id
                )));
            }
            let k = &a.prior_cov;
            if !(k.f11 > 0.0 && k.det() > 0.0) {
                return Err(Error::PreconditionViolation(format!(
                    "prior covariance of `{}` is not positive definite",
                    a.id
                )));
            }
        }
        let positions = self.anchor_positions();
        for s in &self.sources {
            for (k, p) in positions.iter().enumerate() {
                let d = s.position.distance(p);
                if d < self.model.d0_m || !d.is_finite() {
                    return Err(Error::BelowReferenceDistance {
                        distance: d,
                        d0: self.model.d0_m,
                        pair: Some((s.id.clone(), self.anchor_id(k).to_string())),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per (source, anchor) pair: `λ_kʲ R_kʲ`, indexed `[j][k]` over all sources
/// and all anchors (certain first).
pub(crate) fn link_information(sc: &Scenario) -> Vec<Vec<(f64, InfoMatrix2)>> {
    let anchors = sc.anchor_positions();
    sc.sources
        .iter()
        .map(|s| {
            anchors
                .iter()
                .map(|a| {
                    let lambda = lambda_unchecked(&sc.model, s.position.distance(a));
                    (lambda, bearing_matrix(s.position.bearing_to(a)))
                })
                .collect()
        })
        .collect()
}

/// Dense joint FIM with named block views.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFim {
    pub matrix: DMatrix<f64>,
    /// Scenario indices of the sources that own a block, in block order.
    pub unknown_sources: Vec<usize>,
    /// Number of uncertain anchors.
    pub uncertain_count: usize,
}

impl BlockFim {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn source_dim(&self) -> usize {
        2 * self.unknown_sources.len()
    }

    /// Row offset of a node's 2×2 block.
    pub fn offset(&self, node: NodeRef) -> Option<usize> {
        match node {
            NodeRef::Source(j) => self
                .unknown_sources
                .iter()
                .position(|&s| s == j)
                .map(|i| 2 * i),
            NodeRef::Anchor(k) => (k < self.uncertain_count).then(|| self.source_dim() + 2 * k),
        }
    }

    pub fn xi(&self) -> DMatrix<f64> {
        let s = self.source_dim();
        self.matrix.view((0, 0), (s, s)).into_owned()
    }

    pub fn gamma(&self) -> DMatrix<f64> {
        let s = self.source_dim();
        let u = 2 * self.uncertain_count;
        self.matrix.view((0, s), (s, u)).into_owned()
    }

    pub fn omega(&self) -> DMatrix<f64> {
        let s = self.source_dim();
        let u = 2 * self.uncertain_count;
        self.matrix.view((s, s), (u, u)).into_owned()
    }

    pub fn block(&self, row: usize, col: usize) -> [[f64; 2]; 2] {
        let m = &self.matrix;
        [
            [m[(row, col)], m[(row, col + 1)]],
            [m[(row + 1, col)], m[(row + 1, col + 1)]],
        ]
    }
}

fn put(m: &mut DMatrix<f64>, row: usize, col: usize, b: &InfoMatrix2) {
    m[(row, col)] += b.f11;
    m[(row, col + 1)] += b.f12;
    m[(row + 1, col)] += b.f12;
    m[(row + 1, col + 1)] += b.f22;
}

/// Pieces shared by assembly and marginalization.
struct Blocks {
    unknown: Vec<usize>,
    /// `t_j Ψʲ` per unknown source.
    xi: Vec<InfoMatrix2>,
    /// `Ω_k` per uncertain anchor.
    omega: Vec<InfoMatrix2>,
    /// `a_k K_k⁻¹`
    prior: Vec<InfoMatrix2>,
    /// `Σ_{j∈S} t_j λ_kʲ R_kʲ`
    gain: Vec<InfoMatrix2>,
    /// `Γ_{jk}` indexed `[unknown source][uncertain anchor]`.
    gamma: Vec<Vec<InfoMatrix2>>,
}

fn blocks(sc: &Scenario) -> Result<Blocks> {
    sc.validate()?;
    let unknown = sc.unknown_sources();
    if unknown.is_empty() && sc.uncertain_anchors.is_empty() {
        return Err(Error::EmptyParameterVector);
    }
    let links = link_information(sc);
    let v = sc.certain_anchors.len();
    let t = |j: usize| sc.sources[j].sample_count as f64;

    let xi = unknown
        .iter()
        .map(|&j| t(j) * links[j].iter().map(|(l, r)| *l * *r).sum::<InfoMatrix2>())
        .collect();

    let mut prior = Vec::with_capacity(sc.uncertain_anchors.len());
    let mut gain = Vec::with_capacity(sc.uncertain_anchors.len());
    for (k, a) in sc.uncertain_anchors.iter().enumerate() {
        prior.push(a.prior_information()?);
        gain.push(
            (0..sc.sources.len())
                .map(|j| {
                    let (l, r) = links[j][v + k];
                    (t(j) * l) * r
                })
                .sum(),
        );
    }
    let omega = prior.iter().zip(&gain).map(|(p, g)| *p + *g).collect();

    let gamma = unknown
        .iter()
        .map(|&j| {
            (0..sc.uncertain_anchors.len())
                .map(|k| {
                    let (l, r) = links[j][v + k];
                    (-t(j) * l) * r
                })
                .collect()
        })
        .collect();

    Ok(Blocks {
        unknown,
        xi,
        omega,
        prior,
        gain,
        gamma,
    })
}

/// Assembles the joint FIM over unknown source positions and uncertain
/// anchor positions.
pub fn assemble_block_fim(sc: &Scenario) -> Result<BlockFim> {
    let b = blocks(sc)?;
    let s = b.unknown.len();
    let u = sc.uncertain_anchors.len();
    let n = 2 * (s + u);
    let mut m = DMatrix::zeros(n, n);
    for (i, x) in b.xi.iter().enumerate() {
        put(&mut m, 2 * i, 2 * i, x);
    }
    for (k, o) in b.omega.iter().enumerate() {
        put(&mut m, 2 * (s + k), 2 * (s + k), o);
    }
    for (i, row) in b.gamma.iter().enumerate() {
        for (k, g) in row.iter().enumerate() {
            put(&mut m, 2 * i, 2 * (s + k), g);
            put(&mut m, 2 * (s + k), 2 * i, g);
        }
    }
    Ok(BlockFim {
        matrix: m,
        unknown_sources: b.unknown,
        uncertain_count: u,
    })
}

/// Net source information and its loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceFimDecomposition {
    /// `t Ψʲ`
    pub pure: InfoMatrix2,
    /// Loss from jointly estimating the uncertain anchors.
    pub loss_anchors: InfoMatrix2,
    /// Loss from jointly estimating the other unknown sources.
    pub loss_other_sources: InfoMatrix2,
    pub net: InfoMatrix2,
}

/// Net anchor information and its gain/loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorFimDecomposition {
    /// `a_k K_k⁻¹`
    pub prior: InfoMatrix2,
    /// `Σ_j t_j λ_kʲ R_kʲ` over every active source.
    pub gain_main: InfoMatrix2,
    /// Reduction from the sources whose positions are unknown.
    pub loss_unknown_sources: InfoMatrix2,
    /// Reduction from the other uncertain anchors.
    pub loss_other_anchors: InfoMatrix2,
    pub net: InfoMatrix2,
}

fn inv2(m: &InfoMatrix2, what: impl FnOnce() -> String) -> Result<InfoMatrix2> {
    m.inverse().ok_or_else(|| Error::SingularBlock(what()))
}

/// `A · B · Cᵀ` for symmetric 2×2 blocks.
fn sandwich(a: &InfoMatrix2, b: &InfoMatrix2, c: &InfoMatrix2) -> [[f64; 2]; 2] {
    let ab = a.matmul(b);
    let c = c.as_array();
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = ab[i][0] * c[j][0] + ab[i][1] * c[j][1];
        }
    }
    out
}

fn sym(m: [[f64; 2]; 2]) -> InfoMatrix2 {
    InfoMatrix2::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
}

/// Schur complement of a dense symmetric matrix onto its leading 2×2 block:
/// `M_00 − M_0r M_rr⁻¹ M_r0`, returning the subtracted term.
fn eliminate_rest(m: &DMatrix<f64>, what: &str) -> Result<InfoMatrix2> {
    let n = m.nrows();
    if n == 2 {
        return Ok(InfoMatrix2::ZERO);
    }
    let rest = m.view((2, 2), (n - 2, n - 2)).into_owned();
    let cross = m.view((2, 0), (n - 2, 2)).into_owned();
    let scale = rest.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = rest
        .cholesky()
        .ok_or_else(|| Error::SingularBlock(format!("{what}: remaining block is not positive definite")))?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    if min_pivot <= DET_TOL.sqrt() * 1e-2 * scale {
        return Err(Error::SingularBlock(format!("{what}: remaining block is singular")));
    }
    let solved = chol.solve(&cross);
    let t = cross.transpose() * solved;
    Ok(InfoMatrix2::new(t[(0, 0)], 0.5 * (t[(0, 1)] + t[(1, 0)]), t[(1, 1)]))
}

/// Marginal FIM of source `j` (scenario index), by eliminating the uncertain
/// anchors and then the other unknown sources.
#[allow(clippy::needless_range_loop)] // k indexes Γ and Ω⁻¹ together
pub fn source_marginal_fim(sc: &Scenario, j: usize) -> Result<SourceFimDecomposition> {
    if j >= sc.sources.len() {
        return Err(Error::UnknownNodeId(format!("source index {j}")));
    }
    if sc.sources[j].known_position {
        return Err(Error::PreconditionViolation(format!(
            "source `{}` has a known position",
            sc.sources[j].id
        )));
    }
    let b = blocks(sc)?;
    let omega_inv = b
        .omega
        .iter()
        .enumerate()
        .map(|(k, o)| inv2(o, || format!("anchor block of `{}`", sc.uncertain_anchors[k].id)))
        .collect::<Result<Vec<_>>>()?;

    // order: target source first, then the other unknown sources
    let me = b.unknown.iter().position(|&s| s == j).expect("unknown source");
    let order: Vec<usize> = std::iter::once(me)
        .chain((0..b.unknown.len()).filter(|&i| i != me))
        .collect();

    // reduced system after eliminating the anchors: Ξ − Γ Ω⁻¹ Γᵀ
    let s = order.len();
    let mut reduced = DMatrix::zeros(2 * s, 2 * s);
    for (p, &i) in order.iter().enumerate() {
        for (q, &l) in order.iter().enumerate() {
            let mut acc = [[0.0; 2]; 2];
            for k in 0..omega_inv.len() {
                let t = sandwich(&b.gamma[i][k], &omega_inv[k], &b.gamma[l][k]);
                for r in 0..2 {
                    for c in 0..2 {
                        acc[r][c] -= t[r][c];
                    }
                }
            }
            if i == l {
                let x = b.xi[i].as_array();
                for r in 0..2 {
                    for c in 0..2 {
                        acc[r][c] += x[r][c];
                    }
                }
            }
            for r in 0..2 {
                for c in 0..2 {
                    reduced[(2 * p + r, 2 * q + c)] = acc[r][c];
                }
            }
        }
    }

    let pure = b.xi[me];
    let loss_anchors = sym({
        let mut acc = [[0.0; 2]; 2];
        for k in 0..omega_inv.len() {
            let t = sandwich(&b.gamma[me][k], &omega_inv[k], &b.gamma[me][k]);
            for r in 0..2 {
                for c in 0..2 {
                    acc[r][c] += t[r][c];
                }
            }
        }
        acc
    });
    let loss_other_sources = eliminate_rest(&reduced, &format!("source `{}`", sc.sources[j].id))?;
    let net = pure - loss_anchors - loss_other_sources;
    Ok(SourceFimDecomposition {
        pure,
        loss_anchors,
        loss_other_sources,
        net,
    })
}

/// Marginal FIM of uncertain anchor `k`, by eliminating the unknown sources
/// and then the other uncertain anchors.
#[allow(clippy::needless_range_loop)] // i indexes Γ and Ξ⁻¹ together
pub fn anchor_marginal_fim(sc: &Scenario, k: usize) -> Result<AnchorFimDecomposition> {
    if k >= sc.uncertain_anchors.len() {
        return Err(Error::UnknownNodeId(format!("uncertain anchor index {k}")));
    }
    let b = blocks(sc)?;
    let xi_inv = b
        .unknown
        .iter()
        .enumerate()
        .map(|(i, &j)| inv2(&b.xi[i], || format!("source block of `{}`", sc.sources[j].id)))
        .collect::<Result<Vec<_>>>()?;

    let u = sc.uncertain_anchors.len();
    let order: Vec<usize> = std::iter::once(k).chain((0..u).filter(|&l| l != k)).collect();

    // Ω − Γᵀ Ξ⁻¹ Γ, with Γᵀ blocks being Γ_{jk} (symmetric)
    let mut reduced = DMatrix::zeros(2 * u, 2 * u);
    for (p, &a) in order.iter().enumerate() {
        for (q, &c) in order.iter().enumerate() {
            let mut acc = [[0.0; 2]; 2];
            for i in 0..xi_inv.len() {
                let t = sandwich(&b.gamma[i][a], &xi_inv[i], &b.gamma[i][c]);
                for r in 0..2 {
                    for s in 0..2 {
                        acc[r][s] -= t[r][s];
                    }
                }
            }
            if a == c {
                let o = b.omega[a].as_array();
                for r in 0..2 {
                    for s in 0..2 {
                        acc[r][s] += o[r][s];
                    }
                }
            }
            for r in 0..2 {
                for s in 0..2 {
                    reduced[(2 * p + r, 2 * q + s)] = acc[r][s];
                }
            }
        }
    }

    let loss_unknown_sources = sym({
        let mut acc = [[0.0; 2]; 2];
        for i in 0..xi_inv.len() {
            let t = sandwich(&b.gamma[i][k], &xi_inv[i], &b.gamma[i][k]);
            for r in 0..2 {
                for s in 0..2 {
                    acc[r][s] += t[r][s];
                }
            }
        }
        acc
    });
    let loss_other_anchors =
        eliminate_rest(&reduced, &format!("anchor `{}`", sc.uncertain_anchors[k].id))?;
    let prior = b.prior[k];
    let gain_main = b.gain[k];
    let net = prior + gain_main - loss_unknown_sources - loss_other_anchors;
    Ok(AnchorFimDecomposition {
        prior,
        gain_main,
        loss_unknown_sources,
        loss_other_anchors,
        net,
    })
}

/// Net marginal FIM of any unknown-position node.
pub fn node_marginal_fim(sc: &Scenario, node: NodeRef) -> Result<InfoMatrix2> {
    match node {
        NodeRef::Source(j) => source_marginal_fim(sc, j).map(|d| d.net),
        NodeRef::Anchor(k) => anchor_marginal_fim(sc, k).map(|d| d.net),
    }
}

/// Source loss coefficient for an anchor with isotropic uncertainty `Δ`,
/// single source, `t = a_k = 1`:
/// `Δλ = λ²Δ²(1 − Δ²λ(1 + λΔ²)⁻¹)`, always below `λ`.
pub fn isotropic_loss_coeff(lambda: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    lambda * lambda * d2 * (1.0 - d2 * lambda / (1.0 + lambda * d2))
}

fn single_unknown_source(sc: &Scenario) -> Result<usize> {
    let unknown = sc.unknown_sources();
    if unknown.len() != 1 {
        return Err(Error::PreconditionViolation(format!(
            "expected exactly one unknown-position source, found {}",
            unknown.len()
        )));
    }
    Ok(unknown[0])
}

fn require_unit_counts(sc: &Scenario) -> Result<()> {
    if sc.sources.iter().any(|s| s.sample_count != 1) {
        return Err(Error::PreconditionViolation("closed form assumes t = 1".into()));
    }
    if sc.uncertain_anchors.iter().any(|a| a.prior_count != 1) {
        return Err(Error::PreconditionViolation("closed form assumes a_k = 1".into()));
    }
    Ok(())
}

fn isotropic_deltas(sc: &Scenario) -> Result<Vec<f64>> {
    sc.uncertain_anchors
        .iter()
        .map(|a| {
            a.isotropic_delta().ok_or_else(|| {
                Error::PreconditionViolation(format!("prior covariance of `{}` is not Δ²I", a.id))
            })
        })
        .collect()
}

/// Closed-form source FIM for a single source when every uncertain anchor
/// has an isotropic prior and `t = a_k = 1`:
/// `Ψ − Σ_{k∈U} Δλ_k R_k`.
pub fn isotropic_uncertainty_source_fim(sc: &Scenario) -> Result<InfoMatrix2> {
    sc.validate()?;
    let j = single_unknown_source(sc)?;
    require_unit_counts(sc)?;
    if sc.sources.len() != 1 {
        return Err(Error::PreconditionViolation("closed form assumes a single active source".into()));
    }
    let deltas = isotropic_deltas(sc)?;
    let links = link_information(sc);
    let v = sc.certain_anchors.len();
    let psi: InfoMatrix2 = links[j].iter().map(|(l, r)| *l * *r).sum();
    let loss: InfoMatrix2 = deltas
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let (l, r) = links[j][v + k];
            isotropic_loss_coeff(l, *d) * r
        })
        .sum();
    Ok(psi - loss)
}

/// Closed-form source FIM when every anchor is uncertain with a common
/// isotropic prior `Δ² I`: `Σ λ_k / (1 + λ_k Δ²) R_k`.
pub fn all_uncertain_source_fim(sc: &Scenario) -> Result<InfoMatrix2> {
    sc.validate()?;
    if !sc.certain_anchors.is_empty() {
        return Err(Error::PreconditionViolation("every anchor must be uncertain".into()));
    }
    if sc.uncertain_anchors.is_empty() {
        return Err(Error::PreconditionViolation("no anchors".into()));
    }
    if sc.sources.len() != 1 {
        return Err(Error::PreconditionViolation("closed form assumes a single active source".into()));
    }
    let j = single_unknown_source(sc)?;
    require_unit_counts(sc)?;
    let deltas = isotropic_deltas(sc)?;
    let delta = deltas[0];
    if deltas.iter().any(|d| (d - delta).abs() > 1e-12 * delta) {
        return Err(Error::PreconditionViolation("all anchors must share the same Δ".into()));
    }
    let links = link_information(sc);
    Ok(links[j]
        .iter()
        .map(|(l, r)| (l / (1.0 + l * delta * delta)) * *r)
        .sum())
}

/// Loss coefficient `Δλ_kʲ` of uncertain anchor `k` on source `j` when every
/// other source transmits from a known position, `K_k = Δ²I` and
/// `t = a_k = 1`:
///
/// `Δλ_kʲ = (λ_kʲ)² Δ² (1 − Δ² Σ_p q_kʲᵀ λ_kᵖ (I + Δ² Σ_i λ_kⁱ R_kⁱ)⁻¹ R_kᵖ q_kʲ)`.
pub fn multi_source_loss_coeff(sc: &Scenario, k: usize, j: usize) -> Result<f64> {
    sc.validate()?;
    if k >= sc.uncertain_anchors.len() {
        return Err(Error::UnknownNodeId(format!("uncertain anchor index {k}")));
    }
    if j >= sc.sources.len() {
        return Err(Error::UnknownNodeId(format!("source index {j}")));
    }
    if single_unknown_source(sc)? != j {
        return Err(Error::PreconditionViolation(format!(
            "source `{}` must be the only unknown-position source",
            sc.sources[j].id
        )));
    }
    require_unit_counts(sc)?;
    let delta = sc.uncertain_anchors[k].isotropic_delta().ok_or_else(|| {
        Error::PreconditionViolation(format!(
            "prior covariance of `{}` is not Δ²I",
            sc.uncertain_anchors[k].id
        ))
    })?;
    let d2 = delta * delta;
    let links = link_information(sc);
    let col = sc.certain_anchors.len() + k;
    let total: InfoMatrix2 = links.iter().map(|row| row[col].0 * row[col].1).sum();
    let inner = inv2(&(InfoMatrix2::IDENTITY + d2 * total), || "I + Δ²ΣλR".into())?;
    let phi = sc.sources[j].position.bearing_to(&sc.uncertain_anchors[k].position);
    let q = [phi.cos(), phi.sin()];
    let correction: f64 = links
        .iter()
        .map(|row| {
            let (l, r) = row[col];
            let rq = r.mul_vec(q);
            let w = inner.mul_vec(rq);
            l * (q[0] * w[0] + q[1] * w[1])
        })
        .sum();
    let lambda = links[j][col].0;
    Ok(lambda * lambda * d2 * (1.0 - d2 * correction))
}
