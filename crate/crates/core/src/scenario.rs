//! Scenario documents (TOML), topology generators and parameter sweeps.
//!
//! A document describes the propagation model, anchors (explicit, or
//! generated from a `[topology]` table), sources and analysis settings.
//! Angles in a document may be given as a bare number (radians) or as a
//! string with a unit suffix, e.g. `"30deg"` or `"0.5rad"`.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ellipse::InfoMatrix2;
use crate::error::{Error, Result, ValidationError};
use crate::joint::{Anchor, Scenario, Source, UncertainAnchor};
use crate::rss::{circle_bearings, Point, PropagationModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub p0_dbm: f64,
    pub gamma: f64,
    pub d0_m: f64,
    pub sigma_db: f64,
}

impl From<ModelConfig> for PropagationModel {
    fn from(m: ModelConfig) -> Self {
        PropagationModel {
            p0_dbm: m.p0_dbm,
            gamma: m.gamma,
            d0_m: m.d0_m,
            sigma_db: m.sigma_db,
        }
    }
}

impl From<PropagationModel> for ModelConfig {
    fn from(m: PropagationModel) -> Self {
        ModelConfig {
            p0_dbm: m.p0_dbm,
            gamma: m.gamma,
            d0_m: m.d0_m,
            sigma_db: m.sigma_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorKind {
    Certain,
    Uncertain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub id: String,
    pub x_m: f64,
    pub y_m: f64,
    pub kind: AnchorKind,
    /// Full prior covariance, m². Uncertain anchors only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_cov: Option<[[f64; 2]; 2]>,
    /// Isotropic shorthand for `prior_cov = Δ² I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_m: Option<f64>,
    /// Number of prior estimates, default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default = "one")]
    pub sample_count: u32,
    #[serde(default)]
    pub known_position: bool,
}

fn one() -> u32 {
    1
}

fn default_k() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Ellipse scale `k`.
    #[serde(default = "default_k")]
    pub confidence_k: f64,
    /// Node ids to report; empty means every unknown-position node.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            confidence_k: 1.0,
            outputs: Vec::new(),
        }
    }
}

/// Angle given in radians, or as a string with a `deg`/`rad` suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    WithUnit(String),
}

impl Angle {
    pub fn radians(&self) -> std::result::Result<f64, String> {
        match self {
            Angle::Radians(r) => Ok(*r),
            Angle::WithUnit(s) => {
                let s = s.trim();
                let (num, scale) = if let Some(v) = s.strip_suffix("deg") {
                    (v, PI / 180.0)
                } else if let Some(v) = s.strip_suffix("rad") {
                    (v, 1.0)
                } else {
                    return Err(format!("angle `{s}` needs a `deg` or `rad` suffix"));
                };
                num.trim()
                    .parse::<f64>()
                    .map(|v| v * scale)
                    .map_err(|_| format!("cannot parse angle `{s}`"))
            }
        }
    }
}

impl Default for Angle {
    fn default() -> Self {
        Angle::Radians(0.0)
    }
}

fn default_prefix() -> String {
    "a".into()
}

/// Parametric anchor layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    /// `n` anchors at `center + d [cos φ_i, sin φ_i]`, `φ_i = φ1 + (i−1)2π/n`.
    Circle {
        n: usize,
        radius_m: f64,
        #[serde(default)]
        phi1: Angle,
        #[serde(default)]
        center_m: [f64; 2],
        #[serde(default = "default_prefix")]
        id_prefix: String,
    },
    /// Row-major lattice starting at `origin_m`.
    Grid {
        rows: usize,
        cols: usize,
        spacing_m: f64,
        #[serde(default)]
        origin_m: [f64; 2],
        #[serde(default = "default_prefix")]
        id_prefix: String,
    },
    /// Uniform in the box `[min_m, max_m]`.
    Irregular {
        n: usize,
        seed: u64,
        min_m: [f64; 2],
        max_m: [f64; 2],
        #[serde(default = "default_prefix")]
        id_prefix: String,
    },
    /// `per_cluster` anchors uniform in a disc of `radius_m` around each center.
    Clustered {
        centers_m: Vec<[f64; 2]>,
        per_cluster: usize,
        radius_m: f64,
        seed: u64,
        #[serde(default = "default_prefix")]
        id_prefix: String,
    },
}

impl TopologySpec {
    pub fn circle(n: usize, radius_m: f64, phi1: f64) -> Self {
        TopologySpec::Circle {
            n,
            radius_m,
            phi1: Angle::Radians(phi1),
            center_m: [0.0, 0.0],
            id_prefix: default_prefix(),
        }
    }

    fn validate(&self, errs: &mut Vec<ValidationError>) {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match self {
            TopologySpec::Circle { n, radius_m, phi1, .. } => {
                if *n < 1 {
                    errs.push(ValidationError::new("topology.n", "must be at least 1"));
                }
                if !pos(*radius_m) {
                    errs.push(ValidationError::new("topology.radius_m", "must be positive"));
                }
                if let Err(e) = phi1.radians() {
                    errs.push(ValidationError::new("topology.phi1", e));
                }
            }
            TopologySpec::Grid {
                rows,
                cols,
                spacing_m,
                ..
            } => {
                if rows * cols < 1 {
                    errs.push(ValidationError::new("topology", "grid must have at least one anchor"));
                }
                if !pos(*spacing_m) {
                    errs.push(ValidationError::new("topology.spacing_m", "must be positive"));
                }
            }
            TopologySpec::Irregular { n, min_m, max_m, .. } => {
                if *n < 1 {
                    errs.push(ValidationError::new("topology.n", "must be at least 1"));
                }
                if !(max_m[0] > min_m[0] && max_m[1] > min_m[1]) {
                    errs.push(ValidationError::new("topology.max_m", "box must have positive extent"));
                }
            }
            TopologySpec::Clustered {
                centers_m,
                per_cluster,
                radius_m,
                ..
            } => {
                if centers_m.is_empty() || *per_cluster < 1 {
                    errs.push(ValidationError::new("topology", "clusters must contain anchors"));
                }
                if !pos(*radius_m) {
                    errs.push(ValidationError::new("topology.radius_m", "must be positive"));
                }
            }
        }
    }
}

/// Generates anchor positions for a layout. Ids are `<prefix><i>`, 1-based.
pub fn generate_topology(spec: &TopologySpec) -> Vec<Anchor> {
    let named = |prefix: &str, pts: Vec<Point>| -> Vec<Anchor> {
        pts.into_iter()
            .enumerate()
            .map(|(i, p)| Anchor {
                id: format!("{prefix}{}", i + 1),
                position: p,
            })
            .collect()
    };
    match spec {
        TopologySpec::Circle {
            n,
            radius_m,
            phi1,
            center_m,
            id_prefix,
        } => {
            let phi1 = phi1.radians().unwrap_or(0.0);
            let pts = circle_bearings(*n, phi1)
                .into_iter()
                .map(|p| Point::new(center_m[0] + radius_m * p.cos(), center_m[1] + radius_m * p.sin()))
                .collect();
            named(id_prefix, pts)
        }
        TopologySpec::Grid {
            rows,
            cols,
            spacing_m,
            origin_m,
            id_prefix,
        } => {
            let mut pts = Vec::with_capacity(rows * cols);
            for r in 0..*rows {
                for c in 0..*cols {
                    pts.push(Point::new(
                        origin_m[0] + c as f64 * spacing_m,
                        origin_m[1] + r as f64 * spacing_m,
                    ));
                }
            }
            named(id_prefix, pts)
        }
        TopologySpec::Irregular {
            n,
            seed,
            min_m,
            max_m,
            id_prefix,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let pts = (0..*n)
                .map(|_| {
                    Point::new(
                        min_m[0] + (max_m[0] - min_m[0]) * rng.random::<f64>(),
                        min_m[1] + (max_m[1] - min_m[1]) * rng.random::<f64>(),
                    )
                })
                .collect();
            named(id_prefix, pts)
        }
        TopologySpec::Clustered {
            centers_m,
            per_cluster,
            radius_m,
            seed,
            id_prefix,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut pts = Vec::with_capacity(centers_m.len() * per_cluster);
            for c in centers_m {
                for _ in 0..*per_cluster {
                    let r = radius_m * rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * rng.random::<f64>();
                    pts.push(Point::new(c[0] + r * t.cos(), c[1] + r * t.sin()));
                }
            }
            named(id_prefix, pts)
        }
    }
}

/// Parsed scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub anchors: Vec<AnchorConfig>,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

impl ScenarioDocument {
    /// Parses the TOML text without semantic validation.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    /// Canonical TOML text. Parsing it back yields an equal document.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario documents always serialize")
    }

    /// Validates the document and builds the scenario, reporting every
    /// problem found.
    pub fn to_scenario(&self) -> std::result::Result<Scenario, Vec<ValidationError>> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(ValidationError::new(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let model: PropagationModel = self.model.clone().into();
        if let Err(e) = model.validate() {
            errs.push(ValidationError::new("model", e.to_string()));
        }
        if !(self.analysis.confidence_k > 0.0 && self.analysis.confidence_k.is_finite()) {
            errs.push(ValidationError::new("analysis.confidence_k", "must be positive"));
        }

        let mut certain = Vec::new();
        if let Some(t) = &self.topology {
            let before = errs.len();
            t.validate(&mut errs);
            if errs.len() == before {
                certain.extend(generate_topology(t));
            }
        }
        let mut uncertain = Vec::new();
        for (i, a) in self.anchors.iter().enumerate() {
            let path = |f: &str| format!("anchors[{i}] (`{}`).{f}", a.id);
            if !(a.x_m.is_finite() && a.y_m.is_finite()) {
                errs.push(ValidationError::new(path("x_m"), "coordinates must be finite"));
            }
            let position = Point::new(a.x_m, a.y_m);
            match a.kind {
                AnchorKind::Certain => {
                    if a.prior_cov.is_some() || a.delta_m.is_some() || a.prior_count.is_some() {
                        errs.push(ValidationError::new(
                            path("kind"),
                            "prior fields are only valid for uncertain anchors",
                        ));
                    }
                    certain.push(Anchor {
                        id: a.id.clone(),
                        position,
                    });
                }
                AnchorKind::Uncertain => {
                    let count = a.prior_count.unwrap_or(1);
                    if count == 0 {
                        errs.push(ValidationError::new(path("prior_count"), "must be at least 1"));
                    }
                    match prior_covariance(a) {
                        Ok(cov) => uncertain.push(UncertainAnchor {
                            id: a.id.clone(),
                            position,
                            prior_cov: cov,
                            prior_count: count,
                        }),
                        Err(msg) => errs.push(ValidationError::new(path("prior_cov"), msg)),
                    }
                }
            }
        }
        let mut sources = Vec::new();
        for (i, s) in self.sources.iter().enumerate() {
            let path = |f: &str| format!("sources[{i}] (`{}`).{f}", s.id);
            if !(s.x_m.is_finite() && s.y_m.is_finite()) {
                errs.push(ValidationError::new(path("x_m"), "coordinates must be finite"));
            }
            if s.sample_count == 0 {
                errs.push(ValidationError::new(path("sample_count"), "must be at least 1"));
            }
            sources.push(Source {
                id: s.id.clone(),
                position: Point::new(s.x_m, s.y_m),
                sample_count: s.sample_count,
                known_position: s.known_position,
            });
        }
        if sources.is_empty() {
            errs.push(ValidationError::new("sources", "at least one source is required"));
        }

        let mut seen = HashSet::new();
        let ids = certain
            .iter()
            .map(|a| a.id.as_str())
            .chain(uncertain.iter().map(|a| a.id.as_str()))
            .chain(sources.iter().map(|s| s.id.as_str()));
        for id in ids {
            if id.is_empty() || id.chars().any(|c| c == ',' || c == '"' || c.is_control()) {
                errs.push(ValidationError::new(
                    format!("id `{id}`"),
                    "ids must be non-empty without commas, quotes or control characters",
                ));
            }
            if !seen.insert(id) {
                errs.push(ValidationError::new(format!("id `{id}`"), "duplicate id"));
            }
        }
        for id in &self.analysis.outputs {
            if !seen.contains(id.as_str()) {
                errs.push(ValidationError::new("analysis.outputs", format!("unknown node id `{id}`")));
            }
        }

        if model.validate().is_ok() {
            let anchors: Vec<(&str, Point)> = certain
                .iter()
                .map(|a| (a.id.as_str(), a.position))
                .chain(uncertain.iter().map(|a| (a.id.as_str(), a.position)))
                .collect();
            for s in &sources {
                for (aid, p) in &anchors {
                    let d = s.position.distance(p);
                    if d < model.d0_m {
                        errs.push(ValidationError::new(
                            format!("sources.`{}`", s.id),
                            format!(
                                "distance to anchor `{aid}` is {d} m, below d0 = {} m (source `{}`, anchor `{aid}`)",
                                model.d0_m, s.id
                            ),
                        ));
                    }
                }
            }
        }

        if !errs.is_empty() {
            return Err(errs);
        }
        Ok(Scenario {
            model,
            certain_anchors: certain,
            uncertain_anchors: uncertain,
            sources,
        })
    }
}

fn prior_covariance(a: &AnchorConfig) -> std::result::Result<InfoMatrix2, String> {
    let from_delta = a.delta_m.map(|d| {
        if d > 0.0 && d.is_finite() {
            Ok(InfoMatrix2::scaled_identity(d * d))
        } else {
            Err("delta_m must be positive".to_string())
        }
    });
    let from_cov = a.prior_cov.map(|m| {
        let scale = m[0][0].abs().max(m[1][1].abs());
        if (m[0][1] - m[1][0]).abs() > 1e-12 * scale {
            return Err("prior_cov must be symmetric".to_string());
        }
        let k = InfoMatrix2::new(m[0][0], m[0][1], m[1][1]);
        if !(k.f11 > 0.0 && k.det() > 0.0 && k.is_finite()) {
            return Err("prior_cov must be positive definite".to_string());
        }
        Ok(k)
    });
    match (from_cov, from_delta) {
        (None, None) => Err("uncertain anchor needs prior_cov or delta_m".into()),
        (Some(c), None) => c,
        (None, Some(d)) => d,
        (Some(c), Some(d)) => {
            let (c, d) = (c?, d?);
            if (c - d).norm() > 1e-12 * c.norm() {
                Err("prior_cov and delta_m disagree".into())
            } else {
                Ok(c)
            }
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    ScenarioDocument::from_toml(text)?
        .to_scenario()
        .map_err(Error::Validation)
}

impl ScenarioDocument {
    /// Document with explicit anchors and sources for a scenario.
    pub fn from_scenario(sc: &Scenario, analysis: AnalysisConfig) -> Self {
        let anchors = sc
            .certain_anchors
            .iter()
            .map(|a| AnchorConfig {
                id: a.id.clone(),
                x_m: a.position.x,
                y_m: a.position.y,
                kind: AnchorKind::Certain,
                prior_cov: None,
                delta_m: None,
                prior_count: None,
            })
            .chain(sc.uncertain_anchors.iter().map(|a| {
                let (cov, delta) = match a.isotropic_delta() {
                    Some(d) if d * d == a.prior_cov.f11 => (None, Some(d)),
                    _ => (Some(a.prior_cov.as_array()), None),
                };
                AnchorConfig {
                    id: a.id.clone(),
                    x_m: a.position.x,
                    y_m: a.position.y,
                    kind: AnchorKind::Uncertain,
                    prior_cov: cov,
                    delta_m: delta,
                    prior_count: (a.prior_count != 1).then_some(a.prior_count),
                }
            }))
            .collect();
        let sources = sc
            .sources
            .iter()
            .map(|s| SourceConfig {
                id: s.id.clone(),
                x_m: s.position.x,
                y_m: s.position.y,
                sample_count: s.sample_count,
                known_position: s.known_position,
            })
            .collect();
        ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            model: sc.model.into(),
            topology: None,
            analysis,
            anchors,
            sources,
        }
    }
}

/// Canonical text for a scenario with explicit anchors.
pub fn serialize_scenario(sc: &Scenario) -> String {
    ScenarioDocument::from_scenario(sc, AnalysisConfig::default()).to_toml()
}

/// Numeric field that a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Coordinate of a source; `None` selects the first unknown-position source.
    SourceX(Option<String>),
    SourceY(Option<String>),
    /// Isotropic uncertainty of every uncertain anchor.
    Delta,
    /// Sample count of every source.
    SampleCount,
    TopologyN,
    TopologyRadius,
    TopologyPhi1,
    ModelGamma,
    ModelSigma,
    ModelP0,
}

impl SweepAxis {
    pub fn parse(path: &str) -> Result<Self> {
        let unknown = || Error::UnknownParameterPath(path.to_string());
        Ok(match path {
            "source.x" => SweepAxis::SourceX(None),
            "source.y" => SweepAxis::SourceY(None),
            "delta" | "delta_m" => SweepAxis::Delta,
            "sample_count" => SweepAxis::SampleCount,
            "topology.n" => SweepAxis::TopologyN,
            "topology.radius_m" => SweepAxis::TopologyRadius,
            "topology.phi1" => SweepAxis::TopologyPhi1,
            "model.gamma" => SweepAxis::ModelGamma,
            "model.sigma_db" => SweepAxis::ModelSigma,
            "model.p0_dbm" => SweepAxis::ModelP0,
            other => {
                let rest = other.strip_prefix("source.").ok_or_else(unknown)?;
                if let Some(id) = rest.strip_suffix(".x") {
                    SweepAxis::SourceX(Some(id.to_string()))
                } else if let Some(id) = rest.strip_suffix(".y") {
                    SweepAxis::SourceY(Some(id.to_string()))
                } else {
                    return Err(unknown());
                }
            }
        })
    }

    fn apply(&self, doc: &mut ScenarioDocument, value: f64, path: &str) -> Result<()> {
        let unknown = || Error::UnknownParameterPath(path.to_string());
        let source = |doc: &mut ScenarioDocument, id: &Option<String>| -> Result<usize> {
            match id {
                Some(id) => doc.sources.iter().position(|s| &s.id == id),
                None => doc.sources.iter().position(|s| !s.known_position),
            }
            .ok_or_else(unknown)
        };
        match self {
            SweepAxis::SourceX(id) => {
                let j = source(doc, id)?;
                doc.sources[j].x_m = value;
            }
            SweepAxis::SourceY(id) => {
                let j = source(doc, id)?;
                doc.sources[j].y_m = value;
            }
            SweepAxis::Delta => {
                let mut any = false;
                for a in doc.anchors.iter_mut().filter(|a| a.kind == AnchorKind::Uncertain) {
                    a.delta_m = Some(value);
                    a.prior_cov = None;
                    any = true;
                }
                if !any {
                    return Err(unknown());
                }
            }
            SweepAxis::SampleCount => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::PreconditionViolation(format!(
                        "sample_count must be a positive integer, got {value}"
                    )));
                }
                for s in &mut doc.sources {
                    s.sample_count = value as u32;
                }
            }
            SweepAxis::TopologyN | SweepAxis::TopologyRadius | SweepAxis::TopologyPhi1 => {
                let t = doc.topology.as_mut().ok_or_else(unknown)?;
                match (self, t) {
                    (SweepAxis::TopologyN, TopologySpec::Circle { n, .. })
                    | (SweepAxis::TopologyN, TopologySpec::Irregular { n, .. }) => {
                        if !(value >= 1.0 && value.fract() == 0.0) {
                            return Err(Error::PreconditionViolation(format!(
                                "topology.n must be a positive integer, got {value}"
                            )));
                        }
                        *n = value as usize;
                    }
                    (SweepAxis::TopologyRadius, TopologySpec::Circle { radius_m, .. })
                    | (SweepAxis::TopologyRadius, TopologySpec::Clustered { radius_m, .. }) => {
                        *radius_m = value;
                    }
                    (SweepAxis::TopologyPhi1, TopologySpec::Circle { phi1, .. }) => {
                        *phi1 = Angle::Radians(value);
                    }
                    _ => return Err(unknown()),
                }
            }
            SweepAxis::ModelGamma => doc.model.gamma = value,
            SweepAxis::ModelSigma => doc.model.sigma_db = value,
            SweepAxis::ModelP0 => doc.model.p0_dbm = value,
        }
        Ok(())
    }
}

/// One document per value, otherwise identical to `base`, in input order.
pub fn sweep_documents(base: &ScenarioDocument, axis: &str, values: &[f64]) -> Result<Vec<ScenarioDocument>> {
    let parsed = SweepAxis::parse(axis)?;
    // resolve the path even when there is nothing to sweep
    parsed.apply(&mut base.clone(), values.first().copied().unwrap_or(1.0), axis)?;
    values
        .iter()
        .map(|&v| {
            let mut doc = base.clone();
            parsed.apply(&mut doc, v, axis)?;
            Ok(doc)
        })
        .collect()
}

/// One validated scenario per value.
pub fn sweep_axis(base: &ScenarioDocument, axis: &str, values: &[f64]) -> Result<Vec<Scenario>> {
    sweep_documents(base, axis, values)?
        .iter()
        .map(|d| d.to_scenario().map_err(Error::Validation))
        .collect()
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Parse {
        line: 0,
        column: 0,
        message: m,
    };
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("range `{spec}` must be start:stop:step")));
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{p}`"))))
            .collect::<Result<Vec<_>>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad(format!("range `{spec}` needs step > 0 and stop >= start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{p}`"))))
        .collect()
}

/// Annotated example document describing every field.
pub const SCHEMA: &str = r#"# Scenario document (TOML, UTF-8), schema_version = 1
# Units: meters, dBm, dB; angles in radians or strings with a deg/rad suffix.

schema_version = 1

[model]
p0_dbm = 0.0      # received power at the reference distance
gamma = 3.5       # path-loss exponent, > 0
d0_m = 1.0        # reference distance, > 0; every source-anchor distance must be >= d0
sigma_db = 5.0    # shadowing standard deviation, > 0

# Optional generated layout of certain anchors (ids <id_prefix>1, <id_prefix>2, ...).
# kind = "circle"    : n, radius_m, phi1, center_m = [x, y]
# kind = "grid"      : rows, cols, spacing_m, origin_m = [x, y]   (row-major)
# kind = "irregular" : n, seed, min_m = [x, y], max_m = [x, y]
# kind = "clustered" : centers_m = [[x, y], ...], per_cluster, radius_m, seed
[topology]
kind = "circle"
n = 8
radius_m = 5.0
phi1 = "0deg"
id_prefix = "a"

[analysis]
confidence_k = 1.0   # ellipse scale k = -2 ln(1 - Pe)
outputs = []         # node ids to report; empty = every unknown-position node

# Explicit anchors. kind = "certain" | "uncertain".
# Uncertain anchors need prior_cov (m^2, symmetric positive definite) or
# delta_m (shorthand for delta^2 * I); prior_count defaults to 1.
[[anchors]]
id = "u1"
x_m = 0.0
y_m = 7.0
kind = "uncertain"
prior_cov = [[4.0, 1.5], [1.5, 3.0]]
prior_count = 1

# Sources transmit one at a time; sample_count (default 1) RSS samples per anchor.
[[sources]]
id = "s1"
x_m = 1.0
y_m = 0.5
sample_count = 1
known_position = false
"#;

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[model]
p0_dbm = 0.0
gamma = 3.5
d0_m = 1.0
sigma_db = 5.0
[[anchors]]
id = "a1"
x_m = 5.0
y_m = 0.0
kind = "certain"
[[anchors]]
id = "a2"
x_m = -2.5
y_m = 4.33
kind = "certain"
[[anchors]]
id = "a3"
x_m = -2.5
y_m = -4.33
kind = "certain"
[[sources]]
id = "s1"
x_m = 0.0
y_m = 0.0
"#;

    #[test]
    fn minimal_document() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.anchor_count(), 3);
        assert!(sc.uncertain_anchors.is_empty());
        assert_eq!(sc.sources.len(), 1);
        assert_eq!(sc.sources[0].sample_count, 1);
    }

    #[test]
    fn schema_example_parses() {
        let sc = parse_scenario(SCHEMA).unwrap();
        assert_eq!(sc.certain_anchors.len(), 8);
        assert_eq!(sc.uncertain_anchors[0].prior_cov, InfoMatrix2::new(4.0, 1.5, 3.0));
    }

    #[test]
    fn missing_prior_is_reported_by_id() {
        let text = MINIMAL.replace("id = \"a3\"\nx_m = -2.5\ny_m = -4.33\nkind = \"certain\"", "id = \"a3\"\nx_m = -2.5\ny_m = -4.33\nkind = \"uncertain\"");
        match parse_scenario(&text) {
            Err(Error::Validation(errs)) => {
                assert_eq!(errs.len(), 1);
                assert!(errs[0].path.contains("a3"), "{}", errs[0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_location() {
        match parse_scenario("schema_version = 1\n[model\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_problem_is_listed() {
        let text = MINIMAL
            .replace("gamma = 3.5", "gamma = -1.0")
            .replace("x_m = 0.0\ny_m = 0.0", "x_m = 0.0\ny_m = 0.0\nsample_count = 0")
            .replace("id = \"a2\"", "id = \"a1\"");
        match parse_scenario(&text) {
            Err(Error::Validation(errs)) => assert_eq!(errs.len(), 3, "{errs:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn close_pair_named() {
        let text = MINIMAL.replace("x_m = 0.0\ny_m = 0.0", "x_m = 4.5\ny_m = 0.0");
        match parse_scenario(&text) {
            Err(Error::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.message.contains("`s1`") && e.message.contains("`a1`")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delta_and_cov_must_agree() {
        let mut a = AnchorConfig {
            id: "u".into(),
            x_m: 0.0,
            y_m: 0.0,
            kind: AnchorKind::Uncertain,
            prior_cov: Some([[9.0, 0.0], [0.0, 9.0]]),
            delta_m: Some(3.0),
            prior_count: None,
        };
        assert_eq!(prior_covariance(&a).unwrap(), InfoMatrix2::scaled_identity(9.0));
        a.delta_m = Some(2.0);
        assert!(prior_covariance(&a).is_err());
    }

    #[test]
    fn angles_with_units() {
        assert_eq!(Angle::WithUnit("180deg".into()).radians().unwrap(), PI);
        assert_eq!(Angle::WithUnit("0.5 rad".into()).radians().unwrap(), 0.5);
        assert!(Angle::WithUnit("30".into()).radians().is_err());
    }

    #[test]
    fn circle_cardinal_points() {
        let a = generate_topology(&TopologySpec::circle(4, 5.0, 0.0));
        let expected = [(5.0, 0.0), (0.0, 5.0), (-5.0, 0.0), (0.0, -5.0)];
        for (a, (x, y)) in a.iter().zip(expected) {
            assert!((a.position.x - x).abs() < 1e-12 && (a.position.y - y).abs() < 1e-12);
        }
        assert_eq!(a[0].id, "a1");
    }

    #[test]
    fn grid_is_row_major() {
        let g = generate_topology(&TopologySpec::Grid {
            rows: 2,
            cols: 3,
            spacing_m: 2.0,
            origin_m: [1.0, 1.0],
            id_prefix: "g".into(),
        });
        assert_eq!(g.len(), 6);
        assert_eq!(g[1].position, Point::new(3.0, 1.0));
        assert_eq!(g[3].position, Point::new(1.0, 3.0));
    }

    #[test]
    fn seeded_generators_repeat() {
        let spec = TopologySpec::Irregular {
            n: 12,
            seed: 9,
            min_m: [-10.0, -10.0],
            max_m: [10.0, 10.0],
            id_prefix: "a".into(),
        };
        assert_eq!(generate_topology(&spec), generate_topology(&spec));
        let spec = TopologySpec::Clustered {
            centers_m: vec![[0.0, 0.0], [10.0, 5.0]],
            per_cluster: 4,
            radius_m: 2.0,
            seed: 3,
            id_prefix: "c".into(),
        };
        let a = generate_topology(&spec);
        assert_eq!(a, generate_topology(&spec));
        assert!(a[4..].iter().all(|p| p.position.distance(&Point::new(10.0, 5.0)) <= 2.0));
    }

    #[test]
    fn values_lists_and_ranges() {
        assert_eq!(parse_values("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        let r = parse_values("0:10:0.5").unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(*r.last().unwrap(), 10.0);
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("0:1").is_err());
    }

    #[test]
    fn sweep_source_x() {
        let doc = ScenarioDocument::from_toml(MINIMAL).unwrap();
        let values: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
        let scs = sweep_axis(&doc, "source.x", &values).unwrap();
        assert_eq!(scs.len(), 21);
        assert_eq!(scs[3].sources[0].position.x, values[3]);
        assert!(sweep_axis(&doc, "source.x", &[]).unwrap().is_empty());
        assert!(matches!(sweep_axis(&doc, "source.z", &[1.0]), Err(Error::UnknownParameterPath(_))));
        assert!(matches!(sweep_axis(&doc, "delta", &[1.0]), Err(Error::UnknownParameterPath(_))));
        assert!(matches!(sweep_axis(&doc, "topology.n", &[]), Err(Error::UnknownParameterPath(_))));
    }

    #[test]
    fn sweep_topology_n_regenerates() {
        let doc = ScenarioDocument::from_toml(SCHEMA).unwrap();
        let scs = sweep_axis(&doc, "topology.n", &[4.0, 16.0]).unwrap();
        assert_eq!(scs[0].certain_anchors.len(), 4);
        assert_eq!(scs[1].certain_anchors.len(), 16);
    }
}
