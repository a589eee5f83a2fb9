//! Analysis reports (TOML) and sweep tables (CSV).
//!
//! Floats are written with 17 significant digits so that reading a report
//! back reproduces every value exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::ellipse::{area, eccentricity, fim_to_ellipse, ie_to_ee, peb, EllipseParams, InfoMatrix2};
use crate::error::{Error, Result};
use crate::joint::{anchor_marginal_fim, source_marginal_fim, NodeRef, Scenario};
use crate::nuisance::{equivalent_fim_unknown_gamma, equivalent_fim_unknown_power};
use crate::rss::geometry_is_degenerate;

pub const REPORT_VERSION: u32 = 1;

/// Header of the sweep table.
pub const CSV_HEADER: &str = "axis,axis_value,node_id,mu,eta,alpha_rad,eccentricity,area,peb_m";

/// Formats a float with 17 significant digits, TOML-compatible.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn fmt_matrix(m: &InfoMatrix2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        fmt_f64(m.f11),
        fmt_f64(m.f12),
        fmt_f64(m.f12),
        fmt_f64(m.f22)
    )
}

/// Nuisance parameter estimated jointly with each source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nuisance {
    #[default]
    None,
    TransmitPower,
    PathLossExponent,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseEntry {
    pub mu: f64,
    pub eta: f64,
    pub alpha_rad: f64,
}

impl From<EllipseParams> for EllipseEntry {
    fn from(e: EllipseParams) -> Self {
        Self {
            mu: e.major,
            eta: e.minor,
            alpha_rad: e.angle,
        }
    }
}

impl EllipseEntry {
    pub fn params(&self) -> Result<EllipseParams> {
        EllipseParams::new(self.mu, self.eta, self.alpha_rad)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeReport {
    pub id: String,
    /// `source` or `anchor`.
    pub role: String,
    pub x_m: f64,
    pub y_m: f64,
    pub fim: [[f64; 2]; 2],
    pub ie: EllipseEntry,
    pub ee: EllipseEntry,
    pub eccentricity: f64,
    /// Area of the information ellipse.
    pub area: f64,
    pub peb_m: f64,
    /// Named 2×2 terms whose signed sum gives `fim`.
    #[serde(default)]
    pub decomposition: BTreeMap<String, [[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub p0_dbm: f64,
    pub gamma: f64,
    pub d0_m: f64,
    pub sigma_db: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorEntry {
    pub id: String,
    /// `certain` or `uncertain`.
    pub kind: String,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub id: String,
    pub x_m: f64,
    pub y_m: f64,
    pub sample_count: u32,
    pub known_position: bool,
}

/// Per-node bounds plus an echo of the analyzed network.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub report_version: u32,
    pub tool_version: String,
    pub confidence_k: f64,
    /// `none`, `transmit-power` or `path-loss-exponent`.
    pub nuisance: String,
    pub model: ModelEntry,
    #[serde(default)]
    pub anchors: Vec<AnchorEntry>,
    #[serde(default)]
    pub sources: Vec<SourceEntry>,
    #[serde(default)]
    pub nodes: Vec<NodeReport>,
    /// Diagnostics; also printed on the diagnostic stream by the CLI.
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn node_entry(
    sc: &Scenario,
    node: NodeRef,
    fim: InfoMatrix2,
    decomposition: Vec<(&str, InfoMatrix2)>,
) -> Result<NodeReport> {
    let ie = fim_to_ellipse(&fim)?;
    if ie.is_degenerate() {
        return Err(Error::SingularFim);
    }
    let ee = ie_to_ee(&ie)?;
    let p = sc.node_position(node);
    Ok(NodeReport {
        id: sc.node_id(node).to_string(),
        role: match node {
            NodeRef::Source(_) => "source",
            NodeRef::Anchor(_) => "anchor",
        }
        .into(),
        x_m: p.x,
        y_m: p.y,
        fim: fim.as_array(),
        ie: ie.into(),
        ee: ee.into(),
        eccentricity: eccentricity(&ie)?,
        area: area(&ie),
        peb_m: peb(&ie)?,
        decomposition: decomposition
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.as_array()))
            .collect(),
    })
}

/// Net FIM and decomposition of one node.
pub fn analyze_node(sc: &Scenario, node: NodeRef, nuisance: Nuisance) -> Result<NodeReport> {
    match (node, nuisance) {
        (NodeRef::Source(j), Nuisance::None) => {
            let d = source_marginal_fim(sc, j)?;
            node_entry(
                sc,
                node,
                d.net,
                vec![
                    ("pure", d.pure),
                    ("loss_anchors", d.loss_anchors),
                    ("loss_other_sources", d.loss_other_sources),
                ],
            )
        }
        (NodeRef::Source(j), _) => {
            if !sc.uncertain_anchors.is_empty() || sc.unknown_sources().len() > 1 {
                return Err(Error::PreconditionViolation(
                    "nuisance analysis needs certain anchors and a single unknown source".into(),
                ));
            }
            let anchors = sc.anchor_positions();
            let s = &sc.sources[j];
            let t = s.sample_count as f64;
            let (eq, loss) = if nuisance == Nuisance::TransmitPower {
                equivalent_fim_unknown_power(&anchors, &s.position, &sc.model)?
            } else {
                equivalent_fim_unknown_gamma(&anchors, &s.position, &sc.model)?
            };
            node_entry(
                sc,
                node,
                t * eq,
                vec![("pure", t * (eq + loss.to_fim())), ("loss_nuisance", t * loss.to_fim())],
            )
        }
        (NodeRef::Anchor(k), _) => {
            let d = anchor_marginal_fim(sc, k)?;
            node_entry(
                sc,
                node,
                d.net,
                vec![
                    ("prior", d.prior),
                    ("gain_main", d.gain_main),
                    ("loss_unknown_sources", d.loss_unknown_sources),
                    ("loss_other_anchors", d.loss_other_anchors),
                ],
            )
        }
    }
}

/// Resolves output ids; an empty list means every unknown-position node.
pub fn output_nodes(sc: &Scenario, outputs: &[String]) -> Result<Vec<NodeRef>> {
    if outputs.is_empty() {
        return Ok(sc.unknown_nodes());
    }
    outputs
        .iter()
        .map(|id| match sc.find_node(id) {
            Some(NodeRef::Source(j)) if sc.sources[j].known_position => Err(Error::PreconditionViolation(
                format!("source `{id}` has a known position"),
            )),
            Some(n) => Ok(n),
            None => Err(Error::UnknownNodeId(id.clone())),
        })
        .collect()
}

/// Degenerate-geometry and conditioning diagnostics.
pub fn warnings(sc: &Scenario, nodes: &[NodeReport]) -> Vec<String> {
    let mut out = Vec::new();
    let anchors = sc.anchor_positions();
    for s in sc.sources.iter().filter(|s| !s.known_position) {
        if geometry_is_degenerate(&anchors, &s.position) {
            out.push(format!("source `{}`: all anchors are collinear with the source", s.id));
        }
    }
    for n in nodes {
        if n.ie.eta < 1e-8 * n.ie.mu {
            out.push(format!("node `{}`: net FIM is nearly singular (eta/mu = {:e})", n.id, n.ie.eta / n.ie.mu));
        }
    }
    out
}

impl AnalysisReport {
    pub fn build(sc: &Scenario, outputs: &[String], confidence_k: f64, nuisance: Nuisance) -> Result<Self> {
        sc.validate()?;
        let nodes = output_nodes(sc, outputs)?
            .into_iter()
            .map(|n| analyze_node(sc, n, nuisance))
            .collect::<Result<Vec<_>>>()?;
        let warnings = warnings(sc, &nodes);
        Ok(Self {
            report_version: REPORT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            confidence_k,
            nuisance: match nuisance {
                Nuisance::None => "none",
                Nuisance::TransmitPower => "transmit-power",
                Nuisance::PathLossExponent => "path-loss-exponent",
            }
            .into(),
            model: ModelEntry {
                p0_dbm: sc.model.p0_dbm,
                gamma: sc.model.gamma,
                d0_m: sc.model.d0_m,
                sigma_db: sc.model.sigma_db,
            },
            anchors: sc
                .certain_anchors
                .iter()
                .map(|a| (a, "certain"))
                .map(|(a, k)| AnchorEntry {
                    id: a.id.clone(),
                    kind: k.into(),
                    x_m: a.position.x,
                    y_m: a.position.y,
                })
                .chain(sc.uncertain_anchors.iter().map(|a| AnchorEntry {
                    id: a.id.clone(),
                    kind: "uncertain".into(),
                    x_m: a.position.x,
                    y_m: a.position.y,
                }))
                .collect(),
            sources: sc
                .sources
                .iter()
                .map(|s| SourceEntry {
                    id: s.id.clone(),
                    x_m: s.position.x,
                    y_m: s.position.y,
                    sample_count: s.sample_count,
                    known_position: s.known_position,
                })
                .collect(),
            nodes,
            warnings,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| {
                let before = &text[..s.start.min(text.len())];
                (
                    before.matches('\n').count() + 1,
                    before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1,
                )
            });
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "report_version = {}", self.report_version);
        let _ = writeln!(s, "tool_version = {}", fmt_str(&self.tool_version));
        let _ = writeln!(s, "confidence_k = {}", fmt_f64(self.confidence_k));
        let _ = writeln!(s, "nuisance = {}", fmt_str(&self.nuisance));
        let _ = writeln!(
            s,
            "warnings = [{}]",
            self.warnings.iter().map(|w| fmt_str(w)).collect::<Vec<_>>().join(", ")
        );
        let m = &self.model;
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "p0_dbm = {}", fmt_f64(m.p0_dbm));
        let _ = writeln!(s, "gamma = {}", fmt_f64(m.gamma));
        let _ = writeln!(s, "d0_m = {}", fmt_f64(m.d0_m));
        let _ = writeln!(s, "sigma_db = {}", fmt_f64(m.sigma_db));
        for a in &self.anchors {
            let _ = writeln!(s, "\n[[anchors]]");
            let _ = writeln!(s, "id = {}", fmt_str(&a.id));
            let _ = writeln!(s, "kind = {}", fmt_str(&a.kind));
            let _ = writeln!(s, "x_m = {}", fmt_f64(a.x_m));
            let _ = writeln!(s, "y_m = {}", fmt_f64(a.y_m));
        }
        for src in &self.sources {
            let _ = writeln!(s, "\n[[sources]]");
            let _ = writeln!(s, "id = {}", fmt_str(&src.id));
            let _ = writeln!(s, "x_m = {}", fmt_f64(src.x_m));
            let _ = writeln!(s, "y_m = {}", fmt_f64(src.y_m));
            let _ = writeln!(s, "sample_count = {}", src.sample_count);
            let _ = writeln!(s, "known_position = {}", src.known_position);
        }
        let ell = |e: &EllipseEntry| {
            format!(
                "{{ mu = {}, eta = {}, alpha_rad = {} }}",
                fmt_f64(e.mu),
                fmt_f64(e.eta),
                fmt_f64(e.alpha_rad)
            )
        };
        for n in &self.nodes {
            let _ = writeln!(s, "\n[[nodes]]");
            let _ = writeln!(s, "id = {}", fmt_str(&n.id));
            let _ = writeln!(s, "role = {}", fmt_str(&n.role));
            let _ = writeln!(s, "x_m = {}", fmt_f64(n.x_m));
            let _ = writeln!(s, "y_m = {}", fmt_f64(n.y_m));
            let f = n.fim;
            let _ = writeln!(s, "fim = {}", fmt_matrix(&InfoMatrix2::new(f[0][0], f[0][1], f[1][1])));
            let _ = writeln!(s, "ie = {}", ell(&n.ie));
            let _ = writeln!(s, "ee = {}", ell(&n.ee));
            let _ = writeln!(s, "eccentricity = {}", fmt_f64(n.eccentricity));
            let _ = writeln!(s, "area = {}", fmt_f64(n.area));
            let _ = writeln!(s, "peb_m = {}", fmt_f64(n.peb_m));
            if !n.decomposition.is_empty() {
                let _ = writeln!(s, "\n[nodes.decomposition]");
                for (k, v) in &n.decomposition {
                    let _ = writeln!(
                        s,
                        "{k} = {}",
                        fmt_matrix(&InfoMatrix2::new(v[0][0], v[0][1], v[1][1]))
                    );
                }
            }
        }
        s
    }
}

/// One table row per (sweep point, node).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub node_id: String,
    pub ie: EllipseParams,
    pub eccentricity: f64,
    pub area: f64,
    pub peb_m: f64,
}

pub fn sweep_rows(sc: &Scenario, axis_value: f64, outputs: &[String], nuisance: Nuisance) -> Result<Vec<SweepRow>> {
    let r = AnalysisReport::build(sc, outputs, 1.0, nuisance)?;
    r.nodes
        .into_iter()
        .map(|n| {
            Ok(SweepRow {
                axis_value,
                ie: n.ie.params()?,
                node_id: n.id,
                eccentricity: n.eccentricity,
                area: n.area,
                peb_m: n.peb_m,
            })
        })
        .collect()
}

pub fn sweep_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{axis},{},{},{},{},{},{},{},{}",
            fmt_f64(r.axis_value),
            r.node_id,
            fmt_f64(r.ie.major),
            fmt_f64(r.ie.minor),
            fmt_f64(r.ie.angle),
            fmt_f64(r.eccentricity),
            fmt_f64(r.area),
            fmt_f64(r.peb_m)
        );
    }
    s
}

/// Parses a table written by [`sweep_csv`]. Returns the axis name and rows.
pub fn parse_sweep_csv(text: &str) -> Result<(String, Vec<SweepRow>)> {
    let mut lines = text.lines();
    let bad = |line: usize, m: String| Error::Parse {
        line,
        column: 1,
        message: m,
    };
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected sweep table header".into()));
    }
    let mut axis = String::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(i + 2, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].trim()
                .parse::<f64>()
                .map_err(|_| bad(i + 2, format!("bad number `{}`", f[k])))
        };
        axis = f[0].to_string();
        rows.push(SweepRow {
            axis_value: num(1)?,
            node_id: f[2].to_string(),
            ie: EllipseParams::new(num(3)?, num(4)?, num(5)?)?,
            eccentricity: num(6)?,
            area: num(7)?,
            peb_m: num(8)?,
        });
    }
    Ok((axis, rows))
}
