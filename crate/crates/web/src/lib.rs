//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; failures become JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rssbound::algebra::{combine, combined_peb, CombineSign};
use rssbound::ellipse::{area, eccentricity, peb, EllipseParams};
use rssbound::joint::{Anchor, Scenario, Source, UncertainAnchor};
use rssbound::report::{AnalysisReport, Nuisance};
use rssbound::rss::circle_bearings;
use rssbound::svg::{render_report, EllipseSelection};
use rssbound::PropagationModel;

#[derive(Serialize)]
struct Metrics {
    mu: f64,
    eta: f64,
    alpha_rad: f64,
    eccentricity: f64,
    area: f64,
    peb_m: f64,
}

impl Metrics {
    fn of(e: &EllipseParams) -> Result<Self, String> {
        Ok(Self {
            mu: e.major,
            eta: e.minor,
            alpha_rad: e.angle,
            eccentricity: eccentricity(e).map_err(|e| e.to_string())?,
            area: area(e),
            peb_m: peb(e).map_err(|e| e.to_string())?,
        })
    }
}

#[derive(Serialize)]
struct Plot {
    svg: String,
    source: Metrics,
    /// Information the source would have with every anchor certain.
    pure: Option<Metrics>,
}

fn circle(n: usize, d: f64, phi1: f64) -> Vec<Anchor> {
    circle_bearings(n, phi1)
        .into_iter()
        .enumerate()
        .map(|(i, p)| Anchor::new(format!("a{}", i + 1), d * p.cos(), d * p.sin()))
        .collect()
}

fn plot(sc: &Scenario, k: f64) -> Result<Plot, String> {
    let report = AnalysisReport::build(sc, &[], k, Nuisance::None).map_err(|e| e.to_string())?;
    let svg = render_report(&report, k, &["s".into()], EllipseSelection::default()).map_err(|e| e.to_string())?;
    let node = &report.nodes[0];
    let net = node.ie.params().map_err(|e| e.to_string())?;
    let pure = node.decomposition.get("pure").map(|m| {
        let f = rssbound::InfoMatrix2::new(m[0][0], m[0][1], m[1][1]);
        rssbound::ellipse::fim_to_ellipse(&f).map_err(|e| e.to_string()).and_then(|e| Metrics::of(&e))
    });
    Ok(Plot {
        svg,
        source: Metrics::of(&net)?,
        pure: pure.transpose()?,
    })
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

fn circle_geometry_impl(n: usize, d: f64, phi1: f64, x: f64, y: f64, k: f64) -> Result<Plot, String> {
    let sc = Scenario {
        model: PropagationModel::INDOOR,
        certain_anchors: circle(n, d, phi1),
        uncertain_anchors: vec![],
        sources: vec![Source::unknown("s", x, y, 1)],
    };
    plot(&sc, k)
}

/// `n` anchors on a circle of radius `d`; source at `(x, y)`.
#[wasm_bindgen]
pub fn circle_geometry(n: usize, d: f64, phi1: f64, x: f64, y: f64, k: f64) -> Result<String, JsValue> {
    json(circle_geometry_impl(n, d, phi1, x, y, k))
}

#[derive(Serialize)]
struct Combined {
    mu: f64,
    eta: f64,
    alpha_rad: f64,
    peb_m: Option<f64>,
}

fn combine_impl(e1: [f64; 3], e2: [f64; 3], subtract: bool) -> Result<Combined, String> {
    let a = EllipseParams::new(e1[0], e1[1], e1[2]).map_err(|e| e.to_string())?;
    let b = EllipseParams::new(e2[0], e2[1], e2[2]).map_err(|e| e.to_string())?;
    let sign = if subtract { CombineSign::Subtract } else { CombineSign::Add };
    let c = combine(&a, &b, sign).map_err(|e| e.to_string())?;
    Ok(Combined {
        mu: c.major,
        eta: c.minor,
        alpha_rad: c.angle,
        peb_m: combined_peb(&a, &b, sign).ok(),
    })
}

/// Sum or difference of two information ellipses given as `(μ, η, α)`.
#[wasm_bindgen]
pub fn combine_ellipses(
    mu1: f64,
    eta1: f64,
    alpha1: f64,
    mu2: f64,
    eta2: f64,
    alpha2: f64,
    subtract: bool,
) -> Result<String, JsValue> {
    json(combine_impl([mu1, eta1, alpha1], [mu2, eta2, alpha2], subtract))
}

fn uncertainty_impl(n: usize, uncertain: usize, delta: f64, x: f64, k: f64) -> Result<Plot, String> {
    if uncertain > n {
        return Err("more uncertain anchors than anchors".into());
    }
    let mut certain = Vec::new();
    let mut unc = Vec::new();
    for (i, a) in circle(n, 5.0, 0.0).into_iter().enumerate() {
        if i < uncertain {
            unc.push(UncertainAnchor::isotropic(a.id, a.position.x, a.position.y, delta));
        } else {
            certain.push(a);
        }
    }
    let sc = Scenario {
        model: PropagationModel::INDOOR,
        certain_anchors: certain,
        uncertain_anchors: unc,
        sources: vec![Source::unknown("s", x, 0.0, 1)],
    };
    plot(&sc, k)
}

/// Circle of `n` anchors (radius 5 m, first anchor on the x-axis). The first
/// `uncertain` anchors counterclockwise carry isotropic position uncertainty
/// `delta`; source at `(x, 0)`.
#[wasm_bindgen]
pub fn anchor_uncertainty(n: usize, uncertain: usize, delta: f64, x: f64, k: f64) -> Result<String, JsValue> {
    json(uncertainty_impl(n, uncertain, delta, x, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_of_circle_is_isotropic() {
        let p = circle_geometry_impl(8, 5.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert!((p.source.mu - p.source.eta).abs() < 1e-12 * p.source.mu);
        assert!(p.svg.starts_with("<svg"));
    }

    #[test]
    fn combine_adds_aligned_ellipses() {
        let c = combine_impl([3.0, 1.0, 0.2], [1.0, 0.5, 0.2], false).unwrap();
        assert!((c.mu - 4.0).abs() < 1e-12 && (c.eta - 1.5).abs() < 1e-12);
        assert!(combine_impl([1.0, 0.5, 0.0], [2.0, 0.1, 0.0], true).is_err());
    }

    #[test]
    fn uncertainty_shrinks_information() {
        let a = uncertainty_impl(64, 16, 0.5, 2.0, 1.0).unwrap();
        let b = uncertainty_impl(64, 16, 3.0, 2.0, 1.0).unwrap();
        assert!(b.source.area < a.source.area);
        let pure = a.pure.unwrap();
        assert!(a.source.area < pure.area);
    }
}
