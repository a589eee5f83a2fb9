use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rssbound::algebra::{combine, CombineSign};
use rssbound::ellipse::{
    angle_distance, crlb_from_fim, ellipse_to_fim, error_ellipse, fim_to_ellipse, peb, EllipseParams, InfoMatrix2,
};
use rssbound::joint::{node_marginal_fim, Scenario, Source};
use rssbound::rss::{source_fim, Point, PropagationModel};
use rssbound::scenario::{parse_scenario, serialize_scenario};
use rssbound::verify::random_scenario;
use rssbound::NodeRef;

fn ellipse() -> impl Strategy<Value = EllipseParams> {
    (0.01f64..100.0, 0.0f64..1.0, -3.2f64..3.2)
        .prop_map(|(mu, r, a)| EllipseParams::new(mu, mu * r, a).unwrap())
}

fn anchors() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((3.0f64..15.0, -3.2f64..3.2), 2..12)
        .prop_map(|v| v.into_iter().map(|(r, p)| Point::new(r * p.cos(), r * p.sin())).collect())
}

fn close(a: &InfoMatrix2, b: &InfoMatrix2, tol: f64) -> bool {
    (*a - *b).norm() <= tol * a.norm().max(b.norm())
}

proptest! {
    #[test]
    fn ellipse_round_trip(e in ellipse()) {
        let back = fim_to_ellipse(&ellipse_to_fim(&e)).unwrap();
        prop_assert!((back.major - e.major).abs() <= 1e-12 * e.major);
        prop_assert!((back.minor - e.minor).abs() <= 1e-12 * e.major);
        if e.major - e.minor > 1e-6 * e.major {
            prop_assert!(angle_distance(back.angle, e.angle) * (e.major - e.minor) <= 1e-10 * e.major);
        }
    }

    #[test]
    fn error_ellipse_is_crlb_ellipse(e in ellipse()) {
        prop_assume!(e.minor > 1e-3 * e.major);
        let f = ellipse_to_fim(&e);
        let ee = error_ellipse(&f).unwrap();
        prop_assert!(close(&ellipse_to_fim(&ee), &crlb_from_fim(&f).unwrap(), 1e-10));
        let p = peb(&fim_to_ellipse(&f).unwrap()).unwrap();
        let c = crlb_from_fim(&f).unwrap();
        prop_assert!((p - c.trace().sqrt()).abs() <= 1e-10 * p);
    }

    #[test]
    fn addition_commutes(a in ellipse(), b in ellipse()) {
        let ab = combine(&a, &b, CombineSign::Add).unwrap();
        let ba = combine(&b, &a, CombineSign::Add).unwrap();
        prop_assert!(close(&ellipse_to_fim(&ab), &ellipse_to_fim(&ba), 1e-12));
    }

    #[test]
    fn rotation_turns_the_ellipse(anchors in anchors(), beta in -3.2f64..3.2) {
        let m = PropagationModel::INDOOR;
        let o = Point::new(0.0, 0.0);
        let f = source_fim(&anchors, &o, &m).unwrap();
        let turned: Vec<Point> = anchors.iter().map(|a| a.rotated_about(&o, beta)).collect();
        let g = source_fim(&turned, &o, &m).unwrap();
        let (e, r) = (fim_to_ellipse(&f).unwrap(), fim_to_ellipse(&g).unwrap());
        prop_assert!((e.major - r.major).abs() <= 1e-10 * e.major);
        prop_assert!((e.minor - r.minor).abs() <= 1e-10 * e.major);
        if e.major - e.minor > 1e-6 * e.major {
            prop_assert!(angle_distance(r.angle, e.angle + beta) * (e.major - e.minor) <= 1e-9 * e.major);
        }
    }

    #[test]
    fn shadowing_scales_information(anchors in anchors(), c in 0.2f64..5.0) {
        let m = PropagationModel::INDOOR;
        let noisy = PropagationModel { sigma_db: m.sigma_db * c, ..m };
        let o = Point::new(0.5, -0.3);
        let f = source_fim(&anchors, &o, &m).unwrap();
        let g = source_fim(&anchors, &o, &noisy).unwrap();
        prop_assert!(close(&((c * c) * g), &f, 1e-12));
    }

    #[test]
    fn extra_anchor_adds_information(mut anchors in anchors(), r in 3.0f64..15.0, p in -3.2f64..3.2) {
        let m = PropagationModel::INDOOR;
        let o = Point::new(0.0, 0.0);
        let f = source_fim(&anchors, &o, &m).unwrap();
        anchors.push(Point::new(r * p.cos(), r * p.sin()));
        let g = source_fim(&anchors, &o, &m).unwrap();
        prop_assert!((g - f).min_eigenvalue() >= -1e-12 * g.norm());
    }

    #[test]
    fn scenario_text_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_scenario(&mut rng, 3, 4, 12);
        let back = parse_scenario(&serialize_scenario(&sc)).unwrap();
        prop_assert_eq!(back, sc);
    }

    #[test]
    fn more_samples_never_hurt(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_scenario(&mut rng, 3, 4, 12);
        let node = NodeRef::Source(sc.unknown_sources()[0]);
        let before = node_marginal_fim(&sc, node).unwrap();
        let mut more = sc.clone();
        for s in &mut more.sources {
            s.sample_count += 1;
        }
        let after = node_marginal_fim(&more, node).unwrap();
        prop_assert!((after - before).min_eigenvalue() >= -1e-10 * after.norm());
    }
}

#[test]
fn known_calibration_source_helps_anchor() {
    let sc = Scenario {
        model: PropagationModel::INDOOR,
        certain_anchors: vec![
            rssbound::Anchor::new("a1", -4.0, 0.0),
            rssbound::Anchor::new("a2", 0.0, 5.0),
        ],
        uncertain_anchors: vec![rssbound::UncertainAnchor::isotropic("u", 4.0, 1.0, 2.0)],
        sources: vec![Source::unknown("s", 0.0, 0.0, 1)],
    };
    let alone = node_marginal_fim(&sc, NodeRef::Anchor(0)).unwrap();
    let mut with = sc.clone();
    with.sources.push(Source::known("k", 6.0, -2.0, 4));
    let helped = node_marginal_fim(&with, NodeRef::Anchor(0)).unwrap();
    assert!((helped - alone).min_eigenvalue() >= 0.0);
    assert!(helped.trace() > alone.trace());
}
