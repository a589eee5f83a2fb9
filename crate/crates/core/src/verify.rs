//! Verification suites with machine-readable results.
//!
//! Each check records the measured value, its tolerance and whether it is
//! hard (fails the run) or informational.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ellipse::{rotation, ConfidenceScale, InfoMatrix2};
use crate::error::{Error, Result};
use crate::joint::{assemble_block_fim, node_marginal_fim, Anchor, NodeRef, Scenario, Source, UncertainAnchor};
use crate::montecarlo::{compare_with_crlb, empirical_fim, gradient_check, ml_monte_carlo, Coverage};
use crate::report::fmt_f64;
use crate::rss::{Point, PropagationModel};

pub const GRADIENT_TOL: f64 = 1e-5;
pub const GRADIENT_POINTS: usize = 100;
pub const SCHUR_TOL: f64 = 1e-8;
/// Empirical-FIM tolerance at 10⁵ trials; scaled by `√(10⁵/trials)` below.
pub const EMPIRICAL_FIM_TOL: f64 = 0.03;
/// Samples per link from which the scenario counts as asymptotic.
pub const ASYMPTOTIC_SAMPLES: u32 = 50;
/// Ellipse scale of the coverage check, `P_e = 1 − e⁻²`.
pub const COVERAGE_K: f64 = 4.0;
/// Standard deviation of the estimator's initial perturbation, m.
pub const INIT_SD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    GradientCheck,
    EmpiricalFim,
    CrlbCoverage,
    SchurOracle,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gradient-check" => Self::GradientCheck,
            "empirical-fim" => Self::EmpiricalFim,
            "crlb-coverage" => Self::CrlbCoverage,
            "schur-oracle" => Self::SchurOracle,
            "all" => Self::All,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GradientCheck => "gradient-check",
            Self::EmpiricalFim => "empirical-fim",
            Self::CrlbCoverage => "crlb-coverage",
            Self::SchurOracle => "schur-oracle",
            Self::All => "all",
        }
    }

    /// Trial count used when none is given.
    pub fn default_trials(self) -> usize {
        match self {
            Self::GradientCheck => GRADIENT_POINTS,
            Self::EmpiricalFim => 100_000,
            Self::CrlbCoverage => 2000,
            Self::SchurOracle => 100,
            Self::All => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// Hard checks decide the overall verdict.
    pub hard: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub suite: Suite,
    pub seed: u64,
    /// `None` when each suite used its default.
    pub trials: Option<usize>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.hard)
    }

    pub fn to_toml(&self) -> String {
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let mut s = String::new();
        let _ = writeln!(s, "suite = {}", q(self.suite.name()));
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(t) = self.trials {
            let _ = writeln!(s, "trials = {t}");
        }
        let _ = writeln!(s, "passed = {}", self.passed());
        for c in &self.checks {
            let _ = writeln!(s, "\n[[checks]]");
            let _ = writeln!(s, "suite = {}", q(c.suite));
            let _ = writeln!(s, "name = {}", q(&c.name));
            let _ = writeln!(s, "passed = {}", c.passed);
            let _ = writeln!(s, "hard = {}", c.hard);
            let _ = writeln!(s, "measured = {}", fmt_f64(c.measured));
            let _ = writeln!(s, "tolerance = {}", fmt_f64(c.tolerance));
            let _ = writeln!(s, "detail = {}", q(&c.detail));
        }
        s
    }
}

/// Random valid scenario: every source–anchor distance is at least `2 d0`,
/// at least one source has an unknown position.
pub fn random_scenario<R: Rng>(rng: &mut R, max_sources: usize, max_uncertain: usize, max_anchors: usize) -> Scenario {
    let model = PropagationModel {
        p0_dbm: rng.random_range(-40.0..0.0),
        gamma: rng.random_range(2.0..5.0),
        d0_m: 1.0,
        sigma_db: rng.random_range(2.0..8.0),
    };
    let s = rng.random_range(1..=max_sources.max(1));
    let u = rng.random_range(0..=max_uncertain.min(max_anchors));
    let n = rng.random_range(u.max(3).min(max_anchors)..=max_anchors.max(3));
    let point = |rng: &mut R| Point::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let mut sources: Vec<Point> = Vec::new();
    let mut anchors: Vec<Point> = Vec::new();
    while sources.len() < s {
        sources.push(point(rng));
    }
    while anchors.len() < n {
        let p = point(rng);
        if sources.iter().all(|q| q.distance(&p) >= 2.0 * model.d0_m) {
            anchors.push(p);
        }
    }
    let certain = anchors[..n - u]
        .iter()
        .enumerate()
        .map(|(i, p)| Anchor::new(format!("a{}", i + 1), p.x, p.y))
        .collect();
    let uncertain = anchors[n - u..]
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let l1: f64 = rng.random_range(0.3..3.0);
            let l2: f64 = rng.random_range(0.3..3.0);
            let cov = InfoMatrix2::diagonal(l1 * l1, l2 * l2).congruence(rotation(rng.random_range(0.0..3.2)));
            UncertainAnchor {
                id: format!("u{}", i + 1),
                position: *p,
                prior_cov: cov,
                prior_count: rng.random_range(1..=3),
            }
        })
        .collect();
    let first_unknown = rng.random_range(0..s);
    let sources = sources
        .iter()
        .enumerate()
        .map(|(j, p)| Source {
            id: format!("s{}", j + 1),
            position: *p,
            sample_count: rng.random_range(1..=5),
            known_position: j != first_unknown && rng.random_bool(0.3),
        })
        .collect();
    Scenario {
        model,
        certain_anchors: certain,
        uncertain_anchors: uncertain,
        sources,
    }
}

/// Marginal FIM of one node by inverting the full joint FIM.
pub fn full_inverse_marginal(sc: &Scenario, node: NodeRef) -> Result<InfoMatrix2> {
    let fim = assemble_block_fim(sc)?;
    let off = fim
        .offset(node)
        .ok_or_else(|| Error::UnknownNodeId(sc.node_id(node).to_string()))?;
    let inv: DMatrix<f64> = fim.matrix.clone().try_inverse().ok_or(Error::SingularFim)?;
    let c = InfoMatrix2::new(inv[(off, off)], inv[(off, off + 1)], inv[(off + 1, off + 1)]);
    c.inverse().ok_or(Error::SingularFim)
}

/// Largest relative Frobenius gap between block elimination and the
/// full-inverse oracle over the scenario's unknown nodes.
pub fn schur_gap(sc: &Scenario) -> Result<f64> {
    let mut worst = 0.0f64;
    for node in sc.unknown_nodes() {
        let a = node_marginal_fim(sc, node)?;
        let b = full_inverse_marginal(sc, node)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    Ok(worst)
}

fn suite_gradient(sc: &Scenario, points: usize, seed: u64) -> Result<Vec<Check>> {
    let g = gradient_check(sc, points, seed)?;
    Ok(vec![Check {
        suite: "gradient-check",
        name: format!("analytic score vs central differences at {points} points"),
        passed: g.max_relative_error < GRADIENT_TOL,
        hard: true,
        measured: g.max_relative_error,
        tolerance: GRADIENT_TOL,
        detail: "max relative component error".into(),
    }])
}

fn suite_empirical(sc: &Scenario, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let e = empirical_fim(sc, trials, seed)?;
    let tol = EMPIRICAL_FIM_TOL * (100_000.0 / trials.max(1) as f64).sqrt().max(1.0);
    Ok(vec![Check {
        suite: "empirical-fim",
        name: format!("score outer product over {trials} trials vs analytic FIM"),
        passed: e.relative_frobenius < tol,
        hard: true,
        measured: e.relative_frobenius,
        tolerance: tol,
        detail: "relative Frobenius distance".into(),
    }])
}

fn suite_coverage(sc: &Scenario, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let asymptotic = sc.sources.iter().all(|s| s.sample_count >= ASYMPTOTIC_SAMPLES);
    let note = if asymptotic { "" } else { " (non-asymptotic, informational)" };
    let mc = ml_monte_carlo(sc, trials, seed, INIT_SD)?;
    let cmp = compare_with_crlb(sc, &mc)?;
    let conf = ConfidenceScale::from_k(COVERAGE_K)?;
    let fim = assemble_block_fim(sc)?;
    let mut checks = vec![
        Check {
            suite: "crlb-coverage",
            name: "trace of estimator covariance vs trace of CRLB".into(),
            passed: (cmp.trace_ratio - 1.0).abs() <= 0.1,
            hard: asymptotic,
            measured: cmp.trace_ratio,
            tolerance: 0.1,
            detail: format!("ratio, |ratio - 1| <= tolerance; {} converged, {} failed{note}", cmp.converged, cmp.failed),
        },
        Check {
            suite: "crlb-coverage",
            name: "covariance minus CRLB is PSD within 3 MC standard errors".into(),
            passed: cmp.min_eigenvalue >= -3.0 * cmp.standard_error,
            hard: asymptotic,
            measured: cmp.min_eigenvalue,
            tolerance: -3.0 * cmp.standard_error,
            detail: format!("smallest eigenvalue, must be >= tolerance{note}"),
        },
    ];
    for node in sc.unknown_nodes() {
        let off = fim.offset(node).expect("unknown node has a block");
        let net = node_marginal_fim(sc, node)?;
        let n = mc.estimates.len() as f64;
        let inside = mc
            .estimates
            .iter()
            .filter(|e| net.quad_form([e[off] - mc.truth[off], e[off + 1] - mc.truth[off + 1]]) <= conf.k)
            .count();
        let cov = Coverage {
            fraction: inside as f64 / n,
            target: conf.p_e,
            standard_error: (conf.p_e * (1.0 - conf.p_e) / n).sqrt(),
            converged: mc.estimates.len(),
            failed: mc.failed,
        };
        checks.push(Check {
            suite: "crlb-coverage",
            name: format!("coverage of `{}` error ellipse at k = {COVERAGE_K}", sc.node_id(node)),
            passed: cov.within(3.0),
            hard: asymptotic,
            measured: cov.fraction,
            tolerance: 3.0 * cov.standard_error,
            detail: format!("target {}, |fraction - target| <= tolerance{note}", fmt_f64(cov.target)),
        });
    }
    Ok(checks)
}

fn suite_schur(sc: &Scenario, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let own = schur_gap(sc)?;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let r = random_scenario(&mut rng, 4, 8, 32);
        worst = worst.max(schur_gap(&r)?);
    }
    Ok(vec![
        Check {
            suite: "schur-oracle",
            name: "block elimination vs full inverse on the scenario".into(),
            passed: own < SCHUR_TOL,
            hard: true,
            measured: own,
            tolerance: SCHUR_TOL,
            detail: "max relative Frobenius error over unknown nodes".into(),
        },
        Check {
            suite: "schur-oracle",
            name: format!("block elimination vs full inverse on {trials} random scenarios"),
            passed: worst < SCHUR_TOL,
            hard: true,
            measured: worst,
            tolerance: SCHUR_TOL,
            detail: "max relative Frobenius error over unknown nodes".into(),
        },
    ])
}

/// Runs a suite. `trials` overrides each suite's default trial count.
pub fn run_suite(sc: &Scenario, suite: Suite, trials: Option<usize>, seed: u64) -> Result<VerificationReport> {
    if trials == Some(0) {
        return Err(Error::PreconditionViolation("trials must be positive".into()));
    }
    let pick = |s: Suite| trials.unwrap_or(s.default_trials());
    let mut checks = Vec::new();
    let run = |s: Suite, checks: &mut Vec<Check>| -> Result<()> {
        checks.extend(match s {
            Suite::GradientCheck => suite_gradient(sc, pick(s), seed)?,
            Suite::EmpiricalFim => suite_empirical(sc, pick(s), seed)?,
            Suite::CrlbCoverage => suite_coverage(sc, pick(s), seed)?,
            Suite::SchurOracle => suite_schur(sc, pick(s), seed)?,
            Suite::All => unreachable!(),
        });
        Ok(())
    };
    if suite == Suite::All {
        for s in [Suite::GradientCheck, Suite::SchurOracle, Suite::EmpiricalFim, Suite::CrlbCoverage] {
            run(s, &mut checks)?;
        }
    } else {
        run(suite, &mut checks)?;
    }
    Ok(VerificationReport {
        suite,
        seed,
        trials,
        checks,
    })
}
