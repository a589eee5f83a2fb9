//! Monte Carlo oracles: observation simulation, a maximum-likelihood
//! estimator, empirical FIMs from scores, and CRLB coverage.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), and aggregates are summed in fixed-size chunks combined
//! pairwise, so results do not depend on the number of worker threads.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ellipse::{ConfidenceScale, InfoMatrix2};
use crate::error::{Error, Result};
use crate::joint::{assemble_block_fim, node_marginal_fim, BlockFim, NodeRef, Scenario};
use crate::rss::{Point, PropagationModel};

/// Trials per aggregation chunk.
pub const CHUNK: usize = 1024;

/// Fraction of non-converged trials above which coverage is refused.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// One realization of every measurement in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDraw {
    /// RSS in dBm, indexed `[source][anchor][sample]`, anchors certain first.
    pub rss: Vec<Vec<Vec<f64>>>,
    /// Prior position estimates per uncertain anchor, `a_k` each.
    pub prior_estimates: Vec<Vec<[f64; 2]>>,
    pub rng_seed: u64,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Lower Cholesky factor of a 2×2 PD matrix.
fn chol2(k: &InfoMatrix2) -> [[f64; 2]; 2] {
    let l11 = k.f11.sqrt();
    let l21 = k.f12 / l11;
    let l22 = (k.f22 - l21 * l21).max(0.0).sqrt();
    [[l11, 0.0], [l21, l22]]
}

/// Per-source, per-anchor RSS samples and the drawn anchor positions.
type Draw = (Vec<Vec<Vec<f64>>>, Vec<Vec<[f64; 2]>>);

fn draw(sc: &Scenario, rng: &mut ChaCha8Rng) -> Draw {
    let anchors = sc.anchor_positions();
    let sigma = sc.model.sigma_db;
    let rss = sc
        .sources
        .iter()
        .map(|s| {
            anchors
                .iter()
                .map(|a| {
                    let mean = sc.model.mean_rss_unchecked(s.position.distance(a));
                    (0..s.sample_count).map(|_| mean + sigma * normal(rng)).collect()
                })
                .collect()
        })
        .collect();
    let priors = sc
        .uncertain_anchors
        .iter()
        .map(|a| {
            let l = chol2(&a.prior_cov);
            (0..a.prior_count)
                .map(|_| {
                    let z = [normal(rng), normal(rng)];
                    [
                        a.position.x + l[0][0] * z[0],
                        a.position.y + l[1][0] * z[0] + l[1][1] * z[1],
                    ]
                })
                .collect()
        })
        .collect();
    (rss, priors)
}

/// Draws observations for trial 0 of `seed`.
pub fn simulate(sc: &Scenario, seed: u64) -> Result<ObservationDraw> {
    simulate_trial(sc, seed, 0)
}

/// Draws observations from the stream of one trial.
pub fn simulate_trial(sc: &Scenario, seed: u64, trial: u64) -> Result<ObservationDraw> {
    sc.validate()?;
    let mut rng = trial_rng(seed, trial);
    let (rss, prior_estimates) = draw(sc, &mut rng);
    Ok(ObservationDraw {
        rss,
        prior_estimates,
        rng_seed: seed,
    })
}

/// Parameter vector at the true positions: unknown sources, then uncertain
/// anchors, two coordinates each.
pub fn true_parameters(sc: &Scenario) -> Vec<f64> {
    sc.unknown_nodes()
        .into_iter()
        .flat_map(|n| {
            let p = sc.node_position(n);
            [p.x, p.y]
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Pos {
    Fixed(Point),
    Param(usize),
}

impl Pos {
    fn at(self, theta: &[f64]) -> Point {
        match self {
            Pos::Fixed(p) => p,
            Pos::Param(i) => Point::new(theta[i], theta[i + 1]),
        }
    }

    fn offset(self) -> Option<usize> {
        match self {
            Pos::Fixed(_) => None,
            Pos::Param(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone)]
struct Link {
    source: Pos,
    anchor: Pos,
    t: f64,
    mean: f64,
    /// Within-link sum of squared deviations from the mean.
    ssw: f64,
}

#[derive(Debug, Clone)]
struct PriorTerm {
    offset: usize,
    a: f64,
    info: InfoMatrix2,
    mean: [f64; 2],
    ssw: f64,
}

/// Negative log-likelihood of the positions given one observation draw,
/// up to an additive constant, held as sufficient statistics.
#[derive(Debug, Clone)]
pub struct Likelihood {
    model: PropagationModel,
    links: Vec<Link>,
    priors: Vec<PriorTerm>,
    dim: usize,
}

fn mean_and_ssw(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum())
}

impl Likelihood {
    pub fn new(sc: &Scenario, obs: &ObservationDraw) -> Result<Self> {
        let n = sc.anchor_count();
        let u = sc.uncertain_anchors.len();
        if obs.rss.len() != sc.sources.len()
            || obs.rss.iter().zip(&sc.sources).any(|(r, s)| {
                r.len() != n || r.iter().any(|x| x.len() != s.sample_count as usize)
            })
            || obs.prior_estimates.len() != u
            || obs
                .prior_estimates
                .iter()
                .zip(&sc.uncertain_anchors)
                .any(|(p, a)| p.len() != a.prior_count as usize)
        {
            return Err(Error::PreconditionViolation(
                "observation shape does not match the scenario".into(),
            ));
        }
        let unknown = sc.unknown_sources();
        let source_pos: Vec<Pos> = sc
            .sources
            .iter()
            .enumerate()
            .map(|(j, s)| match unknown.iter().position(|&i| i == j) {
                Some(i) => Pos::Param(2 * i),
                None => Pos::Fixed(s.position),
            })
            .collect();
        let s2 = 2 * unknown.len();
        let anchor_pos: Vec<Pos> = sc
            .certain_anchors
            .iter()
            .map(|a| Pos::Fixed(a.position))
            .chain((0..u).map(|k| Pos::Param(s2 + 2 * k)))
            .collect();

        let mut links = Vec::with_capacity(sc.sources.len() * n);
        for (j, per_anchor) in obs.rss.iter().enumerate() {
            for (k, xs) in per_anchor.iter().enumerate() {
                let (mean, ssw) = mean_and_ssw(xs);
                links.push(Link {
                    source: source_pos[j],
                    anchor: anchor_pos[k],
                    t: xs.len() as f64,
                    mean,
                    ssw,
                });
            }
        }
        let mut priors = Vec::with_capacity(u);
        for (k, (a, draws)) in sc.uncertain_anchors.iter().zip(&obs.prior_estimates).enumerate() {
            let info = a.prior_cov.inverse().ok_or_else(|| {
                Error::PreconditionViolation(format!("prior covariance of `{}` is not invertible", a.id))
            })?;
            let m = draws.len() as f64;
            let mean = [
                draws.iter().map(|d| d[0]).sum::<f64>() / m,
                draws.iter().map(|d| d[1]).sum::<f64>() / m,
            ];
            let ssw = draws
                .iter()
                .map(|d| info.quad_form([d[0] - mean[0], d[1] - mean[1]]))
                .sum();
            priors.push(PriorTerm {
                offset: s2 + 2 * k,
                a: m,
                info,
                mean,
                ssw,
            });
        }
        Ok(Self {
            model: sc.model,
            links,
            priors,
            dim: s2 + 2 * u,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let s2 = self.model.sigma_db * self.model.sigma_db;
        let mut f = 0.0;
        for l in &self.links {
            let d = l.source.at(theta).distance(&l.anchor.at(theta));
            if !(d > 0.0) {
                return f64::INFINITY;
            }
            let e = l.mean - self.model.mean_rss_unchecked(d);
            f += (l.ssw + l.t * e * e) / (2.0 * s2);
        }
        for p in &self.priors {
            let r = [p.mean[0] - theta[p.offset], p.mean[1] - theta[p.offset + 1]];
            f += 0.5 * (p.ssw + p.a * p.info.quad_form(r));
        }
        f
    }

    /// Gradient of [`Likelihood::objective`]; the score is its negation.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let s2 = self.model.sigma_db * self.model.sigma_db;
        let mut g = vec![0.0; self.dim];
        for l in &self.links {
            let (ps, pa) = (l.source.at(theta), l.anchor.at(theta));
            let d = ps.distance(&pa);
            let e = l.mean - self.model.mean_rss_unchecked(d);
            let w = l.t * e * self.model.slope(d) / (s2 * d);
            let v = [w * (ps.x - pa.x), w * (ps.y - pa.y)];
            if let Some(i) = l.source.offset() {
                g[i] += v[0];
                g[i + 1] += v[1];
            }
            if let Some(i) = l.anchor.offset() {
                g[i] -= v[0];
                g[i + 1] -= v[1];
            }
        }
        for p in &self.priors {
            let r = [p.mean[0] - theta[p.offset], p.mean[1] - theta[p.offset + 1]];
            let h = p.info.mul_vec(r);
            g[p.offset] -= p.a * h[0];
            g[p.offset + 1] -= p.a * h[1];
        }
        g
    }

    pub fn score(&self, theta: &[f64]) -> Vec<f64> {
        self.gradient(theta).into_iter().map(|x| -x).collect()
    }

    /// Expected information at `theta` (the Gauss-Newton matrix).
    pub fn fisher(&self, theta: &[f64]) -> DMatrix<f64> {
        let s2 = self.model.sigma_db * self.model.sigma_db;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for l in &self.links {
            let (ps, pa) = (l.source.at(theta), l.anchor.at(theta));
            let d = ps.distance(&pa);
            let c = self.model.slope(d) / d;
            let u = [c * (ps.x - pa.x), c * (ps.y - pa.y)];
            let w = l.t / s2;
            let mut idx: Vec<(usize, f64)> = Vec::with_capacity(4);
            if let Some(i) = l.source.offset() {
                idx.push((i, u[0]));
                idx.push((i + 1, u[1]));
            }
            if let Some(i) = l.anchor.offset() {
                idx.push((i, -u[0]));
                idx.push((i + 1, -u[1]));
            }
            for &(a, va) in &idx {
                for &(b, vb) in &idx {
                    h[(a, b)] += w * va * vb;
                }
            }
        }
        for p in &self.priors {
            let i = p.offset;
            h[(i, i)] += p.a * p.info.f11;
            h[(i, i + 1)] += p.a * p.info.f12;
            h[(i + 1, i)] += p.a * p.info.f12;
            h[(i + 1, i + 1)] += p.a * p.info.f22;
        }
        h
    }
}

/// Result of one maximum-likelihood run.
#[derive(Debug, Clone, PartialEq)]
pub struct MlEstimate {
    pub theta_hat: Vec<f64>,
    pub converged: bool,
    /// Final negative log-likelihood (up to a constant).
    pub objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlSettings {
    pub max_iters: usize,
    /// Converged when `‖∇‖ < tol · (1 + |objective|)`.
    pub tol: f64,
}

impl Default for MlSettings {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes the negative log-likelihood from `init` by damped Gauss-Newton
/// steps with backtracking. Non-convergence is reported, not raised.
pub fn ml_estimate(sc: &Scenario, obs: &ObservationDraw, init: &[f64]) -> Result<MlEstimate> {
    let lik = Likelihood::new(sc, obs)?;
    ml_estimate_with(&lik, init, MlSettings::default())
}

pub fn ml_estimate_with(lik: &Likelihood, init: &[f64], settings: MlSettings) -> Result<MlEstimate> {
    if init.len() != lik.dim() {
        return Err(Error::PreconditionViolation(format!(
            "initial point has {} entries, expected {}",
            init.len(),
            lik.dim()
        )));
    }
    if lik.dim() == 0 {
        return Err(Error::EmptyParameterVector);
    }
    let mut theta = init.to_vec();
    let mut f = lik.objective(&theta);
    let mut damping = 0.0f64;
    let mut g = lik.gradient(&theta);
    let mut gn = norm(&g);
    let mut iterations = 0;
    while iterations < settings.max_iters {
        if gn < settings.tol * (1.0 + f.abs()) {
            return Ok(MlEstimate {
                theta_hat: theta,
                converged: true,
                objective: f,
                iterations,
                gradient_norm: gn,
            });
        }
        iterations += 1;
        let h = lik.fisher(&theta);
        let rhs = -DVector::from_column_slice(&g);
        let mut accepted = false;
        while damping <= 1e12 {
            let mut a = h.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += damping * (1.0 + h[(i, i)]);
            }
            let Some(ch) = a.cholesky() else {
                damping = (damping * 10.0).max(1e-8);
                continue;
            };
            let step = ch.solve(&rhs);
            let slope: f64 = step.iter().zip(&g).map(|(s, g)| s * g).sum();
            let mut alpha = 1.0;
            for _ in 0..30 {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + alpha * s).collect();
                let ft = lik.objective(&trial);
                if ft.is_finite() && ft <= f + 1e-4 * alpha * slope {
                    theta = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                damping *= 0.1;
                if damping < 1e-10 {
                    damping = 0.0;
                }
                break;
            }
            damping = (damping * 10.0).max(1e-8);
        }
        g = lik.gradient(&theta);
        gn = norm(&g);
        if !accepted {
            break;
        }
    }
    Ok(MlEstimate {
        theta_hat: theta,
        converged: gn < settings.tol * (1.0 + f.abs()),
        objective: f,
        iterations,
        gradient_norm: gn,
    })
}

/// Outcome of comparing the analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub points: usize,
    /// Largest `|analytic − numeric| / max(|numeric|, 1e-3 ‖numeric‖∞)`.
    pub max_relative_error: f64,
}

/// Compares the gradient with central differences (step `1e-5 · max(1, |θ_i|)`)
/// at `points` random positions: one simulated draw each, evaluated at the
/// truth perturbed by `N(0, 1 m²)` per coordinate.
pub fn gradient_check(sc: &Scenario, points: usize, seed: u64) -> Result<GradientCheck> {
    let truth = true_parameters(sc);
    let mut worst = 0.0f64;
    for p in 0..points {
        let mut rng = trial_rng(seed, p as u64);
        let (rss, prior_estimates) = draw(sc, &mut rng);
        let obs = ObservationDraw {
            rss,
            prior_estimates,
            rng_seed: seed,
        };
        let lik = Likelihood::new(sc, &obs)?;
        let theta: Vec<f64> = truth.iter().map(|t| t + normal(&mut rng)).collect();
        let g = lik.gradient(&theta);
        let mut num = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let h = 1e-5 * theta[i].abs().max(1.0);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            num[i] = (lik.objective(&tp) - lik.objective(&tm)) / (2.0 * h);
        }
        let scale = num.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, n) in g.iter().zip(&num) {
            let denom = n.abs().max(1e-3 * scale).max(f64::MIN_POSITIVE);
            worst = worst.max((a - n).abs() / denom);
        }
    }
    Ok(GradientCheck {
        points,
        max_relative_error: worst,
    })
}

fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Sums in a fixed binary tree over the input order.
fn pairwise_sum<T: Clone + std::ops::Add<Output = T>>(items: &[T]) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (a, b) = items.split_at(n / 2);
            Some(pairwise_sum(a)? + pairwise_sum(b)?)
        }
    }
}

/// Mean of `f(trial)` over `trials`, chunked and pairwise-summed.
fn chunked_mean<F>(trials: usize, dim: usize, f: F) -> DMatrix<f64>
where
    F: Fn(usize) -> DMatrix<f64> + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    let sums = map_trials(chunks, |c| {
        let mut acc = DMatrix::zeros(dim, dim);
        for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            acc += f(t);
        }
        acc
    });
    pairwise_sum(&sums).unwrap_or_else(|| DMatrix::zeros(dim, dim)) / trials.max(1) as f64
}

fn outer(v: &[f64]) -> DMatrix<f64> {
    let v = DVector::from_column_slice(v);
    &v * v.transpose()
}

/// Score outer-product average compared with the analytic joint FIM.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalFim {
    pub matrix: DMatrix<f64>,
    pub analytic: BlockFim,
    /// `‖empirical − analytic‖_F / ‖analytic‖_F`
    pub relative_frobenius: f64,
    pub trials: usize,
}

/// Averages the outer product of the score at the truth over `trials`
/// simulated draws.
pub fn empirical_fim(sc: &Scenario, trials: usize, seed: u64) -> Result<EmpiricalFim> {
    let analytic = assemble_block_fim(sc)?;
    let truth = true_parameters(sc);
    let dim = truth.len();
    let matrix = chunked_mean(trials, dim, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let (rss, prior_estimates) = draw(sc, &mut rng);
        let obs = ObservationDraw {
            rss,
            prior_estimates,
            rng_seed: seed,
        };
        let lik = Likelihood::new(sc, &obs).expect("draw matches scenario");
        outer(&lik.score(&truth))
    });
    let relative_frobenius = (&matrix - &analytic.matrix).norm() / analytic.matrix.norm();
    Ok(EmpiricalFim {
        matrix,
        analytic,
        relative_frobenius,
        trials,
    })
}

/// Score outer-product average over `[x_TX, y_TX, p_TX, γ]` for one source
/// measured by certain anchors with `t` samples each.
pub fn empirical_fim_power_gamma(
    anchors: &[Point],
    source: &Point,
    model: &PropagationModel,
    t: u32,
    trials: usize,
    seed: u64,
) -> Result<Matrix4<f64>> {
    model.validate()?;
    for a in anchors {
        model.check_distance(source.distance(a))?;
    }
    let sigma = model.sigma_db;
    let rows: Vec<([f64; 4], f64)> = anchors
        .iter()
        .map(|a| {
            let d = source.distance(a);
            let c = model.slope(d) / d;
            // derivative of the mean power w.r.t. [x, y, p0, γ]
            let jac = [
                -c * (source.x - a.x),
                -c * (source.y - a.y),
                1.0,
                -10.0 * (d / model.d0_m).log10(),
            ];
            (jac, model.mean_rss_unchecked(d))
        })
        .collect();
    let m = chunked_mean(trials, 4, |trial| {
        let mut rng = trial_rng(seed, trial as u64);
        let mut score = [0.0; 4];
        for (jac, _) in &rows {
            let resid: f64 = (0..t).map(|_| sigma * normal(&mut rng)).sum();
            for i in 0..4 {
                score[i] += resid / (sigma * sigma) * jac[i];
            }
        }
        outer(&score)
    });
    Ok(Matrix4::from_fn(|i, j| m[(i, j)]))
}

/// Converged estimates of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct MlMonteCarlo {
    pub truth: Vec<f64>,
    /// One entry per converged trial, in trial order.
    pub estimates: Vec<Vec<f64>>,
    pub failed: usize,
    pub trials: usize,
}

/// Runs the estimator on `trials` independent draws, each started at the
/// truth plus `N(0, init_sd²)` per coordinate.
pub fn ml_monte_carlo(sc: &Scenario, trials: usize, seed: u64, init_sd: f64) -> Result<MlMonteCarlo> {
    sc.validate()?;
    let truth = true_parameters(sc);
    if truth.is_empty() {
        return Err(Error::EmptyParameterVector);
    }
    let results = map_trials(trials, |t| -> Result<Option<Vec<f64>>> {
        let mut rng = trial_rng(seed, t as u64);
        let (rss, prior_estimates) = draw(sc, &mut rng);
        let init: Vec<f64> = truth.iter().map(|x| x + init_sd * normal(&mut rng)).collect();
        let obs = ObservationDraw {
            rss,
            prior_estimates,
            rng_seed: seed,
        };
        let lik = Likelihood::new(sc, &obs)?;
        let est = ml_estimate_with(&lik, &init, MlSettings::default())?;
        Ok(est.converged.then_some(est.theta_hat))
    });
    let mut estimates = Vec::with_capacity(trials);
    let mut failed = 0;
    for r in results {
        match r? {
            Some(e) => estimates.push(e),
            None => failed += 1,
        }
    }
    Ok(MlMonteCarlo {
        truth,
        estimates,
        failed,
        trials,
    })
}

impl MlMonteCarlo {
    pub fn check_convergence(&self) -> Result<()> {
        if self.failed as f64 > MAX_FAILURE_RATE * self.trials as f64 || self.estimates.len() < 2 {
            return Err(Error::InsufficientConvergence {
                failed: self.failed,
                trials: self.trials,
            });
        }
        Ok(())
    }

    /// Sample covariance of the converged estimates.
    pub fn covariance(&self) -> DMatrix<f64> {
        let dim = self.truth.len();
        let n = self.estimates.len() as f64;
        let mut mean = DVector::zeros(dim);
        for e in &self.estimates {
            mean += DVector::from_column_slice(e);
        }
        mean /= n;
        let mut c = DMatrix::zeros(dim, dim);
        for e in &self.estimates {
            let d = DVector::from_column_slice(e) - &mean;
            c += &d * d.transpose();
        }
        c / (n - 1.0)
    }
}

/// Empirical covariance of the estimator against the CRLB.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceComparison {
    pub covariance: DMatrix<f64>,
    pub crlb: DMatrix<f64>,
    /// `trace(covariance) / trace(crlb)`
    pub trace_ratio: f64,
    /// Smallest eigenvalue of `covariance − crlb`.
    pub min_eigenvalue: f64,
    /// Monte Carlo standard error of the variance along that eigenvector.
    pub standard_error: f64,
    pub converged: usize,
    pub failed: usize,
}

pub fn compare_with_crlb(sc: &Scenario, mc: &MlMonteCarlo) -> Result<CovarianceComparison> {
    mc.check_convergence()?;
    let fim = assemble_block_fim(sc)?;
    let crlb = fim.matrix.clone().cholesky().ok_or(Error::SingularFim)?.inverse();
    let covariance = mc.covariance();
    let diff = &covariance - &crlb;
    let eig = SymmetricEigen::new(diff);
    let (imin, min_eigenvalue) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let v = eig.eigenvectors.column(imin).into_owned();
    let n = mc.estimates.len() as f64;
    let mean = mc
        .estimates
        .iter()
        .map(|e| DVector::from_column_slice(e))
        .fold(DVector::zeros(v.len()), |a, e| a + e)
        / n;
    let proj: Vec<f64> = mc
        .estimates
        .iter()
        .map(|e| {
            let p = (DVector::from_column_slice(e) - &mean).dot(&v);
            p * p
        })
        .collect();
    let pm = proj.iter().sum::<f64>() / n;
    let pvar = proj.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / (n - 1.0);
    Ok(CovarianceComparison {
        trace_ratio: covariance.trace() / crlb.trace(),
        covariance,
        crlb,
        min_eigenvalue,
        standard_error: (pvar / n).sqrt(),
        converged: mc.estimates.len(),
        failed: mc.failed,
    })
}

/// Fraction of estimates of one node inside its error ellipse at scale `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub fraction: f64,
    pub target: f64,
    /// Binomial standard error at the target probability.
    pub standard_error: f64,
    pub converged: usize,
    pub failed: usize,
}

impl Coverage {
    /// Whether the fraction is within `z` standard errors of the target.
    pub fn within(&self, z: f64) -> bool {
        (self.fraction - self.target).abs() <= z * self.standard_error
    }
}

pub fn crlb_coverage(
    sc: &Scenario,
    node: NodeRef,
    trials: usize,
    confidence: ConfidenceScale,
    seed: u64,
    init_sd: f64,
) -> Result<Coverage> {
    let fim = assemble_block_fim(sc)?;
    let off = fim
        .offset(node)
        .ok_or_else(|| Error::UnknownNodeId(format!("{node:?}")))?;
    let net = node_marginal_fim(sc, node)?;
    let mc = ml_monte_carlo(sc, trials, seed, init_sd)?;
    mc.check_convergence()?;
    let inside = mc
        .estimates
        .iter()
        .filter(|e| {
            let r = [e[off] - mc.truth[off], e[off + 1] - mc.truth[off + 1]];
            net.quad_form(r) <= confidence.k
        })
        .count();
    let n = mc.estimates.len() as f64;
    Ok(Coverage {
        fraction: inside as f64 / n,
        target: confidence.p_e,
        standard_error: (confidence.p_e * (1.0 - confidence.p_e) / n).sqrt(),
        converged: mc.estimates.len(),
        failed: mc.failed,
    })
}
