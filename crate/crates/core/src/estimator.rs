//! Maximum-likelihood fit of link success probabilities, delta-method
//! uncertainty for route parameters, and split-sample validation.
//!
//! The log-likelihood is maximized in logit coordinates with a
//! box-constrained BFGS (the box is the probability clamp), from several
//! starts. Each start finishes with Fisher-scoring steps, which land exactly
//! on `S_j / n_j` for links without route information. A start counts as
//! converged when the largest score component, ignoring links pinned at the
//! clamp with the score pointing outward, is below `tol * max(1, |log L|)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::eval_route;
use crate::error::{Error, Result};
use crate::ingest::{LinkObservation, ObservationSet, RouteObservation};
use crate::likelihood::{self, clamp_probability, FimMatrix, ParamVector, DEFAULT_CLAMP};
use crate::netmodel::{NetworkModel, Route};
use crate::optimize::BoxBfgs;
use crate::rng;

/// Eigenvalues below this fraction of the largest are dropped when
/// inverting the information matrix.
pub const PINV_RELATIVE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Relative score tolerance of the convergence certificate.
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the logit-space start perturbations.
    pub perturbation_sd: f64,
    pub clamp: f64,
    /// Replaces the sample-mean start when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
            starts: 8,
            seed: 0,
            perturbation_sd: 0.5,
            clamp: DEFAULT_CLAMP,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    pub loglik: f64,
    /// Largest free score component at `theta_hat`.
    pub score_norm_inf: f64,
    pub fim: FimMatrix<f64>,
    pub fim_inverse: DMatrix<f64>,
    /// Number of eigen-directions dropped by the pseudo-inverse.
    pub rank_deficiency: usize,
    pub starts_used: usize,
    /// Index of the winning start.
    pub best_start: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Ids of links whose estimate sits at the clamp.
    pub boundary_links: Vec<u32>,
}

#[derive(Debug, Clone)]
struct StartOutcome {
    index: usize,
    theta: Vec<f64>,
    loglik: f64,
    score_norm: f64,
    iterations: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Largest score component over links not pinned at the clamp.
fn free_score_norm(theta: &[f64], score: &[f64], eps: f64) -> f64 {
    theta
        .iter()
        .zip(score)
        .filter(|(&r, &s)| !((r <= eps && s < 0.0) || (r >= 1.0 - eps && s > 0.0)))
        .fold(0.0, |m, (_, s)| m.max(s.abs()))
}

fn check_identifiable(net: &NetworkModel, obs: &ObservationSet) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::Estimation("no observations".into()));
    }
    let mut covered = vec![false; net.p()];
    for (q, route) in net.routes().iter().enumerate() {
        if obs.route_k(q) > 0 {
            route.links.iter().for_each(|&j| covered[j] = true);
        }
    }
    for (j, link) in net.links().iter().enumerate() {
        if obs.trials(j) == 0 && !covered[j] {
            return Err(Error::Estimation(format!(
                "link {} has neither link observations nor an observed route through it",
                link.id
            )));
        }
    }
    Ok(())
}

fn sample_mean_start(obs: &ObservationSet, eps: f64) -> Vec<f64> {
    obs.links
        .iter()
        .map(|l| clamp_probability((l.successes as f64 + 0.5) / (l.trials as f64 + 1.0), eps))
        .collect()
}

/// Fisher-scoring ascent in probability space with the clamp as a box.
fn fisher_polish(net: &NetworkModel, obs: &ObservationSet, theta: &mut Vec<f64>, eps: f64) -> Result<usize> {
    let mut steps = 0;
    let (mut ll, mut s) = likelihood::log_likelihood_and_score(net, obs, theta)?;
    for _ in 0..50 {
        if free_score_norm(theta, &s, eps) <= 1e-12 * ll.abs().max(1.0) {
            break;
        }
        let free: Vec<usize> = (0..theta.len())
            .filter(|&j| !((theta[j] <= eps && s[j] < 0.0) || (theta[j] >= 1.0 - eps && s[j] > 0.0)))
            .collect();
        let f = likelihood::fim(net, obs, theta)?.matrix;
        let ff = DMatrix::from_fn(free.len(), free.len(), |a, b| f[(free[a], free[b])]);
        let sf = nalgebra::DVector::from_iterator(free.len(), free.iter().map(|&j| s[j]));
        let Some(delta) = ff.cholesky().map(|c| c.solve(&sf)) else { break };

        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-10 {
            let mut trial = theta.clone();
            for (a, &j) in free.iter().enumerate() {
                trial[j] = clamp_probability(theta[j] + t * delta[a], eps);
            }
            if let Ok((ll_t, s_t)) = likelihood::log_likelihood_and_score(net, obs, &trial) {
                if ll_t >= ll {
                    let gained = ll_t - ll;
                    *theta = trial;
                    ll = ll_t;
                    s = s_t;
                    improved = gained > 0.0 || t == 1.0;
                    break;
                }
            }
            t *= 0.5;
        }
        steps += 1;
        if !improved {
            break;
        }
    }
    Ok(steps)
}

fn run_start(
    net: &NetworkModel,
    obs: &ObservationSet,
    cfg: &FitConfig,
    index: usize,
    start: Vec<f64>,
) -> Option<StartOutcome> {
    let eps = cfg.clamp;
    let (lo, hi) = (logit(eps), logit(1.0 - eps));
    let to_theta = |u: &[f64]| -> Vec<f64> { u.iter().map(|&x| clamp_probability(sigmoid(x), eps)).collect() };
    let objective = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let theta = to_theta(u);
        let (ll, s) = likelihood::log_likelihood_and_score(net, obs, &theta).ok()?;
        let g = s.iter().zip(&theta).map(|(si, r)| -si * r * (1.0 - r)).collect();
        Some((-ll, g))
    };
    let u0: Vec<f64> = start.iter().map(|&r| logit(clamp_probability(r, eps))).collect();
    let bfgs = BoxBfgs { max_iter: cfg.max_iter, grad_tol: 1e-10, max_first_step: 1.0 };
    let m = bfgs.minimize(objective, &u0, lo, hi)?;
    let mut theta = to_theta(&m.x);
    let polish = fisher_polish(net, obs, &mut theta, eps).ok()?;
    let (loglik, s) = likelihood::log_likelihood_and_score(net, obs, &theta).ok()?;
    Some(StartOutcome {
        index,
        score_norm: free_score_norm(&theta, &s, eps),
        theta,
        loglik,
        iterations: m.iterations + polish,
    })
}

/// Symmetric pseudo-inverse; returns the inverse and the number of
/// eigen-directions dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut inv = DMatrix::zeros(n, n);
    let mut dropped = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= PINV_RELATIVE_THRESHOLD * max || lambda <= 0.0 {
            dropped += 1;
            continue;
        }
        let v = eig.eigenvectors.column(i);
        inv += (v * v.transpose()) / lambda;
    }
    let inv = (&inv + inv.transpose()) * 0.5;
    (inv, dropped)
}

/// Maximize the joint log-likelihood over the clamped box.
pub fn fit(net: &NetworkModel, obs: &ObservationSet, cfg: &FitConfig) -> Result<FitResult> {
    check_identifiable(net, obs)?;
    if cfg.starts == 0 {
        return Err(Error::Estimation("at least one start is required".into()));
    }
    if !(cfg.clamp > 0.0 && cfg.clamp < 0.5) {
        return Err(Error::InvalidValue(format!("clamp must be in (0, 0.5), got {}", cfg.clamp)));
    }
    let eps = cfg.clamp;
    let base = match &cfg.initial {
        Some(init) if init.len() == net.p() => init.clone(),
        Some(init) => {
            return Err(Error::InvalidValue(format!("initial point has {} entries, expected {}", init.len(), net.p())))
        }
        None => sample_mean_start(obs, eps),
    };
    // surface degenerate-likelihood errors before fanning out
    likelihood::log_likelihood(net, obs, &ParamVector::clamped(base.clone(), eps).0)?;

    let noise = Normal::new(0.0, cfg.perturbation_sd.max(0.0)).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let starts: Vec<Vec<f64>> = (0..cfg.starts)
        .map(|i| {
            if i == 0 {
                return base.clone();
            }
            let mut r = rng::stream(cfg.seed, rng::START_STREAM + i as u64);
            base.iter()
                .map(|&b| sigmoid(logit(clamp_probability(b, eps)) + noise.sample(&mut r)))
                .collect()
        })
        .collect();

    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .enumerate()
        .filter_map(|(i, s)| run_start(net, obs, cfg, i, s))
        .collect();

    let best = outcomes
        .iter()
        .min_by(|a, b| {
            let tie = 1e-9 * a.loglik.abs().max(b.loglik.abs()).max(1.0);
            if (a.loglik - b.loglik).abs() > tie {
                b.loglik.total_cmp(&a.loglik)
            } else {
                a.score_norm.total_cmp(&b.score_norm).then(a.index.cmp(&b.index))
            }
        })
        .ok_or_else(|| Error::Estimation("every start failed to evaluate".into()))?;

    let theta = best.theta.clone();
    let fim = likelihood::fim(net, obs, &theta)?;
    let (fim_inverse, rank_deficiency) = pseudo_inverse(&fim.matrix);
    if rank_deficiency > 0 {
        log::warn!("information matrix is rank deficient by {rank_deficiency}; using pseudo-inverse");
    }
    let converged = best.score_norm < cfg.tol * best.loglik.abs().max(1.0);
    let boundary_links = theta
        .iter()
        .zip(net.links())
        .filter(|(&r, _)| r <= eps * (1.0 + 1e-9) || r >= 1.0 - eps * (1.0 + 1e-9))
        .map(|(_, l)| l.id)
        .collect();
    Ok(FitResult {
        theta_hat: ParamVector(theta),
        loglik: best.loglik,
        score_norm_inf: best.score_norm,
        fim,
        fim_inverse,
        rank_deficiency,
        starts_used: outcomes.len(),
        best_start: best.index,
        iterations: best.iterations,
        converged,
        boundary_links,
    })
}

/// Asymptotic distribution of a route's log-normal parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteUncertainty {
    pub h1_hat: f64,
    pub h2_hat: f64,
    /// `[[σ1², σ12], [σ21, σ2²]]`
    pub sigma: [[f64; 2]; 2],
    /// Variance of h1 given h2, `σ1² - σ12² / σ2²`, floored at zero.
    pub sigma_11_2: f64,
}

impl RouteUncertainty {
    /// Known parameters, no estimation uncertainty.
    pub fn exact(h1: f64, h2: f64) -> Self {
        Self { h1_hat: h1, h2_hat: h2, sigma: [[0.0; 2]; 2], sigma_11_2: 0.0 }
    }

    /// Conditional mean of h1 given h2.
    pub fn conditional_mean(&self, h2: f64) -> f64 {
        let s22 = self.sigma[1][1];
        if s22 > 0.0 {
            self.h1_hat + self.sigma[0][1] / s22 * (h2 - self.h2_hat)
        } else {
            self.h1_hat
        }
    }

    /// Same means with the covariance multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for row in out.sigma.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        out.sigma_11_2 *= c;
        out
    }
}

/// Delta-method covariance `h'ᵀ F⁻¹ h'` for a route at `theta`.
pub fn delta_covariance(net: &NetworkModel, route: &Route, theta: &[f64], fim_inverse: &DMatrix<f64>) -> RouteUncertainty {
    let b = eval_route(net, route, theta);
    let p = net.p();
    let grads = DMatrix::from_fn(p, 2, |j, c| if c == 0 { b.grad_h1[j] } else { b.grad_h2[j] });
    let s = grads.transpose() * fim_inverse * &grads;
    let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    let s11 = s[(0, 0)].max(0.0);
    let s22 = s[(1, 1)].max(0.0);
    let cond = if s22 > 0.0 { s11 - off * off / s22 } else { s11 };
    RouteUncertainty {
        h1_hat: b.h1,
        h2_hat: b.h2,
        sigma: [[s11, off], [off, s22]],
        sigma_11_2: cond.clamp(0.0, s11),
    }
}

/// Delta-method distribution of `(h1, h2)` for any valid route, observed
/// or not.
pub fn route_uncertainty(net: &NetworkModel, route: &Route, fit: &FitResult) -> Result<RouteUncertainty> {
    if fit.theta_hat.len() != net.p() {
        return Err(Error::InvalidValue("fit does not match the network".into()));
    }
    if !fit.converged {
        log::warn!("route uncertainty from a fit that did not converge");
    }
    if fit.rank_deficiency > 0 {
        log::warn!("route uncertainty uses a pseudo-inverse (rank deficiency {})", fit.rank_deficiency);
    }
    Ok(delta_covariance(net, route, fit.theta_hat.as_slice(), &fit.fim_inverse))
}

/// Delta-method standard deviation, in seconds, of the route's estimated
/// mean travel time.
pub fn mean_time_std(net: &NetworkModel, route: &Route, fit: &FitResult) -> Result<f64> {
    if fit.theta_hat.len() != net.p() {
        return Err(Error::InvalidValue("fit does not match the network".into()));
    }
    let b = eval_route(net, route, fit.theta_hat.as_slice());
    let g = nalgebra::DVector::from_vec(b.grad_mean);
    Ok((g.transpose() * &fit.fim_inverse * &g)[(0, 0)].max(0.0).sqrt())
}

/// Mean, its standard error and the sample size of a set of travel times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean_s: f64,
    pub std_of_mean_s: f64,
    pub n: usize,
}

fn sample_mean(times: &[f64]) -> MeanEstimate {
    let n = times.len();
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    MeanEstimate { mean_s: mean, std_of_mean_s: (var / n as f64).sqrt(), n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub route_id: u32,
    pub mle: MeanEstimate,
    pub training: MeanEstimate,
    pub testing: MeanEstimate,
    pub within_one_se: bool,
    pub within_two_se: bool,
    pub converged: bool,
}

/// Fit on a random half of one route's observations plus all other data,
/// then compare the fitted mean travel time with the held-out half.
pub fn validate_split(
    net: &NetworkModel,
    route_id: u32,
    link_obs: &[LinkObservation],
    route_obs: &[RouteObservation],
    seed: u64,
    cfg: &FitConfig,
) -> Result<ValidationReport> {
    let route = net.route(route_id)?.clone();
    let (mut target, others): (Vec<&RouteObservation>, Vec<&RouteObservation>) =
        route_obs.iter().partition(|o| o.route_id == route_id);
    if target.len() < 4 {
        return Err(Error::TooFewObservations { needed: 4, have: target.len() });
    }
    target.sort_by(|a, b| a.day.cmp(&b.day));
    target.shuffle(&mut rng::stream(seed, rng::SPLIT_STREAM));
    let half = target.len() / 2;
    let (train, test) = target.split_at(half);

    let fit_routes: Vec<RouteObservation> = others.into_iter().chain(train.iter().copied()).cloned().collect();
    let obs = ObservationSet::aggregate(net, link_obs, &fit_routes, false)?;
    let result = fit(net, &obs, cfg)?;
    let b = eval_route(net, &route, result.theta_hat.as_slice());
    let mle = MeanEstimate { mean_s: b.mean, std_of_mean_s: mean_time_std(net, &route, &result)?, n: half };

    let times = |v: &[&RouteObservation]| v.iter().map(|o| o.travel_time_s).collect::<Vec<_>>();
    let training = sample_mean(&times(train));
    let testing = sample_mean(&times(test));
    let gap = (mle.mean_s - testing.mean_s).abs();
    Ok(ValidationReport {
        route_id,
        mle,
        training,
        testing,
        within_one_se: gap <= testing.std_of_mean_s,
        within_two_se: gap <= 2.0 * testing.std_of_mean_s,
        converged: result.converged,
    })
}
