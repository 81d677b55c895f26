//! Joint log-likelihood of route travel times and link states, its score
//! vector and expected Fisher information.
//!
//! Route `q` contributes, with `(ω, σ²) = (h1, h2)` from the bridge,
//!
//! ```text
//! -k/2 ln σ² - Σ_i (Z_qi - ω)² / (2σ²)
//! ```
//!
//! and link `j` contributes `S_j ln ρ_j + (n_j - S_j) ln(1 - ρ_j)`. The
//! additive constant is dropped.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bridge::{eval_route, BridgeEval};
use crate::error::{Error, Result};
use crate::ingest::ObservationSet;
use crate::netmodel::NetworkModel;
use crate::scalar::Scalar;

/// Route log-variances below this are treated as degenerate when the route
/// has observations.
pub const MIN_LOG_VARIANCE: f64 = 1e-12;

/// Default clamp: every success probability lives in `[ε, 1-ε]`.
pub const DEFAULT_CLAMP: f64 = 1e-6;

/// Link success probabilities in parameter-vector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    /// Clamp every component into `[eps, 1-eps]`.
    pub fn clamped(rho: Vec<f64>, eps: f64) -> Self {
        Self(rho.into_iter().map(|r| clamp_probability(r, eps)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn clamp_probability(r: f64, eps: f64) -> f64 {
    r.clamp(eps, 1.0 - eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimMatrix<T: nalgebra::Scalar> {
    pub matrix: DMatrix<T>,
    /// Diagonal of the link-data block `n_j / (ρ_j (1-ρ_j))`.
    pub link_diag: Vec<T>,
    /// Ratio of extreme eigenvalues; infinite when singular.
    pub condition_estimate: f64,
}

struct RouteTerm<T> {
    bridge: BridgeEval<T>,
    k: T,
    /// Σ (Z - ω)
    resid_sum: T,
    /// Σ (Z - ω)²
    resid_ss: T,
}

fn route_terms<T: Scalar>(net: &NetworkModel, obs: &ObservationSet, theta: &[T]) -> Result<Vec<RouteTerm<T>>> {
    let mut out = Vec::new();
    for (q, route) in net.routes().iter().enumerate() {
        let data = &obs.routes[q];
        let (k, zbar, ss) = data.moments();
        if k == 0 {
            continue;
        }
        let bridge = eval_route(net, route, theta);
        if !(bridge.h2.as_f64() >= MIN_LOG_VARIANCE) {
            return Err(Error::DegenerateLikelihood { route: route.id, h2: bridge.h2.as_f64(), k });
        }
        let kt = T::of(k as f64);
        let d = T::of(zbar) - bridge.h1;
        out.push(RouteTerm {
            k: kt,
            resid_sum: kt * d,
            resid_ss: T::of(ss) + kt * d * d,
            bridge,
        });
    }
    Ok(out)
}

fn check_len<T>(net: &NetworkModel, obs: &ObservationSet, theta: &[T]) -> Result<()> {
    if theta.len() != net.p() || obs.links.len() != net.p() || obs.routes.len() != net.r() {
        return Err(Error::InvalidValue(format!(
            "dimension mismatch: {} links, theta {}, link data {}, route data {} of {}",
            net.p(),
            theta.len(),
            obs.links.len(),
            obs.routes.len(),
            net.r()
        )));
    }
    Ok(())
}

fn link_loglik<T: Scalar>(obs: &ObservationSet, theta: &[T]) -> T {
    let mut sum = T::zero();
    for (data, &rho) in obs.links.iter().zip(theta) {
        let s = T::of(data.successes as f64);
        let f = T::of((data.trials - data.successes) as f64);
        if data.successes > 0 {
            sum = sum + s * rho.ln();
        }
        if data.trials > data.successes {
            sum = sum + f * (-rho).ln_1p();
        }
    }
    sum
}

fn route_loglik<T: Scalar>(terms: &[RouteTerm<T>]) -> T {
    let half = T::of(0.5);
    terms.iter().fold(T::zero(), |acc, t| {
        acc - half * t.k * t.bridge.h2.ln() - half * t.resid_ss / t.bridge.h2
    })
}

/// Joint log-likelihood (constant dropped).
pub fn log_likelihood<T: Scalar>(net: &NetworkModel, obs: &ObservationSet, theta: &[T]) -> Result<T> {
    check_len(net, obs, theta)?;
    let terms = route_terms(net, obs, theta)?;
    Ok(route_loglik(&terms) + link_loglik(obs, theta))
}

fn score_from_terms<T: Scalar>(obs: &ObservationSet, theta: &[T], terms: &[RouteTerm<T>]) -> Vec<T> {
    let p = theta.len();
    let half = T::of(0.5);
    let mut g = vec![T::zero(); p];
    for t in terms {
        let s2 = t.bridge.h2;
        let c2 = -half * t.k / s2 + half * t.resid_ss / (s2 * s2);
        let c1 = t.resid_sum / s2;
        for j in 0..p {
            g[j] = g[j] + c2 * t.bridge.grad_h2[j] + c1 * t.bridge.grad_h1[j];
        }
    }
    for (j, data) in obs.links.iter().enumerate() {
        let s = T::of(data.successes as f64);
        let f = T::of((data.trials - data.successes) as f64);
        g[j] = g[j] + s / theta[j] - f / (T::one() - theta[j]);
    }
    g
}

/// Gradient of [`log_likelihood`] with respect to the success probabilities.
pub fn score<T: Scalar>(net: &NetworkModel, obs: &ObservationSet, theta: &[T]) -> Result<Vec<T>> {
    check_len(net, obs, theta)?;
    let terms = route_terms(net, obs, theta)?;
    Ok(score_from_terms(obs, theta, &terms))
}

/// Log-likelihood and score from a single bridge pass.
pub fn log_likelihood_and_score<T: Scalar>(
    net: &NetworkModel,
    obs: &ObservationSet,
    theta: &[T],
) -> Result<(T, Vec<T>)> {
    check_len(net, obs, theta)?;
    let terms = route_terms(net, obs, theta)?;
    let ll = route_loglik(&terms) + link_loglik(obs, theta);
    Ok((ll, score_from_terms(obs, theta, &terms)))
}

/// Expected Fisher information at `theta`.
pub fn fim<T: Scalar>(net: &NetworkModel, obs: &ObservationSet, theta: &[T]) -> Result<FimMatrix<T>> {
    check_len(net, obs, theta)?;
    let p = net.p();
    let mut m = DMatrix::<T>::from_element(p, p, T::zero());
    for (q, route) in net.routes().iter().enumerate() {
        let k = obs.route_k(q);
        if k == 0 {
            continue;
        }
        let b = eval_route(net, route, theta);
        if !(b.h2.as_f64() >= MIN_LOG_VARIANCE) {
            return Err(Error::DegenerateLikelihood { route: route.id, h2: b.h2.as_f64(), k });
        }
        let kt = T::of(k as f64);
        let w2 = kt / (T::of(2.0) * b.h2 * b.h2);
        let w1 = kt / b.h2;
        // only on-route entries are non-zero
        for &a in &route.links {
            for &c in &route.links {
                m[(a, c)] = m[(a, c)] + w2 * b.grad_h2[a] * b.grad_h2[c] + w1 * b.grad_h1[a] * b.grad_h1[c];
            }
        }
    }
    let mut link_diag = Vec::with_capacity(p);
    for (j, data) in obs.links.iter().enumerate() {
        let rho = theta[j];
        let d = T::of(data.trials as f64) / (rho * (T::one() - rho));
        m[(j, j)] = m[(j, j)] + d;
        link_diag.push(d);
    }
    let condition_estimate = condition_number(&m);
    Ok(FimMatrix { matrix: m, link_diag, condition_estimate })
}

fn condition_number<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let m64 = m.map(|x| x.as_f64());
    let eig = m64.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::SpeedPair;
    use approx::assert_relative_eq;

    fn single_link(route: bool) -> NetworkModel {
        let routes = if route { vec![(1, vec![1])] } else { vec![] };
        NetworkModel::new(SpeedPair::new(10.0, 5.0).unwrap(), vec![(1, "A".into(), "B".into(), 1000.0)], routes)
            .unwrap()
    }

    #[test]
    fn pure_bernoulli_term() {
        let net = single_link(false);
        let obs = ObservationSet::from_counts(&net, &[(3, 4)], vec![]).unwrap();
        let ll = log_likelihood(&net, &obs, &[0.75]).unwrap();
        assert_relative_eq!(ll, 3.0 * 0.75f64.ln() + 0.25f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(ll, -2.2493, epsilon = 1e-4);
    }

    #[test]
    fn centered_route_observation() {
        let net = single_link(true);
        let b = eval_route(&net, &net.routes()[0], &[0.8]);
        let obs = ObservationSet::from_counts(&net, &[(0, 0)], vec![vec![b.h1]]).unwrap();
        let ll = log_likelihood(&net, &obs, &[0.8]).unwrap();
        assert_relative_eq!(ll, -0.5 * b.h2.ln(), epsilon = 1e-12);
    }

    #[test]
    fn bernoulli_stationary_point() {
        let net = single_link(false);
        let obs = ObservationSet::from_counts(&net, &[(7, 20)], vec![]).unwrap();
        let g = score(&net, &obs, &[0.35f64]).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn link_only_fim_is_diagonal() {
        let net = single_link(false);
        let obs = ObservationSet::from_counts(&net, &[(50, 100)], vec![]).unwrap();
        let f = fim(&net, &obs, &[0.5]).unwrap();
        assert_relative_eq!(f.matrix[(0, 0)], 400.0, epsilon = 1e-12);
        assert_eq!(f.link_diag, vec![400.0]);
        assert_relative_eq!(f.condition_estimate, 1.0);
    }

    #[test]
    fn degenerate_route_is_refused() {
        let net = single_link(true);
        let obs = ObservationSet::from_counts(&net, &[(0, 0)], vec![vec![4.6]]).unwrap();
        assert!(matches!(log_likelihood(&net, &obs, &[1.0]), Err(Error::DegenerateLikelihood { .. })));
        assert!(matches!(fim(&net, &obs, &[1.0]), Err(Error::DegenerateLikelihood { .. })));
        // without observations the route is irrelevant
        let none = ObservationSet::from_counts(&net, &[(1, 1)], vec![vec![]]).unwrap();
        assert!(log_likelihood(&net, &none, &[1.0 - 1e-6]).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let net = single_link(false);
        let obs = ObservationSet::empty(&net);
        assert!(log_likelihood(&net, &obs, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn single_precision_matches() {
        let net = single_link(true);
        let obs = ObservationSet::from_counts(&net, &[(6, 10)], vec![vec![4.7, 4.8, 4.65]]).unwrap();
        let ll64 = log_likelihood(&net, &obs, &[0.7f64]).unwrap();
        let ll32 = log_likelihood(&net, &obs, &[0.7f32]).unwrap();
        assert_relative_eq!(ll32 as f64, ll64, max_relative = 1e-5);
    }
}
