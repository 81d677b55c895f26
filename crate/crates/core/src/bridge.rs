//! Route/link bridge.
//!
//! A link is traversed at `l/v` when uncongested and `l/v'` otherwise, so
//! with success probability `ρ` its expected time is `l/v' - l ρ (v-v')/(v v')`
//! and its variance `(l (v-v')/(v v'))² ρ (1-ρ)`. Summing along a route gives
//! the route mean `M` and variance `V`; matching them to a log-normal yields
//! the log-scale parameters
//!
//! ```text
//! h1 = ln M - ½ ln(V/M² + 1)      (mean of ln T)
//! h2 = ln(V/M² + 1)               (variance of ln T)
//! ```

use crate::netmodel::{NetworkModel, Route, SpeedPair};
use crate::scalar::Scalar;

/// Expected traversal time of a link of `length_m` meters.
pub fn expected_link_time<T: Scalar>(length_m: T, rho: T, speeds: SpeedPair) -> T {
    let gap = T::of(speeds.slowness_gap());
    length_m / T::of(speeds.v_prime_mps) - length_m * rho * gap
}

/// Route moments and log-normal parameters with their gradients over the
/// full parameter vector (entries for links off the route are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeEval<T> {
    /// Mean travel time `M` in seconds.
    pub mean: T,
    /// Travel-time variance `V` in seconds².
    pub variance: T,
    pub h1: T,
    pub h2: T,
    pub grad_mean: Vec<T>,
    pub grad_h1: Vec<T>,
    pub grad_h2: Vec<T>,
}

impl<T: Scalar> BridgeEval<T> {
    /// Log-normal mean `exp(h1 + h2/2)`; equals `mean` up to rounding.
    pub fn lognormal_mean(&self) -> T {
        (self.h1 + self.h2 / T::of(2.0)).exp()
    }

    /// Log-normal variance `(exp(h2) - 1) exp(2 h1 + h2)`.
    pub fn lognormal_variance(&self) -> T {
        self.h2.exp_m1() * (T::of(2.0) * self.h1 + self.h2).exp()
    }
}

/// Evaluate the bridge for `route` at `theta` (indexed by link position).
pub fn eval_route<T: Scalar>(net: &NetworkModel, route: &Route, theta: &[T]) -> BridgeEval<T> {
    let p = net.p();
    debug_assert_eq!(theta.len(), p);
    let mut mean = T::zero();
    let mut variance = T::zero();
    let mut grad_mean = vec![T::zero(); p];
    let mut grad_var = vec![T::zero(); p];
    for &j in &route.links {
        let gap = T::of(net.link_time_gap(j));
        let rho = theta[j];
        mean = mean + T::of(net.link_congested_time(j)) - gap * rho;
        variance = variance + gap * gap * rho * (T::one() - rho);
        grad_mean[j] = -gap;
        grad_var[j] = gap * gap * (T::one() - T::of(2.0) * rho);
    }

    let m2 = mean * mean;
    let ratio = variance / m2;
    let h2 = ratio.ln_1p();
    let h1 = mean.ln() - h2 / T::of(2.0);

    let denom = T::one() + ratio;
    let two = T::of(2.0);
    let mut grad_h1 = vec![T::zero(); p];
    let mut grad_h2 = vec![T::zero(); p];
    for &j in &route.links {
        let dm = grad_mean[j];
        let dv = grad_var[j];
        let dh2 = (dv / m2 - two * variance * dm / (m2 * mean)) / denom;
        grad_h2[j] = dh2;
        grad_h1[j] = dm / mean - dh2 / two;
    }

    BridgeEval { mean, variance, h1, h2, grad_mean, grad_h1, grad_h2 }
}
