//! Travel-time distribution under two levels of uncertainty and the
//! reliability measures derived from it.
//!
//! The log travel time `z` is normal given the route parameters `(h1, h2)`,
//! and `(h1, h2)` is itself normal around its estimate. Integrating `h1`
//! out analytically leaves a one-dimensional expectation over `h2`,
//! estimated by Monte Carlo on a uniform grid of `z`.
//!
//! The `h2` draws are shared by every grid point, so the density is smooth
//! in `z` and every point remains an unbiased estimate. Non-positive `h2`
//! draws are discarded and redrawn; the discard rate is reported.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RouteUncertainty;
use crate::rng;
use crate::scalar::Scalar;

/// Discard rates above this are an error.
pub const MAX_REJECTION_RATE: f64 = 0.05;
/// Accepted range of the pre-normalization total mass.
pub const MASS_TOLERANCE: f64 = 0.01;
/// Half-width of the default grid in standard deviations of `z`.
pub const DEFAULT_BOUND_SIGMAS: f64 = 6.0;

/// Density of `z` given `h2`, with `h1 | h2 ~ N(h, σ11·2)` integrated out:
///
/// ```text
/// p(z | h2) = (2π (σ11·2 + h2))^{-1/2}
///             · exp(-z²/(2 h2) - h²/(2 σ11·2))
///             · exp((z σ11·2 + h h2)² / (2 h2 σ11·2 (σ11·2 + h2)))
/// ```
///
/// The three exponents combine exactly into `-(z - h)² / (2 (σ11·2 + h2))`,
/// which is what is evaluated; the expanded form cancels catastrophically
/// as `σ11·2` shrinks. At `σ11·2 = 0` this is the `N(h, h2)` density.
pub fn conditional_density<T: Scalar>(z: T, h2: T, h1_star: T, h2_star: T, sigma: [[T; 2]; 2], sigma_11_2: T) -> T {
    let s22 = sigma[1][1];
    let h = if s22 > T::zero() {
        h1_star + sigma[0][1] / s22 * (h2 - h2_star)
    } else {
        h1_star
    };
    let var = sigma_11_2.max(T::zero()) + h2;
    let two = T::of(2.0);
    let d = z - h;
    (-(d * d) / (two * var)).exp() / (two * T::PI() * var).sqrt()
}

/// [`conditional_density`] for a route's fitted uncertainty.
pub fn conditional_density_for(z: f64, h2: f64, unc: &RouteUncertainty) -> f64 {
    conditional_density(z, h2, unc.h1_hat, unc.h2_hat, unc.sigma, unc.sigma_11_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum Bounds {
    /// `h1 ± 6 sqrt(h2 + σ1²)`.
    Auto,
    Fixed { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: usize,
    /// Grid step in log-seconds.
    pub step: f64,
    pub bounds: Bounds,
    pub seed: u64,
    pub tail_mass_target: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_samples: 10_000, step: 0.002, bounds: Bounds::Auto, seed: 0, tail_mass_target: 1e-4 }
    }
}

impl McConfig {
    /// Grid bounds `(a, b)` for a route.
    pub fn resolve_bounds(&self, unc: &RouteUncertainty) -> (f64, f64) {
        match self.bounds {
            Bounds::Fixed { a, b } => (a, b),
            Bounds::Auto => {
                let half = DEFAULT_BOUND_SIGMAS * (unc.h2_hat + unc.sigma[0][0].max(0.0)).sqrt();
                (unc.h1_hat - half, unc.h1_hat + half)
            }
        }
    }
}

/// Discrete travel-time distribution on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimePmf {
    /// `(t_k seconds, q_k mass)`
    pub grid: Vec<(f64, f64)>,
    /// Mass before normalization.
    pub total_mass: f64,
    /// Fraction of `h2` draws discarded as non-positive.
    pub rejection_rate: f64,
}

impl TravelTimePmf {
    pub fn new(grid: Vec<(f64, f64)>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Reliability("empty pmf".into()));
        }
        if grid.windows(2).any(|w| w[1].0 <= w[0].0) || grid.iter().any(|&(_, q)| q < 0.0 || !q.is_finite()) {
            return Err(Error::Reliability("pmf grid must be increasing with non-negative mass".into()));
        }
        let total_mass = grid.iter().map(|g| g.1).sum();
        Ok(Self { grid, total_mass, rejection_rate: 0.0 })
    }

    /// Two-column CSV (`t_seconds,mass`) preceded by `#` comment lines.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&format!("# total_mass {}\n# rejection_rate {}\n", self.total_mass, self.rejection_rate));
        out.push_str("t_seconds,mass\n");
        for (t, q) in &self.grid {
            out.push_str(&format!("{t},{q}\n"));
        }
        out
    }
}

/// Draw `n` values of `h2 ~ N(h2*, σ2²)` restricted to `h2 > 0`.
/// Returns the draws and the fraction discarded.
pub fn sample_h2(unc: &RouteUncertainty, n: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    let sd = unc.sigma[1][1].max(0.0).sqrt();
    if sd == 0.0 {
        if unc.h2_hat <= 0.0 {
            return Err(Error::Reliability(format!("route log-variance {} is not positive", unc.h2_hat)));
        }
        return Ok((vec![unc.h2_hat; n], 0.0));
    }
    let mut r = rng::stream(seed, rng::MC_STREAM);
    let mut out = Vec::with_capacity(n);
    let mut rejected = 0usize;
    let cap = n.saturating_mul(20).max(1000);
    while out.len() < n {
        let x: f64 = StandardNormal.sample(&mut r);
        let h2 = unc.h2_hat + sd * x;
        if h2 > 0.0 {
            out.push(h2);
        } else {
            rejected += 1;
            if rejected > cap {
                break;
            }
        }
    }
    let rate = rejected as f64 / (rejected + out.len()) as f64;
    if out.len() < n || rate > MAX_REJECTION_RATE {
        return Err(Error::Reliability(format!(
            "{:.1}% of log-variance draws were non-positive; the route's uncertainty is too large \
             for its log-variance estimate (collect more data or check the covariance)",
            100.0 * rate
        )));
    }
    Ok((out, rate))
}

/// Discretized travel-time pmf for a route.
pub fn generate_pmf(unc: &RouteUncertainty, cfg: &McConfig) -> Result<TravelTimePmf> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidValue("n_samples must be at least 1".into()));
    }
    let (a, b) = cfg.resolve_bounds(unc);
    if !(a < b) || !(cfg.step > 0.0) {
        return Err(Error::InvalidValue(format!("bad grid [{a}, {b}] with step {}", cfg.step)));
    }
    if cfg.step > (b - a) / 100.0 {
        return Err(Error::InvalidValue(format!(
            "step {} is coarser than 1/100 of the grid width {}",
            cfg.step,
            b - a
        )));
    }
    let (draws, rejection_rate) = sample_h2(unc, cfg.n_samples, cfg.seed)?;
    let steps = ((b - a) / cfg.step + 1e-9).floor() as usize;
    let inv_n = 1.0 / draws.len() as f64;
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let z = a + k as f64 * cfg.step;
            let pz = draws.iter().map(|&h2| conditional_density_for(z, h2, unc)).sum::<f64>() * inv_n;
            (z.exp(), pz * cfg.step)
        })
        .collect();
    let total_mass: f64 = grid.iter().map(|g| g.1).sum();
    if (total_mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Reliability(format!(
            "grid captures mass {total_mass:.4}; widen the bounds or use a smaller step"
        )));
    }
    Ok(TravelTimePmf { grid, total_mass, rejection_rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub pct95_s: f64,
    pub pct15_s: f64,
    pub mean_s: f64,
    pub std_s: f64,
    pub coeff_var: f64,
    pub buffer_index: f64,
    /// 95th over 15th percentile (the 15th percentile stands in for free flow).
    pub planning_index: f64,
}

/// Percentile of a normalized pmf by cumulative mass, interpolating
/// linearly in `t` from the last grid point that carries mass.
pub fn percentile<T: Scalar>(grid: &[(T, T)], level: T) -> T {
    let mut cum = T::zero();
    let mut last: Option<(T, T)> = None;
    for &(t, q) in grid {
        let next = cum + q;
        if next >= level && q > T::zero() {
            return match last {
                None => t,
                Some((t0, c0)) => t0 + (level - c0) / (next - c0) * (t - t0),
            };
        }
        cum = next;
        if q > T::zero() {
            last = Some((t, cum));
        }
    }
    last.map(|(t, _)| t).unwrap_or(grid[grid.len() - 1].0)
}

/// Reliability measures of a pmf (renormalized to unit mass first).
pub fn measures<T: Scalar>(grid: &[(T, T)]) -> Result<ReliabilityReport> {
    let total = grid.iter().fold(T::zero(), |a, g| a + g.1);
    if grid.is_empty() || !(total > T::zero()) {
        return Err(Error::Reliability("empty pmf".into()));
    }
    let norm: Vec<(T, T)> = grid.iter().map(|&(t, q)| (t, q / total)).collect();
    let mean = norm.iter().fold(T::zero(), |a, &(t, q)| a + t * q);
    let second = norm.iter().fold(T::zero(), |a, &(t, q)| a + t * t * q);
    let std = (second - mean * mean).max(T::zero()).sqrt();
    let p95 = percentile(&norm, T::of(0.95));
    let p15 = percentile(&norm, T::of(0.15));
    Ok(ReliabilityReport {
        pct95_s: p95.as_f64(),
        pct15_s: p15.as_f64(),
        mean_s: mean.as_f64(),
        std_s: std.as_f64(),
        coeff_var: (std / mean).as_f64(),
        buffer_index: ((p95 - mean) / mean).as_f64(),
        planning_index: (p95 / p15).as_f64(),
    })
}

impl TravelTimePmf {
    pub fn measures(&self) -> Result<ReliabilityReport> {
        measures(&self.grid)
    }
}
