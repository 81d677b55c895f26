//! Independence diagnostics for link data: Barnard's unconditional exact
//! test on 2×2 tables of link-pair states, with a Bonferroni summary.
//!
//! The table for a pair (i, j) over their shared days is
//!
//! ```text
//!                 j success   j failure
//! i success           a           b        n1 = a + b
//! i failure           c           d        n2 = c + d
//! ```
//!
//! Rows are treated as two independent binomial samples with a common
//! success probability π under the null. The statistic is the pooled-variance
//! score `T = (a/n1 - c/n2) / sqrt(π̂ (1-π̂) (1/n1 + 1/n2))`, and the p-value is
//! the largest, over a uniform grid of π, probability of `|T| ≥ |T_obs|`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ObservationSet, Subset, SubsetSchedule};
use crate::netmodel::NetworkModel;

pub const DEFAULT_GRID_RESOLUTION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoByTwoTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl TwoByTwoTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn n1(&self) -> u64 {
        self.a + self.b
    }

    pub fn n2(&self) -> u64 {
        self.c + self.d
    }

    /// Swap the two rows.
    pub fn swap_rows(&self) -> Self {
        Self { a: self.c, b: self.d, c: self.a, d: self.b }
    }

    /// Cross-tabulate two links over their shared days. `first` gives the rows.
    pub fn from_days(first: &[(String, bool)], second: &[(String, bool)]) -> Self {
        let other: BTreeMap<&str, bool> = second.iter().map(|(d, s)| (d.as_str(), *s)).collect();
        let mut t = Self::new(0, 0, 0, 0);
        for (day, s1) in first {
            if let Some(&s2) = other.get(day.as_str()) {
                match (s1, s2) {
                    (true, true) => t.a += 1,
                    (true, false) => t.b += 1,
                    (false, true) => t.c += 1,
                    (false, false) => t.d += 1,
                }
            }
        }
        t
    }
}

/// Pooled-variance score statistic for `x1` of `n1` against `x2` of `n2`.
pub fn score_statistic(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let var = pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f);
    if var <= 0.0 {
        return 0.0;
    }
    (x1 as f64 / n1f - x2 as f64 / n2f) / var.sqrt()
}

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Barnard's exact p-value with a nuisance grid `{1/R, 2/R, …, 1 - 1/R}`.
pub fn barnard_p(table: &TwoByTwoTable, grid_resolution: usize) -> Result<f64> {
    let table = if (table.n1(), table.a) > (table.n2(), table.c) { table.swap_rows() } else { *table };
    let (n1, n2) = (table.n1(), table.n2());
    if n1 == 0 || n2 == 0 {
        return Err(Error::DegenerateMargin { n1, n2 });
    }
    if grid_resolution < 100 {
        return Err(Error::InvalidValue(format!("grid resolution must be at least 100, got {grid_resolution}")));
    }
    let t_obs = score_statistic(table.a, n1, table.c, n2).abs();
    let cutoff = t_obs * (1.0 - 1e-12);

    // Weight of the rejection region per total successes x, as a fraction
    // of C(n, x); P_π(region) is then Σ_x frac_x · Binom(n, π)(x).
    let n = n1 + n2;
    let lf = ln_factorials(n);
    let ln_choose = |m: u64, k: u64| lf[m as usize] - lf[k as usize] - lf[(m - k) as usize];
    let mut frac = vec![0.0f64; n as usize + 1];
    for x1 in 0..=n1 {
        for x2 in 0..=n2 {
            if score_statistic(x1, n1, x2, n2).abs() >= cutoff {
                let x = x1 + x2;
                frac[x as usize] += (ln_choose(n1, x1) + ln_choose(n2, x2) - ln_choose(n, x)).exp();
            }
        }
    }

    let mut best = 0.0f64;
    for i in 1..grid_resolution {
        let pi = i as f64 / grid_resolution as f64;
        let (lp, lq) = (pi.ln(), (-pi).ln_1p());
        let prob: f64 = frac
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0.0)
            .map(|(x, &f)| f * (ln_choose(n, x as u64) + x as f64 * lp + (n - x as u64) as f64 * lq).exp())
            .sum();
        best = best.max(prob);
    }
    Ok(best.min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub link_i: u32,
    pub link_j: u32,
    pub shared_days: u64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub pairs: Vec<PairResult>,
    pub threshold: f64,
    pub bonferroni_level: f64,
    pub fraction_below_threshold: f64,
    pub min_p: f64,
    /// Pairs that could not be tested, with the reason.
    pub skipped: Vec<(u32, u32, String)>,
}

impl IndependenceReport {
    pub fn bonferroni_rejects(&self) -> bool {
        self.min_p < self.bonferroni_level
    }

    pub fn below_threshold(&self) -> usize {
        self.pairs.iter().filter(|p| p.p_value < self.threshold).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("link_i,link_j,shared_days,p_value\n");
        for p in &self.pairs {
            out.push_str(&format!("{},{},{},{}\n", p.link_i, p.link_j, p.shared_days, p.p_value));
        }
        out
    }

    pub fn summary(&self) -> String {
        let n = self.pairs.len();
        let verdict = if n == 0 {
            "no pairs could be tested".to_string()
        } else if self.bonferroni_rejects() {
            format!(
                "smallest p-value {:.4} is below the Bonferroni level {:.6}: independence rejected for at least one pair",
                self.min_p, self.bonferroni_level
            )
        } else {
            format!(
                "smallest p-value {:.4} exceeds the Bonferroni level {:.6}: consistent with independence",
                self.min_p, self.bonferroni_level
            )
        };
        format!(
            "pairs tested: {n}\nskipped: {}\nbelow {}: {} of {n} ({:.1}%)\n{verdict}\n",
            self.skipped.len(),
            self.threshold,
            self.below_threshold(),
            100.0 * self.fraction_below_threshold
        )
    }
}

/// Test every within-subset link pair. Tables use the lower link id as the
/// row variable, so the result does not depend on pair order. The number of
/// pairs is `C(|S1|, 2) + C(|S2|, 2)` minus the skipped ones.
pub fn test_subset(
    net: &NetworkModel,
    obs: &ObservationSet,
    sched: &SubsetSchedule,
    threshold: f64,
    grid_resolution: usize,
) -> Result<IndependenceReport> {
    let mut candidates = Vec::new();
    for subset in [Subset::One, Subset::Two] {
        let mut ids = sched.members(subset).to_vec();
        ids.sort_unstable();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                candidates.push((a, b));
            }
        }
    }
    let results: Vec<std::result::Result<PairResult, (u32, u32, String)>> = candidates
        .par_iter()
        .map(|&(a, b)| {
            let ia = net.link_index(a).ok_or_else(|| (a, b, format!("unknown link {a}")))?;
            let ib = net.link_index(b).ok_or_else(|| (a, b, format!("unknown link {b}")))?;
            let table = TwoByTwoTable::from_days(&obs.links[ia].days, &obs.links[ib].days);
            let shared = table.n1() + table.n2();
            if shared < 2 {
                return Err((a, b, format!("{shared} shared days")));
            }
            barnard_p(&table, grid_resolution)
                .map(|p_value| PairResult { link_i: a, link_j: b, shared_days: shared, p_value })
                .map_err(|e| (a, b, e.to_string()))
        })
        .collect();

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(p) => pairs.push(p),
            Err(s) => {
                log::info!("skipping pair {}-{}: {}", s.0, s.1, s.2);
                skipped.push(s);
            }
        }
    }
    let n = pairs.len();
    let below = pairs.iter().filter(|p| p.p_value < threshold).count();
    Ok(IndependenceReport {
        min_p: pairs.iter().map(|p| p.p_value).fold(1.0, f64::min),
        fraction_below_threshold: if n > 0 { below as f64 / n as f64 } else { 0.0 },
        bonferroni_level: if n > 0 { threshold / n as f64 } else { threshold },
        threshold,
        pairs,
        skipped,
    })
}
