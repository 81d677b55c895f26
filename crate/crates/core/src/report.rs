//! Human-readable tables. Times are shown in minutes with two decimals.

use serde::{Deserialize, Serialize};

use crate::estimator::{FitResult, ValidationReport};
use crate::ingest::ObservationSet;
use crate::netmodel::NetworkModel;
use crate::reliability::ReliabilityReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub link_id: u32,
    pub trials: u64,
    pub sample_mean: Option<f64>,
    pub mle: f64,
    /// `(mle - sample_mean) / sample_mean` in percent.
    pub relative_difference_pct: Option<f64>,
}

pub fn estimate_rows(net: &NetworkModel, obs: &ObservationSet, fit: &FitResult) -> Vec<EstimateRow> {
    net.links()
        .iter()
        .enumerate()
        .map(|(j, link)| {
            let sample_mean = obs.links[j].sample_mean();
            let mle = fit.theta_hat.0[j];
            EstimateRow {
                link_id: link.id,
                trials: obs.trials(j),
                sample_mean,
                mle,
                relative_difference_pct: sample_mean.filter(|&m| m > 0.0).map(|m| 100.0 * (mle - m) / m),
            }
        })
        .collect()
}

pub fn estimates_table(rows: &[EstimateRow]) -> String {
    let mut out = format!("{:>8} | {:>11} | {:>6} | {:>19}\n", "Link No.", "Sample Mean", "MLE", "Relative Difference");
    out.push_str(&format!("{}\n", "-".repeat(53)));
    for r in rows {
        let mean = r.sample_mean.map(|m| format!("{m:.2}")).unwrap_or_else(|| "n/a".into());
        let diff = r.relative_difference_pct.map(|d| format!("{d:.1}%")).unwrap_or_else(|| "n/a".into());
        out.push_str(&format!("{:>8} | {:>11} | {:>6.2} | {:>19}\n", r.link_id, mean, r.mle, diff));
    }
    out
}

fn minutes(s: f64) -> String {
    format!("{:.2} min", s / 60.0)
}

/// Reliability measures side by side, one column per `(title, report)`.
pub fn reliability_table(columns: &[(&str, &ReliabilityReport)]) -> String {
    let rows: [(&str, fn(&ReliabilityReport) -> String); 6] = [
        ("95th percentile travel time", |r| minutes(r.pct95_s)),
        ("Mean travel time", |r| minutes(r.mean_s)),
        ("Standard deviation", |r| minutes(r.std_s)),
        ("Coefficient of variation", |r| format!("{:.2}", r.coeff_var)),
        ("Buffer index", |r| format!("{:.2}", r.buffer_index)),
        ("Planning time index", |r| format!("{:.2}", r.planning_index)),
    ];
    let width = columns.iter().map(|c| c.0.len()).max().unwrap_or(0).max(12);
    let mut out = format!("{:<28}", "Measures");
    for (title, _) in columns {
        out.push_str(&format!(" | {title:>width$}"));
    }
    out.push('\n');
    out.push_str(&format!("{}\n", "-".repeat(28 + columns.len() * (width + 3))));
    for (name, f) in rows {
        out.push_str(&format!("{name:<28}"));
        for (_, r) in columns {
            out.push_str(&format!(" | {:>width$}", f(r)));
        }
        out.push('\n');
    }
    out
}

pub fn validation_table(v: &ValidationReport) -> String {
    let mut out = format!("Validation on route {}\n", v.route_id);
    out.push_str(&format!("{:<28} | {:>13} | {:>35}\n", "", "Mean estimate", "Standard deviation of mean estimate"));
    out.push_str(&format!("{}\n", "-".repeat(84)));
    for (name, m) in [
        ("Our method (MLE)", &v.mle),
        ("Training data (sample mean)", &v.training),
        ("Testing data (sample mean)", &v.testing),
    ] {
        out.push_str(&format!("{name:<28} | {:>13} | {:>35}\n", minutes(m.mean_s), minutes(m.std_of_mean_s)));
    }
    out.push_str(&format!(
        "MLE within 1 testing SE: {}; within 2 testing SE: {}\n",
        if v.within_one_se { "yes" } else { "no" },
        if v.within_two_se { "yes" } else { "no" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::MeanEstimate;

    #[test]
    fn estimate_table_layout() {
        let rows = vec![
            EstimateRow { link_id: 46, trials: 12, sample_mean: Some(1.0), mle: 0.798, relative_difference_pct: Some(-20.2) },
            EstimateRow { link_id: 2, trials: 0, sample_mean: None, mle: 0.54, relative_difference_pct: None },
        ];
        let t = estimates_table(&rows);
        assert!(t.starts_with("Link No. | Sample Mean |    MLE | Relative Difference"));
        assert!(t.contains("      46 |        1.00 |   0.80 |              -20.2%"));
        assert!(t.contains("n/a"));
    }

    #[test]
    fn reliability_table_in_minutes() {
        let r = ReliabilityReport {
            pct95_s: 264.6,
            pct15_s: 208.3,
            mean_s: 230.0,
            std_s: 20.4,
            coeff_var: 0.0887,
            buffer_index: 0.1504,
            planning_index: 1.2703,
        };
        let t = reliability_table(&[("Route 1 (model)", &r)]);
        assert!(t.contains("4.41 min"));
        assert!(t.contains("0.34 min"));
        assert!(t.contains("0.09"));
        assert!(t.contains("0.15"));
        assert!(t.contains("1.27"));
    }

    #[test]
    fn validation_has_three_rows() {
        let m = |mean_s, sd| MeanEstimate { mean_s, std_of_mean_s: sd, n: 27 };
        let v = ValidationReport {
            route_id: 1,
            mle: m(618.0, 6.0),
            training: m(628.8, 12.0),
            testing: m(609.0, 10.8),
            within_one_se: true,
            within_two_se: true,
            converged: true,
        };
        let t = validation_table(&v);
        assert!(t.contains("Our method (MLE)") && t.contains("Training data") && t.contains("Testing data"));
        assert!(t.contains("10.30 min") && t.contains("0.10 min"));
    }
}
