//! Synthetic observations generated under the model's own assumptions.
//!
//! Link states are independent Bernoulli draws. Route travel times are
//! log-normal with the bridge parameters of the true probabilities, or, for
//! misspecification experiments, sums of per-link times under simulated
//! link states.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::bridge::eval_route;
use crate::error::{Error, Result};
use crate::ingest::{LinkObservation, LinkState, RouteObservation, Subset, SubsetSchedule};
use crate::likelihood::ParamVector;
use crate::netmodel::NetworkModel;
use crate::rng;

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub theta_star: ParamVector,
    pub net: NetworkModel,
    pub seed: u64,
}

impl GroundTruth {
    pub fn new(net: NetworkModel, theta_star: Vec<f64>, seed: u64) -> Result<Self> {
        if theta_star.len() != net.p() {
            return Err(Error::InvalidValue(format!(
                "{} probabilities for {} links",
                theta_star.len(),
                net.p()
            )));
        }
        if let Some(r) = theta_star.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidValue(format!("probability {r} outside [0, 1]")));
        }
        Ok(Self { theta_star: ParamVector(theta_star), net, seed })
    }
}

pub fn link_day(i: usize) -> String {
    format!("L{i:05}")
}

pub fn route_day(i: usize) -> String {
    format!("R{i:05}")
}

#[derive(Debug, Clone)]
pub struct LinkSimulation {
    pub records: Vec<LinkObservation>,
    /// The partition with its day assignments filled in, when one was given.
    pub schedule: Option<SubsetSchedule>,
}

/// Simulate `n_days` link days. Without a partition every link is observed
/// every day; with one, days alternate between subset 1 and subset 2.
pub fn simulate_links(gt: &GroundTruth, n_days: usize, partition: Option<&SubsetSchedule>) -> LinkSimulation {
    let net = &gt.net;
    let mut r = rng::stream(gt.seed, rng::LINK_STREAM);
    let mut records = Vec::new();
    let mut days = BTreeMap::new();
    for d in 0..n_days {
        let day = link_day(d);
        let members: Vec<usize> = match partition {
            None => (0..net.p()).collect(),
            Some(s) => {
                let subset = if d % 2 == 0 { Subset::One } else { Subset::Two };
                days.insert(day.clone(), subset);
                s.members(subset).iter().filter_map(|&id| net.link_index(id)).collect()
            }
        };
        for j in members {
            let up = r.random_bool(gt.theta_star.0[j]);
            records.push(LinkObservation {
                day: day.clone(),
                link_id: net.links()[j].id,
                state: if up { LinkState::Green } else { LinkState::Red },
            });
        }
    }
    LinkSimulation {
        records,
        schedule: partition.map(|s| SubsetSchedule { days, ..s.clone() }),
    }
}

/// Log-normal route travel times, one per stored route per day. Each route
/// has its own stream, so adding routes leaves the others unchanged.
pub fn simulate_routes(gt: &GroundTruth, k_days: usize) -> Vec<RouteObservation> {
    let net = &gt.net;
    let mut per_route = Vec::with_capacity(net.r());
    for (q, route) in net.routes().iter().enumerate() {
        let b = eval_route(net, route, gt.theta_star.as_slice());
        let mut r = rng::stream(gt.seed, rng::ROUTE_STREAM + q as u64);
        let times: Vec<f64> = if b.h2 > 0.0 {
            let normal = Normal::new(b.h1, b.h2.sqrt()).expect("finite parameters");
            (0..k_days).map(|_| normal.sample(&mut r).exp()).collect()
        } else {
            log::warn!("route {} has no travel-time variance; emitting constant times", route.id);
            vec![b.mean; k_days]
        };
        per_route.push(times);
    }
    let mut out = Vec::with_capacity(net.r() * k_days);
    for d in 0..k_days {
        for (q, route) in net.routes().iter().enumerate() {
            out.push(RouteObservation { day: route_day(d), route_id: route.id, travel_time_s: per_route[q][d] });
        }
    }
    out
}

/// Route times as sums of per-link times under simulated link states.
/// Link states are shared by all routes on a day.
pub fn simulate_routes_link_sum(gt: &GroundTruth, k_days: usize) -> Vec<RouteObservation> {
    let net = &gt.net;
    let mut r = rng::stream(gt.seed, rng::ROUTE_STREAM - 1);
    let mut out = Vec::with_capacity(net.r() * k_days);
    for d in 0..k_days {
        let up: Vec<bool> = gt.theta_star.0.iter().map(|&p| r.random_bool(p)).collect();
        for route in net.routes() {
            let t = route
                .links
                .iter()
                .map(|&j| if up[j] { net.link_free_time(j) } else { net.link_congested_time(j) })
                .sum();
            out.push(RouteObservation { day: route_day(d), route_id: route.id, travel_time_s: t });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{check_schedule, ObservationSet};
    use crate::netmodel::SpeedPair;

    fn single() -> NetworkModel {
        NetworkModel::new(SpeedPair::new(10.0, 5.0).unwrap(), vec![(1, "A".into(), "B".into(), 1000.0)], vec![(1, vec![1])])
            .unwrap()
    }

    fn square() -> NetworkModel {
        NetworkModel::new(
            SpeedPair::new(10.0, 5.0).unwrap(),
            vec![
                (1, "A".into(), "B".into(), 100.0),
                (2, "B".into(), "C".into(), 120.0),
                (3, "C".into(), "D".into(), 140.0),
                (4, "D".into(), "A".into(), 160.0),
            ],
            vec![(1, vec![1, 2]), (2, vec![3, 4])],
        )
        .unwrap()
    }

    #[test]
    fn certain_links_are_green() {
        let gt = GroundTruth::new(single(), vec![1.0], 3).unwrap();
        let sim = simulate_links(&gt, 50, None);
        assert_eq!(sim.records.len(), 50);
        assert!(sim.records.iter().all(|o| o.state == LinkState::Green));
        let times = simulate_routes(&gt, 20);
        assert!(times.iter().all(|o| o.travel_time_s == 100.0));
    }

    #[test]
    fn bernoulli_rate() {
        let gt = GroundTruth::new(single(), vec![0.5], 11).unwrap();
        let sim = simulate_links(&gt, 10_000, None);
        let mean = sim.records.iter().filter(|o| o.state.is_success()).count() as f64 / 1e4;
        assert!((mean - 0.5).abs() < 0.015, "{mean}");
    }

    #[test]
    fn scheduled_output_is_compliant() {
        let net = square();
        let partition = SubsetSchedule::two_coloring(&net).unwrap();
        let gt = GroundTruth::new(net.clone(), vec![0.7, 0.6, 0.8, 0.9], 5).unwrap();
        let sim = simulate_links(&gt, 30, Some(&partition));
        let routes = simulate_routes(&gt, 10);
        let obs = ObservationSet::aggregate(&net, &sim.records, &routes, true).unwrap();
        let sched = sim.schedule.unwrap();
        assert_eq!(sched.days.len(), 30);
        let report = check_schedule(&net, &obs, &sched);
        assert!(report.is_compliant(), "{:?}", report.violations);
    }

    #[test]
    fn streams_are_independent_of_route_count() {
        let net = square();
        let gt = GroundTruth::new(net.clone(), vec![0.7, 0.6, 0.8, 0.9], 5).unwrap();
        let fewer = NetworkModel::new(
            net.speeds(),
            net.links().iter().map(|l| (l.id, l.from.clone(), l.to.clone(), l.length_m)).collect(),
            vec![(1, vec![1, 2])],
        )
        .unwrap();
        let gt_fewer = GroundTruth::new(fewer, vec![0.7, 0.6, 0.8, 0.9], 5).unwrap();
        assert_eq!(simulate_links(&gt, 10, None).records, simulate_links(&gt_fewer, 10, None).records);
        let both: Vec<f64> = simulate_routes(&gt, 10).iter().filter(|o| o.route_id == 1).map(|o| o.travel_time_s).collect();
        let one: Vec<f64> = simulate_routes(&gt_fewer, 10).iter().map(|o| o.travel_time_s).collect();
        assert_eq!(both, one);
    }

    #[test]
    fn link_sum_times_take_two_values_per_link() {
        let gt = GroundTruth::new(single(), vec![0.3], 2).unwrap();
        for o in simulate_routes_link_sum(&gt, 100) {
            assert!(o.travel_time_s == 100.0 || o.travel_time_s == 200.0);
        }
    }

    #[test]
    fn rejects_bad_truth() {
        assert!(GroundTruth::new(single(), vec![1.5], 0).is_err());
        assert!(GroundTruth::new(single(), vec![0.5, 0.5], 0).is_err());
    }
}
