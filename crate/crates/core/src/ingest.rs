//! Observation logs, aggregation to sufficient statistics, and the
//! two-subset link collection schedule.
//!
//! Observation CSV (header required):
//!
//! ```text
//! kind,day,entity_id,value
//! link,2016-04-01,3,green
//! route,2016-04-04,1,251.0
//! ```
//!
//! Link values are `green`, `yellow`, `red`, `dark_red`, `1` or `0`;
//! green and yellow count as success. Route values are travel times in
//! seconds. Days are opaque labels compared as strings; sampling every
//! record at the same clock time is up to whoever collects the data.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkState {
    Green,
    Yellow,
    Red,
    DarkRed,
    Success,
    Failure,
}

impl LinkState {
    pub fn is_success(self) -> bool {
        matches!(self, LinkState::Green | LinkState::Yellow | LinkState::Success)
    }
}

impl FromStr for LinkState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "green" => Ok(LinkState::Green),
            "yellow" => Ok(LinkState::Yellow),
            "red" => Ok(LinkState::Red),
            "dark_red" | "darkred" => Ok(LinkState::DarkRed),
            "1" => Ok(LinkState::Success),
            "0" => Ok(LinkState::Failure),
            other => Err(format!("unknown link state {other:?}")),
        }
    }
}

impl fmt::Display for LinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkState::Green => "green",
            LinkState::Yellow => "yellow",
            LinkState::Red => "red",
            LinkState::DarkRed => "dark_red",
            LinkState::Success => "1",
            LinkState::Failure => "0",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkObservation {
    pub day: String,
    pub link_id: u32,
    pub state: LinkState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteObservation {
    pub day: String,
    pub route_id: u32,
    pub travel_time_s: f64,
}

/// Aggregated data for one link; `days` is sorted by day label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkData {
    pub successes: u64,
    pub trials: u64,
    pub days: Vec<(String, bool)>,
}

impl LinkData {
    pub fn sample_mean(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.successes as f64 / self.trials as f64)
    }
}

/// Log travel times of one route, ordered by day label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteData {
    pub days: Vec<String>,
    pub log_times: Vec<f64>,
}

impl RouteData {
    pub fn k(&self) -> usize {
        self.log_times.len()
    }

    /// `(k, mean, sum of squared deviations about the mean)` of the log times.
    pub fn moments(&self) -> (usize, f64, f64) {
        let k = self.log_times.len();
        if k == 0 {
            return (0, 0.0, 0.0);
        }
        let mean = self.log_times.iter().sum::<f64>() / k as f64;
        let ss = self.log_times.iter().map(|z| (z - mean) * (z - mean)).sum();
        (k, mean, ss)
    }
}

/// Sufficient statistics for the likelihood, indexed by parameter position
/// (links) and stored-route position (routes).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub links: Vec<LinkData>,
    pub routes: Vec<RouteData>,
    pub warnings: Vec<String>,
}

impl ObservationSet {
    pub fn empty(net: &NetworkModel) -> Self {
        Self {
            links: vec![LinkData::default(); net.p()],
            routes: vec![RouteData::default(); net.r()],
            warnings: Vec::new(),
        }
    }

    /// Aggregate raw records. With `strict`, a day carrying both link and
    /// route records is an error; otherwise it is kept with a warning.
    pub fn aggregate(
        net: &NetworkModel,
        link_obs: &[LinkObservation],
        route_obs: &[RouteObservation],
        strict: bool,
    ) -> Result<Self> {
        let mut link_days: Vec<BTreeMap<&str, bool>> = vec![BTreeMap::new(); net.p()];
        for o in link_obs {
            let j = net.link_index(o.link_id).ok_or(Error::UnknownLink(o.link_id))?;
            if link_days[j].insert(&o.day, o.state.is_success()).is_some() {
                return Err(Error::DuplicateObservation { kind: "link", id: o.link_id, day: o.day.clone() });
            }
        }
        let mut route_days: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); net.r()];
        for o in route_obs {
            let q = net.route_index(o.route_id).ok_or(Error::UnknownRoute(o.route_id))?;
            if !(o.travel_time_s > 0.0 && o.travel_time_s.is_finite()) {
                return Err(Error::InvalidValue(format!(
                    "route {} on {}: travel time must be positive, got {}",
                    o.route_id, o.day, o.travel_time_s
                )));
            }
            if route_days[q].insert(&o.day, o.travel_time_s).is_some() {
                return Err(Error::DuplicateObservation { kind: "route", id: o.route_id, day: o.day.clone() });
            }
        }

        let mut warnings = Vec::new();
        let link_day_set: BTreeSet<&str> = link_days.iter().flat_map(|m| m.keys().copied()).collect();
        let route_day_set: BTreeSet<&str> = route_days.iter().flat_map(|m| m.keys().copied()).collect();
        for day in link_day_set.intersection(&route_day_set) {
            if strict {
                return Err(Error::MixedDay(day.to_string()));
            }
            warnings.push(format!("day {day} carries both link and route records"));
        }

        let links = link_days
            .into_iter()
            .map(|m| {
                let successes = m.values().filter(|&&s| s).count() as u64;
                LinkData {
                    successes,
                    trials: m.len() as u64,
                    days: m.into_iter().map(|(d, s)| (d.to_string(), s)).collect(),
                }
            })
            .collect();
        let routes = route_days
            .into_iter()
            .map(|m| RouteData {
                days: m.keys().map(|d| d.to_string()).collect(),
                log_times: m.values().map(|t| t.ln()).collect(),
            })
            .collect();
        Ok(Self { links, routes, warnings })
    }

    /// Build directly from counts `(S_j, n_j)` and per-route log times.
    /// Day labels are synthesized.
    pub fn from_counts(net: &NetworkModel, counts: &[(u64, u64)], log_times: Vec<Vec<f64>>) -> Result<Self> {
        if counts.len() != net.p() || log_times.len() != net.r() {
            return Err(Error::InvalidValue(format!(
                "expected {} link counts and {} routes, got {} and {}",
                net.p(),
                net.r(),
                counts.len(),
                log_times.len()
            )));
        }
        let mut links = Vec::with_capacity(counts.len());
        for (j, &(s, n)) in counts.iter().enumerate() {
            if s > n {
                return Err(Error::InvalidValue(format!("link position {j}: {s} successes in {n} trials")));
            }
            links.push(LinkData {
                successes: s,
                trials: n,
                days: (0..n).map(|i| (format!("L{i:06}"), i < s)).collect(),
            });
        }
        let routes = log_times
            .into_iter()
            .map(|zs| RouteData {
                days: (0..zs.len()).map(|i| format!("R{i:06}")).collect(),
                log_times: zs,
            })
            .collect();
        Ok(Self { links, routes, warnings: Vec::new() })
    }

    pub fn successes(&self, j: usize) -> u64 {
        self.links[j].successes
    }

    pub fn trials(&self, j: usize) -> u64 {
        self.links[j].trials
    }

    pub fn route_k(&self, q: usize) -> usize {
        self.routes[q].k()
    }

    pub fn total_link_trials(&self) -> u64 {
        self.links.iter().map(|l| l.trials).sum()
    }

    pub fn total_route_obs(&self) -> usize {
        self.routes.iter().map(|r| r.k()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_link_trials() == 0 && self.total_route_obs() == 0
    }

    /// Same link data, no route data.
    pub fn link_only(&self) -> Self {
        Self {
            links: self.links.clone(),
            routes: vec![RouteData::default(); self.routes.len()],
            warnings: Vec::new(),
        }
    }

    /// Same route data, no link data.
    pub fn route_only(&self) -> Self {
        Self {
            links: vec![LinkData::default(); self.links.len()],
            routes: self.routes.clone(),
            warnings: Vec::new(),
        }
    }
}

/// Read observation records without validating against a network.
pub fn read_records(csv_text: &str) -> Result<(Vec<LinkObservation>, Vec<RouteObservation>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let headers = rdr.headers()?.clone();
    let expected = ["kind", "day", "entity_id", "value"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Observation { line: 1, msg: format!("expected header {}", expected.join(",")) });
    }
    let mut links = Vec::new();
    let mut routes = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let err = |msg: String| Error::Observation { line, msg };
        let day = rec[1].to_string();
        if day.is_empty() {
            return Err(err("empty day".into()));
        }
        let id: u32 = rec[2].parse().map_err(|_| err(format!("bad entity id {:?}", &rec[2])))?;
        match &rec[0] {
            "link" => {
                let state = rec[3].parse::<LinkState>().map_err(err)?;
                links.push(LinkObservation { day, link_id: id, state });
            }
            "route" => {
                let t: f64 = rec[3].parse().map_err(|_| err(format!("bad travel time {:?}", &rec[3])))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(err(format!("travel time must be positive, got {t}")));
                }
                routes.push(RouteObservation { day, route_id: id, travel_time_s: t });
            }
            other => return Err(err(format!("unknown record kind {other:?}"))),
        }
    }
    Ok((links, routes))
}

/// Parse an observation CSV and aggregate it against `net`.
pub fn parse_observations(csv_text: &str, net: &NetworkModel, strict: bool) -> Result<ObservationSet> {
    let (links, routes) = read_records(csv_text)?;
    ObservationSet::aggregate(net, &links, &routes, strict)
}

/// Render records in the observation CSV format, links first.
pub fn write_records(links: &[LinkObservation], routes: &[RouteObservation]) -> String {
    let mut out = String::from("kind,day,entity_id,value\n");
    for o in links {
        out.push_str(&format!("link,{},{},{}\n", o.day, o.link_id, o.state));
    }
    for o in routes {
        out.push_str(&format!("route,{},{},{}\n", o.day, o.route_id, o.travel_time_s));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    One,
    Two,
}

/// Partition of links into two collection subsets plus the subset
/// collected on each link day.
///
/// Schedule file (TOML):
///
/// ```toml
/// subset_1 = [1, 4]
/// subset_2 = [2, 3]
///
/// [days]
/// "2016-04-01" = 1
/// "2016-04-04" = 2
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSchedule {
    pub subset_1: Vec<u32>,
    pub subset_2: Vec<u32>,
    pub days: BTreeMap<String, Subset>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    subset_1: Vec<u32>,
    subset_2: Vec<u32>,
    #[serde(default)]
    days: BTreeMap<String, u8>,
}

impl SubsetSchedule {
    pub fn new(net: &NetworkModel, subset_1: Vec<u32>, subset_2: Vec<u32>, days: BTreeMap<String, Subset>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &id in subset_1.iter().chain(&subset_2) {
            net.link_by_id(id)?;
            if !seen.insert(id) {
                return Err(Error::Schedule(format!("link {id} listed more than once")));
            }
        }
        if let Some(l) = net.links().iter().find(|l| !seen.contains(&l.id)) {
            return Err(Error::Schedule(format!("link {} is in neither subset", l.id)));
        }
        Ok(Self { subset_1, subset_2, days })
    }

    pub fn parse(text: &str, net: &NetworkModel) -> Result<Self> {
        let file: ScheduleFile = toml::from_str(text).map_err(|e| Error::Schedule(e.to_string()))?;
        let days = file
            .days
            .into_iter()
            .map(|(d, s)| match s {
                1 => Ok((d, Subset::One)),
                2 => Ok((d, Subset::Two)),
                other => Err(Error::Schedule(format!("day {d}: subset must be 1 or 2, got {other}"))),
            })
            .collect::<Result<_>>()?;
        Self::new(net, file.subset_1, file.subset_2, days)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ScheduleFile {
            subset_1: self.subset_1.clone(),
            subset_2: self.subset_2.clone(),
            days: self
                .days
                .iter()
                .map(|(d, s)| (d.clone(), if *s == Subset::One { 1 } else { 2 }))
                .collect(),
        };
        toml::to_string(&file).expect("schedule serializes")
    }

    /// Split links by the side of a two-colouring of the node graph that
    /// their head node lands on. Consecutive links then always fall in
    /// different subsets. Fails when the node graph is not bipartite.
    pub fn two_coloring(net: &NetworkModel) -> Result<Self> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for l in net.links() {
            adj.entry(&l.from).or_default().push(&l.to);
            adj.entry(&l.to).or_default().push(&l.from);
        }
        let mut color: BTreeMap<&str, bool> = BTreeMap::new();
        for &start in adj.keys() {
            if color.contains_key(start) {
                continue;
            }
            color.insert(start, false);
            let mut queue = VecDeque::from([start]);
            while let Some(n) = queue.pop_front() {
                let c = color[n];
                for &m in &adj[n] {
                    match color.get(m) {
                        Some(&cm) if cm == c => {
                            return Err(Error::Schedule(format!(
                                "node graph is not bipartite (odd cycle through {n} and {m})"
                            )))
                        }
                        Some(_) => {}
                        None => {
                            color.insert(m, !c);
                            queue.push_back(m);
                        }
                    }
                }
            }
        }
        let (one, two): (Vec<_>, Vec<_>) = net.links().iter().partition(|l| !color[l.to.as_str()]);
        Ok(Self {
            subset_1: one.iter().map(|l| l.id).collect(),
            subset_2: two.iter().map(|l| l.id).collect(),
            days: BTreeMap::new(),
        })
    }

    pub fn subset_of(&self, link_id: u32) -> Option<Subset> {
        if self.subset_1.contains(&link_id) {
            Some(Subset::One)
        } else if self.subset_2.contains(&link_id) {
            Some(Subset::Two)
        } else {
            None
        }
    }

    pub fn members(&self, s: Subset) -> &[u32] {
        match s {
            Subset::One => &self.subset_1,
            Subset::Two => &self.subset_2,
        }
    }
}

/// Two links are directly connected when one can be driven straight
/// after the other.
pub fn directly_connected(a: &crate::netmodel::Link, b: &crate::netmodel::Link) -> bool {
    a.to == b.from || b.to == a.from
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Two directly connected links placed in the same subset.
    Adjacent { subset: Subset, link_a: u32, link_b: u32 },
    /// A day with link records from both subsets.
    CrossSubsetDay { day: String, subset_1_links: usize, subset_2_links: usize },
    /// A link recorded on a day assigned to the other subset.
    OffSchedule { day: String, link: u32 },
    /// A link day that the schedule does not assign.
    UnscheduledDay { day: String },
    /// A day with both link and route records.
    MixedDay { day: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Adjacent { subset, link_a, link_b } => {
                write!(f, "links {link_a} and {link_b} are directly connected but both in {subset:?}")
            }
            Violation::CrossSubsetDay { day, subset_1_links, subset_2_links } => write!(
                f,
                "day {day} has records from both subsets ({subset_1_links} and {subset_2_links} links)"
            ),
            Violation::OffSchedule { day, link } => {
                write!(f, "link {link} recorded on {day}, which belongs to the other subset")
            }
            Violation::UnscheduledDay { day } => write!(f, "link day {day} is not in the schedule"),
            Violation::MixedDay { day } => write!(f, "day {day} has both link and route records"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplianceReport {
    pub violations: Vec<Violation>,
}

impl ComplianceReport {
    pub fn is_compliant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit observations against the two-subset collection discipline.
pub fn check_schedule(net: &NetworkModel, obs: &ObservationSet, sched: &SubsetSchedule) -> ComplianceReport {
    let mut violations = Vec::new();
    for subset in [Subset::One, Subset::Two] {
        let members = sched.members(subset);
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let (Ok(la), Ok(lb)) = (net.link_by_id(a), net.link_by_id(b)) else { continue };
                if directly_connected(la, lb) {
                    violations.push(Violation::Adjacent { subset, link_a: a.min(b), link_b: a.max(b) });
                }
            }
        }
    }

    let mut by_day: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut off = Vec::new();
    let mut unscheduled = BTreeSet::new();
    for (j, data) in obs.links.iter().enumerate() {
        let link = &net.links()[j];
        let Some(home) = sched.subset_of(link.id) else { continue };
        for (day, _) in &data.days {
            let e = by_day.entry(day).or_default();
            match home {
                Subset::One => e.0 += 1,
                Subset::Two => e.1 += 1,
            }
            match sched.days.get(day) {
                Some(&s) if s != home => off.push(Violation::OffSchedule { day: day.clone(), link: link.id }),
                Some(_) => {}
                None if !sched.days.is_empty() => {
                    unscheduled.insert(day.clone());
                }
                None => {}
            }
        }
    }
    for (day, &(one, two)) in &by_day {
        if one > 0 && two > 0 {
            violations.push(Violation::CrossSubsetDay { day: day.to_string(), subset_1_links: one, subset_2_links: two });
        }
    }
    violations.extend(off);
    violations.extend(unscheduled.into_iter().map(|day| Violation::UnscheduledDay { day }));

    let route_days: BTreeSet<&str> = obs.routes.iter().flat_map(|r| r.days.iter().map(String::as_str)).collect();
    for day in by_day.keys() {
        if route_days.contains(day) {
            violations.push(Violation::MixedDay { day: day.to_string() });
        }
    }
    ComplianceReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::SpeedPair;

    fn square() -> NetworkModel {
        // A -> B -> C -> D -> A, one route around two sides
        NetworkModel::new(
            SpeedPair::new(10.0, 5.0).unwrap(),
            vec![
                (1, "A".into(), "B".into(), 100.0),
                (2, "B".into(), "C".into(), 100.0),
                (3, "C".into(), "D".into(), 100.0),
                (4, "D".into(), "A".into(), 100.0),
            ],
            vec![(1, vec![1, 2])],
        )
        .unwrap()
    }

    #[test]
    fn color_counts() {
        let net = square();
        let csv = "kind,day,entity_id,value\nlink,d1,1,green\nlink,d2,1,yellow\nlink,d3,1,red\n";
        let obs = parse_observations(csv, &net, true).unwrap();
        assert_eq!((obs.successes(0), obs.trials(0)), (2, 3));
        assert_eq!(obs.trials(1), 0);
    }

    #[test]
    fn rejects_non_positive_travel_time() {
        let net = square();
        let csv = "kind,day,entity_id,value\nroute,d1,1,-5\n";
        assert!(matches!(parse_observations(csv, &net, true), Err(Error::Observation { .. })));
    }

    #[test]
    fn rejects_unknown_and_duplicates() {
        let net = square();
        let unknown = "kind,day,entity_id,value\nlink,d1,9,green\n";
        assert!(matches!(parse_observations(unknown, &net, true), Err(Error::UnknownLink(9))));
        let unknown_route = "kind,day,entity_id,value\nroute,d1,9,10\n";
        assert!(matches!(parse_observations(unknown_route, &net, true), Err(Error::UnknownRoute(9))));
        let dup = "kind,day,entity_id,value\nlink,d1,1,green\nlink,d1,1,red\n";
        assert!(matches!(
            parse_observations(dup, &net, true),
            Err(Error::DuplicateObservation { kind: "link", id: 1, .. })
        ));
        let dup_route = "kind,day,entity_id,value\nroute,d1,1,10\nroute,d1,1,11\n";
        assert!(matches!(
            parse_observations(dup_route, &net, true),
            Err(Error::DuplicateObservation { kind: "route", .. })
        ));
    }

    #[test]
    fn mixed_day_strict_and_lenient() {
        let net = square();
        let csv = "kind,day,entity_id,value\nlink,d1,1,green\nroute,d1,1,30\n";
        assert!(matches!(parse_observations(csv, &net, true), Err(Error::MixedDay(_))));
        let obs = parse_observations(csv, &net, false).unwrap();
        assert_eq!(obs.warnings.len(), 1);
        assert_eq!(obs.route_k(0), 1);
    }

    #[test]
    fn bad_header_and_state() {
        let net = square();
        assert!(parse_observations("a,b,c,d\n", &net, true).is_err());
        let csv = "kind,day,entity_id,value\nlink,d1,1,purple\n";
        assert!(matches!(parse_observations(csv, &net, true), Err(Error::Observation { .. })));
    }

    #[test]
    fn records_round_trip() {
        let links = vec![
            LinkObservation { day: "d1".into(), link_id: 1, state: LinkState::DarkRed },
            LinkObservation { day: "d2".into(), link_id: 2, state: LinkState::Success },
        ];
        let routes = vec![RouteObservation { day: "d3".into(), route_id: 1, travel_time_s: 41.25 }];
        let (l, r) = read_records(&write_records(&links, &routes)).unwrap();
        assert_eq!(l, links);
        assert_eq!(r, routes);
    }

    #[test]
    fn schedule_validation() {
        let net = square();
        assert!(SubsetSchedule::new(&net, vec![1, 3], vec![2], BTreeMap::new()).is_err());
        assert!(SubsetSchedule::new(&net, vec![1, 3], vec![2, 4, 1], BTreeMap::new()).is_err());
        assert!(SubsetSchedule::new(&net, vec![1, 3], vec![2, 4], BTreeMap::new()).is_ok());
        let text = "subset_1 = [1, 3]\nsubset_2 = [2, 4]\n[days]\nd1 = 1\nd2 = 3\n";
        assert!(SubsetSchedule::parse(text, &net).is_err());
    }

    #[test]
    fn compliant_log_has_no_violations() {
        let net = square();
        let sched = SubsetSchedule::two_coloring(&net).unwrap();
        let mut days = BTreeMap::new();
        days.insert("d1".to_string(), Subset::One);
        days.insert("d2".to_string(), Subset::Two);
        let sched = SubsetSchedule { days, ..sched };
        let mut links = Vec::new();
        for (day, s) in &sched.days {
            for &id in sched.members(*s) {
                links.push(LinkObservation { day: day.clone(), link_id: id, state: LinkState::Green });
            }
        }
        let routes = vec![RouteObservation { day: "r1".into(), route_id: 1, travel_time_s: 25.0 }];
        let obs = ObservationSet::aggregate(&net, &links, &routes, true).unwrap();
        let report = check_schedule(&net, &obs, &sched);
        assert!(report.is_compliant(), "{:?}", report.violations);
    }

    #[test]
    fn adjacency_violation() {
        let net = square();
        let sched = SubsetSchedule::new(&net, vec![1, 2], vec![3, 4], BTreeMap::new()).unwrap();
        let report = check_schedule(&net, &ObservationSet::empty(&net), &sched);
        assert!(report
            .violations
            .contains(&Violation::Adjacent { subset: Subset::One, link_a: 1, link_b: 2 }));
    }

    #[test]
    fn mixing_and_cross_subset_violations() {
        let net = square();
        let sched = SubsetSchedule::two_coloring(&net).unwrap();
        let a = sched.subset_1[0];
        let b = sched.subset_2[0];
        let links = vec![
            LinkObservation { day: "d1".into(), link_id: a, state: LinkState::Green },
            LinkObservation { day: "d1".into(), link_id: b, state: LinkState::Red },
        ];
        let routes = vec![RouteObservation { day: "d1".into(), route_id: 1, travel_time_s: 25.0 }];
        let obs = ObservationSet::aggregate(&net, &links, &routes, false).unwrap();
        let report = check_schedule(&net, &obs, &sched);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::MixedDay { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::CrossSubsetDay { .. })));
    }

    #[test]
    fn two_coloring_splits_consecutive_links() {
        let net = square();
        let s = SubsetSchedule::two_coloring(&net).unwrap();
        assert_eq!(s.subset_1.len() + s.subset_2.len(), 4);
        for sub in [Subset::One, Subset::Two] {
            let m = s.members(sub);
            for (i, &a) in m.iter().enumerate() {
                for &b in &m[i + 1..] {
                    assert!(!directly_connected(net.link_by_id(a).unwrap(), net.link_by_id(b).unwrap()));
                }
            }
        }
        let tri = NetworkModel::new(
            SpeedPair::new(2.0, 1.0).unwrap(),
            vec![(1, "A".into(), "B".into(), 1.0), (2, "B".into(), "C".into(), 1.0), (3, "C".into(), "A".into(), 1.0)],
            vec![],
        )
        .unwrap();
        assert!(SubsetSchedule::two_coloring(&tri).is_err());
    }
}
