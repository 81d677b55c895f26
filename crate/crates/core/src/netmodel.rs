//! Directed road network: links, routes and the two-speed regime.
//!
//! A network file is TOML with three sections:
//!
//! ```toml
//! [speeds]
//! v_mps = 10.0        # mean speed on an uncongested link
//! v_prime_mps = 5.0   # mean speed on a congested link
//!
//! [[links]]
//! id = 1
//! from = "A"
//! to = "B"
//! length_m = 1000.0
//!
//! [[routes]]
//! id = 1
//! link_ids = [1]
//! ```
//!
//! Link ids are arbitrary unique integers; the position of a link in the
//! file is its position in the parameter vector. Opposite directions of a
//! street are two separate links. Unknown keys (for instance a per-link
//! speed) are rejected.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedPair {
    pub v_mps: f64,
    pub v_prime_mps: f64,
}

impl SpeedPair {
    pub fn new(v_mps: f64, v_prime_mps: f64) -> Result<Self> {
        let s = Self { v_mps, v_prime_mps };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.v_prime_mps > 0.0 && self.v_prime_mps.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "congested speed must be positive, got {}",
                self.v_prime_mps
            )));
        }
        if !(self.v_mps > self.v_prime_mps && self.v_mps.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "uncongested speed {} must exceed congested speed {}",
                self.v_mps, self.v_prime_mps
            )));
        }
        Ok(())
    }

    /// Time saved per meter when a link is uncongested, (v - v') / (v v').
    pub fn slowness_gap(&self) -> f64 {
        (self.v_mps - self.v_prime_mps) / (self.v_mps * self.v_prime_mps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// Identifier as written in the network file.
    pub id: u32,
    /// Position in the parameter vector (0-based, file order).
    pub index: usize,
    pub from: String,
    pub to: String,
    pub length_m: f64,
}

impl Link {
    pub fn shares_node(&self, other: &Link) -> bool {
        self.from == other.from
            || self.from == other.to
            || self.to == other.from
            || self.to == other.to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: u32,
    /// Parameter-vector positions of the route's links, in driving order.
    pub links: Vec<usize>,
}

impl Route {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    links: Vec<Link>,
    routes: Vec<Route>,
    speeds: SpeedPair,
    link_pos: BTreeMap<u32, usize>,
    route_pos: BTreeMap<u32, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    speeds: SpeedPair,
    links: Vec<LinkEntry>,
    #[serde(default)]
    routes: Vec<RouteEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    id: u32,
    from: String,
    to: String,
    length_m: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteEntry {
    id: u32,
    link_ids: Vec<u32>,
}

/// Parse and validate a network file.
pub fn load_network(text: &str) -> Result<NetworkModel> {
    let file: NetworkFile = toml::from_str(text).map_err(|e| Error::NetworkFormat(e.to_string()))?;
    let links = file
        .links
        .into_iter()
        .map(|l| (l.id, l.from, l.to, l.length_m))
        .collect::<Vec<_>>();
    let routes = file
        .routes
        .into_iter()
        .map(|r| (r.id, r.link_ids))
        .collect::<Vec<_>>();
    NetworkModel::new(file.speeds, links, routes)
}

impl NetworkModel {
    /// Build a network from `(id, from, to, length_m)` links and
    /// `(id, link_ids)` routes.
    pub fn new(
        speeds: SpeedPair,
        links: Vec<(u32, String, String, f64)>,
        routes: Vec<(u32, Vec<u32>)>,
    ) -> Result<Self> {
        speeds.validate()?;
        if links.is_empty() {
            return Err(Error::NetworkFormat("network has no links".into()));
        }
        let mut link_pos = BTreeMap::new();
        let mut directions = BTreeSet::new();
        let mut out = Vec::with_capacity(links.len());
        for (index, (id, from, to, length_m)) in links.into_iter().enumerate() {
            if link_pos.insert(id, index).is_some() {
                return Err(Error::DuplicateLink(id));
            }
            if !(length_m > 0.0 && length_m.is_finite()) {
                return Err(Error::InvalidValue(format!(
                    "link {id}: length must be positive, got {length_m}"
                )));
            }
            if from == to {
                return Err(Error::InvalidValue(format!("link {id} is a self-loop at {from}")));
            }
            if !directions.insert((from.clone(), to.clone())) {
                return Err(Error::DuplicateDirection { from, to });
            }
            out.push(Link { id, index, from, to, length_m });
        }
        let mut net = Self {
            links: out,
            routes: Vec::new(),
            speeds,
            link_pos,
            route_pos: BTreeMap::new(),
        };
        for (id, link_ids) in routes {
            let route = net.route_from_link_ids(id, &link_ids)?;
            if net.route_pos.insert(id, net.routes.len()).is_some() {
                return Err(Error::DuplicateRoute(id));
            }
            net.routes.push(route);
        }
        Ok(net)
    }

    /// Serialize back to the network file format.
    pub fn to_toml_string(&self) -> String {
        let file = NetworkFile {
            speeds: self.speeds,
            links: self
                .links
                .iter()
                .map(|l| LinkEntry {
                    id: l.id,
                    from: l.from.clone(),
                    to: l.to.clone(),
                    length_m: l.length_m,
                })
                .collect(),
            routes: self
                .routes
                .iter()
                .map(|r| RouteEntry {
                    id: r.id,
                    link_ids: r.links.iter().map(|&i| self.links[i].id).collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("network serializes")
    }

    /// Number of links (length of the parameter vector).
    pub fn p(&self) -> usize {
        self.links.len()
    }

    /// Number of stored routes.
    pub fn r(&self) -> usize {
        self.routes.len()
    }

    pub fn speeds(&self) -> SpeedPair {
        self.speeds
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn link_index(&self, id: u32) -> Option<usize> {
        self.link_pos.get(&id).copied()
    }

    pub fn link_by_id(&self, id: u32) -> Result<&Link> {
        self.link_index(id)
            .map(|i| &self.links[i])
            .ok_or(Error::UnknownLink(id))
    }

    pub fn route_index(&self, id: u32) -> Option<usize> {
        self.route_pos.get(&id).copied()
    }

    pub fn route(&self, id: u32) -> Result<&Route> {
        self.route_index(id)
            .map(|i| &self.routes[i])
            .ok_or(Error::UnknownRoute(id))
    }

    /// Links of a stored route paired with their parameter-vector positions.
    pub fn route_links(&self, route_id: u32) -> Result<Vec<(&Link, usize)>> {
        let route = self.route(route_id)?;
        Ok(route
            .links
            .iter()
            .map(|&i| (&self.links[i], i))
            .collect())
    }

    /// Validate an ordered list of link ids as a route.
    pub fn route_from_link_ids(&self, route_id: u32, link_ids: &[u32]) -> Result<Route> {
        if link_ids.is_empty() {
            return Err(Error::NetworkFormat(format!("route {route_id} has no links")));
        }
        let mut seen = BTreeSet::new();
        let mut positions = Vec::with_capacity(link_ids.len());
        for &id in link_ids {
            let pos = self.link_index(id).ok_or(Error::UnknownLink(id))?;
            if !seen.insert(pos) {
                return Err(Error::RepeatedLink { route: route_id, link: id });
            }
            positions.push(pos);
        }
        for w in positions.windows(2) {
            let (a, b) = (&self.links[w[0]], &self.links[w[1]]);
            if a.to != b.from {
                return Err(Error::Disconnected { route: route_id, first: a.id, second: b.id });
            }
        }
        Ok(Route { id: route_id, links: positions })
    }

    /// Build a route from a node path such as `["M", "I", "J"]`.
    pub fn route_from_nodes<S: AsRef<str>>(&self, route_id: u32, nodes: &[S]) -> Result<Route> {
        if nodes.len() < 2 {
            return Err(Error::InvalidValue("a node path needs at least two nodes".into()));
        }
        let mut ids = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let (from, to) = (w[0].as_ref(), w[1].as_ref());
            let link = self
                .links
                .iter()
                .find(|l| l.from == from && l.to == to)
                .ok_or_else(|| {
                    if self.links.iter().any(|l| l.from == from || l.to == from) {
                        Error::InvalidValue(format!("no link {from} -> {to}"))
                    } else {
                        Error::UnknownNode(from.to_string())
                    }
                })?;
            ids.push(link.id);
        }
        self.route_from_link_ids(route_id, &ids)
    }

    /// Per-link time saved when uncongested, `l_j (v - v') / (v v')`, in seconds.
    pub fn link_time_gap(&self, index: usize) -> f64 {
        self.links[index].length_m * self.speeds.slowness_gap()
    }

    /// Congested traversal time `l_j / v'` in seconds.
    pub fn link_congested_time(&self, index: usize) -> f64 {
        self.links[index].length_m / self.speeds.v_prime_mps
    }

    /// Uncongested traversal time `l_j / v` in seconds.
    pub fn link_free_time(&self, index: usize) -> f64 {
        self.links[index].length_m / self.speeds.v_mps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_LINK: &str = r#"
[speeds]
v_mps = 10.0
v_prime_mps = 5.0

[[links]]
id = 1
from = "A"
to = "B"
length_m = 1000.0
"#;

    fn line3() -> NetworkModel {
        NetworkModel::new(
            SpeedPair::new(10.0, 5.0).unwrap(),
            vec![
                (1, "A".into(), "B".into(), 100.0),
                (2, "B".into(), "C".into(), 200.0),
                (3, "C".into(), "D".into(), 300.0),
            ],
            vec![(7, vec![1, 2, 3])],
        )
        .unwrap()
    }

    #[test]
    fn minimal_network() {
        let net = load_network(ONE_LINK).unwrap();
        assert_eq!(net.p(), 1);
        assert_eq!(net.r(), 0);
        assert_eq!(net.link_free_time(0), 100.0);
        assert_eq!(net.link_congested_time(0), 200.0);
    }

    #[test]
    fn unknown_link_in_route() {
        let text = format!("{ONE_LINK}\n[[routes]]\nid = 1\nlink_ids = [99]\n");
        assert!(matches!(load_network(&text), Err(Error::UnknownLink(99))));
    }

    #[test]
    fn rejects_bad_speeds_and_lengths() {
        let slow = ONE_LINK.replace("v_mps = 10.0", "v_mps = 5.0");
        assert!(matches!(load_network(&slow), Err(Error::InvalidValue(_))));
        let neg = ONE_LINK.replace("length_m = 1000.0", "length_m = -3.0");
        assert!(matches!(load_network(&neg), Err(Error::InvalidValue(_))));
        let per_link = ONE_LINK.replace("length_m = 1000.0", "length_m = 1000.0\nv_mps = 3.0");
        assert!(matches!(load_network(&per_link), Err(Error::NetworkFormat(_))));
    }

    #[test]
    fn duplicate_ids() {
        let dup = format!("{ONE_LINK}\n[[links]]\nid = 1\nfrom = \"B\"\nto = \"A\"\nlength_m = 5.0\n");
        assert!(matches!(load_network(&dup), Err(Error::DuplicateLink(1))));
    }

    #[test]
    fn opposite_directions_are_distinct_links() {
        let both = format!("{ONE_LINK}\n[[links]]\nid = 2\nfrom = \"B\"\nto = \"A\"\nlength_m = 5.0\n");
        assert_eq!(load_network(&both).unwrap().p(), 2);
        let same = format!("{ONE_LINK}\n[[links]]\nid = 2\nfrom = \"A\"\nto = \"B\"\nlength_m = 5.0\n");
        assert!(matches!(load_network(&same), Err(Error::DuplicateDirection { .. })));
    }

    #[test]
    fn disconnected_and_repeated_routes() {
        let net = line3();
        assert!(matches!(
            net.route_from_link_ids(1, &[1, 3]),
            Err(Error::Disconnected { first: 1, second: 3, .. })
        ));
        let ring = NetworkModel::new(
            SpeedPair::new(10.0, 5.0).unwrap(),
            vec![(1, "A".into(), "B".into(), 1.0), (2, "B".into(), "A".into(), 1.0)],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            ring.route_from_link_ids(1, &[1, 2, 1]),
            Err(Error::RepeatedLink { link: 1, .. })
        ));
    }

    #[test]
    fn route_links_in_path_order() {
        let net = line3();
        let pairs = net.route_links(7).unwrap();
        let got: Vec<(u32, usize)> = pairs.iter().map(|(l, i)| (l.id, *i)).collect();
        assert_eq!(got, vec![(1, 0), (2, 1), (3, 2)]);
        assert!(matches!(net.route_links(8), Err(Error::UnknownRoute(8))));
    }

    #[test]
    fn route_by_sub_sequence() {
        // route over links 1, 3 and 6 of a longer chain with spurs
        let links = vec![
            (1, "A".into(), "B".into(), 1.0),
            (2, "B".into(), "X".into(), 1.0),
            (3, "B".into(), "C".into(), 1.0),
            (4, "C".into(), "Y".into(), 1.0),
            (5, "Y".into(), "C".into(), 1.0),
            (6, "C".into(), "D".into(), 1.0),
        ];
        let net = NetworkModel::new(SpeedPair::new(2.0, 1.0).unwrap(), links, vec![(1, vec![1, 3, 6])])
            .unwrap();
        let got: Vec<usize> = net.route_links(1).unwrap().iter().map(|(_, i)| *i).collect();
        assert_eq!(got, vec![0, 2, 5]);
    }

    #[test]
    fn node_paths() {
        let net = line3();
        let r = net.route_from_nodes(0, &["B", "C", "D"]).unwrap();
        assert_eq!(r.links, vec![1, 2]);
        assert!(matches!(net.route_from_nodes(0, &["Q", "A"]), Err(Error::UnknownNode(_))));
        assert!(net.route_from_nodes(0, &["A", "C"]).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let net = line3();
        let text = net.to_toml_string();
        let again = load_network(&text).unwrap();
        assert_eq!(net, again);
        assert_eq!(again.to_toml_string(), text);
    }
}
