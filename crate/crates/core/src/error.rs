use thiserror::Error;

/// Errors raised anywhere in the estimation and reliability pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network file: {0}")]
    NetworkFormat(String),

    #[error("duplicate link id {0}")]
    DuplicateLink(u32),

    #[error("duplicate route id {0}")]
    DuplicateRoute(u32),

    #[error("duplicate directed link {from} -> {to}")]
    DuplicateDirection { from: String, to: String },

    #[error("unknown link {0}")]
    UnknownLink(u32),

    #[error("unknown route {0}")]
    UnknownRoute(u32),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("route {route}: link {first} does not end where link {second} starts")]
    Disconnected { route: u32, first: u32, second: u32 },

    #[error("route {route}: link {link} appears more than once")]
    RepeatedLink { route: u32, link: u32 },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("observations line {line}: {msg}")]
    Observation { line: usize, msg: String },

    #[error("duplicate observation for {kind} {id} on day {day}")]
    DuplicateObservation { kind: &'static str, id: u32, day: String },

    #[error("day {0} carries both link and route records")]
    MixedDay(String),

    #[error("schedule: {0}")]
    Schedule(String),

    #[error(
        "degenerate likelihood on route {route}: log-variance {h2:e} with {k} observations; \
         the route carries no travel-time variance at this parameter, adjust the probability clamp"
    )]
    DegenerateLikelihood { route: u32, h2: f64, k: usize },

    #[error("estimation: {0}")]
    Estimation(String),

    #[error("too few observations: need {needed}, have {have}")]
    TooFewObservations { needed: usize, have: usize },

    #[error("reliability: {0}")]
    Reliability(String),

    #[error("degenerate 2x2 margin (row totals {n1}, {n2})")]
    DegenerateMargin { n1: u64, n2: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
