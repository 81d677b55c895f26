//! Link success probabilities from combined route travel times and link
//! traffic states, and route travel-time reliability with both traffic
//! variability and estimation uncertainty.
//!
//! The pipeline is: [`netmodel`] and [`ingest`] load the network and
//! observations; [`estimator::fit`] maximizes the joint likelihood built by
//! [`likelihood`] through the route/link [`bridge`]; [`reliability`] turns
//! the fitted parameters and their covariance into a travel-time pmf and
//! reliability measures. [`stats`] audits link-data independence and
//! [`simgen`] produces synthetic data under the model.
//!
//! Closed-form code is generic over [`Scalar`]; the aliases below fix it to
//! `f64` or `f32`.

pub mod bridge;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod likelihood;
pub mod netmodel;
pub mod optimize;
pub mod reliability;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type BridgeEval = bridge::BridgeEval<f64>;
pub type BridgeEval32 = bridge::BridgeEval<f32>;
pub type FimMatrix = likelihood::FimMatrix<f64>;
pub type FimMatrix32 = likelihood::FimMatrix<f32>;

pub use estimator::{FitConfig, FitResult, RouteUncertainty};
pub use ingest::{ObservationSet, SubsetSchedule};
pub use likelihood::ParamVector;
pub use netmodel::{load_network, NetworkModel, Route, SpeedPair};
pub use reliability::{McConfig, ReliabilityReport, TravelTimePmf};
