//! Packet-level simulation of Assured Forwarding over a long-delay
//! satellite bottleneck, with the factorial experiment harness and the
//! allocation-of-variation analysis used to read its results.
//!
//! The simulator itself works in integer nanoseconds and integer token
//! units. The numeric layers on top (RED drop law, metrics, ANOVA) are
//! generic over [`scalar::Scalar`]; the aliases below fix them to `f64`.

pub mod anova;
pub mod diffserv;
pub mod factorial;
pub mod harness;
pub mod metrics;
pub mod netmodel;
pub mod scalar;
pub mod simcore;
pub mod transport;

pub use factorial::{build_scenario, enumerate_design, Design, DesignMode, RunSpec};
pub use harness::config::ScenarioConfig;
pub use netmodel::{simulate, Color, SimulationOutcome};
pub use simcore::SimTime;

pub type ResponseTable = anova::ResponseTable<f64>;
pub type AnovaReport = anova::AnovaReport<f64>;
pub type RedParams = diffserv::RedColorParams<f64>;
