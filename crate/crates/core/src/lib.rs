//! Simulation core for a dynamic radar network: a fleet of UAV-mounted radars
//! that track a non-cooperative target with per-UAV Bayesian filters and
//! steer themselves by minimizing an experimental-design cost on the Fisher
//! information of the predicted target state.
//!
//! Each simulated step runs sense, disseminate, fuse, plan and move in that
//! order. The modules mirror those stages:
//!
//! - [`world`]: ground truth, obstacles, target motion and UAV kinematics.
//! - [`sensing`]: radar measurement models, Jacobians and noisy draws.
//! - [`network`]: communication graph and hop-aged packet dissemination.
//! - [`fusion`]: EKF/UKF recursion over hop-aged measurement sets.
//! - [`control`]: Fisher information, design criteria and waypoint planning.
//! - [`experiments`]: scenario configuration, episodes, Monte Carlo metrics.

pub mod control;
pub mod error;
pub mod experiments;
pub mod fusion;
pub mod network;
pub mod seeds;
pub mod sensing;
pub mod world;

pub use control::{
    candidate_set, control_signal, fim, oed_cost, plan_waypoint, Candidate, FimOptions,
    InformationMatrix, KinematicConstraints, OedCriterion, Plan, PlanRequest, SensorSite,
};
pub use error::{Error, Result};
pub use experiments::{
    compare_table, rmse, run_episode, sweep, Consensus, EpisodeLog, RmseSummary, ScenarioConfig,
    SweepAxis, TableRow,
};
pub use fusion::{Belief, FilterKind, MotionModel, PriorConfig};
pub use network::{build_graph, disseminate, hop_distance, CommGraph, KnowledgeBase, Packet};
pub use sensing::{Measurement, MeasurementValues, SensingMode, SensorParams};
pub use world::{Aabb, Obstacle, SimClock, StateVector, TargetState, UavId, UavPose, Vec3, World};
