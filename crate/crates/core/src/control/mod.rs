//! Information-driven waypoint selection.
//!
//! Each UAV picks its next position by minimizing an optimal-design cost of
//! the Fisher information it expects the fleet to gather about the
//! predicted target state, subject to kinematic and safety constraints.

mod fim;
mod oed;
mod planner;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

pub use fim::{
    fim, prior_information, sensor_information, FimOptions, InformationMatrix, SensorSite,
};
pub use oed::{oed_cost, position_information, OedCriterion};
pub use planner::{
    candidate_set, control_signal, is_feasible, plan_waypoint, Candidate, Plan, PlanRequest,
};

/// Motion and safety limits for one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicConstraints {
    /// Maximum speed (m/s).
    pub v_max: f64,
    /// Maximum heading change rate (rad/s).
    pub max_turn_rate: f64,
    /// Minimum distance to the predicted target (m).
    pub safety_distance_target: f64,
    /// Minimum distance to the last known position of any peer (m).
    pub min_uav_separation: f64,
    /// Optional upper bound on the distance to the predicted target (m).
    #[serde(default)]
    pub max_target_distance: Option<f64>,
    pub altitude_locked: bool,
}

impl Default for KinematicConstraints {
    fn default() -> Self {
        Self {
            v_max: 10.0,
            max_turn_rate: FRAC_PI_2,
            safety_distance_target: 50.0,
            min_uav_separation: 5.0,
            max_target_distance: None,
            altitude_locked: true,
        }
    }
}
