//! Shared fixtures for the criterion benches.

use drn_core::control::SensorSite;
use drn_core::fusion::init_belief;
use drn_core::{Aabb, Belief, PriorConfig, ScenarioConfig, SensorParams, UavId, UavPose, Vec3};

/// A planning problem: one UAV, `peers` others on a ring, a target prior at
/// the origin.
pub struct Scene {
    pub pose: UavPose,
    pub predicted: Belief,
    pub peers: Vec<SensorSite>,
    pub params: SensorParams,
}

pub fn planning_scene(peers: usize) -> Scene {
    let prior = PriorConfig {
        prior_box: Some(Aabb {
            min: Vec3::new(-10.0, -10.0, 10.0),
            max: Vec3::new(10.0, 10.0, 20.0),
        }),
        ..Default::default()
    };
    let predicted = init_belief(&[], &prior, &SensorParams::default(), 0).expect("prior box set");
    let peers = (0..peers)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / peers as f64;
            SensorSite {
                position: Vec3::new(70.0 * a.cos(), 70.0 * a.sin(), 50.0),
                noise_scale: 1.0,
            }
        })
        .collect();
    Scene {
        pose: UavPose {
            id: UavId(0),
            position: Vec3::new(-80.0, 5.0, 50.0),
            altitude_locked: true,
        },
        predicted,
        peers,
        params: SensorParams::default(),
    }
}

/// Default scenario shortened to `steps`.
pub fn short_scenario(steps: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.world.steps = steps;
    c
}
