//! Physical ground truth: obstacles, target motion and UAV kinematics.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::control::KinematicConstraints;
use crate::error::{Error, Result};
use crate::experiments::config::{FleetKind, ScenarioConfig};
use crate::seeds::{stream_rng, Stream};

/// Cartesian position or velocity in meters (or m/s).
pub type Vec3 = Vector3<f64>;

/// Target state ordered `(px, py, pz, vx, vy, vz)`.
pub type StateVector = Vector6<f64>;

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UavId(pub usize);

impl fmt::Display for UavId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Planar heading in `[-π, π)`.
    pub heading: f64,
}

impl TargetState {
    /// Target moving at `speed` along `heading` in the horizontal plane.
    pub fn planar(position: Vec3, speed: f64, heading: f64) -> Self {
        let heading = wrap_angle(heading);
        Self {
            position,
            velocity: Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0),
            heading,
        }
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::new(
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        )
    }
}

/// Constant-speed random walk: the heading diffuses with intensity
/// `heading_noise` (rad/√s) while the speed stays fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMotion {
    pub speed: f64,
    pub heading_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavPose {
    pub id: UavId,
    pub position: Vec3,
    pub altitude_locked: bool,
}

/// Axis-aligned box. Used for obstacles (buildings) and the filter's prior
/// search volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

pub type Obstacle = Aabb;

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .min
            .iter()
            .chain(self.max.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config(format!(
                "box {self:?} has non-finite corners"
            )));
        }
        if (0..3).any(|i| self.max[i] <= self.min[i]) {
            return Err(Error::Config(format!(
                "box {:?}..{:?} must have min < max on every axis",
                self.min.as_slice(),
                self.max.as_slice()
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// True if `p` lies strictly inside the box.
    pub fn contains_interior(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] < p[i] && p[i] < self.max[i])
    }

    /// True if the open segment `(a, b)` passes through the open interior.
    /// Touching a face, edge or corner does not count.
    pub fn segment_hits_interior(&self, a: &Vec3, b: &Vec3) -> bool {
        let d = b - a;
        let mut enter = 0.0_f64;
        let mut exit = 1.0_f64;
        for i in 0..3 {
            if d[i] == 0.0 {
                if !(self.min[i] < a[i] && a[i] < self.max[i]) {
                    return false;
                }
                continue;
            }
            let t0 = (self.min[i] - a[i]) / d[i];
            let t1 = (self.max[i] - a[i]) / d[i];
            let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
            enter = enter.max(lo);
            exit = exit.min(hi);
            if enter >= exit {
                return false;
            }
        }
        enter < exit
    }
}

/// Discrete simulation clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub step: u64,
    pub dt: f64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        Self { step: 0, dt }
    }

    pub fn tick(&mut self) {
        self.step += 1;
    }
}

/// Full ground truth at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub clock: SimClock,
    pub target: TargetState,
    pub motion: TargetMotion,
    pub uavs: Vec<UavPose>,
    pub obstacles: Vec<Obstacle>,
}

/// Uniform draw from the ball of `radius` around `center`.
pub fn sample_in_ball<R: Rng + ?Sized>(center: &Vec3, radius: f64, rng: &mut R) -> Vec3 {
    loop {
        let dir = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = dir.norm();
        if n < 1e-12 {
            continue;
        }
        let u: f64 = rng.random();
        return center + dir * (radius * u.cbrt() / n);
    }
}

/// Builds the initial world for one episode. UAVs of a dynamic fleet are
/// drawn uniformly in the spawn ball (samples under the minimum altitude are
/// redrawn); a fixed fleet is placed at its configured sites.
pub fn init_scenario(config: &ScenarioConfig, seed: u64) -> Result<World> {
    config.validate()?;
    let w = &config.world;
    let fleet = &config.fleet;

    let uavs = match fleet.kind {
        FleetKind::Dynamic => {
            let mut rng = stream_rng(seed, Stream::Spawn, 0, 0);
            let mut uavs = Vec::with_capacity(fleet.count);
            for id in 0..fleet.count {
                let mut attempts = 0;
                let position = loop {
                    let p = sample_in_ball(&fleet.spawn_center, fleet.spawn_radius, &mut rng);
                    if p.z >= fleet.min_altitude {
                        break p;
                    }
                    attempts += 1;
                    if attempts > 10_000 {
                        return Err(Error::Config(
                            "fleet.min_altitude lies above the whole spawn ball".into(),
                        ));
                    }
                };
                uavs.push(UavPose {
                    id: UavId(id),
                    position,
                    altitude_locked: fleet.altitude_locked,
                });
            }
            uavs
        }
        FleetKind::Fixed => fleet
            .fixed_positions
            .iter()
            .enumerate()
            .map(|(id, p)| UavPose {
                id: UavId(id),
                position: *p,
                altitude_locked: true,
            })
            .collect(),
    };

    Ok(World {
        clock: SimClock::new(w.dt),
        target: TargetState::planar(w.target_start, w.target_speed, w.target_heading),
        motion: TargetMotion {
            speed: w.target_speed,
            heading_noise: w.heading_noise,
        },
        uavs,
        obstacles: w.obstacles.clone(),
    })
}

/// True iff the open segment between `a` and `b` crosses no obstacle interior.
pub fn line_of_sight(a: &Vec3, b: &Vec3, obstacles: &[Obstacle]) -> bool {
    // Canonical endpoint order makes the test exactly symmetric.
    let (p, q) = if a.as_slice() <= b.as_slice() {
        (a, b)
    } else {
        (b, a)
    };
    !obstacles.iter().any(|o| o.segment_hits_interior(p, q))
}

/// Advances the target one step of its random walk.
pub fn step_target<R: Rng + ?Sized>(
    state: &TargetState,
    motion: &TargetMotion,
    clock: &SimClock,
    rng: &mut R,
) -> TargetState {
    let z: f64 = rng.sample(StandardNormal);
    let heading = state.heading + motion.heading_noise * clock.dt.sqrt() * z;
    let mut next = TargetState::planar(state.position, motion.speed, heading);
    next.position += next.velocity * clock.dt;
    next
}

/// Moves a UAV by the control displacement `u`, rejecting inputs the
/// kinematic constraints forbid.
pub fn apply_control(
    pose: &UavPose,
    u: &Vec3,
    constraints: &KinematicConstraints,
    dt: f64,
) -> Result<UavPose> {
    if !u.iter().all(|c| c.is_finite()) {
        return Err(Error::Constraint(format!("non-finite control {u:?}")));
    }
    if pose.altitude_locked && u.z != 0.0 {
        return Err(Error::Constraint(format!(
            "UAV {} is altitude-locked but u.z = {}",
            pose.id, u.z
        )));
    }
    let limit = constraints.v_max * dt;
    if u.norm() > limit * (1.0 + 1e-12) {
        return Err(Error::Constraint(format!(
            "UAV {} displacement {} exceeds v_max*dt = {}",
            pose.id,
            u.norm(),
            limit
        )));
    }
    Ok(UavPose {
        position: pose.position + u,
        ..*pose
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;
    use proptest::prelude::*;

    fn building() -> Obstacle {
        Aabb::new(Vec3::new(40.0, -10.0, 0.0), Vec3::new(60.0, 10.0, 100.0)).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
        let w = wrap_angle(-1e-18);
        assert!((-PI..PI).contains(&w));
    }

    #[test]
    fn los_without_obstacles() {
        assert!(line_of_sight(
            &Vec3::zeros(),
            &Vec3::new(1.0, 2.0, 3.0),
            &[]
        ));
    }

    #[test]
    fn los_blocked_through_building() {
        let a = Vec3::new(0.0, 0.0, 50.0);
        let b = Vec3::new(100.0, 0.0, 50.0);
        assert!(!line_of_sight(&a, &b, &[building()]));
    }

    #[test]
    fn los_rising_segment() {
        // z = 50 + x is at z = 90 when it reaches x = 40, so it still cuts
        // the box between x = 40 and the roof crossing at x = 50.
        let a = Vec3::new(0.0, 0.0, 50.0);
        let b = Vec3::new(100.0, 0.0, 150.0);
        assert!(!line_of_sight(&a, &b, &[building()]));
        // Starting at z = 110 the whole crossing is above the roof.
        let a_high = Vec3::new(0.0, 0.0, 110.0);
        assert!(line_of_sight(&a_high, &b, &[building()]));
    }

    #[test]
    fn grazing_counts_as_los() {
        let o = building();
        // Runs exactly along the roof plane.
        let a = Vec3::new(0.0, 0.0, 100.0);
        let b = Vec3::new(100.0, 0.0, 100.0);
        assert!(line_of_sight(&a, &b, &[o]));
        // Touches the edge at (40, 10).
        let a = Vec3::new(30.0, 0.0, 50.0);
        let b = Vec3::new(50.0, 20.0, 50.0);
        assert!(line_of_sight(&a, &b, &[o]));
    }

    #[test]
    fn noiseless_target_moves_straight() {
        let motion = TargetMotion {
            speed: 1.5,
            heading_noise: 0.0,
        };
        let clock = SimClock::new(1.0);
        let mut rng = stream_rng(1, Stream::Target, 0, 0);
        let mut s = TargetState::planar(Vec3::zeros(), 1.5, 0.0);
        let s1 = step_target(&s, &motion, &clock, &mut rng);
        assert_eq!(s1.position, Vec3::new(1.5, 0.0, 0.0));
        for _ in 0..100 {
            s = step_target(&s, &motion, &clock, &mut rng);
        }
        assert!((s.position - Vec3::new(150.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn random_walk_preserves_speed() {
        let motion = TargetMotion {
            speed: 1.5,
            heading_noise: 0.2,
        };
        let clock = SimClock::new(1.0);
        let mut rng = stream_rng(3, Stream::Target, 0, 0);
        let mut s = TargetState::planar(Vec3::zeros(), 1.5, 0.3);
        for _ in 0..10_000 {
            s = step_target(&s, &motion, &clock, &mut rng);
            assert!((s.velocity.norm() - 1.5).abs() < 1e-9 * 1.5);
            assert!((-PI..PI).contains(&s.heading));
        }
    }

    #[test]
    fn ball_samples_are_uniform() {
        let mut rng = stream_rng(11, Stream::Spawn, 0, 0);
        let c = Vec3::new(0.0, 0.0, 50.0);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = (sample_in_ball(&c, 30.0, &mut rng) - c).norm();
            assert!(d <= 30.0);
            sum += d;
        }
        // E|X| = 3R/4 for the uniform ball.
        let mean = sum / n as f64;
        assert!((mean - 22.5).abs() < 0.02 * 22.5, "mean distance {mean}");
    }

    #[test]
    fn zero_radius_ball_is_center() {
        let mut rng = stream_rng(0, Stream::Spawn, 0, 0);
        let c = Vec3::new(3.0, 4.0, 50.0);
        assert_eq!(sample_in_ball(&c, 0.0, &mut rng), c);
    }

    #[test]
    fn init_is_deterministic_and_rejects_bad_configs() {
        let cfg = ScenarioConfig::default();
        let a = init_scenario(&cfg, 42).unwrap();
        let b = init_scenario(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = init_scenario(&cfg, 43).unwrap();
        assert_ne!(a.uavs, c.uavs);

        let mut zero = cfg.clone();
        zero.fleet.count = 0;
        assert!(matches!(init_scenario(&zero, 1), Err(Error::Config(_))));

        let mut flat = cfg.clone();
        flat.world.obstacles.push(Aabb {
            min: Vec3::new(0.0, 0.0, 0.0),
            max: Vec3::new(1.0, 1.0, 0.0),
        });
        assert!(matches!(init_scenario(&flat, 1), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_spawn_ball() {
        let mut cfg = ScenarioConfig::default();
        cfg.fleet.spawn_radius = 0.0;
        let w = init_scenario(&cfg, 5).unwrap();
        for u in &w.uavs {
            assert_eq!(u.position, cfg.fleet.spawn_center);
            assert_eq!(u.position.z, 50.0);
        }
    }

    #[test]
    fn spawn_respects_radius_and_altitude() {
        let cfg = ScenarioConfig::default();
        for seed in 0..50 {
            let w = init_scenario(&cfg, seed).unwrap();
            assert_eq!(w.uavs.len(), cfg.fleet.count);
            for u in &w.uavs {
                assert!((u.position - cfg.fleet.spawn_center).norm() <= cfg.fleet.spawn_radius);
                assert!(u.position.z >= cfg.fleet.min_altitude);
            }
        }
    }

    #[test]
    fn control_limits() {
        let c = KinematicConstraints::default();
        let pose = UavPose {
            id: UavId(0),
            position: Vec3::new(0.0, 0.0, 50.0),
            altitude_locked: true,
        };
        assert_eq!(apply_control(&pose, &Vec3::zeros(), &c, 1.0).unwrap(), pose);
        let edge = Vec3::new(c.v_max, 0.0, 0.0);
        let moved = apply_control(&pose, &edge, &c, 1.0).unwrap();
        assert_eq!(moved.position, Vec3::new(c.v_max, 0.0, 50.0));
        assert!(matches!(
            apply_control(&pose, &Vec3::new(0.0, 0.0, 1.0), &c, 1.0),
            Err(Error::Constraint(_))
        ));
        assert!(matches!(
            apply_control(&pose, &Vec3::new(c.v_max * 1.01, 0.0, 0.0), &c, 1.0),
            Err(Error::Constraint(_))
        ));
        let free = UavPose {
            altitude_locked: false,
            ..pose
        };
        assert!(apply_control(&free, &Vec3::new(0.0, 0.0, 1.0), &c, 1.0).is_ok());
    }

    fn arb_point() -> impl Strategy<Value = Vec3> {
        (-100.0..100.0f64, -100.0..100.0f64, 0.0..120.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_box() -> impl Strategy<Value = Aabb> {
        (arb_point(), 1.0..40.0f64, 1.0..40.0f64, 1.0..60.0f64).prop_map(|(c, w, d, h)| Aabb {
            min: c,
            max: c + Vec3::new(w, d, h),
        })
    }

    proptest! {
        #[test]
        fn los_is_symmetric(a in arb_point(), b in arb_point(), obs in prop::collection::vec(arb_box(), 0..5)) {
            prop_assert_eq!(line_of_sight(&a, &b, &obs), line_of_sight(&b, &a, &obs));
        }

        #[test]
        fn adding_obstacles_never_restores_los(a in arb_point(), b in arb_point(),
                obs in prop::collection::vec(arb_box(), 0..5), extra in arb_box()) {
            let before = line_of_sight(&a, &b, &obs);
            let mut more = obs.clone();
            more.push(extra);
            if !before {
                prop_assert!(!line_of_sight(&a, &b, &more));
            }
        }
    }
}
