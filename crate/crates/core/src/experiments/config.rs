//! Declarative scenario description. Every field has a default; the
//! defaults describe the urban reference scenario (six UAV radars, three
//! buildings, a 0.1 m² target walking at 1.5 m/s).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{KinematicConstraints, OedCriterion};
use crate::error::{Error, Result};
use crate::fusion::{AgingModel, FilterKind, MotionModel, PriorConfig};
use crate::network::Dissemination;
use crate::sensing::{SensingMode, SensorParams};
use crate::world::{Aabb, Vec3};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub world: WorldConfig,
    pub fleet: FleetConfig,
    pub sensing: SensingConfig,
    pub filter: FilterConfig,
    pub network: NetworkConfig,
    pub control: ControlConfig,
    pub monte_carlo: MonteCarloConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Step length (s).
    pub dt: f64,
    pub steps: usize,
    pub target_start: Vec3,
    /// Target speed (m/s).
    pub target_speed: f64,
    /// Initial target heading (rad).
    pub target_heading: f64,
    /// Heading diffusion (rad/√s).
    pub heading_noise: f64,
    pub obstacles: Vec<Aabb>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            steps: 300,
            target_start: Vec3::new(0.0, 0.0, 30.0),
            target_speed: 1.5,
            target_heading: 0.0,
            heading_noise: 0.2,
            obstacles: default_buildings(),
        }
    }
}

/// Three 25 m tall blocks around the target's start.
pub fn default_buildings() -> Vec<Aabb> {
    [
        ([-50.0, -60.0], [-20.0, -30.0]),
        ([20.0, 20.0], [50.0, 50.0]),
        ([-30.0, 40.0], [0.0, 70.0]),
    ]
    .into_iter()
    .map(|(lo, hi)| Aabb {
        min: Vec3::new(lo[0], lo[1], 0.0),
        max: Vec3::new(hi[0], hi[1], 25.0),
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FleetKind {
    #[default]
    Dynamic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetConfig {
    pub kind: FleetKind,
    /// Number of UAVs (dynamic) or radars (fixed; must match `fixed_positions`).
    pub count: usize,
    pub spawn_center: Vec3,
    pub spawn_radius: f64,
    pub min_altitude: f64,
    pub altitude_locked: bool,
    pub fixed_positions: Vec<Vec3>,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            kind: FleetKind::Dynamic,
            count: 6,
            spawn_center: Vec3::new(-90.0, 0.0, 50.0),
            spawn_radius: 30.0,
            min_altitude: 10.0,
            altitude_locked: true,
            fixed_positions: default_ground_sites(),
        }
    }
}

/// Six ground radars on a 95 m hexagon around the area center, so that
/// neighbouring sites sit inside the 100 m communication range.
pub fn default_ground_sites() -> Vec<Vec3> {
    (0..6)
        .map(|i| {
            let a = std::f64::consts::PI / 3.0 * i as f64 + std::f64::consts::PI / 6.0;
            Vec3::new(95.0 * a.cos(), 95.0 * a.sin(), 0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub mode: SensingMode,
    pub sigma0r: f64,
    /// Bearing error (rad).
    pub sigma_bearing: f64,
    pub sigma_doppler: f64,
    pub rcs: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        let p = SensorParams::default();
        Self {
            mode: SensingMode::RANGE,
            sigma0r: p.sigma0r,
            sigma_bearing: p.sigma_bearing,
            sigma_doppler: p.sigma_doppler,
            rcs: p.rcs,
        }
    }
}

impl SensingConfig {
    pub fn params(&self) -> SensorParams {
        SensorParams {
            sigma0r: self.sigma0r,
            sigma_bearing: self.sigma_bearing,
            sigma_doppler: self.sigma_doppler,
            rcs: self.rcs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// White-acceleration intensity of the filter's motion model (m²/s³).
    pub process_noise: f64,
    /// Intensity on the vertical axis; defaults to `process_noise`.
    pub vertical_process_noise: Option<f64>,
    /// Variance inflation per hop and second of age; 0 disables it.
    pub age_inflation: f64,
    pub prior_position_sigma: f64,
    pub prior_velocity_sigma: f64,
    pub prior_box: Option<Aabb>,
    /// Mirror posterior means that leave the prior box's altitude band
    /// through the reporting sensors' mean altitude.
    pub resolve_mirror: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            kind: FilterKind::Ekf,
            process_noise: 0.5,
            vertical_process_noise: None,
            age_inflation: 1.0,
            prior_position_sigma: 20.0,
            prior_velocity_sigma: 2.0,
            prior_box: Some(Aabb {
                min: Vec3::new(-150.0, -150.0, 0.0),
                max: Vec3::new(150.0, 150.0, 80.0),
            }),
            resolve_mirror: false,
        }
    }
}

impl FilterConfig {
    pub fn prior(&self) -> PriorConfig {
        PriorConfig {
            position_sigma: self.prior_position_sigma,
            velocity_sigma: self.prior_velocity_sigma,
            prior_box: self.prior_box,
        }
    }

    pub fn motion(&self) -> MotionModel {
        MotionModel {
            q: self.process_noise,
            q_vertical: self.vertical_process_noise.unwrap_or(self.process_noise),
        }
    }

    pub fn aging(&self, dt: f64) -> AgingModel {
        AgingModel {
            q_age: self.age_inflation,
            dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub comm_range: f64,
    pub hop_limit: u32,
    pub stale_cache: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            comm_range: 100.0,
            hop_limit: 1,
            stale_cache: true,
        }
    }
}

impl NetworkConfig {
    pub fn dissemination(&self) -> Dissemination {
        Dissemination {
            hop_limit: self.hop_limit,
            stale_cache: self.stale_cache,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub criterion: OedCriterion,
    /// Include the predicted-covariance information in the planning metric.
    pub include_prior: bool,
    /// Score the position marginal rather than the full state.
    pub position_only: bool,
    /// Headings per speed ring.
    pub headings: usize,
    /// Let the planner account for occlusion by known obstacles.
    pub los_aware: bool,
    pub v_max: f64,
    pub max_turn_rate: f64,
    pub safety_distance: f64,
    pub min_separation: f64,
    /// Keep each UAV within this distance of its predicted target (m).
    pub max_target_distance: Option<f64>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            criterion: OedCriterion::D,
            include_prior: true,
            position_only: true,
            headings: 16,
            los_aware: true,
            v_max: 10.0,
            max_turn_rate: FRAC_PI_2,
            safety_distance: 50.0,
            min_separation: 5.0,
            max_target_distance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub base_seed: u64,
    /// Steps excluded from the error metrics at the start of each run.
    pub burn_in: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            base_seed: 0,
            burn_in: 0,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} = {v} must be finite and > 0")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{key} = {v} must be finite and >= 0"
        )))
    }
}

fn finite_point(key: &str, p: &Vec3) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} has non-finite components")))
    }
}

impl ScenarioConfig {
    pub fn constraints(&self) -> KinematicConstraints {
        KinematicConstraints {
            v_max: self.control.v_max,
            max_turn_rate: self.control.max_turn_rate,
            safety_distance_target: self.control.safety_distance,
            min_uav_separation: self.control.min_separation,
            max_target_distance: self.control.max_target_distance,
            altitude_locked: self.fleet.altitude_locked,
        }
    }

    pub fn uav_count(&self) -> usize {
        match self.fleet.kind {
            FleetKind::Dynamic => self.fleet.count,
            FleetKind::Fixed => self.fleet.fixed_positions.len(),
        }
    }

    /// Checks every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let w = &self.world;
        positive("world.dt", w.dt)?;
        finite_point("world.target_start", &w.target_start)?;
        positive("world.target_speed", w.target_speed)?;
        if !w.target_heading.is_finite() {
            return Err(Error::Config("world.target_heading must be finite".into()));
        }
        non_negative("world.heading_noise", w.heading_noise)?;
        for (i, o) in w.obstacles.iter().enumerate() {
            o.validate()
                .map_err(|e| Error::Config(format!("world.obstacles[{i}]: {e}")))?;
        }

        let f = &self.fleet;
        if f.count == 0 {
            return Err(Error::Config("fleet.count must be >= 1".into()));
        }
        finite_point("fleet.spawn_center", &f.spawn_center)?;
        non_negative("fleet.spawn_radius", f.spawn_radius)?;
        if !f.min_altitude.is_finite() {
            return Err(Error::Config("fleet.min_altitude must be finite".into()));
        }
        if f.min_altitude > f.spawn_center.z + f.spawn_radius {
            return Err(Error::Config(
                "fleet.min_altitude lies above the whole spawn ball".into(),
            ));
        }
        if f.kind == FleetKind::Fixed {
            if f.fixed_positions.len() != f.count {
                return Err(Error::Config(format!(
                    "fleet.fixed_positions has {} sites but fleet.count = {}",
                    f.fixed_positions.len(),
                    f.count
                )));
            }
            for (i, p) in f.fixed_positions.iter().enumerate() {
                finite_point(&format!("fleet.fixed_positions[{i}]"), p)?;
            }
        }

        let s = &self.sensing;
        if s.mode.is_empty() {
            return Err(Error::Config("sensing.mode must enable a channel".into()));
        }
        self.sensing.params().validate()?;

        let fl = &self.filter;
        positive("filter.process_noise", fl.process_noise)?;
        if let Some(q) = fl.vertical_process_noise {
            positive("filter.vertical_process_noise", q)?;
        }
        non_negative("filter.age_inflation", fl.age_inflation)?;
        positive("filter.prior_position_sigma", fl.prior_position_sigma)?;
        positive("filter.prior_velocity_sigma", fl.prior_velocity_sigma)?;
        if let Some(b) = &fl.prior_box {
            b.validate()
                .map_err(|e| Error::Config(format!("filter.prior_box: {e}")))?;
        }
        if fl.resolve_mirror && fl.prior_box.is_none() {
            return Err(Error::Config(
                "filter.resolve_mirror needs filter.prior_box".into(),
            ));
        }

        positive("network.comm_range", self.network.comm_range)?;
        if self.network.hop_limit == 0 {
            return Err(Error::Config("network.hop_limit must be >= 1".into()));
        }

        let c = &self.control;
        if c.headings == 0 {
            return Err(Error::Config("control.headings must be >= 1".into()));
        }
        positive("control.v_max", c.v_max)?;
        positive("control.max_turn_rate", c.max_turn_rate)?;
        positive("control.safety_distance", c.safety_distance)?;
        positive("control.min_separation", c.min_separation)?;
        if let Some(r) = c.max_target_distance {
            if !(r.is_finite() && r > c.safety_distance) {
                return Err(Error::Config(format!(
                    "control.max_target_distance = {r} must be finite and exceed control.safety_distance"
                )));
            }
        }

        if self.monte_carlo.runs == 0 {
            return Err(Error::Config("monte_carlo.runs must be >= 1".into()));
        }
        if self.world.steps > 0 && self.monte_carlo.burn_in >= self.world.steps as u64 {
            return Err(Error::Config(format!(
                "monte_carlo.burn_in = {} must be below world.steps = {}",
                self.monte_carlo.burn_in, self.world.steps
            )));
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        hex::encode(&digest[..8])
    }
}
