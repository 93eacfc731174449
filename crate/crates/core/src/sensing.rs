//! Radar measurement models.
//!
//! A radar observes some subset of four channels of the target relative to
//! its own position: range, azimuth, elevation and radial speed. Ranging
//! noise grows with the square of the distance and shrinks with the target's
//! radar cross section; bearing and Doppler noise are constant.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Dyn, OMatrix, RowVector6, U6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{
    line_of_sight, wrap_angle, Obstacle, StateVector, TargetState, UavId, UavPose, Vec3,
};

/// Jacobian of the enabled channels with respect to `(px, py, pz, vx, vy, vz)`.
pub type Jacobian = OMatrix<f64, Dyn, U6>;

/// Minimum distance from the zenith/nadir below which bearings are singular.
pub const GIMBAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Range,
    Azimuth,
    Elevation,
    RadialSpeed,
}

/// Which quantities a radar reports. "Bearing" means both azimuth and
/// elevation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensingMode {
    pub range: bool,
    pub bearing: bool,
    pub doppler: bool,
}

impl SensingMode {
    pub const RANGE: Self = Self::new(true, false, false);
    pub const RANGE_DOPPLER: Self = Self::new(true, false, true);
    pub const BEARING: Self = Self::new(false, true, false);
    pub const BEARING_DOPPLER: Self = Self::new(false, true, true);
    pub const FULL: Self = Self::new(true, true, true);

    pub const fn new(range: bool, bearing: bool, doppler: bool) -> Self {
        Self {
            range,
            bearing,
            doppler,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.range || self.bearing || self.doppler)
    }

    /// Enabled channels in canonical row order.
    pub fn channels(&self) -> impl Iterator<Item = Channel> {
        [
            (self.range, Channel::Range),
            (self.bearing, Channel::Azimuth),
            (self.bearing, Channel::Elevation),
            (self.doppler, Channel::RadialSpeed),
        ]
        .into_iter()
        .filter_map(|(on, c)| on.then_some(c))
    }

    pub fn dimension(&self) -> usize {
        self.channels().count()
    }
}

impl fmt::Display for SensingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.range, "range"),
            (self.bearing, "bearing"),
            (self.doppler, "doppler"),
        ]
        .into_iter()
        .filter_map(|(on, s)| on.then_some(s))
        .collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for SensingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut mode = SensingMode::new(false, false, false);
        for part in s.split('+').map(str::trim) {
            let flag = match part {
                "range" | "ranging" => &mut mode.range,
                "bearing" => &mut mode.bearing,
                "doppler" => &mut mode.doppler,
                other => {
                    return Err(Error::Config(format!(
                        "unknown sensing channel {other:?} (expected range, bearing or doppler)"
                    )))
                }
            };
            *flag = true;
        }
        if mode.is_empty() {
            return Err(Error::Config(
                "sensing mode must enable at least one channel".into(),
            ));
        }
        Ok(mode)
    }
}

impl Serialize for SensingMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SensingMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Radar noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorParams {
    /// Ranging error at 1 m for a 1 m² target (m).
    pub sigma0r: f64,
    /// Angular error applied to azimuth and to elevation (rad).
    pub sigma_bearing: f64,
    /// Radial-speed error (m/s).
    pub sigma_doppler: f64,
    /// Target radar cross section (m²).
    pub rcs: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            sigma0r: 0.001,
            sigma_bearing: 10f64.to_radians(),
            sigma_doppler: 0.1,
            rcs: 0.1,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma0r", self.sigma0r),
            ("sigma_bearing", self.sigma_bearing),
            ("sigma_doppler", self.sigma_doppler),
            ("rcs", self.rcs),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "sensing.{name} = {v}: SensorParams values must be strictly positive"
                )));
            }
        }
        Ok(())
    }

    /// Multiplies every channel variance by `c`.
    pub fn scale_variances(&self, c: f64) -> Self {
        let s = c.sqrt();
        Self {
            sigma0r: self.sigma0r * s,
            sigma_bearing: self.sigma_bearing * s,
            sigma_doppler: self.sigma_doppler * s,
            rcs: self.rcs,
        }
    }
}

/// Ranging standard deviation at distance `d`: `sigma0r * d² / sqrt(rcs)`.
pub fn range_std(d: f64, params: &SensorParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("range_std needs d > 0, got {d}")));
    }
    Ok(params.sigma0r * d * d / params.rcs.sqrt())
}

/// Noise variance of `channel` when the target is `range` meters away.
pub fn channel_variance(channel: Channel, range: f64, params: &SensorParams) -> Result<f64> {
    Ok(match channel {
        Channel::Range => range_std(range, params)?.powi(2),
        Channel::Azimuth | Channel::Elevation => params.sigma_bearing.powi(2),
        Channel::RadialSpeed => params.sigma_doppler.powi(2),
    })
}

/// Values of the four channels; absent channels are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementValues {
    pub range: Option<f64>,
    pub azimuth: Option<f64>,
    pub elevation: Option<f64>,
    pub radial_speed: Option<f64>,
}

impl MeasurementValues {
    pub fn get(&self, channel: Channel) -> Option<f64> {
        match channel {
            Channel::Range => self.range,
            Channel::Azimuth => self.azimuth,
            Channel::Elevation => self.elevation,
            Channel::RadialSpeed => self.radial_speed,
        }
    }

    fn slot(&mut self, channel: Channel) -> &mut Option<f64> {
        match channel {
            Channel::Range => &mut self.range,
            Channel::Azimuth => &mut self.azimuth,
            Channel::Elevation => &mut self.elevation,
            Channel::RadialSpeed => &mut self.radial_speed,
        }
    }

    /// Channels that carry a value, in canonical order.
    pub fn channels(&self) -> impl Iterator<Item = Channel> + '_ {
        [
            Channel::Range,
            Channel::Azimuth,
            Channel::Elevation,
            Channel::RadialSpeed,
        ]
        .into_iter()
        .filter(|c| self.get(*c).is_some())
    }

    /// The mode that would produce exactly this value set.
    pub fn mode(&self) -> SensingMode {
        SensingMode::new(
            self.range.is_some(),
            self.azimuth.is_some() && self.elevation.is_some(),
            self.radial_speed.is_some(),
        )
    }
}

/// One radar report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub origin_id: UavId,
    pub origin_pose: Vec3,
    pub step: u64,
    /// Communication hops travelled before reaching the consumer.
    pub hop_age: u32,
    pub values: MeasurementValues,
}

struct Geometry {
    delta: Vec3,
    range: f64,
    horizontal: f64,
}

fn geometry(target: &StateVector, sensor: &Vec3) -> Result<Geometry> {
    let delta = Vec3::new(target[0], target[1], target[2]) - sensor;
    let range = delta.norm();
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::Singularity(format!(
            "target and sensor coincide (or are non-finite) at {:?}",
            sensor.as_slice()
        )));
    }
    let horizontal = delta.x.hypot(delta.y);
    Ok(Geometry {
        delta,
        range,
        horizontal,
    })
}

/// Noise-free channel values `h(s)` seen from `sensor`. Radial speed is
/// positive when the target recedes.
pub fn predict_measurement(
    target: &StateVector,
    sensor: &Vec3,
    mode: SensingMode,
) -> Result<MeasurementValues> {
    let g = geometry(target, sensor)?;
    let velocity = Vec3::new(target[3], target[4], target[5]);
    let mut out = MeasurementValues::default();
    for c in mode.channels() {
        *out.slot(c) = Some(match c {
            Channel::Range => g.range,
            Channel::Azimuth => wrap_angle(g.delta.y.atan2(g.delta.x)),
            Channel::Elevation => (g.delta.z / g.range).clamp(-1.0, 1.0).asin(),
            Channel::RadialSpeed => velocity.dot(&g.delta) / g.range,
        });
    }
    Ok(out)
}

/// `∂h/∂s` for the enabled channels (rows) over the six state components.
pub fn measurement_jacobian(
    target: &StateVector,
    sensor: &Vec3,
    mode: SensingMode,
) -> Result<Jacobian> {
    let g = geometry(target, sensor)?;
    let Geometry {
        delta,
        range,
        horizontal,
    } = g;
    if mode.bearing {
        let elevation = (delta.z / range).clamp(-1.0, 1.0).asin();
        if FRAC_PI_2 - elevation.abs() < GIMBAL_MARGIN || horizontal == 0.0 {
            return Err(Error::Singularity(format!(
                "bearing undefined at elevation {elevation} rad"
            )));
        }
    }
    let velocity = Vec3::new(target[3], target[4], target[5]);
    let los = delta / range;
    let r2 = range * range;
    let h2 = horizontal * horizontal;

    let rows: Vec<RowVector6<f64>> = mode
        .channels()
        .map(|c| match c {
            Channel::Range => RowVector6::new(los.x, los.y, los.z, 0.0, 0.0, 0.0),
            Channel::Azimuth => RowVector6::new(-delta.y / h2, delta.x / h2, 0.0, 0.0, 0.0, 0.0),
            Channel::Elevation => RowVector6::new(
                -delta.x * delta.z / (r2 * horizontal),
                -delta.y * delta.z / (r2 * horizontal),
                horizontal / r2,
                0.0,
                0.0,
                0.0,
            ),
            Channel::RadialSpeed => {
                let rate = velocity.dot(&los);
                let dp = (velocity - los * rate) / range;
                RowVector6::new(dp.x, dp.y, dp.z, los.x, los.y, los.z)
            }
        })
        .collect();
    Ok(Jacobian::from_rows(&rows))
}

/// Simulates one radar report. Returns `None` when an obstacle blocks the
/// line of sight.
///
/// Four standard normals are always drawn, in the order range, azimuth,
/// elevation, radial speed, whatever the mode. Configurations that differ
/// only in mode therefore share their noise realizations.
#[allow(clippy::too_many_arguments)]
pub fn measure<R: Rng + ?Sized>(
    uav: &UavPose,
    truth: &TargetState,
    mode: SensingMode,
    params: &SensorParams,
    obstacles: &[Obstacle],
    step: u64,
    rng: &mut R,
) -> Option<Measurement> {
    if !line_of_sight(&uav.position, &truth.position, obstacles) {
        return None;
    }
    let state = truth.to_vector();
    let clean = predict_measurement(&state, &uav.position, mode).ok()?;
    let normals: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let range = (truth.position - uav.position).norm();

    let mut values = MeasurementValues::default();
    for (i, c) in [
        Channel::Range,
        Channel::Azimuth,
        Channel::Elevation,
        Channel::RadialSpeed,
    ]
    .into_iter()
    .enumerate()
    {
        let Some(h) = clean.get(c) else { continue };
        let sigma = channel_variance(c, range, params).ok()?.sqrt();
        let z = h + sigma * normals[i];
        *values.slot(c) = Some(match c {
            Channel::Azimuth => wrap_angle(z),
            Channel::Elevation => z.clamp(-FRAC_PI_2, FRAC_PI_2),
            _ => z,
        });
    }
    if values
        .channels()
        .any(|c| !values.get(c).unwrap().is_finite())
    {
        return None;
    }
    Some(Measurement {
        origin_id: uav.id,
        origin_pose: uav.position,
        step,
        hop_age: 0,
        values,
    })
}

/// Residual `z - h` for one channel, with azimuth wrapped.
pub fn residual(channel: Channel, measured: f64, predicted: f64) -> f64 {
    match channel {
        Channel::Azimuth => wrap_angle(measured - predicted),
        _ => measured - predicted,
    }
}
