use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use super::Belief;
use crate::error::{Error, Result};
use crate::sensing::{range_std, Measurement, SensorParams};
use crate::world::{Aabb, StateVector, Vec3};

/// Prior used when a track is started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// Initial position standard deviation per axis (m).
    pub position_sigma: f64,
    /// Initial velocity standard deviation per axis (m/s).
    pub velocity_sigma: f64,
    /// Surveillance volume; its center is the fallback position and its
    /// half-extents regularize range-only trilateration.
    pub prior_box: Option<Aabb>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            position_sigma: 20.0,
            velocity_sigma: 2.0,
            prior_box: None,
        }
    }
}

impl PriorConfig {
    fn covariance(&self) -> Matrix6<f64> {
        let p = self.position_sigma.powi(2);
        let v = self.velocity_sigma.powi(2);
        Matrix6::from_diagonal(&StateVector::new(p, p, p, v, v, v))
    }
}

/// Starts a track. The position comes from, in order of preference:
/// range+bearing back-projection, least-squares intersection of bearing rays,
/// range-only trilateration, or the prior box center. Velocity starts at zero.
///
/// When a prior box is configured, a geometric fix is only accepted if its own
/// information supports the prior spread, i.e. its worst-direction standard
/// deviation is at most `position_sigma`; otherwise the box center is used.
/// The prior therefore asserts that the target starts within about
/// `position_sigma` of the box center.
/// This keeps the declared prior covariance honest for clustered or distant
/// sensors.
pub fn init_belief(
    measurements: &[Measurement],
    prior: &PriorConfig,
    params: &SensorParams,
    step: u64,
) -> Result<Belief> {
    let required = if prior.prior_box.is_some() {
        prior.position_sigma.powi(-2)
    } else {
        0.0
    };
    let accept = |fix: Option<Fix>| {
        fix.filter(|f| min_eigenvalue(&f.information) >= required)
            .map(|f| f.position)
    };
    let position = accept(back_projection(measurements, params))
        .or_else(|| accept(ray_intersection(measurements, params)))
        .or_else(|| accept(trilateration(measurements, prior, params)))
        .or_else(|| prior.prior_box.map(|b| b.center()))
        .ok_or_else(|| {
            Error::Initialization(format!(
                "{} report(s) cannot fix a position and no prior box is configured",
                measurements.len()
            ))
        })?;
    let mean = StateVector::new(position.x, position.y, position.z, 0.0, 0.0, 0.0);
    Ok(Belief::new(mean, prior.covariance(), step))
}

/// A geometric position fix and the measurement information behind it.
struct Fix {
    position: Vec3,
    information: Matrix3<f64>,
}

fn min_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}

fn direction(azimuth: f64, elevation: f64) -> Vec3 {
    Vec3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

/// Inverse-variance average of single-report back-projections, each with
/// isotropic variance `σ_r² + (r σ_b)²`.
fn back_projection(measurements: &[Measurement], params: &SensorParams) -> Option<Fix> {
    let mut acc = Vec3::zeros();
    let mut total = 0.0;
    for m in measurements {
        let (Some(r), Some(a), Some(e)) = (m.values.range, m.values.azimuth, m.values.elevation)
        else {
            continue;
        };
        if !(r > 0.0) {
            continue;
        }
        let var = range_std(r, params).ok()?.powi(2) + (r * params.sigma_bearing).powi(2);
        let w = 1.0 / var;
        acc += (m.origin_pose + direction(a, e) * r) * w;
        total += w;
    }
    (total > 0.0).then(|| Fix {
        position: acc / total,
        information: Matrix3::identity() * total,
    })
}

fn ray_intersection(measurements: &[Measurement], params: &SensorParams) -> Option<Fix> {
    let mut a = Matrix3::zeros();
    let mut b = Vec3::zeros();
    let mut rays = Vec::new();
    for m in measurements {
        let (Some(az), Some(el)) = (m.values.azimuth, m.values.elevation) else {
            continue;
        };
        let u = direction(az, el);
        let proj = Matrix3::identity() - u * u.transpose();
        a += proj;
        b += proj * m.origin_pose;
        rays.push((m.origin_pose, proj));
    }
    if rays.len() < 2 {
        return None;
    }
    let eig = a.symmetric_eigenvalues();
    if eig.min() < 1e-6 * eig.max() {
        return None;
    }
    let position = a.cholesky()?.solve(&b);
    let information = rays.iter().fold(Matrix3::zeros(), |acc, (s, proj)| {
        let d2 = (position - s).norm_squared().max(1e-12);
        acc + proj / (d2 * params.sigma_bearing.powi(2))
    });
    Some(Fix {
        position,
        information,
    })
}

/// Gauss-Newton on range residuals. With a prior box the solve is regularized
/// toward its center; without one it needs four ranges and starts from the
/// linearized (difference-of-squares) solution.
fn trilateration(
    measurements: &[Measurement],
    prior: &PriorConfig,
    params: &SensorParams,
) -> Option<Fix> {
    let ranges: Vec<(Vec3, f64, f64)> = measurements
        .iter()
        .filter_map(|m| {
            let r = m.values.range?;
            let sigma = range_std(r.max(1e-3), params).ok()?;
            Some((m.origin_pose, r, sigma))
        })
        .collect();
    if ranges.is_empty() {
        return None;
    }
    let (start, regularizer) = match prior.prior_box {
        Some(b) => {
            let half = (b.max - b.min) * 0.5;
            (b.center(), Some((b.center(), half.map(|h| 1.0 / (h * h)))))
        }
        None => (linear_trilateration(&ranges)?, None),
    };

    let range_information = |p: &Vec3| -> (Matrix3<f64>, Vec3) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vec3::zeros();
        for (s, r, sigma) in &ranges {
            let d = p - s;
            let n = d.norm();
            if n < 1e-9 {
                continue;
            }
            let g = d / n;
            let w = 1.0 / (sigma * sigma);
            jtj += g * g.transpose() * w;
            jtr += g * ((r - n) * w);
        }
        (jtj, jtr)
    };

    let mut p = start;
    let cost = |p: &Vec3| -> f64 {
        let mut c: f64 = ranges
            .iter()
            .map(|(s, r, sigma)| ((r - (p - s).norm()) / sigma).powi(2))
            .sum();
        if let Some((c0, w)) = &regularizer {
            c += (p - c0).component_mul(&(p - c0)).dot(w);
        }
        c
    };
    let mut current = cost(&p);
    for _ in 0..50 {
        let (mut jtj, mut jtr) = range_information(&p);
        if let Some((c0, w)) = &regularizer {
            jtj += Matrix3::from_diagonal(w);
            jtr += (c0 - p).component_mul(w);
        }
        let step: Vector3<f64> = match (jtj + Matrix3::identity() * 1e-12).cholesky() {
            Some(c) => c.solve(&jtr),
            None => break,
        };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let candidate = p + step * scale;
            let c = cost(&candidate);
            if c < current {
                p = candidate;
                current = c;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved || step.norm() * scale < 1e-6 {
            break;
        }
    }
    p.iter().all(|v| v.is_finite()).then(|| Fix {
        position: p,
        information: range_information(&p).0,
    })
}

fn linear_trilateration(ranges: &[(Vec3, f64, f64)]) -> Option<Vec3> {
    if ranges.len() < 4 {
        return None;
    }
    let (s0, r0, _) = ranges[0];
    let mut ata = Matrix3::zeros();
    let mut atb = Vec3::zeros();
    for (s, r, _) in &ranges[1..] {
        let row = (s - s0) * 2.0;
        let rhs = r0 * r0 - r * r + s.norm_squared() - s0.norm_squared();
        ata += row * row.transpose();
        atb += row * rhs;
    }
    let eig = ata.symmetric_eigenvalues();
    if eig.min() < 1e-9 * eig.max() {
        return None;
    }
    ata.cholesky().map(|c| c.solve(&atb))
}
