use nalgebra::{DMatrix, DVector, Dyn, Matrix6, OMatrix, U6};

use super::ekf::active_mode;
use super::{AgingModel, Belief};
use crate::sensing::{
    channel_variance, predict_measurement, residual, Channel, Measurement, SensingMode,
    SensorParams,
};
use crate::world::StateVector;

const N: usize = 6;
// Scaled unscented transform with alpha = 1, beta = 2, kappa = 0.
const ALPHA: f64 = 1.0;
const BETA: f64 = 2.0;
const KAPPA: f64 = 0.0;

struct SigmaPoints {
    points: Vec<StateVector>,
    wm: Vec<f64>,
    wc: Vec<f64>,
}

fn sigma_points(belief: &Belief) -> Option<SigmaPoints> {
    let lambda = ALPHA * ALPHA * (N as f64 + KAPPA) - N as f64;
    let scaled: Matrix6<f64> = belief.covariance * (N as f64 + lambda);
    let l = scaled.cholesky()?.l();
    let mut points = Vec::with_capacity(2 * N + 1);
    points.push(belief.mean);
    for i in 0..N {
        points.push(belief.mean + l.column(i));
    }
    for i in 0..N {
        points.push(belief.mean - l.column(i));
    }
    let w = 1.0 / (2.0 * (N as f64 + lambda));
    let mut wm = vec![w; 2 * N + 1];
    let mut wc = wm.clone();
    wm[0] = lambda / (N as f64 + lambda);
    wc[0] = wm[0] + 1.0 - ALPHA * ALPHA + BETA;
    Some(SigmaPoints { points, wm, wc })
}

/// Sigma-point update with one report. Azimuths are averaged on the circle.
pub(super) fn update_one(
    belief: &Belief,
    m: &Measurement,
    mode: SensingMode,
    params: &SensorParams,
    aging: &AgingModel,
) -> Option<Belief> {
    let mode = active_mode(m, mode);
    if mode.is_empty() {
        return None;
    }
    let channels: Vec<Channel> = mode.channels().collect();
    let dim = channels.len();
    let sp = sigma_points(belief)?;

    let mut z = DMatrix::zeros(dim, sp.points.len());
    for (k, x) in sp.points.iter().enumerate() {
        let h = predict_measurement(x, &m.origin_pose, mode).ok()?;
        for (row, c) in channels.iter().enumerate() {
            z[(row, k)] = h.get(*c)?;
        }
    }

    let mut z_mean = DVector::zeros(dim);
    for (row, c) in channels.iter().enumerate() {
        z_mean[row] = if *c == Channel::Azimuth {
            let (s, co) = (0..sp.points.len()).fold((0.0, 0.0), |(s, co), k| {
                (
                    s + sp.wm[k] * z[(row, k)].sin(),
                    co + sp.wm[k] * z[(row, k)].cos(),
                )
            });
            s.atan2(co)
        } else {
            (0..sp.points.len()).map(|k| sp.wm[k] * z[(row, k)]).sum()
        };
    }

    let predicted_range = (belief.mean.fixed_rows::<3>(0) - m.origin_pose).norm();
    let inflation = aging.inflation(m.hop_age);
    let mut s = DMatrix::zeros(dim, dim);
    for (row, c) in channels.iter().enumerate() {
        s[(row, row)] = channel_variance(*c, predicted_range, params).ok()? * inflation;
    }
    let mut cross = OMatrix::<f64, U6, Dyn>::zeros(dim);
    for k in 0..sp.points.len() {
        let dz = DVector::from_iterator(
            dim,
            channels
                .iter()
                .enumerate()
                .map(|(row, c)| residual(*c, z[(row, k)], z_mean[row])),
        );
        let dx = sp.points[k] - belief.mean;
        s += &dz * dz.transpose() * sp.wc[k];
        cross += dx * dz.transpose() * sp.wc[k];
    }

    let mut innovation = DVector::zeros(dim);
    for (row, c) in channels.iter().enumerate() {
        innovation[row] = residual(*c, m.values.get(*c)?, z_mean[row]);
    }
    if !innovation.iter().all(|v| v.is_finite()) {
        return None;
    }
    let s_inv = s.clone().cholesky()?.inverse();
    let gain = &cross * s_inv;
    let mean = belief.mean + &gain * innovation;
    let covariance: Matrix6<f64> = belief.covariance - &gain * s * gain.transpose();
    if !mean.iter().chain(covariance.iter()).all(|v| v.is_finite()) {
        return None;
    }
    let mut out = Belief {
        mean,
        covariance,
        step: belief.step,
    };
    out.symmetrize();
    Some(out)
}
