use nalgebra::{DMatrix, DVector, Matrix6};

use super::{AgingModel, Belief};
use crate::sensing::{
    channel_variance, measurement_jacobian, predict_measurement, residual, Jacobian, Measurement,
    SensingMode, SensorParams,
};
use crate::world::StateVector;

/// Usable channels of `m` under `mode`.
pub(super) fn active_mode(m: &Measurement, mode: SensingMode) -> SensingMode {
    let have = m.values.mode();
    SensingMode::new(
        have.range && mode.range,
        have.bearing && mode.bearing,
        have.doppler && mode.doppler,
    )
}

/// Relinearization passes per update. One pass is the textbook EKF; more
/// passes move the linearization point to the posterior mean (iterated EKF),
/// which matters when precise reports meet a loose prior.
const MAX_PASSES: usize = 10;
const CONVERGED: f64 = 1e-10;

/// One usable report with its enabled channels and noise variances.
struct Row<'a> {
    m: &'a Measurement,
    mode: SensingMode,
    variances: Vec<f64>,
}

/// Joint Joseph-form iterated EKF update with every usable report of one
/// step, stacked in the given order. Reports whose channels are all
/// disabled, or that cannot be linearized at the prior, are skipped.
pub(super) fn update_all(
    belief: &Belief,
    reports: &[&Measurement],
    mode: SensingMode,
    params: &SensorParams,
    aging: &AgingModel,
) -> Belief {
    let prior = belief.mean;
    let mut rows = Vec::with_capacity(reports.len());
    for m in reports {
        let mode = active_mode(m, mode);
        let predicted_range = (prior.fixed_rows::<3>(0) - m.origin_pose).norm();
        let inflation = aging.inflation(m.hop_age);
        let variances: Option<Vec<f64>> = mode
            .channels()
            .map(|c| {
                channel_variance(c, predicted_range, params)
                    .ok()
                    .map(|v| v * inflation)
            })
            .collect();
        let usable = !mode.is_empty()
            && measurement_jacobian(&prior, &m.origin_pose, mode).is_ok()
            && variances.is_some();
        match variances {
            Some(variances) if usable => rows.push(Row { m, mode, variances }),
            _ => log::debug!(
                "rejected report from UAV {} at step {} (unusable channels or singular geometry)",
                m.origin_id,
                m.step
            ),
        }
    }
    if rows.is_empty() {
        return belief.clone();
    }
    let noise = DMatrix::from_diagonal(&DVector::from_iterator(
        rows.iter().map(|r| r.variances.len()).sum(),
        rows.iter().flat_map(|r| r.variances.iter().copied()),
    ));

    let p = &belief.covariance;
    let mut x = prior;
    let mut last = None;
    for _ in 0..MAX_PASSES {
        let Some(step) = linearized_step(&prior, &x, p, &rows, &noise) else {
            break;
        };
        let moved = (step.0 - x).norm();
        x = step.0;
        last = Some(step);
        if moved <= CONVERGED * (1.0 + x.norm()) {
            break;
        }
    }
    let Some((mean, gain, h)) = last else {
        log::debug!(
            "joint update failed at step {}; belief unchanged",
            belief.step
        );
        return belief.clone();
    };

    let ikh = Matrix6::identity() - &gain * &h;
    let covariance = ikh * p * ikh.transpose() + &gain * noise * gain.transpose();
    if !covariance.iter().all(|v| v.is_finite()) {
        return belief.clone();
    }
    let mut out = Belief {
        mean,
        covariance,
        step: belief.step,
    };
    out.symmetrize();
    out
}

type Gain = nalgebra::OMatrix<f64, nalgebra::U6, nalgebra::Dyn>;

/// One Gauss-Newton pass linearized at `x`: returns the new mean, the gain
/// and the stacked Jacobian used.
fn linearized_step(
    prior: &StateVector,
    x: &StateVector,
    p: &Matrix6<f64>,
    rows: &[Row<'_>],
    noise: &DMatrix<f64>,
) -> Option<(StateVector, Gain, Jacobian)> {
    let dim = noise.nrows();
    let mut h = Jacobian::zeros(dim);
    let mut innovation = DVector::zeros(dim);
    let mut at = 0;
    for r in rows {
        let predicted = predict_measurement(x, &r.m.origin_pose, r.mode).ok()?;
        let jac = measurement_jacobian(x, &r.m.origin_pose, r.mode).ok()?;
        for (k, c) in r.mode.channels().enumerate() {
            innovation[at + k] = residual(c, r.m.values.get(c)?, predicted.get(c)?);
        }
        h.rows_mut(at, jac.nrows()).copy_from(&jac);
        at += jac.nrows();
    }
    innovation -= &h * (prior - x);
    if !innovation.iter().all(|v| v.is_finite()) {
        return None;
    }
    let pht = p * h.transpose();
    let s = &h * &pht + noise;
    let gain: Gain = s.cholesky()?.solve(&pht.transpose()).transpose();
    let mean = prior + &gain * innovation;
    mean.iter()
        .all(|v| v.is_finite())
        .then_some((mean, gain, h))
}
