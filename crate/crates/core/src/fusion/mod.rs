//! Per-UAV Bayesian tracking filter.
//!
//! Beliefs are Gaussian over the six-dimensional target state. Prediction
//! uses a nearly-constant-velocity model with white-acceleration noise;
//! updates fuse hop-aged radar reports one at a time with either an extended
//! or an unscented Kalman step.

mod ekf;
mod init;
mod ukf;

use nalgebra::{Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::sensing::{Measurement, SensingMode, SensorParams};
use crate::world::{StateVector, TargetState};

pub use init::{init_belief, PriorConfig};

/// Gaussian posterior over `(px, py, pz, vx, vy, vz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub mean: StateVector,
    pub covariance: Matrix6<f64>,
    pub step: u64,
}

impl Belief {
    pub fn new(mean: StateVector, covariance: Matrix6<f64>, step: u64) -> Self {
        Self {
            mean,
            covariance,
            step,
        }
    }

    pub fn symmetrize(&mut self) {
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.covariance).eigenvalues.min()
    }

    pub fn is_valid(&self) -> bool {
        let c = &self.covariance;
        let asym = (c - c.transpose()).abs().max();
        self.mean.iter().all(|v| v.is_finite()) && asym < 1e-9 && self.min_eigenvalue() > -1e-9
    }
}

/// Nearly-constant-velocity dynamics with white-acceleration intensity `q`
/// (m²/s³) on the horizontal axes and `q_vertical` on z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub q: f64,
    pub q_vertical: f64,
}

impl MotionModel {
    pub fn isotropic(q: f64) -> Self {
        Self { q, q_vertical: q }
    }

    pub fn transition(dt: f64) -> Matrix6<f64> {
        let mut f = Matrix6::identity();
        for i in 0..3 {
            f[(i, i + 3)] = dt;
        }
        f
    }

    pub fn process_noise(&self, dt: f64) -> Matrix6<f64> {
        let mut q = Matrix6::zeros();
        let (pp, pv, vv) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
        for (i, qi) in [self.q, self.q, self.q_vertical].into_iter().enumerate() {
            q[(i, i)] = pp * qi;
            q[(i, i + 3)] = pv * qi;
            q[(i + 3, i)] = pv * qi;
            q[(i + 3, i + 3)] = vv * qi;
        }
        q
    }
}

/// Variance inflation for hop-aged reports: `1 + hop_age * dt * q_age`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingModel {
    pub q_age: f64,
    pub dt: f64,
}

impl AgingModel {
    pub const OFF: Self = Self {
        q_age: 0.0,
        dt: 0.0,
    };

    pub fn inflation(&self, hop_age: u32) -> f64 {
        1.0 + hop_age as f64 * self.dt * self.q_age
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    #[default]
    Ekf,
    Ukf,
}

/// One-step prediction `x' = F x`, `P' = F P Fᵀ + Q`.
pub fn predict(belief: &Belief, dt: f64, model: &MotionModel) -> Belief {
    if dt == 0.0 {
        return belief.clone();
    }
    let f = MotionModel::transition(dt);
    let mut out = Belief {
        mean: f * belief.mean,
        covariance: f * belief.covariance * f.transpose() + model.process_noise(dt),
        step: belief.step + 1,
    };
    out.symmetrize();
    out
}

/// Fuses `measurements` into `belief`. The EKF stacks every report into one
/// iterated update; the UKF fuses them one at a time. Reports are taken in
/// ascending `(hop_age, origin_id)` order and only channels enabled in
/// `mode` are used.
pub fn update(
    belief: &Belief,
    measurements: &[Measurement],
    mode: SensingMode,
    params: &SensorParams,
    aging: &AgingModel,
    kind: FilterKind,
) -> Belief {
    let mut ordered: Vec<&Measurement> = measurements.iter().collect();
    ordered.sort_by_key(|m| (m.hop_age, m.origin_id));
    match kind {
        FilterKind::Ekf => ekf::update_all(belief, &ordered, mode, params, aging),
        FilterKind::Ukf => {
            let mut b = belief.clone();
            for m in ordered {
                match ukf::update_one(&b, m, mode, params, aging) {
                    Some(n) => b = n,
                    None => log::debug!(
                        "rejected report from UAV {} at step {} (non-finite innovation or singular geometry)",
                        m.origin_id,
                        m.step
                    ),
                }
            }
            b
        }
    }
}

/// Mirrors a belief through the horizontal plane `z = plane`.
pub fn reflect_through(belief: &Belief, plane: f64) -> Belief {
    let mirror = Matrix6::from_diagonal(&StateVector::new(1.0, 1.0, -1.0, 1.0, 1.0, -1.0));
    let mut mean = mirror * belief.mean;
    mean.z += 2.0 * plane;
    Belief {
        mean,
        covariance: mirror * belief.covariance * mirror,
        step: belief.step,
    }
}

/// Resolves the mirror ambiguity of sensors that share one altitude: a
/// posterior mean outside the altitude band `[low, high]` is mirrored through
/// the mean altitude of `measurements`' sensors when that brings it back
/// inside the band.
pub fn resolve_mirror(
    belief: &Belief,
    measurements: &[Measurement],
    low: f64,
    high: f64,
) -> Belief {
    let z = belief.mean.z;
    if measurements.is_empty() || (low..=high).contains(&z) {
        return belief.clone();
    }
    let plane =
        measurements.iter().map(|m| m.origin_pose.z).sum::<f64>() / measurements.len() as f64;
    if (low..=high).contains(&(2.0 * plane - z)) {
        reflect_through(belief, plane)
    } else {
        belief.clone()
    }
}

/// MMSE point estimate (the posterior mean).
pub fn estimate(belief: &Belief) -> StateVector {
    belief.mean
}

/// Normalized estimation error squared over all six state components.
pub fn nees(belief: &Belief, truth: &TargetState) -> f64 {
    let e = truth.to_vector() - belief.mean;
    let solve = |c: Matrix6<f64>| c.cholesky().map(|ch| e.dot(&ch.solve(&e)));
    solve(belief.covariance)
        .or_else(|| solve(belief.covariance + Matrix6::identity() * 1e-9))
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{predict_measurement, MeasurementValues};
    use crate::world::{UavId, Vec3};

    fn belief(mean: [f64; 6], diag: f64) -> Belief {
        Belief::new(
            StateVector::from_row_slice(&mean),
            Matrix6::identity() * diag,
            0,
        )
    }

    fn report(
        origin: usize,
        sensor: Vec3,
        truth: &StateVector,
        mode: SensingMode,
        hop_age: u32,
    ) -> Measurement {
        Measurement {
            origin_id: UavId(origin),
            origin_pose: sensor,
            step: 0,
            hop_age,
            values: predict_measurement(truth, &sensor, mode).unwrap(),
        }
    }

    #[test]
    fn reflection_flips_z_and_vz() {
        let mut b = belief([3.0, 4.0, -25.0, 1.0, 2.0, -0.5], 1.0);
        b.covariance[(0, 2)] = 0.3;
        b.covariance[(2, 0)] = 0.3;
        b.covariance[(2, 5)] = 0.2;
        b.covariance[(5, 2)] = 0.2;
        let r = reflect_through(&b, 5.0);
        assert_eq!(r.mean, StateVector::new(3.0, 4.0, 35.0, 1.0, 2.0, 0.5));
        assert_eq!(r.covariance[(0, 2)], -0.3);
        // z and vz flip together, so their covariance keeps its sign
        assert_eq!(r.covariance[(2, 5)], 0.2);
        assert_eq!(r.covariance.trace(), b.covariance.trace());
        assert_eq!(reflect_through(&r, 5.0), b);
    }

    #[test]
    fn mirror_resolution_uses_sensor_plane() {
        let truth = StateVector::new(0.0, 0.0, 30.0, 0.0, 0.0, 0.0);
        let reports: Vec<_> = [Vec3::new(50.0, 0.0, 60.0), Vec3::new(-50.0, 10.0, 80.0)]
            .iter()
            .enumerate()
            .map(|(i, s)| report(i, *s, &truth, SensingMode::RANGE, 1))
            .collect();
        // plane at z = 70: 110 maps to 30
        let above = belief([1.0, 2.0, 110.0, 0.0, 0.0, 0.0], 4.0);
        let r = resolve_mirror(&above, &reports, 0.0, 80.0);
        assert!((r.mean.z - 30.0).abs() < 1e-12);
        let inside = belief([1.0, 2.0, 75.0, 0.0, 0.0, 0.0], 4.0);
        assert_eq!(resolve_mirror(&inside, &reports, 0.0, 80.0), inside);
        // 200 maps to -60, still outside: left alone
        let far = belief([1.0, 2.0, 200.0, 0.0, 0.0, 0.0], 4.0);
        assert_eq!(resolve_mirror(&far, &reports, 0.0, 80.0), far);
        assert_eq!(resolve_mirror(&above, &[], 0.0, 80.0), above);
    }

    #[test]
    fn zero_dt_is_identity() {
        let b = belief([1.0, 2.0, 3.0, 0.5, 0.0, 0.0], 4.0);
        assert_eq!(predict(&b, 0.0, &MotionModel::isotropic(0.5)), b);
    }

    #[test]
    fn deterministic_drift() {
        let mut b = belief([0.0; 6], 1.0);
        b.covariance[(0, 3)] = 0.2;
        b.covariance[(3, 0)] = 0.2;
        let p = predict(&b, 2.0, &MotionModel::isotropic(0.0));
        assert_eq!(p.mean, b.mean);
        let f = MotionModel::transition(2.0);
        assert!(
            (p.covariance - f * b.covariance * f.transpose())
                .abs()
                .max()
                < 1e-12
        );
    }

    #[test]
    fn vertical_intensity_only_touches_z() {
        let iso = MotionModel::isotropic(0.5).process_noise(1.0);
        let flat = MotionModel {
            q: 0.5,
            q_vertical: 0.0,
        }
        .process_noise(1.0);
        for (i, j) in [(0, 0), (1, 4), (3, 3), (4, 4)] {
            assert_eq!(iso[(i, j)], flat[(i, j)]);
        }
        for (i, j) in [(2, 2), (2, 5), (5, 2), (5, 5)] {
            assert!(iso[(i, j)] > 0.0);
            assert_eq!(flat[(i, j)], 0.0);
        }
    }

    #[test]
    fn linear_prediction_and_trace_growth() {
        let b = belief([0.0, 0.0, 30.0, 1.5, 0.0, 0.0], 2.0);
        let model = MotionModel::isotropic(0.5);
        let p = predict(&b, 1.0, &model);
        assert_eq!(
            p.mean.fixed_rows::<3>(0).clone_owned(),
            Vec3::new(1.5, 0.0, 30.0)
        );
        let f = MotionModel::transition(1.0);
        assert!(p.covariance.trace() >= (f * b.covariance * f.transpose()).trace());
        assert_eq!(p.step, 1);
    }

    #[test]
    fn empty_update_is_noop() {
        let b = belief([1.0; 6], 3.0);
        for kind in [FilterKind::Ekf, FilterKind::Ukf] {
            let u = update(
                &b,
                &[],
                SensingMode::FULL,
                &SensorParams::default(),
                &AgingModel::OFF,
                kind,
            );
            assert_eq!(u, b);
        }
    }

    #[test]
    fn estimate_is_mean() {
        let b = belief([1.0, -2.0, 3.0, 0.1, 0.2, 0.3], 5.0);
        assert_eq!(estimate(&b), b.mean);
        let scaled = Belief {
            covariance: b.covariance * 100.0,
            ..b.clone()
        };
        assert_eq!(estimate(&scaled), estimate(&b));
    }

    #[test]
    fn nees_basics() {
        let truth = TargetState::planar(Vec3::new(1.0, 2.0, 3.0), 1.5, 0.0);
        let at_truth = Belief::new(truth.to_vector(), Matrix6::identity(), 0);
        assert_eq!(nees(&at_truth, &truth), 0.0);
        let mut off = at_truth.clone();
        off.mean[1] += 1.0;
        assert!((nees(&off, &truth) - 1.0).abs() < 1e-15);
        // Singular covariance is regularized rather than failing.
        let singular = Belief::new(off.mean, Matrix6::zeros(), 0);
        assert!(nees(&singular, &truth).is_finite());
    }

    /// 1-D conjugate Gaussian: a range sensor far down the x axis sees px
    /// through an almost linear map.
    #[test]
    fn scalar_update_matches_kalman_formulas() {
        let prior_var = 4.0;
        let mut b = belief([10.0, 0.0, 0.0, 0.0, 0.0, 0.0], prior_var);
        b.mean[0] = 10.0;
        let sensor = Vec3::zeros();
        let z = 11.0;
        let params = SensorParams {
            sigma0r: 0.01,
            ..SensorParams::default()
        };
        let r = (params.sigma0r * 100.0 / params.rcs.sqrt()).powi(2);
        let m = Measurement {
            origin_id: UavId(0),
            origin_pose: sensor,
            step: 0,
            hop_age: 0,
            values: MeasurementValues {
                range: Some(z),
                ..Default::default()
            },
        };
        let post = update(
            &b,
            &[m],
            SensingMode::RANGE,
            &params,
            &AgingModel::OFF,
            FilterKind::Ekf,
        );
        let k = prior_var / (prior_var + r);
        let mean = 10.0 + k * (z - 10.0);
        let var = (1.0 - k) * prior_var;
        assert!((post.mean[0] - mean).abs() < 1e-12);
        assert!((post.covariance[(0, 0)] - var).abs() < 1e-12);
        // Unobserved directions are untouched.
        assert!((post.covariance[(1, 1)] - prior_var).abs() < 1e-12);
    }

    #[test]
    fn aging_inflates_noise() {
        let truth = StateVector::new(50.0, 0.0, 30.0, 1.0, 0.0, 0.0);
        let b = Belief::new(
            truth + StateVector::new(3.0, -2.0, 1.0, 0.0, 0.0, 0.0),
            Matrix6::identity() * 100.0,
            0,
        );
        let aging = AgingModel {
            q_age: 1.0,
            dt: 1.0,
        };
        let params = SensorParams::default();
        let fresh = update(
            &b,
            &[report(0, Vec3::zeros(), &truth, SensingMode::BEARING, 0)],
            SensingMode::BEARING,
            &params,
            &aging,
            FilterKind::Ekf,
        );
        let aged = update(
            &b,
            &[report(0, Vec3::zeros(), &truth, SensingMode::BEARING, 3)],
            SensingMode::BEARING,
            &params,
            &aging,
            FilterKind::Ekf,
        );
        assert!(aged.covariance.trace() > fresh.covariance.trace());
        assert_eq!(aging.inflation(3), 4.0);
        assert_eq!(AgingModel::OFF.inflation(7), 1.0);
    }

    #[test]
    fn noiseless_triangulation_converges() {
        let truth = StateVector::new(20.0, -10.0, 30.0, 0.0, 0.0, 0.0);
        let sensors = [
            Vec3::new(-40.0, 0.0, 50.0),
            Vec3::new(60.0, 40.0, 45.0),
            Vec3::new(10.0, -70.0, 60.0),
        ];
        let params = SensorParams {
            sigma0r: 1e-7,
            sigma_bearing: 1e-6,
            sigma_doppler: 1e-6,
            rcs: 0.1,
        };
        let mode = SensingMode::new(true, true, false);
        let reports: Vec<_> = sensors
            .iter()
            .enumerate()
            .map(|(i, s)| report(i, *s, &truth, mode, 0))
            .collect();
        for kind in [FilterKind::Ekf, FilterKind::Ukf] {
            let mut b = belief([28.0, -4.0, 22.0, 0.0, 0.0, 0.0], 400.0);
            for _ in 0..3 {
                b = update(&b, &reports, mode, &params, &AgingModel::OFF, kind);
            }
            let err = (b.mean - truth).fixed_rows::<3>(0).norm();
            assert!(err < 0.1, "{kind:?} error {err}");
            assert!(b.is_valid());
        }
    }

    #[test]
    fn same_age_order_is_immaterial_when_noiseless() {
        let truth = StateVector::new(5.0, 12.0, 30.0, 1.0, 0.5, 0.0);
        let mode = SensingMode::FULL;
        let params = SensorParams {
            sigma0r: 1e-6,
            sigma_bearing: 1e-6,
            sigma_doppler: 1e-6,
            rcs: 1.0,
        };
        let sensors = [
            Vec3::new(-40.0, 0.0, 50.0),
            Vec3::new(60.0, 40.0, 45.0),
            Vec3::new(10.0, -70.0, 60.0),
        ];
        let mut reports: Vec<_> = sensors
            .iter()
            .enumerate()
            .map(|(i, s)| report(i, *s, &truth, mode, 1))
            .collect();
        let b = belief([8.0, 10.0, 27.0, 0.0, 0.0, 0.0], 100.0);
        let a = update(
            &b,
            &reports,
            mode,
            &params,
            &AgingModel::OFF,
            FilterKind::Ekf,
        );
        // Relabel so the sort visits the reports in reverse.
        for (r, id) in reports.iter_mut().zip([2, 1, 0]) {
            r.origin_id = UavId(id);
        }
        let c = update(
            &b,
            &reports,
            mode,
            &params,
            &AgingModel::OFF,
            FilterKind::Ekf,
        );
        assert!((a.mean - c.mean).fixed_rows::<3>(0).norm() < 1e-9);
    }
}
