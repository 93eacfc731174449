use rand::Rng;
use serde::{Deserialize, Serialize};

use super::episode::EpisodeLog;
use crate::error::{Error, Result};
use crate::seeds::{stream_rng, Stream};
use crate::world::StateVector;

/// Which estimates enter the error average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consensus {
    /// Every UAV's local estimate is one sample.
    #[default]
    AllUavs,
    /// Per step, the UAV with the smallest position error.
    BestUav,
    /// The reference filter that fuses all reports centrally.
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub consensus: Consensus,
    /// Pooled over every post-detection sample of every run.
    pub position_rmse: f64,
    pub velocity_rmse: f64,
    /// Per-run RMSE, by run index; `None` for runs without a track.
    pub per_run_position: Vec<Option<f64>>,
    pub per_run_velocity: Vec<Option<f64>>,
    pub position_mean: f64,
    pub position_std: f64,
    pub velocity_mean: f64,
    pub velocity_std: f64,
    pub samples: usize,
}

impl RmseSummary {
    pub fn runs_used(&self) -> usize {
        self.per_run_position.iter().flatten().count()
    }

    /// Standard error of the mean per-run position RMSE.
    pub fn position_se(&self) -> f64 {
        let n = self.runs_used();
        if n < 2 {
            return f64::INFINITY;
        }
        self.position_std / (n as f64).sqrt()
    }
}

/// Squared (position, velocity) errors of one estimate.
fn squared_errors(estimate: &StateVector, truth: &StateVector) -> (f64, f64) {
    let e = estimate - truth;
    (
        e.fixed_rows::<3>(0).norm_squared(),
        e.fixed_rows::<3>(3).norm_squared(),
    )
}

fn run_samples(log: &EpisodeLog, consensus: Consensus, burn_in: u64) -> Vec<(f64, f64)> {
    log.records
        .iter()
        .filter(|r| r.step >= burn_in)
        .flat_map(|r| {
            let samples: Vec<(f64, f64)> = match consensus {
                Consensus::AllUavs => r
                    .uavs
                    .iter()
                    .filter_map(|u| u.estimate.map(|e| squared_errors(&e, &r.truth)))
                    .collect(),
                Consensus::BestUav => r
                    .uavs
                    .iter()
                    .filter_map(|u| u.estimate.map(|e| squared_errors(&e, &r.truth)))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .into_iter()
                    .collect(),
                Consensus::Central => r
                    .central
                    .map(|e| squared_errors(&e, &r.truth))
                    .into_iter()
                    .collect(),
            };
            samples
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Root-mean-square estimation error pooled over runs, steps and (for
/// [`Consensus::AllUavs`]) UAVs. Only steps with an estimate count; runs
/// without any are skipped with a warning.
pub fn rmse(logs: &[EpisodeLog], consensus: Consensus) -> Result<RmseSummary> {
    rmse_after(logs, consensus, 0)
}

/// [`rmse`] restricted to steps `>= burn_in`.
pub fn rmse_after(logs: &[EpisodeLog], consensus: Consensus, burn_in: u64) -> Result<RmseSummary> {
    if logs.is_empty() {
        return Err(Error::Config("rmse needs at least one episode log".into()));
    }
    let mut pos_total = 0.0;
    let mut vel_total = 0.0;
    let mut samples = 0;
    let mut per_run_position = Vec::with_capacity(logs.len());
    let mut per_run_velocity = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        let s = run_samples(log, consensus, burn_in);
        if s.is_empty() {
            log::warn!(
                "run {i} (seed {:#x}) has no post-detection samples; excluded",
                log.seed
            );
            per_run_position.push(None);
            per_run_velocity.push(None);
            continue;
        }
        let (p, v) = s
            .iter()
            .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        pos_total += p;
        vel_total += v;
        samples += s.len();
        per_run_position.push(Some((p / s.len() as f64).sqrt()));
        per_run_velocity.push(Some((v / s.len() as f64).sqrt()));
    }
    if samples == 0 {
        return Err(Error::Domain(
            "no run produced a post-detection estimate".into(),
        ));
    }
    let pos: Vec<f64> = per_run_position.iter().flatten().copied().collect();
    let vel: Vec<f64> = per_run_velocity.iter().flatten().copied().collect();
    let (position_mean, position_std) = mean_std(&pos);
    let (velocity_mean, velocity_std) = mean_std(&vel);
    Ok(RmseSummary {
        consensus,
        position_rmse: (pos_total / samples as f64).sqrt(),
        velocity_rmse: (vel_total / samples as f64).sqrt(),
        per_run_position,
        per_run_velocity,
        position_mean,
        position_std,
        velocity_mean,
        velocity_std,
        samples,
    })
}

/// Percentile bootstrap of the mean of paired differences `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedBootstrap {
    pub mean_difference: f64,
    pub lower: f64,
    pub upper: f64,
    /// Fraction of resampled means below zero.
    pub fraction_negative: f64,
    pub pairs: usize,
}

/// Bootstraps the mean paired difference over runs present in both inputs.
/// `confidence` is two-sided, e.g. 0.95 gives the 2.5 and 97.5 percentiles.
pub fn paired_bootstrap(
    a: &[Option<f64>],
    b: &[Option<f64>],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<PairedBootstrap> {
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((*x)? - (*y)?))
        .collect();
    if diffs.is_empty() || resamples == 0 {
        return Err(Error::Domain(
            "paired bootstrap needs at least one pair and one resample".into(),
        ));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::Domain(format!(
            "confidence {confidence} outside [0, 1)"
        )));
    }
    let n = diffs.len();
    let mut rng = stream_rng(seed, Stream::Bootstrap, 0, 0);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok(PairedBootstrap {
        mean_difference: diffs.iter().sum::<f64>() / n as f64,
        lower: pick(tail),
        upper: pick(1.0 - tail),
        fraction_negative: means.iter().filter(|m| **m < 0.0).count() as f64 / resamples as f64,
        pairs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::episode::{StepRecord, UavRecord};
    use crate::world::{UavId, Vec3};

    fn log_with_error(err: f64, steps: usize, uavs: usize) -> EpisodeLog {
        let truth = StateVector::new(1.0, 2.0, 3.0, 0.5, 0.0, 0.0);
        let est = truth + StateVector::new(err, 0.0, 0.0, 0.0, err / 10.0, 0.0);
        EpisodeLog {
            seed: 0,
            config_hash: String::new(),
            records: (0..steps as u64)
                .map(|step| StepRecord {
                    step,
                    truth,
                    uavs: (0..uavs)
                        .map(|i| UavRecord {
                            id: UavId(i),
                            pose: Vec3::zeros(),
                            estimate: Some(est),
                            nees: None,
                            los: true,
                            fresh: 1,
                            cost: None,
                        })
                        .collect(),
                    central: Some(truth),
                    central_nees: None,
                })
                .collect(),
        }
    }

    #[test]
    fn perfect_tracking_is_zero() {
        let s = rmse(&[log_with_error(0.0, 10, 3)], Consensus::AllUavs).unwrap();
        assert_eq!(s.position_rmse, 0.0);
        assert_eq!(s.velocity_rmse, 0.0);
        assert_eq!(s.samples, 30);
    }

    #[test]
    fn constant_error() {
        let s = rmse(&[log_with_error(3.0, 7, 1)], Consensus::AllUavs).unwrap();
        assert!((s.position_rmse - 3.0).abs() < 1e-12);
        assert!((s.velocity_rmse - 0.3).abs() < 1e-12);
    }

    #[test]
    fn pooled_over_runs() {
        let s = rmse(
            &[log_with_error(3.0, 10, 2), log_with_error(4.0, 10, 2)],
            Consensus::AllUavs,
        )
        .unwrap();
        assert!((s.position_rmse - (12.5f64).sqrt()).abs() < 1e-12);
        assert_eq!(s.per_run_position, vec![Some(3.0), Some(4.0)]);
        assert!((s.position_mean - 3.5).abs() < 1e-12);
        assert!((s.position_std - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn undetected_runs_are_excluded() {
        let mut empty = log_with_error(0.0, 5, 2);
        for r in &mut empty.records {
            for u in &mut r.uavs {
                u.estimate = None;
            }
        }
        let s = rmse(
            &[empty.clone(), log_with_error(2.0, 5, 2)],
            Consensus::AllUavs,
        )
        .unwrap();
        assert_eq!(s.per_run_position, vec![None, Some(2.0)]);
        assert!((s.position_rmse - 2.0).abs() < 1e-12);
        assert!(rmse(&[empty], Consensus::AllUavs).is_err());
        assert!(rmse(&[], Consensus::AllUavs).is_err());
    }

    #[test]
    fn best_and_central() {
        let mut log = log_with_error(5.0, 4, 2);
        for r in &mut log.records {
            r.uavs[1].estimate = Some(r.truth + StateVector::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
        }
        let best = rmse(&[log.clone()], Consensus::BestUav).unwrap();
        assert!((best.position_rmse - 1.0).abs() < 1e-12);
        let all = rmse(&[log.clone()], Consensus::AllUavs).unwrap();
        assert!((all.position_rmse - 13f64.sqrt()).abs() < 1e-12);
        assert_eq!(rmse(&[log], Consensus::Central).unwrap().position_rmse, 0.0);
    }

    #[test]
    fn bootstrap_detects_shift() {
        let a: Vec<Option<f64>> = (0..50).map(|i| Some(1.0 + (i % 5) as f64 * 0.1)).collect();
        let b: Vec<Option<f64>> = (0..50).map(|i| Some(2.0 + (i % 7) as f64 * 0.1)).collect();
        let r = paired_bootstrap(&a, &b, 2000, 0.95, 1).unwrap();
        assert!(r.upper < 0.0);
        assert_eq!(r.fraction_negative, 1.0);
        assert!(r.lower <= r.mean_difference && r.mean_difference <= r.upper);
        let again = paired_bootstrap(&a, &b, 2000, 0.95, 1).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn bootstrap_skips_missing_pairs() {
        let a = [Some(1.0), None, Some(3.0)];
        let b = [Some(0.0), Some(5.0), None];
        let r = paired_bootstrap(&a, &b, 100, 0.9, 0).unwrap();
        assert_eq!(r.pairs, 1);
        assert_eq!(r.mean_difference, 1.0);
        assert!(paired_bootstrap(&[None], &[Some(1.0)], 10, 0.9, 0).is_err());
    }
}
