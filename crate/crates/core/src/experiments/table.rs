use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FleetKind, ScenarioConfig};
use super::episode::{run_episode, EpisodeLog};
use super::metrics::{rmse_after, Consensus, RmseSummary};
use crate::error::{Error, Result};
use crate::seeds::run_seed;
use crate::sensing::SensingMode;

/// Runs every Monte Carlo episode of `config` in parallel. Run `i` uses
/// `run_seed(base_seed, i)` and the output is ordered by run index.
pub fn monte_carlo(config: &ScenarioConfig) -> Result<Vec<EpisodeLog>> {
    config.validate()?;
    let mc = config.monte_carlo;
    (0..mc.runs as u64)
        .into_par_iter()
        .map(|i| run_episode(config, run_seed(mc.base_seed, i)))
        .collect()
}

/// The three consensus views of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub all: RmseSummary,
    pub best: RmseSummary,
    pub central: RmseSummary,
    /// Smallest true UAV-target distance over every step of every run.
    pub min_target_distance: f64,
}

/// Error metrics over steps `>= burn_in`; the distance covers all steps.
pub fn summarize(logs: &[EpisodeLog], burn_in: u64) -> Result<CellSummary> {
    Ok(CellSummary {
        all: rmse_after(logs, Consensus::AllUavs, burn_in)?,
        best: rmse_after(logs, Consensus::BestUav, burn_in)?,
        central: rmse_after(logs, Consensus::Central, burn_in)?,
        min_target_distance: logs
            .iter()
            .map(EpisodeLog::min_target_distance)
            .fold(f64::INFINITY, f64::min),
    })
}

pub fn evaluate(config: &ScenarioConfig) -> Result<CellSummary> {
    summarize(&monte_carlo(config)?, config.monte_carlo.burn_in)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub mode: SensingMode,
    pub fleet: FleetKind,
    pub config_hash: String,
    pub summary: CellSummary,
}

/// Evaluates labelled configurations that differ only in sensing and
/// fleet; they must share the world and the Monte Carlo plan so that every
/// cell sees the same truth and noise.
pub fn compare_table(cells: &[(String, ScenarioConfig)]) -> Result<Vec<TableRow>> {
    let Some((_, first)) = cells.first() else {
        return Err(Error::Config("comparison table has no cells".into()));
    };
    for (label, c) in cells {
        if c.monte_carlo != first.monte_carlo {
            return Err(Error::Config(format!(
                "cell '{label}': monte_carlo differs from the first cell"
            )));
        }
        if c.world != first.world {
            return Err(Error::Config(format!(
                "cell '{label}': world differs from the first cell"
            )));
        }
    }
    cells
        .iter()
        .map(|(label, c)| {
            log::info!("cell '{label}': {} runs", c.monte_carlo.runs);
            Ok(TableRow {
                label: label.clone(),
                mode: c.sensing.mode,
                fleet: c.fleet.kind,
                config_hash: c.hash(),
                summary: evaluate(c)?,
            })
        })
        .collect()
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Fleet size.
    #[serde(rename = "N")]
    N,
    #[serde(rename = "rcs")]
    Rcs,
    #[serde(rename = "sigma0r")]
    Sigma0r,
    /// Bearing error in degrees.
    #[serde(rename = "sigma_bearing")]
    SigmaBearing,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::N => "N",
            SweepAxis::Rcs => "rcs",
            SweepAxis::Sigma0r => "sigma0r",
            SweepAxis::SigmaBearing => "sigma_bearing",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(SweepAxis::N),
            "rcs" | "RCS" => Ok(SweepAxis::Rcs),
            "sigma0r" => Ok(SweepAxis::Sigma0r),
            "sigma_bearing" => Ok(SweepAxis::SigmaBearing),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected N, rcs, sigma0r or sigma_bearing)"
            ))),
        }
    }
}

impl SweepAxis {
    /// Copy of `base` with this axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        match self {
            SweepAxis::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!(
                        "sweep value N = {value} is not a positive integer"
                    )));
                }
                if c.fleet.kind == FleetKind::Fixed {
                    return Err(Error::Config("an N sweep needs a dynamic fleet".into()));
                }
                c.fleet.count = value as usize;
            }
            SweepAxis::Rcs => c.sensing.rcs = value,
            SweepAxis::Sigma0r => c.sensing.sigma0r = value,
            SweepAxis::SigmaBearing => c.sensing.sigma_bearing = value.to_radians(),
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub config_hash: String,
    pub summary: CellSummary,
}

/// One summary per value. Every point reuses the base seed, so all points
/// share their truth trajectories and noise streams.
pub fn sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| axis.apply(base, *v))
        .collect::<Result<Vec<_>>>()?;
    values
        .iter()
        .zip(&configs)
        .map(|(v, c)| {
            log::info!("sweep {axis} = {v}");
            Ok(SweepPoint {
                axis,
                value: *v,
                config_hash: c.hash(),
                summary: evaluate(c)?,
            })
        })
        .collect()
}
