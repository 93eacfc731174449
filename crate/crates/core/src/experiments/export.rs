//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting,
//! so equal values always serialize to equal bytes.

use std::io::Write;

use super::config::ScenarioConfig;
use super::episode::EpisodeLog;
use super::table::{CellSummary, SweepPoint, TableRow};
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `# key=value` preamble lines.
pub fn write_preamble<W: Write>(out: &mut W, lines: &[(&str, String)]) -> Result<()> {
    for (k, v) in lines {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

pub const EPISODE_COLUMNS: [&str; 20] = [
    "step",
    "uav_id",
    "truth_px",
    "truth_py",
    "truth_pz",
    "truth_vx",
    "truth_vy",
    "truth_vz",
    "est_px",
    "est_py",
    "est_pz",
    "est_vx",
    "est_vy",
    "est_vz",
    "pose_x",
    "pose_y",
    "pose_z",
    "los_flag",
    "hop_fresh",
    "chosen_cost",
];

/// One row per (step, UAV), preceded by a comment line carrying the config
/// hash, the seed and the full resolved configuration.
pub fn write_episode_csv<W: Write>(
    log: &EpisodeLog,
    config: &ScenarioConfig,
    mut out: W,
) -> Result<()> {
    write_preamble(
        &mut out,
        &[
            ("config_hash", log.config_hash.clone()),
            ("seed", log.seed.to_string()),
            ("config", config.canonical_json()),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPISODE_COLUMNS)?;
    for r in &log.records {
        for u in &r.uavs {
            let mut row: Vec<String> = Vec::with_capacity(20);
            row.push(r.step.to_string());
            row.push(u.id.0.to_string());
            row.extend(r.truth.iter().map(f64::to_string));
            match u.estimate {
                Some(e) => row.extend(e.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.extend(u.pose.iter().map(f64::to_string));
            row.push(u8::from(u.los).to_string());
            row.push(u.fresh.to_string());
            row.push(opt(u.cost));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

const METRIC_COLUMNS: [&str; 12] = [
    "runs",
    "position_rmse",
    "velocity_rmse",
    "position_mean",
    "position_std",
    "velocity_mean",
    "velocity_std",
    "best_position_rmse",
    "best_velocity_rmse",
    "central_position_rmse",
    "central_velocity_rmse",
    "min_target_distance",
];

fn metric_fields(s: &CellSummary) -> Vec<String> {
    vec![
        s.all.runs_used().to_string(),
        s.all.position_rmse.to_string(),
        s.all.velocity_rmse.to_string(),
        s.all.position_mean.to_string(),
        s.all.position_std.to_string(),
        s.all.velocity_mean.to_string(),
        s.all.velocity_std.to_string(),
        s.best.position_rmse.to_string(),
        s.best.velocity_rmse.to_string(),
        s.central.position_rmse.to_string(),
        s.central.velocity_rmse.to_string(),
        s.min_target_distance.to_string(),
    ]
}

/// Plain CSV, one row per cell, with each cell's config hash.
pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label", "mode", "fleet"];
    header.extend(METRIC_COLUMNS);
    header.push("config_hash");
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![
            r.label.clone(),
            r.mode.to_string(),
            serde_json::to_value(r.fleet)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ];
        row.extend(metric_fields(&r.summary));
        row.push(r.config_hash.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["axis", "value"];
    header.extend(METRIC_COLUMNS);
    header.push("config_hash");
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.axis.to_string(), p.value.to_string()];
        row.extend(metric_fields(&p.summary));
        row.push(p.config_hash.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: serde::Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
