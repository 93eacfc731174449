use serde::{Deserialize, Serialize};

use super::config::{FleetKind, ScenarioConfig};
use crate::control::{control_signal, plan_waypoint, PlanRequest};
use crate::error::Result;
use crate::fusion::{init_belief, nees, predict, resolve_mirror, update, AgingModel, Belief};
use crate::network::{build_graph, disseminate, KnowledgeBase, Packet};
use crate::seeds::{stream_rng, Stream};
use crate::sensing::{measure, Measurement};
use crate::world::{apply_control, init_scenario, step_target, StateVector, UavId, Vec3};

/// One UAV at one step, recorded after fusion and before planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavRecord {
    pub id: UavId,
    pub pose: Vec3,
    /// Posterior mean, `None` until this UAV's track has started.
    pub estimate: Option<StateVector>,
    pub nees: Option<f64>,
    /// Line of sight to the target this step.
    pub los: bool,
    /// Reports fused this step (own plus received).
    pub fresh: usize,
    /// Design cost of the chosen candidate; `None` for fixed fleets or
    /// before the track starts.
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub truth: StateVector,
    pub uavs: Vec<UavRecord>,
    /// Posterior of a reference filter fusing every report of the step.
    pub central: Option<StateVector>,
    pub central_nees: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<StepRecord>,
}

impl EpisodeLog {
    /// Smallest true UAV-target distance over the episode.
    pub fn min_target_distance(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| {
                let t = r.truth.fixed_rows::<3>(0).clone_owned();
                r.uavs.iter().map(move |u| (u.pose - t).norm())
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// First step at which any UAV holds an estimate.
    pub fn detection_step(&self) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.uavs.iter().any(|u| u.estimate.is_some()))
            .map(|r| r.step)
    }
}

/// Per-UAV filter and planner memory.
#[derive(Debug, Clone, Default)]
struct Agent {
    belief: Option<Belief>,
    heading: Option<f64>,
}

fn fuse(
    agent_belief: Option<&Belief>,
    reports: &[Measurement],
    config: &ScenarioConfig,
    aging: &AgingModel,
    step: u64,
) -> Result<Option<Belief>> {
    let params = config.sensing.params();
    let motion = config.filter.motion();
    match agent_belief {
        Some(b) => {
            let predicted = predict(b, config.world.dt, &motion);
            let posterior = update(
                &predicted,
                reports,
                config.sensing.mode,
                &params,
                aging,
                config.filter.kind,
            );
            Ok(Some(match config.filter.prior_box {
                Some(b) if config.filter.resolve_mirror => {
                    resolve_mirror(&posterior, reports, b.min.z, b.max.z)
                }
                _ => posterior,
            }))
        }
        // Tracks start at the first report; those reports seed the prior
        // and are not fused a second time.
        None if !reports.is_empty() => Ok(Some(init_belief(
            reports,
            &config.filter.prior(),
            &params,
            step,
        )?)),
        None => Ok(None),
    }
}

/// Simulates one episode: sense, disseminate, fuse, log, plan, move, then
/// advance the target. Fixed fleets skip planning and moving.
pub fn run_episode(config: &ScenarioConfig, seed: u64) -> Result<EpisodeLog> {
    let mut world = init_scenario(config, seed)?;
    let params = config.sensing.params();
    let mode = config.sensing.mode;
    let dt = config.world.dt;
    let aging = config.filter.aging(dt);
    let constraints = config.constraints();
    let planner_obstacles: &[_] = if config.control.los_aware {
        &world.obstacles
    } else {
        &[]
    };
    let planner_obstacles = planner_obstacles.to_vec();

    let mut agents = vec![Agent::default(); world.uavs.len()];
    let mut central: Option<Belief> = None;
    let mut knowledge: Option<Vec<KnowledgeBase>> = None;
    let mut records = Vec::with_capacity(config.world.steps);

    for _ in 0..config.world.steps {
        let step = world.clock.step;

        let packets: Vec<Packet> = world
            .uavs
            .iter()
            .map(|u| {
                let mut rng = stream_rng(seed, Stream::Noise, step, u.id.0 as u64);
                let m = measure(
                    u,
                    &world.target,
                    mode,
                    &params,
                    &world.obstacles,
                    step,
                    &mut rng,
                );
                Packet {
                    origin_id: u.id,
                    origin_pose: u.position,
                    step,
                    measurement: m,
                }
            })
            .collect();

        let graph = build_graph(&world.uavs, config.network.comm_range);
        let kbs = disseminate(
            &packets,
            &graph,
            config.network.dissemination(),
            knowledge.as_deref(),
        );

        for (agent, kb) in agents.iter_mut().zip(&kbs) {
            agent.belief = fuse(
                agent.belief.as_ref(),
                &kb.fresh_measurements(),
                config,
                &aging,
                step,
            )?;
        }
        let all: Vec<Measurement> = packets.iter().filter_map(|p| p.measurement).collect();
        central = fuse(central.as_ref(), &all, config, &AgingModel::OFF, step)?;

        let mut uav_records: Vec<UavRecord> = world
            .uavs
            .iter()
            .zip(&agents)
            .zip(&packets)
            .zip(&kbs)
            .map(|(((u, a), p), kb)| UavRecord {
                id: u.id,
                pose: u.position,
                estimate: a.belief.as_ref().map(|b| b.mean),
                nees: a.belief.as_ref().map(|b| nees(b, &world.target)),
                los: p.measurement.is_some(),
                fresh: kb.fresh_count(),
                cost: None,
            })
            .collect();

        if config.fleet.kind == FleetKind::Dynamic {
            let mut next = world.uavs.clone();
            for (i, (agent, kb)) in agents.iter_mut().zip(&kbs).enumerate() {
                let Some(belief) = &agent.belief else {
                    continue;
                };
                let predicted = predict(belief, dt, &config.filter.motion());
                let peers = kb.peer_sites(&aging);
                let plan = plan_waypoint(&PlanRequest {
                    pose: &world.uavs[i],
                    prev_heading: agent.heading,
                    predicted: &predicted,
                    peers: &peers,
                    constraints: &constraints,
                    criterion: config.control.criterion,
                    mode,
                    params: &params,
                    dt,
                    headings: config.control.headings,
                    include_prior: config.control.include_prior,
                    position_only: config.control.position_only,
                    obstacles: &planner_obstacles,
                });
                if plan.heading.is_some() {
                    agent.heading = plan.heading;
                }
                uav_records[i].cost = Some(plan.cost);
                let u = control_signal(&plan.waypoint, &world.uavs[i].position);
                next[i] = apply_control(&world.uavs[i], &u, &constraints, dt)?;
            }
            world.uavs = next;
        }

        records.push(StepRecord {
            step,
            truth: world.target.to_vector(),
            uavs: uav_records,
            central: central.as_ref().map(|b| b.mean),
            central_nees: central.as_ref().map(|b| nees(b, &world.target)),
        });

        knowledge = Some(kbs);
        let mut rng = stream_rng(seed, Stream::Target, step, 0);
        world.target = step_target(&world.target, &world.motion, &world.clock, &mut rng);
        world.clock.tick();
    }

    Ok(EpisodeLog {
        seed,
        config_hash: config.hash(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::SensingMode;

    fn short(kind: FleetKind, steps: usize) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.fleet.kind = kind;
        c.world.steps = steps;
        c
    }

    #[test]
    fn zero_steps_is_empty() {
        let log = run_episode(&short(FleetKind::Dynamic, 0), 1).unwrap();
        assert!(log.records.is_empty());
    }

    #[test]
    fn fixed_fleet_never_moves() {
        let c = short(FleetKind::Fixed, 40);
        let log = run_episode(&c, 3).unwrap();
        assert_eq!(log.records.len(), 40);
        for r in &log.records {
            for (u, site) in r.uavs.iter().zip(&c.fleet.fixed_positions) {
                assert_eq!(u.pose, *site);
                assert!(u.cost.is_none());
            }
        }
    }

    #[test]
    fn same_seed_same_log() {
        let c = short(FleetKind::Dynamic, 30);
        assert_eq!(run_episode(&c, 9).unwrap(), run_episode(&c, 9).unwrap());
        assert_ne!(run_episode(&c, 9).unwrap(), run_episode(&c, 10).unwrap());
    }

    #[test]
    fn fleets_share_truth() {
        let a = run_episode(&short(FleetKind::Dynamic, 30), 5).unwrap();
        let mut c = short(FleetKind::Fixed, 30);
        c.sensing.mode = SensingMode::BEARING;
        let b = run_episode(&c, 5).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.truth, rb.truth);
        }
    }

    #[test]
    fn dynamic_fleet_moves_within_limits() {
        let c = short(FleetKind::Dynamic, 30);
        let log = run_episode(&c, 2).unwrap();
        for w in log.records.windows(2) {
            for (a, b) in w[0].uavs.iter().zip(&w[1].uavs) {
                let u = b.pose - a.pose;
                assert!(u.norm() <= c.control.v_max * c.world.dt * (1.0 + 1e-12));
                assert_eq!(u.z, 0.0);
            }
        }
        assert_eq!(log.detection_step(), Some(0));
        let last = log.records.last().unwrap();
        assert!(last
            .uavs
            .iter()
            .all(|u| u.estimate.is_some() && u.cost.is_some()));
    }

    #[test]
    fn records_are_finite() {
        let log = run_episode(&short(FleetKind::Dynamic, 50), 4).unwrap();
        for r in &log.records {
            assert!(r.truth.iter().all(|v| v.is_finite()));
            for u in &r.uavs {
                assert!(u.pose.iter().all(|v| v.is_finite()));
                if let Some(e) = u.estimate {
                    assert!(e.iter().all(|v| v.is_finite()));
                }
            }
        }
    }
}
