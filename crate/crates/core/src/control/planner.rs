use std::cmp::Ordering;
use std::f64::consts::PI;

use super::fim::{peer_information, sensor_information, FimOptions, SensorSite};
use super::oed::{oed_cost, OedCriterion};
use super::KinematicConstraints;
use crate::fusion::Belief;
use crate::sensing::{SensingMode, SensorParams};
use crate::world::{wrap_angle, Aabb, UavPose, Vec3};

/// One reachable next position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub position: Vec3,
    /// Heading of the move; `None` for hover and vertical moves.
    pub heading: Option<f64>,
    /// Position in the candidate list. Within a speed ring this is the
    /// heading index, so it is the final tie-breaker.
    pub index: usize,
    pub displacement: f64,
}

/// Discretized control set: hover, then `headings` directions at half and
/// full speed inside the turn-rate window around `prev_heading`. Without a
/// previous heading, or when the window spans a full turn, the directions are
/// spread evenly around the circle. A zero window collapses to one direction.
/// UAVs free to change altitude also get a climb and a descent at half speed.
pub fn candidate_set(
    pose: &UavPose,
    prev_heading: Option<f64>,
    constraints: &KinematicConstraints,
    dt: f64,
    headings: usize,
) -> Vec<Candidate> {
    let window = constraints.max_turn_rate * dt;
    let directions: Vec<f64> = match prev_heading {
        _ if headings == 0 => Vec::new(),
        Some(h) if window == 0.0 => vec![h],
        Some(h) if window < PI => {
            if headings == 1 {
                vec![h]
            } else {
                let span = 2.0 * window / (headings - 1) as f64;
                (0..headings)
                    .map(|j| wrap_angle(h - window + span * j as f64))
                    .collect()
            }
        }
        other => {
            let base = other.unwrap_or(0.0);
            (0..headings)
                .map(|j| wrap_angle(base + 2.0 * PI * j as f64 / headings as f64))
                .collect()
        }
    };

    let mut out = vec![Candidate {
        position: pose.position,
        heading: None,
        index: 0,
        displacement: 0.0,
    }];
    for speed in [constraints.v_max / 2.0, constraints.v_max] {
        let step = speed * dt;
        for &phi in &directions {
            let u = Vec3::new(step * phi.cos(), step * phi.sin(), 0.0);
            out.push(Candidate {
                position: pose.position + u,
                heading: Some(phi),
                index: out.len(),
                displacement: u.norm(),
            });
        }
    }
    if !pose.altitude_locked && !constraints.altitude_locked {
        let step = constraints.v_max / 2.0 * dt;
        for dz in [step, -step] {
            out.push(Candidate {
                position: pose.position + Vec3::new(0.0, 0.0, dz),
                heading: None,
                index: out.len(),
                displacement: step,
            });
        }
    }
    out
}

/// Safety-distance, optional tracking-radius and separation check against
/// the predicted target and the peers' last known positions.
pub fn is_feasible(
    position: &Vec3,
    predicted_target: &Vec3,
    peers: &[SensorSite],
    constraints: &KinematicConstraints,
) -> bool {
    let d = (position - predicted_target).norm();
    d >= constraints.safety_distance_target
        && constraints.max_target_distance.is_none_or(|r| d <= r)
        && peers
            .iter()
            .all(|p| (position - p.position).norm() >= constraints.min_uav_separation)
}

/// Everything one UAV needs to choose its next waypoint.
#[derive(Debug, Clone, Copy)]
pub struct PlanRequest<'a> {
    pub pose: &'a UavPose,
    pub prev_heading: Option<f64>,
    /// One-step predicted belief of the target.
    pub predicted: &'a Belief,
    pub peers: &'a [SensorSite],
    pub constraints: &'a KinematicConstraints,
    pub criterion: OedCriterion,
    pub mode: SensingMode,
    pub params: &'a SensorParams,
    pub dt: f64,
    pub headings: usize,
    pub include_prior: bool,
    pub position_only: bool,
    /// Obstacles the planner knows about; occluded sites add no information.
    pub obstacles: &'a [Aabb],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub waypoint: Vec3,
    /// Heading of the chosen move, `None` if it was not a planar move.
    pub heading: Option<f64>,
    pub cost: f64,
    /// True when no candidate was feasible and the UAV retreats or hovers.
    pub fallback: bool,
}

/// Orders candidates by cost, then displacement, then index.
pub(crate) fn rank(a: (f64, &Candidate), b: (f64, &Candidate)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.displacement.total_cmp(&b.1.displacement))
        .then(a.1.index.cmp(&b.1.index))
}

/// Exhaustive minimization of the design cost over the feasible candidates.
pub fn plan_waypoint(req: &PlanRequest<'_>) -> Plan {
    let options = FimOptions {
        include_prior: req.include_prior,
        obstacles: req.obstacles,
    };
    let base = peer_information(req.peers, req.predicted, req.mode, req.params, &options);
    let target = req.predicted.mean.fixed_rows::<3>(0).clone_owned();
    let candidates = candidate_set(
        req.pose,
        req.prev_heading,
        req.constraints,
        req.dt,
        req.headings,
    );
    // A UAV already beyond the tracking radius may not move further out.
    let mut constraints = *req.constraints;
    let now = (req.pose.position - target).norm();
    constraints.max_target_distance = constraints.max_target_distance.map(|r| r.max(now));

    let cost_at = |c: &Candidate| {
        let site = super::SensorSite::own(c.position);
        let j = match sensor_information(&site, req.predicted, req.mode, req.params, req.obstacles)
        {
            Some(term) => base + &term,
            None => base,
        };
        oed_cost(&j, req.criterion, req.position_only)
    };

    let best = candidates
        .iter()
        .filter(|c| is_feasible(&c.position, &target, req.peers, &constraints))
        .map(|c| (cost_at(c), c))
        .min_by(|a, b| rank(*a, *b));

    if let Some((cost, c)) = best {
        return Plan {
            waypoint: c.position,
            heading: c.heading,
            cost,
            fallback: false,
        };
    }
    // Nothing feasible: retreat to the candidate farthest from the predicted
    // target that still keeps peer separation, else hover.
    let retreat = candidates
        .iter()
        .filter(|c| {
            req.peers
                .iter()
                .all(|p| (c.position - p.position).norm() >= constraints.min_uav_separation)
        })
        .max_by(|a, b| {
            (a.position - target)
                .norm()
                .total_cmp(&(b.position - target).norm())
                .then(b.index.cmp(&a.index))
        });
    log::debug!("UAV {}: no feasible candidate, retreating", req.pose.id);
    match retreat {
        Some(c) => Plan {
            waypoint: c.position,
            heading: c.heading,
            cost: cost_at(c),
            fallback: true,
        },
        None => Plan {
            waypoint: req.pose.position,
            heading: None,
            cost: cost_at(&candidates[0]),
            fallback: true,
        },
    }
}

/// `u = next - current`.
pub fn control_signal(next: &Vec3, current: &Vec3) -> Vec3 {
    next - current
}
