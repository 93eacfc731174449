//! UAV communication graph and hop-aged dissemination.
//!
//! Every step each UAV emits one packet: its current pose plus its radar
//! report (or nothing under occlusion). Packets flood the graph up to
//! `hop_limit` hops; a packet that arrives over `h` hops carries age `h`.
//! Peers beyond the limit may still be remembered from earlier steps, with
//! their age growing by one per step.

use std::collections::{BTreeMap, VecDeque};

use crate::control::SensorSite;
use crate::fusion::AgingModel;
use crate::sensing::Measurement;
use crate::world::{UavId, UavPose, Vec3};

/// Undirected graph linking UAVs within communication range.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    ids: Vec<UavId>,
    index: BTreeMap<UavId, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn ids(&self) -> &[UavId] {
        &self.ids
    }

    pub fn neighbors(&self, id: UavId) -> impl Iterator<Item = UavId> + '_ {
        let i = self.index.get(&id).copied();
        i.into_iter()
            .flat_map(move |i| self.adjacency[i].iter().map(move |&j| self.ids[j]))
    }

    pub fn has_edge(&self, a: UavId, b: UavId) -> bool {
        self.neighbors(a).any(|n| n == b)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Hop counts from `source` to every node, `None` where unreachable.
    fn bfs(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.ids.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Links every pair of UAVs at most `comm_range` apart (inclusive).
pub fn build_graph(poses: &[UavPose], comm_range: f64) -> CommGraph {
    let mut sorted: Vec<&UavPose> = poses.iter().collect();
    sorted.sort_by_key(|p| p.id);
    let ids: Vec<UavId> = sorted.iter().map(|p| p.id).collect();
    let index = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adjacency = vec![Vec::new(); sorted.len()];
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            if (sorted[i].position - sorted[j].position).norm() <= comm_range {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    CommGraph {
        ids,
        index,
        adjacency,
    }
}

/// Shortest-path hop count, or `None` when `j` cannot be reached from `i`.
pub fn hop_distance(graph: &CommGraph, i: UavId, j: UavId) -> Option<u32> {
    let (&a, &b) = (graph.index.get(&i)?, graph.index.get(&j)?);
    graph.bfs(a)[b]
}

/// What a UAV broadcasts each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub origin_id: UavId,
    pub origin_pose: Vec3,
    pub step: u64,
    /// `None` when the UAV had no line of sight.
    pub measurement: Option<Measurement>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgeEntry {
    pub packet: Packet,
    pub hop_age: u32,
    /// True when the packet arrived this step; false for a cached copy.
    pub fresh: bool,
}

/// Everything one UAV knows about the fleet after dissemination.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub owner: UavId,
    pub entries: BTreeMap<UavId, KnowledgeEntry>,
}

impl KnowledgeBase {
    pub fn get(&self, id: UavId) -> Option<&KnowledgeEntry> {
        self.entries.get(&id)
    }

    /// Reports that arrived this step, stamped with their hop age.
    pub fn fresh_measurements(&self) -> Vec<Measurement> {
        self.entries
            .values()
            .filter(|e| e.fresh)
            .filter_map(|e| {
                e.packet.measurement.map(|mut m| {
                    m.hop_age = e.hop_age;
                    m
                })
            })
            .collect()
    }

    pub fn fresh_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| e.fresh && e.packet.measurement.is_some())
            .count()
    }

    /// Last known positions of the other UAVs, with the noise inflation their
    /// reports would carry here.
    pub fn peer_sites(&self, aging: &AgingModel) -> Vec<SensorSite> {
        self.entries
            .iter()
            .filter(|(id, _)| **id != self.owner)
            .map(|(_, e)| SensorSite {
                position: e.packet.origin_pose,
                noise_scale: aging.inflation(e.hop_age),
            })
            .collect()
    }
}

/// Dissemination settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissemination {
    pub hop_limit: u32,
    /// Keep packets of peers that dropped out of range, aging one per step.
    pub stale_cache: bool,
}

/// Floods this step's packets over `graph`. UAV `i` receives the packet of
/// `j` iff `hop_distance(i, j) <= hop_limit`, aged by that distance. With
/// `stale_cache`, entries of `previous` that were not refreshed are kept with
/// their age incremented.
pub fn disseminate(
    packets: &[Packet],
    graph: &CommGraph,
    settings: Dissemination,
    previous: Option<&[KnowledgeBase]>,
) -> Vec<KnowledgeBase> {
    let by_origin: BTreeMap<UavId, &Packet> = packets.iter().map(|p| (p.origin_id, p)).collect();
    graph
        .ids
        .iter()
        .enumerate()
        .map(|(i, &owner)| {
            let mut entries = BTreeMap::new();
            if settings.stale_cache {
                if let Some(prev) = previous.and_then(|kbs| kbs.iter().find(|kb| kb.owner == owner))
                {
                    for (id, e) in &prev.entries {
                        entries.insert(
                            *id,
                            KnowledgeEntry {
                                packet: e.packet,
                                hop_age: e.hop_age + 1,
                                fresh: false,
                            },
                        );
                    }
                }
            }
            for (j, hops) in graph.bfs(i).into_iter().enumerate() {
                let Some(h) = hops.filter(|h| *h <= settings.hop_limit) else {
                    continue;
                };
                if let Some(p) = by_origin.get(&graph.ids[j]) {
                    entries.insert(
                        graph.ids[j],
                        KnowledgeEntry {
                            packet: **p,
                            hop_age: h,
                            fresh: true,
                        },
                    );
                }
            }
            KnowledgeBase { owner, entries }
        })
        .collect()
}
