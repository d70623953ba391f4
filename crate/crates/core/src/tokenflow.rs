//! Per-LPO place verification with compact tokenflows.
//!
//! A candidate place is evaluated on an [`ExtendedLpo`] by a ladder of
//! increasingly expensive checks:
//!
//! 1. the final marking (producers minus consumers) decides overfed, and a
//!    negative value proves underfed;
//! 2. the forward pass builds one token distribution greedily along σ;
//! 3. the backward pass routes one demand per consumer against σ;
//! 4. an exact maximum flow settles the rest.
//!
//! Tokens only travel along skeleton arcs. A node whose label is in the
//! postset consumes one token before a node whose label is in the preset
//! produces one, so a node in both sets can never feed itself.

use std::fmt;

use serde::Serialize;

use crate::maxflow::FlowNetwork;
use crate::model::{CandidatePlace, ExtendedLog, ExtendedLpo};

/// Which rung of the ladder produced the underfed answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    ClosedForm,
    Forward,
    Backward,
    MaxFlow,
}

impl DecidedBy {
    pub const ALL: [DecidedBy; 4] = [
        DecidedBy::ClosedForm,
        DecidedBy::Forward,
        DecidedBy::Backward,
        DecidedBy::MaxFlow,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DecidedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecidedBy::ClosedForm => "closed_form",
            DecidedBy::Forward => "forward",
            DecidedBy::Backward => "backward",
            DecidedBy::MaxFlow => "maxflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaceVerdict {
    pub underfed: bool,
    pub overfed: bool,
    pub final_marking: i64,
    pub decided_by: DecidedBy,
}

impl PlaceVerdict {
    pub fn is_fitting(&self) -> bool {
        !self.underfed && !self.overfed
    }
}

/// One greedy token distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowAssignment {
    /// Tokens (forward) or demands (backward) per skeleton arc, indexed like
    /// [`ExtendedLpo::skeleton`].
    pub flow: Vec<u64>,
    /// Forward: consumer received a token. Backward: cleared only on the
    /// start node when demand was left unabsorbed.
    pub satisfied: Vec<bool>,
    /// Some node with a positive budget had two or more arcs to choose from.
    pub choice_points: bool,
    /// Forward: tokens left on the end node. Backward: unabsorbed demand.
    pub residual: u64,
}

impl FlowAssignment {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }
}

/// Which nodes of one LPO produce into and consume from the place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceRoles {
    pub produces: Vec<bool>,
    pub consumes: Vec<bool>,
}

impl PlaceRoles {
    pub fn new(place: &CandidatePlace, lpo: &ExtendedLpo) -> Self {
        PlaceRoles {
            produces: lpo
                .labels()
                .iter()
                .map(|t| place.preset().contains(t))
                .collect(),
            consumes: lpo
                .labels()
                .iter()
                .map(|t| place.postset().contains(t))
                .collect(),
        }
    }

    pub fn final_marking(&self) -> i64 {
        let p = self.produces.iter().filter(|&&b| b).count() as i64;
        let c = self.consumes.iter().filter(|&&b| b).count() as i64;
        p - c
    }
}

pub fn final_marking(place: &CandidatePlace, lpo: &ExtendedLpo) -> i64 {
    PlaceRoles::new(place, lpo).final_marking()
}

pub fn forward_pass(place: &CandidatePlace, lpo: &ExtendedLpo) -> FlowAssignment {
    forward_with_roles(lpo, &PlaceRoles::new(place, lpo))
}

pub fn backward_pass(place: &CandidatePlace, lpo: &ExtendedLpo) -> FlowAssignment {
    backward_with_roles(lpo, &PlaceRoles::new(place, lpo))
}

pub fn maxflow_classify(place: &CandidatePlace, lpo: &ExtendedLpo) -> bool {
    maxflow_underfed(lpo, &PlaceRoles::new(place, lpo))
}

pub fn classify_lpo(place: &CandidatePlace, lpo: &ExtendedLpo) -> PlaceVerdict {
    classify_with_roles(lpo, &PlaceRoles::new(place, lpo))
}

/// Forward greedy along σ. Each node consumes first (if it is a consumer and
/// has a token), then produces, then pushes its whole budget along the
/// outgoing skeleton arc whose head is σ-smallest among heads that still
/// have a consumer at or below them; if none has, the σ-smallest head.
pub fn forward_with_roles(lpo: &ExtendedLpo, roles: &PlaceRoles) -> FlowAssignment {
    let n = lpo.len();
    let skeleton = lpo.skeleton();
    let mut consumer_below = roles.consumes.clone();
    for &v in lpo.topological_order().iter().rev() {
        if !consumer_below[v] {
            consumer_below[v] = lpo.out_arcs(v).any(|a| consumer_below[skeleton[a].1]);
        }
    }

    let mut flow = vec![0u64; skeleton.len()];
    let mut inflow = vec![0u64; n];
    let mut satisfied = vec![true; n];
    let mut choice_points = false;
    let mut residual = 0;
    for &v in lpo.topological_order() {
        let mut tokens = inflow[v];
        if roles.consumes[v] {
            if tokens >= 1 {
                tokens -= 1;
            } else {
                satisfied[v] = false;
            }
        }
        if roles.produces[v] {
            tokens += 1;
        }
        if tokens == 0 {
            continue;
        }
        let arcs = lpo.out_arcs(v);
        if arcs.len() >= 2 {
            choice_points = true;
        }
        let pick = arcs
            .clone()
            .filter(|&a| consumer_below[skeleton[a].1])
            .min_by_key(|&a| lpo.position(skeleton[a].1))
            .or_else(|| arcs.min_by_key(|&a| lpo.position(skeleton[a].1)));
        match pick {
            Some(a) => {
                flow[a] = tokens;
                inflow[skeleton[a].1] += tokens;
            }
            None => residual += tokens,
        }
    }
    FlowAssignment {
        flow,
        satisfied,
        choice_points,
        residual,
    }
}

/// Backward greedy against σ. Each node first lets its production absorb
/// one arriving demand, then adds its own demand if it consumes, and pushes
/// the remaining demand along the incoming skeleton arc whose tail is
/// σ-largest among tails with a producer at or above them; if none has, the
/// σ-largest tail.
pub fn backward_with_roles(lpo: &ExtendedLpo, roles: &PlaceRoles) -> FlowAssignment {
    let n = lpo.len();
    let skeleton = lpo.skeleton();
    let mut producer_above = roles.produces.clone();
    for &v in lpo.topological_order() {
        if !producer_above[v] {
            producer_above[v] = lpo
                .in_arcs(v)
                .iter()
                .any(|&a| producer_above[skeleton[a].0]);
        }
    }

    let mut flow = vec![0u64; skeleton.len()];
    let mut demand = vec![0u64; n];
    let mut choice_points = false;
    let mut residual = 0;
    for &v in lpo.topological_order().iter().rev() {
        let mut pending = demand[v];
        if roles.produces[v] && pending > 0 {
            pending -= 1;
        }
        if roles.consumes[v] {
            pending += 1;
        }
        if pending == 0 {
            continue;
        }
        let arcs = lpo.in_arcs(v);
        if arcs.len() >= 2 {
            choice_points = true;
        }
        let pick = arcs
            .iter()
            .copied()
            .filter(|&a| producer_above[skeleton[a].0])
            .max_by_key(|&a| lpo.position(skeleton[a].0))
            .or_else(|| {
                arcs.iter()
                    .copied()
                    .max_by_key(|&a| lpo.position(skeleton[a].0))
            });
        match pick {
            Some(a) => {
                flow[a] = pending;
                demand[skeleton[a].0] += pending;
            }
            None => residual += pending,
        }
    }
    let mut satisfied = vec![true; n];
    if residual > 0 {
        satisfied[lpo.start_node()] = false;
    }
    FlowAssignment {
        flow,
        satisfied,
        choice_points,
        residual,
    }
}

/// Value of a maximum flow from producers to consumers through the skeleton,
/// with every node split into `v_in -> v_out` so a node cannot feed itself.
pub fn max_flow_value(lpo: &ExtendedLpo, roles: &PlaceRoles) -> u64 {
    let n = lpo.len();
    let producers = roles.produces.iter().filter(|&&b| b).count() as u64;
    let unbounded = producers.max(1);
    let (source, sink) = (2 * n, 2 * n + 1);
    let v_in = |v: usize| 2 * v;
    let v_out = |v: usize| 2 * v + 1;
    let mut net = FlowNetwork::new(2 * n + 2);
    for v in 0..n {
        net.add_edge(v_in(v), v_out(v), unbounded);
        if roles.produces[v] {
            net.add_edge(source, v_out(v), 1);
        }
        if roles.consumes[v] {
            net.add_edge(v_in(v), sink, 1);
        }
    }
    for &(u, v) in lpo.skeleton() {
        net.add_edge(v_out(u), v_in(v), unbounded);
    }
    net.max_flow(source, sink)
}

pub fn maxflow_underfed(lpo: &ExtendedLpo, roles: &PlaceRoles) -> bool {
    let demand = roles.consumes.iter().filter(|&&b| b).count() as u64;
    demand > 0 && max_flow_value(lpo, roles) < demand
}

pub fn classify_with_roles(lpo: &ExtendedLpo, roles: &PlaceRoles) -> PlaceVerdict {
    let final_marking = roles.final_marking();
    let verdict = |underfed, decided_by| PlaceVerdict {
        underfed,
        overfed: final_marking > 0,
        final_marking,
        decided_by,
    };
    if final_marking < 0 {
        return verdict(true, DecidedBy::ClosedForm);
    }
    let forward = forward_with_roles(lpo, roles);
    if forward.all_satisfied() {
        return verdict(false, DecidedBy::Forward);
    }
    if !forward.choice_points {
        return verdict(true, DecidedBy::Forward);
    }
    let backward = backward_with_roles(lpo, roles);
    if backward.all_satisfied() {
        return verdict(false, DecidedBy::Backward);
    }
    if !backward.choice_points {
        return verdict(true, DecidedBy::Backward);
    }
    verdict(maxflow_underfed(lpo, roles), DecidedBy::MaxFlow)
}

/// Log-level summary of one place: case-weighted fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogVerdict {
    pub fitting_fraction: f64,
    pub not_underfed_fraction: f64,
    pub not_overfed_fraction: f64,
}

/// Case counts behind a [`LogVerdict`], plus the decided-by histogram of
/// the per-variant evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerdictCounts {
    pub total: u64,
    pub fitting: u64,
    pub not_underfed: u64,
    pub not_overfed: u64,
    pub decided_by: [u64; 4],
}

impl VerdictCounts {
    pub fn add(&mut self, verdict: &PlaceVerdict, count: u64) {
        self.total += count;
        if verdict.is_fitting() {
            self.fitting += count;
        }
        if !verdict.underfed {
            self.not_underfed += count;
        }
        if !verdict.overfed {
            self.not_overfed += count;
        }
        self.decided_by[verdict.decided_by.index()] += 1;
    }

    pub fn fractions(&self) -> LogVerdict {
        let frac = |k: u64| {
            if self.total == 0 {
                1.0
            } else {
                k as f64 / self.total as f64
            }
        };
        LogVerdict {
            fitting_fraction: frac(self.fitting),
            not_underfed_fraction: frac(self.not_underfed),
            not_overfed_fraction: frac(self.not_overfed),
        }
    }
}

/// Scores `place` on every variant once, weighting by multiplicity.
pub fn aggregate_verdicts(place: &CandidatePlace, log: &ExtendedLog) -> LogVerdict {
    aggregate_counts(place, log).fractions()
}

pub fn aggregate_counts(place: &CandidatePlace, log: &ExtendedLog) -> VerdictCounts {
    let mut counts = VerdictCounts::default();
    for (lpo, count) in &log.variants {
        counts.add(&classify_lpo(place, lpo), *count);
    }
    counts
}
