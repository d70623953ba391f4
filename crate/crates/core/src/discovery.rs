//! Candidate-place enumeration and the discovery driver.
//!
//! Candidates live in a tree over a total order of the transitions
//! (▶ first, ■ last). The roots are all `({a}, {b})`. A node `(I, O)` has
//!
//! * postset children `(I, O ∪ {u})` for every `u` after `max(O)`, and
//! * preset children `(I ∪ {t}, O)` for every activity `t` after `max(I)`,
//!   but only while `O` is still its root singleton.
//!
//! Every `(I, O)` has exactly one build path: grow `I` first, then `O`.
//! Below a postset child only postset extensions follow, so a node that is
//! underfed on more than `1 - τ` of the cases cuts all its postset
//! subtrees. Preset children of an overfed node are overfed as well and
//! are skipped without evaluation; their own postset children are still
//! visited because adding consumers can repair an overfed place.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::log_io::extend_log;
use crate::model::{CandidatePlace, EventLog, ExtendedLpo, Transition, WorkflowNet};
use crate::tokenflow::{classify_with_roles, DecidedBy, LogVerdict, PlaceRoles, VerdictCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// Descending total occurrence count, ties by name.
    #[default]
    FrequencyDesc,
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryConfig {
    pub tau: f64,
    /// Bound on `|I| + |O|`.
    pub max_depth: usize,
    pub transition_order: OrderMode,
    pub prune: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            tau: 1.0,
            max_depth: 5,
            transition_order: OrderMode::FrequencyDesc,
            prune: true,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(DiscoveryError::InvalidTau(self.tau));
        }
        if self.max_depth < 2 {
            return Err(DiscoveryError::InvalidDepth(self.max_depth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscoveryError {
    #[error("cannot discover a net from an empty log")]
    EmptyLog,
    #[error("tau must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("max depth must be at least 2, got {0}")]
    InvalidDepth(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TraversalStats {
    pub candidates_evaluated: u64,
    pub candidates_pruned: u64,
    pub places_accepted: u64,
    /// Per (candidate, variant) evaluation, indexed by [`DecidedBy::index`].
    pub decided_by: [u64; 4],
}

impl TraversalStats {
    fn merge(mut self, other: TraversalStats) -> Self {
        self.candidates_evaluated += other.candidates_evaluated;
        self.candidates_pruned += other.candidates_pruned;
        self.places_accepted += other.places_accepted;
        for (a, b) in self.decided_by.iter_mut().zip(other.decided_by) {
            *a += b;
        }
        self
    }

    pub fn decided_by_histogram(&self) -> BTreeMap<DecidedBy, u64> {
        DecidedBy::ALL
            .iter()
            .map(|&d| (d, self.decided_by[d.index()]))
            .collect()
    }
}

/// ▶, the activities in `mode` order, then ■.
pub fn transition_order(log: &EventLog, mode: OrderMode) -> Vec<Transition> {
    let mut activities: Vec<_> = log.alphabet.iter().cloned().collect();
    if mode == OrderMode::FrequencyDesc {
        let mut counts: BTreeMap<&crate::model::Activity, u64> = BTreeMap::new();
        for v in &log.variants {
            for a in v.lpo.labels() {
                *counts.entry(a).or_default() += v.count;
            }
        }
        let freq: Vec<u64> = activities
            .iter()
            .map(|a| counts.get(a).copied().unwrap_or(0))
            .collect();
        let mut idx: Vec<usize> = (0..activities.len()).collect();
        // alphabet is already sorted by name; a stable sort keeps name order
        // among equal counts
        idx.sort_by_key(|&i| std::cmp::Reverse(freq[i]));
        activities = idx.into_iter().map(|i| activities[i].clone()).collect();
    }
    let mut out = Vec::with_capacity(activities.len() + 2);
    out.push(Transition::Start);
    out.extend(activities.into_iter().map(Transition::Activity));
    out.push(Transition::End);
    out
}

/// A candidate over ranks in a transition order; both lists ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RankedPlace {
    preset: Vec<usize>,
    postset: Vec<usize>,
}

impl RankedPlace {
    fn size(&self) -> usize {
        self.preset.len() + self.postset.len()
    }

    fn to_place(&self, order: &[Transition]) -> CandidatePlace {
        CandidatePlace::new(
            self.preset.iter().map(|&r| order[r].clone()),
            self.postset.iter().map(|&r| order[r].clone()),
        )
        .expect("ranked places respect endpoint rules")
    }

    fn from_place(place: &CandidatePlace, order: &[Transition]) -> Option<Self> {
        let rank = |t: &Transition| order.iter().position(|o| o == t);
        let mut preset: Vec<usize> = place.preset().iter().map(rank).collect::<Option<_>>()?;
        let mut postset: Vec<usize> = place.postset().iter().map(rank).collect::<Option<_>>()?;
        preset.sort_unstable();
        postset.sort_unstable();
        Some(RankedPlace { preset, postset })
    }
}

/// Children of one tree node, split by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateChildren {
    /// Postset children still to visit; empty when cut by underfed pruning.
    pub postset: Vec<CandidatePlace>,
    /// Preset children; all of them are known overfed when
    /// `preset_dominated` is set.
    pub preset: Vec<CandidatePlace>,
    pub preset_dominated: bool,
}

/// Children of `cand` in the candidate tree under `order`. `verdict` is the
/// log-level verdict of `cand`, or `None` if it was not evaluated.
pub fn candidate_children(
    cand: &CandidatePlace,
    verdict: Option<&LogVerdict>,
    cfg: &DiscoveryConfig,
    order: &[Transition],
) -> CandidateChildren {
    let Some(ranked) = RankedPlace::from_place(cand, order) else {
        return CandidateChildren::default();
    };
    let space = Space {
        end: order.len() - 1,
        cfg,
    };
    let (cut_postset, preset_dominated) = space.pruning(verdict, false);
    CandidateChildren {
        postset: if cut_postset {
            Vec::new()
        } else {
            space
                .postset_children(&ranked)
                .map(|c| c.to_place(order))
                .collect()
        },
        preset: space
            .preset_children(&ranked)
            .map(|c| c.to_place(order))
            .collect(),
        preset_dominated,
    }
}

/// Number of `(I, O)` with non-empty sets drawn from `order` and
/// `|I| + |O| <= max_depth`.
pub fn candidate_space_size(order_len: usize, max_depth: usize) -> u64 {
    // I ⊆ order minus ■, O ⊆ order minus ▶
    let side = order_len.saturating_sub(1) as u64;
    let mut total = 0;
    for i in 1..=max_depth {
        for o in 1..=max_depth.saturating_sub(i) {
            total += binomial(side, i as u64) * binomial(side, o as u64);
        }
    }
    total
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

struct Space<'a> {
    /// Rank of ■.
    end: usize,
    cfg: &'a DiscoveryConfig,
}

impl Space<'_> {
    fn postset_children<'p>(
        &self,
        node: &'p RankedPlace,
    ) -> impl Iterator<Item = RankedPlace> + 'p {
        let open = node.size() < self.cfg.max_depth;
        let from = node.postset.last().map_or(1, |&m| m + 1);
        let end = self.end;
        (from..=end).filter(move |_| open).map(move |u| {
            let mut postset = node.postset.clone();
            postset.push(u);
            RankedPlace {
                preset: node.preset.clone(),
                postset,
            }
        })
    }

    fn preset_children<'p>(&self, node: &'p RankedPlace) -> impl Iterator<Item = RankedPlace> + 'p {
        let open = node.size() < self.cfg.max_depth && node.postset.len() == 1;
        let from = node.preset.last().map_or(0, |&m| m + 1).max(1);
        (from..self.end).filter(move |_| open).map(move |t| {
            let mut preset = node.preset.clone();
            preset.push(t);
            RankedPlace {
                preset,
                postset: node.postset.clone(),
            }
        })
    }

    /// `(cut postset subtrees, preset children dominated)`.
    fn pruning(&self, verdict: Option<&LogVerdict>, dominated: bool) -> (bool, bool) {
        if !self.cfg.prune {
            return (false, false);
        }
        let tau = self.cfg.tau;
        let cut = verdict.is_some_and(|v| v.not_underfed_fraction < tau);
        let dom = dominated || verdict.is_some_and(|v| v.not_overfed_fraction < tau);
        (cut, dom)
    }

    /// Size of the subtree rooted at a postset child: only postset
    /// extensions follow it.
    fn postset_subtree_size(&self, child: &RankedPlace) -> u64 {
        let remaining = (self.end - child.postset.last().copied().unwrap_or(self.end)) as u64;
        let budget = self.cfg.max_depth.saturating_sub(child.size()) as u64;
        (0..=budget.min(remaining))
            .map(|j| binomial(remaining, j))
            .sum()
    }
}

/// Per-variant data with node labels mapped to ranks.
struct CompiledVariant<'a> {
    lpo: &'a ExtendedLpo,
    ranks: Vec<usize>,
    count: u64,
}

struct Traversal<'a> {
    space: Space<'a>,
    variants: Vec<CompiledVariant<'a>>,
}

#[derive(Default)]
struct Partial {
    accepted: Vec<RankedPlace>,
    stats: TraversalStats,
}

impl Traversal<'_> {
    fn evaluate(&self, cand: &RankedPlace, stats: &mut TraversalStats) -> VerdictCounts {
        let mut in_preset = vec![false; self.space.end + 1];
        let mut in_postset = vec![false; self.space.end + 1];
        for &r in &cand.preset {
            in_preset[r] = true;
        }
        for &r in &cand.postset {
            in_postset[r] = true;
        }
        let mut counts = VerdictCounts::default();
        for v in &self.variants {
            let roles = PlaceRoles {
                produces: v.ranks.iter().map(|&r| in_preset[r]).collect(),
                consumes: v.ranks.iter().map(|&r| in_postset[r]).collect(),
            };
            counts.add(&classify_with_roles(v.lpo, &roles), v.count);
        }
        for (a, b) in stats.decided_by.iter_mut().zip(counts.decided_by) {
            *a += b;
        }
        counts
    }

    fn visit(&self, node: RankedPlace, dominated: bool, out: &mut Partial) {
        let verdict = if dominated {
            out.stats.candidates_pruned += 1;
            None
        } else {
            out.stats.candidates_evaluated += 1;
            let v = self.evaluate(&node, &mut out.stats).fractions();
            if v.fitting_fraction >= self.space.cfg.tau {
                out.stats.places_accepted += 1;
                out.accepted.push(node.clone());
            }
            Some(v)
        };
        let (cut_postset, preset_dominated) = self.space.pruning(verdict.as_ref(), dominated);
        for child in self.space.postset_children(&node) {
            if cut_postset {
                out.stats.candidates_pruned += self.space.postset_subtree_size(&child);
            } else {
                self.visit(child, false, out);
            }
        }
        let preset: Vec<_> = self.space.preset_children(&node).collect();
        for child in preset {
            self.visit(child, preset_dominated, out);
        }
    }
}

/// Discovers a workflow net whose inner places each fit at least a `τ`
/// fraction of the cases.
pub fn discover(
    log: &EventLog,
    cfg: &DiscoveryConfig,
) -> Result<(WorkflowNet, TraversalStats), DiscoveryError> {
    cfg.validate()?;
    if log.is_empty() {
        return Err(DiscoveryError::EmptyLog);
    }
    let order = transition_order(log, cfg.transition_order);
    let rank: BTreeMap<&Transition, usize> =
        order.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let extended = extend_log(log);
    let variants = extended
        .variants
        .iter()
        .map(|(lpo, count)| CompiledVariant {
            lpo,
            ranks: lpo.labels().iter().map(|t| rank[t]).collect(),
            count: *count,
        })
        .collect();
    let traversal = Traversal {
        space: Space {
            end: order.len() - 1,
            cfg,
        },
        variants,
    };

    let end = order.len() - 1;
    let roots: Vec<RankedPlace> = (0..end)
        .flat_map(|a| {
            (1..=end).map(move |b| RankedPlace {
                preset: vec![a],
                postset: vec![b],
            })
        })
        .collect();
    let partial = roots
        .into_par_iter()
        .map(|root| {
            let mut out = Partial::default();
            traversal.visit(root, false, &mut out);
            out
        })
        .reduce(Partial::default, |mut a, b| {
            a.accepted.extend(b.accepted);
            a.stats = a.stats.merge(b.stats);
            a
        });

    let places = partial.accepted.iter().map(|p| p.to_place(&order));
    let net = WorkflowNet::new(log.alphabet.iter().cloned(), places);
    Ok((net, partial.stats))
}
