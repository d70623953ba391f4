//! Core domain types: activities, labeled partial orders, candidate places
//! and workflow nets.
//!
//! An [`Lpo`] always carries both its full strict order and its skeleton
//! (the transitive reduction). Both are stored as lexicographically sorted
//! arc lists over dense node ids `0..n`, so two LPOs with the same closure
//! compare equal regardless of the arc set they were built from.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label of the artificial start transition.
pub const START_LABEL: &str = "▶";
/// Label of the artificial end transition.
pub const END_LABEL: &str = "■";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActivityError {
    #[error("activity name must not be empty")]
    Empty,
    #[error("activity name {0:?} is reserved for the artificial start/end transitions")]
    Reserved(String),
}

/// A user-visible activity name. Never empty and never one of the reserved
/// endpoint labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Activity(String);

impl Activity {
    pub fn new(name: impl Into<String>) -> Result<Self, ActivityError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ActivityError::Empty);
        }
        if name == START_LABEL || name == END_LABEL {
            return Err(ActivityError::Reserved(name));
        }
        Ok(Activity(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Activity {
    type Error = ActivityError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Activity::new(value)
    }
}

impl From<Activity> for String {
    fn from(value: Activity) -> Self {
        value.0
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A transition of a discovered net: an activity or one of the two
/// artificial endpoints. The derived order puts `Start` first and `End` last.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transition {
    Start,
    Activity(Activity),
    End,
}

impl Transition {
    pub fn label(&self) -> &str {
        match self {
            Transition::Start => START_LABEL,
            Transition::Activity(a) => a.as_str(),
            Transition::End => END_LABEL,
        }
    }

    /// Inverse of [`Transition::label`].
    pub fn from_label(label: &str) -> Result<Self, ActivityError> {
        match label {
            START_LABEL => Ok(Transition::Start),
            END_LABEL => Ok(Transition::End),
            other => Activity::new(other).map(Transition::Activity),
        }
    }
}

impl From<Activity> for Transition {
    fn from(value: Activity) -> Self {
        Transition::Activity(value)
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("order contains a cycle: {}", format_cycle(.witness))]
    Cycle { witness: Vec<usize> },
    #[error("arc ({src}, {dst}) references a node outside 0..{node_count}")]
    UnknownNode {
        src: usize,
        dst: usize,
        node_count: usize,
    },
}

fn format_cycle(witness: &[usize]) -> String {
    witness
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Transitive closure and transitive reduction of a generating arc set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedOrder {
    pub order: Vec<(usize, usize)>,
    pub skeleton: Vec<(usize, usize)>,
}

/// Closes `raw_arcs` transitively and reduces the closure to its skeleton.
///
/// The reduction is computed from the closure, so every generating set with
/// the same closure yields identical output.
pub fn normalize_order(
    node_count: usize,
    raw_arcs: &[(usize, usize)],
) -> Result<NormalizedOrder, OrderError> {
    let mut succ = vec![Vec::new(); node_count];
    for &(src, dst) in raw_arcs {
        if src >= node_count || dst >= node_count {
            return Err(OrderError::UnknownNode {
                src,
                dst,
                node_count,
            });
        }
        if src == dst {
            return Err(OrderError::Cycle {
                witness: vec![src, src],
            });
        }
        succ[src].push(dst);
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }

    let topo = topological_order(&succ).map_err(|witness| OrderError::Cycle { witness })?;

    // reach[v] = strict successors of v in the closure
    let mut reach = vec![FixedBitSet::with_capacity(node_count); node_count];
    for &v in topo.iter().rev() {
        let mut row = FixedBitSet::with_capacity(node_count);
        for &w in &succ[v] {
            row.insert(w);
            row.union_with(&reach[w]);
        }
        reach[v] = row;
    }

    let mut order = Vec::new();
    let mut skeleton = Vec::new();
    for u in 0..node_count {
        let mut covered = FixedBitSet::with_capacity(node_count);
        for w in reach[u].ones() {
            covered.union_with(&reach[w]);
        }
        for v in reach[u].ones() {
            order.push((u, v));
            if !covered.contains(v) {
                skeleton.push((u, v));
            }
        }
    }
    Ok(NormalizedOrder { order, skeleton })
}

/// Kahn's method with ties broken by ascending node id. On a cycle, returns
/// a witness cycle `v0 -> ... -> v0`.
fn topological_order(succ: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &w in s {
            indeg[w] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        topo.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    if topo.len() == n {
        return Ok(topo);
    }
    // Every remaining node has a remaining predecessor; walk successors
    // inside the remainder until a node repeats.
    let mut remaining = vec![false; n];
    for (v, &d) in indeg.iter().enumerate() {
        remaining[v] = d > 0;
    }
    let start = (0..n).find(|&v| remaining[v]).expect("cycle remainder");
    let mut seen_at = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut v = start;
    loop {
        if seen_at[v] != usize::MAX {
            let mut cycle = path[seen_at[v]..].to_vec();
            cycle.push(v);
            return Err(cycle);
        }
        seen_at[v] = path.len();
        path.push(v);
        v = *succ[v]
            .iter()
            .find(|&&w| remaining[w])
            .expect("remaining node has a remaining successor");
    }
}

/// First violated [`Lpo`] invariant, with witness nodes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpoViolation {
    #[error("arc ({0}, {1}) references a node outside the label range")]
    UnknownNode(usize, usize),
    #[error("order not irreflexive at node {0}")]
    Reflexive(usize),
    #[error("order contains a cycle: {}", format_cycle(.0))]
    Cyclic(Vec<usize>),
    #[error("not transitive: ({0}, {1}) and ({1}, {2}) present but ({0}, {2}) missing")]
    NotTransitive(usize, usize, usize),
    #[error("skeleton arc ({0}, {1}) is not in the order")]
    SkeletonNotInOrder(usize, usize),
    #[error("skeleton not reduced: ({0}, {2}) is implied by ({0}, {1}) and ({1}, {2})")]
    SkeletonNotReduced(usize, usize, usize),
    #[error("order pair ({0}, {1}) is not generated by the skeleton")]
    SkeletonIncomplete(usize, usize),
}

/// A labeled partial order over dense node ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lpo {
    labels: Vec<Activity>,
    order: Vec<(usize, usize)>,
    skeleton: Vec<(usize, usize)>,
}

impl Lpo {
    /// Builds an LPO from any generating arc set.
    pub fn new(labels: Vec<Activity>, arcs: &[(usize, usize)]) -> Result<Self, OrderError> {
        let NormalizedOrder { order, skeleton } = normalize_order(labels.len(), arcs)?;
        Ok(Lpo {
            labels,
            order,
            skeleton,
        })
    }

    /// A totally ordered trace.
    pub fn chain(labels: Vec<Activity>) -> Self {
        let arcs: Vec<_> = (1..labels.len()).map(|i| (i - 1, i)).collect();
        Lpo::new(labels, &arcs).expect("a chain is acyclic")
    }

    /// Assembles an LPO without checking its invariants; see [`validate_lpo`].
    pub fn from_parts(
        labels: Vec<Activity>,
        mut order: Vec<(usize, usize)>,
        mut skeleton: Vec<(usize, usize)>,
    ) -> Self {
        order.sort_unstable();
        order.dedup();
        skeleton.sort_unstable();
        skeleton.dedup();
        Lpo {
            labels,
            order,
            skeleton,
        }
    }

    pub fn labels(&self) -> &[Activity] {
        &self.labels
    }

    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn skeleton(&self) -> &[(usize, usize)] {
        &self.skeleton
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.order.binary_search(&(u, v)).is_ok()
    }

    pub fn validate(&self) -> Result<(), LpoViolation> {
        validate_lpo(self)
    }
}

/// Checks every [`Lpo`] invariant and reports the first violation.
pub fn validate_lpo(lpo: &Lpo) -> Result<(), LpoViolation> {
    let n = lpo.len();
    for &(u, v) in lpo.order.iter().chain(&lpo.skeleton) {
        if u >= n || v >= n {
            return Err(LpoViolation::UnknownNode(u, v));
        }
    }
    let mut rel = vec![FixedBitSet::with_capacity(n); n];
    for &(u, v) in &lpo.order {
        if u == v {
            return Err(LpoViolation::Reflexive(u));
        }
        rel[u].insert(v);
    }
    let succ: Vec<Vec<usize>> = rel.iter().map(|r| r.ones().collect()).collect();
    if let Err(witness) = topological_order(&succ) {
        return Err(LpoViolation::Cyclic(witness));
    }
    for &(a, b) in &lpo.order {
        for c in rel[b].ones() {
            if !rel[a].contains(c) {
                return Err(LpoViolation::NotTransitive(a, b, c));
            }
        }
    }
    for &(a, c) in &lpo.skeleton {
        if !rel[a].contains(c) {
            return Err(LpoViolation::SkeletonNotInOrder(a, c));
        }
        if let Some(b) = rel[a].ones().find(|&b| rel[b].contains(c)) {
            return Err(LpoViolation::SkeletonNotReduced(a, b, c));
        }
    }
    let closure = normalize_order(n, &lpo.skeleton).map_err(|e| match e {
        OrderError::Cycle { witness } => LpoViolation::Cyclic(witness),
        OrderError::UnknownNode { src, dst, .. } => LpoViolation::UnknownNode(src, dst),
    })?;
    if let Some(&(u, v)) = lpo
        .order
        .iter()
        .find(|p| closure.order.binary_search(p).is_err())
    {
        return Err(LpoViolation::SkeletonIncomplete(u, v));
    }
    Ok(())
}

/// An LPO extended with a unique start node (id 0, labeled ▶) and a unique
/// end node (last id, labeled ■). Carries the skeleton adjacency and the
/// deterministic topological order used by the tokenflow passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedLpo {
    labels: Vec<Transition>,
    order: Vec<(usize, usize)>,
    skeleton: Vec<(usize, usize)>,
    /// Skeleton arc indices leaving each node (contiguous in `skeleton`).
    out_arcs: Vec<std::ops::Range<usize>>,
    /// Skeleton arc indices entering each node.
    in_arcs: Vec<Vec<usize>>,
    topo: Vec<usize>,
    position: Vec<usize>,
}

impl ExtendedLpo {
    pub(crate) fn from_normalized(labels: Vec<Transition>, normalized: NormalizedOrder) -> Self {
        let n = labels.len();
        let NormalizedOrder { order, skeleton } = normalized;
        let mut out_arcs = vec![0..0; n];
        let mut in_arcs = vec![Vec::new(); n];
        let mut start = 0;
        for (v, arcs) in out_arcs.iter_mut().enumerate() {
            let end = start + skeleton[start..].iter().take_while(|a| a.0 == v).count();
            *arcs = start..end;
            start = end;
        }
        for (idx, &(_, dst)) in skeleton.iter().enumerate() {
            in_arcs[dst].push(idx);
        }
        let succ: Vec<Vec<usize>> = out_arcs
            .iter()
            .map(|r| skeleton[r.clone()].iter().map(|a| a.1).collect())
            .collect();
        let topo = topological_order(&succ).expect("normalized order is acyclic");
        let mut position = vec![0; n];
        for (i, &v) in topo.iter().enumerate() {
            position[v] = i;
        }
        ExtendedLpo {
            labels,
            order,
            skeleton,
            out_arcs,
            in_arcs,
            topo,
            position,
        }
    }

    pub fn labels(&self) -> &[Transition] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &Transition {
        &self.labels[node]
    }

    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn skeleton(&self) -> &[(usize, usize)] {
        &self.skeleton
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn start_node(&self) -> usize {
        0
    }

    pub fn end_node(&self) -> usize {
        self.labels.len() - 1
    }

    /// Indices into [`ExtendedLpo::skeleton`] of the arcs leaving `node`.
    pub fn out_arcs(&self, node: usize) -> std::ops::Range<usize> {
        self.out_arcs[node].clone()
    }

    /// Indices into [`ExtendedLpo::skeleton`] of the arcs entering `node`.
    pub fn in_arcs(&self, node: usize) -> &[usize] {
        &self.in_arcs[node]
    }

    /// Topological order σ: Kahn's method, ties by ascending node id.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Index of `node` in σ.
    pub fn position(&self, node: usize) -> usize {
        self.position[node]
    }

    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.order.binary_search(&(u, v)).is_ok()
    }

    /// Drops the endpoint nodes and re-normalizes the remaining order.
    pub fn strip_endpoints(&self) -> Lpo {
        let n = self.len();
        let labels = self.labels[1..n - 1]
            .iter()
            .map(|t| match t {
                Transition::Activity(a) => a.clone(),
                _ => unreachable!("endpoints only at the first and last node"),
            })
            .collect();
        let arcs: Vec<_> = self
            .order
            .iter()
            .filter(|&&(u, v)| u != 0 && v != n - 1)
            .map(|&(u, v)| (u - 1, v - 1))
            .collect();
        Lpo::new(labels, &arcs).expect("sub-order of an acyclic order")
    }
}

/// A multiset of LPO variants.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub alphabet: BTreeSet<Activity>,
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub lpo: Lpo,
    pub count: u64,
}

impl EventLog {
    /// Builds a log and collects the alphabet from the variant labels.
    pub fn from_variants(variants: Vec<Variant>) -> Self {
        let alphabet = variants
            .iter()
            .flat_map(|v| v.lpo.labels().iter().cloned())
            .collect();
        EventLog { alphabet, variants }
    }

    pub fn case_count(&self) -> u64 {
        self.variants.iter().map(|v| v.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.case_count() == 0
    }
}

/// An event log whose variants are all extended with ▶/■.
#[derive(Debug, Clone)]
pub struct ExtendedLog {
    pub alphabet: BTreeSet<Activity>,
    pub variants: Vec<(ExtendedLpo, u64)>,
}

impl ExtendedLog {
    pub fn case_count(&self) -> u64 {
        self.variants.iter().map(|v| v.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaceError {
    #[error("preset must not be empty")]
    EmptyPreset,
    #[error("postset must not be empty")]
    EmptyPostset,
    #[error("the end transition cannot be in a preset")]
    EndInPreset,
    #[error("the start transition cannot be in a postset")]
    StartInPostset,
}

/// A candidate (or accepted) inner place, identified by its preset and
/// postset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidatePlace {
    preset: BTreeSet<Transition>,
    postset: BTreeSet<Transition>,
}

impl CandidatePlace {
    pub fn new(
        preset: impl IntoIterator<Item = Transition>,
        postset: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, PlaceError> {
        let preset: BTreeSet<_> = preset.into_iter().collect();
        let postset: BTreeSet<_> = postset.into_iter().collect();
        if preset.is_empty() {
            return Err(PlaceError::EmptyPreset);
        }
        if postset.is_empty() {
            return Err(PlaceError::EmptyPostset);
        }
        if preset.contains(&Transition::End) {
            return Err(PlaceError::EndInPreset);
        }
        if postset.contains(&Transition::Start) {
            return Err(PlaceError::StartInPostset);
        }
        Ok(CandidatePlace { preset, postset })
    }

    /// Convenience constructor from labels; `▶`/`■` map to the endpoints.
    pub fn from_labels(preset: &[&str], postset: &[&str]) -> Result<Self, PlaceCreationError> {
        let parse = |labels: &[&str]| {
            labels
                .iter()
                .map(|l| Transition::from_label(l))
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(CandidatePlace::new(parse(preset)?, parse(postset)?)?)
    }

    pub fn preset(&self) -> &BTreeSet<Transition> {
        &self.preset
    }

    pub fn postset(&self) -> &BTreeSet<Transition> {
        &self.postset
    }

    pub fn size(&self) -> usize {
        self.preset.len() + self.postset.len()
    }

    /// Canonical place order: by total arc count, then preset, then postset.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.preset.iter().cmp(other.preset.iter()))
            .then_with(|| self.postset.iter().cmp(other.postset.iter()))
    }
}

impl PartialOrd for CandidatePlace {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CandidatePlace {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical_cmp(other)
    }
}

impl fmt::Display for CandidatePlace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |set: &BTreeSet<Transition>| {
            set.iter()
                .map(|t| t.label().to_owned())
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(
            f,
            "({{{}}} | {{{}}})",
            join(&self.preset),
            join(&self.postset)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaceCreationError {
    #[error(transparent)]
    Label(#[from] ActivityError),
    #[error(transparent)]
    Place(#[from] PlaceError),
}

/// A workflow net with source place `i` (feeding only ▶) and sink place `o`
/// (fed only by ■). Inner places are unique and kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowNet {
    transitions: BTreeSet<Transition>,
    places: Vec<CandidatePlace>,
}

impl WorkflowNet {
    /// Builds a net over `alphabet ∪ {▶, ■}`; duplicate places collapse and
    /// the rest are sorted canonically.
    pub fn new(
        alphabet: impl IntoIterator<Item = Activity>,
        places: impl IntoIterator<Item = CandidatePlace>,
    ) -> Self {
        let mut transitions: BTreeSet<Transition> =
            alphabet.into_iter().map(Transition::Activity).collect();
        transitions.insert(Transition::Start);
        transitions.insert(Transition::End);
        let mut places: Vec<_> = places.into_iter().collect();
        for p in &places {
            transitions.extend(p.preset().iter().cloned());
            transitions.extend(p.postset().iter().cloned());
        }
        places.sort();
        places.dedup();
        WorkflowNet {
            transitions,
            places,
        }
    }

    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }

    /// Inner places in canonical order (`p1`, `p2`, … in exports).
    pub fn places(&self) -> &[CandidatePlace] {
        &self.places
    }

    pub fn activities(&self) -> impl Iterator<Item = &Activity> {
        self.transitions.iter().filter_map(|t| match t {
            Transition::Activity(a) => Some(a),
            _ => None,
        })
    }

    /// Transitions that do not lie on a directed path from `i` to `o`.
    pub fn disconnected_transitions(&self) -> Vec<Transition> {
        // Reachability on transitions only: t -> t' whenever some place has
        // t in its preset and t' in its postset.
        let index: Vec<&Transition> = self.transitions.iter().collect();
        let pos = |t: &Transition| index.binary_search(&t).expect("known transition");
        let n = index.len();
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for p in &self.places {
            for a in p.preset() {
                for b in p.postset() {
                    fwd[pos(a)].push(pos(b));
                    bwd[pos(b)].push(pos(a));
                }
            }
        }
        let from_start = reachable(&fwd, pos(&Transition::Start));
        let to_end = reachable(&bwd, pos(&Transition::End));
        (0..n)
            .filter(|&t| !(from_start[t] && to_end[t]))
            .map(|t| index[t].clone())
            .collect()
    }
}

fn reachable(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn acts(names: &[&str]) -> Vec<Activity> {
        names.iter().map(|n| Activity::new(*n).unwrap()).collect()
    }

    #[test]
    fn chain_closure_and_reduction() {
        let out = normalize_order(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(out.order, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(out.skeleton, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn redundant_arc_is_reduced_away() {
        let a = normalize_order(3, &[(0, 1), (1, 2)]).unwrap();
        let b = normalize_order(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = normalize_order(2, &[(0, 1), (1, 0)]).unwrap_err();
        assert_eq!(
            err,
            OrderError::Cycle {
                witness: vec![0, 1, 0]
            }
        );
    }

    #[test]
    fn self_loop_and_range_errors() {
        assert!(matches!(
            normalize_order(2, &[(1, 1)]),
            Err(OrderError::Cycle { .. })
        ));
        assert!(matches!(
            normalize_order(2, &[(0, 2)]),
            Err(OrderError::UnknownNode { .. })
        ));
    }

    #[test]
    fn validate_reports_first_violation() {
        let labels = acts(&["a", "b", "c"]);
        let ok = Lpo::new(labels.clone(), &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(validate_lpo(&ok), Ok(()));

        let missing = Lpo::from_parts(labels.clone(), vec![(0, 1), (1, 2)], vec![(0, 1), (1, 2)]);
        assert_eq!(
            validate_lpo(&missing),
            Err(LpoViolation::NotTransitive(0, 1, 2))
        );
        assert!(validate_lpo(&missing)
            .unwrap_err()
            .to_string()
            .starts_with("not transitive"));

        let unreduced = Lpo::from_parts(
            labels.clone(),
            vec![(0, 1), (0, 2), (1, 2)],
            vec![(0, 1), (0, 2), (1, 2)],
        );
        assert_eq!(
            validate_lpo(&unreduced),
            Err(LpoViolation::SkeletonNotReduced(0, 1, 2))
        );

        let reflexive = Lpo::from_parts(labels.clone(), vec![(1, 1)], vec![]);
        assert_eq!(validate_lpo(&reflexive), Err(LpoViolation::Reflexive(1)));

        let incomplete = Lpo::from_parts(labels, vec![(0, 1), (0, 2), (1, 2)], vec![(0, 1)]);
        assert_eq!(
            validate_lpo(&incomplete),
            Err(LpoViolation::SkeletonIncomplete(0, 2))
        );
    }

    #[test]
    fn reserved_and_empty_names() {
        assert_eq!(Activity::new("▶"), Err(ActivityError::Reserved("▶".into())));
        assert_eq!(Activity::new(""), Err(ActivityError::Empty));
        assert!(serde_json::from_str::<Activity>("\"■\"").is_err());
    }

    #[test]
    fn place_invariants() {
        assert_eq!(
            CandidatePlace::from_labels(&["■"], &["a"]).unwrap_err(),
            PlaceCreationError::Place(PlaceError::EndInPreset)
        );
        assert_eq!(
            CandidatePlace::from_labels(&["a"], &["▶"]).unwrap_err(),
            PlaceCreationError::Place(PlaceError::StartInPostset)
        );
        assert!(CandidatePlace::from_labels(&[], &["a"]).is_err());
    }

    #[test]
    fn net_sorts_and_reports_disconnected() {
        let p = |i: &[&str], o: &[&str]| CandidatePlace::from_labels(i, o).unwrap();
        let net = WorkflowNet::new(
            acts(&["a", "b"]),
            vec![p(&["a"], &["■"]), p(&["▶"], &["a"]), p(&["▶"], &["a"])],
        );
        assert_eq!(net.places(), &[p(&["▶"], &["a"]), p(&["a"], &["■"])]);
        assert_eq!(
            net.disconnected_transitions(),
            vec![Transition::Activity(Activity::new("b").unwrap())]
        );
    }

    /// Floyd–Warshall closure over a boolean matrix.
    fn closure_oracle(n: usize, arcs: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut m = vec![vec![false; n]; n];
        for &(u, v) in arcs {
            m[u][v] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                if b {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn random_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=12).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect();
            let len = pairs.len();
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), len),
                Just(pairs),
                proptest::sample::subsequence((0..n).collect::<Vec<_>>(), n).prop_shuffle(),
            )
                .prop_map(|(n, keep, pairs, perm)| {
                    let arcs = pairs
                        .into_iter()
                        .zip(keep)
                        .filter(|(_, k)| *k)
                        .map(|((u, v), _)| (perm[u], perm[v]))
                        .collect();
                    (n, arcs)
                })
        })
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent((n, arcs) in random_dag()) {
            let first = normalize_order(n, &arcs).unwrap();
            let second = normalize_order(n, &first.skeleton).unwrap();
            prop_assert_eq!(&first, &second);
            let third = normalize_order(n, &first.order).unwrap();
            prop_assert_eq!(&first, &third);
        }

        #[test]
        fn skeleton_generates_order((n, arcs) in random_dag()) {
            let out = normalize_order(n, &arcs).unwrap();
            prop_assert_eq!(closure_oracle(n, &arcs), out.order.clone());
            prop_assert_eq!(closure_oracle(n, &out.skeleton), out.order.clone());
            for arc in &out.skeleton {
                prop_assert!(out.order.binary_search(arc).is_ok());
            }
            let labels = (0..n).map(|i| Activity::new(format!("t{i}")).unwrap()).collect();
            let lpo = Lpo::new(labels, &arcs).unwrap();
            prop_assert_eq!(validate_lpo(&lpo), Ok(()));
        }
    }
}
