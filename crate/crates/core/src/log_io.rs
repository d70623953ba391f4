//! Log ingestion and variant handling.
//!
//! Sequential logs come from CSV; partially ordered logs use a small JSON
//! document:
//!
//! ```json
//! {"alphabet": ["a", "b"],
//!  "variants": [{"count": 3,
//!                "nodes": [{"id": 0, "activity": "a"}, {"id": 1, "activity": "b"}],
//!                "arcs": [[0, 1]]}]}
//! ```
//!
//! `alphabet` is optional and `count` defaults to 1. Arcs may be any
//! generating relation; the writer emits skeleton arcs sorted
//! lexicographically.

use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Activity, ActivityError, EventLog, ExtendedLog, ExtendedLpo, Lpo, OrderError, Transition,
    Variant,
};

/// Nanoseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_secs(secs: i64) -> Self {
        Timestamp(secs * 1_000_000_000)
    }

    /// Index of the bucket containing this timestamp, `floor(t / bucket)`.
    pub fn bucket(self, bucket: Duration) -> i64 {
        let width = bucket.as_nanos().max(1) as i128;
        (self.0 as i128).div_euclid(width) as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub activity: Activity,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub id: String,
    pub events: Vec<Event>,
}

impl Case {
    pub fn trace(&self) -> Vec<Activity> {
        self.events.iter().map(|e| e.activity.clone()).collect()
    }
}

/// Totally ordered cases in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SequentialLog {
    pub cases: Vec<Case>,
}

impl SequentialLog {
    /// Number of distinct activity sequences.
    pub fn trace_variant_count(&self) -> usize {
        self.cases
            .iter()
            .map(Case::trace)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Each case as a chain LPO, folded into variants.
    pub fn to_chain_log(&self) -> EventLog {
        let variants = self
            .cases
            .iter()
            .map(|c| Variant {
                lpo: Lpo::chain(c.trace()),
                count: 1,
            })
            .collect();
        fold_variants(&EventLog::from_variants(variants))
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("variant {variant}: {source}")]
    Cycle {
        variant: usize,
        #[source]
        source: OrderError,
    },
    #[error("invalid JSON log: {0}")]
    Json(#[from] serde_json::Error),
}

impl LogError {
    fn format(line: u64, message: impl Into<String>) -> Self {
        LogError::Format {
            line,
            message: message.into(),
        }
    }
}

/// Header names of the three CSV columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub timestamp: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        CsvColumns {
            case: "case".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
        }
    }
}

pub fn parse_sequential_csv(bytes: &[u8], columns: &CsvColumns) -> Result<SequentialLog, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| LogError::format(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::format(1, format!("missing column {name:?}")))
    };
    let (case_col, act_col, ts_col) = (
        column(&columns.case)?,
        column(&columns.activity)?,
        column(&columns.timestamp)?,
    );

    let mut cases: Vec<Case> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LogError::format(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let activity =
            Activity::new(field(act_col)).map_err(|e| LogError::format(line, e.to_string()))?;
        let timestamp = parse_timestamp(field(ts_col)).ok_or_else(|| {
            LogError::format(line, format!("unparsable timestamp {:?}", field(ts_col)))
        })?;
        let case_id = field(case_col).to_owned();
        let slot = *index.entry(case_id.clone()).or_insert_with(|| {
            cases.push(Case {
                id: case_id,
                events: Vec::new(),
            });
            cases.len() - 1
        });
        cases[slot].events.push(Event {
            activity,
            timestamp,
        });
    }
    for case in &mut cases {
        // stable: equal timestamps keep file order
        case.events.sort_by_key(|e| e.timestamp);
    }
    Ok(SequentialLog { cases })
}

/// Epoch seconds (integer or fractional) or RFC 3339.
fn parse_timestamp(raw: &str) -> Option<Timestamp> {
    if let Ok(secs) = raw.parse::<i64>() {
        return secs.checked_mul(1_000_000_000).map(Timestamp);
    }
    if let Ok(secs) = raw.parse::<f64>() {
        if secs.is_finite() {
            return Some(Timestamp((secs * 1e9).round() as i64));
        }
        return None;
    }
    let parsed = chrono::DateTime::parse_from_rfc3339(raw).ok()?;
    parsed.timestamp_nanos_opt().map(Timestamp)
}

#[derive(Serialize, Deserialize)]
struct LogDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<Vec<String>>,
    variants: Vec<VariantDoc>,
}

#[derive(Serialize, Deserialize)]
struct VariantDoc {
    #[serde(default = "default_count")]
    count: u64,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    arcs: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    activity: String,
}

fn default_count() -> u64 {
    1
}

pub fn parse_lpo_json(bytes: &[u8]) -> Result<EventLog, LogError> {
    let doc: LogDoc = serde_json::from_slice(bytes)?;
    let mut variants = Vec::with_capacity(doc.variants.len());
    for (idx, v) in doc.variants.into_iter().enumerate() {
        let bad = |msg: String| LogError::format(0, format!("variant {idx}: {msg}"));
        if v.count == 0 {
            return Err(bad("count must be at least 1".into()));
        }
        let n = v.nodes.len();
        let mut labels: Vec<Option<Activity>> = vec![None; n];
        for node in v.nodes {
            if node.id >= n || labels[node.id].is_some() {
                return Err(bad(format!(
                    "node ids must be dense 0..{n}, got {}",
                    node.id
                )));
            }
            labels[node.id] = Some(Activity::new(node.activity).map_err(|e| bad(e.to_string()))?);
        }
        let labels: Vec<Activity> = labels.into_iter().map(Option::unwrap).collect();
        let arcs: Vec<(usize, usize)> = v.arcs.iter().map(|a| (a[0], a[1])).collect();
        let lpo = Lpo::new(labels, &arcs).map_err(|source| LogError::Cycle {
            variant: idx,
            source,
        })?;
        variants.push(Variant {
            lpo,
            count: v.count,
        });
    }
    let mut log = EventLog::from_variants(variants);
    if let Some(names) = doc.alphabet {
        let declared = names
            .into_iter()
            .map(Activity::new)
            .collect::<Result<BTreeSet<_>, ActivityError>>()
            .map_err(|e| LogError::format(0, format!("alphabet: {e}")))?;
        if let Some(missing) = log.alphabet.difference(&declared).next() {
            return Err(LogError::format(
                0,
                format!("activity {missing:?} is used but not in the declared alphabet"),
            ));
        }
        log.alphabet = declared;
    }
    Ok(log)
}

/// Serializes a log; `parse_lpo_json` reads it back to an equal log.
pub fn write_lpo_json(log: &EventLog) -> String {
    let doc = LogDoc {
        alphabet: Some(log.alphabet.iter().map(|a| a.to_string()).collect()),
        variants: log
            .variants
            .iter()
            .map(|v| VariantDoc {
                count: v.count,
                nodes: v
                    .lpo
                    .labels()
                    .iter()
                    .enumerate()
                    .map(|(id, a)| NodeDoc {
                        id,
                        activity: a.to_string(),
                    })
                    .collect(),
                arcs: v.lpo.skeleton().iter().map(|&(u, v)| [u, v]).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("log document serializes");
    out.push('\n');
    out
}

/// Serialization of an LPO under its canonical relabeling. Two LPOs with
/// equal keys are identical after relabeling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey {
    pub labels: Vec<Activity>,
    pub skeleton: Vec<(usize, usize)>,
}

/// Upper bound on explored individualization leaves per LPO. Past this the
/// search commits to the first candidate of each cell.
const CANON_LEAF_BUDGET: usize = 512;

/// Canonical form of `lpo`: the lexicographically smallest serialization
/// reachable by neighborhood refinement plus individualization of tied
/// nodes.
pub fn canonical_form(lpo: &Lpo) -> CanonicalKey {
    let n = lpo.len();
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for &(u, v) in lpo.skeleton() {
        succs[u].push(v);
        preds[v].push(u);
    }
    let mut order_in = vec![0usize; n];
    let mut order_out = vec![0usize; n];
    let mut order_preds = vec![Vec::new(); n];
    let mut order_succs = vec![Vec::new(); n];
    for &(u, v) in lpo.order() {
        order_out[u] += 1;
        order_in[v] += 1;
        order_succs[u].push(v);
        order_preds[v].push(u);
    }
    let graph = RefineGraph {
        preds,
        succs,
        order_in,
        order_out,
    };

    // Initial colors: rank of the label.
    let mut names: Vec<&Activity> = lpo.labels().iter().collect();
    names.sort();
    names.dedup();
    let colors: Vec<usize> = lpo
        .labels()
        .iter()
        .map(|l| names.binary_search(&l).unwrap())
        .collect();
    let colors = graph.refine(colors);

    // Twins (same label, same order predecessors and successors) are
    // interchangeable; one representative per twin class is enough.
    let twin_key: Vec<_> = (0..n)
        .map(|v| (&lpo.labels()[v], &order_preds[v], &order_succs[v]))
        .collect();

    let mut best: Option<CanonicalKey> = None;
    let mut budget = CANON_LEAF_BUDGET;
    search_canonical(lpo, &graph, colors, &twin_key, &mut budget, &mut best);
    best.expect("at least one leaf")
}

type TwinKey<'a> = (&'a Activity, &'a Vec<usize>, &'a Vec<usize>);

fn search_canonical(
    lpo: &Lpo,
    graph: &RefineGraph,
    colors: Vec<usize>,
    twin_key: &[TwinKey<'_>],
    budget: &mut usize,
    best: &mut Option<CanonicalKey>,
) {
    let n = colors.len();
    let mut cell_size = vec![0usize; n];
    for &c in &colors {
        cell_size[c] += 1;
    }
    let Some(cell) = (0..n).find(|&c| cell_size[c] > 1) else {
        // Discrete coloring: color is the canonical position.
        let key = relabel(lpo, &colors);
        if best.as_ref().is_none_or(|b| key < *b) {
            *best = Some(key);
        }
        *budget = budget.saturating_sub(1);
        return;
    };
    let mut members: Vec<usize> = (0..n).filter(|&v| colors[v] == cell).collect();
    let mut seen = BTreeSet::new();
    members.retain(|&v| seen.insert(twin_key[v]));
    for (i, &v) in members.iter().enumerate() {
        if i > 0 && *budget == 0 {
            break;
        }
        // Individualize v: it keeps the cell's first slot, the rest move up.
        let split: Vec<usize> = colors
            .iter()
            .enumerate()
            .map(|(w, &c)| 2 * c + usize::from(c == cell && w != v))
            .collect();
        let refined = graph.refine(compress(&split));
        search_canonical(lpo, graph, refined, twin_key, budget, best);
    }
}

struct RefineGraph {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    order_in: Vec<usize>,
    order_out: Vec<usize>,
}

impl RefineGraph {
    /// Iterated (color, order degrees, neighbor colors) refinement until the
    /// partition is stable. New colors are ranks of sorted signatures, so the
    /// result depends only on the isomorphism class of the colored LPO.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let n = colors.len();
        let mut classes = distinct(&colors);
        loop {
            let signatures: Vec<_> = (0..n)
                .map(|v| {
                    let mut p: Vec<usize> = self.preds[v].iter().map(|&u| colors[u]).collect();
                    let mut s: Vec<usize> = self.succs[v].iter().map(|&u| colors[u]).collect();
                    p.sort_unstable();
                    s.sort_unstable();
                    (colors[v], self.order_in[v], self.order_out[v], p, s)
                })
                .collect();
            let mut sorted: Vec<_> = signatures.iter().collect();
            sorted.sort();
            sorted.dedup();
            let next: Vec<usize> = signatures
                .iter()
                .map(|s| sorted.binary_search(&s).unwrap())
                .collect();
            let next_classes = sorted.len();
            colors = next;
            if next_classes == classes {
                return colors;
            }
            classes = next_classes;
        }
    }
}

fn distinct(colors: &[usize]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

fn compress(colors: &[usize]) -> Vec<usize> {
    let mut sorted = colors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    colors
        .iter()
        .map(|c| sorted.binary_search(c).unwrap())
        .collect()
}

fn relabel(lpo: &Lpo, position: &[usize]) -> CanonicalKey {
    let n = lpo.len();
    let mut labels = vec![None; n];
    for v in 0..n {
        labels[position[v]] = Some(lpo.labels()[v].clone());
    }
    let mut skeleton: Vec<_> = lpo
        .skeleton()
        .iter()
        .map(|&(u, v)| (position[u], position[v]))
        .collect();
    skeleton.sort_unstable();
    CanonicalKey {
        labels: labels.into_iter().map(Option::unwrap).collect(),
        skeleton,
    }
}

/// Merges variants with identical canonical forms and sorts the result by
/// canonical form. Every output LPO is the canonical relabeling.
pub fn fold_variants(log: &EventLog) -> EventLog {
    use rayon::prelude::*;

    let keyed: Vec<(CanonicalKey, u64)> = log
        .variants
        .par_iter()
        .map(|v| (canonical_form(&v.lpo), v.count))
        .collect();
    let mut merged: std::collections::BTreeMap<CanonicalKey, u64> = Default::default();
    for (key, count) in keyed {
        *merged.entry(key).or_default() += count;
    }
    let variants = merged
        .into_iter()
        .map(|(key, count)| Variant {
            lpo: Lpo::new(key.labels, &key.skeleton).expect("relabeled order is acyclic"),
            count,
        })
        .collect();
    EventLog {
        alphabet: log.alphabet.clone(),
        variants,
    }
}

/// Adds ▶ below every minimal node and ■ above every maximal node.
pub fn extend_with_endpoints(lpo: &Lpo) -> ExtendedLpo {
    let n = lpo.len();
    let end = n + 1;
    let mut has_pred = vec![false; n];
    let mut has_succ = vec![false; n];
    for &(u, v) in lpo.skeleton() {
        has_succ[u] = true;
        has_pred[v] = true;
    }
    let mut arcs: Vec<(usize, usize)> = lpo
        .skeleton()
        .iter()
        .map(|&(u, v)| (u + 1, v + 1))
        .collect();
    for v in 0..n {
        if !has_pred[v] {
            arcs.push((0, v + 1));
        }
        if !has_succ[v] {
            arcs.push((v + 1, end));
        }
    }
    if n == 0 {
        arcs.push((0, end));
    }
    let mut labels = Vec::with_capacity(n + 2);
    labels.push(Transition::Start);
    labels.extend(lpo.labels().iter().cloned().map(Transition::Activity));
    labels.push(Transition::End);
    let normalized =
        crate::model::normalize_order(n + 2, &arcs).expect("endpoint extension stays acyclic");
    ExtendedLpo::from_normalized(labels, normalized)
}

/// Extends every variant once.
pub fn extend_log(log: &EventLog) -> ExtendedLog {
    ExtendedLog {
        alphabet: log.alphabet.clone(),
        variants: log
            .variants
            .iter()
            .map(|v| (extend_with_endpoints(&v.lpo), v.count))
            .collect(),
    }
}
