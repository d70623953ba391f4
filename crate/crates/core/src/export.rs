//! Net post-processing, replay statistics and DOT/PNML serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::log_io::extend_log;
use crate::model::{ActivityError, CandidatePlace, EventLog, PlaceError, Transition, WorkflowNet};
use crate::tokenflow::{classify_lpo, LogVerdict, VerdictCounts};

const PNML_NS: &str = "http://www.pnml.org/version-2009/grammar/pnml";
const PTNET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";

/// Collapses structurally equal places and re-sorts canonically.
pub fn dedupe_places(net: &WorkflowNet) -> WorkflowNet {
    WorkflowNet::new(net.activities().cloned(), net.places().iter().cloned())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceReport {
    /// `p1`, `p2`, ... in canonical order.
    pub id: String,
    pub preset: Vec<String>,
    pub postset: Vec<String>,
    #[serde(flatten)]
    pub verdict: LogVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub cases: u64,
    pub variants: usize,
    /// Fraction of cases on which every place fits.
    pub net_fitting_fraction: f64,
    pub places: Vec<PlaceReport>,
    pub disconnected_transitions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("log activities missing from the net: {}", .missing.join(", "))]
pub struct AlphabetMismatchError {
    pub missing: Vec<String>,
}

/// Scores every place of `net` on `log` and the net as a whole.
pub fn replay_statistics(
    net: &WorkflowNet,
    log: &EventLog,
) -> Result<ReplayReport, AlphabetMismatchError> {
    let known: BTreeSet<_> = net.activities().collect();
    let used = log
        .alphabet
        .iter()
        .chain(log.variants.iter().flat_map(|v| v.lpo.labels()));
    let missing: BTreeSet<String> = used
        .filter(|a| !known.contains(a))
        .map(|a| a.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(AlphabetMismatchError {
            missing: missing.into_iter().collect(),
        });
    }

    let extended = extend_log(log);
    let mut per_place = vec![VerdictCounts::default(); net.places().len()];
    let mut net_fitting = 0;
    for (lpo, count) in &extended.variants {
        let mut all_fit = true;
        for (place, counts) in net.places().iter().zip(&mut per_place) {
            let verdict = classify_lpo(place, lpo);
            all_fit &= verdict.is_fitting();
            counts.add(&verdict, *count);
        }
        if all_fit {
            net_fitting += count;
        }
    }
    let cases = extended.case_count();
    let labels = |set: &BTreeSet<Transition>| set.iter().map(|t| t.label().to_owned()).collect();
    Ok(ReplayReport {
        cases,
        variants: extended.variants.len(),
        net_fitting_fraction: if cases == 0 {
            1.0
        } else {
            net_fitting as f64 / cases as f64
        },
        places: net
            .places()
            .iter()
            .zip(&per_place)
            .enumerate()
            .map(|(k, (place, counts))| PlaceReport {
                id: format!("p{}", k + 1),
                preset: labels(place.preset()),
                postset: labels(place.postset()),
                verdict: counts.fractions(),
            })
            .collect(),
        disconnected_transitions: net
            .disconnected_transitions()
            .iter()
            .map(|t| t.label().to_owned())
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetFormat {
    Dot,
    Pnml,
}

/// Stable node ids: `t0..` for transitions in net order, `i`, `o` and
/// `p1..` for places.
struct NetIds<'a> {
    transitions: BTreeMap<&'a Transition, String>,
}

impl<'a> NetIds<'a> {
    fn new(net: &'a WorkflowNet) -> Self {
        NetIds {
            transitions: net
                .transitions()
                .iter()
                .enumerate()
                .map(|(k, t)| (t, format!("t{k}")))
                .collect(),
        }
    }

    fn of(&self, t: &Transition) -> &str {
        &self.transitions[t]
    }

    /// `(source, target)` arcs in emission order.
    fn arcs(&self, net: &WorkflowNet) -> Vec<(String, String)> {
        let mut arcs = vec![
            ("i".to_owned(), self.of(&Transition::Start).to_owned()),
            (self.of(&Transition::End).to_owned(), "o".to_owned()),
        ];
        for (k, place) in net.places().iter().enumerate() {
            let p = format!("p{}", k + 1);
            for t in place.preset() {
                arcs.push((self.of(t).to_owned(), p.clone()));
            }
            for t in place.postset() {
                arcs.push((p.clone(), self.of(t).to_owned()));
            }
        }
        arcs
    }
}

pub fn export_net(net: &WorkflowNet, format: NetFormat) -> Vec<u8> {
    match format {
        NetFormat::Dot => export_dot(net),
        NetFormat::Pnml => export_pnml(net),
    }
    .into_bytes()
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn export_dot(net: &WorkflowNet) -> String {
    let ids = NetIds::new(net);
    let mut out = String::from("digraph workflow_net {\n    rankdir=LR;\n");
    let mut place = |id: &str| {
        writeln!(out, "    {id} [shape=circle, label={}];", dot_quote(id)).unwrap();
    };
    place("i");
    place("o");
    for k in 1..=net.places().len() {
        place(&format!("p{k}"));
    }
    for t in net.transitions() {
        writeln!(
            out,
            "    {} [shape=box, label={}];",
            ids.of(t),
            dot_quote(t.label())
        )
        .unwrap();
    }
    for (src, dst) in ids.arcs(net) {
        writeln!(out, "    {src} -> {dst};").unwrap();
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn export_pnml(net: &WorkflowNet) -> String {
    let ids = NetIds::new(net);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(out, "<pnml xmlns=\"{PNML_NS}\">").unwrap();
    writeln!(out, "  <net id=\"net1\" type=\"{PTNET_TYPE}\">").unwrap();
    out.push_str("    <page id=\"page1\">\n");
    let mut place = |id: &str, marking: Option<u32>| {
        write!(
            out,
            "      <place id=\"{id}\"><name><text>{id}</text></name>"
        )
        .unwrap();
        if let Some(m) = marking {
            write!(out, "<initialMarking><text>{m}</text></initialMarking>").unwrap();
        }
        out.push_str("</place>\n");
    };
    place("i", Some(1));
    place("o", None);
    for k in 1..=net.places().len() {
        place(&format!("p{k}"), None);
    }
    for t in net.transitions() {
        writeln!(
            out,
            "      <transition id=\"{}\"><name><text>{}</text></name></transition>",
            ids.of(t),
            xml_escape(t.label())
        )
        .unwrap();
    }
    for (k, (src, dst)) in ids.arcs(net).iter().enumerate() {
        writeln!(
            out,
            "      <arc id=\"a{k}\" source=\"{src}\" target=\"{dst}\"/>"
        )
        .unwrap();
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

#[derive(Debug, Error)]
pub enum PnmlError {
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("no <net> element")]
    NoNet,
    #[error("element <{element}> lacks attribute `{attribute}`")]
    MissingAttribute {
        element: &'static str,
        attribute: &'static str,
    },
    #[error("arc {arc} references unknown node `{node}`")]
    UnknownNode { arc: String, node: String },
    #[error("arc {0} does not connect a place and a transition")]
    ArcKind(String),
    #[error("transition {id}: {source}")]
    Label {
        id: String,
        #[source]
        source: ActivityError,
    },
    #[error("place {id}: {source}")]
    Place {
        id: String,
        #[source]
        source: PlaceError,
    },
}

/// Reads a workflow net written by [`export_net`] or any PNML tool that
/// uses `▶`/`■` transition names. The initially marked place and places
/// without output arcs are treated as the source and sink places.
pub fn parse_pnml(text: &str) -> Result<WorkflowNet, PnmlError> {
    let doc = roxmltree::Document::parse(text)?;
    let net = doc
        .descendants()
        .find(|n| n.has_tag_name("net"))
        .ok_or(PnmlError::NoNet)?;
    let id_of = |n: roxmltree::Node, element: &'static str| {
        n.attribute("id")
            .map(str::to_owned)
            .ok_or(PnmlError::MissingAttribute {
                element,
                attribute: "id",
            })
    };
    let child_text = |n: roxmltree::Node, tag: &str| {
        n.children()
            .find(|c| c.has_tag_name(tag))
            .and_then(|c| c.children().find(|t| t.has_tag_name("text")))
            .and_then(|t| t.text())
            .map(|s| s.trim().to_owned())
    };

    let mut transitions: BTreeMap<String, Transition> = BTreeMap::new();
    let mut places: BTreeMap<String, bool> = BTreeMap::new();
    for n in net.descendants() {
        if n.has_tag_name("transition") {
            let id = id_of(n, "transition")?;
            let label = child_text(n, "name").unwrap_or_else(|| id.clone());
            let t = Transition::from_label(&label).map_err(|source| PnmlError::Label {
                id: id.clone(),
                source,
            })?;
            transitions.insert(id, t);
        } else if n.has_tag_name("place") {
            let id = id_of(n, "place")?;
            let marked = child_text(n, "initialMarking")
                .and_then(|m| m.parse::<u64>().ok())
                .is_some_and(|m| m > 0);
            places.insert(id, marked);
        }
    }

    let mut presets: BTreeMap<&str, BTreeSet<Transition>> = BTreeMap::new();
    let mut postsets: BTreeMap<&str, BTreeSet<Transition>> = BTreeMap::new();
    for n in net.descendants().filter(|n| n.has_tag_name("arc")) {
        let arc = id_of(n, "arc")?;
        let endpoint = |attribute: &'static str| {
            n.attribute(attribute).ok_or(PnmlError::MissingAttribute {
                element: "arc",
                attribute,
            })
        };
        let (src, dst) = (endpoint("source")?, endpoint("target")?);
        let unknown = |node: &str| PnmlError::UnknownNode {
            arc: arc.clone(),
            node: node.to_owned(),
        };
        match (
            places.get_key_value(src),
            transitions.get(src),
            places.get_key_value(dst),
            transitions.get(dst),
        ) {
            (None, None, _, _) => return Err(unknown(src)),
            (_, _, None, None) => return Err(unknown(dst)),
            (_, Some(t), Some((p, _)), _) => {
                presets.entry(p.as_str()).or_default().insert(t.clone());
            }
            (Some((p, _)), _, _, Some(t)) => {
                postsets.entry(p.as_str()).or_default().insert(t.clone());
            }
            _ => return Err(PnmlError::ArcKind(arc)),
        }
    }

    let mut inner = Vec::new();
    for (id, &marked) in &places {
        let postset = postsets.remove(id.as_str()).unwrap_or_default();
        if marked || postset.is_empty() {
            continue;
        }
        let preset = presets.remove(id.as_str()).unwrap_or_default();
        let place = CandidatePlace::new(preset, postset).map_err(|source| PnmlError::Place {
            id: id.clone(),
            source,
        })?;
        inner.push(place);
    }
    let activities = transitions.into_values().filter_map(|t| match t {
        Transition::Activity(a) => Some(a),
        _ => None,
    });
    Ok(WorkflowNet::new(activities, inner))
}
