//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use po_miner_core::{
    Activity, CandidatePlace, Case, Event, EventLog, ExtendedLpo, Lpo, SequentialLog, Timestamp,
    Transition, Variant,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn act(name: &str) -> Activity {
    Activity::new(name).unwrap()
}

pub fn alphabet(k: usize) -> Vec<Activity> {
    (0..k)
        .map(|i| act(&((b'a' + i as u8) as char).to_string()))
        .collect()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Random LPO with `n` nodes: arcs between a random permutation's
/// positions with probability `density`, so ids are not topologically sorted.
pub fn random_lpo(rng: &mut impl Rng, n: usize, alphabet: &[Activity], density: f64) -> Lpo {
    let labels: Vec<Activity> = (0..n)
        .map(|_| alphabet.choose(rng).unwrap().clone())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                arcs.push((perm[i], perm[j]));
            }
        }
    }
    Lpo::new(labels, &arcs).unwrap()
}

pub fn random_chain(rng: &mut impl Rng, n: usize, alphabet: &[Activity]) -> Lpo {
    Lpo::chain(
        (0..n)
            .map(|_| alphabet.choose(rng).unwrap().clone())
            .collect(),
    )
}

/// Random log; `max_nodes` bounds each variant, counts in 1..=5.
pub fn random_log(
    rng: &mut impl Rng,
    alphabet: &[Activity],
    max_variants: usize,
    max_nodes: usize,
) -> EventLog {
    let variants = rng.gen_range(1..=max_variants);
    EventLog::from_variants(
        (0..variants)
            .map(|_| {
                let n = rng.gen_range(1..=max_nodes);
                let density = rng.gen_range(0.1..0.9);
                Variant {
                    lpo: random_lpo(rng, n, alphabet, density),
                    count: rng.gen_range(1..=5),
                }
            })
            .collect(),
    )
}

pub fn random_chain_log(
    rng: &mut impl Rng,
    alphabet: &[Activity],
    max_variants: usize,
    max_nodes: usize,
) -> EventLog {
    let variants = rng.gen_range(1..=max_variants);
    EventLog::from_variants(
        (0..variants)
            .map(|_| {
                let n = rng.gen_range(1..=max_nodes);
                Variant {
                    lpo: random_chain(rng, n, alphabet),
                    count: rng.gen_range(1..=5),
                }
            })
            .collect(),
    )
}

/// Random candidate over ▶ + alphabet + ■ with both sides non-empty.
pub fn random_place(rng: &mut impl Rng, alphabet: &[Activity]) -> CandidatePlace {
    let pick = |rng: &mut _, extra: Transition| -> BTreeSet<Transition> {
        let mut pool: Vec<Transition> =
            alphabet.iter().cloned().map(Transition::Activity).collect();
        pool.push(extra);
        loop {
            let set: BTreeSet<_> = pool
                .iter()
                .filter(|_| Rng::gen_bool(rng, 0.35))
                .cloned()
                .collect();
            if !set.is_empty() {
                return set;
            }
        }
    };
    let preset = pick(rng, Transition::Start);
    let postset = pick(rng, Transition::End);
    CandidatePlace::new(preset, postset).unwrap()
}

/// All candidates over `order` (▶ first, ■ last) with `|I| + |O| <= depth`.
pub fn all_candidates(order: &[Transition], depth: usize) -> Vec<CandidatePlace> {
    let side = order.len() - 1;
    let mut out = Vec::new();
    for i_mask in 1u32..(1 << side) {
        for o_mask in 1u32..(1 << side) {
            if (i_mask.count_ones() + o_mask.count_ones()) as usize > depth {
                continue;
            }
            let preset = (0..side)
                .filter(|b| i_mask >> b & 1 == 1)
                .map(|b| order[b].clone());
            let postset = (0..side)
                .filter(|b| o_mask >> b & 1 == 1)
                .map(|b| order[b + 1].clone());
            out.push(CandidatePlace::new(preset, postset).unwrap());
        }
    }
    out
}

/// Exhaustive search for a compact tokenflow on the skeleton. Nodes are
/// settled in topological order; each node splits its outflow over its
/// outgoing arcs in every possible way. With `strict`, ■ must end with an
/// empty place; otherwise leftover tokens at ■ are allowed, which makes
/// the answer exactly "not underfed".
pub fn tokenflow_exists(place: &CandidatePlace, lpo: &ExtendedLpo, strict: bool) -> bool {
    let n = lpo.len();
    let produces: Vec<bool> = lpo
        .labels()
        .iter()
        .map(|t| place.preset().contains(t))
        .collect();
    let consumes: Vec<bool> = lpo
        .labels()
        .iter()
        .map(|t| place.postset().contains(t))
        .collect();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for &(u, v) in lpo.skeleton() {
        succ[u].push(v);
        indeg[v] += 1;
    }
    // plain Kahn order, independent of the library's σ
    let mut topo = Vec::new();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    while let Some(v) = ready.pop() {
        topo.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    assert_eq!(topo.len(), n);

    struct Search<'a> {
        topo: Vec<usize>,
        succ: Vec<Vec<usize>>,
        produces: Vec<bool>,
        consumes: Vec<bool>,
        strict: bool,
        dead: HashSet<(usize, Vec<u64>)>,
        _lpo: &'a ExtendedLpo,
    }

    impl Search<'_> {
        fn run(&mut self, step: usize, inflow: Vec<u64>) -> bool {
            if step == self.topo.len() {
                return true;
            }
            if self.dead.contains(&(step, inflow.clone())) {
                return false;
            }
            let v = self.topo[step];
            let mut budget = inflow[v] as i64;
            let ok = 'found: {
                if self.consumes[v] {
                    if budget < 1 {
                        break 'found false;
                    }
                    budget -= 1;
                }
                if self.produces[v] {
                    budget += 1;
                }
                let out = self.succ[v].clone();
                if out.is_empty() {
                    break 'found !self.strict || budget == 0;
                }
                let mut split = vec![0u64; out.len()];
                self.distribute(step, &inflow, &out, &mut split, 0, budget as u64)
            };
            if !ok {
                self.dead.insert((step, inflow));
            }
            ok
        }

        fn distribute(
            &mut self,
            step: usize,
            inflow: &[u64],
            out: &[usize],
            split: &mut Vec<u64>,
            k: usize,
            left: u64,
        ) -> bool {
            if k + 1 == out.len() {
                split[k] = left;
                let mut next = inflow.to_vec();
                for (&w, &x) in out.iter().zip(split.iter()) {
                    next[w] += x;
                }
                return self.run(step + 1, next);
            }
            for x in 0..=left {
                split[k] = x;
                if self.distribute(step, inflow, out, split, k + 1, left - x) {
                    return true;
                }
            }
            false
        }
    }

    let mut search = Search {
        topo,
        succ,
        produces,
        consumes,
        strict,
        dead: HashSet::new(),
        _lpo: lpo,
    };
    search.run(0, vec![0; n])
}

/// Token game on a sequence of transitions: consumption is clamped at zero
/// and flags underfed; overfed compares produced against consumed counts.
pub struct Replay {
    pub underfed: bool,
    pub overfed: bool,
}

pub fn replay_sequence(place: &CandidatePlace, trace: &[Transition]) -> Replay {
    let mut marking = 0u64;
    let mut balance = 0i64;
    let mut underfed = false;
    for t in trace {
        if place.postset().contains(t) {
            balance -= 1;
            if marking == 0 {
                underfed = true;
            } else {
                marking -= 1;
            }
        }
        if place.preset().contains(t) {
            balance += 1;
            marking += 1;
        }
    }
    Replay {
        underfed,
        overfed: balance > 0,
    }
}

/// ▶, the chain's labels, ■.
pub fn chain_transitions(lpo: &Lpo) -> Vec<Transition> {
    let mut seq = vec![Transition::Start];
    // a chain's order is total; sort nodes by number of predecessors
    let mut nodes: Vec<usize> = (0..lpo.len()).collect();
    nodes.sort_by_key(|&v| lpo.order().iter().filter(|&&(_, w)| w == v).count());
    seq.extend(
        nodes
            .iter()
            .map(|&v| Transition::Activity(lpo.labels()[v].clone())),
    );
    seq.push(Transition::End);
    seq
}

/// Isomorphism by trying every bijection; only for small LPOs.
pub fn isomorphic(a: &Lpo, b: &Lpo) -> bool {
    let n = a.len();
    if n != b.len() || a.order().len() != b.order().len() {
        return false;
    }
    assert!(n <= 8, "brute-force isomorphism is limited to 8 nodes");
    let mut perm: Vec<usize> = (0..n).collect();
    let b_order: HashSet<(usize, usize)> = b.order().iter().copied().collect();
    loop {
        let labels_match = (0..n).all(|v| a.labels()[v] == b.labels()[perm[v]]);
        if labels_match
            && a.order()
                .iter()
                .all(|&(u, v)| b_order.contains(&(perm[u], perm[v])))
        {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Random sequential log with second-resolution timestamps; gaps of 0
/// produce equal timestamps.
pub fn random_sequential_log(
    rng: &mut impl Rng,
    alphabet: &[Activity],
    cases: usize,
    max_len: usize,
) -> SequentialLog {
    SequentialLog {
        cases: (0..cases)
            .map(|c| {
                let len = rng.gen_range(1..=max_len);
                let mut t = rng.gen_range(0..1_000i64);
                Case {
                    id: format!("c{c}"),
                    events: (0..len)
                        .map(|_| {
                            t += rng.gen_range(0..4);
                            Event {
                                activity: alphabet.choose(rng).unwrap().clone(),
                                timestamp: Timestamp::from_secs(t),
                            }
                        })
                        .collect(),
                }
            })
            .collect(),
    }
}

/// Place of the Repair net fed by analysis and restarts, feeding both
/// repair variants.
pub const REPAIR_P4: (&[&str], &[&str]) = (
    &["Analyze Defect", "Restart Repair"],
    &["Repair (Complex)", "Repair (Simple)"],
);

pub fn repair_net_places() -> Vec<CandidatePlace> {
    let places: &[(&[&str], &[&str])] = &[
        (&["▶"], &["Register"]),
        (&["Register"], &["Analyze Defect"]),
        (&["Analyze Defect"], &["Inform User"]),
        REPAIR_P4,
        (&["Repair (Complex)", "Repair (Simple)"], &["Test Repair"]),
        (&["Test Repair"], &["Restart Repair", "Archive Repair"]),
        (&["Inform User"], &["Archive Repair"]),
        (&["Archive Repair"], &["■"]),
    ];
    places
        .iter()
        .map(|(i, o)| CandidatePlace::from_labels(i, o).unwrap())
        .collect()
}

pub fn load_repair_log() -> EventLog {
    let bytes = std::fs::read(fixture("repair_lpo.json")).unwrap();
    po_miner_core::parse_lpo_json(&bytes).unwrap()
}
