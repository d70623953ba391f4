//! Concurrency oracles: lift totally ordered cases to labeled partial orders.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rayon::prelude::*;

use crate::log_io::{fold_variants, Case, SequentialLog};
use crate::model::{Activity, EventLog, Lpo, Variant};

/// Symmetric, irreflexive set of concurrent activity pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcurrencyRelation {
    neighbors: BTreeMap<Activity, BTreeSet<Activity>>,
}

impl ConcurrencyRelation {
    pub fn new(pairs: impl IntoIterator<Item = (Activity, Activity)>) -> Self {
        let mut neighbors: BTreeMap<Activity, BTreeSet<Activity>> = BTreeMap::new();
        for (a, b) in pairs.into_iter().filter(|(a, b)| a != b) {
            neighbors.entry(a.clone()).or_default().insert(b.clone());
            neighbors.entry(b).or_default().insert(a);
        }
        ConcurrencyRelation { neighbors }
    }

    pub fn concurrent(&self, a: &Activity, b: &Activity) -> bool {
        self.neighbors.get(a).is_some_and(|s| s.contains(b))
    }

    /// Each unordered pair once, smaller name first.
    pub fn pairs(&self) -> BTreeSet<(Activity, Activity)> {
        self.neighbors
            .iter()
            .flat_map(|(a, bs)| {
                bs.iter()
                    .filter(move |b| a < *b)
                    .map(move |b| (a.clone(), b.clone()))
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// All pairs `(a, b)` such that some case has `a` immediately followed by `b`.
pub fn directly_follows(log: &SequentialLog) -> BTreeSet<(Activity, Activity)> {
    let mut out = BTreeSet::new();
    for case in &log.cases {
        for w in case.events.windows(2) {
            out.insert((w[0].activity.clone(), w[1].activity.clone()));
        }
    }
    out
}

/// Alpha concurrency: `a ∥ b` iff both `(a, b)` and `(b, a)` directly follow
/// somewhere in the log.
pub fn alpha_concurrency(log: &SequentialLog) -> ConcurrencyRelation {
    let df = directly_follows(log);
    ConcurrencyRelation::new(
        df.iter()
            .filter(|(a, b)| a < b && df.contains(&(b.clone(), a.clone())))
            .cloned(),
    )
}

/// Orders every pair of events of a case unless their activities are
/// concurrent. Events with the same activity are always ordered.
pub fn partialize_case(case: &Case, concurrency: &ConcurrencyRelation) -> Lpo {
    let labels = case.trace();
    let n = labels.len();
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] || !concurrency.concurrent(&labels[i], &labels[j]) {
                arcs.push((i, j));
            }
        }
    }
    Lpo::new(labels, &arcs).expect("arcs follow trace positions")
}

/// Applies the Alpha oracle to every case and folds the result.
pub fn alpha_partialize(log: &SequentialLog) -> EventLog {
    let concurrency = alpha_concurrency(log);
    fold_cases(log, |case| partialize_case(case, &concurrency))
}

/// Orders events only across time buckets `floor(t / bucket)`; events in
/// the same bucket are unordered.
pub fn granularity_partialize(log: &SequentialLog, bucket: Duration) -> EventLog {
    assert!(!bucket.is_zero(), "bucket width must be positive");
    fold_cases(log, |case| bucket_case(case, bucket))
}

/// One case under the granularity oracle; node `i` is event `i`.
pub fn bucket_case(case: &Case, bucket: Duration) -> Lpo {
    let buckets: Vec<i64> = case
        .events
        .iter()
        .map(|e| e.timestamp.bucket(bucket))
        .collect();
    let n = buckets.len();
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if buckets[i] < buckets[j] {
                arcs.push((i, j));
            }
        }
    }
    Lpo::new(case.trace(), &arcs).expect("bucket order is acyclic")
}

fn fold_cases(log: &SequentialLog, lift: impl Fn(&Case) -> Lpo + Sync) -> EventLog {
    let variants: Vec<Variant> = log
        .cases
        .par_iter()
        .map(|case| Variant {
            lpo: lift(case),
            count: 1,
        })
        .collect();
    let mut log_out = EventLog::from_variants(variants);
    log_out.alphabet.extend(
        log.cases
            .iter()
            .flat_map(|c| c.events.iter().map(|e| e.activity.clone())),
    );
    fold_variants(&log_out)
}

/// True if the trace order of `case` contains the order of `lpo`, where
/// node `i` of `lpo` is event `i` of the case.
pub fn is_linear_extension(case: &Case, lpo: &Lpo) -> bool {
    lpo.len() == case.events.len()
        && lpo
            .labels()
            .iter()
            .zip(&case.events)
            .all(|(l, e)| *l == e.activity)
        && lpo.order().iter().all(|&(u, v)| u < v)
}
