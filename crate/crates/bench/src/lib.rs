//! Seeded workload generators for the benchmarks.

use po_miner_core::{
    alpha_partialize, Activity, CandidatePlace, Case, Event, EventLog, Lpo, SequentialLog,
    Timestamp, Transition,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn alphabet(k: usize) -> Vec<Activity> {
    (0..k)
        .map(|i| Activity::new(format!("t{i}")).unwrap())
        .collect()
}

/// Random LPO: each pair of a shuffled node sequence is ordered with
/// probability `density`.
pub fn random_lpo(seed: u64, nodes: usize, alphabet: &[Activity], density: f64) -> Lpo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..nodes)
        .map(|_| alphabet.choose(&mut rng).unwrap().clone())
        .collect();
    let mut perm: Vec<usize> = (0..nodes).collect();
    perm.shuffle(&mut rng);
    let mut arcs = Vec::new();
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.gen_bool(density) {
                arcs.push((perm[i], perm[j]));
            }
        }
    }
    Lpo::new(labels, &arcs).unwrap()
}

/// `({▶, a0}, {a1, a2})`: two consumers fed by the start and one activity.
pub fn two_consumer_place(alphabet: &[Activity]) -> CandidatePlace {
    CandidatePlace::new(
        [Transition::Start, Transition::Activity(alphabet[0].clone())],
        [
            Transition::Activity(alphabet[1].clone()),
            Transition::Activity(alphabet[2].clone()),
        ],
    )
    .unwrap()
}

/// Random sequential cases lifted with the Alpha oracle.
pub fn synthetic_log(seed: u64, activities: usize, cases: usize, max_len: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = alphabet(activities);
    let seq = SequentialLog {
        cases: (0..cases)
            .map(|c| {
                let len = rng.gen_range(1..=max_len);
                Case {
                    id: c.to_string(),
                    events: (0..len)
                        .map(|k| Event {
                            activity: sigma.choose(&mut rng).unwrap().clone(),
                            timestamp: Timestamp::from_secs(k as i64),
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    alpha_partialize(&seq)
}
