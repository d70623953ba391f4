mod common;

use common::*;
use po_miner_core::tokenflow::{
    backward_with_roles, forward_with_roles, maxflow_underfed, PlaceRoles,
};
use po_miner_core::{
    classify_lpo, extend_with_endpoints, final_marking, forward_pass, CandidatePlace, DecidedBy,
};
use rand::Rng;

#[test]
fn fitting_iff_strict_tokenflow_exists() {
    let mut rng = rng(11);
    for _ in 0..3000 {
        let sigma = alphabet(rng.gen_range(1..=4));
        let n = rng.gen_range(1..=8);
        let lpo = extend_with_endpoints(&random_lpo(&mut rng, n, &sigma, 0.4));
        let place = random_place(&mut rng, &sigma);
        assert_eq!(
            classify_lpo(&place, &lpo).is_fitting(),
            tokenflow_exists(&place, &lpo, true),
            "{place} on {:?}",
            lpo.labels()
        );
    }
}

#[test]
fn definite_heuristic_answers_are_sound() {
    let mut rng = rng(12);
    let mut definite = 0;
    for _ in 0..5000 {
        let sigma = alphabet(rng.gen_range(1..=5));
        let n = rng.gen_range(1..=10);
        let density = rng.gen_range(0.05..0.6);
        let lpo = extend_with_endpoints(&random_lpo(&mut rng, n, &sigma, density));
        let place = random_place(&mut rng, &sigma);
        let roles = PlaceRoles::new(&place, &lpo);
        let exact = maxflow_underfed(&lpo, &roles);
        for pass in [
            forward_with_roles(&lpo, &roles),
            backward_with_roles(&lpo, &roles),
        ] {
            if pass.all_satisfied() {
                definite += 1;
                assert!(!exact, "{place}: pass satisfied but max-flow says underfed");
            } else if !pass.choice_points {
                definite += 1;
                assert!(exact, "{place}: pass says underfed but max-flow disagrees");
            }
        }
    }
    assert!(definite > 1000);
}

/// Conservation on every node of a satisfied forward flow, and the token
/// count reaching ■ reproduces the closed-form final marking.
#[test]
fn satisfied_forward_flow_is_a_tokenflow() {
    let mut rng = rng(13);
    let mut checked = 0;
    for _ in 0..3000 {
        let sigma = alphabet(rng.gen_range(1..=4));
        let n = rng.gen_range(1..=9);
        let lpo = extend_with_endpoints(&random_lpo(&mut rng, n, &sigma, 0.35));
        let place = random_place(&mut rng, &sigma);
        let flow = forward_pass(&place, &lpo);
        if !flow.all_satisfied() {
            continue;
        }
        checked += 1;
        let roles = PlaceRoles::new(&place, &lpo);
        let end = lpo.end_node();
        for v in 0..lpo.len() {
            let inflow: i64 = lpo.in_arcs(v).iter().map(|&a| flow.flow[a] as i64).sum();
            let outflow: i64 = lpo.out_arcs(v).map(|a| flow.flow[a] as i64).sum();
            let delta = i64::from(roles.produces[v]) - i64::from(roles.consumes[v]);
            if v == end {
                assert_eq!(inflow + delta, final_marking(&place, &lpo));
            } else {
                assert_eq!(outflow, inflow + delta, "{place} at node {v}");
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn repair_p4_forward_flow() {
    let log = load_repair_log();
    let lpo = extend_with_endpoints(&log.variants[0].lpo);
    let p4 = CandidatePlace::from_labels(REPAIR_P4.0, REPAIR_P4.1).unwrap();
    let flow = forward_pass(&p4, &lpo);
    assert!(flow.all_satisfied());
    // tokens travel Analyze Defect -> Repair (Complex) and
    // Restart Repair -> Repair (Simple); nothing reaches ■
    let carried: u64 = flow.flow.iter().sum();
    assert_eq!(carried, 2);
    assert_eq!(final_marking(&p4, &lpo), 0);
    let verdict = classify_lpo(&p4, &lpo);
    assert!(verdict.is_fitting());
    assert_eq!(verdict.decided_by, DecidedBy::Forward);
}

#[test]
fn every_repair_net_place_fits_its_lpo() {
    let log = load_repair_log();
    let lpo = extend_with_endpoints(&log.variants[0].lpo);
    for place in repair_net_places() {
        assert!(classify_lpo(&place, &lpo).is_fitting(), "{place}");
    }
}
