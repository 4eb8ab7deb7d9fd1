mod common;

use common::*;
use cpmx_core::config::{count_configurations, enumerate_configurations, is_variability_free};
use cpmx_core::constraints::{check_vcc_consistency, ConflictKind};
use cpmx_core::edit::invert_edits;
use cpmx_core::{
    apply_edits, apply_pattern, canonical_hash, derive_variant, export_dot, load_model, model_diff, save_model,
    validate_model,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(seed: u64) -> cpmx_core::ProcessModel {
    gen_model(&mut ChaCha8Rng::seed_from_u64(seed), GenOptions::default())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn save_load_round_trip_keeps_hash(seed in any::<u64>()) {
        let m = model(seed);
        let bytes = save_model(&m);
        let back = load_model(&bytes).unwrap();
        prop_assert_eq!(canonical_hash(&back), canonical_hash(&m));
        prop_assert_eq!(save_model(&back), bytes);
    }

    #[test]
    fn diff_applies_and_inverts(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (model(a), model(b));
        let edits = model_diff(&x, &y);
        let forward = apply_edits(&x, &edits).unwrap();
        prop_assert_eq!(save_model(&forward), save_model(&y));
        let back = apply_edits(&forward, &invert_edits(&edits)).unwrap();
        prop_assert_eq!(save_model(&back), save_model(&x));
    }

    #[test]
    fn enumeration_matches_brute_force(seed in any::<u64>()) {
        let m = model(seed);
        let listed = enumerate_configurations(&m).unwrap();
        prop_assert_eq!(listed.len() as u64, brute_force_count(&m));
        prop_assert_eq!(count_configurations(&m).unwrap(), listed.len() as u64);
        let unique: std::collections::BTreeSet<_> = listed.iter().map(|c| c.selection.clone()).collect();
        prop_assert_eq!(unique.len(), listed.len());
    }

    #[test]
    fn derived_variants_are_plain_and_valid(seed in any::<u64>()) {
        let m = model(seed);
        for c in enumerate_configurations(&m).unwrap().iter().take(16) {
            let d = derive_variant(&m, c).unwrap();
            prop_assert!(is_variability_free(&d));
            prop_assert!(validate_model(&d).is_well_formed(), "{:?}", validate_model(&d));
        }
    }

    #[test]
    fn dot_export_parses(seed in any::<u64>()) {
        let m = model(seed);
        let dot = export_dot(&m);
        prop_assert!(check_dot(&dot).is_ok(), "{:?}\n{}", check_dot(&dot), dot);
    }

    #[test]
    fn unselectable_report_matches_enumeration(seed in any::<u64>()) {
        let m = model(seed);
        let configs = enumerate_configurations(&m).unwrap();
        let starved: std::collections::BTreeSet<String> = all_variants(&m)
            .into_iter()
            .map(|(v, _)| v)
            .filter(|v| !configs.iter().any(|c| c.chosen_set().contains(v.as_str())))
            .collect();
        let reported: std::collections::BTreeSet<String> = check_vcc_consistency(&m)
            .into_iter()
            .filter(|c| c.kind == ConflictKind::Unselectable)
            .flat_map(|c| c.ids)
            .collect();
        prop_assert_eq!(reported, starved);
    }

    #[test]
    fn random_applications_validate_or_leave_input_alone(seed in any::<u64>()) {
        let m = model(seed);
        let before = save_model(&m);
        let mut inv = Invoker::new(ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        for _ in 0..4 {
            let (p, params) = inv.invocation(&m);
            match apply_pattern(&m, p, &params) {
                Ok(r) => {
                    prop_assert!(validate_model(&r.model).is_well_formed());
                    prop_assert_eq!(&r.trace_entry.pre_hash, &canonical_hash(&m));
                    prop_assert_eq!(&r.trace_entry.post_hash, &canonical_hash(&r.model));
                }
                Err(_) => prop_assert_eq!(save_model(&m), before.clone()),
            }
        }
    }
}

#[test]
fn dot_for_catalog_graph_parses() {
    let dot = cpmx_core::pattern_relations().to_dot();
    check_dot(&dot).unwrap();
}

#[test]
fn empty_model_dot_has_two_nodes_one_edge() {
    let m = cpmx_core::ProcessModel::new("e", 0).with_flow(cpmx_core::model::SequenceFlow::new("start", "end"));
    let dot = export_dot(&m);
    check_dot(&dot).unwrap();
    assert_eq!(dot.matches("->").count(), 1);
    assert_eq!(dot.lines().filter(|l| l.contains("[shape=")).count(), 2);
}
