use std::path::PathBuf;

use cpmx_core::catalog::PatternId;
use cpmx_core::evolution::{apply_pattern, vpai, vpas, EvolutionError, VpaiParams, VpasParams};
use cpmx_core::io::{canonical_hash, load_model};
use cpmx_core::model::{ProcessModel, Role};
use cpmx_core::validate::validate_model;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn model(name: &str) -> ProcessModel {
    load_model(&std::fs::read(fixture(name)).unwrap()).unwrap()
}

fn params<T: serde::de::DeserializeOwned>(name: &str) -> T {
    serde_json::from_slice(&std::fs::read(fixture(name)).unwrap()).unwrap()
}

#[test]
fn fixtures_are_well_formed() {
    for f in [
        "table2_before.json",
        "table2_after.json",
        "table3_before.json",
        "table3a_after.json",
        "table3b_after.json",
        "two_vp.json",
    ] {
        let report = validate_model(&model(f));
        assert!(report.is_well_formed(), "{f}: {report:?}");
    }
}

#[test]
fn vpai_scenario_one() {
    let before = model("table2_before.json");
    let p: VpaiParams = params("table2_params.json");
    let out = vpai(&before, &p).unwrap();
    assert_eq!(out.model, model("table2_after.json"));
    assert_eq!(out.trace_entry.pre_hash, canonical_hash(&before));
    assert_eq!(out.trace_entry.post_hash, canonical_hash(&out.model));
}

#[test]
fn vpai_scenario_two_inserts_fallback_resource() {
    let mut before = model("table2_before.json");
    // R1 offers a literally different label set, so coverage fails
    before.resources.get_mut("R11").unwrap().r_f = ["FR1", "FR2", "FR3"].map(String::from).into();
    let mut p: VpaiParams = params("table2_params.json");
    let err = vpai(&before, &p).unwrap_err();
    assert_eq!(err.name(), "MissingResourceCoverage");

    let rc = p.resource.as_mut().unwrap();
    rc.variant = None;
    rc.fallback = Some(
        serde_json::from_value(serde_json::json!({
            "id": "R2",
            "vp_type": "alternative",
            "variants": [{ "id": "R21", "r_f": ["RF1", "RF2", "RF3"], "assign_to": ["B1", "B2"] }]
        }))
        .unwrap(),
    );
    let out = vpai(&before, &p).unwrap();
    let m = out.model;
    assert_eq!(m.activities["B"].resource.as_deref(), Some("R2"));
    assert!(m.resources["R2"].role.is_variation_point());
    assert_eq!(m.variants_of("R2"), vec!["R21".to_string()]);
}

#[test]
fn vpas_design_choice_a() {
    let before = model("table3_before.json");
    let p: VpasParams = params("table3a_params.json");
    let out = vpas(&before, &p).unwrap();
    assert_eq!(out.model, model("table3a_after.json"));
}

#[test]
fn vpas_design_choice_b() {
    let before = model("table3_before.json");
    let p: VpasParams = params("table3b_params.json");
    let out = vpas(&before, &p).unwrap();
    assert_eq!(out.model, model("table3b_after.json"));
    assert_eq!(
        out.model.role_of("A1"),
        Some(&Role::variant_of("C")),
        "A1 is conserved under C"
    );
}

#[test]
fn dispatch_by_code_matches_direct_call() {
    let before = model("table2_before.json");
    let v: serde_json::Value = params("table2_params.json");
    let out = apply_pattern(&before, PatternId::Vpai, &v).unwrap();
    assert_eq!(out.model, model("table2_after.json"));
    let err = apply_pattern(&before, PatternId::Ai, &v).unwrap_err();
    assert!(matches!(err, EvolutionError::AbstractPattern(_)));
}

#[test]
fn vpai_then_delete_restores_the_model() {
    let before = model("table2_before.json");
    let mut p: VpaiParams = params("table2_params.json");
    p.resource = None;
    // a condition set on the split flow survives bridging by design
    p.condition = None;
    let inserted = vpai(&before, &p).unwrap().model;
    let back = apply_pattern(
        &inserted,
        PatternId::Vpad,
        &serde_json::json!({ "vp": "B", "cascade": true }),
    )
    .unwrap()
    .model;
    assert_eq!(canonical_hash(&back), canonical_hash(&before));
}
