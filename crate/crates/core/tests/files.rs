use std::fs;

use rdb_core::balance::{load_weights, rdb_with_weights, weights_for_design};
use rdb_core::data::{load_counts, load_metadata, split_by_metadata, to_proportions, write_counts};
use rdb_core::engine::Decision;
use rdb_core::simbench::{
    gen_poisson_gamma, run_scenario, EffectSetting, Method, Scenario, ScenarioKind,
};
use rdb_core::{rdb_iterate, RdbConfig};

const COUNTS: &str = "\
# toy data
component_id\ts1\ts2\ts3\ts4\ts5\ts6
tax_a\t10\t12\t9\t30\t28\t33
tax_b\t40\t38\t41\t20\t22\t19
tax_c\t0\t0\t0\t0\t0\t0
tax_d\t50\t50\t50\t50\t50\t48
";

const META: &str = "\
sample_id\tgroup\tage
s1\tctl\t30
s2\tctl\t41
s3\tctl\t
s4\ttrt\t35
s5\ttrt\t29
s6\ttrt\t50
";

#[test]
fn counts_and_metadata_drive_a_test() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("counts.tsv"), COUNTS).unwrap();
    fs::write(dir.path().join("meta.tsv"), META).unwrap();

    let counts = load_counts(dir.path().join("counts.tsv")).unwrap();
    assert_eq!(counts.n_components(), 4);
    let meta = load_metadata(dir.path().join("meta.tsv")).unwrap();
    let comp = to_proportions(&counts).unwrap();
    let design = split_by_metadata(&comp, &meta, "group", None).unwrap();
    assert_eq!(design.level(0), "ctl");
    assert_eq!(design.excluded().len(), 1);

    let out = rdb_iterate(&design, &RdbConfig::default()).unwrap();
    let ids: Vec<&str> = out.components.iter().map(|c| c.component_id.as_str()).collect();
    assert_eq!(ids, ["tax_a", "tax_b", "tax_c", "tax_d"]);
    assert_eq!(out.components[2].decision, Decision::Excluded);
    assert_eq!(out.components[2].note, "all-zero");

    let err = meta.numeric("age", comp.sample_ids(), "covariate").unwrap_err();
    assert_eq!(err.to_string(), "missing covariate age for sample s3");
}

#[test]
fn missing_file_names_the_path() {
    let err = load_counts("/definitely/not/here.tsv").unwrap_err().to_string();
    assert!(err.contains("/definitely/not/here.tsv"), "{err}");
}

#[test]
fn weights_file_feeds_the_weighted_test() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("counts.tsv"), COUNTS).unwrap();
    fs::write(dir.path().join("meta.tsv"), META).unwrap();
    fs::write(
        dir.path().join("w.tsv"),
        "sample_id\tweight\ns1\t1\ns2\t1\ns3\t1\ns4\t2\ns5\t2\ns6\t2\n",
    )
    .unwrap();
    let comp = to_proportions(&load_counts(dir.path().join("counts.tsv")).unwrap()).unwrap();
    let meta = load_metadata(dir.path().join("meta.tsv")).unwrap();
    let design = split_by_metadata(&comp, &meta, "group", None).unwrap();
    let w = weights_for_design(&design, &load_weights(dir.path().join("w.tsv")).unwrap()).unwrap();
    assert!(w.w2.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    let out = rdb_with_weights(&design, &w, &RdbConfig::default()).unwrap();
    assert_eq!(out.components.len(), 4);
}

#[test]
fn simulated_counts_round_trip_and_shuffle() {
    let sc = Scenario::new(ScenarioKind::PoissonGamma, 40, 3, 10, 10, EffectSetting::Mixed, 5);
    let sim = gen_poisson_gamma(&sc, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.tsv");
    write_counts(&sim.counts, fs::File::create(&path).unwrap()).unwrap();
    let back = load_counts(&path).unwrap();
    assert_eq!(back.counts(), sim.counts.counts());

    let shuffle = Scenario::shuffle(back, 8, 8, 9);
    let report = run_scenario(&shuffle, &Method::ALL[..1], 5, &RdbConfig::default(), 1).unwrap();
    assert!(report.methods[0].power.is_none());
    let too_many = Scenario::shuffle(sim.counts, 15, 15, 9);
    assert!(too_many.validate().is_err());
}
