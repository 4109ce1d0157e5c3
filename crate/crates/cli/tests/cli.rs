use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TOY_COUNTS: &str = "component_id\ts1\ts2\ts3\ts4\na\t60\t80\t50\t30\nb\t40\t20\t50\t70\n";
const TOY_META: &str = "sample_id\tgroup\tage\ns1\tA\t30\ns2\tA\t40\ns3\tB\t35\ns4\tB\t\n";

fn rdb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdb"))
        .args(args)
        .env_remove("RDB_THREADS")
        .output()
        .expect("binary runs")
}

fn toy(dir: &Path) -> (String, String) {
    let counts = dir.join("counts.tsv");
    let meta = dir.join("meta.tsv");
    fs::write(&counts, TOY_COUNTS).unwrap();
    fs::write(&meta, TOY_META).unwrap();
    (counts.display().to_string(), meta.display().to_string())
}

fn body(tsv: &str) -> Vec<&str> {
    tsv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn toy_two_group_run_retains_both() {
    let dir = tempfile::tempdir().unwrap();
    let (counts, meta) = toy(dir.path());
    let out = dir.path().join("res.tsv");
    let json = dir.path().join("res.json");
    let o = rdb(&[
        "test", "--counts", &counts, "--meta", &meta, "--group", "group",
        "--out", out.to_str().unwrap(), "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# rdb "));
    let rows = body(&text);
    assert_eq!(
        rows[0],
        "component_id\tdecision\tdirection\trejection_iteration\tstatistic_iter0\tnote"
    );
    assert!(rows[1].starts_with("a\tretained\tNA\tNA\t2.12132034355964"));
    assert!(rows[2].starts_with("b\tretained\tNA\tNA\t-2.12132034355964"));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let q = report["outcome"]["thresholds"]["q_tilde"].as_f64().unwrap();
    assert!((q - 2.4478).abs() < 1e-4);
    assert_eq!(report["outcome"]["trace"].as_array().unwrap().len(), 1);
}

#[test]
fn fdr_mode_gives_the_same_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let (counts, meta) = toy(dir.path());
    let fwer = rdb(&["test", "--counts", &counts, "--meta", &meta, "--group", "group"]);
    let fdr = rdb(&["test", "--counts", &counts, "--meta", &meta, "--group", "group", "--mode", "fdr"]);
    assert_eq!(fdr.status.code(), Some(0));
    let a = String::from_utf8(fwer.stdout).unwrap();
    let b = String::from_utf8(fdr.stdout).unwrap();
    assert_eq!(body(&a), body(&b));
}

#[test]
fn missing_covariate_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let (counts, meta) = toy(dir.path());
    let o = rdb(&["test", "--counts", &counts, "--meta", &meta, "--group", "group", "--balance", "age"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("missing covariate age for sample s4"), "{err}");
}

#[test]
fn conflicting_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (counts, meta) = toy(dir.path());
    let w = dir.path().join("w.tsv");
    fs::write(&w, "sample_id\tweight\ns1\t1\n").unwrap();
    let cases: [&[&str]; 3] = [
        &["--group", "group", "--outcome", "age"],
        &["--group", "group", "--balance", "age", "--weights", w.to_str().unwrap()],
        &["--group", "group", "--frobnicate"],
    ];
    for extra in cases {
        let mut args = vec!["test", "--counts", &counts, "--meta", &meta];
        args.extend_from_slice(extra);
        let o = rdb(&args);
        assert_eq!(o.status.code(), Some(1), "{extra:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unreadable_counts_exit_one() {
    let o = rdb(&["test", "--counts", "/no/such/file.tsv", "--meta", "/no/meta.tsv", "--group", "g"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_contract_errors() {
    let o = rdb(&["simulate", "--scenario", "shuffle", "--m1", "5", "--reps", "1", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rdb(&[
        "simulate", "--scenario", "pg", "--d", "20", "--s", "10", "--m1", "5", "--reps", "1",
        "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("identifiable"));
}

#[test]
fn simulate_is_byte_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let tsv = dir.path().join(format!("{tag}.tsv"));
        let json = dir.path().join(format!("{tag}.json"));
        let o = rdb(&[
            "simulate", "--scenario", "pg", "--d", "60", "--s", "5", "--m1", "10", "--m2", "10",
            "--setting", "2", "--reps", "6", "--seed", "7", "--methods", "RDB,WELCH_TSS_BH,WILCOXON_RAW",
            "--threads", threads, "--out", tsv.to_str().unwrap(), "--json", json.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(tsv).unwrap(), fs::read(json).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("# rdb "));
    assert!(text.contains("\nmethod\tmetric\testimate\tse\treps\n"));
    assert_eq!(body(&text).len(), 1 + 3 * 3);
}

#[test]
fn shuffle_from_a_source_file() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.tsv");
    let mut text = String::from("component_id");
    for j in 0..12 {
        text += &format!("\ts{j}");
    }
    text.push('\n');
    for i in 0..8 {
        text += &format!("c{i}");
        for j in 0..12 {
            text += &format!("\t{}", 10 + (i * 7 + j * 3) % 11);
        }
        text.push('\n');
    }
    fs::write(&src, text).unwrap();
    let o = rdb(&[
        "simulate", "--scenario", "shuffle", "--source", src.to_str().unwrap(), "--m1", "5",
        "--m2", "5", "--reps", "4", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("RDB\tpower\tNA\tNA\t4"));
}
