use std::path::Path;
use std::process::{Command, Output};

use tafm::fixtures::{contested_machine, no_edges};
use tafm::instance::{EdgeSet, Instance, Variant};
use tafm::io::emit_instance;
use tafm::rational::{rat, rat_int};

fn tafm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tafm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_instance(dir: &Path, name: &str, inst: &Instance, edges: &EdgeSet) -> String {
    let path = dir.join(name);
    std::fs::write(&path, emit_instance(inst, edges)).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_prints_the_greedy_matching_and_welfare() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, edges) = contested_machine(&rat(1, 4)).unwrap();
    let path = write_instance(dir.path(), "two_jobs.json", &inst, &edges);
    let out = tafm(&["solve", &path, "--mechanism", "mwbm_greedy"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("assignment: job 1 -> machine 1"), "{text}");
    assert!(text.contains("welfare: 5/4"), "{text}");
}

#[test]
fn solve_reports_an_empty_matching() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, edges) = no_edges();
    let path = write_instance(dir.path(), "empty.json", &inst, &edges);
    let out = tafm(&["solve", &path, "--mechanism", "mbm"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("assignment: (empty)"));
}

#[test]
fn solve_emits_the_fractional_knapsack_split() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(
        vec![vec![rat_int(3)], vec![rat_int(1)]],
        vec![vec![rat(3, 5)], vec![rat(3, 5)]],
        vec![rat_int(1)],
        Variant::Mkp,
    );
    let edges = EdgeSet::complete(2, 1);
    let path = write_instance(dir.path(), "kp2.json", &inst, &edges);
    let out = tafm(&["solve", &path, "--mechanism", "mkp_fractional"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("x[1] = [1]"), "{text}");
    assert!(text.contains("x[2] = [2/3]"), "{text}");
    assert!(text.contains("welfare: 11/3"), "{text}");
}

#[test]
fn solve_prints_a_dual_certificate_for_the_sigap_greedy() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(
        vec![vec![rat_int(5), rat_int(3)], vec![rat_int(4), rat_int(0)]],
        vec![vec![rat_int(1); 2]; 2],
        vec![rat_int(1), rat_int(1)],
        Variant::Sigap,
    );
    let edges = EdgeSet::from_edges([(0, 0), (0, 1), (1, 0)]);
    let path = write_instance(dir.path(), "sigap.json", &inst, &edges);
    let out = tafm(&["solve", &path, "--mechanism", "sigap_greedy"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("dual certificate: u = [5, 0], z = [5, 0]"), "{text}");
    assert!(text.contains("certificate value: 10"), "{text}");
}

#[test]
fn audit_flags_the_baseline_and_clears_the_greedy() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, edges) = contested_machine(&rat(1, 4)).unwrap();
    let path = write_instance(dir.path(), "two_jobs.json", &inst, &edges);

    let out = tafm(&["audit", &path, "--mechanism", "mwbm_optimal_baseline"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("VIOLATED"), "{text}");
    assert!(text.contains("witness: job 1"), "{text}");

    let out = tafm(&["audit", &path, "--mechanism", "mwbm_greedy"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("TRUTHFUL"));
}

#[test]
fn audit_small_grid_clears_the_greedy_matching() {
    let out = tafm(&["audit", "--grid", "small", "--mechanism", "mwbm_greedy"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("TRUTHFUL"), "{text}");
}

#[test]
fn audit_errors_cleanly_without_a_target() {
    let out = tafm(&["audit", "--mechanism", "mwbm_greedy"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tafm(&["audit", "--grid", "bogus", "--mechanism", "mwbm_greedy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn variant_mismatch_and_parse_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(
        vec![vec![rat_int(2), rat_int(1)]],
        vec![vec![rat_int(1), rat_int(2)]],
        vec![rat_int(2), rat_int(2)],
        Variant::Gap,
    );
    let path = write_instance(dir.path(), "gap.json", &inst, &EdgeSet::complete(1, 2));
    let out = tafm(&["solve", &path, "--mechanism", "mbm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("requires"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = tafm(&["solve", bad.to_str().unwrap(), "--mechanism", "mbm"]);
    assert_eq!(out.status.code(), Some(2));

    let out = tafm(&["solve", &path, "--mechanism", "no_such_mechanism"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let a = tafm(&["gen", "--variant", "gap", "--n", "3", "--m", "2", "--seed", "9"]);
    let b = tafm(&["gen", "--variant", "gap", "--n", "3", "--m", "2", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = tafm(&["gen", "--variant", "gap", "--n", "3", "--m", "2", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
    let parsed = tafm::io::parse_instance(&stdout(&a)).unwrap();
    assert!(parsed.0.check_structure(Variant::Gap).is_ok());
}

#[test]
fn lottery_sampling_is_seed_stable() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(
        vec![vec![rat_int(2)], vec![rat_int(1)]],
        vec![vec![rat_int(1)], vec![rat_int(1)]],
        vec![rat_int(1)],
        Variant::Mkp,
    );
    let path = write_instance(dir.path(), "mkp.json", &inst, &EdgeSet::complete(2, 1));
    let args = [
        "solve",
        &path,
        "--mechanism",
        "compose_mkp",
        "--emit",
        "assignment",
        "--seed",
        "4",
    ];
    let a = tafm(&args);
    let b = tafm(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn decompose_halves_a_full_cell_and_checks_itself() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(
        vec![vec![rat_int(1)]],
        vec![vec![rat_int(1)]],
        vec![rat_int(1)],
        Variant::Mbm,
    );
    let path = write_instance(dir.path(), "unit.json", &inst, &EdgeSet::complete(1, 1));
    let frac = dir.path().join("x.json");
    std::fs::write(
        &frac,
        "{ \"format_version\": \"tafm-1\", \"n\": 1, \"m\": 1, \"x\": [[\"1\"]] }
",
    )
    .unwrap();
    let out = tafm(&["decompose", &path, frac.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("1/2: (empty)"), "{text}");
    assert!(text.contains("1/2: job 1 -> machine 1"), "{text}");
    assert!(text.contains("re-summation check: support averages to x/2 exactly: ok"));
}

#[test]
fn structured_reports_are_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, edges) = contested_machine(&rat(1, 4)).unwrap();
    let path = write_instance(dir.path(), "two_jobs.json", &inst, &edges);
    let out = tafm(&[
        "solve",
        &path,
        "--mechanism",
        "mwbm_greedy",
        "--format",
        "structured",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["welfare"], "5/4");
    assert_eq!(doc["assignment"][0][0], 1);

    let out = tafm(&[
        "audit",
        &path,
        "--mechanism",
        "mwbm_optimal_baseline",
        "--format",
        "structured",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verdict"], "violated");
    assert!(doc["witness_count"].as_u64().unwrap() >= 1);
}

#[test]
fn version_subcommand_prints_a_version() {
    let out = tafm(&["version"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("tafm "));
}
