use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consensus"))
        .args(args)
        .env_remove("CONSENSUS_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn build_then_verify_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let (index, keys) = (dir.path().join("i.crsm"), dir.path().join("keys.txt"));
    let o = run(&[
        "build", "--random", "5000", "--epsilon", "0.1", "--k", "256", "--seed", "4",
        "--output", p(&index), "--keys-out", p(&keys),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n: 5000"));
    assert!(stdout(&o).lines().any(|l| l.starts_with("bits_per_key: ")));

    let o = run(&["query", "--mphf", p(&index), "--verify-input", p(&keys)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "bijection OK, n=5000");

    let first = std::fs::read_to_string(&keys).unwrap().lines().next().unwrap().to_string();
    let o = run(&["query", "--mphf", p(&index), "--key", &first]);
    let v: u64 = stdout(&o).trim().parse().unwrap();
    assert!((1..=5000).contains(&v));
}

#[test]
fn binary_key_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (input, index) = (dir.path().join("keys.bin"), dir.path().join("i.crsm"));
    let mut data = Vec::new();
    for i in 0..300u32 {
        let key = format!("key-{i}");
        data.extend_from_slice(&(key.len() as u32).to_le_bytes());
        data.extend_from_slice(key.as_bytes());
    }
    std::fs::write(&input, data).unwrap();
    let o = run(&["build", "--input", p(&input), "--binary", "--output", p(&index)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["query", "--mphf", p(&index), "--verify-input", p(&input), "--binary"]);
    assert_eq!(stdout(&o).trim(), "bijection OK, n=300");
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for path in [&a, &b] {
        assert!(run(&["build", "--random", "2000", "--seed", "11", "--output", p(path)]).status.success());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = Command::new(env!("CARGO_BIN_EXE_consensus"))
        .args(["build", "--random", "1000", "--output", p(&a)])
        .env("CONSENSUS_SEED", "21")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(run(&["build", "--random", "1000", "--seed", "21", "--output", p(&b)]).status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn parameter_and_input_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    let o = run(&["build", "--random", "100", "--epsilon", "2", "--output", p(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("(0, 1]"));

    let dup = dir.path().join("dup.txt");
    std::fs::write(&dup, "alpha\nbeta\ngamma\nbeta\n").unwrap();
    let o = run(&["build", "--input", p(&dup), "--output", p(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let o = run(&["query", "--mphf", p(&dir.path().join("missing")), "--key", "a"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing"));

    let o = run(&["bench", "--grid", "", "--k-list", "256", "--n", "100"]);
    assert!(!o.status.success());
}

#[test]
fn corrupt_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("i");
    assert!(run(&["build", "--random", "1000", "--output", p(&index)]).status.success());
    let mut bytes = std::fs::read(&index).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    std::fs::write(&index, bytes).unwrap();
    let o = run(&["query", "--mphf", p(&index), "--key", "a"]);
    assert!(!o.status.success());
}

#[test]
fn bench_emits_one_row_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = run(&[
        "bench", "--grid", "0.1,0.03", "--k-list", "256,512", "--n", "20000", "--runs", "1",
        "--csv", p(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,k,n,bits_per_key,build_ns_per_key,query_ns,trials_per_key");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for k in [256.0, 512.0] {
        let at = |e: f64| rows.iter().find(|r| r[0] == e && r[1] == k).unwrap()[3];
        assert!(at(0.03) < at(0.1), "k={k}");
    }
}

#[test]
fn fixedpoint_converges_near_045() {
    let o = run(&["analyze", "fixedpoint", "--p", "0.25", "--k", "5", "--steps", "200"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("step,iterate\n"));
    let last: f64 = out.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 0.45).abs() < 0.02, "{last}");
}

#[test]
fn qcurve_warns_on_infeasible_branch_counts() {
    let o = run(&["analyze", "qcurve", "--p", "0.25", "--k", "5", "--n", "50"]);
    assert!(o.status.success());
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 51);

    let o = run(&["analyze", "qcurve", "--p", "0.25", "--k", "5,5,5,64", "--epsilon", "0.3"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning") && stderr(&o).contains("4"), "{}", stderr(&o));
}

#[test]
fn bounds_report_m_opt() {
    let o = run(&["analyze", "bounds", "--p", "0.5,0.25,0.125"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "m_opt_bits,6"), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l == "uni_expected_work,64"));
}

#[test]
fn baselines_emit_csv() {
    let o = run(&["baseline", "min", "--n", "10000", "--p", "0.25", "--seed", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], &["min", "10000", "0.25"]);
    let bits: f64 = row[3].parse().unwrap();
    assert!(bits > 3.0 && bits < 3.6, "{bits}");

    let o = run(&["baseline", "uni", "--n", "3", "--p", "0.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("uni,3,0.5,"));

    let o = run(&["baseline", "uni", "--n", "20", "--p", "0.25", "--cap", "1000"]);
    assert!(!o.status.success());

    let o = run(&["baseline", "consensus", "--n", "10000", "--p", "0.25", "--epsilon", "0.25"]);
    let out = stdout(&o);
    let bits: f64 = out.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(bits <= 2.25 + 64.0 / 10000.0 + 0.01);
}
