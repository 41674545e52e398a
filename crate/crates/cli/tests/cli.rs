use std::path::Path;
use std::process::{Command, Output};

use lowbit::tensor::io::{load_bits, load_dense, load_thm};
use lowbit::tensor::{store_tensor, DenseMatrix, Tensor};

fn lowbit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowbit"))
        .args(args)
        .output()
        .expect("spawn lowbit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = lowbit(&["verify", "--seed", "7"]);
    let b = lowbit(&["verify", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(stdout(&a).trim_end().ends_with("all suites passed"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_fault_fails_verify() {
    let o = lowbit(&["verify", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("first failure: 1x1 integer (M,K,N)=("), "{out}");
    assert!(out.contains("at (r,c)=(0,"), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lowbit(&["bench", "--routine", "3x3"]).status.code(), Some(2));
    assert_eq!(lowbit(&["tpp", "--clock-ghz", "0"]).status.code(), Some(2));
    assert_eq!(lowbit(&["nonsense"]).status.code(), Some(2));
    let o = lowbit(&["shapes", "--c-in", "1", "--c-out", "1", "--kernel", "5", "--input", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.btsr");
    assert_eq!(lowbit(&["apb-stats", path(&missing)]).status.code(), Some(3));
    let junk = dir.path().join("junk.btsr");
    std::fs::write(&junk, b"not a tensor").unwrap();
    assert_eq!(lowbit(&["apb-stats", path(&junk)]).status.code(), Some(3));
}

#[test]
fn shapes_and_tpp() {
    let o = lowbit(&["shapes", "--c-in", "64", "--c-out", "128", "--input", "56", "--pad", "1"]);
    assert_eq!(stdout(&o).trim(), "M=128 K=576 N=3136");
    let o = lowbit(&["shapes", "--c-in", "32", "--c-out", "16", "--kernel", "1", "--input", "7x9"]);
    assert_eq!(stdout(&o).trim(), "M=16 K=32 N=63");
    let t = stdout(&lowbit(&["tpp", "--clock-ghz", "3.4"]));
    assert!(t.contains("341.33") && t.contains("10.67x"), "{t}");
}

#[test]
fn gaussian_apb_stats_match_a_scan() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.btsr");
    let o = lowbit(&["pack", "gaussian", path(&w), "--rows", "64", "--cols", "300", "--std", "0.2", "--seed", "3"]);
    assert!(o.status.success());
    let dense = load_dense(&w).unwrap();
    assert_eq!((dense.rows(), dense.cols()), (64, 300));

    let o = lowbit(&["apb-stats", path(&w)]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = json["alpha"].as_f64().unwrap() + json["delta"].as_f64().unwrap();
    let scan = dense.as_slice().iter().filter(|&&v| f64::from(v).abs() > t).count();
    assert_eq!(json["s"].as_u64().unwrap() as usize, scan);
    assert_eq!(json["n"], 64 * 300);
    assert_eq!(json["b_p"], 9);

    let o = lowbit(&["apb-stats", path(&w), "--alpha", "0.1", "--delta", "0.05", "--dims", "1000"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["b_p"], 10);
    assert_eq!(json["alpha"], 0.1);
}

#[test]
fn pack_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("a.btsr");
    let m = DenseMatrix::new(2, 3, vec![0.0, 1.0, 2.2, 3.0, 0.6, -1.0]).unwrap();
    store_tensor(&src, &Tensor::Dense(m)).unwrap();

    let bits = dir.path().join("a.bits.btsr");
    assert!(lowbit(&["pack", "signs", path(&src), path(&bits)]).status.success());
    let b = load_bits(&bits).unwrap();
    let signs: Vec<bool> = (0..6).map(|i| b.get(i / 3, i % 3)).collect();
    assert_eq!(signs, [true, true, true, true, true, false]);

    let stem = dir.path().join("a2");
    assert!(lowbit(&["pack", "thm", path(&src), path(&stem), "--scale", "1"]).status.success());
    let p = load_thm(&stem).unwrap();
    // levels 0 1 2 / 3 1 0
    assert!(p.t().get(1, 0) && p.h().get(0, 2) && p.m().get(0, 0) && !p.m().get(0, 1));

    let layer = dir.path().join("layer");
    let o = lowbit(&["pack", "apb", path(&src), path(&layer), "--alpha", "1", "--delta", "0.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("survivors 2"), "{}", stdout(&o));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = lowbit(&[
        "bench", "--routine", "1x1,2x2", "--square", "16..32", "--reps", "1", "--warmup", "0", "--csv", path(&csv),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], lowbit_cli::bench::CSV_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1x1,16,16,16,1,"));
    assert!(lines[4].starts_with("2x2,32,32,32,1,"));
}
