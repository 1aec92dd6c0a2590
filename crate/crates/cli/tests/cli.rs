use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mscflp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mscflp")).args(args).output().unwrap()
}

fn generate(dir: &Path, name: &str, seed: u64) -> String {
    let path = dir.join(name);
    let out = mscflp(&[
        "generate", "--customers", "12", "--facilities", "5", "--density", "0.1",
        "--seed", &seed.to_string(), "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "a.txt", 1);
    let sol = dir.path().join("a.sol");
    let trace = dir.path().join("a.csv");
    let out = mscflp(&[
        "solve", "--instance", &inst, "--timeout", "2", "--clock", "logical",
        "--out", sol.to_str().unwrap(), "--trace", trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&trace).unwrap().starts_with("elapsed_seconds,cost\n"));

    let out = mscflp(&["validate", "--instance", &inst, "--solution", sol.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("solution feasible"));
}

#[test]
fn exact_matches_validated_cost() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "b.txt", 2);
    let sol = dir.path().join("b.sol");
    let out = mscflp(&["exact", "--instance", &inst, "--time-limit", "30", "--out", sol.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimal cost"));
    let out = mscflp(&["validate", "--instance", &inst, "--solution", sol.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn bench_is_reproducible_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "x.txt", 3);
    generate(dir.path(), "y.txt", 4);
    fs::write(dir.path().join("list"), "x.txt\n# comment\ny.txt\n").unwrap();
    fs::write(dir.path().join("bks"), "x 100\n").unwrap();
    let manifest = dir.path().join("list");
    let run = |tag: &str, jobs: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        let summary = dir.path().join(format!("{tag}.summary.csv"));
        let status = mscflp(&[
            "bench", "--manifest", manifest.to_str().unwrap(), "--variant", "base", "--variant", "alns:0.5",
            "--runs", "3", "--timeout", "1", "--clock", "logical", "--jobs", jobs,
            "--bks", dir.path().join("bks").to_str().unwrap(),
            "--out", out.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        (
            fs::read_to_string(out).unwrap(),
            fs::read_to_string(summary).unwrap(),
            fs::read_to_string(dir.path().join(format!("{tag}.hashes.csv"))).unwrap(),
        )
    };
    let first = run("one", "1");
    let second = run("two", "0");
    assert_eq!(first, second);

    let lines: Vec<&str> = first.0.lines().collect();
    assert_eq!(lines[0], "instance,variant,seed,timeout_s,cost,gap_pct,time_to_best_s,iterations,accepted,repair_nodes");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("x,base,0,"));
    assert!(lines[12].starts_with("y,alns:0.5,2,"));
    // y has no best-known value, so its gap column is empty.
    assert_eq!(lines[12].split(',').nth(5), Some(""));
    assert_eq!(first.1.lines().count(), 1 + 4);
    assert_eq!(first.2.lines().count(), 1 + 12);
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.txt");
    fs::write(&path, "2 2\n1 2\n").unwrap();
    let out = mscflp(&["validate", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = mscflp(&["solve", "--instance", path.to_str().unwrap(), "--variant", "fancy"]);
    assert!(!out.status.success());
}

#[test]
fn reads_dzn() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.dzn");
    fs::write(
        &path,
        "Warehouses = 2;\nStores = 2;\nCapacity = [5, 5];\nFixedCost = [10, 10];\nGoods = [3, 3];\nSupplyCost = [| 1, 2\n | 2, 1 |];\nIncompatibilities = 1;\nIncompatiblePairs = [| 1, 2 |];\n",
    )
    .unwrap();
    let out = mscflp(&["exact", "--instance", path.to_str().unwrap()]);
    assert!(out.status.success());
    let sol = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(!sol.is_empty());
}
