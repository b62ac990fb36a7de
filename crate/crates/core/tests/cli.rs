use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_treemem");
const ADAPTER: &str = env!("CARGO_BIN_EXE_treemem-echo-adapter");

fn treemem(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("TREEMEM_OUT_DIR").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = treemem(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the parsed stderr error object.
fn failure(args: &[&str]) -> (i32, serde_json::Value) {
    let out = treemem(args);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), err["error"].clone())
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn runs_are_byte_identical_across_repeats_and_pool_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let base = ["run", "--scenario", "suite:occlusion:4:5", "--scenario", "suite:clean:2:5", "--svg", "--trace"];
    ok(&[&base[..], &["--out", s(&a), "--parallelism", "1"]].concat());
    ok(&[&base[..], &["--out", s(&b), "--parallelism", "1"]].concat());
    ok(&[&base[..], &["--out", s(&c), "--parallelism", "4"]].concat());
    let snap = snapshot(&a);
    assert_eq!(snap, snapshot(&b));
    assert_eq!(snap, snapshot(&c));
    for f in ["frames.csv", "summary.json", "curve.svg", "trace.ndjson", "masklet.ndjson"] {
        assert!(snap.contains_key(&format!("occlusion-0000/{f}")), "missing {f}");
    }
    assert!(snap.contains_key("summary.csv") && snap.contains_key("summary.json"));
    assert!(!snap.keys().any(|k| k.ends_with(".tmp")));

    let summary: serde_json::Value = serde_json::from_slice(&snap["occlusion-0000/summary.json"]).unwrap();
    assert_eq!(summary["config"]["hyperparams"]["pathways"], 3);
    assert_eq!(summary["config"]["mode"], "tree");
    assert!(summary["version"].as_str().is_some_and(|v| !v.is_empty()));
    assert_eq!(summary["summary"]["frames"], 199);
    let csv = String::from_utf8(snap["occlusion-0000/frames.csv"].clone()).unwrap();
    assert!(csv.starts_with("time,j,f,jf\n1,"));
    assert_eq!(csv.lines().count(), 200);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"scenarios": ["suite:clean:1:3"], "mode": "greedy", "hyperparams": {"memory_frames": 4}, "segments": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["run", "--config", s(&cfg), "--out", s(&out), "-N", "5"]);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("clean-0000/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["mode"], "greedy");
    assert_eq!(summary["config"]["hyperparams"]["memory_frames"], 5);
    assert_eq!(summary["summary"]["segments"].as_array().unwrap().len(), 2);
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--scenario", "suite:clean:1:0"])
        .env("TREEMEM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("clean-0000/frames.csv").is_file());
}

#[test]
fn record_then_replay_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("decodes.ndjson");
    let (live, again) = (dir.path().join("live"), dir.path().join("replayed"));
    let scen = ["--scenario", "suite:occlusion:2:9"];
    ok(&[&["record", "--trace-file", s(&trace), "--out", s(&live)], &scen[..]].concat());
    ok(&[&["replay", "--trace-file", s(&trace), "--out", s(&again)], &scen[..]].concat());
    for name in ["occlusion-0000", "occlusion-0001"] {
        let f = |d: &Path| std::fs::read(d.join(name).join("frames.csv")).unwrap();
        assert_eq!(f(&live), f(&again));
    }
    // Different pathways ask for banks that were never recorded.
    let (code, err) = failure(&[&["replay", "--trace-file", s(&trace), "--out", s(&again), "-P", "5"], &scen[..]].concat());
    assert_eq!(code, 1);
    assert_eq!(err["kind"], "run");
    assert!(err["message"].as_str().unwrap().contains("no recorded response"));
}

#[test]
fn external_backend_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let backend = format!("external:{ADAPTER}");
    ok(&["run", "--scenario", "suite:clean:1:0", "--backend", &backend, "--out", s(dir.path())]);
    assert!(dir.path().join("clean-0000/frames.csv").is_file());
    let (code, err) = failure(&["run", "--scenario", "suite:clean:1:0", "--backend", "external:/no/such/adapter"]);
    assert_eq!((code, err["kind"].as_str()), (1, Some("run")));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"scenarios": ["suite:clean:1:0"], "pathways": 3}"#).unwrap();
    for args in [
        vec!["run", "--config", s(&cfg)],
        vec!["run", "--scenario", "suite:clean:1:0", "-P", "0"],
        vec!["run", "--scenario", "suite:clean:1:0", "--modulation", "1.2:1.0"],
        vec!["run", "--scenario", "suite:nowhere:1:0"],
        vec!["run", "--scenario", "/no/such/scenario.json"],
        vec!["run"],
        vec!["run", "--scenario", "suite:clean:1:0", "--backend", "gpu"],
        vec!["sweep", "--scenario", "suite:clean:1:0", "--axis", "gamma", "--values", "1"],
        vec!["frobnicate"],
    ] {
        let (code, err) = failure(&args);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(err["kind"], "config", "{args:?}");
        assert!(!err["message"].as_str().unwrap().is_empty());
    }
    assert!(treemem(&["--help"]).status.success());
}

#[test]
fn sweeps_emit_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["sweep", "--scenario", "suite:clean:2:1", "--out", s(dir.path())];
    let csv = ok(&[&common[..], &["--axis", "P", "--values", "1,2,3,4"]].concat());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("P,scenarios,mean_j,mean_f,mean_jf,seg1_jf"));
    assert_eq!(lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect::<Vec<_>>(), ["1", "2", "3", "4"]);
    assert_eq!(std::fs::read_to_string(dir.path().join("sweep-P.csv")).unwrap(), csv);

    let csv = ok(&[&common[..], &["--axis", "delta_conf", "--values", "0,1,2,3,4,5"]].concat());
    assert_eq!(csv.lines().count(), 7);
    let csv = ok(&[&common[..], &["--axis", "modulation", "--values", "1:1,0.95:1.05,0.9:1.1"]].concat());
    assert!(csv.lines().nth(1).unwrap().starts_with("1:1,2,"));
    let (code, _) = failure(&[&common[..], &["--axis", "delta_iou", "--values", "0.5,1.5"]].concat());
    assert_eq!(code, 2);
}

#[test]
fn compare_runs_and_sign_flip() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, greedy) = (dir.path().join("tree"), dir.path().join("greedy"));
    ok(&["run", "--scenario", "suite:occlusion:2:3", "--out", s(&tree)]);
    ok(&["run", "--scenario", "suite:occlusion:2:3", "--out", s(&greedy), "--mode", "greedy"]);

    let parse = |text: String| -> serde_json::Value { serde_json::from_str(&text).unwrap() };
    let same = parse(ok(&["compare", s(&tree), s(&tree)]));
    for sc in same["scenarios"].as_array().unwrap() {
        assert_eq!(sc["mean_gap"], 0.0);
        assert!(sc["segment_gaps"].as_array().unwrap().iter().all(|g| g == 0.0));
    }
    let cmp = dir.path().join("cmp");
    let ab = parse(ok(&["compare", s(&tree), s(&greedy), "--out", s(&cmp)]));
    let ba = parse(ok(&["compare", s(&greedy), s(&tree)]));
    for (x, y) in ab["scenarios"].as_array().unwrap().iter().zip(ba["scenarios"].as_array().unwrap()) {
        assert_eq!(x["mean_gap"].as_f64().unwrap(), -y["mean_gap"].as_f64().unwrap());
        for (g, h) in x["segment_gaps"].as_array().unwrap().iter().zip(y["segment_gaps"].as_array().unwrap()) {
            assert_eq!(g.as_f64().unwrap(), -h.as_f64().unwrap());
        }
    }
    let gap = std::fs::read_to_string(cmp.join("occlusion-0000/gap.csv")).unwrap();
    assert!(gap.starts_with("time,jf_a,jf_b,gap\n"));
    assert!(cmp.join("occlusion-0000/gap.svg").is_file() && cmp.join("compare.json").is_file());

    // Single files work too; series of different lengths do not.
    let f = |d: &Path| d.join("occlusion-0000/frames.csv");
    ok(&["compare", s(&f(&tree)), s(&f(&greedy))]);
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "time,j,f,jf\n1,1,1,1\n").unwrap();
    let (code, _) = failure(&["compare", s(&f(&tree)), s(&short)]);
    assert_eq!(code, 2);
}

#[test]
fn oracle_check_agrees_with_enumeration() {
    let out = ok(&["oracle-check", "--fixtures", "8", "--min-frames", "2", "--max-frames", "5"]);
    let cases: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(cases.len(), 8);
    assert!(cases.iter().all(|c| c["matches"] == true));
    let (code, _) = failure(&["oracle-check", "--max-frames", "12"]);
    assert_eq!(code, 2);
}

#[test]
fn generated_suites_run_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenarios");
    ok(&["generate", "--family", "distractor", "--count", "2", "--seed", "4", "--out", s(&scen)]);
    assert!(scen.join("distractor-0001.json").is_file());
    let out = dir.path().join("o");
    ok(&["run", "--scenario", s(&scen), "--out", s(&out)]);
    let rows = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    // Generated files run exactly like the in-memory suite.
    let mem = dir.path().join("m");
    ok(&["run", "--scenario", "suite:distractor:2:4", "--out", s(&mem)]);
    assert_eq!(rows, std::fs::read_to_string(mem.join("summary.csv")).unwrap());
}
