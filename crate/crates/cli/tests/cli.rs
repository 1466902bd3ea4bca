use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hitopic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitopic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hitopic(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn small_corpus(dir: &Path, parents: &str, children: &str) -> PathBuf {
    let out = dir.join(format!("corpus-{parents}x{children}"));
    ok(&[
        "synth", "--out", s(&out), "--parents", parents, "--children", children, "--docs", "150", "--doc-len", "30",
        "--vocab-size", "200", "--seed", "3",
    ]);
    out
}

#[test]
fn synth_writes_corpus_labels_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "2", "2");
    for f in ["docword.txt", "vocab.txt", "labels.json", "stats.json", "manifest.json"] {
        assert!(c.join(f).exists(), "{f}");
    }
    let labels: serde_json::Value = serde_json::from_str(&read(c.join("labels.json"))).unwrap();
    assert_eq!(labels["level1"].as_array().unwrap().len(), 150);
}

#[test]
fn ingest_round_trips_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "2", "2");
    let copy = dir.path().join("copy");
    ok(&["ingest", "--corpus", s(&c), "--out", s(&copy)]);
    let m = |p: &Path| -> serde_json::Value { serde_json::from_str(&read(p.join("manifest.json"))).unwrap() };
    assert_eq!(m(&c)["corpus_fingerprint"], m(&copy)["corpus_fingerprint"]);
    assert_eq!(read(c.join("docword.txt")), read(copy.join("docword.txt")));
}

#[test]
fn ingest_plaintext_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("docs.txt");
    std::fs::write(&txt, "a b c a\nb c d\n\nd a\n").unwrap();
    let out = dir.path().join("ingested");
    let stdout = ok(&["ingest", "--corpus", s(&txt), "--out", s(&out)]);
    assert!(stdout.starts_with("3 documents, 4 terms, 9 tokens"), "{stdout}");

    std::fs::write(&txt, "\n\n").unwrap();
    assert_eq!(hitopic(&["ingest", "--corpus", s(&txt), "--out", s(&out)]).status.code(), Some(3));

    let missing = dir.path().join("missing.txt");
    assert_eq!(hitopic(&["ingest", "--corpus", s(&missing), "--out", s(&out)]).status.code(), Some(3));
}

#[test]
fn train_hpam_reports_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "3", "1");
    let out = dir.path().join("hpam");
    ok(&["train", "hpam", "--corpus", s(&c), "--out", s(&out), "--t1", "3", "--t2", "1", "--iterations", "20"]);
    let csv = read(out.join("entropy.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,T,N,Ptilde,energy,shannon,renyi");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,3,"));
    assert!(lines[2].starts_with("3,1,"));
    assert!(read(out.join("phi_columns.txt")).starts_with("0:root:0 1:super:0"));
}

#[test]
fn train_hartm_dumps_levels_and_psi() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "2", "2");
    let out = dir.path().join("hartm");
    ok(&["train", "hartm", "--corpus", s(&c), "--out", s(&out), "--levels", "2,4", "--iterations", "30"]);
    assert!(out.join("phi_level1.txt").exists());
    assert!(out.join("phi_level2.txt").exists());
    let psi = read(out.join("psi_level2.csv"));
    assert_eq!(psi.lines().next(), Some("child,parent,probability"));
    assert_eq!(psi.lines().count(), 1 + 4 * 2);
    let hierarchy: serde_json::Value = serde_json::from_str(&read(out.join("hierarchy.json"))).unwrap();
    assert!(hierarchy.is_object() || hierarchy.is_array());
}

#[test]
fn train_other_models() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "3", "1");
    for model in ["lda", "em"] {
        let out = dir.path().join(model);
        ok(&["train", model, "--corpus", s(&c), "--out", s(&out), "--topics", "3", "--iterations", "20"]);
        assert!(out.join("phi.txt").exists() && out.join("theta.txt").exists());
    }
    let out = dir.path().join("hlda");
    ok(&["train", "hlda", "--corpus", s(&c), "--out", s(&out), "--iterations", "5"]);
    assert_eq!(read(out.join("entropy.csv")).lines().count(), 4);
    assert!(out.join("tree.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hitopic(&["train", "nmf", "--corpus", "x", "--out", "y"]).status.code(), Some(2));
    assert_eq!(hitopic(&["sweep", "--model", "hpam", "--out", "y"]).status.code(), Some(2));
    assert_eq!(hitopic(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hitopic(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "2", "1");
    let out = dir.path().join("bad");
    let bad_range = hitopic(&["sweep", "--model", "hpam", "--corpus", s(&c), "--out", s(&out), "--t-range", "5:2"]);
    assert_eq!(bad_range.status.code(), Some(2));
}

fn hpam_sweep(c: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        "sweep", "--model", "hpam", "--stage", "1", "--corpus", s(c), "--out", s(out), "--t-range", "2:4",
        "--etas", "0.2,0.5", "--restarts", "2", "--iterations", "12", "--burn-in", "6", "--seed", "11",
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn sweep_outputs_rerun_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "3", "1");
    let out = dir.path().join("sweep");
    hpam_sweep(&c, &out, &["--jobs", "2"]);
    let summary = read(out.join("summary.csv"));
    assert_eq!(
        summary.lines().next(),
        Some("model,stage,eta,T,mean_renyi_l1,std_renyi_l1,mean_renyi_l2,std_renyi_l2,mean_loglik")
    );
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    assert_eq!(read(out.join("raw.csv")).lines().count(), 1 + 2 * 3 * 2 * 2);
    let verdict: serde_json::Value = serde_json::from_str(&read(out.join("verdict.json"))).unwrap();
    assert!(verdict["kind"].is_string() && verdict["levels"].is_array() && verdict["config_refs"].is_array());

    let again = dir.path().join("replay");
    ok(&["rerun", s(&out.join("manifest.json")), "--out", s(&again)]);
    assert_eq!(summary, read(again.join("summary.csv")));

    let stdout = hpam_sweep(&c, &out, &["--resume"]);
    assert!(stdout.contains("runs: 0 executed, 12 resumed"), "{stdout}");
    assert_eq!(summary, read(out.join("summary.csv")));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "3", "1");
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        format!(
            "model=hpam\ncorpus={}\nt-range=2:3\netas=0.3\nrestarts=5\niterations=10\nburn-in=4\n",
            c.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("cfg");
    ok(&["sweep", "--config", s(&cfg), "--out", s(&out), "--restarts", "1"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["resolved"]["restarts"], 1);
    assert_eq!(manifest["resolved"]["etas"][0], 0.3);
}

#[test]
fn hartm_stage_two_from_stage_one_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_corpus(dir.path(), "2", "2");
    let s1 = dir.path().join("s1");
    ok(&[
        "sweep", "--model", "hartm", "--corpus", s(&c), "--out", s(&s1), "--t-range", "2:4", "--restarts", "2",
        "--iterations", "15",
    ]);
    let s2 = dir.path().join("s2");
    ok(&["sweep", "--model", "hartm", "--stage", "2", "--from", s(&s1), "--out", s(&s2), "--t-range", "3:7"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(s2.join("manifest.json"))).unwrap();
    let t1 = manifest["resolved"]["fixed_t1"].as_u64().unwrap() as usize;
    let summary = read(s2.join("summary.csv"));
    let ts: Vec<usize> = summary.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(!ts.is_empty() && ts.iter().all(|&t| t > t1));

    let rep = dir.path().join("rep");
    ok(&["report", "--from", s(&s1), "--out", s(&rep), "--dataset", "planted"]);
    let curve = read(rep.join("curve_eta=0_level=1.csv"));
    assert_eq!(curve.lines().next(), Some("T,mean_renyi,std_renyi,mean_loglik"));
    assert_eq!(curve.lines().count(), 4);
    assert!(read(rep.join("report.md")).contains("| planted | hartm | 1 |"));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(hitopic(&["report", "--from", s(&empty)]).status.code(), Some(3));
}
