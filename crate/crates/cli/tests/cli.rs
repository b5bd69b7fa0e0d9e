use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magmaspace"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) {
    fs::write(
        dir.join("run.toml"),
        "output = \"out\"\n[corpus]\nmax_ops = 2\n[sample]\nn = 20\nsize = 3\nseed = 1\n[graph]\nsynthetic_max_ops = 2\n",
    )
    .unwrap();
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["pipeline", "run"]).status.code(), Some(1));
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        tmp.path(),
        &[
            "graph",
            "stats",
            "--max-ops",
            "1",
            "--preorder",
            "missing.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
    fs::write(tmp.path().join("bad.toml"), "[sample]\nn = 3\n").unwrap();
    assert_eq!(
        run(tmp.path(), &["--config", "bad.toml", "pipeline", "run"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn corpus_command_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["corpus", "--max-ops", "1", "--out", "c.txt"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["equations"], 7);
    let text = fs::read_to_string(tmp.path().join("c.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn pipeline_run_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_config(a.path());
    small_config(b.path());
    assert!(run(
        a.path(),
        &["--config", "run.toml", "--threads", "1", "pipeline", "run"]
    )
    .status
    .success());
    assert!(run(
        b.path(),
        &["--config", "run.toml", "--threads", "4", "pipeline", "run"]
    )
    .status
    .success());
    for rel in [
        "report.json",
        "matrix/features.bin",
        "pca/embedding.csv",
        "geometry/edge_stats.csv",
        "geometry/scene.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join("out").join(rel)).unwrap(),
            fs::read(b.path().join("out").join(rel)).unwrap(),
            "{rel}"
        );
    }
    let again = run(a.path(), &["--config", "run.toml", "pipeline", "run"]);
    assert!(String::from_utf8_lossy(&again.stderr)
        .lines()
        .all(|l| l.contains("cached")));

    let plots = run(
        a.path(),
        &[
            "--config", "run.toml", "plot", "--kind", "scree", "--kind", "spectrum",
        ],
    );
    assert!(plots.status.success());
    assert!(a.path().join("out/plots/scree.csv").exists());
    assert!(a.path().join("out/plots/spectrum_0_hist.csv").exists());
}

#[test]
fn stepwise_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(run(d, &["corpus", "--max-ops", "2", "--out", "c.txt"])
        .status
        .success());
    assert!(run(
        d,
        &["sample", "--n", "20", "-N", "3", "--seed", "2", "--out", "s.txt"]
    )
    .status
    .success());
    assert!(run(
        d,
        &["stone", "--corpus", "c.txt", "--sample", "s.txt", "--out", "m", "--csv"]
    )
    .status
    .success());
    assert!(d.join("m.bin").exists() && d.join("m.frac").exists() && d.join("m.csv").exists());
    assert!(run(
        d,
        &["pca", "--corpus", "c.txt", "--matrix", "m", "--out", "e.csv"]
    )
    .status
    .success());

    // A chain 0 ⇒ 1 ⇒ 2 with 3 ⇔ 4, closed transitively by the loader.
    fs::write(d.join("g.txt"), "# ids: corpus\n0 1\n1 2\n3 4\n4 3\n").unwrap();
    let g = ["--corpus", "c.txt", "--preorder", "g.txt", "--close"];
    let stats = run(d, &[&["graph", "stats"][..], &g].concat());
    assert!(stats.status.success());
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(v["counts"]["vertices"], 46);
    assert_eq!(v["counts"]["atomic_edges"], 2);
    assert_eq!(v["counts"]["cliques"], 45);
    let longest = run(d, &[&["graph", "longest", "--top", "1"][..], &g].concat());
    let v: serde_json::Value = serde_json::from_slice(&longest.stdout).unwrap();
    assert_eq!(v[0]["edges"], 2);
    let unclosed = run(
        d,
        &["graph", "load", "--corpus", "c.txt", "--preorder", "g.txt"],
    );
    assert_eq!(unclosed.status.code(), Some(2));
    assert!(run(
        d,
        &[&["graph", "parallel", "--embedding", "e.csv"][..], &g].concat()
    )
    .status
    .success());
    assert!(run(
        d,
        &[
            &["geometry", "--embedding", "e.csv", "--out", "geo"][..],
            &g
        ]
        .concat()
    )
    .status
    .success());
    assert!(d.join("geo/scene.csv").exists());
}

#[test]
fn herbrand_verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(
        d.join("ok.txt"),
        "source: u = v * (u * v)\ntarget: x = (y * z) * (x * (y * z))\nstep: u -> x, v -> y * z\n",
    )
    .unwrap();
    let ok = run(d, &["herbrand", "verify", "ok.txt"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["verdict"], "proved");
    assert_eq!(v["replayed"], true);

    fs::write(
        d.join("no.txt"),
        "source: u = v * (u * v)\ntarget: x = (x * y) * (x * (x * y))\nstep: u -> x, v -> x * x\n",
    )
    .unwrap();
    let no = run(d, &["herbrand", "verify", "no.txt", "--countermodel"]);
    assert_eq!(no.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&no.stdout).unwrap();
    assert!(v["countermodel"].is_object());
}
