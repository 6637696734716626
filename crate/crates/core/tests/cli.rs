use std::path::Path;
use std::process::{Command, Output};

use topomap::dataset::{generate_synthetic, save_stream, SynthConfig};
use topomap::evaluation::EvalReport;
use topomap::map_store::load_map;

fn topomap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topomap"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn err_line(out: &Output) -> String {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().filter(|l| l.starts_with("error[")).collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    lines[0].to_owned()
}

fn write_synth(dir: &Path) {
    for s in generate_synthetic(&SynthConfig::two_rooms(16, 2, 8)).unwrap() {
        save_stream(&s, dir.join(&s.sequence_id)).unwrap();
    }
}

#[test]
fn build_then_topology_stays_within_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    write_synth(tmp.path());
    ok(&topomap(tmp.path(), &["build", "synth-0", "synth-1", "--out", "map"]));
    let text = ok(&topomap(tmp.path(), &["eval", "topology", "synth-0", "synth-1", "--map", "map"]));
    let report: EvalReport = serde_json::from_str(&text).unwrap();
    assert!(report.metric("max_dist").unwrap().mean <= 0.9);
    assert!(report.warnings.is_empty());
}

#[test]
fn build_on_empty_stream_fails_with_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.txt"), "# sequence_id: nothing\n").unwrap();
    let out = topomap(tmp.path(), &["build", "empty.txt", "--out", "map"]);
    assert_eq!(err_line(&out), "error[empty-input]: empty input");
    assert!(!tmp.path().join("map").exists());
}

#[test]
fn plot_three_node_map() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("three.txt"),
        "# sequence_id: three\n# labels: hall, lab\n0, 0, 0, 1, 0\n2, 0, 0, 0, 1\n4, 0, 1, 1, 1\n",
    )
    .unwrap();
    ok(&topomap(tmp.path(), &["build", "three.txt", "--out", "map"]));
    std::fs::write(tmp.path().join("labels.txt"), "hall\nhall\nlab\n").unwrap();
    let svg = ok(&topomap(
        tmp.path(),
        &["plot", "--map", "map", "--labels", "labels.txt", "--positions", "three.txt"],
    ));
    let (map, _) = load_map(tmp.path().join("map")).unwrap();
    assert_eq!(map.len(), 3);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="node""#).count(), 3);
    assert_eq!(svg.matches(r#"class="edge""#).count(), map.edges().len());
    assert_eq!(map.edges().len(), 2);
}

#[test]
fn flags_override_config_document() {
    let tmp = tempfile::tempdir().unwrap();
    write_synth(tmp.path());
    std::fs::write(
        tmp.path().join("run.toml"),
        "config_version = \"1.0\"\nstreams = [\"synth-0\"]\nout = \"from-config\"\n\n[hyperparameters]\nlambda = 0.5\nalpha = 0.02\n",
    )
    .unwrap();
    ok(&topomap(tmp.path(), &["build", "--params", "run.toml", "--lambda", "0.7"]));
    let (map, _) = load_map(tmp.path().join("from-config")).unwrap();
    assert_eq!(map.params().lambda, 0.7);
    assert_eq!(map.params().alpha, 0.02);
}

#[test]
fn config_errors_are_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("v2.toml"), "config_version = \"2.0\"\n").unwrap();
    let line = err_line(&topomap(tmp.path(), &["lhs", "--params", "v2.toml"]));
    assert!(line.starts_with("error[unsupported-version]"), "{line}");

    std::fs::write(tmp.path().join("typo.toml"), "config_version = \"1.0\"\nlamda = 3\n").unwrap();
    let line = err_line(&topomap(tmp.path(), &["lhs", "--params", "typo.toml"]));
    assert!(line.starts_with("error[config]"), "{line}");

    let line = err_line(&topomap(tmp.path(), &["eval", "place", "--replicate", "nope"]));
    assert!(line.starts_with("error[usage]"), "{line}");
}

#[test]
fn invalid_hyperparameter_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_synth(tmp.path());
    let line = err_line(&topomap(tmp.path(), &["build", "synth-0", "--alpha", "2", "--out", "m"]));
    assert!(line.starts_with("error[invalid-parameter]"), "{line}");
}

#[test]
fn seeded_commands_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = ok(&topomap(tmp.path(), &["lhs", "-n", "4", "--seed", "3"]));
    let b = ok(&topomap(tmp.path(), &["lhs", "-n", "4", "--seed", "3"]));
    assert_eq!(a, b);
    let samples: Vec<serde_json::Value> = serde_json::from_str(&a).unwrap();
    assert_eq!(samples.len(), 4);

    ok(&topomap(tmp.path(), &["synth", "--out", "s1", "--seed", "5", "--dim", "8"]));
    ok(&topomap(tmp.path(), &["synth", "--out", "s2", "--seed", "5", "--dim", "8"]));
    for name in ["synth-0", "synth-1", "synth-2"] {
        let x = topomap::codec::snapshot(tmp.path().join("s1").join(name)).unwrap();
        let y = topomap::codec::snapshot(tmp.path().join("s2").join(name)).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn train_classify_and_localize_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&topomap(d, &["synth", "--out", "s", "--seed", "2", "--dim", "16"]));
    ok(&topomap(d, &["train-mlp", "s/synth-0", "s/synth-1", "--out", "mlp", "--epochs", "50"]));
    ok(&topomap(d, &["build", "s/synth-2", "--out", "map", "--steps", "steps.jsonl"]));
    let steps = std::fs::read_to_string(d.join("steps.jsonl")).unwrap();
    let (map, _) = load_map(d.join("map")).unwrap();
    assert_eq!(steps.lines().count(), topomap::dataset::load_stream(d.join("s/synth-2")).unwrap().len());

    let places = ok(&topomap(d, &["classify-place", "--map", "map", "--model", "mlp"]));
    assert_eq!(places.lines().count(), map.len());
    let row: serde_json::Value = serde_json::from_str(places.lines().next().unwrap()).unwrap();
    assert!(row["name"] == "corridor" || row["name"] == "office");

    let ranks = ok(&topomap(d, &["localize", "--map", "map", "s/synth-0", "--top-k", "3"]));
    let row: serde_json::Value = serde_json::from_str(ranks.lines().next().unwrap()).unwrap();
    assert_eq!(row["ranking"].as_array().unwrap().len(), 3);

    let report = ok(&topomap(d, &["eval", "place", "s/synth-0", "s/synth-1", "s/synth-2", "--synth", "s/synth.toml"]));
    let report: EvalReport = serde_json::from_str(&report).unwrap();
    assert_eq!(report.metric("pm.overall").unwrap().n, 3);
    assert!(report.metric("images.overall").is_some());
}

#[test]
fn inputs_are_not_modified() {
    let tmp = tempfile::tempdir().unwrap();
    write_synth(tmp.path());
    let before = topomap::codec::snapshot(tmp.path().join("synth-0")).unwrap();
    ok(&topomap(tmp.path(), &["build", "synth-0", "--out", "map"]));
    ok(&topomap(tmp.path(), &["eval", "topology", "synth-0", "--map", "map"]));
    assert_eq!(before, topomap::codec::snapshot(tmp.path().join("synth-0")).unwrap());
}
