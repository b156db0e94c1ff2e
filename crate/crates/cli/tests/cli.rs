//! End-to-end CLI checks through the real binary: stage plumbing, artifact
//! formats and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn authormap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_authormap"))
}

fn run(args: &[&str]) -> Output {
    authormap()
        .args(args)
        .output()
        .expect("binary should execute")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_tiny_jsonl(dir: &Path) -> PathBuf {
    let path = dir.join("docs.jsonl");
    let lines = [
        r#"{"id":"d1","authors":["ann"],"text":"graph spectra embedding eigenvalue spectra graph"}"#,
        r#"{"id":"d2","authors":["ann","bob"],"text":"embedding eigenvalue graph spectra kernel"}"#,
        r#"{"id":"d3","authors":["bob"],"text":"kernel similarity probability kernel distributions"}"#,
        r#"{"id":"d4","authors":["cat"],"text":"probability distributions similarity sampling kernel"}"#,
        r#"{"id":"d5","authors":["dee"],"text":"sampling gibbs topics sampling topics"}"#,
        r#"{"id":"d6","authors":["eve"],"text":"topics gibbs dirichlet topics gibbs"}"#,
    ];
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn ingest_tiny(dir: &Path) -> PathBuf {
    let jsonl = write_tiny_jsonl(dir);
    let corpus = dir.join("corpus.json");
    let out = run(&[
        "ingest",
        "--in",
        jsonl.to_str().unwrap(),
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_success(&out);
    corpus
}

#[test]
fn ingest_reports_corpus_stats_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let jsonl = dir.path().join("docs.jsonl");

    let out = run(&[
        "ingest",
        "--in",
        jsonl.to_str().unwrap(),
        "--out",
        dir.path().join("corpus2.json").to_str().unwrap(),
    ]);
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("|V|"), "stdout: {stdout}");
    assert!(stdout.contains("docs = 6"), "stdout: {stdout}");

    // Rerun produces identical corpus bytes.
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(dir.path().join("corpus2.json")).unwrap()
    );
}

#[test]
fn ingest_honors_stopwords_and_min_len() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("docs.jsonl");
    std::fs::write(
        &jsonl,
        r#"{"id":"d1","authors":["ann"],"text":"The MVE Algorithm, twice. The!"}"#,
    )
    .unwrap();
    let stopwords = dir.path().join("stop.txt");
    std::fs::write(&stopwords, "the\n").unwrap();
    let out = run(&[
        "ingest",
        "--in",
        jsonl.to_str().unwrap(),
        "--out",
        dir.path().join("corpus.json").to_str().unwrap(),
        "--min-len",
        "2",
        "--stopwords",
        stopwords.to_str().unwrap(),
    ]);
    assert_success(&out);
    let corpus: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("corpus.json")).unwrap())
            .unwrap();
    let vocab: Vec<&str> = corpus["vocab"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(vocab, vec!["algorithm", "mve", "twice"]);
}

#[test]
fn ingest_malformed_line_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("bad.jsonl");
    std::fs::write(
        &jsonl,
        "{\"id\":\"d1\",\"authors\":[\"a\"],\"text\":\"hello world\"}\n{\"id\":\"d2\",\"text\":\"missing authors\"}\n",
    )
    .unwrap();
    let out = run(&[
        "ingest",
        "--in",
        jsonl.to_str().unwrap(),
        "--out",
        dir.path().join("corpus.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["ingest", "--nonsense"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stage_chain_produces_viz_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let model = dir.path().join("model.json");
    let kernel = dir.path().join("kernel.json");
    let csv = dir.path().join("kernel.csv");
    let profiles = dir.path().join("profiles.json");
    let embedding = dir.path().join("embedding.json");
    let stem = dir.path().join("viz");

    assert_success(&run(&[
        "train",
        "--in",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--model",
        "at",
        "--topics",
        "2",
        "--alpha",
        "0.5",
        "--beta",
        "0.1",
        "--iters",
        "40",
        "--burnin",
        "10",
        "--lag",
        "3",
        "--seed",
        "7",
    ]));
    assert_success(&run(&[
        "kernel",
        "--in",
        corpus.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        kernel.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--profiles-out",
        profiles.to_str().unwrap(),
    ]));
    assert_success(&run(&[
        "embed",
        "--in",
        kernel.to_str().unwrap(),
        "--out",
        embedding.to_str().unwrap(),
        "--k",
        "2",
    ]));
    assert_success(&run(&[
        "viz",
        "--in",
        embedding.to_str().unwrap(),
        "--profiles",
        profiles.to_str().unwrap(),
        "--out",
        stem.to_str().unwrap(),
    ]));

    let dot = std::fs::read_to_string(dir.path().join("viz.dot")).unwrap();
    assert!(dot.contains("\"ann\""), "dot: {dot}");
    assert!(dot.contains("pos="), "dot: {dot}");
    let viz: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("viz.json")).unwrap())
            .unwrap();
    assert_eq!(viz["labels"].as_array().unwrap().len(), 5);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with(",ann,"));
}

#[test]
fn hat_multilayer_kernel_stage_combines_layers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let model = dir.path().join("hat.json");
    let kernel = dir.path().join("kernel.json");

    assert_success(&run(&[
        "train",
        "--in",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--model",
        "hat",
        "--layers",
        "2,3",
        "--iters",
        "30",
        "--burnin",
        "10",
        "--lag",
        "2",
        "--seed",
        "3",
    ]));
    assert_success(&run(&[
        "kernel",
        "--in",
        corpus.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        kernel.to_str().unwrap(),
        "--layers",
        "1,2",
        "--kernel-mode",
        "product",
    ]));
    let k: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&kernel).unwrap()).unwrap();
    assert_eq!(k["labels"].as_array().unwrap().len(), 5);
}

#[test]
fn embed_rejects_non_psd_kernel_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("kernel.json");
    // Symmetric but indefinite (eigenvalues 3 and -1).
    std::fs::write(
        &kernel,
        r#"{"labels":["a","b"],"values":[[1.0,2.0],[2.0,1.0]]}"#,
    )
    .unwrap();
    let out = run(&[
        "embed",
        "--in",
        kernel.to_str().unwrap(),
        "--out",
        dir.path().join("e.json").to_str().unwrap(),
        "--k",
        "1",
        "--dim",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not PSD"), "stderr: {stderr}");
}

#[test]
fn embed_psd_project_flag_repairs_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("kernel.json");
    // First 2x2 block has eigenvalues 2.2 and -0.2; third point is distinct,
    // so the repaired centered kernel keeps a nonzero spectrum.
    std::fs::write(
        &kernel,
        r#"{"labels":["a","b","c"],"values":[[1.0,1.2,0.0],[1.2,1.0,0.0],[0.0,0.0,1.0]]}"#,
    )
    .unwrap();
    let out = run(&[
        "embed",
        "--in",
        kernel.to_str().unwrap(),
        "--out",
        dir.path().join("e.json").to_str().unwrap(),
        "--k",
        "1",
        "--dim",
        "1",
        "--psd-project",
    ]);
    assert_success(&out);
}

#[test]
fn pipeline_bow_on_tiny_corpus_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let out_dir = dir.path().join("out");
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "model": "bow",
  "corpus": {corpus:?},
  "out_dir": {out_dir:?},
  "topics": {{"seed": 11}},
  "embedding": {{"k": 2}}
}}"#,
            corpus = corpus.to_str().unwrap(),
            out_dir = out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_success(&out);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let fidelity = manifest["fidelity"].as_f64().unwrap();
    assert!(fidelity > 0.0 && fidelity <= 1.0, "fidelity {fidelity}");
    // Config echo carries the defaults that were applied.
    assert_eq!(manifest["config"]["embedding"]["dim"].as_u64(), Some(2));
    assert_eq!(manifest["config"]["topics"]["seed"].as_u64(), Some(11));
}

#[test]
fn pipeline_accepts_hat_two_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let out_dir = dir.path().join("out");
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "model": "hat",
  "corpus": {corpus:?},
  "out_dir": {out_dir:?},
  "topics": {{"layers": [2, 20], "iterations": 25, "burn_in": 10, "sample_lag": 3, "seed": 5}},
  "embedding": {{"k": 2}}
}}"#,
            corpus = corpus.to_str().unwrap(),
            out_dir = out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_success(&out);
    assert!(out_dir.join("model.json").exists());
    assert!(out_dir.join("viz.dot").exists());
}

#[test]
fn pipeline_rejects_single_layer_hat_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"model":"hat","corpus":"x.json","out_dir":"out","topics":{"layers":[5],"seed":1}}"#,
    )
    .unwrap();
    let out = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kernel_with_missing_model_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ingest_tiny(dir.path());
    let out = run(&[
        "kernel",
        "--in",
        corpus.to_str().unwrap(),
        "--model",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("k.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
