use std::path::Path;
use std::process::{Command, Output};

fn abbrex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abbrex"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("spawn abbrex")
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = abbrex(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn error_line(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().expect("error line")).expect("json error")
}

#[test]
fn fixture_through_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let small = d.join("small.toml");
    std::fs::write(
        &small,
        "synth_abbrevs = 15\nsynth_docs = 150\ncbow_dim = 20\nlsa_dim = 20\nsample_per_bin = 3\n",
    )
    .unwrap();
    let cfg = small.to_str().unwrap();
    let corpus = d.join("corpus.jsonl");
    let pairs = d.join("pairs.tsv");
    let data = [
        "--config",
        cfg,
        "--corpus",
        corpus.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
    ];
    fn with<'a>(stage: &[&'a str], data: &[&'a str]) -> Vec<&'a str> {
        stage.iter().chain(data).copied().collect()
    }

    ok(d, &with(&["synth-fixture"], &data));
    let gt = ok(d, &with(&["build-gt"], &data));
    assert_eq!(gt["summary"]["rejected"], 10);
    ok(d, &with(&["restrict-gt"], &data));
    ok(d, &with(&["candidates"], &data));
    ok(d, &with(&["train-embeddings", "--kind", "cbow"], &data));
    ok(d, &with(&["train-embeddings", "--kind", "lsa"], &data));
    ok(d, &with(&["train-alignment"], &data));
    ok(d, &with(&["train", "--feature-mask", "+alignment"], &data));
    ok(d, &with(&["score", "--feature-mask", "+alignment"], &data));
    let eval = ok(d, &with(&["evaluate", "--feature-mask", "+alignment"], &data));
    let auc = eval["summary"]["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let pr = std::fs::read_to_string(d.join("pr.alignment.csv")).unwrap();
    assert!(pr.lines().last().unwrap().starts_with("auc,"));

    ok(d, &with(&["sample-fps", "--feature-mask", "+alignment"], &data));
    let sheet = d.join("review.alignment.tsv");
    let filled: String = std::fs::read_to_string(&sheet)
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.starts_with("bin\t") {
                format!("{l}\n")
            } else {
                format!("{l}incorrect\n")
            }
        })
        .collect();
    let filled_path = d.join("filled.tsv");
    std::fs::write(&filled_path, filled).unwrap();
    let report = ok(
        d,
        &with(&["apply-verdicts", "--feature-mask", "+alignment", "--sheet", filled_path.to_str().unwrap()], &data),
    );
    assert!(report["summary"]["judged"].as_u64().unwrap() > 0);
}

#[test]
fn missing_corpus_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = abbrex(dir.path(), &["candidates", "--corpus", missing.to_str().unwrap()]);
    let err = error_line(&out);
    assert_eq!(err["stage"], "candidates");
    assert_eq!(err["flag"], "--corpus");
    assert!(err["error"].as_str().unwrap().contains("nope.jsonl"));

    let out = abbrex(dir.path(), &["candidates"]);
    assert_eq!(error_line(&out)["flag"], "--corpus");
}

#[test]
fn bad_feature_mask_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = abbrex(dir.path(), &["train", "--feature-mask", "everything"]);
    let err = error_line(&out);
    assert_eq!(err["stage"], "train");
    assert_eq!(err["flag"], "--feature-mask");
}

#[test]
fn stage_out_of_order_points_at_prerequisite() {
    let dir = tempfile::tempdir().unwrap();
    let out = abbrex(dir.path(), &["evaluate"]);
    let err = error_line(&out);
    assert!(err["error"].as_str().unwrap().contains("restrict-gt"), "{err}");
}
