//! Stage-by-stage subcommands reproduce the artifacts of a full run.

mod common;

use std::path::Path;

use qmine::cli::run_subcommand;

use common::fixtures;

fn qmine(args: &[&str]) -> i32 {
    let mut argv = vec!["qmine".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run_subcommand(argv)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn stages_match_the_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fx = fixtures();
    let conf = fx.join("run.conf");
    let golden = fx.join("golden/run");
    let c = path(&conf);

    let posts = d.join("posts.jsonl");
    let errors = d.join("errors.tsv");
    let questions = d.join("questions.jsonl");
    let docs = d.join("docs.jsonl");
    let sweeps = d.join("sweeps");
    let corpus = fx.join("posts.jsonl");

    assert_eq!(qmine(&["--config", c, "ingest", "--in", path(&corpus), "--out", path(&posts), "--errors", path(&errors)]), 0);
    assert_eq!(qmine(&["--config", c, "questions", "--in", path(&posts), "--out", path(&questions)]), 0);
    assert_eq!(qmine(&["--config", c, "preprocess", "--in", path(&questions), "--out", path(&docs)]), 0);
    assert_eq!(read(&posts), read(&golden.join("posts/posts.jsonl")));
    assert_eq!(read(&errors), read(&golden.join("posts/errors.tsv")));
    assert_eq!(read(&questions), read(&golden.join("questions/questions.jsonl")));
    assert_eq!(read(&docs), read(&golden.join("docs/docs.jsonl")));

    assert_eq!(qmine(&["--config", c, "lda-sweep", "--by-month", "--in", path(&docs), "--out", path(&sweeps)]), 0);
    for month in ["2020-03", "2020-04"] {
        let name = format!("sweep_{month}.tsv");
        assert_eq!(read(&sweeps.join(&name)), read(&golden.join("sweeps").join(&name)), "{name}");
    }
}

#[test]
fn sweeps_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let docs = fixtures().join("golden/run/docs/docs.jsonl");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let code = qmine(&[
            "lda-sweep", "--in", path(&docs), "--out", path(&out),
            "--k-min", "1", "--k-max", "4", "--iters", "60", "--burn-in", "20", "--seed", "99",
        ]);
        assert_eq!(code, 0);
        read(&out)
    };
    assert_eq!(run("a.tsv"), run("b.tsv"));
}

#[test]
fn sweep_without_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let docs = fixtures().join("golden/run/docs/docs.jsonl");
    let out = dir.path().join("s.tsv");
    assert_eq!(qmine(&["lda-sweep", "--in", path(&docs), "--out", path(&out)]), 1);
    assert!(!out.exists());
}
