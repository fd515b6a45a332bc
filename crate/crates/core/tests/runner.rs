// SPDX-License-Identifier: Apache-2.0

use al_lab::runner::{
    load_config, read_rounds_csv, run_experiment_with, ConfigError, ExperimentConfig, RunOptions, RunnerError,
};
use al_lab::strategies::Strategy;
use std::fs;
use std::path::Path;

const TINY: &str = "[dataset]\nkind = \"blobs\"\nclasses = 3\nper_class = 40\ndim = 3\ntest_per_class = 20\n\n\
    [model]\nhidden = [6]\n\n[train]\nmax_epochs = 8\n\n\
    [al]\nstrategies = [\"random\", \"margin\", \"coreset\", \"fass\"]\nbatch_size = 7\nrounds = 3\nseed_size = 9\n\n\
    [run]\nseeds = [1, 2]\nrecord_timing = false\n";

fn config(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = load_config(text).unwrap();
    cfg.run.out_dir = out.to_path_buf();
    cfg
}

fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<al_lab::runner::RoundRecord>, RunnerError> {
    run_experiment_with(cfg, &RunOptions { jobs, round_limit: None })
}

#[test]
fn labeled_counts_follow_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let records = run(&config(TINY, dir.path()), 1).unwrap();
    assert_eq!(records.len(), 2 * 4 * 4);
    for r in &records {
        assert_eq!(r.labeled, 9 + 7 * r.round);
        assert!((0.0..=1.0).contains(&r.test_acc));
    }
    for seed in [1, 2] {
        let round0: Vec<f64> =
            records.iter().filter(|r| r.run_seed == seed && r.round == 0).map(|r| r.test_acc).collect();
        assert_eq!(round0.len(), 4);
        assert!(round0.iter().all(|&a| a == round0[0]), "round-0 accuracy differs across strategies: {round0:?}");
    }
    let written = read_rounds_csv(fs::File::open(dir.path().join("rounds.csv")).unwrap()).unwrap();
    assert_eq!(written.len(), records.len());
    for name in ["aggregate.csv", "efficiency.csv", "summary.json", "curves.svg"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn zero_rounds_gives_one_record_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY.replace("rounds = 3", "rounds = 0");
    let records = run(&config(&text, dir.path()), 1).unwrap();
    assert_eq!(records.len(), 2 * 4);
    assert!(records.iter().all(|r| r.round == 0 && r.labeled == 9));
}

#[test]
fn efficiency_needs_a_random_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY.replace("\"random\", ", "").replace("rounds = 3", "rounds = 1");
    run(&config(&text, dir.path()), 1).unwrap();
    assert!(!dir.path().join("efficiency.csv").exists());
    let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("include strategy \\\"random\\\""));
}

#[test]
fn parallel_runs_match_sequential_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&config(TINY, a.path()), 1).unwrap();
    run(&config(TINY, b.path()), 2).unwrap();
    for name in ["rounds.csv", "aggregate.csv", "efficiency.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn resume_rejects_a_changed_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(TINY, dir.path());
    run_experiment_with(&cfg, &RunOptions { jobs: 1, round_limit: Some(1) }).unwrap();
    assert!(!dir.path().join("rounds.csv").exists());
    let changed = config(&TINY.replace("max_epochs = 8", "max_epochs = 9"), dir.path());
    let err = run(&changed, 1).unwrap_err();
    assert!(matches!(err, RunnerError::Resume { .. } | RunnerError::Round { .. }), "{err}");
    assert!(err.to_string().contains("different configuration"), "{err}");
    assert!(!err.is_config_error());
}

#[test]
fn config_errors_are_reported() {
    let unknown = load_config(&TINY.replace("\"margin\"", "\"bald\"")).unwrap_err();
    assert!(unknown.to_string().contains("bald"));
    let infeasible = load_config(&TINY.replace("rounds = 3", "rounds = 30")).unwrap_err();
    assert!(matches!(infeasible, ConfigError::Infeasible { .. }), "{infeasible}");
    assert!(matches!(load_config("[dataset\n"), Err(ConfigError::Parse(_))));
    let stray = load_config(&TINY.replace("dim = 3", "dim = 3\ntrain_images = \"x\"")).unwrap_err();
    assert!(stray.to_string().contains("train_images"), "{stray}");
}

#[test]
fn strategy_names_cover_every_selector() {
    let all = Strategy::NAMES.map(|n| format!("\"{n}\"")).join(", ");
    let text = TINY.replace("\"random\", \"margin\", \"coreset\", \"fass\"", &all).replace("rounds = 3", "rounds = 1");
    let cfg = load_config(&text).unwrap();
    assert_eq!(cfg.al.strategies.len(), Strategy::ALL.len());
}
