// SPDX-License-Identifier: Apache-2.0

use super::config::{check_budget, DatasetSource, ExperimentConfig};
use super::records::{read_rounds_csv, write_records, RoundRecord};
use super::report::{emit_outputs, RunTotals};
use super::{Result, RunnerError};
use crate::data::{
    cap_per_class, idx_dataset, init_pool, make_redundant, parse_idx, read_csv_dataset, synth_blobs_with_test,
    BlobSpec, Dataset, PoolState,
};
use crate::learner::{
    embed, predict_probs, read_checkpoint, reset_or_update, test_accuracy, train, write_checkpoint, ModelState,
};
use crate::rng::RngStream;
use crate::strategies::{seed_set, select, GlisterContext, SelectionRequest, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads for independent (seed, strategy) runs.
    pub jobs: usize,
    /// Stop every run after this many newly completed rounds, leaving it
    /// resumable. Outputs are only emitted once all runs are complete.
    pub round_limit: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, round_limit: None }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| RunnerError::io(path, e))
}

/// Loads (or generates) the training and test sets named by the config.
pub fn load_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    match &cfg.dataset.source {
        DatasetSource::Blobs { classes, per_class, dim, spread, test_per_class, data_seed } => {
            let spec = BlobSpec { classes: *classes, per_class: *per_class, dim: *dim, spread: *spread };
            Ok(synth_blobs_with_test(spec, *test_per_class, &RngStream::new(*data_seed, "blobs"))?)
        }
        DatasetSource::Idx { train_images, train_labels, test_images, test_labels, classes } => {
            let ti = parse_idx(&read_file(train_images)?)?;
            let tl = parse_idx(&read_file(train_labels)?)?;
            let train = idx_dataset(&ti, &tl, *classes, None)?;
            let vi = parse_idx(&read_file(test_images)?)?;
            let vl = parse_idx(&read_file(test_labels)?)?;
            let test = idx_dataset(&vi, &vl, Some(train.num_classes()), Some(train.normalization().to_vec()))?;
            Ok((train, test))
        }
        DatasetSource::Csv { train, test, classes } => {
            let open = |p: &PathBuf| File::open(p).map_err(|e| RunnerError::io(p, e));
            let train = read_csv_dataset(open(train)?, *classes)?;
            let test = read_csv_dataset(open(test)?, Some(train.num_classes()))?;
            if test.dim() != train.dim() {
                return Err(RunnerError::Data(crate::data::DataError::Shape(format!(
                    "test dim {} vs train dim {}",
                    test.dim(),
                    train.dim()
                ))));
            }
            Ok((train, test))
        }
    }
}

/// Dataset and initial pool of one run seed, shared by all its strategies.
#[derive(Clone, Debug)]
pub struct SeedSetup {
    pub seed: u64,
    pub train: Dataset,
    pub pool: PoolState,
}

impl SeedSetup {
    /// Applies redundancy, carves validation, caps classes and draws the seed set.
    pub fn new(cfg: &ExperimentConfig, base: &Dataset, seed: u64) -> Result<Self> {
        let train = match &cfg.dataset.redundancy {
            Some(spec) => make_redundant(base, spec, &RngStream::new(seed, "redundancy"))?,
            None => base.clone(),
        };
        let al = &cfg.al;
        let vf = if al.uses_validation() { al.val_fraction } else { 0.0 };
        let mut pool = init_pool(&train, 0, vf, &RngStream::new(seed, "pool"))?;
        if let Some(cap) = cfg.dataset.per_class_cap {
            pool = cap_per_class(&train, &pool, cap, &RngStream::new(seed, "cap"))?;
        }
        check_budget(al, pool.unlabeled.len())?;
        let candidates = pool.unlabeled.clone();
        let x = train.gather(&candidates);
        let seeds = seed_set(x.view(), &candidates, al.seed_size, al.seed_init, &RngStream::new(seed, "seed-set"))?;
        pool.label(&seeds)?;
        Ok(Self { seed, train, pool })
    }
}

fn model_dims(cfg: &ExperimentConfig, ds: &Dataset) -> Vec<usize> {
    let mut dims = vec![ds.dim()];
    dims.extend(&cfg.model.hidden);
    dims.push(ds.num_classes());
    dims
}

#[derive(Serialize, Deserialize)]
struct RunState {
    fingerprint: String,
    next_round: usize,
    /// Gradient updates performed so far.
    updates: u64,
    pool: PoolState,
}

/// Files of one (seed, strategy) run.
struct RunDir {
    dir: PathBuf,
}

impl RunDir {
    fn new(out: &Path, seed: u64, strategy: Strategy) -> Self {
        Self { dir: out.join("runs").join(format!("seed-{seed}")).join(strategy.as_str()) }
    }

    fn records(&self) -> PathBuf {
        self.dir.join("records.csv")
    }

    fn state(&self) -> PathBuf {
        self.dir.join("state.json")
    }

    /// Model entering `round` (the one trained in `round - 1`).
    fn model(&self, round: usize) -> PathBuf {
        self.dir.join(format!("model-{round}.allb"))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(|e| RunnerError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| RunnerError::io(path, e))
    }

    fn append(&self, record: &RoundRecord) -> Result<()> {
        let path = self.records();
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| RunnerError::io(&path, e))?;
        let mut buf = Vec::new();
        write_records(std::slice::from_ref(record), &mut buf, false)?;
        f.write_all(&buf).and_then(|_| f.flush()).map_err(|e| RunnerError::io(&path, e))
    }

    fn rewrite_records(&self, records: &[RoundRecord]) -> Result<()> {
        let mut buf = Vec::new();
        write_records(records, &mut buf, true)?;
        self.write_atomic(&self.records(), &buf)
    }

    fn save(&self, state: &RunState, model: &ModelState) -> Result<()> {
        self.write_atomic(&self.model(state.next_round), &write_checkpoint(model))?;
        let json = serde_json::to_vec_pretty(state).expect("run state serializes");
        self.write_atomic(&self.state(), &json)?;
        if state.next_round > 0 {
            let old = self.model(state.next_round - 1);
            if old.exists() {
                fs::remove_file(&old).map_err(|e| RunnerError::io(&old, e))?;
            }
        }
        Ok(())
    }

    /// Previous progress, with records truncated to the completed rounds.
    fn load(&self, fingerprint: &str) -> Result<Option<(RunState, ModelState, Vec<RoundRecord>)>> {
        let path = self.state();
        if !path.exists() {
            return Ok(None);
        }
        let resume_err = |msg: String| RunnerError::Resume { path: path.clone(), msg };
        let state: RunState = serde_json::from_slice(&read_file(&path)?).map_err(|e| resume_err(e.to_string()))?;
        if state.fingerprint != fingerprint {
            return Err(resume_err("existing run was produced by a different configuration".into()));
        }
        let model = read_checkpoint(&read_file(&self.model(state.next_round))?)?;
        let file = File::open(self.records()).map_err(|e| RunnerError::io(self.records(), e))?;
        let mut records = read_rounds_csv(file)?;
        records.retain(|r| r.round < state.next_round);
        if records.len() != state.next_round {
            return Err(resume_err(format!("{} records for {} completed rounds", records.len(), state.next_round)));
        }
        self.rewrite_records(&records)?;
        Ok(Some((state, model, records)))
    }
}

struct RunContext<'a> {
    cfg: &'a ExperimentConfig,
    setup: &'a SeedSetup,
    test: &'a Dataset,
    fingerprint: &'a str,
    out_dir: &'a Path,
    round_limit: Option<usize>,
}

/// Progress of one (seed, strategy) run.
struct RunProgress {
    records: Vec<RoundRecord>,
    totals: RunTotals,
    complete: bool,
}

/// Runs (or resumes) one strategy on one seed.
fn run_one(ctx: &RunContext<'_>, strategy: Strategy) -> Result<RunProgress> {
    let cfg = ctx.cfg;
    let seed = ctx.setup.seed;
    let ds = &ctx.setup.train;
    let dims = model_dims(cfg, ds);
    let dir = RunDir::new(ctx.out_dir, seed, strategy);
    fs::create_dir_all(&dir.dir).map_err(|e| RunnerError::io(&dir.dir, e))?;

    let (mut pool, mut prev, mut records, mut updates, start) = match dir.load(ctx.fingerprint)? {
        Some((state, model, records)) => (state.pool, Some(model), records, state.updates, state.next_round),
        None => {
            dir.rewrite_records(&[])?;
            (ctx.setup.pool.clone(), None, Vec::new(), 0, 0)
        }
    };
    let totals = |updates| RunTotals { run_seed: seed, strategy, updates };

    let init_rng = RngStream::new(seed, "init");
    let train_rng = RngStream::new(seed, "train");
    let select_rng = RngStream::new(seed, "select").derive(strategy.as_str());
    let rounds = cfg.al.rounds;
    let timing = |s: f64| if cfg.run.record_timing { s } else { 0.0 };

    for round in start..=rounds {
        if ctx.round_limit.is_some_and(|k| round - start >= k) {
            return Ok(RunProgress { records, totals: totals(updates), complete: false });
        }
        let annotate = |e: RunnerError| RunnerError::Round {
            seed,
            strategy: strategy.as_str().to_owned(),
            round,
            source: Box::new(e),
        };
        let step = || -> Result<(RoundRecord, ModelState, Vec<usize>, usize)> {
            let policy = if round == 0 { crate::learner::InitPolicy::Reset } else { cfg.train.policy };
            let model = reset_or_update(prev.clone(), policy, &dims, &init_rng.for_round(round))?;
            let (model, stats) = train(model, ds, &pool.labeled, &cfg.train.config, round, &train_rng.for_round(round))?;
            let test_acc = test_accuracy(&model, ctx.test)?;
            let mut picked = Vec::new();
            let mut select_s = 0.0;
            if round < rounds {
                let t0 = Instant::now();
                picked = select_batch(ctx, strategy, &model, &pool, select_rng.for_round(round))?;
                select_s = t0.elapsed().as_secs_f64();
            }
            let record = RoundRecord {
                run_seed: seed,
                strategy,
                round,
                labeled: pool.labeled.len(),
                test_acc,
                train_s: timing(stats.wall_s),
                select_s: timing(select_s),
                epochs: stats.epochs,
                stop_reason: stats.stop_reason,
            };
            Ok((record, model, picked, stats.updates))
        };
        let (record, model, picked, round_updates) = step().map_err(annotate)?;
        updates += round_updates as u64;
        pool.label(&picked).map_err(|e| annotate(e.into()))?;
        dir.append(&record)?;
        records.push(record);
        let state = RunState { fingerprint: ctx.fingerprint.to_owned(), next_round: round + 1, updates, pool: pool.clone() };
        dir.save(&state, &model)?;
        prev = Some(model);
    }
    Ok(RunProgress { records, totals: totals(updates), complete: true })
}

fn select_batch(
    ctx: &RunContext<'_>,
    strategy: Strategy,
    model: &ModelState,
    pool: &PoolState,
    rng: RngStream,
) -> Result<Vec<usize>> {
    let ds = &ctx.setup.train;
    let al = &ctx.cfg.al;
    let candidates = &pool.unlabeled;
    let probs = predict_probs(model, ds, candidates)?;
    let embeddings = embed(model, ds, candidates)?;
    let labeled_embeddings = match strategy.needs_labeled_embeddings() {
        true => Some(embed(model, ds, &pool.labeled)?),
        false => None,
    };
    let validation = match strategy {
        Strategy::Glister => Some((embed(model, ds, &pool.validation)?, ds.gather_labels(&pool.validation))),
        _ => None,
    };
    let glister = validation.as_ref().map(|(emb, labels)| GlisterContext {
        weight: model.weights().last().expect("model has an output layer").view(),
        bias: model.biases().last().expect("model has an output layer").view(),
        val_embeddings: emb,
        val_labels: labels,
        eta: al.glister_eta,
    });
    let req = SelectionRequest {
        probs: &probs,
        embeddings: &embeddings,
        candidate_ids: candidates,
        batch_size: al.batch_size,
        rng,
        labeled_embeddings: labeled_embeddings.as_ref(),
        fass_beta: al.fass_beta,
        glister,
    };
    Ok(select(strategy, &req)?.ids)
}

/// Runs every (seed, strategy) pair and writes the merged outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    run_experiment_with(cfg, &RunOptions::default())
}

/// As [`run_experiment`], resuming any runs already present under the output
/// directory. Records come back seed-major, in configured strategy order.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RoundRecord>> {
    let out_dir = &cfg.run.out_dir;
    fs::create_dir_all(out_dir).map_err(|e| RunnerError::io(out_dir, e))?;
    let (base, test) = load_datasets(cfg)?;
    let fingerprint = cfg.fingerprint();
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| RunnerError::Pool(e.to_string()))?;

    let (records, totals, complete) = workers.install(|| -> Result<(Vec<RoundRecord>, Vec<RunTotals>, bool)> {
        let setups: Vec<SeedSetup> =
            cfg.run.seeds.par_iter().map(|&s| SeedSetup::new(cfg, &base, s)).collect::<Result<_>>()?;
        let tasks: Vec<(&SeedSetup, Strategy)> =
            setups.iter().flat_map(|s| cfg.al.strategies.iter().map(move |&st| (s, st))).collect();
        let results: Vec<RunProgress> = tasks
            .par_iter()
            .map(|&(setup, strategy)| {
                let ctx = RunContext {
                    cfg,
                    setup,
                    test: &test,
                    fingerprint: &fingerprint,
                    out_dir,
                    round_limit: opts.round_limit,
                };
                run_one(&ctx, strategy)
            })
            .collect::<Result<_>>()?;
        let complete = results.iter().all(|p| p.complete);
        let totals = results.iter().map(|p| p.totals.clone()).collect();
        Ok((results.into_iter().flat_map(|p| p.records).collect(), totals, complete))
    })?;

    if complete {
        emit_outputs(cfg, &records, &totals, out_dir)?;
    }
    Ok(records)
}
