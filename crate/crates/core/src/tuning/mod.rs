//! Staged sweeps over topic counts and `η` with restart averaging, entropy
//! minima detection and structure verdicts.
//!
//! Every run is identified by `(η, T, restart)` and seeded with
//! `base_seed XOR hash(cell key)`. Runs execute on a bounded worker pool;
//! their per-level rows go through one channel to a single raw-log writer,
//! and the summary is aggregated from the full set of rows afterwards, so
//! it does not depend on completion order.

mod minima;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::flat::FlatModelConfig;
use crate::hartm::{hartm_level_entropy, hartm_train, HartmConfig};
use crate::hlda::{hlda_train, HldaConfig};
use crate::hpam::{hpam_train, HpamConfig};
use crate::metrics::{level_report, LevelEntropyReport};
use crate::rng::derive_seed;

pub use minima::{
    find_minima, smooth, structure_verdict, Minima, MinimaParams, Minimum, StructureVerdict, VerdictKind,
    VerdictLevel,
};
pub use report::{curve_csv, markdown_table, parse_raw_log, summary_csv, verdict_json, RAW_LOG_HEADER, SUMMARY_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hlda,
    Hpam,
    Hartm,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hlda => "hlda",
            Self::Hpam => "hpam",
            Self::Hartm => "hartm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hlda" => Ok(Self::Hlda),
            "hpam" => Ok(Self::Hpam),
            "hartm" => Ok(Self::Hartm),
            _ => Err(Error::Config(format!("unknown sweep model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelKind,
    pub stage: u8,
    /// Swept topic counts: `T_1` in stage 1, the next level's count in
    /// stage 2. Ignored by hLDA.
    pub topics: Vec<usize>,
    /// Ignored by hARTM.
    pub etas: Vec<f64>,
    pub restarts: usize,
    pub base_seed: u64,
    /// Level-2 topic count fixed by stage 1.
    pub fixed_t1: Option<usize>,
    pub iterations: usize,
    pub burn_in: usize,
    /// hPAM initial α, hLDA level-mixing α.
    pub alpha: f64,
    pub gamma: f64,
    pub depth: usize,
    pub tau_link: f64,
    pub sparsing: f64,
    pub minima: MinimaParams,
}

impl SweepConfig {
    /// Stage-1 defaults for a model.
    pub fn new(model: ModelKind, topics: Vec<usize>, etas: Vec<f64>) -> Self {
        let (iterations, burn_in, restarts) = match model {
            ModelKind::Hpam => (500, 300, 6),
            ModelKind::Hartm => (200, 0, 6),
            ModelKind::Hlda => (1000, 0, 10),
        };
        Self {
            model,
            stage: 1,
            topics,
            etas,
            restarts,
            base_seed: 0,
            fixed_t1: None,
            iterations,
            burn_in,
            alpha: 1.0,
            gamma: 1.0,
            depth: 3,
            tau_link: 0.5,
            sparsing: 0.0,
            minima: MinimaParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !matches!(self.stage, 1 | 2) {
            return Err(Error::Config(format!("stage must be 1 or 2, got {}", self.stage)));
        }
        if self.model != ModelKind::Hlda {
            if self.topics.is_empty() || self.topics.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("topic range must be non-empty and strictly increasing".into()));
            }
            if self.topics[0] == 0 {
                return Err(Error::Config("topic counts must be positive".into()));
            }
        }
        if self.model != ModelKind::Hartm && (self.etas.is_empty() || self.etas.iter().any(|&e| !(e > 0.0))) {
            return Err(Error::Config("eta list must be non-empty and positive".into()));
        }
        if self.stage == 2 {
            let Some(t1) = self.fixed_t1 else {
                return Err(Error::Config("stage 2 needs the stage-1 topic count".into()));
            };
            if self.model == ModelKind::Hlda {
                return Err(Error::Config("hLDA sweeps have a single stage".into()));
            }
            if self.model == ModelKind::Hartm && self.topics[0] <= t1 {
                return Err(Error::Config(format!("stage-2 hARTM topic counts must exceed T_1 = {t1}")));
            }
        }
        if self.model == ModelKind::Hpam && self.stage == 1 && self.topics[0] < 1 {
            return Err(Error::Config("hPAM needs at least one super-topic".into()));
        }
        Ok(())
    }

    /// `(η, T)` cells in sweep order. hARTM has no `η` and hLDA no `T`;
    /// the missing coordinate is 0.
    pub fn cells(&self) -> Vec<(f64, usize)> {
        let etas: Vec<f64> = if self.model == ModelKind::Hartm { vec![0.0] } else { self.etas.clone() };
        let topics: Vec<usize> = if self.model == ModelKind::Hlda { vec![0] } else { self.topics.clone() };
        etas.iter().flat_map(|&e| topics.iter().map(move |&t| (e, t))).collect()
    }

    pub fn cell_key(&self, eta: f64, t: usize, restart: usize) -> String {
        let fixed = self.fixed_t1.map(|t1| format!("/T1={t1}")).unwrap_or_default();
        format!("{}/stage{}{fixed}/eta={eta}/T={t}/r={restart}", self.model, self.stage)
    }

    pub fn run_seed(&self, eta: f64, t: usize, restart: usize) -> u64 {
        derive_seed(self.base_seed, &self.cell_key(eta, t, restart))
    }

    /// Hierarchy levels (1-based) reported in the summary's two columns.
    pub fn summary_levels(&self) -> [usize; 2] {
        match self.model {
            ModelKind::Hpam | ModelKind::Hlda => [2, 3],
            ModelKind::Hartm => [1, 2],
        }
    }

    /// Level whose curve drives minima detection.
    pub fn primary_level(&self) -> usize {
        self.summary_levels()[usize::from(self.stage == 2)]
    }

    fn expected_levels(&self) -> usize {
        match (self.model, self.stage) {
            (ModelKind::Hpam, _) => 2,
            (ModelKind::Hartm, 1) => 1,
            (ModelKind::Hartm, _) => 2,
            (ModelKind::Hlda, _) => self.depth,
        }
    }
}

/// One raw-log row: one level of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: ModelKind,
    pub stage: u8,
    pub eta: f64,
    /// Swept topic count of the cell; for hLDA the inferred count of `level`.
    pub t: usize,
    pub restart: usize,
    pub seed: u64,
    pub level: usize,
    pub renyi: f64,
    pub above_threshold: usize,
    pub mass: f64,
    pub loglik: f64,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub mean_renyi: f64,
    pub std_renyi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub eta: f64,
    pub t: usize,
    pub runs: usize,
    pub failures: Vec<String>,
    pub levels: Vec<LevelStats>,
    pub mean_loglik: f64,
}

impl CellSummary {
    pub fn level(&self, level: usize) -> Option<&LevelStats> {
        self.levels.iter().find(|l| l.level == level)
    }

    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaMinima {
    pub eta: f64,
    pub minima: Minima,
}

/// hLDA topic-count spread across restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRange {
    pub eta: f64,
    pub level: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<CellSummary>,
    pub minima: Vec<EtaMinima>,
    pub verdict: StructureVerdict,
    pub topic_ranges: Vec<TopicRange>,
    /// Every raw row, sorted by `(η, T, restart, level)`.
    pub records: Vec<RunRecord>,
    pub executed_runs: usize,
    pub resumed_runs: usize,
}

impl SweepResult {
    /// Rebuilds a result from logged rows, e.g. a finished sweep's raw log.
    /// Rows of incomplete or foreign runs are ignored.
    pub fn from_records(config: &SweepConfig, records: Vec<RunRecord>) -> Result<Self> {
        config.validate()?;
        let rows = complete_runs(records, config);
        let runs = rows.iter().map(|r| r.seed).collect::<HashSet<_>>().len();
        Ok(aggregate(config, rows, &BTreeMap::new(), 0, runs))
    }

    /// `(T, mean S^R)` of a level for one `η`, failed cells skipped.
    pub fn curve(&self, eta: f64, level: usize) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.eta == eta && !c.failed())
            .filter_map(|c| c.level(level).map(|l| (c.t, l.mean_renyi)))
            .collect()
    }

    pub fn etas(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !v.contains(&c.eta) {
                v.push(c.eta);
            }
        }
        v
    }
}

/// Where raw rows go and whether an existing log is resumed.
#[derive(Debug, Clone, Default)]
pub struct SweepIo {
    pub raw_log: Option<PathBuf>,
    pub resume: bool,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
}

struct Job {
    eta: f64,
    t: usize,
    restart: usize,
    seed: u64,
}

type JobOutcome = std::result::Result<Vec<RunRecord>, String>;

fn run_job(corpus: &Corpus, cfg: &SweepConfig, job: &Job) -> Result<(Vec<LevelEntropyReport>, f64)> {
    match (cfg.model, cfg.stage) {
        (ModelKind::Hpam, stage) => {
            let (t1, t2) = if stage == 1 { (job.t, 1) } else { (cfg.fixed_t1.unwrap_or(1), job.t) };
            let mut hc = HpamConfig::new(t1, t2, job.seed);
            hc.eta = job.eta;
            hc.alpha_init = cfg.alpha;
            hc.iterations = cfg.iterations;
            hc.burn_in = cfg.burn_in;
            hc.alpha_interval = hc.alpha_interval.min(cfg.iterations);
            let r = hpam_train(corpus, &hc)?;
            Ok((vec![level_report(&r.phi_super, 2), level_report(&r.phi_sub, 3)], r.final_loglik()))
        }
        (ModelKind::Hartm, stage) => {
            let levels = if stage == 1 { vec![job.t] } else { vec![cfg.fixed_t1.unwrap_or(1), job.t] };
            let mut hc = HartmConfig::new(levels, job.seed);
            hc.tau_link = cfg.tau_link;
            hc.em = FlatModelConfig {
                iterations: cfg.iterations,
                sparsing: cfg.sparsing,
                ..FlatModelConfig::em(job.t, job.seed)
            };
            let r = hartm_train(corpus, &hc)?;
            let ll = r.levels.last().map_or(f64::NAN, |l| l.loglik);
            Ok((hartm_level_entropy(&r), ll))
        }
        (ModelKind::Hlda, _) => {
            let hc = HldaConfig {
                depth: cfg.depth,
                gamma: cfg.gamma,
                eta: job.eta,
                alpha: cfg.alpha,
                iterations: cfg.iterations,
                seed: job.seed,
            };
            let r = hlda_train(corpus, &hc)?;
            let reports = r.phi_levels.iter().enumerate().map(|(l, phi)| level_report(phi, l + 1)).collect();
            Ok((reports, r.loglik_trace.last().copied().unwrap_or(f64::NAN)))
        }
    }
}

fn execute(corpus: &Corpus, cfg: &SweepConfig, job: &Job) -> JobOutcome {
    let start = Instant::now();
    let (reports, loglik) = run_job(corpus, cfg, job).map_err(|e| e.to_string())?;
    let runtime_ms = start.elapsed().as_millis() as u64;
    Ok(reports
        .into_iter()
        .map(|r| RunRecord {
            model: cfg.model,
            stage: cfg.stage,
            eta: job.eta,
            t: if cfg.model == ModelKind::Hlda { r.topics } else { job.t },
            restart: job.restart,
            seed: job.seed,
            level: r.level,
            renyi: r.renyi,
            above_threshold: r.above_threshold,
            mass: r.mass,
            loglik,
            runtime_ms,
        })
        .collect())
}

/// In-memory sweep with default parallelism.
pub fn run_sweep(corpus: &Corpus, config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(corpus, config, &SweepIo::default())
}

pub fn run_sweep_with(corpus: &Corpus, config: &SweepConfig, io: &SweepIo) -> Result<SweepResult> {
    config.validate()?;
    let mut previous: Vec<RunRecord> = Vec::new();
    if io.resume {
        if let Some(path) = io.raw_log.as_deref().filter(|p| p.exists()) {
            previous = complete_runs(parse_raw_log(path)?, config);
            rewrite_log(path, &previous)?;
        }
    }
    let done: HashSet<u64> = previous.iter().map(|r| r.seed).collect();
    let resumed_runs = done.len();

    let mut jobs = Vec::new();
    for (eta, t) in config.cells() {
        for restart in 0..config.restarts {
            let seed = config.run_seed(eta, t, restart);
            if !done.contains(&seed) {
                jobs.push(Job { eta, t, restart, seed });
            }
        }
    }

    let writer = match io.raw_log.as_deref() {
        Some(path) => Some(open_log(path, io.resume)?),
        None => None,
    };
    let threads = if io.jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        io.jobs
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<Vec<RunRecord>>();
    let outcomes: Vec<(usize, JobOutcome)> = std::thread::scope(|scope| {
        let log_thread = scope.spawn(move || -> std::io::Result<()> {
            let Some(mut w) = writer else {
                for _ in rx {}
                return Ok(());
            };
            for rows in rx {
                for r in &rows {
                    writeln!(w, "{}", report::raw_row(r))?;
                }
                w.flush()?;
            }
            Ok(())
        });
        let outcomes = pool.install(|| {
            jobs.par_iter()
                .enumerate()
                .map_with(tx, |tx, (i, job)| {
                    let out = execute(corpus, config, job);
                    match &out {
                        Ok(rows) => {
                            log::info!("{} done", config.cell_key(job.eta, job.t, job.restart));
                            let _ = tx.send(rows.clone());
                        }
                        Err(e) => log::warn!("{} failed: {e}", config.cell_key(job.eta, job.t, job.restart)),
                    }
                    (i, out)
                })
                .collect()
        });
        let logged = log_thread.join().expect("raw-log writer panicked");
        logged.map(|_| outcomes)
    })
    .map_err(|e| Error::io(io.raw_log.clone().unwrap_or_default(), e))?;

    let mut records = previous;
    let mut failures: BTreeMap<(u64, usize), Vec<String>> = BTreeMap::new();
    for (i, out) in outcomes {
        let job = &jobs[i];
        match out {
            Ok(rows) => records.extend(rows),
            Err(e) => failures
                .entry((job.eta.to_bits(), job.t))
                .or_default()
                .push(format!("restart {}: {e}", job.restart)),
        }
    }
    Ok(aggregate(config, records, &failures, jobs.len(), resumed_runs))
}

fn open_log(path: &Path, append: bool) -> Result<BufWriter<File>> {
    let exists = path.exists();
    let file = if append {
        OpenOptions::new().create(true).append(true).open(path)
    } else {
        File::create(path)
    }
    .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    if !(append && exists) {
        writeln!(w, "{RAW_LOG_HEADER}").map_err(|e| Error::io(path, e))?;
    }
    Ok(w)
}

fn rewrite_log(path: &Path, rows: &[RunRecord]) -> Result<()> {
    let mut out = format!("{RAW_LOG_HEADER}\n");
    for r in rows {
        out.push_str(&report::raw_row(r));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Rows of runs that belong to this sweep and logged every level.
fn complete_runs(rows: Vec<RunRecord>, cfg: &SweepConfig) -> Vec<RunRecord> {
    let wanted: HashSet<u64> = cfg
        .cells()
        .into_iter()
        .flat_map(|(e, t)| (0..cfg.restarts).map(move |r| (e, t, r)))
        .map(|(e, t, r)| cfg.run_seed(e, t, r))
        .collect();
    let mut by_seed: BTreeMap<u64, Vec<RunRecord>> = BTreeMap::new();
    for r in rows {
        if r.model == cfg.model && r.stage == cfg.stage && wanted.contains(&r.seed) {
            by_seed.entry(r.seed).or_default().push(r);
        }
    }
    by_seed
        .into_values()
        .filter(|rows| {
            let mut levels: Vec<usize> = rows.iter().map(|r| r.level).collect();
            levels.sort_unstable();
            levels.dedup();
            levels.len() == cfg.expected_levels() && rows.len() == levels.len()
        })
        .flatten()
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cell_t(cfg: &SweepConfig, r: &RunRecord) -> usize {
    if cfg.model == ModelKind::Hlda {
        0
    } else {
        r.t
    }
}

fn aggregate(
    cfg: &SweepConfig,
    mut records: Vec<RunRecord>,
    failures: &BTreeMap<(u64, usize), Vec<String>>,
    executed_runs: usize,
    resumed_runs: usize,
) -> SweepResult {
    let order = |a: &RunRecord, b: &RunRecord| {
        a.eta
            .total_cmp(&b.eta)
            .then(cell_t(cfg, a).cmp(&cell_t(cfg, b)))
            .then(a.restart.cmp(&b.restart))
            .then(a.level.cmp(&b.level))
    };
    records.sort_by(order);

    let mut cells = Vec::new();
    for (eta, t) in cfg.cells() {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.eta == eta && cell_t(cfg, r) == t).collect();
        let mut fails = failures.get(&(eta.to_bits(), t)).cloned().unwrap_or_default();
        let mut restarts: Vec<usize> = rows.iter().map(|r| r.restart).collect();
        restarts.dedup();
        if fails.is_empty() && restarts.len() != cfg.restarts {
            fails.push(format!("{} of {} restarts completed", restarts.len(), cfg.restarts));
        }
        let per_run_ll: Vec<f64> = restarts
            .iter()
            .filter_map(|&k| rows.iter().find(|r| r.restart == k).map(|r| r.loglik))
            .collect();
        let levels = if fails.is_empty() {
            cfg.summary_levels()
                .iter()
                .filter_map(|&level| {
                    let vals: Vec<f64> = rows.iter().filter(|r| r.level == level).map(|r| r.renyi).collect();
                    (!vals.is_empty()).then(|| {
                        let (mean_renyi, std_renyi) = mean_std(&vals);
                        LevelStats { level, mean_renyi, std_renyi }
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        let mean_loglik = if fails.is_empty() { mean_std(&per_run_ll).0 } else { f64::NAN };
        cells.push(CellSummary {
            eta,
            t,
            runs: restarts.len(),
            failures: fails,
            levels,
            mean_loglik,
        });
    }

    let mut result = SweepResult {
        config: cfg.clone(),
        cells,
        minima: Vec::new(),
        verdict: StructureVerdict {
            kind: VerdictKind::Inconclusive,
            levels: Vec::new(),
            evidence: Vec::new(),
            config_refs: Vec::new(),
        },
        topic_ranges: Vec::new(),
        records,
        executed_runs,
        resumed_runs,
    };

    if cfg.model == ModelKind::Hlda {
        result.topic_ranges = topic_ranges(cfg, &result.records);
        return result;
    }

    let level = cfg.primary_level();
    let mut best: Option<(f64, usize)> = None;
    for (i, eta) in result.etas().into_iter().enumerate() {
        let m = find_minima(&result.curve(eta, level), &cfg.minima);
        if let Some(g) = m.global {
            if best.is_none_or(|(v, _)| g.value < v) {
                best = Some((g.value, i));
            }
        }
        result.minima.push(EtaMinima { eta, minima: m });
    }
    if let Some((_, i)) = best {
        let chosen = &result.minima[i];
        let mut verdict = structure_verdict(&chosen.minima, cfg.minima.delta);
        verdict.config_refs = vec![format!("{}/stage{}/eta={}/level={level}", cfg.model, cfg.stage, chosen.eta)];
        result.verdict = verdict;
    }
    result
}

fn topic_ranges(cfg: &SweepConfig, records: &[RunRecord]) -> Vec<TopicRange> {
    let mut out = Vec::new();
    for (eta, _) in cfg.cells() {
        for level in 1..=cfg.depth {
            let counts: Vec<usize> = records
                .iter()
                .filter(|r| r.eta == eta && r.level == level)
                .map(|r| r.t)
                .collect();
            if counts.is_empty() {
                continue;
            }
            out.push(TopicRange {
                eta,
                level,
                min: *counts.iter().min().unwrap_or(&0),
                max: *counts.iter().max().unwrap_or(&0),
                mean: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage2Strategy {
    /// The single `(η, T_1)` cell with the lowest mean entropy.
    Global,
    /// The `k` lowest cells, best first.
    TopK(usize),
}

/// Stage-2 sweeps seeded from the best stage-1 cells. `topics` is the
/// next level's range; for hARTM only counts above `T_1` are kept.
pub fn stage2_from_stage1(result: &SweepResult, strategy: Stage2Strategy, topics: &[usize]) -> Result<Vec<SweepConfig>> {
    let cfg = &result.config;
    if cfg.stage != 1 || cfg.model == ModelKind::Hlda {
        return Err(Error::Config("stage 2 derives from an hPAM or hARTM stage-1 sweep".into()));
    }
    let level = cfg.primary_level();
    let mut ranked: Vec<(f64, f64, usize)> = result
        .cells
        .iter()
        .filter(|c| !c.failed())
        .filter_map(|c| c.level(level).map(|l| (l.mean_renyi, c.eta, c.t)))
        .filter(|(v, _, _)| v.is_finite())
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let k = match strategy {
        Stage2Strategy::Global => 1,
        Stage2Strategy::TopK(k) => k,
    };
    if ranked.is_empty() {
        return Err(Error::Config("stage-1 sweep has no finite entropy cell".into()));
    }
    ranked
        .into_iter()
        .take(k)
        .map(|(_, eta, t1)| {
            let mut next = cfg.clone();
            next.stage = 2;
            next.fixed_t1 = Some(t1);
            next.etas = vec![eta];
            next.topics = match cfg.model {
                ModelKind::Hartm => topics.iter().copied().filter(|&t| t > t1).collect(),
                _ => topics.to_vec(),
            };
            next.validate()?;
            Ok(next)
        })
        .collect()
}
