use std::path::{Path, PathBuf};

use hitopic_core::corpus::{generate_synthetic, load_plaintext, load_uci_bow, write_uci_bow, Corpus, PlantedSpec};
use hitopic_core::flat::{em_train, lda_train, FlatModelConfig};
use hitopic_core::hartm::{hartm_level_entropy, hartm_train, HartmConfig};
use hitopic_core::hlda::{hlda_train, HldaConfig};
use hitopic_core::hpam::{hpam_train, HpamConfig};
use hitopic_core::metrics::{level_report, reports_to_csv, LevelEntropyReport};
use hitopic_core::tuning::{
    curve_csv, markdown_table, parse_raw_log, run_sweep_with, stage2_from_stage1, summary_csv, verdict_json,
    MinimaParams, ModelKind, Stage2Strategy, SweepConfig, SweepIo, SweepResult,
};
use hitopic_core::Error;
use serde::Serialize;

use crate::args::{
    Command, IngestArgs, ReportArgs, RerunArgs, SweepArgs, SweepModel, SynthArgs, TrainArgs, TrainModel,
};
use crate::manifest::{now, RunManifest, MANIFEST_FILE};
use crate::{create_dir, write_file, CliError};

const RAW_LOG: &str = "raw.csv";
const SUMMARY: &str = "summary.csv";
const VERDICT: &str = "verdict.json";
const SWEEP_CONFIG: &str = "sweep_config.json";

pub(crate) fn dispatch(command: Command) -> Result<(), CliError> {
    let started = now();
    let recorded = command.clone();
    let outcome = match &command {
        Command::Ingest(a) => ingest(a)?,
        Command::Synth(a) => synth(a)?,
        Command::Train(a) => train(a)?,
        Command::Sweep(a) => sweep(a)?,
        Command::Report(a) => report(a)?,
        Command::Rerun(a) => return rerun(a),
    };
    RunManifest {
        command: recorded.name().to_string(),
        args: recorded,
        resolved: outcome.resolved,
        seed: outcome.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        corpus_fingerprint: outcome.fingerprint,
        started,
        finished: now(),
    }
    .write(&outcome.out)
}

struct Outcome {
    out: PathBuf,
    resolved: serde_json::Value,
    seed: u64,
    fingerprint: Option<String>,
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configuration serializes")
}

/// Output-side I/O failures are runtime errors, not bad input.
fn output(r: hitopic_core::Result<()>) -> Result<(), CliError> {
    r.map_err(|e| match e {
        Error::Io { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Core(other),
    })
}

fn load_corpus(corpus: &Path, vocab: Option<&Path>, min_count: usize) -> Result<Corpus, CliError> {
    let loaded = match vocab {
        Some(v) => load_uci_bow(corpus, v)?,
        None if corpus.is_dir() => load_uci_bow(&corpus.join("docword.txt"), &corpus.join("vocab.txt"))?,
        None => load_plaintext(corpus, min_count)?,
    };
    if !loaded.dropped.is_empty() {
        log::warn!("{}: dropped {} empty documents", corpus.display(), loaded.dropped.len());
    }
    Ok(loaded.corpus)
}

fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CliError> {
    output(write_uci_bow(corpus, &dir.join("docword.txt"), &dir.join("vocab.txt")))?;
    let stats = serde_json::to_string_pretty(&corpus.stats()).expect("stats serialize");
    write_file(&dir.join("stats.json"), stats + "\n")
}

fn ingest(a: &IngestArgs) -> Result<Outcome, CliError> {
    let corpus = load_corpus(&a.input.corpus, a.input.vocab.as_deref(), a.input.min_count)?;
    create_dir(&a.out)?;
    write_corpus(&corpus, &a.out)?;
    println!(
        "{} documents, {} terms, {} tokens",
        corpus.num_docs(),
        corpus.vocab_size(),
        corpus.total_tokens()
    );
    Ok(Outcome {
        out: a.out.clone(),
        resolved: json(&a.input),
        seed: 0,
        fingerprint: Some(corpus.fingerprint()),
    })
}

fn synth(a: &SynthArgs) -> Result<Outcome, CliError> {
    let share = a
        .parent_share
        .unwrap_or(if a.children == 1 { 1.0 - a.noise } else { 0.4 });
    let mut spec = PlantedSpec::new(a.parents, a.children, share);
    spec.block_zipf = a.zipf;
    let (corpus, planted) = generate_synthetic(&spec, a.docs, a.doc_len, a.vocab_size, a.noise, a.seed)?;
    create_dir(&a.out)?;
    write_corpus(&corpus, &a.out)?;
    write_file(&a.out.join("labels.json"), planted.to_json()? + "\n")?;
    println!(
        "{} documents, {} parents x {} children, vocabulary {}",
        corpus.num_docs(),
        a.parents,
        a.children,
        corpus.vocab_size()
    );
    Ok(Outcome {
        out: a.out.clone(),
        resolved: json(&spec),
        seed: a.seed,
        fingerprint: Some(corpus.fingerprint()),
    })
}

fn print_reports(reports: &[LevelEntropyReport]) {
    println!("{:>5} {:>5} {:>8} {:>10} {:>12}", "level", "T", "N", "Ptilde", "renyi");
    for r in reports {
        println!(
            "{:>5} {:>5} {:>8} {:>10.6} {:>12.6}",
            r.level, r.topics, r.above_threshold, r.mass, r.renyi
        );
    }
}

/// Explicit burn-in, or the default scaled to a changed iteration count.
fn burn_in(iterations: Option<usize>, burn_in: Option<usize>, base_iterations: usize, base_burn_in: usize) -> usize {
    match (burn_in, iterations) {
        (Some(b), _) => b,
        (None, Some(i)) => base_burn_in * i / base_iterations.max(1),
        (None, None) => base_burn_in,
    }
}

fn flat_config(a: &TrainArgs, em: bool) -> FlatModelConfig {
    let base = if em {
        FlatModelConfig::em(a.topics, a.seed)
    } else {
        FlatModelConfig::gibbs(a.topics, a.seed)
    };
    FlatModelConfig {
        alpha: a.alpha.unwrap_or(base.alpha),
        eta: a.eta.unwrap_or(base.eta),
        iterations: a.iterations.unwrap_or(base.iterations),
        burn_in: burn_in(a.iterations, a.burn_in, base.iterations, base.burn_in),
        sparsing: a.sparsing,
        ..base
    }
}

fn train(a: &TrainArgs) -> Result<Outcome, CliError> {
    let corpus = load_corpus(&a.input.corpus, a.input.vocab.as_deref(), a.input.min_count)?;
    create_dir(&a.out)?;
    let out = &a.out;
    let (reports, resolved) = match a.model {
        TrainModel::Lda | TrainModel::Em => {
            let cfg = flat_config(a, a.model == TrainModel::Em);
            let (phi, theta) = if a.model == TrainModel::Em {
                let fit = em_train(&corpus, &cfg, &[])?;
                (fit.phi, fit.theta)
            } else {
                let fit = lda_train(&corpus, &cfg)?;
                (fit.phi, fit.theta)
            };
            output(phi.write(&out.join("phi.txt")))?;
            output(theta.write(&out.join("theta.txt")))?;
            (vec![level_report(&phi, 1)], json(&cfg))
        }
        TrainModel::Hlda => {
            let base = HldaConfig::new(a.depth, a.seed);
            let cfg = HldaConfig {
                gamma: a.gamma,
                eta: a.eta.unwrap_or(base.eta),
                alpha: a.alpha.unwrap_or(base.alpha),
                iterations: a.iterations.unwrap_or(base.iterations),
                ..base
            };
            let r = hlda_train(&corpus, &cfg)?;
            for (l, phi) in r.phi_levels.iter().enumerate() {
                output(phi.write(&out.join(format!("phi_level{}.txt", l + 1))))?;
            }
            let tree = serde_json::to_string_pretty(&r.tree_json(corpus.vocabulary(), a.top_words))
                .expect("tree serializes");
            write_file(&out.join("tree.json"), tree + "\n")?;
            let reports = r.phi_levels.iter().enumerate().map(|(l, phi)| level_report(phi, l + 1)).collect();
            (reports, json(&cfg))
        }
        TrainModel::Hpam => {
            let base = HpamConfig::new(a.t1, a.t2, a.seed);
            let cfg = HpamConfig {
                eta: a.eta.unwrap_or(base.eta),
                alpha_init: a.alpha.unwrap_or(base.alpha_init),
                iterations: a.iterations.unwrap_or(base.iterations),
                burn_in: burn_in(a.iterations, a.burn_in, base.iterations, base.burn_in),
                alpha_interval: base.alpha_interval.min(a.iterations.unwrap_or(base.iterations).max(1)),
                ..base
            };
            let r = hpam_train(&corpus, &cfg)?;
            output(r.phi_full.write(&out.join("phi.txt")))?;
            write_file(&out.join("phi_columns.txt"), r.column_map() + "\n")?;
            output(r.phi_super.write(&out.join("phi_super.txt")))?;
            output(r.phi_sub.write(&out.join("phi_sub.txt")))?;
            output(r.theta_root.write(&out.join("theta_root.txt")))?;
            let alpha = serde_json::json!({ "root": r.alpha_root, "super": r.alpha_super });
            write_file(&out.join("alpha.json"), serde_json::to_string_pretty(&alpha).expect("alpha") + "\n")?;
            (vec![level_report(&r.phi_super, 2), level_report(&r.phi_sub, 3)], json(&cfg))
        }
        TrainModel::Hartm => {
            let mut cfg = HartmConfig::new(a.levels.clone(), a.seed);
            cfg.tau_link = a.tau_link;
            let em = flat_config(a, true);
            cfg.em = FlatModelConfig { topics: cfg.em.topics, seed: cfg.em.seed, ..em };
            let r = hartm_train(&corpus, &cfg)?;
            for (l, level) in r.levels.iter().enumerate() {
                output(level.phi.write(&out.join(format!("phi_level{}.txt", l + 1))))?;
                output(level.theta.write(&out.join(format!("theta_level{}.txt", l + 1))))?;
                if let Some(psi) = &level.psi {
                    write_file(&out.join(format!("psi_level{}.csv", l + 1)), psi.to_csv())?;
                }
            }
            let h = serde_json::to_string_pretty(&r.hierarchy_json()).expect("hierarchy serializes");
            write_file(&out.join("hierarchy.json"), h + "\n")?;
            (hartm_level_entropy(&r), json(&cfg))
        }
    };
    write_file(&out.join("entropy.csv"), reports_to_csv(&reports))?;
    print_reports(&reports);
    Ok(Outcome {
        out: out.clone(),
        resolved,
        seed: a.seed,
        fingerprint: Some(corpus.fingerprint()),
    })
}

fn model_kind(m: SweepModel) -> ModelKind {
    match m {
        SweepModel::Hlda => ModelKind::Hlda,
        SweepModel::Hpam => ModelKind::Hpam,
        SweepModel::Hartm => ModelKind::Hartm,
    }
}

fn apply_overrides(cfg: &mut SweepConfig, a: &SweepArgs) {
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    cfg.burn_in = burn_in(a.iterations, a.burn_in, cfg.iterations, cfg.burn_in);
    if let Some(i) = a.iterations {
        cfg.iterations = i;
    }
}

fn fresh_config(a: &SweepArgs) -> Result<SweepConfig, CliError> {
    let model = model_kind(a.model);
    let topics = match (model, a.t_range) {
        (ModelKind::Hlda, _) => Vec::new(),
        (_, Some(span)) => span.values(),
        (_, None) => return Err(CliError::Usage("--t-range is required for hpam and hartm sweeps".into())),
    };
    let etas = a.etas.clone().unwrap_or_else(|| match model {
        ModelKind::Hpam => vec![0.01],
        ModelKind::Hlda => vec![0.1],
        ModelKind::Hartm => Vec::new(),
    });
    let mut cfg = SweepConfig::new(model, topics, etas);
    cfg.stage = a.stage;
    cfg.base_seed = a.seed;
    cfg.fixed_t1 = a.t1;
    cfg.alpha = a.alpha;
    cfg.gamma = a.gamma;
    cfg.depth = a.depth;
    cfg.tau_link = a.tau_link;
    cfg.sparsing = a.sparsing;
    cfg.minima = MinimaParams {
        window: a.window,
        neighbors: a.neighbors,
        delta: a.delta,
    };
    apply_overrides(&mut cfg, a);
    Ok(cfg)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(Error::format(path, e.line(), e.to_string())))
}

/// Loads a finished sweep from its output directory.
pub(crate) fn load_sweep(dir: &Path) -> Result<SweepResult, CliError> {
    let cfg: SweepConfig = read_json(&dir.join(SWEEP_CONFIG))?;
    let rows = parse_raw_log(&dir.join(RAW_LOG))?;
    let result = SweepResult::from_records(&cfg, rows)?;
    if result.records.is_empty() {
        return Err(CliError::Core(Error::format(dir.join(RAW_LOG), 1, "no completed runs")));
    }
    Ok(result)
}

fn sweep(a: &SweepArgs) -> Result<Outcome, CliError> {
    let (configs, corpus_path, vocab) = match &a.from {
        Some(from) => {
            if a.stage != 2 {
                return Err(CliError::Usage("--from derives a stage-2 sweep; pass --stage 2".into()));
            }
            let stage1 = load_sweep(from)?;
            let span = a
                .t_range
                .ok_or_else(|| CliError::Usage("--t-range is required for stage 2".into()))?;
            let strategy = if a.top_k <= 1 {
                Stage2Strategy::Global
            } else {
                Stage2Strategy::TopK(a.top_k)
            };
            let mut configs = stage2_from_stage1(&stage1, strategy, &span.values())?;
            for c in &mut configs {
                apply_overrides(c, a);
                c.validate()?;
            }
            let (corpus, vocab) = match &a.input.corpus {
                Some(c) => (c.clone(), a.input.vocab.clone()),
                None => {
                    let m = RunManifest::read(&from.join(MANIFEST_FILE))?;
                    match m.args {
                        Command::Sweep(s) => (
                            s.input.corpus.ok_or_else(|| CliError::Usage("stage-1 manifest has no corpus".into()))?,
                            s.input.vocab,
                        ),
                        _ => return Err(CliError::Usage(format!("{} is not a sweep directory", from.display()))),
                    }
                }
            };
            (configs, corpus, vocab)
        }
        None => {
            let corpus = a
                .input
                .corpus
                .clone()
                .ok_or_else(|| CliError::Usage("--corpus is required".into()))?;
            let cfg = fresh_config(a)?;
            cfg.validate()?;
            (vec![cfg], corpus, a.input.vocab.clone())
        }
    };
    let corpus = load_corpus(&corpus_path, vocab.as_deref(), a.input.min_count)?;
    create_dir(&a.out)?;

    let single = configs.len() == 1;
    for (i, cfg) in configs.iter().enumerate() {
        let dir = if single { a.out.clone() } else { a.out.join(format!("candidate-{}", i + 1)) };
        create_dir(&dir)?;
        let io = SweepIo {
            raw_log: Some(dir.join(RAW_LOG)),
            resume: a.resume,
            jobs: a.jobs,
        };
        write_file(&dir.join(SWEEP_CONFIG), serde_json::to_string_pretty(cfg).expect("config") + "\n")?;
        let result = run_sweep_with(&corpus, cfg, &io)?;
        log::info!(
            "{}: {} runs executed, {} resumed",
            dir.display(),
            result.executed_runs,
            result.resumed_runs
        );
        write_file(&dir.join(SUMMARY), summary_csv(&result))?;
        write_file(&dir.join(VERDICT), verdict_json(&result) + "\n")?;
        println!("runs: {} executed, {} resumed", result.executed_runs, result.resumed_runs);
        print!("{}", markdown_table(&result, &corpus_path.display().to_string()));
    }
    Ok(Outcome {
        out: a.out.clone(),
        resolved: if single { json(&configs[0]) } else { json(&configs) },
        seed: a.seed,
        fingerprint: Some(corpus.fingerprint()),
    })
}

fn report(a: &ReportArgs) -> Result<Outcome, CliError> {
    let result = load_sweep(&a.from)?;
    let out = a.out.clone().unwrap_or_else(|| a.from.join("report"));
    create_dir(&out)?;
    let cfg = &result.config;
    if cfg.model == ModelKind::Hlda {
        let mut csv = String::from("eta,level,min_topics,max_topics,mean_topics\n");
        for r in &result.topic_ranges {
            csv.push_str(&format!("{},{},{},{},{:.6}\n", r.eta, r.level, r.min, r.max, r.mean));
        }
        write_file(&out.join("topic_ranges.csv"), csv)?;
    } else {
        for eta in result.etas() {
            for level in cfg.summary_levels() {
                let name = format!("curve_eta={eta}_level={level}.csv");
                write_file(&out.join(name), curve_csv(&result, eta, level))?;
            }
        }
    }
    let md = markdown_table(&result, &a.dataset);
    write_file(&out.join("report.md"), &md)?;
    print!("{md}");
    Ok(Outcome {
        out,
        resolved: json(cfg),
        seed: cfg.base_seed,
        fingerprint: None,
    })
}

fn rerun(a: &RerunArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&a.manifest)?;
    let mut command = manifest.args;
    if let Some(out) = &a.out {
        match &mut command {
            Command::Ingest(x) => x.out = out.clone(),
            Command::Synth(x) => x.out = out.clone(),
            Command::Train(x) => x.out = out.clone(),
            Command::Sweep(x) => x.out = out.clone(),
            Command::Report(x) => x.out = Some(out.clone()),
            Command::Rerun(_) => {}
        }
    }
    if let Command::Sweep(x) = &mut command {
        x.resume = false;
    }
    if matches!(command, Command::Rerun(_)) {
        return Err(CliError::Usage("manifest records a rerun".into()));
    }
    dispatch(command)
}
