use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{ModelKind, RunRecord, SweepResult, VerdictLevel};
use crate::error::{Error, Result};
use crate::metrics::fixed6;

pub const RAW_LOG_HEADER: &str = "model,stage,eta,T,restart,seed,level,renyi,N,Ptilde,loglik,runtime_ms";
pub const SUMMARY_HEADER: &str =
    "model,stage,eta,T,mean_renyi_l1,std_renyi_l1,mean_renyi_l2,std_renyi_l2,mean_loglik";

pub(crate) fn raw_row(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.model, r.stage, r.eta, r.t, r.restart, r.seed, r.level, r.renyi, r.above_threshold, r.mass, r.loglik, r.runtime_ms
    )
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        line,
        message: format!("bad {name} {s:?}"),
    })
}

/// Parses a raw log. A truncated trailing line is dropped.
pub fn parse_raw_log(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i == 0 && line.starts_with("model,") {
            continue;
        }
        if line.trim().is_empty() || (!complete && i + 1 == lines.len()) {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 12 fields, found {}", f.len()),
            });
        }
        let n = i + 1;
        out.push(RunRecord {
            model: field::<ModelKind>(path, n, "model", f[0])?,
            stage: field(path, n, "stage", f[1])?,
            eta: field(path, n, "eta", f[2])?,
            t: field(path, n, "T", f[3])?,
            restart: field(path, n, "restart", f[4])?,
            seed: field(path, n, "seed", f[5])?,
            level: field(path, n, "level", f[6])?,
            renyi: field(path, n, "renyi", f[7])?,
            above_threshold: field(path, n, "N", f[8])?,
            mass: field(path, n, "Ptilde", f[9])?,
            loglik: field(path, n, "loglik", f[10])?,
            runtime_ms: field(path, n, "runtime_ms", f[11])?,
        });
    }
    Ok(out)
}

/// Summary CSV: one row per `(η, T)` cell. The two entropy columns hold the
/// sweep's two reported levels; failed cells leave them empty.
pub fn summary_csv(result: &SweepResult) -> String {
    let cfg = &result.config;
    let mut out = format!("{SUMMARY_HEADER}\n");
    for c in &result.cells {
        let _ = write!(out, "{},{},{},{}", cfg.model, cfg.stage, c.eta, c.t);
        for level in cfg.summary_levels() {
            match c.level(level) {
                Some(l) => {
                    let _ = write!(out, ",{},{}", fixed6(l.mean_renyi), fixed6(l.std_renyi));
                }
                None => out.push_str(",,"),
            }
        }
        let ll = if c.failed() { String::new() } else { fixed6(c.mean_loglik) };
        let _ = writeln!(out, ",{ll}");
    }
    out
}

#[derive(Serialize)]
struct VerdictOut<'a> {
    kind: super::VerdictKind,
    levels: &'a [VerdictLevel],
    config_refs: &'a [String],
}

pub fn verdict_json(result: &SweepResult) -> String {
    let v = &result.verdict;
    let out = VerdictOut {
        kind: v.kind,
        levels: &v.levels,
        config_refs: &v.config_refs,
    };
    serde_json::to_string_pretty(&out).expect("verdict serializes")
}

/// `T,mean,std,loglik` for one `η` and level.
pub fn curve_csv(result: &SweepResult, eta: f64, level: usize) -> String {
    let mut out = String::from("T,mean_renyi,std_renyi,mean_loglik\n");
    for c in result.cells.iter().filter(|c| c.eta == eta && !c.failed()) {
        if let Some(l) = c.level(level) {
            let _ = writeln!(out, "{},{},{},{}", c.t, fixed6(l.mean_renyi), fixed6(l.std_renyi), fixed6(c.mean_loglik));
        }
    }
    out
}

/// Markdown table with one row per `η`: minimum location and value.
pub fn markdown_table(result: &SweepResult, dataset: &str) -> String {
    let cfg = &result.config;
    let mut out = String::new();
    let _ = writeln!(out, "| dataset | model | stage | eta | T at minimum | mean minimum S^R | local minima |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    if cfg.model == ModelKind::Hlda {
        for r in &result.topic_ranges {
            let _ = writeln!(
                out,
                "| {dataset} | hlda | 1 | {} | level {}: {}-{} (mean {:.1}) | | |",
                r.eta, r.level, r.min, r.max, r.mean
            );
        }
        return out;
    }
    for m in &result.minima {
        let (t, v) = m.minima.global.map_or(("-".into(), "-".into()), |g| (g.t.to_string(), fixed6(g.value)));
        let locals: Vec<String> = m.minima.local.iter().map(|l| l.t.to_string()).collect();
        let eta = if cfg.model == ModelKind::Hartm { "-".to_string() } else { m.eta.to_string() };
        let _ = writeln!(
            out,
            "| {dataset} | {} | {} | {eta} | {t} | {v} | {} |",
            cfg.model,
            cfg.stage,
            locals.join(" ")
        );
    }
    let _ = writeln!(out, "\nverdict: {}", serde_json::to_string(&result.verdict.kind).unwrap_or_default());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        RunRecord {
            model: ModelKind::Hpam,
            stage: 1,
            eta: 0.2,
            t: 7,
            restart: 3,
            seed: 12345678901234567890,
            level: 2,
            renyi: 3.141592653589793,
            above_threshold: 412,
            mass: 0.123456789,
            loglik: -123456.5,
            runtime_ms: 42,
        }
    }

    #[test]
    fn raw_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("raw.csv");
        let mut r = record();
        let mut text = format!("{RAW_LOG_HEADER}\n{}\n", raw_row(&r));
        r.renyi = f64::INFINITY;
        text.push_str(&raw_row(&r));
        text.push('\n');
        text.push_str("hpam,1,0.2,8,0");
        std::fs::write(&p, text).unwrap();
        let rows = parse_raw_log(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], record());
        assert!(rows[1].renyi.is_infinite());
    }

    #[test]
    fn malformed_row_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("raw.csv");
        std::fs::write(&p, format!("{RAW_LOG_HEADER}\nhpam,1,0.2\n")).unwrap();
        assert!(parse_raw_log(&p).is_err());
    }
}
