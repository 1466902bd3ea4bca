//! Flat `key=value` config files. Keys are long flag names; command-line
//! flags win over file entries.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::CliError;

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{}:{}: expected key=value", origin.display(), i + 1)));
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts the flags of a `--config` file right after the subcommand name,
/// so explicit flags given later override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config(&text, path)?;

    let cmd = Cli::command();
    let Some(sub_pos) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|(i, _)| i)
    else {
        return Ok(argv);
    };
    let sub = cmd
        .find_subcommand(argv[sub_pos].to_string_lossy().as_ref())
        .expect("subcommand located above");

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(CliError::Usage(format!(
                "{}: unknown key {key:?} for {}",
                path.display(),
                sub.get_name()
            )));
        };
        if key == "config" {
            continue;
        }
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => return Err(CliError::Usage(format!("{}: {key} expects true or false", path.display()))),
            }
        }
    }
    let mut out = argv[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[sub_pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let kv = parse_config("# c\nt_range = 2:20\n\netas=0.2,0.5\n", Path::new("x")).unwrap();
        assert_eq!(kv, vec![("t-range".into(), "2:20".into()), ("etas".into(), "0.2,0.5".into())]);
        assert!(parse_config("oops", Path::new("x")).is_err());
    }

    #[test]
    fn config_flags_precede_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "restarts=3\nresume=true\nseed=9\n").unwrap();
        let argv: Vec<OsString> = ["hitopic", "sweep", "--config", cfg.to_str().unwrap(), "--seed", "4"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand_config(argv).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&s[2..7], &["--restarts", "3", "--resume", "--seed", "9"]);
        assert_eq!(s.last().unwrap(), "4");
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "nonsense=1\n").unwrap();
        let argv: Vec<OsString> = ["hitopic", "report", "--config", cfg.to_str().unwrap()]
            .iter()
            .map(OsString::from)
            .collect();
        assert!(matches!(expand_config(argv), Err(CliError::Usage(_))));
    }
}
