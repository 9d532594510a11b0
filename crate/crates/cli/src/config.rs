//! `key = value` config files, spliced into the argument list so that flags
//! given on the command line win over the file, and the file over defaults.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};

/// Parses a config file body. Blank lines and `#` comments are ignored; keys
/// are flag names without the leading dashes.
pub fn parse_config(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {raw:?}", lineno + 1);
        };
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') || key.contains(char::is_whitespace) {
            bail!("line {}: invalid key {key:?}", lineno + 1);
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn config_tokens(path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let entries = parse_config(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(entries.into_iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))).collect())
}

/// Removes `--config FILE` / `--config=FILE` from `args` and inserts the
/// file's entries as flags right after the subcommand name.
pub fn expand_config(args: Vec<OsString>, subcommands: &[&str]) -> anyhow::Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        match arg.to_str() {
            Some("--config") => {
                let Some(path) = it.next() else { bail!("--config needs a file argument") };
                config = Some(path);
            }
            Some(s) if s.starts_with("--config=") => config = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(arg),
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let tokens = config_tokens(Path::new(&path))?;
    let at = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| subcommands.contains(&s)))
        .map(|i| i + 1)
        .unwrap_or(rest.len());
    rest.splice(at..at, tokens);
    Ok(rest)
}
