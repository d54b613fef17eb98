//! `key = value` config files merged underneath command-line flags, and the
//! matching echo of a resolved configuration.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;
use serde::Serialize;

use crate::args::Cli;
use crate::CliError;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// keys may use `-` or `_`.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(CliError::config(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Index of the subcommand token, skipping global options.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Returns `args` with the config file's entries spliced in right after the
/// subcommand, so later command-line flags override them.
pub fn merge_config_file(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path).to_path_buf();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    let pairs = parse_config(&text, &path)?;
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let name = args[at].to_string_lossy().into_owned();
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&name) else {
        // clap reports the unknown subcommand
        return Ok(args);
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in pairs {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config" && key != "help");
        let Some(arg) = arg else {
            return Err(CliError::config(format!("{}: unknown key `{key}` for `{name}`", path.display())));
        };
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        } else {
            match value.as_str() {
                "true" => extra.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(CliError::config(format!(
                        "{}: `{key}` expects true or false, got `{other}`",
                        path.display()
                    )))
                }
            }
        }
    }
    let mut merged = args[..=at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}

fn render(value: &serde_json::Value) -> Option<String> {
    match value {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Array(items) => Some(items.iter().filter_map(render).collect::<Vec<_>>().join(",")),
        other => Some(other.to_string()),
    }
}

/// The resolved configuration as `key = value` lines, readable by `--config`.
/// Boolean flags that are off are omitted.
pub fn echo<T: Serialize>(args: &T) -> String {
    let value = serde_json::to_value(args).expect("arguments serialize");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (key, v) in map {
            if v == serde_json::Value::Bool(false) {
                continue;
            }
            if let Some(text) = render(&v) {
                out.push_str(&format!("{} = {}\n", key.replace('_', "-"), text));
            }
        }
    }
    out
}
