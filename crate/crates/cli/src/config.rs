//! Flat `key=value` defaults file. Keys are long flag names of the chosen
//! subcommand (`_` and `-` are interchangeable). Values are spliced into the
//! argument list right after the subcommand name unless the same flag is
//! given on the command line.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("config line {line}: unknown key '{key}' for '{command}'")]
    UnknownKey { line: usize, key: String, command: String },
    #[error("config line {line}: '{key}' is a switch, expected true or false")]
    NotBool { line: usize, key: String },
    #[error("--config needs a file path")]
    MissingPath,
}

pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Malformed { line: i + 1 })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError::Malformed { line: i + 1 });
        }
        out.push((i + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

/// Removes `--config FILE` from `args` and splices the file's settings in.
pub fn expand(args: Vec<OsString>, cli: &Command) -> Result<Vec<OsString>, ConfigError> {
    let mut args = args;
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(args);
    };
    let flag = args.remove(pos).to_string_lossy().into_owned();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None if pos < args.len() => args.remove(pos).to_string_lossy().into_owned(),
        None => return Err(ConfigError::MissingPath),
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let pairs = parse_pairs(&text)?;

    // Without a subcommand clap reports the usage error itself.
    let Some(sub_idx) = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 1)
    else {
        return Ok(args);
    };
    let name = args[sub_idx].to_string_lossy().into_owned();
    let Some(sub) = cli.find_subcommand(&name) else {
        return Ok(args);
    };

    let given: Vec<String> = args[sub_idx + 1..]
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();

    let mut injected: Vec<OsString> = Vec::new();
    for (line, key, value) in pairs {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && !a.is_positional())
            .ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.clone(),
                command: name.clone(),
            })?;
        if given.contains(&key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => injected.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(ConfigError::NotBool { line, key }),
            }
        } else {
            injected.push(format!("--{key}={value}").into());
        }
    }
    args.splice(sub_idx + 1..sub_idx + 1, injected);
    Ok(args)
}
