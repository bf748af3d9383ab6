//! Config files: one `key value` pair per line, keys spelled like the long
//! flags (with or without the leading `--`), `#` comments.
//!
//! A `--config FILE` argument is replaced in place by the flags it holds, so
//! flags given after it on the command line take precedence.

use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Turns config text into command-line arguments.
///
/// A key without value (or with value `true`) becomes a bare flag; value
/// `false` drops the key.
pub fn config_args(text: &str, path: &Path) -> Result<Vec<String>, CliError> {
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = match body.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (body, ""),
        };
        let key = key.trim_start_matches("--");
        if key.is_empty() || key == "config" || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("invalid key {key:?}"),
            });
        }
        match value {
            "false" => {}
            "" | "true" => args.push(format!("--{key}")),
            v => {
                args.push(format!("--{key}"));
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}

/// Replaces every `--config FILE` (or `--config=FILE`) by the file's flags.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let file = if a == "--config" {
            Some(it.next().ok_or_else(|| CliError::usage("--config needs a file name"))?)
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        };
        match file {
            Some(f) => {
                let path = Path::new(&f);
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                out.extend(config_args(&text, path)?);
            }
            None => out.push(a),
        }
    }
    Ok(out)
}
