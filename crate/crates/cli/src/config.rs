//! `key = value` config files, spliced into the argument list after the
//! subcommand. Keys also given on the command line are dropped, so flags win.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use crate::CliError;

/// One config entry; `None` marks a switch set to `true`.
pub type Entry = (String, Option<String>);

/// `true`/`false` values toggle switches; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut entries = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected `key = value`", ln + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" || key.starts_with('-') {
            return Err(CliError::Invalid(format!("config line {}: invalid key {key:?}", ln + 1)));
        }
        match value {
            "true" => entries.push((key, None)),
            "false" => {}
            _ => entries.push((key, Some(value.to_string()))),
        }
    }
    Ok(entries)
}

/// Removes `--config PATH` from `argv` and returns it with the position just
/// after the subcommand name.
fn extract_config(argv: &[OsString]) -> (Vec<OsString>, Option<PathBuf>, Option<usize>) {
    let mut out = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut sub_pos = None;
    let mut iter = argv.iter().enumerate();
    while let Some((i, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = iter.next().map(|(_, p)| PathBuf::from(p));
            continue;
        }
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
            continue;
        }
        out.push(a.clone());
        if i > 0 && sub_pos.is_none() && !s.starts_with('-') {
            sub_pos = Some(out.len());
        }
    }
    (out, path, sub_pos)
}

/// The argument list with config defaults merged in.
pub fn apply_config(argv: &[OsString]) -> Result<Vec<OsString>, CliError> {
    let (mut args, path, sub_pos) = extract_config(argv);
    let (Some(path), Some(pos)) = (path, sub_pos) else {
        return Ok(argv.to_vec());
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let given: Vec<String> = args[pos..]
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in parse_config(&text)? {
        if given.contains(&key) {
            continue;
        }
        extra.push(format!("--{key}").into());
        if let Some(v) = value {
            extra.push(v.into());
        }
    }
    args.splice(pos..pos, extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let e = parse_config("# defaults\nk = 3\nmu=2\nassume_mean_cancellation = true\nall = false\n").unwrap();
        assert_eq!(
            e,
            [
                ("k".to_string(), Some("3".to_string())),
                ("mu".to_string(), Some("2".to_string())),
                ("assume-mean-cancellation".to_string(), None),
            ]
        );
        assert!(parse_config("k 3").is_err());
        assert!(parse_config("config = x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("superconv-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.txt");
        fs::write(&path, "k = 2\ns = 0\n").unwrap();
        let argv: Vec<OsString> = ["superconv", "--config", path.to_str().unwrap(), "points", "--s", "1"]
            .map(OsString::from)
            .to_vec();
        let out: Vec<String> = apply_config(&argv).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(out, ["superconv", "points", "--k", "2", "--s", "1"]);
        fs::remove_dir_all(&dir).unwrap();
    }
}
