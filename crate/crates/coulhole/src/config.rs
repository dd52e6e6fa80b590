//! Flat `key = value` config files and run manifests as argument sources.
//!
//! Keys are flag names without the leading dashes (`ef = 50keV`,
//! `u-min = 0.01`; underscores read as dashes). `true` turns a switch on,
//! `false` leaves it off. A `command` key names the subcommand. A
//! `run-manifest.json` is accepted too: its `command` and `parameters`
//! are read and everything else is ignored.
//!
//! Config values are spliced into the argument list ahead of the
//! command-line flags, and repeated flags keep their last value, so the
//! command line always wins.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

/// Flags that belong to the top-level command rather than a subcommand.
pub const GLOBAL_KEYS: [&str; 3] = ["config", "out-dir", "format"];

/// Parsed config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// Subcommand named by the file, if any.
    pub command: Option<String>,
    /// Remaining entries in file order.
    pub entries: Vec<(String, String)>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

/// Parse INI-style text.
pub fn parse_ini(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            return Err(Error::usage(format!(
                "config line {}: sections are not supported, use flat key = value",
                n + 1
            )));
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("config line {}: expected key = value", n + 1)))?;
        let (k, v) = (normalize_key(k), v.trim().to_string());
        if k.is_empty() {
            return Err(Error::usage(format!("config line {}: empty key", n + 1)));
        }
        if k == "command" {
            cfg.command = Some(v);
        } else {
            cfg.entries.push((k, v));
        }
    }
    Ok(cfg)
}

/// Read `command` and `parameters` from a manifest.
pub fn parse_manifest(text: &str) -> Result<ConfigFile> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let command = v
        .get("command")
        .and_then(|c| c.as_str())
        .map(str::to_string);
    let mut entries = Vec::new();
    if let Some(p) = v.get("parameters") {
        let obj = p
            .as_object()
            .ok_or_else(|| Error::usage("manifest parameters must be an object"))?;
        for (k, val) in obj {
            let s = match val {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Number(n) => n.to_string(),
                _ => {
                    return Err(Error::usage(format!(
                        "manifest parameter {k}: unsupported value"
                    )))
                }
            };
            entries.push((normalize_key(k), s));
        }
    }
    Ok(ConfigFile { command, entries })
}

/// Load a config file; `.json` files are read as manifests.
pub fn load(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        parse_manifest(&text)
    } else {
        parse_ini(&text)
    }
}

fn flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => out.push(format!("--{k}={v}").into()),
        }
    }
    out
}

/// Position of the subcommand in `argv`, skipping global options and
/// their values.
pub fn subcommand_index(argv: &[OsString], subcommands: &[&str]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if let Some(name) = a.strip_prefix("--") {
            if GLOBAL_KEYS.contains(&name) {
                i += 2;
                continue;
            }
            i += 1;
            continue;
        }
        if subcommands.contains(&a.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Splice `cfg` into `argv` so that explicit flags override it.
///
/// Global keys go right after the program name, subcommand keys right
/// after the subcommand. If `argv` names no subcommand, the file's
/// `command` is used.
pub fn merge_args(
    argv: &[OsString],
    cfg: &ConfigFile,
    subcommands: &[&str],
) -> Result<Vec<OsString>> {
    let (global, local): (Vec<_>, Vec<_>) = cfg
        .entries
        .iter()
        .filter(|(k, _)| k != "config")
        .cloned()
        .partition(|(k, _)| GLOBAL_KEYS.contains(&k.as_str()));
    let mut out: Vec<OsString> = argv.iter().take(1).cloned().collect();
    out.extend(flags(&global));
    let rest = &argv[argv.len().min(1)..];
    match subcommand_index(argv, subcommands) {
        Some(i) => {
            if let Some(c) = &cfg.command {
                if argv[i].to_string_lossy() != c.as_str() {
                    return Err(Error::usage(format!(
                        "config is for `{c}`, not `{}`",
                        argv[i].to_string_lossy()
                    )));
                }
            }
            out.extend(argv[1..=i].iter().cloned());
            out.extend(flags(&local));
            out.extend(argv[i + 1..].iter().cloned());
        }
        None => {
            let c = cfg
                .command
                .as_ref()
                .ok_or_else(|| Error::usage("no subcommand given and the config names none"))?;
            out.extend(rest.iter().cloned());
            out.push(c.into());
            out.extend(flags(&local));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn ini() {
        let c = parse_ini("# beam\ncommand = map\nu_min = 0.01\n\n; x\napprox=true\n").unwrap();
        assert_eq!(c.command.as_deref(), Some("map"));
        assert_eq!(
            c.entries,
            vec![
                ("u-min".into(), "0.01".into()),
                ("approx".into(), "true".into())
            ]
        );
        assert!(parse_ini("[map]\n").is_err());
        assert!(parse_ini("novalue\n").is_err());
    }

    #[test]
    fn manifest() {
        let c = parse_manifest(
            r#"{"command":"simulate","parameters":{"seed":"7","approx":false,"pairs":10}}"#,
        )
        .unwrap();
        assert_eq!(c.command.as_deref(), Some("simulate"));
        assert_eq!(c.entries.len(), 3);
        assert_eq!(c.entries[2], ("pairs".into(), "10".into()));
    }

    #[test]
    fn flags_follow_config() {
        let cfg = parse_ini("out-dir = a\nu-min = 0.1\napprox = false\n").unwrap();
        let got = merge_args(
            &os(&["bin", "--config", "c.ini", "map", "--u-min", "0.2"]),
            &cfg,
            &["map"],
        )
        .unwrap();
        assert_eq!(
            got,
            os(&[
                "bin",
                "--out-dir=a",
                "--config",
                "c.ini",
                "map",
                "--u-min=0.1",
                "--u-min",
                "0.2"
            ])
        );
    }

    #[test]
    fn command_from_config() {
        let cfg = parse_ini("command = gamow\neta = 1\n").unwrap();
        let got = merge_args(&os(&["bin", "--config", "c.ini"]), &cfg, &["gamow"]).unwrap();
        assert_eq!(got, os(&["bin", "--config", "c.ini", "gamow", "--eta=1"]));
        let wrong = merge_args(
            &os(&["bin", "--config", "c", "map"]),
            &cfg,
            &["gamow", "map"],
        );
        assert!(wrong.is_err());
        let none = merge_args(&os(&["bin"]), &ConfigFile::default(), &["map"]);
        assert!(none.is_err());
    }
}
