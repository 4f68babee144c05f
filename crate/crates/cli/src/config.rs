//! Flat `key = value` configuration with `[section]` headers.
//!
//! Keys before the first header are global (`seed`, `output_dir`,
//! `grid_theta`, `grid_phi`); every command reads its own section and
//! ignores the others. Relative paths inside a file resolve against the
//! file's directory, paths given on the command line against the working
//! directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

pub const GLOBAL_KEYS: [&str; 4] = ["seed", "output_dir", "grid_theta", "grid_phi"];

pub const COMMANDS: [&str; 7] = [
    "fit",
    "sweep-n",
    "train-amortizer",
    "eval-amortizer",
    "ide-check",
    "render",
    "gradcheck",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// Empty for the leading global block.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Splits `text` into sections; the first one is always the global block.
/// `origin` names the source in error messages.
pub fn parse(text: &str, origin: &str) -> Result<Vec<Section>, CliError> {
    let mut sections = vec![Section {
        name: String::new(),
        line: 0,
        entries: Vec::new(),
    }];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty() && n.chars().all(is_key_char))
                .ok_or_else(|| CliError::Usage(format!("{origin}:{line}: malformed section header `{content}`")))?;
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}:{line}: expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(is_key_char) {
            return Err(CliError::Usage(format!("{origin}:{line}: invalid key `{key}`")));
        }
        let section = sections.last_mut().expect("global block always present");
        if section.get(key).is_some() {
            return Err(CliError::Usage(format!("{origin}:{line}: duplicate key `{key}`")));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'
}

/// Parses a comma-separated list; an empty string is an empty list.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("cannot parse `{}`", s.trim())))
        .collect()
}

pub fn parse_vec3(text: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = parse_list(text)?;
    v.try_into().map_err(|_| format!("expected three comma-separated numbers, got `{text}`"))
}

#[derive(Debug, Clone)]
struct Value {
    text: String,
    /// Directory relative paths are joined onto.
    base: PathBuf,
    origin: String,
}

/// Parameters for one command: the global block and the command's section
/// from the config file, with command-line overrides applied on top.
/// Every value read (including defaults) is recorded for the resolved copy.
#[derive(Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid_theta: usize,
    pub grid_phi: usize,
    section: BTreeMap<String, Value>,
    consumed: BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

impl RunConfig {
    pub fn load(command: &'static str, config: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut global: BTreeMap<String, Value> = BTreeMap::new();
        let mut section: BTreeMap<String, Value> = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let origin = path.display().to_string();
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let mut seen = BTreeSet::new();
            for s in parse(&text, &origin)? {
                if !s.name.is_empty() && !COMMANDS.contains(&s.name.as_str()) {
                    return Err(CliError::Usage(format!("{origin}:{}: unknown section [{}]", s.line, s.name)));
                }
                if !seen.insert(s.name.clone()) {
                    return Err(CliError::Usage(format!("{origin}:{}: section [{}] appears twice", s.line, s.name)));
                }
                let target = if s.name.is_empty() {
                    &mut global
                } else if s.name == command {
                    &mut section
                } else {
                    continue;
                };
                for e in s.entries {
                    if s.name.is_empty() && !GLOBAL_KEYS.contains(&e.key.as_str()) {
                        return Err(CliError::Usage(format!(
                            "{origin}:{}: `{}` is not a global key (expected one of {})",
                            e.line,
                            e.key,
                            GLOBAL_KEYS.join(", ")
                        )));
                    }
                    let v = Value {
                        text: e.value,
                        base: base.clone(),
                        origin: format!("{origin}:{}", e.line),
                    };
                    target.insert(e.key, v);
                }
            }
        }
        for (key, text) in overrides {
            let v = Value {
                text: text.clone(),
                base: PathBuf::new(),
                origin: format!("override `{key}`"),
            };
            if GLOBAL_KEYS.contains(&key.as_str()) {
                global.insert(key.clone(), v);
            } else {
                section.insert(key.clone(), v);
            }
        }

        let global_value = |key: &str| global.get(key);
        let seed = typed(global_value("seed"), "seed")?.unwrap_or(0);
        let output_dir = global_value("output_dir")
            .map(|v| v.base.join(&v.text))
            .unwrap_or_else(|| PathBuf::from("out").join(command));
        let grid_theta = typed(global_value("grid_theta"), "grid_theta")?.unwrap_or(64);
        let grid_phi = typed(global_value("grid_phi"), "grid_phi")?.unwrap_or(128);
        if grid_theta == 0 || grid_phi == 0 {
            return Err(CliError::Usage("grid_theta and grid_phi must be >= 1".into()));
        }
        Ok(Self {
            command,
            seed,
            output_dir,
            grid_theta,
            grid_phi,
            section,
            consumed: BTreeSet::new(),
            resolved: Vec::new(),
        })
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.consumed.insert(key.to_string());
        self.section.get(key).cloned()
    }

    fn record(&mut self, key: &str, text: String) {
        self.resolved.push((key.to_string(), text));
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        let v = typed(self.take(key).as_ref(), key)?.unwrap_or(default);
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn list<T: FromStr + Display>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError> {
        let v = match self.take(key) {
            Some(v) => parse_list(&v.text).map_err(|e| CliError::Usage(format!("{}: {key}: {e}", v.origin)))?,
            None => default,
        };
        let text = v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        self.record(key, text);
        Ok(v)
    }

    /// Uninterpreted text of a key.
    pub fn text(&mut self, key: &str, default: &str) -> String {
        let v = self.take(key).map(|v| v.text).unwrap_or_else(|| default.to_string());
        self.record(key, v.clone());
        v
    }

    pub fn path(&mut self, key: &str) -> Option<PathBuf> {
        let p = self.take(key).map(|v| v.base.join(v.text))?;
        self.record(key, p.display().to_string());
        Some(p)
    }

    /// Fails on section keys the command never asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<_> = self.section.keys().filter(|k| !self.consumed.contains(*k)).collect();
        match unknown.first() {
            None => Ok(()),
            Some(k) => Err(CliError::Usage(format!(
                "{}: unknown key `{k}` for [{}]",
                self.section[k.as_str()].origin,
                self.command
            ))),
        }
    }

    /// Config text that reproduces this run when passed back via `--config`.
    pub fn resolved_text(&self) -> String {
        let mut out = format!("# resolved configuration for `aniso-lobe {}`\n", self.command);
        out += &format!("seed = {}\n", self.seed);
        out += &format!("output_dir = {}\n", self.output_dir.display());
        out += &format!("grid_theta = {}\n", self.grid_theta);
        out += &format!("grid_phi = {}\n", self.grid_phi);
        out += &format!("\n[{}]\n", self.command);
        for (k, v) in &self.resolved {
            out += &format!("{k} = {v}\n");
        }
        out
    }
}

fn typed<T: FromStr>(v: Option<&Value>, key: &str) -> Result<Option<T>, CliError> {
    match v {
        None => Ok(None),
        Some(v) => v
            .text
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{}: cannot parse `{}` for `{key}`", v.origin, v.text))),
    }
}

/// Splits a `--set key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String), CliError> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{arg}` must have the form key=value")))?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(is_key_char) {
        return Err(CliError::Usage(format!("invalid override key `{k}`")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_globals() {
        let text = "seed = 7  # trailing\n\n[fit]\nlambda = 270\nmu=0.01\n[render]\nscene = a.scene\n";
        let s = parse(text, "t").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].get("seed").unwrap().value, "7");
        assert_eq!(s[1].name, "fit");
        assert_eq!(s[1].get("mu").unwrap().value, "0.01");
        assert_eq!(s[2].get("scene").unwrap().line, 7);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("[fit\n", "t").is_err());
        assert!(parse("[fit]\nlambda 3\n", "t").is_err());
        assert!(parse("[fit]\na = 1\na = 2\n", "t").is_err());
        assert!(parse("bad key = 1\n", "t").is_err());
    }

    #[test]
    fn lists_and_vectors() {
        assert_eq!(parse_list::<usize>("1, 5,13 ,29").unwrap(), vec![1, 5, 13, 29]);
        assert!(parse_list::<usize>("").unwrap().is_empty());
        assert!(parse_list::<usize>("1,x").is_err());
        assert_eq!(parse_vec3("0, 4, 0").unwrap(), [0.0, 4.0, 0.0]);
        assert!(parse_vec3("1,2").is_err());
    }

    #[test]
    fn overrides_win_and_unknown_keys_are_reported() {
        let ov = vec![("beta_js".to_string(), "0".to_string()), ("seed".to_string(), "3".to_string())];
        let mut cfg = RunConfig::load("fit", None, &ov).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.get("beta_js", 0.3).unwrap(), 0.0);
        assert_eq!(cfg.get("side", 14usize).unwrap(), 14);
        cfg.finish().unwrap();
        let text = cfg.resolved_text();
        assert!(text.contains("seed = 3\n") && text.contains("beta_js = 0\n") && text.contains("side = 14\n"));

        let ov = vec![("lamda".to_string(), "1".to_string())];
        let cfg = RunConfig::load("fit", None, &ov).unwrap();
        assert!(matches!(cfg.finish(), Err(CliError::Usage(_))));
    }

    #[test]
    fn override_syntax() {
        assert_eq!(parse_override("a = b").unwrap(), ("a".into(), "b".into()));
        assert!(parse_override("novalue").is_err());
    }
}
