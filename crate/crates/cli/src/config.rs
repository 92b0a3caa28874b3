//! Flat `key=value` experiment configs.
//!
//! Keys are long flag names of the chosen subcommand; `subcommand` names it.
//! A config replays as flags placed before the command line, so explicit flags win.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value, got {line:?}", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(format!("config line {}: empty key", i + 1));
            }
            if k == "subcommand" {
                cfg.subcommand = v.to_string();
            } else if cfg.entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("config line {}: duplicate key {k:?}", i + 1));
            }
        }
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        let mut s = format!("subcommand={}\n", self.subcommand);
        for (k, v) in &self.entries {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    /// Flags equivalent to the entries; `true`/`false` stand for switches.
    pub fn to_args(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            match v.as_str() {
                "true" => out.push(format!("--{k}")),
                "false" => {}
                _ => {
                    // Multi-valued flags are stored space-separated.
                    out.push(format!("--{k}"));
                    if k == "inputs" {
                        out.extend(v.split_whitespace().map(String::from));
                    } else {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# comment\nsubcommand=kmeasure\nsystem={\"kind\":\"orthonormal\",\"dim\":4}\nm=1..3\ntilde=true\nmode=exact\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.subcommand, "kmeasure");
        assert_eq!(cfg.entries["system"], "{\"kind\":\"orthonormal\",\"dim\":4}");
        let again = ExperimentConfig::parse(&cfg.emit()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.emit(), cfg.emit());
        assert_eq!(cfg.to_args(), ["--m", "1..3", "--mode", "exact", "--system", "{\"kind\":\"orthonormal\",\"dim\":4}", "--tilde"]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        assert!(ExperimentConfig::parse("a=1\na=2").is_err());
        assert!(ExperimentConfig::parse("=1").is_err());
    }
}
