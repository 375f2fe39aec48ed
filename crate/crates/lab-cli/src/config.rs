//! Flat key=value experiment configuration and run manifests.
//!
//! A config is a text file of `key = value` lines (# comments allowed)
//! merged with `--key value` command-line overrides. Every subcommand
//! declares its accepted keys; unknown keys are rejected. Stochastic runs
//! must carry a `seed`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Config {
    /// Parses `--config FILE` plus `--key value` pairs from raw arguments.
    pub fn from_args(args: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut i = 0;
        let mut file: Option<PathBuf> = None;
        while i < args.len() {
            let a = &args[i];
            let key = a
                .strip_prefix("--")
                .ok_or_else(|| anyhow!("expected '--key value', got '{a}'"))?;
            let value = args
                .get(i + 1)
                .ok_or_else(|| anyhow!("missing value for '--{key}'"))?;
            if key == "config" {
                file = Some(PathBuf::from(value));
            } else {
                values.insert(key.to_string(), value.clone());
            }
            i += 2;
        }
        let mut merged = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (ln, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), ln + 1))?;
                merged.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        merged.extend(values);
        Ok(Config {
            values: merged,
            consumed: Default::default(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.consumed.borrow_mut().insert(key.to_string());
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("key '{key}': cannot parse '{v}'")),
        }
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| anyhow!("missing required key '{key}'"))
    }

    pub fn require_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| anyhow!("key '{key}': cannot parse '{v}'"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.require_parse("seed")
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(self.require("out")?);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(dir)
    }

    /// Fails on any key that no accessor touched.
    pub fn reject_unknown(&self) -> Result<()> {
        let consumed = self.consumed.borrow();
        for key in self.values.keys() {
            if !consumed.contains(key) {
                bail!("unknown key '{key}'");
            }
        }
        Ok(())
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Collects output files and writes the run manifest.
pub struct RunOutputs {
    dir: PathBuf,
    started: Instant,
    files: Vec<(String, String)>,
}

impl RunOutputs {
    pub fn new(dir: PathBuf) -> Self {
        RunOutputs {
            dir,
            started: Instant::now(),
            files: Vec::new(),
        }
    }

    /// Writes one output file and records its digest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        let digest = Sha256::digest(contents.as_bytes());
        let hex: String = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.files.push((name.to_string(), hex));
        Ok(())
    }

    /// Writes `manifest.txt`: config echo, library version, wall time, and
    /// one digest line per output file.
    pub fn finish(mut self, subcommand: &str, config: &Config) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "subcommand={subcommand}");
        let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
        for (k, v) in config.echo() {
            let _ = writeln!(out, "config.{k}={v}");
        }
        let _ = writeln!(out, "wall_ms={}", self.started.elapsed().as_millis());
        self.files.sort();
        for (name, digest) in &self.files {
            let _ = writeln!(out, "digest.{name}={digest}");
        }
        std::fs::write(self.dir.join("manifest.txt"), out)?;
        Ok(())
    }
}
