use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::args::Cli;

/// Contents of the file named by `--config` or `MEDLAT_CONFIG`.
///
/// ```toml
/// registry = "registry.toml"
/// output_dir = "out"
/// seed = 13
/// ruleset = "rules.tsv"
/// verbosity = "info"
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub registry: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ruleset: Option<PathBuf>,
    pub verbosity: Option<String>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("Io: cannot read config {}", path.display()))?;
        let mut cfg: CliConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("InvalidConfig: {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.registry, &mut cfg.output_dir, &mut cfg.ruleset]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Config file values with command-line flags applied on top.
#[derive(Debug, Clone)]
pub struct Settings {
    pub registry: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub ruleset: Option<PathBuf>,
    pub machine: bool,
    pub jobs: usize,
    pub log_level: log::LevelFilter,
}

const DEFAULT_OUT_DIR: &str = "medlat-out";

fn level(name: &str) -> Result<log::LevelFilter> {
    name.parse()
        .map_err(|_| anyhow::anyhow!("InvalidConfig: unknown verbosity {name:?}"))
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let cfg = match &cli.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        let log_level = match cli.verbose {
            0 => match &cfg.verbosity {
                Some(v) => level(v)?,
                None => log::LevelFilter::Warn,
            },
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        };
        let jobs = cli.jobs.unwrap_or(1);
        if jobs == 0 {
            bail!("InvalidConfig: --jobs must be at least 1");
        }
        Ok(Settings {
            registry: cfg.registry,
            out_dir: cli
                .out_dir
                .clone()
                .or(cfg.output_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            seed: cli.seed.or(cfg.seed).unwrap_or(0),
            ruleset: cfg.ruleset,
            machine: cli.machine,
            jobs,
            log_level,
        })
    }

    /// `explicit` if given, else `name` inside the output directory, which
    /// is created on demand.
    pub fn output_path(&self, explicit: Option<&Path>, name: &str) -> Result<PathBuf> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => self.out_dir.join(name),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("Io: cannot create {}", parent.display()))?;
        }
        Ok(path)
    }
}
