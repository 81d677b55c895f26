use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netrel::reliability::McConfig;
use netrel::stats::DEFAULT_GRID_RESOLUTION;
use netrel::FitConfig;
use serde::Deserialize;

/// Run configuration. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: PathBuf,
    #[serde(default)]
    pub observations: Vec<PathBuf>,
    pub schedule: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Master seed; when set it replaces the solver, Monte Carlo and
    /// simulation seeds.
    pub seed: Option<u64>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub solver: FitConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub independence: IndependenceConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Lognormal,
    LinkSum,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub link_days: usize,
    pub route_days: usize,
    /// Split link collection into two alternating subsets.
    pub partition: bool,
    pub generator: Generator,
    pub theta_default: f64,
    /// Per-link overrides keyed by link id.
    pub theta: BTreeMap<String, f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            link_days: 60,
            route_days: 30,
            partition: true,
            generator: Generator::Lognormal,
            theta_default: 0.8,
            theta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub route: Option<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependenceConfig {
    pub threshold: f64,
    pub grid_resolution: usize,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        Self { threshold: 0.05, grid_resolution: DEFAULT_GRID_RESOLUTION }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.network);
        cfg.observations.iter_mut().for_each(resolve);
        if let Some(s) = cfg.schedule.as_mut() {
            resolve(s);
        }
        resolve(&mut cfg.out_dir);
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, out_dir: Option<PathBuf>) {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        if let Some(seed) = self.seed {
            self.solver.seed = seed;
            self.mc.seed = seed;
            self.simulate.seed = seed;
            self.validate.seed = seed;
        }
        if let Some(d) = out_dir {
            self.out_dir = d;
        }
    }

    pub fn require_observations(&self) -> Result<()> {
        if self.observations.is_empty() {
            bail!("the config lists no observation files");
        }
        Ok(())
    }
}
