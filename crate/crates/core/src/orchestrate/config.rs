//! Run configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::backend::{Backend, CuberKind, ExternalConfig, ExternalSolver, MiniCdcl};
use crate::collect::{CollectConfig, Growth};
use crate::strategy::{presets, ParamDef, StrategySpace};
use crate::tune::TuneConfig;
use crate::validate::OnReject;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    /// Number of cubes to collect.
    pub cubes: usize,
    pub min_cost: u64,
    pub max_cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendConfig {
    MiniCdcl {
        #[serde(default)]
        cuber: CuberKind,
    },
    External {
        #[serde(default)]
        cuber: CuberKind,
        #[serde(default)]
        external: Box<ExternalConfig>,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::MiniCdcl { cuber: CuberKind::Lookahead }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub default: String,
    pub alternatives: Vec<String>,
}

/// Either a named preset or an explicit parameter list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    /// `mini-cdcl`, `kissat` or `marabou`; defaults to the one matching the backend.
    pub preset: Option<String>,
    pub params: Vec<ParamSpec>,
    pub max_deviations: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportPaths {
    /// Line-delimited JSON event log.
    pub log: Option<PathBuf>,
    /// Final report as JSON.
    pub summary: Option<PathBuf>,
    /// Directory for the CSV scatter tables.
    pub csv_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    /// Depth of the initial partition: at most `2^depth` cubes.
    pub initial_depth: u32,
    /// Target cube count; overrides `initial_depth` with `⌈log₂ count⌉`.
    pub initial_cubes: Option<usize>,
    pub tuning: Band,
    pub validation: Band,
    /// Cubes per re-partitioning during collection.
    pub online_cubes: usize,
    pub budget_growth: Growth,
    pub tune: TuneConfig,
    pub on_reject: OnReject,
    /// Multiplies the tuning sample size when re-tuning after a rejection.
    pub retune_factor: usize,
    /// Budget of the learned strategy inside a portfolio; defaults to the
    /// validation band's `max_cost`.
    pub first_budget: Option<u64>,
    pub backend: BackendConfig,
    pub space: SpaceConfig,
    pub report: ReportPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 1,
            initial_depth: 6,
            initial_cubes: None,
            tuning: Band { cubes: 50, min_cost: 500, max_cost: 10_000 },
            validation: Band { cubes: 25, min_cost: 10_000, max_cost: 50_000 },
            online_cubes: 64,
            budget_growth: Growth::default(),
            tune: TuneConfig::default(),
            on_reject: OnReject::Portfolio,
            retune_factor: 2,
            first_budget: None,
            backend: BackendConfig::default(),
            space: SpaceConfig::default(),
            report: ReportPaths::default(),
        }
    }
}

/// Mixes a run seed with a per-phase salt.
pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.into()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.initial_cubes == Some(0) {
            return bad("initial_cubes must be at least 1");
        }
        if self.initial_depth > 30 {
            return bad("initial_depth must be at most 30");
        }
        if self.retune_factor < 2 && self.on_reject == OnReject::Retune {
            return bad("retune_factor must be at least 2");
        }
        if self.first_budget == Some(0) {
            return bad("first_budget must be positive");
        }
        self.collect_config(&self.tuning, 0).validate()?;
        self.collect_config(&self.validation, 0).validate()?;
        self.tune.validate()?;
        Ok(())
    }

    /// `k` for the initial cuber call.
    pub fn initial_k(&self) -> usize {
        match self.initial_cubes {
            Some(n) => n.next_power_of_two().max(2),
            None => 1usize << self.initial_depth.max(1),
        }
    }

    pub fn collect_config(&self, band: &Band, seed: u64) -> CollectConfig {
        CollectConfig {
            sample_target: band.cubes,
            min_cost: band.min_cost,
            max_cost: band.max_cost,
            online_cubes: self.online_cubes,
            budget_growth: self.budget_growth.clone(),
            seed,
        }
    }

    pub fn first_budget(&self) -> u64 {
        self.first_budget.unwrap_or(self.validation.max_cost)
    }

    pub fn strategy_space(&self) -> Result<StrategySpace, RunError> {
        let space = if self.space.params.is_empty() {
            let preset = match (&self.space.preset, &self.backend) {
                (Some(name), _) => name.as_str(),
                (None, BackendConfig::MiniCdcl { .. }) => "mini-cdcl",
                (None, BackendConfig::External { .. }) => "kissat",
            };
            let base = match preset {
                "mini-cdcl" => presets::mini_cdcl(),
                "kissat" => presets::kissat(),
                "marabou" => presets::marabou(),
                other => return Err(RunError::Config(format!("unknown space preset {other:?}"))),
            };
            match self.space.max_deviations {
                Some(cap) => StrategySpace::new(base.params().to_vec(), Some(cap))?,
                None => base,
            }
        } else {
            let params = self
                .space
                .params
                .iter()
                .map(|p| ParamDef::new(&p.name, &p.default, p.alternatives.iter().map(String::as_str)))
                .collect::<Result<Vec<_>, _>>()?;
            StrategySpace::new(params, self.space.max_deviations)?
        };
        Ok(space)
    }

    pub fn build_backend(&self, space: &StrategySpace) -> Result<Backend, RunError> {
        Ok(match &self.backend {
            BackendConfig::MiniCdcl { cuber } => Backend::new(Arc::new(MiniCdcl::new(space.clone())), cuber.build()),
            BackendConfig::External { cuber, external } => {
                let solver = ExternalSolver::new((**external).clone(), space.clone())?;
                Backend::new(Arc::new(solver), cuber.build())
            }
        })
    }
}
