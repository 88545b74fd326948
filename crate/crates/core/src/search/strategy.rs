//! Resource-limit strategies: constant limits and the adaptive controller.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default increase/decrease ratio of the adaptive controller.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Parameters of the adaptive limit controller.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    pub period: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub tau_dec: u64,
    pub tau_inc: u64,
    pub tau_res: u64,
    pub min_limit: u64,
    pub max_limit: u64,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

impl StrategyParams {
    /// Preset `ada1` .. `ada5`.
    pub fn preset(name: &str) -> Option<StrategyParams> {
        let (tau_dec, tau_inc, tau_res, period) = match name {
            "ada1" => (4, 2, 10, 1000),
            "ada2" => (2, 1, 5, 15000),
            "ada3" => (4, 4, 8, 3000),
            "ada4" => (1, 1, 3, 5000),
            "ada5" => (5, 4, 8, 5000),
            _ => return None,
        };
        Some(StrategyParams {
            period,
            delta: DEFAULT_DELTA,
            tau_dec,
            tau_inc,
            tau_res,
            min_limit: 500,
            max_limit: 15000,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("invalid strategy parameters: {msg}")));
        if self.period == 0 {
            return bad("period must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.min_limit == 0 || self.min_limit > self.max_limit {
            return bad("need 1 <= min_limit <= max_limit");
        }
        if self.tau_inc > self.tau_dec {
            return bad("tau_inc must not exceed tau_dec");
        }
        Ok(())
    }
}

/// Controller state carried from generation to generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyState {
    pub limit: f64,
    pub last_gens: u64,
    pub improvement_count: u64,
}

impl StrategyState {
    pub fn new(limit: f64) -> StrategyState {
        StrategyState { limit, last_gens: 0, improvement_count: 0 }
    }

    /// The integer conflict limit handed to the solver.
    pub fn budget_limit(&self) -> u64 {
        self.limit.round().max(1.0) as u64
    }
}

/// One step of the adaptive controller, called once per generation.
pub fn update_limit(state: StrategyState, params: &StrategyParams, improvement: bool) -> StrategyState {
    let mut s = state;
    s.last_gens += 1;
    if improvement {
        s.improvement_count += 1;
    }
    if s.last_gens.is_multiple_of(params.period) {
        if s.improvement_count > params.tau_dec {
            s.limit -= params.delta * s.limit;
        } else if s.improvement_count < params.tau_inc {
            s.limit += params.delta * s.limit;
        }
        s.last_gens = 0;
        s.improvement_count = 0;
    } else if s.improvement_count > params.tau_res {
        s.last_gens = 0;
        s.improvement_count = 0;
        s.limit -= params.delta * s.limit;
    }
    s.limit = s.limit.clamp(params.min_limit as f64, params.max_limit as f64);
    s
}

/// How the per-candidate conflict limit evolves during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Fixed { name: String, limit: u64 },
    Adaptive { name: String, params: StrategyParams },
}

/// Custom strategy file: either `limit = <L>` or the adaptive parameters.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CustomStrategy {
    Fixed { limit: u64 },
    Adaptive(StrategyParams),
}

impl Strategy {
    pub const NAMES: [&'static str; 10] =
        ["lim100", "lim2K", "lim10K", "lim20K", "lim50K", "ada1", "ada2", "ada3", "ada4", "ada5"];

    pub fn fixed(limit: u64) -> Strategy {
        Strategy::Fixed { name: format!("lim{limit}"), limit: limit.max(1) }
    }

    pub fn adaptive(name: impl Into<String>, params: StrategyParams) -> Result<Strategy> {
        params.validate()?;
        Ok(Strategy::Adaptive { name: name.into(), params })
    }

    /// Loads a TOML strategy description; the strategy is named after the
    /// file stem.
    pub fn from_file(path: &Path) -> Result<Strategy> {
        let text = std::fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        let name = format!("custom:{stem}");
        match toml::from_str::<CustomStrategy>(&text)? {
            CustomStrategy::Fixed { limit } => {
                if limit == 0 {
                    return Err(Error::Config("limit must be at least 1".into()));
                }
                Ok(Strategy::Fixed { name, limit })
            }
            CustomStrategy::Adaptive(params) => Strategy::adaptive(name, params),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Strategy::Fixed { name, .. } | Strategy::Adaptive { name, .. } => name,
        }
    }

    /// Controller state at generation zero. Adaptive runs start at the lower
    /// clamp.
    pub fn initial_state(&self) -> StrategyState {
        match self {
            Strategy::Fixed { limit, .. } => StrategyState::new(*limit as f64),
            Strategy::Adaptive { params, .. } => StrategyState::new(params.min_limit as f64),
        }
    }

    pub fn step(&self, state: StrategyState, improvement: bool) -> StrategyState {
        match self {
            Strategy::Fixed { .. } => state,
            Strategy::Adaptive { params, .. } => update_limit(state, params, improvement),
        }
    }

    pub fn params(&self) -> Option<&StrategyParams> {
        match self {
            Strategy::Fixed { .. } => None,
            Strategy::Adaptive { params, .. } => Some(params),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        if let Some(path) = s.strip_prefix("custom:") {
            return Strategy::from_file(Path::new(path));
        }
        let fixed = |limit| Ok(Strategy::Fixed { name: s.to_string(), limit });
        match s {
            "lim100" => fixed(100),
            "lim2K" => fixed(2_000),
            "lim10K" => fixed(10_000),
            "lim20K" => fixed(20_000),
            "lim50K" => fixed(50_000),
            _ => match StrategyParams::preset(s) {
                Some(params) => Strategy::adaptive(s, params),
                None => Err(Error::Config(format!(
                    "unknown strategy `{s}` (expected one of {} or custom:<file>)",
                    Strategy::NAMES.join(", ")
                ))),
            },
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
