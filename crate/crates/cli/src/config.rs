//! Run configuration, read from TOML.
//!
//! Top-level keys are the training hyperparameters; a `[budget]` table holds
//! either `count` or `ratio`:
//!
//! ```toml
//! lambda = 0.01
//! iterations = 100
//! repeats = 50
//! seed = 7
//!
//! [gamma]
//! schedule = "constant"
//! value = 0.05
//!
//! [budget]
//! ratio = 0.15
//! ```

use std::path::Path;

use keyshot_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::read_text;

pub const DEFAULT_BUDGET_RATIO: f64 = 0.15;

/// Summary length: a shot count or a share of the video's duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BudgetTable", into = "BudgetTable")]
pub enum BudgetChoice {
    Count(usize),
    Ratio(f64),
}

impl Default for BudgetChoice {
    fn default() -> Self {
        BudgetChoice::Ratio(DEFAULT_BUDGET_RATIO)
    }
}

impl BudgetChoice {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            BudgetChoice::Count(0) => Err("budget count must be >= 1".into()),
            BudgetChoice::Ratio(r) if !(r > 0.0 && r <= 1.0) => Err(format!("budget ratio must lie in (0, 1], got {r}")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

impl TryFrom<BudgetTable> for BudgetChoice {
    type Error = String;
    fn try_from(t: BudgetTable) -> Result<Self, String> {
        let b = match (t.count, t.ratio) {
            (Some(c), None) => BudgetChoice::Count(c),
            (None, Some(r)) => BudgetChoice::Ratio(r),
            _ => return Err("budget needs exactly one of `count` or `ratio`".into()),
        };
        b.validate()?;
        Ok(b)
    }
}

impl From<BudgetChoice> for BudgetTable {
    fn from(b: BudgetChoice) -> Self {
        match b {
            BudgetChoice::Count(c) => BudgetTable { count: Some(c), ratio: None },
            BudgetChoice::Ratio(r) => BudgetTable { count: None, ratio: Some(r) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub budget: Option<BudgetChoice>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?).map_err(|m| CliError::new("config-error", format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let budget = match table.remove("budget") {
            Some(v) => Some(v.try_into::<BudgetChoice>().map_err(|e| format!("budget: {e}"))?),
            None => None,
        };
        let train: TrainConfig = toml::Value::Table(table).try_into().map_err(|e| e.to_string())?;
        train.validate().map_err(|e| e.to_string())?;
        Ok(Self { train, budget })
    }
}
