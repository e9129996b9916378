//! Scenario files: a JSON object naming the miners and coins, optional start
//! and target configurations, a scheduler, a mode and run options.
//!
//! ```json
//! {
//!   "miners": [{"id": "p1", "power": 2}, {"id": "p2", "power": "1/2"}],
//!   "coins": [{"id": "c1", "reward": 1}, {"id": "c2", "reward": "9/8"}],
//!   "initial": {"p1": "c1", "p2": "c1"},
//!   "scheduler": {"kind": "random", "seed": 7},
//!   "mode": "learn",
//!   "options": {"max_steps": 1000}
//! }
//! ```
//!
//! Quantities are JSON integers or `"n"` / `"n/d"` strings and are always
//! written back as strings.

use std::collections::BTreeMap;
use std::fmt;

use minegame_core::equilibria::{GenericMode, DEFAULT_ENUMERATION_BUDGET, DEFAULT_GENERIC_SAMPLES};
use minegame_core::rational::parse_rational;
use minegame_core::{Configuration, Game, Rational, SchedulerPolicy};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Learn,
    Design,
    Enumerate,
    Construct,
    Check,
    Counterexample,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Learn => "learn",
            Mode::Design => "design",
            Mode::Enumerate => "enumerate",
            Mode::Construct => "construct",
            Mode::Check => "check",
            Mode::Counterexample => "counterexample",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    #[default]
    FirstIndex,
    Random,
    BestImprovement,
    Adversarial,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::FirstIndex,
        SchedulerKind::Random,
        SchedulerKind::BestImprovement,
        SchedulerKind::Adversarial,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSpec {
    #[serde(default)]
    pub kind: SchedulerKind,
    #[serde(default)]
    pub seed: u64,
}

impl SchedulerSpec {
    pub fn policy(&self) -> SchedulerPolicy {
        match self.kind {
            SchedulerKind::FirstIndex => SchedulerPolicy::FirstIndex,
            SchedulerKind::Random => SchedulerPolicy::Random { seed: self.seed },
            SchedulerKind::BestImprovement => SchedulerPolicy::BestImprovement,
            SchedulerKind::Adversarial => SchedulerPolicy::Adversarial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenericCheck {
    Exhaustive,
    #[default]
    Sampled,
}

/// Validated run options with defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Learning step cap; `None` uses `min(|C|^n, 10^6)`.
    pub max_steps: Option<u64>,
    pub enumeration_budget: u64,
    pub strict_protocol: bool,
    pub generic: GenericCheck,
    pub generic_samples: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: None,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET as u64,
            strict_protocol: false,
            generic: GenericCheck::Sampled,
            generic_samples: DEFAULT_GENERIC_SAMPLES,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub game: Game,
    pub initial: Option<Configuration>,
    pub target: Option<Configuration>,
    pub scheduler: SchedulerSpec,
    pub mode: Mode,
    pub options: RunOptions,
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        self.scheduler.seed
    }

    pub fn generic_mode(&self) -> GenericMode {
        match self.options.generic {
            GenericCheck::Exhaustive => GenericMode::Exhaustive,
            GenericCheck::Sampled => GenericMode::Sampled {
                samples: self.options.generic_samples,
                seed: self.scheduler.seed,
            },
        }
    }

    pub fn to_document(&self) -> ScenarioDocument {
        let assignment = |s: &Configuration| {
            self.game
                .miners()
                .iter()
                .map(|m| (m.id.clone(), self.game.coins()[s.coin_of(m.index)].id.clone()))
                .collect()
        };
        let defaults = RunOptions::default();
        let o = &self.options;
        ScenarioDocument {
            miners: self
                .game
                .miners()
                .iter()
                .map(|m| MinerEntry {
                    id: m.id.clone(),
                    power: Quantity::from(&m.power),
                })
                .collect(),
            coins: self
                .game
                .coins()
                .iter()
                .map(|c| CoinEntry {
                    id: c.id.clone(),
                    reward: Quantity::from(self.game.reward(c.index)),
                })
                .collect(),
            initial: self.initial.as_ref().map(assignment),
            target: self.target.as_ref().map(assignment),
            scheduler: self.scheduler,
            mode: self.mode,
            options: OptionsEntry {
                max_steps: o.max_steps,
                enumeration_budget: (o.enumeration_budget != defaults.enumeration_budget)
                    .then_some(o.enumeration_budget),
                strict_protocol: o.strict_protocol,
                generic: (o.generic != defaults.generic).then_some(o.generic),
                generic_samples: (o.generic_samples != defaults.generic_samples).then_some(o.generic_samples),
            },
        }
    }

    /// Pretty JSON, the same text `parse_scenario` accepts.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }

    /// SHA-256 of the compact canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_document()).expect("scenario serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{:02x}", b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Integer(i64),
    Text(String),
}

impl From<&Rational> for Quantity {
    fn from(value: &Rational) -> Self {
        Quantity::Text(value.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerEntry {
    pub id: String,
    pub power: Quantity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinEntry {
    pub id: String,
    pub reward: Quantity,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict_protocol: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<GenericCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic_samples: Option<u64>,
}

/// The on-disk shape of a scenario, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub miners: Vec<MinerEntry>,
    pub coins: Vec<CoinEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub scheduler: SchedulerSpec,
    pub mode: Mode,
    #[serde(default)]
    pub options: OptionsEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {path}: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Field path of the offending value (`.` for the document root).
    pub fn path(&self) -> &str {
        match self {
            ScenarioError::Syntax { path, .. } | ScenarioError::Invalid { path, .. } => path,
        }
    }
}

/// Parses and validates a scenario.
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let document: ScenarioDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Syntax {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| ScenarioError::Syntax {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(document)
}

fn quantity(value: &Quantity, path: &str) -> Result<Rational, ScenarioError> {
    let parsed = match value {
        Quantity::Integer(i) => Rational::from_integer((*i).into()),
        Quantity::Text(text) => parse_rational(text).map_err(|e| ScenarioError::invalid(path, e.to_string()))?,
    };
    if !parsed.is_positive() {
        return Err(ScenarioError::invalid(path, format!("must be positive, got {}", parsed)));
    }
    Ok(parsed)
}

fn check_ids<'a>(ids: impl Iterator<Item = &'a str>, list: &str) -> Result<(), ScenarioError> {
    let mut seen = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        if id.is_empty() {
            return Err(ScenarioError::invalid(format!("{}[{}].id", list, i), "empty id"));
        }
        if let Some(first) = seen.insert(id, i) {
            return Err(ScenarioError::invalid(
                format!("{}[{}].id", list, i),
                format!("duplicate id `{}` (first at {}[{}])", id, list, first),
            ));
        }
    }
    Ok(())
}

/// Validates a parsed document.
pub fn validate(document: ScenarioDocument) -> Result<Scenario, ScenarioError> {
    if document.miners.is_empty() {
        return Err(ScenarioError::invalid("miners", "at least one miner is required"));
    }
    if document.coins.is_empty() {
        return Err(ScenarioError::invalid("coins", "at least one coin is required"));
    }
    check_ids(document.miners.iter().map(|m| m.id.as_str()), "miners")?;
    check_ids(document.coins.iter().map(|c| c.id.as_str()), "coins")?;
    let mut miners = Vec::with_capacity(document.miners.len());
    for (i, m) in document.miners.iter().enumerate() {
        miners.push((m.id.clone(), quantity(&m.power, &format!("miners[{}].power", i))?));
    }
    let mut coins = Vec::with_capacity(document.coins.len());
    for (i, c) in document.coins.iter().enumerate() {
        coins.push((c.id.clone(), quantity(&c.reward, &format!("coins[{}].reward", i))?));
    }
    let game = Game::new(miners, coins).map_err(|e| ScenarioError::invalid(".", e.to_string()))?;

    let configuration = |map: &BTreeMap<String, String>, field: &str| -> Result<Configuration, ScenarioError> {
        for miner in map.keys() {
            if game.miner_index(miner).is_none() {
                return Err(ScenarioError::invalid(
                    format!("{}.{}", field, miner),
                    format!("unknown miner `{}`", miner),
                ));
            }
        }
        let mut assignment = Vec::with_capacity(game.miner_count());
        for miner in game.miners() {
            let coin = map.get(&miner.id).ok_or_else(|| {
                ScenarioError::invalid(field, format!("no coin given for miner `{}`", miner.id))
            })?;
            let index = game.coin_index(coin).ok_or_else(|| {
                ScenarioError::invalid(format!("{}.{}", field, miner.id), format!("unknown coin `{}`", coin))
            })?;
            assignment.push(index);
        }
        Ok(Configuration::from_vec(assignment))
    };
    let initial = document.initial.as_ref().map(|m| configuration(m, "initial")).transpose()?;
    let target = document.target.as_ref().map(|m| configuration(m, "target")).transpose()?;
    if document.mode == Mode::Design && target.is_none() {
        return Err(ScenarioError::invalid("target", "required when mode is `design`"));
    }

    let defaults = RunOptions::default();
    let o = &document.options;
    if o.max_steps == Some(0) {
        return Err(ScenarioError::invalid("options.max_steps", "must be positive"));
    }
    Ok(Scenario {
        game,
        initial,
        target,
        scheduler: document.scheduler,
        mode: document.mode,
        options: RunOptions {
            max_steps: o.max_steps,
            enumeration_budget: o.enumeration_budget.unwrap_or(defaults.enumeration_budget),
            strict_protocol: o.strict_protocol,
            generic: o.generic.unwrap_or(defaults.generic),
            generic_samples: o.generic_samples.unwrap_or(defaults.generic_samples),
        },
    })
}
