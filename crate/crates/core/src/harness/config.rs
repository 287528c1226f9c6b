//! Declarative experiment description and its JSON form.
//!
//! ```json
//! {
//!   "scenario": "s1",
//!   "strategies": ["rs-aipw", {"id": "rs-ipw", "label": "ipw"}, "uniform"],
//!   "T": 3000,
//!   "trials": 10000,
//!   "seed": 7,
//!   "record_every": 10
//! }
//! ```
//!
//! Exactly one of `instance`, `scenario` or `case` selects the bandit. A case
//! is `{"id": "case5", "K": 3, "param": 0.1}` and draws a fresh instance per
//! trial. Strategy objects accept `preset` (`auto`, `generic`, `two-arm`,
//! `multi-arm`) and override fields `c_mu`, `c_sigma2`, `c_w`,
//! `init_rounds_per_arm`, `gamma_mixing`, `tol`, `oracle` and `exploration`.

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::{generate_case, BanditInstance, Case, Scenario};
use crate::rng::{RandomStream, TAG_INSTANCE};
use crate::strategies::{StrategyKind, StrategyParams, StrategySpec};

/// Rounds above which the default schedule stops recording every round.
pub const DENSE_RECORD_LIMIT: usize = 5000;

/// Where the bandit instance of each trial comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Explicit(BanditInstance),
    Scenario(Scenario),
    Case { case: Case, k: usize, param: f64 },
}

impl InstanceSpec {
    pub fn num_arms(&self) -> usize {
        match self {
            InstanceSpec::Explicit(inst) => inst.num_arms(),
            InstanceSpec::Scenario(_) => 2,
            InstanceSpec::Case { k, .. } => *k,
        }
    }

    /// Instance for the trial with seed `trial_seed`. Fixed specs ignore the seed.
    pub fn draw(&self, trial_seed: u64) -> Result<BanditInstance> {
        match self {
            InstanceSpec::Explicit(inst) => Ok(inst.clone()),
            InstanceSpec::Scenario(s) => Ok(s.instance()),
            InstanceSpec::Case { case, k, param } => {
                let mut rng = RandomStream::derive(trial_seed, TAG_INSTANCE);
                generate_case(*case, *k, *param, &mut rng)
            }
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, InstanceSpec::Case { .. })
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub strategies: Vec<StrategySpec>,
    pub budget: usize,
    pub trials: usize,
    pub seed: u64,
    /// Rounds at which recommendations are recorded; sorted, unique, within `1..=budget`.
    pub record_rounds: Vec<usize>,
    pub diagnostics: bool,
    /// Horizons for the diagnostics report.
    pub checkpoints: Vec<usize>,
    /// Sub-optimal arm (0-based) compared against the best arm in diagnostics;
    /// defaults to the arm with the largest sub-optimal mean.
    pub diag_arm: Option<usize>,
}

impl ExperimentConfig {
    /// Minimal config recording only the final round.
    pub fn new(
        instance: InstanceSpec,
        strategies: Vec<StrategySpec>,
        budget: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            instance,
            strategies,
            budget,
            trials,
            seed,
            record_rounds: vec![budget],
            diagnostics: false,
            checkpoints: vec![budget],
            diag_arm: None,
        }
    }

    pub fn with_record_rounds(mut self, rounds: Vec<usize>) -> Self {
        self.record_rounds = rounds;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<usize>) -> Self {
        self.checkpoints = checkpoints;
        self.diagnostics = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("`T` must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("`trials` must be >= 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("`strategies` must not be empty".into()));
        }
        check_schedule("record_rounds", &self.record_rounds, self.budget)?;
        check_schedule("checkpoints", &self.checkpoints, self.budget)?;
        let k = self.instance.num_arms();
        if let InstanceSpec::Explicit(inst) = &self.instance {
            inst.best_arm()
                .map_err(|_| Error::InvalidConfig("`instance` has no unique best arm".into()))?;
        }
        if let InstanceSpec::Case { case, k, param } = &self.instance {
            // Surface recipe errors at load time rather than inside a trial.
            generate_case(*case, *k, *param, &mut RandomStream::new(0))
                .map_err(|e| Error::InvalidConfig(format!("`case`: {e}")))?;
        }
        if let Some(a) = self.diag_arm {
            if a >= k {
                return Err(Error::InvalidConfig(format!(
                    "`diag_arm` {} out of range for {k} arms",
                    a + 1
                )));
            }
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if s.label.is_empty() || s.label.contains([',', '\n', '\r', '"']) {
                return Err(Error::InvalidConfig(format!(
                    "strategies[{i}]: label {:?} must be non-empty without commas, quotes or newlines",
                    s.label
                )));
            }
            if s.kind.is_rs() {
                s.params
                    .validate(k)
                    .map_err(|e| Error::InvalidConfig(format!("strategies[{i}]: {e}")))?;
            }
            if s.kind == StrategyKind::AlphaElimination && k != 2 {
                return Err(Error::InvalidConfig(format!(
                    "strategies[{i}]: alpha-elim needs exactly 2 arms, instance has {k}"
                )));
            }
        }
        for (i, a) in self.strategies.iter().enumerate() {
            if self.strategies[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate strategy label `{}`; set distinct `label`s",
                    a.label
                )));
            }
        }
        Ok(())
    }

    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        raw.into_config()
    }
}

fn check_schedule(name: &str, rounds: &[usize], budget: usize) -> Result<()> {
    if rounds.is_empty() {
        return Err(Error::InvalidConfig(format!("`{name}` must not be empty")));
    }
    if rounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!(
            "`{name}` must be strictly increasing"
        )));
    }
    if rounds[0] == 0 || *rounds.last().unwrap() > budget {
        return Err(Error::InvalidConfig(format!(
            "`{name}` must lie within 1..={budget}"
        )));
    }
    Ok(())
}

/// Rounds `every, 2*every, ...` plus the final round.
pub fn schedule_every(every: usize, budget: usize) -> Vec<usize> {
    let mut rounds: Vec<usize> = (every..=budget).step_by(every.max(1)).collect();
    if rounds.last() != Some(&budget) {
        rounds.push(budget);
    }
    rounds
}

/// Every round up to [`DENSE_RECORD_LIMIT`], otherwise about 5000 evenly spaced rounds.
pub fn default_schedule(budget: usize) -> Vec<usize> {
    schedule_every(budget.div_ceil(DENSE_RECORD_LIMIT).max(1), budget)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    instance: Option<BanditInstance>,
    scenario: Option<String>,
    case: Option<RawCase>,
    strategies: Vec<Value>,
    #[serde(rename = "T")]
    budget: usize,
    trials: usize,
    seed: u64,
    record_every: Option<usize>,
    record_rounds: Option<Vec<usize>>,
    #[serde(default)]
    diagnostics: bool,
    checkpoints: Option<Vec<usize>>,
    /// 1-based.
    diag_arm: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    id: String,
    #[serde(rename = "K")]
    k: usize,
    param: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStrategy {
    id: String,
    label: Option<String>,
    preset: Option<String>,
    c_mu: Option<f64>,
    c_sigma2: Option<f64>,
    c_w: Option<f64>,
    init_rounds_per_arm: Option<usize>,
    gamma_mixing: Option<bool>,
    tol: Option<f64>,
    oracle: Option<bool>,
    exploration: Option<f64>,
}

impl RawStrategy {
    fn into_spec(self, k: usize) -> Result<StrategySpec> {
        let kind: StrategyKind = self.id.parse()?;
        let mut params = match self.preset.as_deref().unwrap_or("auto") {
            "auto" => StrategyParams::replication(k),
            "generic" => StrategyParams::default(),
            "two-arm" => StrategyParams::two_arm_replication(),
            "multi-arm" => StrategyParams::multi_arm_replication(),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset `{other}` (expected auto, generic, two-arm, multi-arm)"
                )))
            }
        };
        if let Some(v) = self.c_mu {
            params.c_mu = v;
        }
        if let Some(v) = self.c_sigma2 {
            params.c_sigma2 = v;
        }
        if let Some(v) = self.c_w {
            params.c_w = v;
        }
        if let Some(v) = self.init_rounds_per_arm {
            params.init_rounds_per_arm = v;
        }
        if let Some(v) = self.gamma_mixing {
            params.gamma_mixing = v;
        }
        if let Some(v) = self.tol {
            params.tol = v;
        }
        if let Some(v) = self.oracle {
            if v && !kind.is_rs() {
                return Err(Error::InvalidConfig(format!(
                    "`oracle` only applies to rs-* strategies, not {kind}"
                )));
            }
            params.oracle = v;
        }
        let mut spec = StrategySpec::new(kind, params);
        if let Some(a) = self.exploration {
            spec.ugap_exploration = a;
        }
        if let Some(label) = self.label {
            spec.label = label;
        } else if spec.params.oracle {
            spec.label = format!("{}-oracle", kind.id());
        }
        Ok(spec)
    }
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let instance = match (self.instance, self.scenario, self.case) {
            (Some(inst), None, None) => InstanceSpec::Explicit(inst),
            (None, Some(s), None) => InstanceSpec::Scenario(
                s.parse()
                    .map_err(|e| Error::InvalidConfig(format!("`scenario`: {e}")))?,
            ),
            (None, None, Some(c)) => InstanceSpec::Case {
                case: c
                    .id
                    .parse()
                    .map_err(|e| Error::InvalidConfig(format!("`case.id`: {e}")))?,
                k: c.k,
                param: c.param,
            },
            (None, None, None) => {
                return Err(Error::InvalidConfig(
                    "one of `instance`, `scenario` or `case` is required".into(),
                ))
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "`instance`, `scenario` and `case` are mutually exclusive".into(),
                ))
            }
        };
        let k = instance.num_arms();

        let strategies = self
            .strategies
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let raw = match v {
                    Value::String(id) => RawStrategy {
                        id,
                        label: None,
                        preset: None,
                        c_mu: None,
                        c_sigma2: None,
                        c_w: None,
                        init_rounds_per_arm: None,
                        gamma_mixing: None,
                        tol: None,
                        oracle: None,
                        exploration: None,
                    },
                    other => serde_json::from_value(other)
                        .map_err(|e| Error::InvalidConfig(format!("strategies[{i}]: {e}")))?,
                };
                raw.into_spec(k)
                    .map_err(|e| match e {
                        Error::InvalidConfig(m) => Error::InvalidConfig(format!("strategies[{i}]: {m}")),
                        other => Error::InvalidConfig(format!("strategies[{i}]: {other}")),
                    })
            })
            .collect::<Result<Vec<_>>>()?;

        let record_rounds = match (self.record_every, self.record_rounds) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "`record_every` and `record_rounds` are mutually exclusive".into(),
                ))
            }
            (Some(0), None) => {
                return Err(Error::InvalidConfig("`record_every` must be >= 1".into()))
            }
            (Some(n), None) => schedule_every(n, self.budget.max(1)),
            (None, Some(r)) => r,
            (None, None) => default_schedule(self.budget.max(1)),
        };
        let diag_arm = match self.diag_arm {
            Some(0) => {
                return Err(Error::InvalidConfig(
                    "`diag_arm` is 1-based and must be >= 1".into(),
                ))
            }
            other => other.map(|a| a - 1),
        };

        let cfg = ExperimentConfig {
            instance,
            strategies,
            budget: self.budget,
            trials: self.trials,
            seed: self.seed,
            record_rounds,
            diagnostics: self.diagnostics,
            checkpoints: self.checkpoints.unwrap_or_else(|| vec![self.budget]),
            diag_arm,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::Estimator;

    #[test]
    fn parses_scenario_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"scenario":"s1","strategies":["rs-aipw",{"id":"rs-ipw","label":"ipw","gamma_mixing":false}],
                "T":100,"trials":5,"seed":7,"record_every":30}"#,
        )
        .unwrap();
        assert_eq!(cfg.instance, InstanceSpec::Scenario(Scenario::S1));
        assert_eq!(cfg.record_rounds, vec![30, 60, 90, 100]);
        assert_eq!(cfg.strategies[0].params.init_rounds_per_arm, 50);
        assert!(cfg.strategies[0].params.gamma_mixing);
        assert_eq!(cfg.strategies[1].label, "ipw");
        assert_eq!(cfg.strategies[1].params.estimator, Estimator::Ipw);
        assert!(!cfg.strategies[1].params.gamma_mixing);
        assert_eq!(cfg.checkpoints, vec![100]);
    }

    #[test]
    fn parses_case_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"case":{"id":"case5","K":3,"param":0.1},"strategies":["rs-dr","sh","ugap-eb"],
                "T":2500,"trials":10,"seed":1}"#,
        )
        .unwrap();
        assert!(cfg.instance.is_random());
        assert_eq!(cfg.strategies[0].params.init_rounds_per_arm, 10);
        assert_eq!(cfg.record_rounds.len(), 2500);
    }

    #[test]
    fn missing_budget_names_field() {
        let err = ExperimentConfig::from_json(
            r#"{"scenario":"s1","strategies":["uniform"],"trials":5,"seed":7}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("`T`"), "{err}");
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"strategies":["uniform"],"T":10,"trials":1,"seed":0}"#,
            r#"{"scenario":"s1","case":{"id":"case1","K":3,"param":0.1},"strategies":["uniform"],"T":10,"trials":1,"seed":0}"#,
            r#"{"scenario":"s9","strategies":["uniform"],"T":10,"trials":1,"seed":0}"#,
            r#"{"scenario":"s1","strategies":["nope"],"T":10,"trials":1,"seed":0}"#,
            r#"{"scenario":"s1","strategies":["uniform"],"T":10,"trials":0,"seed":0}"#,
            r#"{"scenario":"s1","strategies":["uniform"],"T":10,"trials":1,"seed":0,"record_rounds":[5,3]}"#,
            r#"{"scenario":"s1","strategies":["uniform"],"T":10,"trials":1,"seed":0,"record_rounds":[11]}"#,
            r#"{"scenario":"s1","strategies":["uniform"],"T":10,"trials":1,"seed":0,"bogus":1}"#,
            r#"{"scenario":"s1","strategies":["uniform","uniform"],"T":10,"trials":1,"seed":0}"#,
            r#"{"scenario":"s1","strategies":[{"id":"rs-aipw","c_w":0.9}],"T":10,"trials":1,"seed":0}"#,
            r#"{"case":{"id":"case1","K":3,"param":0.3},"strategies":["uniform"],"T":10,"trials":1,"seed":0}"#,
            r#"{"case":{"id":"case1","K":3,"param":0.1},"strategies":["alpha-elim"],"T":10,"trials":1,"seed":0}"#,
            r#"{"instance":{"arms":[{"dist":"bernoulli","p":0.5},{"dist":"bernoulli","p":0.5}]},"strategies":["uniform"],"T":10,"trials":1,"seed":0}"#,
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn schedules() {
        assert_eq!(schedule_every(3, 10), vec![3, 6, 9, 10]);
        assert_eq!(schedule_every(5, 10), vec![5, 10]);
        assert_eq!(default_schedule(4), vec![1, 2, 3, 4]);
        let long = default_schedule(12_000);
        assert_eq!(long[0], 3);
        assert_eq!(*long.last().unwrap(), 12_000);
    }
}
