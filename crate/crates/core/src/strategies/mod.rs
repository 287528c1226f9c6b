//! Sampling and recommendation rules.
//!
//! A strategy is driven round by round: [`Strategy::select`] picks the arm for
//! round `t` using only rounds `1..t-1`, [`Strategy::observe`] feeds the
//! reward back, and [`Strategy::recommend`] returns the arm the strategy would
//! name if the budget ended at `t`.
//!
//! All randomness in `select` comes from the caller's sampling stream;
//! recommendation ties use a separate stream so that recording
//! recommendations never perturbs the sampling path.

mod baselines;
mod rs;

use std::fmt;
use std::str::FromStr;

pub use baselines::{AlphaElimination, SequentialHalving, UgapEb, UniformSampling};
pub use rs::{apply_mixing, estimated_allocation, RsStrategy};

use crate::error::{Error, Result};
use crate::estimators::{DEFAULT_C_MU, DEFAULT_C_SIGMA2};
use crate::models::BanditInstance;
use crate::rng::RandomStream;

/// Terminal estimator used by an RS strategy's recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Aipw,
    Dr,
    Ipw,
    SampleAverage,
}

/// Strategy identifiers accepted in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    RsAipw,
    RsDr,
    RsIpw,
    RsSa,
    Uniform,
    SequentialHalving,
    UgapEb,
    AlphaElimination,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::RsAipw,
        StrategyKind::RsDr,
        StrategyKind::RsIpw,
        StrategyKind::RsSa,
        StrategyKind::Uniform,
        StrategyKind::SequentialHalving,
        StrategyKind::UgapEb,
        StrategyKind::AlphaElimination,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::RsAipw => "rs-aipw",
            StrategyKind::RsDr => "rs-dr",
            StrategyKind::RsIpw => "rs-ipw",
            StrategyKind::RsSa => "rs-sa",
            StrategyKind::Uniform => "uniform",
            StrategyKind::SequentialHalving => "sh",
            StrategyKind::UgapEb => "ugap-eb",
            StrategyKind::AlphaElimination => "alpha-elim",
        }
    }

    /// The recommendation estimator for RS strategies, `None` for baselines.
    pub fn estimator(self) -> Option<Estimator> {
        match self {
            StrategyKind::RsAipw => Some(Estimator::Aipw),
            StrategyKind::RsDr => Some(Estimator::Dr),
            StrategyKind::RsIpw => Some(Estimator::Ipw),
            StrategyKind::RsSa => Some(Estimator::SampleAverage),
            _ => None,
        }
    }

    pub fn is_rs(self) -> bool {
        self.estimator().is_some()
    }
}

impl FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Constants of the RS family.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams {
    pub c_mu: f64,
    pub c_sigma2: f64,
    /// Propensity floor: if any estimated weight is `<= c_w` the round samples uniformly.
    pub c_w: f64,
    /// Round-robin pulls per arm before the plug-in allocation takes over.
    pub init_rounds_per_arm: usize,
    /// Mix the estimated allocation with uniform using weight `1/sqrt(t)`.
    pub gamma_mixing: bool,
    pub estimator: Estimator,
    /// Bisection tolerance for the per-round allocation.
    pub tol: f64,
    /// Replace plug-in means and the estimated allocation by the true means
    /// and the optimal allocation (diagnostics only).
    pub oracle: bool,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            c_mu: DEFAULT_C_MU,
            c_sigma2: DEFAULT_C_SIGMA2,
            c_w: 1e-3,
            init_rounds_per_arm: 1,
            gamma_mixing: false,
            estimator: Estimator::Aipw,
            tol: crate::allocation::DEFAULT_TOL,
            oracle: false,
        }
    }
}

impl StrategyParams {
    /// Two-armed replication setting: 100 initial rounds and mixing on.
    pub fn two_arm_replication() -> Self {
        Self {
            init_rounds_per_arm: 50,
            gamma_mixing: true,
            ..Self::default()
        }
    }

    /// Multi-armed replication setting: 10 initial pulls per arm, no mixing.
    pub fn multi_arm_replication() -> Self {
        Self {
            init_rounds_per_arm: 10,
            gamma_mixing: false,
            ..Self::default()
        }
    }

    /// Replication preset for `k` arms.
    pub fn replication(k: usize) -> Self {
        if k == 2 {
            Self::two_arm_replication()
        } else {
            Self::multi_arm_replication()
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.c_mu > 0.0) {
            return Err(Error::InvalidParams(format!("c_mu must be > 0, got {}", self.c_mu)));
        }
        if !(self.c_sigma2 >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "c_sigma2 must be >= 1, got {}",
                self.c_sigma2
            )));
        }
        if !(self.c_w > 0.0 && self.c_w < 1.0 / k as f64) {
            return Err(Error::InvalidParams(format!(
                "c_w must lie in (0, 1/K) = (0, {}), got {}",
                1.0 / k as f64,
                self.c_w
            )));
        }
        if self.init_rounds_per_arm == 0 {
            return Err(Error::InvalidParams("init_rounds_per_arm must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Default exploration constant of UGapEb's confidence radius `sqrt(a / N)`.
pub const DEFAULT_UGAP_EXPLORATION: f64 = 1.0;

/// A fully specified strategy: kind, parameters and the label used in output.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub params: StrategyParams,
    pub ugap_exploration: f64,
    pub label: String,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, params: StrategyParams) -> Self {
        let params = match kind.estimator() {
            Some(e) => params.with_estimator(e),
            None => params,
        };
        Self {
            kind,
            params,
            ugap_exploration: DEFAULT_UGAP_EXPLORATION,
            label: kind.id().to_string(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Builds the per-trial state for `instance` and budget `budget`.
    pub fn build(&self, instance: &BanditInstance, budget: usize) -> Result<Box<dyn Strategy>> {
        let k = instance.num_arms();
        Ok(match self.kind {
            StrategyKind::RsAipw | StrategyKind::RsDr | StrategyKind::RsIpw | StrategyKind::RsSa => {
                self.params.validate(k)?;
                Box::new(RsStrategy::new(instance, self.params.clone())?)
            }
            StrategyKind::Uniform => Box::new(UniformSampling::new(k)),
            StrategyKind::SequentialHalving => Box::new(SequentialHalving::new(k, budget)?),
            StrategyKind::UgapEb => Box::new(UgapEb::new(k, budget, self.ugap_exploration)?),
            StrategyKind::AlphaElimination => {
                let v = instance.variances();
                if k != 2 {
                    return Err(Error::WrongArmCount {
                        strategy: "alpha-elim",
                        expected: 2,
                        got: k,
                    });
                }
                Box::new(AlphaElimination::new(v[0].sqrt(), v[1].sqrt())?)
            }
        })
    }
}

/// Propensities and plug-in means in force at the most recent round.
#[derive(Debug, Clone, Copy)]
pub struct RoundRecord<'a> {
    pub propensity: &'a [f64],
    pub mu_hat: &'a [f64],
}

pub trait Strategy: Send {
    fn num_arms(&self) -> usize;

    /// Arm (0-based) to pull at round `t` (1-based).
    fn select(&mut self, t: usize, rng: &mut RandomStream) -> usize;

    /// Reward observed at round `t` for the arm returned by `select`.
    fn observe(&mut self, t: usize, arm: usize, reward: f64);

    /// Recommendation after `t` rounds.
    fn recommend(&self, t: usize, ties: &mut RandomStream) -> usize;

    /// Propensity and plug-in means used at the last selected round, for
    /// strategies that sample from an explicit distribution.
    fn round_record(&self) -> Option<RoundRecord<'_>> {
        None
    }
}

/// Argmax over `(arm, value)` pairs with uniformly random tie-breaking.
/// Returns `None` for an empty iterator.
pub(crate) fn argmax_random_ties(
    values: impl Iterator<Item = (usize, f64)>,
    ties: &mut RandomStream,
) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut candidates: Vec<usize> = Vec::new();
    for (arm, v) in values {
        if v > best || candidates.is_empty() {
            best = v;
            candidates.clear();
            candidates.push(arm);
        } else if v == best {
            candidates.push(arm);
        }
    }
    match candidates.len() {
        0 => None,
        1 => Some(candidates[0]),
        n => Some(candidates[ties.index(n)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_roundtrip() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.id().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("thompson".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(StrategyParams::default().validate(2).is_ok());
        let bad_cw = StrategyParams {
            c_w: 0.5,
            ..StrategyParams::default()
        };
        assert!(bad_cw.validate(2).is_err());
        assert!(bad_cw.validate(1).is_ok());
        let bad_init = StrategyParams {
            init_rounds_per_arm: 0,
            ..StrategyParams::default()
        };
        assert!(bad_init.validate(2).is_err());
    }

    #[test]
    fn argmax_ties() {
        let mut ties = RandomStream::new(1);
        let v = [0.2, 0.9, 0.9 - 1e-15];
        for _ in 0..50 {
            assert_eq!(
                argmax_random_ties(v.iter().copied().enumerate(), &mut ties),
                Some(1)
            );
        }
        let flat = [0.5; 3];
        let mut seen = [0usize; 3];
        for _ in 0..3000 {
            seen[argmax_random_ties(flat.iter().copied().enumerate(), &mut ties).unwrap()] += 1;
        }
        assert!(seen.iter().all(|&c| c > 850), "{seen:?}");
    }

    #[test]
    fn alpha_elimination_needs_two_arms() {
        let inst = BanditInstance::gaussian(&[1.0, 0.5, 0.2], &[1.0; 3]).unwrap();
        let spec = StrategySpec::new(StrategyKind::AlphaElimination, StrategyParams::default());
        assert!(matches!(
            spec.build(&inst, 100),
            Err(Error::WrongArmCount { got: 3, .. })
        ));
    }
}
