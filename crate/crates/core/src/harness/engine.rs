//! Trial execution and parallel aggregation.
//!
//! Trial `i` of an experiment with base seed `s` uses the seed
//! `trial_seed(s, i)`. From it three independent streams are derived:
//! `TAG_INSTANCE` draws the instance of a case recipe, `TAG_SAMPLING` drives
//! arm selection and rewards, and `TAG_TIES` breaks recommendation ties.
//! Every strategy of a trial starts from the same streams.
//!
//! Trials are evaluated in chunks on a rayon pool; per-trial results are
//! folded in trial-index order, so the thread count never changes the output.

use rayon::prelude::*;
use rayon::ThreadPool;

use super::config::{ExperimentConfig, InstanceSpec};
use super::diagnostics::{empirical_exponent, runner_up, Comparison};
use super::report::{DiagnosticsReport, DiagnosticsRow, ResultRow, ResultTable};
use crate::allocation::{self, Allocation};
use crate::error::{Error, Result};
use crate::models::BanditInstance;
use crate::rng::{trial_seed, RandomStream, TAG_SAMPLING, TAG_TIES};
use crate::strategies::StrategySpec;

/// Environment variable capping the worker count; `0` or unset means automatic.
pub const THREADS_ENV: &str = "BAI_THREADS";

const CHUNK: usize = 256;

/// Per-round record of one trial: pulled arm, reward, and the propensity and
/// plug-in means in force when the arm was drawn.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    k: usize,
    arms: Vec<usize>,
    rewards: Vec<f64>,
    propensity: Vec<f64>,
    mu_hat: Vec<f64>,
}

impl Trace {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    fn with_capacity(k: usize, rounds: usize) -> Self {
        Self {
            k,
            arms: Vec::with_capacity(rounds),
            rewards: Vec::with_capacity(rounds),
            propensity: Vec::with_capacity(rounds * k),
            mu_hat: Vec::with_capacity(rounds * k),
        }
    }

    pub fn push(&mut self, arm: usize, reward: f64, propensity: &[f64], mu_hat: &[f64]) {
        assert_eq!(propensity.len(), self.k);
        assert_eq!(mu_hat.len(), self.k);
        self.arms.push(arm);
        self.rewards.push(reward);
        self.propensity.extend_from_slice(propensity);
        self.mu_hat.extend_from_slice(mu_hat);
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn view(&self) -> TraceView<'_> {
        self.prefix(self.len())
    }

    /// The first `rounds` rounds.
    pub fn prefix(&self, rounds: usize) -> TraceView<'_> {
        let n = rounds.min(self.len());
        TraceView {
            k: self.k,
            arms: &self.arms[..n],
            rewards: &self.rewards[..n],
            propensity: &self.propensity[..n * self.k],
            mu_hat: &self.mu_hat[..n * self.k],
        }
    }
}

/// Borrowed prefix of a [`Trace`]. Rounds are indexed from 0.
#[derive(Debug, Clone, Copy)]
pub struct TraceView<'a> {
    k: usize,
    pub arms: &'a [usize],
    pub rewards: &'a [f64],
    propensity: &'a [f64],
    mu_hat: &'a [f64],
}

impl<'a> TraceView<'a> {
    pub fn num_arms(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn propensity(&self, t: usize) -> &'a [f64] {
        &self.propensity[t * self.k..(t + 1) * self.k]
    }

    pub fn mu_hat(&self, t: usize) -> &'a [f64] {
        &self.mu_hat[t * self.k..(t + 1) * self.k]
    }

    /// Pull counts over the view.
    pub fn pulls(&self) -> Vec<u64> {
        let mut n = vec![0; self.k];
        for &a in self.arms {
            n[a] += 1;
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Recommendation (0-based) at each round of the record schedule.
    pub recommendations: Vec<usize>,
    /// Pull counts after the last round.
    pub pulls: Vec<u64>,
    /// Present when requested and the strategy exposes its propensities.
    pub trace: Option<Trace>,
}

/// Runs one strategy for `budget` rounds on `instance`.
///
/// `record_rounds` must be sorted, unique and within `1..=budget`.
pub fn run_trial(
    spec: &StrategySpec,
    instance: &BanditInstance,
    budget: usize,
    seed: u64,
    record_rounds: &[usize],
    keep_trace: bool,
) -> Result<TrialOutcome> {
    if record_rounds.windows(2).any(|w| w[0] >= w[1])
        || record_rounds.first() == Some(&0)
        || record_rounds.last().is_some_and(|&r| r > budget)
    {
        return Err(Error::InvalidConfig(format!(
            "record rounds must be increasing within 1..={budget}"
        )));
    }
    let k = instance.num_arms();
    let mut strategy = spec.build(instance, budget)?;
    let mut sampling = RandomStream::derive(seed, TAG_SAMPLING);
    let mut ties = RandomStream::derive(seed, TAG_TIES);
    let mut trace = keep_trace.then(|| Trace::with_capacity(k, budget));
    let mut recommendations = Vec::with_capacity(record_rounds.len());
    let mut pulls = vec![0u64; k];
    let mut next = record_rounds.iter().peekable();

    for t in 1..=budget {
        let arm = strategy.select(t, &mut sampling);
        let reward = instance.arms()[arm].sample(&mut sampling);
        if let Some(tr) = trace.as_mut() {
            match strategy.round_record() {
                Some(rec) => tr.push(arm, reward, rec.propensity, rec.mu_hat),
                None => return Err(Error::NotDiagnosable(spec.label.clone())),
            }
        }
        strategy.observe(t, arm, reward);
        pulls[arm] += 1;
        if next.peek() == Some(&&t) {
            next.next();
            recommendations.push(strategy.recommend(t, &mut ties));
        }
    }
    Ok(TrialOutcome {
        recommendations,
        pulls,
        trace,
    })
}

/// Runs experiments on a worker pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Engine {
    /// Worker count; 0 lets rayon decide.
    pub threads: usize,
}

impl Engine {
    pub fn new(threads: usize) -> Self {
        Self { threads }
    }

    /// Reads [`THREADS_ENV`].
    pub fn from_env() -> Result<Self> {
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Self::new).map_err(|_| {
                Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))
            }),
            _ => Ok(Self::default()),
        }
    }

    fn pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))
    }

    /// Evaluates `trial(i)` for `i in 0..n` in parallel and feeds the results to
    /// `fold` in index order.
    fn for_each_trial<T, F, G>(&self, n: usize, trial: F, mut fold: G) -> Result<()>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync,
        G: FnMut(usize, T),
    {
        let pool = self.pool()?;
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let chunk: Vec<Result<T>> =
                pool.install(|| (start..end).into_par_iter().map(&trial).collect());
            for (i, r) in (start..end).zip(chunk) {
                fold(i, r?);
            }
            start = end;
        }
        Ok(())
    }

    /// Misidentification frequency of every strategy at every recorded round.
    pub fn run_experiment(&self, config: &ExperimentConfig) -> Result<ResultTable> {
        config.validate()?;
        let rounds = &config.record_rounds;
        let mut wrong = vec![vec![0u64; rounds.len()]; config.strategies.len()];
        self.for_each_trial(
            config.trials,
            |i| {
                let seed = trial_seed(config.seed, i as u64);
                let instance = config.instance.draw(seed)?;
                let best = instance.best_arm()?;
                config
                    .strategies
                    .iter()
                    .map(|s| {
                        let out = run_trial(s, &instance, config.budget, seed, rounds, false)?;
                        Ok(out.recommendations.iter().map(|&r| r != best).collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()
            },
            |_, per_strategy| {
                for (acc, flags) in wrong.iter_mut().zip(per_strategy) {
                    for (c, f) in acc.iter_mut().zip(flags) {
                        *c += f as u64;
                    }
                }
            },
        )?;

        let n = config.trials;
        let mut rows = Vec::with_capacity(wrong.len() * rounds.len());
        for (spec, counts) in config.strategies.iter().zip(&wrong) {
            for (&t, &c) in rounds.iter().zip(counts) {
                rows.push(ResultRow::new(spec.label.clone(), t, c, n));
            }
        }
        Ok(ResultTable { rows })
    }

    /// Diagnostics of every strategy at each of `config.checkpoints`.
    ///
    /// All strategies must be of the RS family. Each trial compares the best arm
    /// with `config.diag_arm`, or with the arm of largest sub-optimal mean.
    pub fn estimate_v_t(&self, config: &ExperimentConfig) -> Result<DiagnosticsReport> {
        config.validate()?;
        if let Some(s) = config.strategies.iter().find(|s| !s.kind.is_rs()) {
            return Err(Error::NotDiagnosable(s.label.clone()));
        }
        let checkpoints = &config.checkpoints;
        let budget = *checkpoints.last().expect("validated");
        let k = config.instance.num_arms();
        let fixed = match &config.instance {
            InstanceSpec::Case { .. } => None,
            other => Some(Setup::new(&other.draw(0)?, config.diag_arm)?),
        };

        let ns = config.strategies.len();
        let nc = checkpoints.len();
        let mut acc = vec![vec![CheckpointSums::new(k); nc]; ns];
        self.for_each_trial(
            config.trials,
            |i| {
                let seed = trial_seed(config.seed, i as u64);
                let instance = config.instance.draw(seed)?;
                let drawn;
                let setup = match &fixed {
                    Some(s) => s,
                    None => {
                        drawn = Setup::new(&instance, config.diag_arm)?;
                        &drawn
                    }
                };
                config
                    .strategies
                    .iter()
                    .map(|s| {
                        let out = run_trial(s, &instance, budget, seed, checkpoints, true)?;
                        let trace = out.trace.ok_or(Error::MissingTrace)?;
                        Ok(checkpoints
                            .iter()
                            .zip(&out.recommendations)
                            .map(|(&t, &rec)| setup.evaluate(&trace, t, rec))
                            .collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()
            },
            |_, per_strategy| {
                for (sums, samples) in acc.iter_mut().zip(per_strategy) {
                    for (s, x) in sums.iter_mut().zip(samples) {
                        s.add(&x);
                    }
                }
            },
        )?;

        let n = config.trials;
        let mut rows = Vec::with_capacity(ns * nc);
        for (spec, sums) in config.strategies.iter().zip(&acc) {
            for (&t, s) in checkpoints.iter().zip(sums) {
                let p_hat = s.wrong as f64 / n as f64;
                rows.push(DiagnosticsRow {
                    strategy: spec.label.clone(),
                    t,
                    v_hat: s.dev.mean(n),
                    v_stderr: s.dev.stderr(n),
                    shares: s.shares.iter().map(|x| x / n as f64).collect(),
                    xi_mean: s.z.mean(n),
                    xi_stderr: s.z.stderr(n),
                    p_hat,
                    emp_exponent: empirical_exponent(p_hat, t, n)?,
                    gamma_star: s.gamma_star / n as f64,
                    trials: n,
                });
            }
        }
        Ok(DiagnosticsReport { k, rows })
    }
}

/// Per-instance constants of the diagnostics.
struct Setup {
    best: usize,
    cmp: Comparison,
    gamma_star: f64,
}

impl Setup {
    fn new(instance: &BanditInstance, diag_arm: Option<usize>) -> Result<Self> {
        let sol = allocation::solve_instance(instance, allocation::DEFAULT_TOL)?;
        let arm = match diag_arm {
            Some(a) => a,
            None => runner_up(instance)?,
        };
        let w_star: Allocation = sol.allocation;
        Ok(Self {
            best: sol.best,
            cmp: Comparison::new(instance, &w_star, arm)?,
            gamma_star: sol.gamma_star,
        })
    }

    fn evaluate(&self, trace: &Trace, t: usize, recommendation: usize) -> CheckpointSample {
        let view = trace.prefix(t);
        let z: f64 = (0..t).map(|s| self.cmp.increment(&view, s)).sum::<f64>()
            / ((t as f64).sqrt() * self.cmp.sigma_tilde_sq.sqrt());
        CheckpointSample {
            dev: self.cmp.moment_deviation(&view),
            z,
            pulls: view.pulls(),
            t,
            wrong: recommendation != self.best,
            gamma_star: self.gamma_star,
        }
    }
}

struct CheckpointSample {
    dev: f64,
    z: f64,
    pulls: Vec<u64>,
    t: usize,
    wrong: bool,
    gamma_star: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self, n: usize) -> f64 {
        self.sum / n as f64
    }

    /// Standard error of the mean; 0 for a single trial.
    fn stderr(&self, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let m = self.mean(n);
        let var = ((self.sum_sq - n as f64 * m * m) / (n - 1) as f64).max(0.0);
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
struct CheckpointSums {
    dev: Moments,
    z: Moments,
    shares: Vec<f64>,
    wrong: u64,
    gamma_star: f64,
}

impl CheckpointSums {
    fn new(k: usize) -> Self {
        Self {
            dev: Moments::default(),
            z: Moments::default(),
            shares: vec![0.0; k],
            wrong: 0,
            gamma_star: 0.0,
        }
    }

    fn add(&mut self, x: &CheckpointSample) {
        self.dev.add(x.dev);
        self.z.add(x.z);
        for (s, &c) in self.shares.iter_mut().zip(&x.pulls) {
            *s += c as f64 / x.t as f64;
        }
        self.wrong += x.wrong as u64;
        self.gamma_star += x.gamma_star;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Scenario;
    use crate::strategies::{StrategyKind, StrategyParams};

    fn spec(kind: StrategyKind) -> StrategySpec {
        StrategySpec::new(kind, StrategyParams::default())
    }

    #[test]
    fn uniform_alternates() {
        let inst = Scenario::S1.instance();
        let out = run_trial(&spec(StrategyKind::Uniform), &inst, 4, 3, &[4], false).unwrap();
        assert_eq!(out.pulls, vec![2, 2]);
        let rs = StrategySpec::new(
            StrategyKind::RsAipw,
            StrategyParams {
                init_rounds_per_arm: 2,
                ..StrategyParams::default()
            },
        );
        let out = run_trial(&rs, &inst, 4, 3, &[4], true).unwrap();
        assert_eq!(out.trace.unwrap().arms, vec![0, 1, 0, 1]);
    }

    #[test]
    fn noiseless_instance_is_solved() {
        let inst = BanditInstance::bernoulli(&[1.0, 0.0]).unwrap();
        // Alpha-elimination needs positive standard deviations to define its ratio.
        for kind in StrategyKind::ALL
            .into_iter()
            .filter(|&k| k != StrategyKind::AlphaElimination)
        {
            let s = StrategySpec::new(kind, StrategyParams::replication(2));
            let out = run_trial(&s, &inst, 100, 11, &[100], false).unwrap();
            assert_eq!(out.recommendations, vec![0], "{kind}");
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let inst = Scenario::S3.instance();
        let s = spec(StrategyKind::RsAipw);
        let a = run_trial(&s, &inst, 300, 5, &[100, 300], true).unwrap();
        let b = run_trial(&s, &inst, 300, 5, &[100, 300], true).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&s, &inst, 300, 6, &[100, 300], true).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn trace_needs_propensities() {
        let inst = Scenario::S1.instance();
        assert!(matches!(
            run_trial(&spec(StrategyKind::Uniform), &inst, 10, 1, &[10], true),
            Err(Error::NotDiagnosable(_))
        ));
    }

    #[test]
    fn rejects_bad_schedule() {
        let inst = Scenario::S1.instance();
        let s = spec(StrategyKind::Uniform);
        assert!(run_trial(&s, &inst, 10, 1, &[11], false).is_err());
        assert!(run_trial(&s, &inst, 10, 1, &[0], false).is_err());
        assert!(run_trial(&s, &inst, 10, 1, &[5, 5], false).is_err());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = ExperimentConfig::new(
            InstanceSpec::Case {
                case: crate::models::Case::Case1,
                k: 3,
                param: 0.1,
            },
            vec![spec(StrategyKind::RsAipw), spec(StrategyKind::SequentialHalving)],
            200,
            300,
            9,
        )
        .with_record_rounds(vec![50, 200]);
        let a = Engine::new(1).run_experiment(&cfg).unwrap();
        let b = Engine::new(3).run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let cfg = cfg.with_checkpoints(vec![100, 200]);
        let cfg = ExperimentConfig {
            strategies: vec![spec(StrategyKind::RsAipw)],
            ..cfg
        };
        let a = Engine::new(1).estimate_v_t(&cfg).unwrap();
        let b = Engine::new(4).estimate_v_t(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn single_noiseless_trial_is_zero_or_one() {
        let inst = BanditInstance::bernoulli(&[1.0, 0.0]).unwrap();
        let cfg = ExperimentConfig::new(
            InstanceSpec::Explicit(inst),
            vec![spec(StrategyKind::Uniform)],
            10,
            1,
            0,
        )
        .with_record_rounds((1..=10).collect());
        let table = Engine::default().run_experiment(&cfg).unwrap();
        assert!(table.rows.iter().all(|r| r.p_hat == 0.0 || r.p_hat == 1.0));
        assert_eq!(table.rows[9].p_hat, 0.0);
    }

    #[test]
    fn diagnostics_reject_baselines() {
        let cfg = ExperimentConfig::new(
            InstanceSpec::Scenario(Scenario::S1),
            vec![spec(StrategyKind::Uniform)],
            10,
            1,
            0,
        );
        assert!(matches!(
            Engine::default().estimate_v_t(&cfg),
            Err(Error::NotDiagnosable(_))
        ));
    }
}
