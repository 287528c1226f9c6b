//! Random sampling with the plug-in optimal allocation, followed by an
//! AIPW, DR, IPW or sample-average recommendation.

use super::{argmax_random_ties, Estimator, RoundRecord, Strategy, StrategyParams};
use crate::allocation::{self, Allocation};
use crate::error::Result;
use crate::estimators::{clipped_mean, clipped_variance, AipwAccumulator, RunningArmStats};
use crate::models::{unique_argmax, BanditInstance};
use crate::rng::RandomStream;

/// Plug-in allocation from clipped estimates.
///
/// The arm with the largest clipped mean plays the role of the best arm.
/// When that maximum is tied, or the bisection fails, the result is uniform.
pub fn estimated_allocation(stats: &RunningArmStats, params: &StrategyParams) -> Allocation {
    let k = stats.num_arms();
    let mu: Vec<f64> = (0..k).map(|a| clipped_mean(stats, a, params.c_mu)).collect();
    let var: Vec<f64> = (0..k)
        .map(|a| clipped_variance(stats, a, params.c_sigma2))
        .collect();
    let mut w = vec![0.0; k];
    allocation_from_estimates(&mu, &var, params.tol, &mut w);
    Allocation::new(w).unwrap_or_else(|_| Allocation::uniform(k))
}

fn allocation_from_estimates(mu: &[f64], var: &[f64], tol: f64, out: &mut [f64]) {
    let uniform = 1.0 / mu.len() as f64;
    match unique_argmax(mu) {
        Some(best) => {
            if allocation::solve_into(mu, var, best, tol, out).is_err() {
                out.fill(uniform);
            }
        }
        None => out.fill(uniform),
    }
}

/// Mixes `w` in place with the uniform distribution using weight `1/sqrt(t)`.
pub fn apply_mixing(w: &mut [f64], t: usize) {
    let gamma = 1.0 / (t as f64).sqrt();
    let anchor = 1.0 / w.len() as f64;
    for x in w.iter_mut() {
        *x = gamma * anchor + (1.0 - gamma) * *x;
    }
}

/// State of one RS trial.
#[derive(Debug, Clone)]
pub struct RsStrategy {
    params: StrategyParams,
    k: usize,
    stats: RunningArmStats,
    aipw: AipwAccumulator,
    /// DR or IPW sums when the recommendation uses them.
    alt: Option<AipwAccumulator>,
    mu_hat: Vec<f64>,
    sigma2_hat: Vec<f64>,
    propensity: Vec<f64>,
    oracle: Option<(Vec<f64>, Vec<f64>)>,
}

impl RsStrategy {
    pub fn new(instance: &BanditInstance, params: StrategyParams) -> Result<Self> {
        let k = instance.num_arms();
        params.validate(k)?;
        let oracle = if params.oracle {
            let sol = allocation::solve_instance(instance, allocation::DEFAULT_TOL)?;
            Some((instance.means(), sol.allocation.into_inner()))
        } else {
            None
        };
        let alt = match params.estimator {
            Estimator::Dr | Estimator::Ipw => Some(AipwAccumulator::new(k)),
            _ => None,
        };
        Ok(Self {
            params,
            k,
            stats: RunningArmStats::new(k),
            aipw: AipwAccumulator::new(k),
            alt,
            mu_hat: vec![0.0; k],
            sigma2_hat: vec![1.0; k],
            propensity: vec![1.0 / k as f64; k],
            oracle,
        })
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn stats(&self) -> &RunningArmStats {
        &self.stats
    }

    pub fn aipw(&self) -> &AipwAccumulator {
        &self.aipw
    }

    /// Propensity used at the last selected round.
    pub fn propensity(&self) -> &[f64] {
        &self.propensity
    }

    fn init_rounds(&self) -> usize {
        self.k * self.params.init_rounds_per_arm
    }

    /// Computes the sampling distribution of round `t` from rounds `1..t-1`.
    /// Returns the deterministic arm during the round-robin phase.
    fn prepare_round(&mut self, t: usize) -> Option<usize> {
        let k = self.k;
        if let Some((means, w_star)) = &self.oracle {
            self.mu_hat.copy_from_slice(means);
            self.propensity.copy_from_slice(w_star);
            return None;
        }
        for a in 0..k {
            self.mu_hat[a] = clipped_mean(&self.stats, a, self.params.c_mu);
        }
        let uniform = 1.0 / k as f64;
        if t <= self.init_rounds() {
            self.propensity.fill(uniform);
            return Some((t - 1) % k);
        }
        for a in 0..k {
            self.sigma2_hat[a] = clipped_variance(&self.stats, a, self.params.c_sigma2);
        }
        allocation_from_estimates(
            &self.mu_hat,
            &self.sigma2_hat,
            self.params.tol,
            &mut self.propensity,
        );
        if self.params.gamma_mixing {
            apply_mixing(&mut self.propensity, t);
        }
        if self.propensity.iter().any(|&w| w <= self.params.c_w) {
            self.propensity.fill(uniform);
        }
        None
    }
}

impl Strategy for RsStrategy {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select(&mut self, t: usize, rng: &mut RandomStream) -> usize {
        match self.prepare_round(t) {
            Some(arm) => arm,
            None => rng.categorical(&self.propensity),
        }
    }

    fn observe(&mut self, t: usize, arm: usize, reward: f64) {
        for a in 0..self.k {
            let mu = self.mu_hat[a];
            let x_hat = if a == arm {
                (reward - mu) / self.propensity[a] + mu
            } else {
                mu
            };
            self.aipw.add(a, x_hat);
        }
        self.aipw.end_round();

        if let Some(acc) = self.alt.as_mut() {
            match self.params.estimator {
                Estimator::Ipw => {
                    acc.add(arm, reward / self.propensity[arm]);
                }
                Estimator::Dr => {
                    let prior_pulls = self.stats.count(arm);
                    // Before the pulled arm has any history the realised frequency is
                    // zero; fall back to the propensity actually used.
                    let p = if t > 1 && prior_pulls > 0 {
                        prior_pulls as f64 / (t - 1) as f64
                    } else {
                        self.propensity[arm]
                    };
                    for a in 0..self.k {
                        let mu = self.mu_hat[a];
                        let x_hat = if a == arm { (reward - mu) / p + mu } else { mu };
                        acc.add(a, x_hat);
                    }
                }
                _ => unreachable!(),
            }
            acc.end_round();
        }
        self.stats.record(arm, reward);
    }

    fn recommend(&self, _t: usize, ties: &mut RandomStream) -> usize {
        let pick = match self.params.estimator {
            Estimator::Aipw => {
                argmax_random_ties((0..self.k).map(|a| (a, self.aipw.estimate(a))), ties)
            }
            Estimator::Dr | Estimator::Ipw => {
                let acc = self.alt.as_ref().expect("alternate accumulator");
                argmax_random_ties((0..self.k).map(|a| (a, acc.estimate(a))), ties)
            }
            Estimator::SampleAverage => argmax_random_ties(
                (0..self.k).filter_map(|a| self.stats.raw_mean(a).map(|m| (a, m))),
                ties,
            ),
        };
        pick.unwrap_or_else(|| ties.index(self.k))
    }

    fn round_record(&self) -> Option<RoundRecord<'_>> {
        Some(RoundRecord {
            propensity: &self.propensity,
            mu_hat: &self.mu_hat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::aipw_pseudo_reward;
    use crate::models::Scenario;

    /// Two rewards per arm: `mean +- sqrt(var)` gives exactly that mean and variance.
    fn stats_from(means: &[f64], vars: &[f64]) -> RunningArmStats {
        let mut s = RunningArmStats::new(means.len());
        for (a, (&m, &v)) in means.iter().zip(vars).enumerate() {
            s.record(a, m + v.sqrt());
            s.record(a, m - v.sqrt());
        }
        s
    }

    #[test]
    fn estimated_allocation_examples() {
        let p = StrategyParams::default();
        let w = estimated_allocation(&stats_from(&[0.05, 0.01], &[1.0, 0.2]), &p);
        assert!((w[0] - 0.690983).abs() < 1e-6);
        assert!((w[1] - 0.309017).abs() < 1e-6);

        let w = estimated_allocation(&stats_from(&[0.5, 0.5, 0.1], &[1.0, 1.0, 1.0]), &p);
        assert_eq!(w.weights(), &[1.0 / 3.0; 3]);

        let w = estimated_allocation(&stats_from(&[1.0, 0.9, 0.9], &[1.0, 1.0, 1.0]), &p);
        assert!((w[0] - 0.414214).abs() < 1e-6);
        assert!((w[1] - 0.292893).abs() < 1e-6);
        assert!((w[2] - 0.292893).abs() < 1e-6);
    }

    #[test]
    fn mixing_example() {
        let mut w = [0.9, 0.1];
        apply_mixing(&mut w, 100);
        assert!((w[0] - 0.86).abs() < 1e-12);
        assert!((w[1] - 0.14).abs() < 1e-12);
    }

    #[test]
    fn initialization_is_round_robin() {
        let inst = BanditInstance::gaussian(&[1.0, 0.5, 0.2], &[1.0; 3]).unwrap();
        let mut s = RsStrategy::new(&inst, StrategyParams::default()).unwrap();
        let mut rng = RandomStream::new(0);
        for t in 1..=3 {
            let arm = s.select(t, &mut rng);
            assert_eq!(arm, t - 1);
            assert_eq!(s.propensity(), &[1.0 / 3.0; 3]);
            s.observe(t, arm, 0.0);
        }
    }

    #[test]
    fn floor_falls_back_to_uniform() {
        // Means far apart relative to variance drive the weight of arm 2 below c_w.
        let inst = BanditInstance::gaussian(&[0.0, 0.0, 0.0], &[1.0; 3]).unwrap();
        let params = StrategyParams {
            c_w: 0.3,
            ..StrategyParams::default()
        };
        let mut s = RsStrategy::new(&inst, params).unwrap();
        let mut rng = RandomStream::new(0);
        let rewards = [1.0, 0.999, -50.0];
        for t in 1..=3 {
            let arm = s.select(t, &mut rng);
            s.observe(t, arm, rewards[arm]);
        }
        s.select(4, &mut rng);
        assert_eq!(s.propensity(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn pseudo_rewards_match_reference_functions() {
        let inst = Scenario::S1.instance();
        let mut s = RsStrategy::new(&inst, StrategyParams::default()).unwrap();
        let mut rng = RandomStream::new(11);
        let mut reference = AipwAccumulator::new(2);
        for t in 1..=50 {
            let arm = s.select(t, &mut rng);
            let x = inst.arms()[arm].sample(&mut rng);
            let rec = s.round_record().unwrap();
            let row: Vec<f64> = (0..2)
                .map(|a| aipw_pseudo_reward(a, arm, x, rec.mu_hat[a], rec.propensity[a]).unwrap())
                .collect();
            reference.push(&row);
            s.observe(t, arm, x);
        }
        assert_eq!(s.aipw().sums(), reference.sums());
    }

    #[test]
    fn estimates_use_strict_prefix() {
        let inst = Scenario::S1.instance();
        let mut s = RsStrategy::new(&inst, StrategyParams::default()).unwrap();
        let mut rng = RandomStream::new(2);
        let mut history = RunningArmStats::new(2);
        for t in 1..=40 {
            let arm = s.select(t, &mut rng);
            let rec = s.round_record().unwrap();
            for a in 0..2 {
                assert_eq!(rec.mu_hat[a], clipped_mean(&history, a, 100.0));
            }
            let x = inst.arms()[arm].sample(&mut rng);
            s.observe(t, arm, x);
            history.record(arm, x);
        }
    }

    #[test]
    fn oracle_mode_uses_truth() {
        let inst = Scenario::S1.instance();
        let params = StrategyParams {
            oracle: true,
            ..StrategyParams::default()
        };
        let mut s = RsStrategy::new(&inst, params).unwrap();
        let mut rng = RandomStream::new(4);
        s.select(1, &mut rng);
        let rec = s.round_record().unwrap();
        assert_eq!(rec.mu_hat, &[0.05, 0.01]);
        assert!((rec.propensity[0] - 0.690983).abs() < 1e-6);
    }
}
