//! Per-arm running statistics, clipped plug-in estimates and the
//! pseudo-rewards behind the AIPW, DR and IPW terminal estimators.

use crate::error::{Error, Result};

/// Default clipping bound for means.
pub const DEFAULT_C_MU: f64 = 100.0;
/// Default clipping bound for variances (and its reciprocal as lower bound).
pub const DEFAULT_C_SIGMA2: f64 = 100.0;

/// Pull counts, reward sums and squared-reward sums per arm.
///
/// Estimates read from this struct only see rounds that have already been
/// recorded; callers compute round-`t` estimates before recording round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningArmStats {
    counts: Vec<u64>,
    sums: Vec<f64>,
    sums_sq: Vec<f64>,
}

impl RunningArmStats {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![0; k],
            sums: vec![0.0; k],
            sums_sq: vec![0.0; k],
        }
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.sums_sq[arm] += reward * reward;
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn sum(&self, arm: usize) -> f64 {
        self.sums[arm]
    }

    /// Unclipped mean, `None` before the first pull.
    pub fn raw_mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    /// Unclipped `E[X^2] - E[X]^2`, `None` before the first pull.
    pub fn raw_variance(&self, arm: usize) -> Option<f64> {
        let n = self.counts[arm];
        (n > 0).then(|| {
            let n = n as f64;
            let m = self.sums[arm] / n;
            self.sums_sq[arm] / n - m * m
        })
    }
}

/// Mean of arm `arm` clamped to `[-c_mu, c_mu]`; zero before the first pull.
pub fn clipped_mean(stats: &RunningArmStats, arm: usize, c_mu: f64) -> f64 {
    match stats.raw_mean(arm) {
        Some(m) => m.clamp(-c_mu, c_mu),
        None => 0.0,
    }
}

/// Variance of arm `arm` clamped to `[1/c_sigma2, c_sigma2]`; one before the
/// first pull.
pub fn clipped_variance(stats: &RunningArmStats, arm: usize, c_sigma2: f64) -> f64 {
    match stats.raw_variance(arm) {
        Some(v) => v.clamp(1.0 / c_sigma2, c_sigma2),
        None => 1.0,
    }
}

/// Augmented IPW pseudo-reward of arm `arm` when `pulled` was drawn with
/// propensity `w_a` for `arm`.
pub fn aipw_pseudo_reward(arm: usize, pulled: usize, x: f64, mu_hat: f64, w_a: f64) -> Result<f64> {
    if !(w_a > 0.0) {
        return Err(Error::ZeroPropensity);
    }
    Ok(if arm == pulled {
        (x - mu_hat) / w_a + mu_hat
    } else {
        mu_hat
    })
}

/// Doubly-robust pseudo-reward: the AIPW form with the realised pull
/// frequency of rounds `1..t-1` in place of the propensity.
pub fn dr_pseudo_reward(
    arm: usize,
    pulled: usize,
    x: f64,
    mu_hat: f64,
    empirical_propensity: f64,
) -> Result<f64> {
    if !(empirical_propensity > 0.0) {
        return Err(Error::ZeroPropensity);
    }
    Ok(if arm == pulled {
        (x - mu_hat) / empirical_propensity + mu_hat
    } else {
        mu_hat
    })
}

pub fn ipw_pseudo_reward(arm: usize, pulled: usize, x: f64, w_a: f64) -> Result<f64> {
    if !(w_a > 0.0) {
        return Err(Error::ZeroPropensity);
    }
    Ok(if arm == pulled { x / w_a } else { 0.0 })
}

/// Plain average of the rewards observed on `arm`.
pub fn sample_average(stats: &RunningArmStats, arm: usize) -> Result<f64> {
    stats.raw_mean(arm).ok_or(Error::ZeroPulls(arm))
}

/// Running per-arm sums of pseudo-rewards.
///
/// Used for the AIPW estimator and, with different pseudo-rewards, for DR and
/// IPW as well.
#[derive(Debug, Clone, PartialEq)]
pub struct AipwAccumulator {
    sums: Vec<f64>,
    rounds: usize,
}

impl AipwAccumulator {
    pub fn new(k: usize) -> Self {
        Self {
            sums: vec![0.0; k],
            rounds: 0,
        }
    }

    /// Adds one round of pseudo-rewards (one entry per arm).
    pub fn push(&mut self, pseudo: &[f64]) {
        debug_assert_eq!(pseudo.len(), self.sums.len());
        for (s, &x) in self.sums.iter_mut().zip(pseudo) {
            *s += x;
        }
        self.rounds += 1;
    }

    /// Adds a pseudo-reward for a single arm; call [`Self::end_round`] once
    /// every arm has been updated.
    pub(crate) fn add(&mut self, arm: usize, x: f64) {
        self.sums[arm] += x;
    }

    pub(crate) fn end_round(&mut self) {
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Estimate of arm `arm` after the rounds pushed so far.
    pub fn estimate(&self, arm: usize) -> f64 {
        self.sums[arm] / self.rounds as f64
    }
}

/// Per-arm estimates `sum / t`. The accumulator must hold exactly `t` rounds.
pub fn finalize_aipw(acc: &AipwAccumulator, t: usize) -> Result<Vec<f64>> {
    if t == 0 || acc.rounds != t {
        return Err(Error::RoundMismatch {
            held: acc.rounds,
            requested: t,
        });
    }
    let tf = t as f64;
    Ok(acc.sums.iter().map(|s| s / tf).collect())
}
