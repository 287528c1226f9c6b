//! Reference strategies: uniform round-robin, the known-variance two-arm
//! tracking oracle, sequential halving and UGapEb.

use super::{argmax_random_ties, Strategy};
use crate::error::{Error, Result};
use crate::estimators::RunningArmStats;
use crate::rng::RandomStream;

fn sample_average_argmax(
    stats: &RunningArmStats,
    arms: impl Iterator<Item = usize>,
    ties: &mut RandomStream,
) -> usize {
    argmax_random_ties(
        arms.filter_map(|a| stats.raw_mean(a).map(|m| (a, m))),
        ties,
    )
    .unwrap_or_else(|| ties.index(stats.num_arms()))
}

/// Pulls arms in turn: arm `(t - 1) mod K` at round `t`.
#[derive(Debug, Clone)]
pub struct UniformSampling {
    stats: RunningArmStats,
}

impl UniformSampling {
    pub fn new(k: usize) -> Self {
        Self {
            stats: RunningArmStats::new(k),
        }
    }
}

impl Strategy for UniformSampling {
    fn num_arms(&self) -> usize {
        self.stats.num_arms()
    }

    fn select(&mut self, t: usize, _rng: &mut RandomStream) -> usize {
        (t - 1) % self.stats.num_arms()
    }

    fn observe(&mut self, _t: usize, arm: usize, reward: f64) {
        self.stats.record(arm, reward);
    }

    fn recommend(&self, _t: usize, ties: &mut RandomStream) -> usize {
        sample_average_argmax(&self.stats, 0..self.stats.num_arms(), ties)
    }
}

/// Two-arm oracle that knows the standard deviations and tracks the Neyman
/// ratio deterministically: arm 1 is pulled at round `t` exactly when
/// `N_1(t-1) < ceil(alpha t)`, `alpha = sigma_1 / (sigma_1 + sigma_2)`.
#[derive(Debug, Clone)]
pub struct AlphaElimination {
    alpha: f64,
    stats: RunningArmStats,
}

impl AlphaElimination {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha-elim needs positive standard deviations, got ({sigma1}, {sigma2})"
            )));
        }
        Ok(Self {
            alpha: sigma1 / (sigma1 + sigma2),
            stats: RunningArmStats::new(2),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Strategy for AlphaElimination {
    fn num_arms(&self) -> usize {
        2
    }

    fn select(&mut self, t: usize, _rng: &mut RandomStream) -> usize {
        let target = (self.alpha * t as f64).ceil() as u64;
        if self.stats.count(0) < target {
            0
        } else {
            1
        }
    }

    fn observe(&mut self, _t: usize, arm: usize, reward: f64) {
        self.stats.record(arm, reward);
    }

    fn recommend(&self, _t: usize, ties: &mut RandomStream) -> usize {
        sample_average_argmax(&self.stats, 0..2, ties)
    }
}

/// Sequential halving: `ceil(log2 K)` phases; in phase `r` every surviving
/// arm is pulled `floor(T / (|S_r| ceil(log2 K)))` times (interleaved), then
/// the better half by in-phase mean survives. Leftover budget goes to the
/// final survivor.
#[derive(Debug, Clone)]
pub struct SequentialHalving {
    k: usize,
    phases: usize,
    budget: usize,
    survivors: Vec<usize>,
    per_arm: usize,
    phase_pulls: usize,
    phase_stats: RunningArmStats,
    stats: RunningArmStats,
    cursor: usize,
    /// Per-arm budgets of the phases completed so far.
    history: Vec<usize>,
}

impl SequentialHalving {
    pub fn new(k: usize, budget: usize) -> Result<Self> {
        let phases = ceil_log2(k);
        let required = k * phases;
        if budget < required {
            return Err(Error::BudgetTooSmall { budget, required });
        }
        let mut sh = Self {
            k,
            phases,
            budget,
            survivors: (0..k).collect(),
            per_arm: 0,
            phase_pulls: 0,
            phase_stats: RunningArmStats::new(k),
            stats: RunningArmStats::new(k),
            cursor: 0,
            history: Vec::new(),
        };
        sh.per_arm = sh.phase_budget();
        Ok(sh)
    }

    fn phase_budget(&self) -> usize {
        if self.survivors.len() <= 1 || self.phases == 0 {
            0
        } else {
            self.budget / (self.survivors.len() * self.phases)
        }
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    /// Per-arm budgets of the phases completed so far.
    pub fn phase_history(&self) -> &[usize] {
        &self.history
    }

    fn finish_phase(&mut self) {
        let mut ranked: Vec<(usize, f64)> = self
            .survivors
            .iter()
            .map(|&a| (a, self.phase_stats.raw_mean(a).unwrap_or(f64::NEG_INFINITY)))
            .collect();
        // Stable sort: equal means keep the lower index first.
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1));
        let keep = self.survivors.len().div_ceil(2);
        self.survivors = ranked[..keep].iter().map(|&(a, _)| a).collect();
        self.survivors.sort_unstable();
        self.history.push(self.per_arm);
        self.phase_stats = RunningArmStats::new(self.k);
        self.phase_pulls = 0;
        self.cursor = 0;
        self.per_arm = self.phase_budget();
    }
}

fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

impl Strategy for SequentialHalving {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select(&mut self, _t: usize, _rng: &mut RandomStream) -> usize {
        if self.per_arm == 0 {
            return self.survivors[0];
        }
        let arm = self.survivors[self.cursor % self.survivors.len()];
        self.cursor += 1;
        arm
    }

    fn observe(&mut self, _t: usize, arm: usize, reward: f64) {
        self.stats.record(arm, reward);
        if self.per_arm == 0 {
            return;
        }
        self.phase_stats.record(arm, reward);
        self.phase_pulls += 1;
        if self.phase_pulls == self.per_arm * self.survivors.len() {
            self.finish_phase();
        }
    }

    fn recommend(&self, _t: usize, ties: &mut RandomStream) -> usize {
        if self.survivors.len() == 1 {
            return self.survivors[0];
        }
        sample_average_argmax(&self.stats, self.survivors.iter().copied(), ties)
    }
}

/// UGapEb with confidence radius `beta_a = sqrt(exploration / N_a)`.
///
/// After one pull per arm, each round computes the gap index
/// `B_k = max_{i != k} U_i - L_k` with `U = mean + beta`, `L = mean - beta`,
/// takes `J = argmin B`, the strongest challenger `u = argmax_{i != J} U_i`,
/// and pulls whichever of the two has the larger radius.
#[derive(Debug, Clone)]
pub struct UgapEb {
    k: usize,
    exploration: f64,
    stats: RunningArmStats,
}

impl UgapEb {
    pub fn new(k: usize, budget: usize, exploration: f64) -> Result<Self> {
        if budget < k {
            return Err(Error::BudgetTooSmall {
                budget,
                required: k,
            });
        }
        if !(exploration > 0.0) {
            return Err(Error::InvalidParams(format!(
                "ugap exploration must be > 0, got {exploration}"
            )));
        }
        Ok(Self {
            k,
            exploration,
            stats: RunningArmStats::new(k),
        })
    }

    fn radius(&self, a: usize) -> f64 {
        (self.exploration / self.stats.count(a) as f64).sqrt()
    }

    /// Gap indices `B_k` (requires every arm pulled at least once).
    pub fn gap_indices(&self) -> Vec<f64> {
        let upper: Vec<f64> = (0..self.k)
            .map(|a| self.stats.raw_mean(a).unwrap() + self.radius(a))
            .collect();
        (0..self.k)
            .map(|a| {
                let lower = self.stats.raw_mean(a).unwrap() - self.radius(a);
                let best_other = (0..self.k)
                    .filter(|&i| i != a)
                    .map(|i| upper[i])
                    .fold(f64::NEG_INFINITY, f64::max);
                best_other - lower
            })
            .collect()
    }
}

impl Strategy for UgapEb {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select(&mut self, t: usize, _rng: &mut RandomStream) -> usize {
        if t <= self.k {
            return t - 1;
        }
        let b = self.gap_indices();
        let j = (0..self.k)
            .min_by(|&x, &y| b[x].total_cmp(&b[y]))
            .unwrap();
        let u = (0..self.k)
            .filter(|&i| i != j)
            .max_by(|&x, &y| {
                let ux = self.stats.raw_mean(x).unwrap() + self.radius(x);
                let uy = self.stats.raw_mean(y).unwrap() + self.radius(y);
                // On equal upper bounds prefer the lower index.
                ux.total_cmp(&uy).then(y.cmp(&x))
            })
            .unwrap();
        if self.radius(u) > self.radius(j) {
            u
        } else {
            j
        }
    }

    fn observe(&mut self, _t: usize, arm: usize, reward: f64) {
        self.stats.record(arm, reward);
    }

    fn recommend(&self, _t: usize, ties: &mut RandomStream) -> usize {
        if self.stats.counts().contains(&0) {
            return sample_average_argmax(&self.stats, 0..self.k, ties);
        }
        let b = self.gap_indices();
        argmax_random_ties(b.iter().map(|&x| -x).enumerate(), ties).unwrap()
    }
}
