//! Per-trial martingale diagnostics and exponent helpers.

use statrs::function::erf::erfc;

use super::engine::TraceView;
use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::models::BanditInstance;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Bounds on the Gaussian tail `Phi(-u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBracket {
    pub lower: f64,
    pub upper: f64,
}

/// `exp(-u^2/2) / (sqrt(2 pi) (1+u)) <= Phi(-u) <= exp(-u^2/2) / (sqrt(pi) (1+u))`.
pub fn gaussian_tail_bracket(u: f64) -> Result<TailBracket> {
    if !(u >= 0.0) {
        return Err(Error::NegativeTailArgument(u));
    }
    let e = (-0.5 * u * u).exp() / (1.0 + u);
    Ok(TailBracket {
        lower: e / (2.0 * std::f64::consts::PI).sqrt(),
        upper: e / std::f64::consts::PI.sqrt(),
    })
}

/// `-(1/T) log p_hat`, or a lower bound when no error was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalExponent {
    pub value: f64,
    /// `p_hat` was zero; `value` is `log(n+1)/T`, a lower bound.
    pub censored: bool,
}

pub fn empirical_exponent(p_hat: f64, budget: usize, trials: usize) -> Result<EmpiricalExponent> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidProbability(p_hat));
    }
    if budget == 0 {
        return Err(Error::BudgetTooSmall {
            budget,
            required: 1,
        });
    }
    let t = budget as f64;
    Ok(if p_hat == 0.0 {
        EmpiricalExponent {
            value: ((trials + 1) as f64).ln() / t,
            censored: true,
        }
    } else {
        EmpiricalExponent {
            value: -p_hat.ln() / t,
            censored: false,
        }
    })
}

/// `E[(Xhat_b - Xhat_a - delta)^2 | past]` for AIPW pseudo-rewards with plug-in
/// means `mu_hat` and propensities `w`. Index 0 is the best arm, index 1 the
/// compared arm.
pub fn conditional_second_moment(
    mu: [f64; 2],
    sigma2: [f64; 2],
    mu_hat: [f64; 2],
    w: [f64; 2],
    delta: f64,
) -> f64 {
    let d_b = mu[0] - mu_hat[0];
    let d_a = mu[1] - mu_hat[1];
    let c = mu_hat[0] - mu_hat[1] - delta;
    (sigma2[0] + d_b * d_b) / w[0] + (sigma2[1] + d_a * d_a) / w[1] + 2.0 * c * (d_b - d_a) + c * c
}

/// Quantities fixed by the instance for comparing the best arm with `arm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub best: usize,
    pub arm: usize,
    pub mu: [f64; 2],
    pub sigma2: [f64; 2],
    pub delta: f64,
    /// `sigma_b^2 / w*_b + sigma_a^2 / w*_a`.
    pub sigma_tilde_sq: f64,
}

impl Comparison {
    pub fn new(instance: &BanditInstance, w_star: &Allocation, arm: usize) -> Result<Self> {
        let k = instance.num_arms();
        if w_star.len() != k {
            return Err(Error::LengthMismatch {
                what: "w_star",
                expected: k,
                got: w_star.len(),
            });
        }
        if arm >= k {
            return Err(Error::ArmOutOfRange { arm, k });
        }
        let best = instance.best_arm()?;
        if arm == best {
            return Err(Error::InvalidParams(format!(
                "comparison arm {arm} is the best arm"
            )));
        }
        let means = instance.means();
        let vars = instance.variances();
        let w = w_star.weights();
        Ok(Self {
            best,
            arm,
            mu: [means[best], means[arm]],
            sigma2: [vars[best], vars[arm]],
            delta: means[best] - means[arm],
            sigma_tilde_sq: vars[best] / w[best] + vars[arm] / w[arm],
        })
    }

    /// Un-normalised increment `Xhat_b - Xhat_a - delta` of round `t` (0-based).
    pub fn increment(&self, trace: &TraceView<'_>, t: usize) -> f64 {
        let (arm, x) = (trace.arms[t], trace.rewards[t]);
        let w = trace.propensity(t);
        let m = trace.mu_hat(t);
        let pseudo = |a: usize| {
            if a == arm {
                (x - m[a]) / w[a] + m[a]
            } else {
                m[a]
            }
        };
        pseudo(self.best) - pseudo(self.arm) - self.delta
    }

    /// Conditional second moment of round `t` (0-based) of the trace.
    pub fn moment(&self, trace: &TraceView<'_>, t: usize) -> f64 {
        let w = trace.propensity(t);
        let m = trace.mu_hat(t);
        conditional_second_moment(
            self.mu,
            self.sigma2,
            [m[self.best], m[self.arm]],
            [w[self.best], w[self.arm]],
            self.delta,
        )
    }

    /// `|sum_t (m_t - sigma~^2)| / (T sigma~^2)` over the whole view, which equals
    /// `|sum_t m_t / (T sigma~^2) - 1|`.
    pub fn moment_deviation(&self, trace: &TraceView<'_>) -> f64 {
        let n = trace.len();
        let total: f64 = (0..n).map(|t| self.moment(trace, t) - self.sigma_tilde_sq).sum();
        total.abs() / (n as f64 * self.sigma_tilde_sq)
    }
}

/// The normalised sequence `xi_t = (Xhat_b - Xhat_a - delta) / (sqrt(T) sigma~)`
/// for `T = trace.len()`.
pub fn xi_sequence(
    trace: &TraceView<'_>,
    instance: &BanditInstance,
    w_star: &Allocation,
    arm: usize,
) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::MissingTrace);
    }
    if trace.num_arms() != instance.num_arms() {
        return Err(Error::LengthMismatch {
            what: "trace arms",
            expected: instance.num_arms(),
            got: trace.num_arms(),
        });
    }
    let cmp = Comparison::new(instance, w_star, arm)?;
    let scale = 1.0 / ((trace.len() as f64).sqrt() * cmp.sigma_tilde_sq.sqrt());
    Ok((0..trace.len())
        .map(|t| cmp.increment(trace, t) * scale)
        .collect())
}

/// Largest sub-optimal mean, the default comparison arm.
pub fn runner_up(instance: &BanditInstance) -> Result<usize> {
    let best = instance.best_arm()?;
    let means = instance.means();
    let mut pick = None;
    for (a, &m) in means.iter().enumerate() {
        if a != best && pick.map_or(true, |p: usize| m > means[p]) {
            pick = Some(a);
        }
    }
    pick.ok_or(Error::TooFewArms(means.len()))
}
