//! Reward distributions, bandit instances, benchmark scenarios and random case
//! recipes.
//!
//! Arm indices are 0-based throughout the library; user-facing output adds one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Variances drawn for random cases are redrawn while below this value.
pub const MIN_GENERATED_VARIANCE: f64 = 1e-3;

/// Reward law of a single arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArmDistribution {
    Gaussian { mean: f64, variance: f64 },
    Bernoulli { p: f64 },
}

impl ArmDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        let d = ArmDistribution::Gaussian { mean, variance };
        d.validate()?;
        Ok(d)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = ArmDistribution::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ArmDistribution::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidDistribution(format!("non-finite mean {mean}")));
                }
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidDistribution(format!(
                        "Gaussian variance must be > 0, got {variance}"
                    )));
                }
            }
            ArmDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidDistribution(format!(
                        "Bernoulli p must lie in [0, 1], got {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, .. } => mean,
            ArmDistribution::Bernoulli { p } => p,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { variance, .. } => variance,
            ArmDistribution::Bernoulli { p } => p * (1.0 - p),
        }
    }

    /// One draw. Gaussian draws go through [`RandomStream::standard_normal`].
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, variance } => {
                mean + variance.sqrt() * rng.standard_normal()
            }
            ArmDistribution::Bernoulli { p } => {
                if rng.bernoulli(p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// An ordered collection of at least two arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct BanditInstance {
    arms: Vec<ArmDistribution>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    arms: Vec<ArmDistribution>,
}

impl TryFrom<RawInstance> for BanditInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        BanditInstance::new(raw.arms)
    }
}

impl From<BanditInstance> for RawInstance {
    fn from(inst: BanditInstance) -> Self {
        RawInstance { arms: inst.arms }
    }
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmDistribution>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::TooFewArms(arms.len()));
        }
        for arm in &arms {
            arm.validate()?;
        }
        Ok(Self { arms })
    }

    /// Gaussian instance from parallel mean/variance lists.
    pub fn gaussian(means: &[f64], variances: &[f64]) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::LengthMismatch {
                what: "variances",
                expected: means.len(),
                got: variances.len(),
            });
        }
        let arms = means
            .iter()
            .zip(variances)
            .map(|(&m, &v)| ArmDistribution::gaussian(m, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        let arms = probs
            .iter()
            .map(|&p| ArmDistribution::bernoulli(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::variance).collect()
    }

    /// Index of the arm with the strictly largest mean.
    pub fn best_arm(&self) -> Result<usize> {
        unique_argmax(&self.means()).ok_or(Error::NoUniqueBestArm)
    }

    /// Gap of every arm to the best arm; the best arm's own entry is zero.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        let best = self.best_arm()?;
        let means = self.means();
        let top = means[best];
        Ok(means.iter().map(|m| top - m).collect())
    }
}

/// Index of the unique maximum, or `None` on a tie (or empty/NaN input).
pub fn unique_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut tied = false;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return None;
        }
        match best {
            None => best = Some(i),
            Some(b) if v > values[b] => {
                best = Some(i);
                tied = false;
            }
            Some(b) if v == values[b] => tied = true,
            _ => {}
        }
    }
    if tied {
        None
    } else {
        best
    }
}

/// The eight two-armed Gaussian benchmark scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::S1,
        Scenario::S2,
        Scenario::S3,
        Scenario::S4,
        Scenario::S5,
        Scenario::S6,
        Scenario::S7,
        Scenario::S8,
    ];

    /// `(means, variances)` of the scenario.
    pub fn parameters(self) -> ([f64; 2], [f64; 2]) {
        match self {
            Scenario::S1 => ([0.05, 0.01], [1.0, 0.2]),
            Scenario::S2 => ([0.05, 0.01], [1.0, 0.1]),
            Scenario::S3 => ([0.05, 0.03], [1.0, 0.2]),
            Scenario::S4 => ([0.05, 0.03], [1.0, 0.1]),
            Scenario::S5 => ([0.8, 0.75], [5.0, 3.0]),
            Scenario::S6 => ([0.8, 0.75], [5.0, 1.0]),
            Scenario::S7 => ([0.8, 0.79], [5.0, 3.0]),
            Scenario::S8 => ([0.8, 0.79], [5.0, 1.0]),
        }
    }

    pub fn instance(self) -> BanditInstance {
        let (m, v) = self.parameters();
        BanditInstance::gaussian(&m, &v).expect("scenario parameters are valid")
    }

    pub fn id(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
            Scenario::S4 => "s4",
            Scenario::S5 => "s5",
            Scenario::S6 => "s6",
            Scenario::S7 => "s7",
            Scenario::S8 => "s8",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Builds the instance for a scenario identifier such as `"s1"`.
pub fn scenario(id: &str) -> Result<BanditInstance> {
    Ok(id.parse::<Scenario>()?.instance())
}

/// Random multi-armed instance recipes.
///
/// | case | family    | best | sub-optimal means              | variances     |
/// |------|-----------|------|--------------------------------|---------------|
/// | 1    | Gaussian  | 1.0  | U[1 - gap, 0.99]               | U[0, 1]       |
/// | 2    | Gaussian  | 1.0  | second = mu2, others U[0, mu2] | U[0, 1]       |
/// | 3    | Gaussian  | 1.0  | as case 1                      | 1             |
/// | 4    | Gaussian  | 1.0  | as case 2                      | 1             |
/// | 5    | Bernoulli | 0.9  | U[0.9 - gap, 0.89]             | p(1 - p)      |
/// | 6    | Bernoulli | 0.9  | second = mu2, others U[0, mu2] | p(1 - p)      |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
}

impl Case {
    pub const ALL: [Case; 6] = [
        Case::Case1,
        Case::Case2,
        Case::Case3,
        Case::Case4,
        Case::Case5,
        Case::Case6,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Case3 => "case3",
            Case::Case4 => "case4",
            Case::Case5 => "case5",
            Case::Case6 => "case6",
        }
    }

    /// Parameter values the recipe accepts: gaps for cases 1/3/5, the
    /// second-best mean for cases 2/4/6.
    pub fn allowed_params(self) -> &'static [f64] {
        match self {
            Case::Case1 | Case::Case3 | Case::Case5 => &[0.01, 0.05, 0.1],
            Case::Case2 | Case::Case4 => &[0.90, 0.95, 0.99],
            Case::Case6 => &[0.80, 0.85, 0.89],
        }
    }

    /// Arm counts used by the benchmark tables.
    pub fn benchmark_arm_counts(self) -> &'static [usize] {
        match self {
            Case::Case1 | Case::Case3 | Case::Case5 => &[3, 5, 10],
            Case::Case2 | Case::Case4 | Case::Case6 => &[10, 30, 50],
        }
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(self, Case::Case5 | Case::Case6)
    }

    fn uses_gap(self) -> bool {
        matches!(self, Case::Case1 | Case::Case3 | Case::Case5)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Case::Case1 => "Gaussian, best 1, sub-optimal mu ~ U[1-Delta, 0.99], var ~ U[0,1]",
            Case::Case2 => "Gaussian, best 1, mu2 fixed, others mu ~ U[0, mu2], var ~ U[0,1]",
            Case::Case3 => "Gaussian, best 1, sub-optimal mu ~ U[1-Delta, 0.99], var = 1",
            Case::Case4 => "Gaussian, best 1, mu2 fixed, others mu ~ U[0, mu2], var = 1",
            Case::Case5 => "Bernoulli, best 0.9, sub-optimal p ~ U[0.9-Delta, 0.89]",
            Case::Case6 => "Bernoulli, best 0.9, p2 fixed, others p ~ U[0, p2]",
        }
    }
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn draw_unit_variance(rng: &mut RandomStream) -> f64 {
    loop {
        let v = rng.uniform();
        if v >= MIN_GENERATED_VARIANCE {
            return v;
        }
    }
}

/// Draws one random instance from a case recipe.
///
/// Arm 0 is the best arm. Draw order: the best arm's variance (if random),
/// then for each sub-optimal arm its mean (if random) followed by its
/// variance (if random).
pub fn generate_case(
    case: Case,
    k: usize,
    param: f64,
    rng: &mut RandomStream,
) -> Result<BanditInstance> {
    if k < 2 {
        return Err(Error::InvalidCase(format!("{case} needs K >= 2, got {k}")));
    }
    if !case.allowed_params().iter().any(|&p| (p - param).abs() < 1e-9) {
        return Err(Error::InvalidCase(format!(
            "{case} does not accept parameter {param} (allowed: {:?})",
            case.allowed_params()
        )));
    }
    // Snap to the catalogued value so 0.1 and 0.1000000001 give the same instance.
    let param = *case
        .allowed_params()
        .iter()
        .find(|&&p| (p - param).abs() < 1e-9)
        .unwrap();

    let best_mean = if case.is_bernoulli() { 0.9 } else { 1.0 };
    let random_variance = matches!(case, Case::Case1 | Case::Case2);

    let draw_mean = |rng: &mut RandomStream, arm: usize| -> f64 {
        if case.uses_gap() {
            let hi = best_mean - 0.01;
            let lo = best_mean - param;
            rng.uniform_in(lo, hi)
        } else if arm == 1 {
            param
        } else {
            rng.uniform_in(0.0, param)
        }
    };

    let mut arms = Vec::with_capacity(k);
    if case.is_bernoulli() {
        arms.push(ArmDistribution::bernoulli(best_mean)?);
        for arm in 1..k {
            let p = draw_mean(rng, arm);
            arms.push(ArmDistribution::bernoulli(p)?);
        }
    } else {
        let v = if random_variance {
            draw_unit_variance(rng)
        } else {
            1.0
        };
        arms.push(ArmDistribution::gaussian(best_mean, v)?);
        for arm in 1..k {
            let m = draw_mean(rng, arm);
            let v = if random_variance {
                draw_unit_variance(rng)
            } else {
                1.0
            };
            arms.push(ArmDistribution::gaussian(m, v)?);
        }
    }
    BanditInstance::new(arms)
}

/// Instance complexity measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexity {
    /// Sum of inverse squared gaps.
    pub h1: f64,
    /// `max_a a / gap_a^2` with arms ranked by decreasing mean (best = rank 1).
    pub h2: f64,
    /// `max_a (var_best + var_a) / gap_a^2`.
    pub h_sigma: f64,
}

pub fn complexity_measures(instance: &BanditInstance) -> Result<Complexity> {
    let best = instance.best_arm()?;
    let means = instance.means();
    let vars = instance.variances();
    let top = means[best];

    let mut gaps: Vec<(f64, usize)> = (0..means.len())
        .filter(|&a| a != best)
        .map(|a| (top - means[a], a))
        .collect();
    gaps.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut h1 = 0.0;
    let mut h2 = 0.0f64;
    let mut h_sigma = 0.0f64;
    for (rank0, &(gap, a)) in gaps.iter().enumerate() {
        let g2 = gap * gap;
        let rank = (rank0 + 2) as f64;
        h1 += 1.0 / g2;
        h2 = h2.max(rank / g2);
        h_sigma = h_sigma.max((vars[best] + vars[a]) / g2);
    }
    Ok(Complexity { h1, h2, h_sigma })
}
