//! Optimal arm-draw allocation for fixed-budget identification with Gaussian
//! (or variance-parameterised exponential-family) arms.
//!
//! The allocation maximises `min_a G_a(w_best, w_a)` over the simplex, where
//!
//! ```text
//! G_a(w_1, w_a) = (mu_1 - mu_a)^2 / (2 (var_1 / w_1 + var_a / w_a))
//! ```
//!
//! At the optimum every `G_a` takes the same value. Writing that common
//! value as `w_1 * y` turns the problem into a one-dimensional root search:
//!
//! ```text
//! psi_a(y) = ((mu_1 - mu_a)^2 - 2 y var_1) / (2 var_a y)
//! F(y)     = sum_{a != 1} var_1 / (var_a psi_a(y)^2)
//! ```
//!
//! `F` increases strictly from 0 to infinity on `(0, (mu_1 - mu_2)^2 / (2 var_1))`
//! with `mu_2` the largest sub-optimal mean, so `F(y*) = 1` is found by
//! bisection and the weights follow as `w_1 = 1 / (1 + sum 1/psi_a(y*))`,
//! `w_a = w_1 / psi_a(y*)`.

use crate::error::{Error, Result};
use crate::models::{unique_argmax, BanditInstance};

/// Default stopping tolerance on `|F(y) - 1|`.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Bisection iteration cap.
pub const MAX_ITERATIONS: usize = 200;
/// Relative inset of the bisection bracket from the ends of the open interval.
const BRACKET_INSET: f64 = 1e-15;
/// Maximum number of decades the lower bracket edge may be pushed down.
const MAX_LOWER_EXPANSIONS: usize = 280;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    /// Tolerance on `|sum - 1|`.
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidAllocation("empty weight vector".into()));
        }
        for (arm, &w) in weights.iter().enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(Error::NegativeWeight { arm, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidAllocation(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Result of [`solve_optimal_allocation`].
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSolution {
    pub allocation: Allocation,
    /// Root of `F(y) = 1`.
    pub y_star: f64,
    /// Optimal exponent, `min_a G_a(w*_1, w*_a)`.
    pub gamma_star: f64,
    /// Index of the best arm (the role of arm 1 in the formulas).
    pub best: usize,
    pub iterations: usize,
}

fn check_lengths(means: &[f64], variances: &[f64]) -> Result<()> {
    if means.len() != variances.len() {
        return Err(Error::LengthMismatch {
            what: "variances",
            expected: means.len(),
            got: variances.len(),
        });
    }
    if means.len() < 2 {
        return Err(Error::TooFewArms(means.len()));
    }
    Ok(())
}

fn check_variances(variances: &[f64]) -> Result<()> {
    for (arm, &v) in variances.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveVariance { arm, value: v });
        }
    }
    Ok(())
}

#[inline]
fn psi_raw(gap_sq: f64, y: f64, var_best: f64, var_a: f64) -> f64 {
    (gap_sq - 2.0 * y * var_best) / (2.0 * var_a * y)
}

/// `psi_a(y)` for sub-optimal arm `arm`, measured against the unique best
/// arm of `means`.
///
/// The right end of the interval, `y = gap^2 / (2 var_best)`, is accepted and
/// gives exactly zero.
pub fn psi(arm: usize, y: f64, means: &[f64], variances: &[f64]) -> Result<f64> {
    check_lengths(means, variances)?;
    let best = unique_argmax(means).ok_or(Error::NoUniqueBestArm)?;
    if arm >= means.len() {
        return Err(Error::ArmOutOfRange {
            arm,
            k: means.len(),
        });
    }
    if arm == best {
        return Err(Error::InvalidParams(format!(
            "psi is undefined for the best arm ({arm})"
        )));
    }
    let gap = means[best] - means[arm];
    let gap_sq = gap * gap;
    let upper = gap_sq / (2.0 * variances[best]);
    let numerator = gap_sq - 2.0 * y * variances[best];
    if !(y > 0.0) || numerator < 0.0 {
        return Err(Error::YOutOfRange { y, upper });
    }
    Ok(numerator / (2.0 * variances[arm] * y))
}

/// Pre-computed quantities for repeated evaluation of `F`.
struct BalanceProblem<'a> {
    means: &'a [f64],
    variances: &'a [f64],
    best: usize,
    /// `(mu_1 - mu_2)^2 / (2 var_1)` with `mu_2` the largest sub-optimal mean.
    upper: f64,
}

impl<'a> BalanceProblem<'a> {
    fn new(means: &'a [f64], variances: &'a [f64], best: usize) -> Result<Self> {
        let top = means[best];
        let second = means
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &m)| m)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(second < top) {
            return Err(Error::NoUniqueBestArm);
        }
        let min_gap = top - second;
        Ok(Self {
            means,
            variances,
            best,
            upper: min_gap * min_gap / (2.0 * variances[best]),
        })
    }

    #[inline]
    fn psi(&self, a: usize, y: f64) -> f64 {
        let gap = self.means[self.best] - self.means[a];
        psi_raw(gap * gap, y, self.variances[self.best], self.variances[a])
    }

    fn balance(&self, y: f64) -> f64 {
        let vb = self.variances[self.best];
        let mut total = 0.0;
        for a in 0..self.means.len() {
            if a == self.best {
                continue;
            }
            let p = self.psi(a, y);
            total += vb / (self.variances[a] * p * p);
        }
        total
    }

    fn weights_at(&self, y: f64, out: &mut [f64]) {
        let mut denom = 1.0;
        for (a, slot) in out.iter_mut().enumerate().take(self.means.len()) {
            if a != self.best {
                let inv = 1.0 / self.psi(a, y);
                *slot = inv;
                denom += inv;
            }
        }
        out[self.best] = 1.0;
        for w in out.iter_mut() {
            *w /= denom;
        }
    }

    /// Bisection for `F(y) = 1`. Returns `(y*, iterations)`.
    fn solve(&self, tol: f64) -> Result<(f64, usize)> {
        let mut lo = self.upper * BRACKET_INSET;
        let mut hi = self.upper * (1.0 - BRACKET_INSET);
        let mut expansions = 0;
        while self.balance(lo) >= 1.0 {
            if expansions == MAX_LOWER_EXPANSIONS || lo == 0.0 {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    lo,
                    hi,
                    f_mid: self.balance(lo),
                });
            }
            hi = hi.min(lo);
            lo *= 0.1;
            expansions += 1;
        }
        if self.balance(hi) <= 1.0 {
            return Err(Error::NoConvergence {
                iterations: 0,
                lo,
                hi,
                f_mid: self.balance(hi),
            });
        }
        let mut f_mid = f64::NAN;
        for iter in 1..=MAX_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            f_mid = self.balance(mid);
            if (f_mid - 1.0).abs() <= tol {
                return Ok((mid, iter));
            }
            if mid <= lo || mid >= hi {
                break;
            }
            if f_mid < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            lo,
            hi,
            f_mid,
        })
    }
}

/// `F(y)` for the unique best arm of `means`; defined on `(0, U)` with
/// `U = (mu_1 - mu_2)^2 / (2 var_1)`.
pub fn balance(y: f64, means: &[f64], variances: &[f64]) -> Result<f64> {
    check_lengths(means, variances)?;
    let best = unique_argmax(means).ok_or(Error::NoUniqueBestArm)?;
    let problem = BalanceProblem::new(means, variances, best)?;
    if !(y > 0.0 && y < problem.upper) {
        return Err(Error::YOutOfRange {
            y,
            upper: problem.upper,
        });
    }
    Ok(problem.balance(y))
}

/// Solves for the optimal allocation of the unique best arm of `means`.
pub fn solve_optimal_allocation(
    means: &[f64],
    variances: &[f64],
    tol: f64,
) -> Result<AllocationSolution> {
    check_lengths(means, variances)?;
    let best = unique_argmax(means).ok_or(Error::NoUniqueBestArm)?;
    solve_with_best(means, variances, best, tol)
}

/// Same as [`solve_optimal_allocation`] for a bandit instance.
pub fn solve_instance(instance: &BanditInstance, tol: f64) -> Result<AllocationSolution> {
    solve_optimal_allocation(&instance.means(), &instance.variances(), tol)
}

/// Solver with the best arm supplied by the caller. `means[best]` must be
/// strictly larger than every other mean.
pub fn solve_with_best(
    means: &[f64],
    variances: &[f64],
    best: usize,
    tol: f64,
) -> Result<AllocationSolution> {
    check_lengths(means, variances)?;
    check_variances(variances)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let mut weights = vec![0.0; means.len()];
    let (y_star, iterations) = solve_into(means, variances, best, tol, &mut weights)?;
    let gamma_star = exponent_at(means, variances, best, &weights);
    Ok(AllocationSolution {
        allocation: Allocation(weights),
        y_star,
        gamma_star,
        best,
        iterations,
    })
}

/// Allocation-free core used on the per-round sampling path. Writes the
/// optimal weights into `out` and returns `(y*, iterations)`.
pub(crate) fn solve_into(
    means: &[f64],
    variances: &[f64],
    best: usize,
    tol: f64,
    out: &mut [f64],
) -> Result<(f64, usize)> {
    let problem = BalanceProblem::new(means, variances, best)?;
    let (y, iterations) = problem.solve(tol)?;
    problem.weights_at(y, out);
    Ok((y, iterations))
}

/// Pairwise rate `G_a(w_1, w_a)` of arm `arm` against the unique best arm.
/// Zero when either weight is zero.
pub fn rate_g(arm: usize, w1: f64, wa: f64, means: &[f64], variances: &[f64]) -> Result<f64> {
    check_lengths(means, variances)?;
    if w1 < 0.0 || w1.is_nan() {
        return Err(Error::NegativeWeight { arm: 0, value: w1 });
    }
    if wa < 0.0 || wa.is_nan() {
        return Err(Error::NegativeWeight { arm, value: wa });
    }
    let best = unique_argmax(means).ok_or(Error::NoUniqueBestArm)?;
    if arm >= means.len() {
        return Err(Error::ArmOutOfRange {
            arm,
            k: means.len(),
        });
    }
    Ok(rate_raw(
        means[best] - means[arm],
        variances[best],
        variances[arm],
        w1,
        wa,
    ))
}

#[inline]
fn rate_raw(gap: f64, var_best: f64, var_a: f64, w1: f64, wa: f64) -> f64 {
    if w1 <= 0.0 || wa <= 0.0 {
        return 0.0;
    }
    gap * gap / (2.0 * (var_best / w1 + var_a / wa))
}

fn exponent_at(means: &[f64], variances: &[f64], best: usize, weights: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    for a in 0..means.len() {
        if a == best {
            continue;
        }
        let g = rate_raw(
            means[best] - means[a],
            variances[best],
            variances[a],
            weights[best],
            weights[a],
        );
        min = min.min(g);
    }
    min
}

/// `min_a G_a` at a fixed allocation. The best arm is the first arm with the
/// largest mean, so tied maxima give zero.
pub fn exponent_of(instance: &BanditInstance, allocation: &Allocation) -> f64 {
    let means = instance.means();
    let variances = instance.variances();
    exponent_of_parts(&means, &variances, allocation.weights())
}

fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn exponent_of_parts(means: &[f64], variances: &[f64], weights: &[f64]) -> f64 {
    exponent_at(means, variances, first_argmax(means), weights)
}

/// Result of the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMaximum {
    pub allocation: Allocation,
    pub value: f64,
}

/// Exhaustive maximisation of [`exponent_of`] over the simplex grid with
/// spacing `1/n`, `n = round(1/step)`. Test oracle; K is limited to 4.
pub fn brute_force_exponent(instance: &BanditInstance, step: f64) -> Result<GridMaximum> {
    let k = instance.num_arms();
    if k > 4 {
        return Err(Error::GridTooLarge(k));
    }
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidGridStep(step));
    }
    let n = (1.0 / step).round() as usize;
    let means = instance.means();
    let variances = instance.variances();
    let best = first_argmax(&means);

    let mut counts = vec![0usize; k];
    let mut weights = vec![0.0; k];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_counts = counts.clone();

    // Enumerate compositions of n into k parts; the last part is implied.
    fn visit(
        depth: usize,
        remaining: usize,
        counts: &mut [usize],
        f: &mut dyn FnMut(&[usize]),
    ) {
        let k = counts.len();
        if depth == k - 1 {
            counts[depth] = remaining;
            f(counts);
            return;
        }
        for c in 0..=remaining {
            counts[depth] = c;
            visit(depth + 1, remaining - c, counts, f);
        }
    }

    let nf = n as f64;
    visit(0, n, &mut counts, &mut |c| {
        for (w, &ci) in weights.iter_mut().zip(c) {
            *w = ci as f64 / nf;
        }
        let v = exponent_at(&means, &variances, best, &weights);
        if v > best_value {
            best_value = v;
            best_counts.copy_from_slice(c);
        }
    });

    let allocation = Allocation(best_counts.iter().map(|&c| c as f64 / nf).collect());
    Ok(GridMaximum {
        allocation,
        value: best_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn symmetric() -> (Vec<f64>, Vec<f64>) {
        (vec![1.0, 0.9, 0.9], vec![1.0, 1.0, 1.0])
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn psi_examples() {
        let (m, v) = symmetric();
        let p = psi(1, 2.0711e-3, &m, &v).unwrap();
        assert!((p - 1.41421).abs() < 1e-4, "{p}");

        // Right endpoint: numerator vanishes.
        let m2 = [1.0, 0.9];
        let v2 = [1.0, 1.0];
        let gap: f64 = 1.0 - 0.9;
        let y = gap * gap / 2.0;
        assert_eq!(psi(1, y, &m2, &v2).unwrap(), 0.0);

        let s1m = [0.05, 0.01];
        let s1v = [1.0, 0.2];
        assert!(matches!(
            psi(1, 0.001, &s1m, &s1v),
            Err(Error::YOutOfRange { .. })
        ));
        assert!(psi(1, 0.0, &s1m, &s1v).is_err());
        assert!(psi(0, 1e-4, &s1m, &s1v).is_err());
    }

    #[test]
    fn balance_examples() {
        let (m, v) = symmetric();
        let f = balance(2.0711e-3, &m, &v).unwrap();
        assert!((f - 1.0).abs() < 1e-4, "{f}");
        let u = 0.01 / 2.0;
        assert!(balance(1e-12 * u, &m, &v).unwrap() < 1e-20);
        assert!(balance(u * (1.0 - 1e-12), &m, &v).unwrap() > 1e20);
        assert!(balance(u, &m, &v).is_err());
        assert!(balance(-1.0, &m, &v).is_err());
    }

    #[test]
    fn symmetric_optimum() {
        let (m, v) = symmetric();
        let sol = solve_optimal_allocation(&m, &v, DEFAULT_TOL).unwrap();
        let w = sol.allocation.weights();
        assert!((w[0] - (SQRT2 - 1.0)).abs() < 1e-9);
        assert!((w[1] - 1.0 / (2.0 + SQRT2)).abs() < 1e-9);
        assert!((w[2] - 1.0 / (2.0 + SQRT2)).abs() < 1e-9);
        assert!((sol.gamma_star - 8.5786e-4).abs() < 1e-8);
        assert!((sol.gamma_star - w[0] * sol.y_star).abs() <= 1e-10 * sol.gamma_star);
    }

    #[test]
    fn neyman_two_arms() {
        let sol = solve_optimal_allocation(&[0.05, 0.01], &[1.0, 0.2], DEFAULT_TOL).unwrap();
        let s2 = 0.2f64.sqrt();
        assert!((sol.allocation[0] - 1.0 / (1.0 + s2)).abs() < 1e-9);
        assert!((sol.allocation[0] - 0.690983).abs() < 1e-6);
        assert!((sol.gamma_star - 3.8197e-4).abs() < 1e-8);

        let sol = solve_optimal_allocation(&[1.0, 0.0], &[1.0, 1.0], DEFAULT_TOL).unwrap();
        assert!((sol.allocation[0] - 0.5).abs() < 1e-9);
        assert!((sol.allocation[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unsorted_best_arm() {
        let sol = solve_optimal_allocation(&[0.01, 0.05], &[0.2, 1.0], DEFAULT_TOL).unwrap();
        assert_eq!(sol.best, 1);
        assert!((sol.allocation[1] - 0.690983).abs() < 1e-6);
    }

    #[test]
    fn solver_errors() {
        assert_eq!(
            solve_optimal_allocation(&[1.0, 1.0], &[1.0, 1.0], DEFAULT_TOL),
            Err(Error::NoUniqueBestArm)
        );
        assert_eq!(
            solve_optimal_allocation(&[0.5, 0.5, 0.5], &[1.0, 2.0, 3.0], DEFAULT_TOL),
            Err(Error::NoUniqueBestArm)
        );
        assert!(matches!(
            solve_optimal_allocation(&[1.0, 0.0], &[0.0, 1.0], DEFAULT_TOL),
            Err(Error::NonPositiveVariance { arm: 0, .. })
        ));
        assert!(solve_optimal_allocation(&[1.0, 0.0], &[1.0, 1.0], 0.0).is_err());
        assert!(solve_optimal_allocation(&[1.0, 0.0], &[1.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn tied_suboptimal_means_allowed() {
        let sol =
            solve_optimal_allocation(&[1.0, 0.5, 0.5, 0.2], &[1.0, 2.0, 2.0, 0.5], DEFAULT_TOL)
                .unwrap();
        assert!((sol.allocation[1] - sol.allocation[2]).abs() < 1e-12);
    }

    #[test]
    fn rate_g_examples() {
        let m = [0.05, 0.01];
        let v = [1.0, 0.2];
        let g = rate_g(1, 0.690983, 0.309017, &m, &v).unwrap();
        assert!((g - 3.8197e-4).abs() < 1e-8, "{g}");
        assert_eq!(rate_g(1, 0.5, 0.0, &m, &v).unwrap(), 0.0);
        assert!(rate_g(1, -0.1, 0.5, &m, &v).is_err());
        let equal = [0.3, 0.3, 0.1];
        assert!(rate_g(1, 0.5, 0.5, &equal, &[1.0; 3]).is_err());
    }

    #[test]
    fn exponent_of_examples() {
        let s1 = BanditInstance::gaussian(&[0.05, 0.01], &[1.0, 0.2]).unwrap();
        let sol = solve_instance(&s1, DEFAULT_TOL).unwrap();
        let e = exponent_of(&s1, &sol.allocation);
        assert!((e - 3.8197e-4).abs() < 1e-8);

        let sym = BanditInstance::gaussian(&[1.0, 0.9, 0.9], &[1.0, 1.0, 1.0]).unwrap();
        let uniform = exponent_of(&sym, &Allocation::uniform(3));
        assert!((uniform - 0.01 / 12.0).abs() < 1e-12);
        assert!(uniform < 8.5786e-4);

        let zero = Allocation::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(exponent_of(&sym, &zero), 0.0);
    }

    #[test]
    fn allocation_validation() {
        assert!(Allocation::new(vec![0.5, 0.5]).is_ok());
        assert!(Allocation::new(vec![0.5, 0.6]).is_err());
        assert!(Allocation::new(vec![1.5, -0.5]).is_err());
        assert!(Allocation::new(vec![]).is_err());
    }

    #[test]
    fn brute_force_guards() {
        let five = BanditInstance::gaussian(&[1.0, 0.9, 0.8, 0.7, 0.6], &[1.0; 5]).unwrap();
        assert_eq!(
            brute_force_exponent(&five, 0.1),
            Err(Error::GridTooLarge(5))
        );
        let two = BanditInstance::gaussian(&[1.0, 0.9], &[1.0; 2]).unwrap();
        assert!(brute_force_exponent(&two, 0.0).is_err());
        assert!(brute_force_exponent(&two, 0.2).is_err());
        let flat = BanditInstance::gaussian(&[0.5, 0.5], &[1.0; 2]).unwrap();
        assert_eq!(brute_force_exponent(&flat, 0.01).unwrap().value, 0.0);
    }
}
