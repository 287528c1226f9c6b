//! Properties of the optimal allocation, checked against an independent
//! max-min solver and closed forms.

use bai_core::allocation::{balance, rate_g, solve_optimal_allocation, DEFAULT_TOL};
use proptest::prelude::*;

/// Independent route to the optimum. For a fixed best-arm share `w1` the
/// largest common rate `r` with `sum_a w_a(r) <= 1 - w1` is found by
/// bisection, where `w_a(r) = var_a / (gap_a^2 / (2 r) - var_1 / w1)` solves
/// `G_a = r`. The outer problem maximises `r(w1)` by golden-section search.
fn oracle(means: &[f64], vars: &[f64]) -> (f64, Vec<f64>) {
    let best = (0..means.len())
        .max_by(|&a, &b| means[a].total_cmp(&means[b]))
        .unwrap();
    let others: Vec<usize> = (0..means.len()).filter(|&a| a != best).collect();
    let share = |w1: f64, r: f64| -> Option<f64> {
        let mut total = 0.0;
        for &a in &others {
            let gap = means[best] - means[a];
            let d = gap * gap / (2.0 * r) - vars[best] / w1;
            if d <= 0.0 {
                return None;
            }
            total += vars[a] / d;
        }
        Some(total)
    };
    let rate_at = |w1: f64| -> f64 {
        // r is feasible iff every denominator is positive and the shares fit.
        let (mut lo, mut hi) = (0.0f64, f64::MAX);
        for &a in &others {
            let gap = means[best] - means[a];
            hi = hi.min(gap * gap * w1 / (2.0 * vars[best]));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match share(w1, mid) {
                Some(s) if s <= 1.0 - w1 => lo = mid,
                _ => hi = mid,
            }
        }
        lo
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-9, 1.0 - 1e-9);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if rate_at(c) < rate_at(d) {
            a = c;
        } else {
            b = d;
        }
    }
    let w1 = 0.5 * (a + b);
    let r = rate_at(w1);
    let mut w = vec![0.0; means.len()];
    w[best] = w1;
    for &o in &others {
        let gap = means[best] - means[o];
        w[o] = vars[o] / (gap * gap / (2.0 * r) - vars[best] / w1);
    }
    (r, w)
}

fn instance(k: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..1.0, k),
        prop::collection::vec(0.1f64..5.0, k),
    )
        .prop_filter("distinct means", |(m, _)| {
            let mut s = m.clone();
            s.sort_by(f64::total_cmp);
            s.windows(2).all(|w| w[1] - w[0] >= 0.02)
        })
}

fn any_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(instance)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equalization_stationarity_consistency((m, v) in any_instance()) {
        let sol = solve_optimal_allocation(&m, &v, DEFAULT_TOL).unwrap();
        let w = sol.allocation.weights();
        let b = sol.best;
        let rates: Vec<f64> = (0..m.len())
            .filter(|&a| a != b)
            .map(|a| rate_g(a, w[b], w[a], &m, &v).unwrap())
            .collect();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(hi - lo <= 1e-8 * sol.gamma_star, "rates {:?}", rates);

        let s: f64 = (0..m.len()).filter(|&a| a != b).map(|a| w[a] * w[a] / v[a]).sum();
        prop_assert!((w[b] - v[b].sqrt() * s.sqrt()).abs() <= 1e-8);

        prop_assert!((sol.gamma_star - w[b] * sol.y_star).abs() <= 1e-10 * sol.gamma_star);
        prop_assert!((balance(sol.y_star, &m, &v).unwrap() - 1.0).abs() <= DEFAULT_TOL);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn matches_independent_solver((m, v) in (2usize..=4).prop_flat_map(instance)) {
        let sol = solve_optimal_allocation(&m, &v, DEFAULT_TOL).unwrap();
        let (r, w) = oracle(&m, &v);
        prop_assert!((sol.gamma_star - r).abs() <= 1e-8 * r, "{} vs {}", sol.gamma_star, r);
        for (a, b) in sol.allocation.weights().iter().zip(&w) {
            prop_assert!((a - b).abs() <= 1e-5, "{:?} vs {:?}", sol.allocation.weights(), w);
        }
    }

    #[test]
    fn two_arm_closed_form((m, v) in instance(2)) {
        let sol = solve_optimal_allocation(&m, &v, DEFAULT_TOL).unwrap();
        let b = sol.best;
        let (s1, s2) = (v[b].sqrt(), v[1 - b].sqrt());
        prop_assert!((sol.allocation[b] - s1 / (s1 + s2)).abs() <= 1e-9);
        let gap = m[b] - m[1 - b];
        let gamma = gap * gap / (2.0 * (s1 + s2) * (s1 + s2));
        prop_assert!((sol.gamma_star - gamma).abs() <= 1e-9 * gamma);
    }

    #[test]
    fn balance_is_increasing((m, v) in any_instance(), u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let mut s = m.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        let best = (0..m.len()).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap();
        let upper = (s[0] - s[1]).powi(2) / (2.0 * v[best]);
        let (a, b) = (u1.min(u2), u1.max(u2));
        prop_assume!(b - a > 1e-6 && a > 1e-6 && b < 1.0 - 1e-6);
        prop_assert!(balance(a * upper, &m, &v).unwrap() < balance(b * upper, &m, &v).unwrap());
    }

    #[test]
    fn variance_scaling((m, v) in any_instance(), c in 0.05f64..20.0) {
        let base = solve_optimal_allocation(&m, &v, DEFAULT_TOL).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let sol = solve_optimal_allocation(&m, &scaled, DEFAULT_TOL).unwrap();
        for (a, b) in base.allocation.weights().iter().zip(sol.allocation.weights()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        prop_assert!((sol.gamma_star - base.gamma_star / c).abs() <= 1e-8 * sol.gamma_star);
    }
}

#[test]
fn oracle_reproduces_closed_forms() {
    let (r, w) = oracle(&[1.0, 0.9, 0.9], &[1.0, 1.0, 1.0]);
    assert!((w[0] - (2f64.sqrt() - 1.0)).abs() < 1e-6, "{w:?}");
    let expected = 0.01 / (2.0 * (1.0 / w[0] + (2.0 + 2f64.sqrt())));
    assert!((r - expected).abs() < 1e-9, "{r} vs {expected}");
    let (r, w) = oracle(&[0.05, 0.01], &[1.0, 0.2]);
    let s2 = 0.2f64.sqrt();
    assert!((w[0] - 1.0 / (1.0 + s2)).abs() < 1e-6);
    assert!((r - 0.0016 / (2.0 * (1.0 + s2).powi(2))).abs() < 1e-12);
}
