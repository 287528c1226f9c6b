//! Result tables and their CSV form.
//!
//! Files are UTF-8 with LF line endings; numbers use `%.10g`.

use crate::format::fmt_g;

use super::diagnostics::EmpiricalExponent;

pub const RESULTS_HEADER: &str = "strategy,t,p_hat,n,stderr";

fn g10(x: f64) -> String {
    fmt_g(x, 10)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub strategy: String,
    pub t: usize,
    /// Fraction of trials whose recommendation was not the best arm.
    pub p_hat: f64,
    pub n: usize,
    /// `sqrt(p_hat (1 - p_hat) / n)`.
    pub stderr: f64,
}

impl ResultRow {
    pub fn new(strategy: String, t: usize, wrong: u64, n: usize) -> Self {
        let p_hat = wrong as f64 / n as f64;
        Self {
            strategy,
            t,
            p_hat,
            n,
            stderr: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.strategy,
                r.t,
                g10(r.p_hat),
                r.n,
                g10(r.stderr)
            ));
        }
        out
    }

    /// Row of `strategy` at round `t`.
    pub fn get(&self, strategy: &str, t: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.t == t)
    }

    /// Rows of `strategy` in round order.
    pub fn curve<'a>(&'a self, strategy: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub strategy: String,
    /// Checkpoint horizon `T'`.
    pub t: usize,
    /// Mean over trials of `|sum_t E[xi_t^2 | past] - 1|`.
    pub v_hat: f64,
    pub v_stderr: f64,
    /// Mean of `N_a / T'`.
    pub shares: Vec<f64>,
    /// Mean over trials of `Z_T' = sum_t xi_t`.
    pub xi_mean: f64,
    pub xi_stderr: f64,
    pub p_hat: f64,
    pub emp_exponent: EmpiricalExponent,
    /// Optimal exponent of the instance (averaged over trials for case recipes).
    pub gamma_star: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub k: usize,
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsReport {
    pub fn header(k: usize) -> String {
        let shares: Vec<String> = (1..=k).map(|a| format!("share_{a}")).collect();
        format!(
            "strategy,T,V_hat,{},xi_mean,emp_exponent,gamma_star",
            shares.join(",")
        )
    }

    /// Censored exponents are written with a `>=` prefix.
    pub fn to_csv(&self) -> String {
        let mut out = Self::header(self.k);
        out.push('\n');
        for r in &self.rows {
            let shares: Vec<String> = r.shares.iter().map(|&s| g10(s)).collect();
            let exp = if r.emp_exponent.censored {
                format!(">={}", g10(r.emp_exponent.value))
            } else {
                g10(r.emp_exponent.value)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.strategy,
                r.t,
                g10(r.v_hat),
                shares.join(","),
                g10(r.xi_mean),
                exp,
                g10(r.gamma_star)
            ));
        }
        out
    }

    pub fn get(&self, strategy: &str, t: usize) -> Option<&DiagnosticsRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.t == t)
    }
}
