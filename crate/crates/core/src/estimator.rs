//! Monte Carlo fixation estimates.
//!
//! `N` independent runs from `S0`, each cut off after `T` steps. The budget is
//! either given directly or derived from a lower bound `fp >= c_fp n^-c1` and
//! an absorption-time bound `E[tau] <= C_tau n^c2`:
//! `N = ceil(ln 16 / (2 eps^2 c_fp^2) n^(2 c1))`, `T = ceil(8 C_tau N n^c2)`.
//!
//! Replicate `i` draws from `stream_rng(base_seed, i)` and results are
//! aggregated as integer counts, so reports do not depend on thread count.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::graph::Graph;
use crate::kernel::{run_to_absorption, Absorption, Configuration, ProcessParams};
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::rational_from_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
    #[error("aborted: {} of {} runs hit the cutoff of {} steps", .0.cutoffs, .0.replicates, .0.cutoff)]
    Aborted(Box<EstimateReport>),
}

/// Constants of the bounds `fp >= c_fp n^-c1` and `E[tau] <= c_tau n^c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutoConstants {
    pub c1: u32,
    pub c2: u32,
    pub c_fp: f64,
    pub c_tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Budget {
    Auto(AutoConstants),
    Manual { replicates: u64, cutoff: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    /// Relative accuracy target, used by [`Budget::Auto`].
    pub epsilon: f64,
    pub budget: Budget,
    pub base_seed: u64,
    /// Fail with [`EstimatorError::Aborted`] if any run hits the cutoff.
    pub strict: bool,
    /// Two-sided Wilson interval level.
    pub confidence: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl EstimatorConfig {
    pub fn manual(replicates: u64, cutoff: u64, base_seed: u64) -> Self {
        EstimatorConfig {
            epsilon: 0.1,
            budget: Budget::Manual { replicates, cutoff },
            base_seed,
            strict: false,
            confidence: 0.95,
            threads: None,
        }
    }

    pub fn auto(constants: AutoConstants, epsilon: f64, base_seed: u64) -> Self {
        EstimatorConfig {
            epsilon,
            budget: Budget::Auto(constants),
            base_seed,
            strict: true,
            confidence: 0.95,
            threads: None,
        }
    }

    /// `(N, T)` for a graph on `n` vertices.
    pub fn resolve(&self, n: usize) -> Result<(u64, u64), EstimatorError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EstimatorError::InvalidConfig(format!("confidence {} not in (0, 1)", self.confidence)));
        }
        if self.threads == Some(0) {
            return Err(EstimatorError::InvalidConfig("threads must be positive".into()));
        }
        let (replicates, cutoff) = match self.budget {
            Budget::Manual { replicates, cutoff } => (replicates, cutoff),
            Budget::Auto(c) => {
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return Err(EstimatorError::InvalidConfig(format!("epsilon {} not in (0, 1)", self.epsilon)));
                }
                if !(c.c_fp > 0.0 && c.c_tau > 0.0 && c.c_fp.is_finite() && c.c_tau.is_finite()) {
                    return Err(EstimatorError::InvalidConfig(format!(
                        "constants c_fp = {}, C_tau = {} must be positive and finite",
                        c.c_fp, c.c_tau
                    )));
                }
                let nf = n as f64;
                let big_n =
                    (16f64.ln() / (2.0 * self.epsilon.powi(2) * c.c_fp.powi(2)) * nf.powi(2 * c.c1 as i32)).ceil();
                let big_t = (8.0 * c.c_tau * big_n * nf.powi(c.c2 as i32)).ceil();
                if !(big_n < u64::MAX as f64) {
                    return Err(EstimatorError::InvalidConfig(format!("replicate count {big_n:e} overflows")));
                }
                let big_t = if big_t < u64::MAX as f64 { big_t as u64 } else { u64::MAX };
                (big_n as u64, big_t)
            }
        };
        if replicates == 0 || cutoff == 0 {
            return Err(EstimatorError::InvalidConfig("replicates and cutoff must be at least 1".into()));
        }
        Ok((replicates, cutoff))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    /// `fixations / N`.
    pub fp_hat: f64,
    pub fixations: u64,
    pub extinctions: u64,
    pub cutoffs: u64,
    pub replicates: u64,
    pub cutoff: u64,
    /// Mean steps per run, cutoff runs counted at `cutoff`.
    pub mean_steps: f64,
    /// Wilson lower bound for `fixations / N`.
    pub ci_low: f64,
    /// Wilson upper bound for `(fixations + cutoffs) / N`.
    pub ci_high: f64,
    pub confidence: f64,
    pub aborted: bool,
}

impl EstimateReport {
    /// `[fixations / N, (fixations + cutoffs) / N]`.
    pub fn bracket(&self) -> (f64, f64) {
        let n = self.replicates as f64;
        (self.fixations as f64 / n, (self.fixations + self.cutoffs) as f64 / n)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Two-sided Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    fixations: u64,
    extinctions: u64,
    cutoffs: u64,
    steps: u128,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            fixations: self.fixations + o.fixations,
            extinctions: self.extinctions + o.extinctions,
            cutoffs: self.cutoffs + o.cutoffs,
            steps: self.steps + o.steps,
        }
    }
}

pub fn estimate(
    g: &Graph,
    s0: &Configuration,
    params: &ProcessParams,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport, EstimatorError> {
    if s0.n() != g.n() {
        return Err(EstimatorError::InvalidConfig(format!(
            "initial set is over {} vertices, graph has {}",
            s0.n(),
            g.n()
        )));
    }
    let (replicates, cutoff) = cfg.resolve(g.n())?;
    let run = |i: u64| {
        let mut rng = stream_rng(cfg.base_seed, i);
        let out = run_to_absorption(g, s0, params, &mut rng, cutoff);
        let mut t = Tally {
            steps: out.steps as u128,
            ..Tally::default()
        };
        match out.absorption {
            Absorption::Fixation => t.fixations = 1,
            Absorption::Extinction => t.extinctions = 1,
            Absorption::Cutoff => t.cutoffs = 1,
        }
        t
    };
    let parallel = || {
        (0..replicates)
            .into_par_iter()
            .map(run)
            .reduce(Tally::default, Tally::merge)
    };
    let tally = match cfg.threads {
        Some(1) => (0..replicates).map(run).fold(Tally::default(), Tally::merge),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| EstimatorError::InvalidConfig(e.to_string()))?
            .install(parallel),
        None => parallel(),
    };

    let (ci_low, _) = wilson_interval(tally.fixations, replicates, cfg.confidence);
    let (_, ci_high) = wilson_interval(tally.fixations + tally.cutoffs, replicates, cfg.confidence);
    let report = EstimateReport {
        fp_hat: tally.fixations as f64 / replicates as f64,
        fixations: tally.fixations,
        extinctions: tally.extinctions,
        cutoffs: tally.cutoffs,
        replicates,
        cutoff,
        mean_steps: tally.steps as f64 / replicates as f64,
        ci_low,
        ci_high,
        confidence: cfg.confidence,
        aborted: cfg.strict && tally.cutoffs > 0,
    };
    if report.aborted {
        return Err(EstimatorError::Aborted(Box::new(report)));
    }
    Ok(report)
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub r: f64,
    pub seed: u64,
    pub report: EstimateReport,
}

/// Estimates over the `lambda x r` grid; cell `(i, j)` uses
/// `derive_seed(base_seed, [i, j])`. Rows are in lambda-major order.
pub fn sweep(
    g: &Graph,
    s0: &Configuration,
    lambdas: &[f64],
    rs: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<SweepPoint>, EstimatorError> {
    let mut out = Vec::with_capacity(lambdas.len() * rs.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        for (j, &r) in rs.iter().enumerate() {
            let params = ProcessParams::new(lambda, r).map_err(|e| EstimatorError::InvalidConfig(e.to_string()))?;
            let seed = derive_seed(cfg.base_seed, &[i as u64, j as u64]);
            let cell = EstimatorConfig {
                base_seed: seed,
                ..cfg.clone()
            };
            let report = estimate(g, s0, &params, &cell)?;
            out.push(SweepPoint {
                lambda,
                r,
                seed,
                report,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `lambda = 1/2`, `r >= 1`, any graph.
    HalfLambda,
    /// alpha-almost regular with `r > 1` and `r >= alpha^2`, any lambda.
    AlmostRegular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub regime: Regime,
    pub constants: AutoConstants,
}

/// Certified Auto constants for `(g, S0, params)`, or `None` outside the
/// certified regimes. `lambda = 1/2` is preferred when both apply.
///
/// * `lambda = 1/2`, `r >= 1`: `fp >= |S0|/n`, `E[tau] <= n^4 r/(r-1)`
///   (`n^4/4` at `r = 1`).
/// * `r > 1`, `r >= alpha^2`: `fp >= n^-2`, `E[tau] <= 4 n^4 r/(r-1)` (the
///   factor covers the doubled steps out of bad configurations).
pub fn certified_constants(g: &Graph, s0: &Configuration, params: &ProcessParams) -> Option<Certificate> {
    let (lambda, r) = (*params.lambda(), *params.r());
    if s0.is_empty() {
        return None;
    }
    if lambda == 0.5 && r >= 1.0 {
        let c_tau = if r > 1.0 { r / (r - 1.0) } else { 0.25 };
        return Some(Certificate {
            regime: Regime::HalfLambda,
            constants: AutoConstants {
                c1: 1,
                c2: 4,
                c_fp: s0.len() as f64,
                c_tau,
            },
        });
    }
    let exact_r = rational_from_f64(r)?;
    if r > 1.0 && g.degree_profile().fitness_dominates_alpha_squared(&exact_r) {
        return Some(Certificate {
            regime: Regime::AlmostRegular,
            constants: AutoConstants {
                c1: 2,
                c2: 4,
                c_fp: 1.0,
                c_tau: 4.0 * r / (r - 1.0),
            },
        });
    }
    None
}
