//! Closed-form and structured fixation probabilities: neutral formulas,
//! bidegreed graphs, cycles (birth-death chain on the mutant run length) and
//! stars (two-state transfer-matrix recurrence).
//!
//! Everything is generic over [`Scalar`], so each formula also has an exact
//! rational evaluation.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::kernel::{Configuration, Params, ProcessParams};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("graph is not bidegreed (degrees {0:?})")]
    NotBidegreed(Vec<usize>),
    #[error("star recurrence is singular at i = {0}")]
    SingularRecurrence(usize),
}

fn check_set_size(n: usize, s_size: usize) -> Result<(), ClosedFormError> {
    if s_size > n || n == 0 {
        return Err(ClosedFormError::InvalidParam(format!(
            "initial set of size {s_size} on {n} vertices"
        )));
    }
    Ok(())
}

/// `|S|/n`: neutral fixation probability at `lambda = 1/2` on any graph.
pub fn neutral_half_lambda_fp<T: Scalar>(n: usize, s_size: usize) -> Result<T, ClosedFormError> {
    check_set_size(n, s_size)?;
    Ok(T::ratio(s_size, n))
}

/// `|S|/n`: neutral fixation probability on a regular graph, for every lambda.
pub fn neutral_regular_fp<T: Scalar>(n: usize, s_size: usize) -> Result<T, ClosedFormError> {
    check_set_size(n, s_size)?;
    Ok(T::ratio(s_size, n))
}

/// Bidegreed weight `f(degree)` for a `(d1, d2)`-bidegreed graph:
/// `f(d1) = 1`, `f(d2) = (lambda d1 + (1-lambda) d2) / (lambda d2 + (1-lambda) d1)`.
pub fn bidegreed_weight<T: Scalar>(degree: usize, d1: usize, d2: usize, lambda: &T) -> T {
    if degree == d1 {
        return T::one();
    }
    debug_assert_eq!(degree, d2);
    let l = lambda.clone();
    let m = T::one() - l.clone();
    let (a, b) = (T::from_usize(d1), T::from_usize(d2));
    (l.clone() * a.clone() + m.clone() * b.clone()) / (l * b + m * a)
}

/// Neutral (`r = 1`) fixation probability on a bidegreed graph:
/// `sum_{v in S} f(deg_v) / sum_{v in V} f(deg_v)`.
pub fn bidegreed_neutral_fp<T: Scalar>(g: &Graph, lambda: &T, s: &Configuration) -> Result<T, ClosedFormError> {
    let profile = g.degree_profile();
    let (d1, d2) = profile
        .bidegree()
        .ok_or_else(|| ClosedFormError::NotBidegreed(profile.distinct_degrees.clone()))?;
    if s.n() != g.n() {
        return Err(ClosedFormError::InvalidParam("configuration size does not match graph".into()));
    }
    if !(*lambda >= T::zero() && *lambda <= T::one()) {
        return Err(ClosedFormError::InvalidParam(format!("lambda {lambda:?}")));
    }
    let f = |v: usize| bidegreed_weight(g.degree(v), d1, d2, lambda);
    let num = s.iter().fold(T::zero(), |acc, v| acc + f(v));
    let den = (0..g.n()).fold(T::zero(), |acc, v| acc + f(v));
    Ok(num / den)
}

/// Step probabilities of the mutant run length on a cycle with `k` mutants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRates<T> {
    pub k: usize,
    pub p_up: T,
    pub p_down: T,
    /// `p_down / p_up`.
    pub gamma: T,
    /// `F_k = r k + (n - k)`.
    pub total_fitness: T,
}

pub fn cycle_rates<T: Scalar>(n: usize, k: usize, params: &Params<T>) -> Result<CycleRates<T>, ClosedFormError> {
    if n < 3 || k == 0 || k >= n {
        return Err(ClosedFormError::InvalidParam(format!(
            "cycle rates need n >= 3 and 1 <= k < n, got n = {n}, k = {k}"
        )));
    }
    let l = params.lambda().clone();
    let m = T::one() - l.clone();
    let r = params.r().clone();
    let nt = T::from_usize(n);
    let f = r.clone() * T::from_usize(k) + T::from_usize(n - k);
    let two = T::from_usize(2);
    let split = (T::one() + r.clone()) * nt.clone();

    let db_up = if k < n - 1 {
        two.clone() * r.clone() / split.clone()
    } else {
        T::one() / nt.clone()
    };
    let db_down = if k > 1 { two / split } else { T::one() / nt };
    let p_up = l.clone() * r / f.clone() + m.clone() * db_up;
    let p_down = l / f.clone() + m * db_down;
    Ok(CycleRates {
        k,
        gamma: p_down.clone() / p_up.clone(),
        p_up,
        p_down,
        total_fitness: f,
    })
}

/// Single-mutant fixation probability on the `n`-cycle,
/// `1 / (1 + sum_{j=1}^{n-1} prod_{k=1}^{j} gamma_k)`, evaluated with a plain
/// running product. Exact for rational parameters.
pub fn cycle_fp_exact<T: Scalar>(n: usize, params: &Params<T>) -> Result<T, ClosedFormError> {
    let mut sum = T::one();
    let mut prod = T::one();
    for k in 1..n {
        prod = prod * cycle_rates(n, k, params)?.gamma;
        sum = sum + prod.clone();
    }
    Ok(T::one() / sum)
}

/// Floating-point [`cycle_fp_exact`] that switches to log space when a
/// partial product leaves `[1e-300, 1e300]`.
pub fn cycle_fp(n: usize, params: &ProcessParams) -> Result<f64, ClosedFormError> {
    let gammas = (1..n)
        .map(|k| cycle_rates(n, k, params).map(|c| c.gamma))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut sum = 1.0;
    let mut prod = 1.0;
    let mut in_range = true;
    for &g in &gammas {
        prod *= g;
        if !(1e-300..=1e300).contains(&prod) {
            in_range = false;
            break;
        }
        sum += prod;
    }
    if in_range {
        return Ok(1.0 / sum);
    }
    // log fp = -log(1 + sum_j exp(L_j)), L_j = sum_{k <= j} ln gamma_k.
    let mut logs = Vec::with_capacity(n);
    logs.push(0.0);
    let mut acc = 0.0;
    for &g in &gammas {
        acc += g.ln();
        logs.push(acc);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    Ok((-lse).exp())
}

/// One-step coefficients of the star chain at `i` mutant leaves.
///
/// Center mutant: `(1 - C) P*_i = A P*_{i+1} + B P0_i`.
/// Center resident: `(1 - b) P0_i = a P*_i + c P0_{i-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarStep<T> {
    pub i: usize,
    pub cap_a: T,
    pub cap_b: T,
    pub cap_c: T,
    pub a: T,
    pub b: T,
    pub c: T,
    /// `A / (1 - C)`
    pub alpha: T,
    /// `B / (1 - C)`
    pub beta: T,
    /// `a / (1 - b)`
    pub p: T,
    /// `c / (1 - b)`
    pub q: T,
}

pub type Matrix2<T> = [[T; 2]; 2];

fn mat_mul<T: Scalar>(x: &Matrix2<T>, y: &Matrix2<T>) -> Matrix2<T> {
    let e = |i: usize, j: usize| x[i][0].clone() * y[0][j].clone() + x[i][1].clone() * y[1][j].clone();
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarCoefficients<T> {
    pub leaves: usize,
    /// Entries for `i = 0..=leaves`.
    pub steps: Vec<StarStep<T>>,
    /// `M_i` for `i = 1..leaves`, stored at index `i - 1`.
    pub transfer: Vec<Matrix2<T>>,
    /// `A^(i) = M_i ... M_1` for `i = 1..leaves`, stored at index `i - 1`.
    pub cumulative: Vec<Matrix2<T>>,
}

pub fn star_coefficients<T: Scalar>(leaves: usize, params: &Params<T>) -> Result<StarCoefficients<T>, ClosedFormError> {
    if leaves < 2 {
        return Err(ClosedFormError::InvalidParam(format!("star needs at least 2 leaves, got {leaves}")));
    }
    let big_n = T::from_usize(leaves);
    let n = T::from_usize(leaves + 1);
    let l = params.lambda().clone();
    let m = T::one() - l.clone();
    let r = params.r().clone();

    let mut steps = Vec::with_capacity(leaves + 1);
    for i in 0..=leaves {
        let it = T::from_usize(i);
        let d = T::from_usize(leaves - i);
        let ri = r.clone() * it.clone();
        let f_star = ri.clone() + d.clone() + r.clone();
        let f_empty = ri.clone() + d.clone() + T::one();
        let g = ri.clone() + d.clone();

        let cap_a = l.clone() * r.clone() * d.clone() / (big_n.clone() * f_star.clone()) + m.clone() * d.clone() / n.clone();
        let cap_b = l.clone() * d.clone() / f_star.clone() + m.clone() * d.clone() / (n.clone() * g.clone());
        let cap_c = l.clone() * (ri.clone() / f_star.clone() + ri.clone() / (big_n.clone() * f_star.clone()))
            + m.clone() * (it.clone() / n.clone() + ri.clone() / (n.clone() * g.clone()));
        let a = l.clone() * ri.clone() / f_empty.clone() + m.clone() * ri.clone() / (n.clone() * g.clone());
        let c = l.clone() * it.clone() / (big_n.clone() * f_empty) + m.clone() * it / n.clone();
        let b = T::one() - a.clone() - c.clone();

        let one_minus_cap_c = T::one() - cap_c.clone();
        let one_minus_b = T::one() - b.clone();
        // Both normalisers vanish only where the state is absorbing.
        let (alpha, beta) = if i < leaves {
            if !(one_minus_cap_c > T::zero()) {
                return Err(ClosedFormError::SingularRecurrence(i));
            }
            (cap_a.clone() / one_minus_cap_c.clone(), cap_b.clone() / one_minus_cap_c)
        } else {
            (T::zero(), T::zero())
        };
        let (p, q) = if i > 0 {
            if !(one_minus_b > T::zero()) {
                return Err(ClosedFormError::SingularRecurrence(i));
            }
            (a.clone() / one_minus_b.clone(), c.clone() / one_minus_b)
        } else {
            (T::zero(), T::zero())
        };
        steps.push(StarStep {
            i,
            cap_a,
            cap_b,
            cap_c,
            a,
            b,
            c,
            alpha,
            beta,
            p,
            q,
        });
    }

    let mut transfer = Vec::with_capacity(leaves - 1);
    let mut cumulative: Vec<Matrix2<T>> = Vec::with_capacity(leaves - 1);
    for s in &steps[1..leaves] {
        if !(s.alpha > T::zero()) {
            return Err(ClosedFormError::SingularRecurrence(s.i));
        }
        let mi = [
            [
                (T::one() - s.beta.clone() * s.p.clone()) / s.alpha.clone(),
                T::zero() - s.beta.clone() * s.q.clone() / s.alpha.clone(),
            ],
            [s.p.clone(), s.q.clone()],
        ];
        let acc = match cumulative.last() {
            Some(prev) => mat_mul(&mi, prev),
            None => mi.clone(),
        };
        transfer.push(mi);
        cumulative.push(acc);
    }
    Ok(StarCoefficients {
        leaves,
        steps,
        transfer,
        cumulative,
    })
}

/// Fixation probabilities on the star with `leaves` leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarSolution<T> {
    pub leaves: usize,
    /// Single mutant at the center, `P*_0`.
    pub center_start: T,
    /// Single mutant on a leaf, `P0_1`.
    pub leaf_start: T,
    /// `P*_i` for `i = 0..=leaves` mutant leaves with a mutant center.
    pub center_mutant: Vec<T>,
    /// `P0_i` for `i = 0..=leaves` mutant leaves with a resident center.
    pub center_resident: Vec<T>,
}

impl<T: Scalar> StarSolution<T> {
    /// Fixation probability of a configuration on [`crate::graph::families::star`]
    /// (center 0).
    pub fn fp(&self, cfg: &Configuration) -> T {
        let center = cfg.contains(0);
        let i = cfg.len() - usize::from(center);
        if center {
            self.center_mutant[i].clone()
        } else {
            self.center_resident[i].clone()
        }
    }
}

/// Solves the star by the transfer-matrix recurrence.
///
/// `P*_1 = 1 / A^(N-1)[0][0]` from the boundary values `P*_N = 1` and
/// `P0_0 = 0`; the rest of the table follows by forward substitution
/// `P0_i = p_i P*_i + q_i P0_{i-1}`, `P*_{i+1} = (P*_i - beta_i P0_i) / alpha_i`,
/// with `P*_0 = alpha_0 P*_1`.
pub fn star_fp<T: Scalar>(leaves: usize, params: &Params<T>) -> Result<StarSolution<T>, ClosedFormError> {
    let coeffs = star_coefficients(leaves, params)?;
    let top = coeffs.cumulative[leaves - 2][0][0].clone();
    if !(top > T::zero()) {
        return Err(ClosedFormError::SingularRecurrence(leaves - 1));
    }
    let s = &coeffs.steps;
    let mut star = vec![T::zero(); leaves + 1];
    let mut empty = vec![T::zero(); leaves + 1];
    star[1] = T::one() / top;
    for i in 1..leaves {
        empty[i] = s[i].p.clone() * star[i].clone() + s[i].q.clone() * empty[i - 1].clone();
        star[i + 1] = (star[i].clone() - s[i].beta.clone() * empty[i].clone()) / s[i].alpha.clone();
    }
    // The boundary values are known exactly; pin them.
    star[leaves] = T::one();
    empty[leaves] = s[leaves].p.clone() * star[leaves].clone() + s[leaves].q.clone() * empty[leaves - 1].clone();
    star[0] = s[0].alpha.clone() * star[1].clone();
    Ok(StarSolution {
        leaves,
        center_start: star[0].clone(),
        leaf_start: empty[1].clone(),
        center_mutant: star,
        center_resident: empty,
    })
}
