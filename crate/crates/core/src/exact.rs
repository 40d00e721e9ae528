//! Brute-force absorbing-chain solver over all `2^n` configurations.
//!
//! Rows are built from [`transition_distribution`] with the self-loop
//! eliminated, so state `S` satisfies
//! `x[S] = c[S] + sum_v P'(S -> S ^ v) x[S ^ v]` where `P' = P / (1 - stay)`.
//! For fixation `c = 0` with `x[V] = 1`; for absorption time `c = 1 / (1 - stay)`.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::kernel::{transition_distribution, Configuration, ExactParams, Params, ProcessParams};
use crate::scalar::{Rational, Scalar};

pub const DEFAULT_MAX_N: usize = 16;
pub const RATIONAL_MAX_N: usize = 8;
pub const DENSE_MAX_N: usize = 11;
pub const RESIDUAL_TARGET: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("graph has {n} vertices, exact solving is capped at {max_n}")]
    TooLarge { n: usize, max_n: usize },
    #[error("no convergence after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular system at state {0}")]
    Singular(u64),
}

/// Packed configuration bits: bit `v` set iff vertex `v` is a mutant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateIndex(pub u64);

impl StateIndex {
    pub const EMPTY: StateIndex = StateIndex(0);

    pub fn full(n: usize) -> Self {
        StateIndex(state_count(n) as u64 - 1)
    }

    pub fn of(cfg: &Configuration) -> Self {
        StateIndex(cfg.index())
    }

    pub fn to_configuration(self, n: usize) -> Configuration {
        Configuration::from_index(n, self.0)
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }
}

fn state_count(n: usize) -> usize {
    1usize << n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Alternating increasing/decreasing `|S|` Gauss-Seidel sweeps.
    GaussSeidel,
    /// Dense LU with partial pivoting over the transient states.
    DenseLu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_n: usize,
    pub method: Method,
    /// Target for the max-norm residual of both systems (relative for times).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_n: DEFAULT_MAX_N,
            method: Method::GaussSeidel,
            tolerance: 1e-13,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSolution<T> {
    pub n: usize,
    pub params: Params<T>,
    /// Indexed by [`StateIndex`].
    pub fp: Vec<T>,
    pub abs_time: Vec<T>,
    pub iterations: usize,
    /// Max-norm residual; zero in rational mode.
    pub residual: f64,
}

impl<T: Scalar> ExactSolution<T> {
    pub fn fixation_probability(&self, s: &Configuration) -> T {
        assert_eq!(s.n(), self.n, "configuration size does not match solution");
        self.fp[s.index() as usize].clone()
    }

    pub fn absorption_time(&self, s: &Configuration) -> T {
        assert_eq!(s.n(), self.n, "configuration size does not match solution");
        self.abs_time[s.index() as usize].clone()
    }

    pub fn fp_at(&self, idx: StateIndex) -> &T {
        &self.fp[idx.0 as usize]
    }

    pub fn abs_time_at(&self, idx: StateIndex) -> &T {
        &self.abs_time[idx.0 as usize]
    }

    pub fn states(&self) -> impl Iterator<Item = StateIndex> {
        (0..self.fp.len() as u64).map(StateIndex)
    }
}

/// Sparse rows with the self-loop removed. Row `i` belongs to state `i`;
/// absorbing rows are empty.
struct Rows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    probs: Vec<f64>,
    /// `1 / (1 - stay)`: expected time spent in the state per visit.
    hold: Vec<f64>,
}

impl Rows {
    fn build(g: &Graph, params: &ProcessParams) -> Result<Self, ExactError> {
        let n = g.n();
        let states = state_count(n);
        let mut offsets = Vec::with_capacity(states + 1);
        let mut cols = Vec::with_capacity(states * n);
        let mut probs = Vec::with_capacity(states * n);
        let mut hold = vec![0.0; states];
        offsets.push(0);
        for s in 0..states as u64 {
            let cfg = Configuration::from_index(n, s);
            if !cfg.is_absorbing() {
                let dist = transition_distribution(g, &cfg, params);
                let out = dist.total_gain() + dist.total_loss();
                if !(out > 0.0) {
                    return Err(ExactError::Singular(s));
                }
                for v in 0..n {
                    let p = dist.flip_probability(v);
                    if p > 0.0 {
                        cols.push((s ^ (1u64 << v)) as u32);
                        probs.push(p / out);
                    }
                }
                hold[s as usize] = 1.0 / out;
            }
            offsets.push(cols.len());
        }
        Ok(Rows {
            offsets,
            cols,
            probs,
            hold,
        })
    }

    fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[s]..self.offsets[s + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.probs[span])
            .map(|(&c, &p)| (c as usize, p))
    }

    /// Max residual of the fixation system and max relative residual of the
    /// time system.
    fn residual(&self, fp: &[f64], time: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for s in 1..fp.len() - 1 {
            let (mut f, mut t) = (0.0, self.hold[s]);
            for (c, p) in self.row(s) {
                f += p * fp[c];
                t += p * time[c];
            }
            worst = worst.max((fp[s] - f).abs());
            worst = worst.max((time[s] - t).abs() / time[s].abs().max(1.0));
        }
        worst
    }
}

fn check_size(n: usize, max_n: usize) -> Result<(), ExactError> {
    if n > max_n || n >= 63 {
        return Err(ExactError::TooLarge { n, max_n });
    }
    Ok(())
}

/// Solves with default options and the given vertex cap.
pub fn solve(g: &Graph, params: &ProcessParams, max_n: usize) -> Result<ExactSolution<f64>, ExactError> {
    solve_with(
        g,
        params,
        &SolverOptions {
            max_n,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_with(g: &Graph, params: &ProcessParams, opts: &SolverOptions) -> Result<ExactSolution<f64>, ExactError> {
    let n = g.n();
    check_size(n, opts.max_n)?;
    if opts.method == Method::DenseLu {
        check_size(n, DENSE_MAX_N)?;
    }
    let rows = Rows::build(g, params)?;
    let (fp, abs_time, iterations) = match opts.method {
        Method::GaussSeidel => gauss_seidel(&rows, n, opts)?,
        Method::DenseLu => dense_lu(&rows, n)?,
    };
    let residual = rows.residual(&fp, &abs_time);
    if residual > RESIDUAL_TARGET.max(opts.tolerance) {
        return Err(ExactError::NonConvergence { iterations, residual });
    }
    Ok(ExactSolution {
        n,
        params: params.clone(),
        fp,
        abs_time,
        iterations,
        residual,
    })
}

type Solved = (Vec<f64>, Vec<f64>, usize);

fn gauss_seidel(rows: &Rows, n: usize, opts: &SolverOptions) -> Result<Solved, ExactError> {
    let states = state_count(n);
    let full = states - 1;
    let mut order: Vec<usize> = (1..full).collect();
    order.sort_by_key(|&s| (s.count_ones(), s));

    let mut fp = vec![0.0; states];
    fp[full] = 1.0;
    // Neutral-style start values are close for most instances.
    for &s in &order {
        fp[s] = s.count_ones() as f64 / n as f64;
    }
    let mut time = vec![0.0; states];

    let sweep = |s: usize, fp: &mut [f64], time: &mut [f64]| -> f64 {
        let (mut f, mut t) = (0.0, rows.hold[s]);
        for (c, p) in rows.row(s) {
            f += p * fp[c];
            t += p * time[c];
        }
        let delta = (fp[s] - f).abs().max((time[s] - t).abs() / t.max(1.0));
        fp[s] = f;
        time[s] = t;
        delta
    };

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iterations {
        let mut delta = 0.0f64;
        if iterations % 2 == 0 {
            for &s in &order {
                delta = delta.max(sweep(s, &mut fp, &mut time));
            }
        } else {
            for &s in order.iter().rev() {
                delta = delta.max(sweep(s, &mut fp, &mut time));
            }
        }
        iterations += 1;
        if delta <= opts.tolerance {
            residual = rows.residual(&fp, &time);
            if residual <= opts.tolerance {
                return Ok((fp, time, iterations));
            }
        }
    }
    Err(ExactError::NonConvergence { iterations, residual })
}

fn dense_lu(rows: &Rows, n: usize) -> Result<Solved, ExactError> {
    let states = state_count(n);
    let full = states - 1;
    let m = states - 2;
    // Unknown k is state k + 1.
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![[0.0f64; 2]; m];
    for k in 0..m {
        let s = k + 1;
        a[k * m + k] = 1.0;
        rhs[k][1] = rows.hold[s];
        for (c, p) in rows.row(s) {
            if c == full {
                rhs[k][0] += p;
            } else if c != 0 {
                a[k * m + c - 1] -= p;
            }
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col] == 0.0 {
            return Err(ExactError::Singular(col as u64 + 1));
        }
        if pivot != col {
            for j in 0..m {
                a.swap(pivot * m + j, col * m + j);
            }
            rhs.swap(pivot, col);
        }
        let d = a[col * m + col];
        for i in col + 1..m {
            let factor = a[i * m + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..m {
                a[i * m + j] -= factor * a[col * m + j];
            }
            rhs[i][0] -= factor * rhs[col][0];
            rhs[i][1] -= factor * rhs[col][1];
        }
    }
    let mut x = vec![[0.0f64; 2]; m];
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for j in i + 1..m {
            acc[0] -= a[i * m + j] * x[j][0];
            acc[1] -= a[i * m + j] * x[j][1];
        }
        let d = a[i * m + i];
        x[i] = [acc[0] / d, acc[1] / d];
    }
    let mut fp = vec![0.0; states];
    let mut time = vec![0.0; states];
    fp[full] = 1.0;
    for (k, v) in x.into_iter().enumerate() {
        fp[k + 1] = v[0];
        time[k + 1] = v[1];
    }
    Ok((fp, time, 1))
}

/// Exact solve over the rationals by Gaussian elimination on
/// `(1 - stay) x[S] - sum P x[S'] = b[S]`.
pub fn solve_rational(g: &Graph, params: &ExactParams, max_n: usize) -> Result<ExactSolution<Rational>, ExactError> {
    let n = g.n();
    check_size(n, max_n)?;
    let states = state_count(n);
    let full = states - 1;
    let m = states - 2;
    let zero = Rational::from_usize(0);
    let one = Rational::from_usize(1);

    // Augmented rows: m coefficients then the two right-hand sides.
    let mut a: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for k in 0..m {
        let s = (k + 1) as u64;
        let cfg = Configuration::from_index(n, s);
        let dist = transition_distribution(g, &cfg, params);
        let mut row = vec![zero.clone(); m + 2];
        row[k] = dist.total_gain() + dist.total_loss();
        row[m + 1] = one.clone();
        for v in 0..n {
            let p = dist.flip_probability(v);
            if p == zero {
                continue;
            }
            let t = (s ^ (1u64 << v)) as usize;
            if t == full {
                row[m] = row[m].clone() + p;
            } else if t != 0 {
                row[t - 1] = row[t - 1].clone() - p;
            }
        }
        a.push(row);
    }

    for col in 0..m {
        let pivot = (col..m)
            .find(|&i| a[i][col] != zero)
            .ok_or(ExactError::Singular(col as u64 + 1))?;
        a.swap(pivot, col);
        let inv = one.clone() / a[col][col].clone();
        for v in a[col][col..].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let (head, tail) = a.split_at_mut(col + 1);
        let prow = &head[col];
        for row in tail.iter_mut() {
            if row[col] == zero {
                continue;
            }
            let factor = row[col].clone();
            for j in col..m + 2 {
                if prow[j] != zero {
                    row[j] = row[j].clone() - factor.clone() * prow[j].clone();
                }
            }
        }
    }
    for col in (0..m).rev() {
        let (head, tail) = a.split_at_mut(col);
        let prow = &tail[0];
        let (bf, bt) = (prow[m].clone(), prow[m + 1].clone());
        for row in head.iter_mut() {
            if row[col] == zero {
                continue;
            }
            let factor = std::mem::replace(&mut row[col], zero.clone());
            row[m] = row[m].clone() - factor.clone() * bf.clone();
            row[m + 1] = row[m + 1].clone() - factor * bt.clone();
        }
    }

    let mut fp = vec![zero.clone(); states];
    let mut abs_time = vec![zero.clone(); states];
    fp[full] = one;
    for (k, row) in a.into_iter().enumerate() {
        let mut row = row;
        abs_time[k + 1] = row.pop().unwrap_or_default();
        fp[k + 1] = row.pop().unwrap_or_default();
    }
    Ok(ExactSolution {
        n,
        params: params.clone(),
        fp,
        abs_time,
        iterations: 1,
        residual: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families, parse_edge_list};
    use crate::scalar::parse_rational;

    const EXAMPLE5: &str = "0 1\n1 2\n1 3\n1 4\n2 3\n3 4\n";

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn single(n: usize, v: usize) -> Configuration {
        Configuration::from_vertices(n, [v]).unwrap()
    }

    #[test]
    fn example_graph_golden_values_rational() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        for (l, want) in [("1", "6/31"), ("0", "1/6"), ("1/2", "1/5")] {
            let sol = solve_rational(&g, &ExactParams::from_decimal(l, "1").unwrap(), RATIONAL_MAX_N).unwrap();
            assert_eq!(sol.fixation_probability(&single(5, 2)), q(want), "lambda {l}");
        }
    }

    #[test]
    fn example_graph_golden_values_float() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        for (l, want) in [(1.0, 6.0 / 31.0), (0.0, 1.0 / 6.0), (0.5, 0.2)] {
            let p = ProcessParams::new(l, 1.0).unwrap();
            for method in [Method::GaussSeidel, Method::DenseLu] {
                let opts = SolverOptions {
                    method,
                    ..SolverOptions::default()
                };
                let sol = solve_with(&g, &p, &opts).unwrap();
                assert!((sol.fixation_probability(&single(5, 2)) - want).abs() < 1e-12);
                assert!(sol.residual <= RESIDUAL_TARGET);
            }
        }
    }

    #[test]
    fn lookup_boundaries() {
        let g = families::cycle(4).unwrap();
        let sol = solve(&g, &ProcessParams::new(0.3, 2.0).unwrap(), DEFAULT_MAX_N).unwrap();
        assert_eq!(sol.fixation_probability(&Configuration::full(4)), 1.0);
        assert_eq!(sol.fixation_probability(&Configuration::empty(4)), 0.0);
        assert_eq!(*sol.abs_time_at(StateIndex::EMPTY), 0.0);
        assert_eq!(*sol.abs_time_at(StateIndex::full(4)), 0.0);
        for s in sol.states().filter(|s| s.size() > 0 && s.size() < 4) {
            let f = *sol.fp_at(s);
            assert!((0.0..=1.0).contains(&f));
            assert!(*sol.abs_time_at(s) >= 1.0);
        }
    }

    #[test]
    fn two_vertices_is_gamblers_ruin() {
        // One step always absorbs. Bd picks the reproducer by fitness, dB picks
        // the victim uniformly, so fp = lambda r / (1 + r) + (1 - lambda) / 2.
        let g = families::complete(2).unwrap();
        for l in ["0", "1/3", "1"] {
            for r in ["1/2", "1", "3"] {
                let p = ExactParams::from_decimal(l, r).unwrap();
                let sol = solve_rational(&g, &p, RATIONAL_MAX_N).unwrap();
                let (lv, rv) = (q(l), q(r));
                let want = lv.clone() * rv.clone() / (q("1") + rv) + (q("1") - lv) / q("2");
                assert_eq!(sol.fixation_probability(&single(2, 0)), want);
                assert_eq!(*sol.abs_time_at(StateIndex(1)), q("1"));
            }
        }
    }

    #[test]
    fn float_and_rational_modes_agree() {
        let g = families::star(4).unwrap();
        let p = ExactParams::from_decimal("0.25", "2").unwrap();
        let exact = solve_rational(&g, &p, RATIONAL_MAX_N).unwrap();
        let float = solve(&g, &p.to_float(), DEFAULT_MAX_N).unwrap();
        for s in float.states() {
            assert!((float.fp_at(s) - exact.fp_at(s).to_f64()).abs() < 1e-11);
            let t = exact.abs_time_at(s).to_f64();
            assert!((float.abs_time_at(s) - t).abs() < 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn neutral_half_lambda_is_proportional() {
        let g = families::book(2).unwrap();
        let n = g.n();
        let sol = solve(&g, &ProcessParams::new(0.5, 1.0).unwrap(), DEFAULT_MAX_N).unwrap();
        for s in sol.states() {
            assert!((sol.fp_at(s) - s.size() as f64 / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn too_large_is_refused() {
        let g = families::cycle(9).unwrap();
        assert_eq!(
            solve(&g, &ProcessParams::new(0.5, 1.0).unwrap(), 8).unwrap_err(),
            ExactError::TooLarge { n: 9, max_n: 8 }
        );
        let opts = SolverOptions {
            method: Method::DenseLu,
            ..SolverOptions::default()
        };
        let big = families::cycle(12).unwrap();
        assert!(matches!(
            solve_with(&big, &ProcessParams::new(0.5, 1.0).unwrap(), &opts),
            Err(ExactError::TooLarge { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let g = families::path(6).unwrap();
        let opts = SolverOptions {
            max_iterations: 2,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_with(&g, &ProcessParams::new(0.2, 3.0).unwrap(), &opts),
            Err(ExactError::NonConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn sixteen_vertices_solve() {
        let g = families::cycle(16).unwrap();
        let sol = solve(&g, &ProcessParams::new(0.5, 2.0).unwrap(), DEFAULT_MAX_N).unwrap();
        let want = crate::closed_forms::cycle_fp(16, &ProcessParams::new(0.5, 2.0).unwrap()).unwrap();
        assert!((sol.fixation_probability(&single(16, 5)) - want).abs() < 1e-9);
    }
}
