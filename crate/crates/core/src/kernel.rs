//! The lambda-mixed Moran process: one-step transition law, step sampling and
//! trajectories to absorption.
//!
//! Each step is a Birth-death (Bd) update with probability `lambda` and a
//! death-Birth (dB) update otherwise. Mutants have fitness `r`, residents 1.
//!
//! * Bd: a reproducer `u` is drawn proportional to fitness, then a uniform
//!   neighbour `v` of `u` takes `u`'s type.
//! * dB: a uniform vertex `v` dies, then a neighbour drawn proportional to
//!   fitness places its type at `v`.
//!
//! Only the vertex whose type changes matters for the next configuration, so
//! the kernel is kept marginalised to per-vertex flip probabilities.

use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::scalar::{parse_rational, rational_from_f64, Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("lambda must lie in [0, 1], got {0}")]
    Lambda(String),
    #[error("fitness r must be positive and finite, got {0}")]
    Fitness(String),
    #[error("cannot parse {0:?} as a number")]
    Parse(String),
}

/// `(lambda, r)`: Bd probability per step and mutant fitness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params<T> {
    lambda: T,
    r: T,
}

pub type ProcessParams = Params<f64>;
pub type ExactParams = Params<Rational>;

impl<T: Scalar> Params<T> {
    pub fn new(lambda: T, r: T) -> Result<Self, ParamError> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(ParamError::Lambda(format!("{lambda:?}")));
        }
        if !(r > T::zero()) || !r.to_f64().is_finite() {
            return Err(ParamError::Fitness(format!("{r:?}")));
        }
        Ok(Params { lambda, r })
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    pub fn r(&self) -> &T {
        &self.r
    }

    pub fn to_float(&self) -> ProcessParams {
        Params {
            lambda: self.lambda.to_f64(),
            r: self.r.to_f64(),
        }
    }
}

impl ProcessParams {
    pub fn parse(lambda: &str, r: &str) -> Result<Self, ParamError> {
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| ParamError::Parse(s.into()));
        Self::new(parse(lambda)?, parse(r)?)
    }

    /// Exact rational image of the stored doubles.
    pub fn to_exact(&self) -> ExactParams {
        Params {
            lambda: rational_from_f64(self.lambda).expect("lambda is finite"),
            r: rational_from_f64(self.r).expect("r is finite"),
        }
    }
}

impl ExactParams {
    /// Parses decimal or `a/b` literals exactly, so `"0.1"` is one tenth.
    pub fn from_decimal(lambda: &str, r: &str) -> Result<Self, ParamError> {
        let parse = |s: &str| parse_rational(s).map_err(|_| ParamError::Parse(s.into()));
        Self::new(parse(lambda)?, parse(r)?)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("vertex {vertex} out of range for n = {n}")]
pub struct VertexOutOfRange {
    pub vertex: usize,
    pub n: usize,
}

/// Mutant set `S` over vertices `0..n`, bit-packed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Configuration {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut cfg = Self::empty(n);
        for (i, w) in cfg.words.iter_mut().enumerate() {
            let bits = (n - 64 * i).min(64);
            *w = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        }
        cfg
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(n: usize, vertices: I) -> Result<Self, VertexOutOfRange> {
        let mut cfg = Self::empty(n);
        for v in vertices {
            if v >= n {
                return Err(VertexOutOfRange { vertex: v, n });
            }
            cfg.insert(v);
        }
        Ok(cfg)
    }

    /// Configuration whose bit `v` is bit `v` of `index`. Requires `n <= 64`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64, "packed index needs n <= 64");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        assert!(index & !mask == 0, "index has bits beyond n");
        Configuration {
            n,
            words: if n == 0 { vec![] } else { vec![index] },
        }
    }

    /// Packed-integer image of the set. Requires `n <= 64`.
    pub fn index(&self) -> u64 {
        assert!(self.n <= 64, "packed index needs n <= 64");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.words[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn insert(&mut self, v: usize) {
        assert!(v < self.n);
        self.words[v / 64] |= 1 << (v % 64);
    }

    pub fn remove(&mut self, v: usize) {
        assert!(v < self.n);
        self.words[v / 64] &= !(1 << (v % 64));
    }

    pub fn with(&self, v: usize) -> Self {
        let mut c = self.clone();
        c.insert(v);
        c
    }

    pub fn without(&self, v: usize) -> Self {
        let mut c = self.clone();
        c.remove(v);
        c
    }

    pub fn toggled(&self, v: usize) -> Self {
        if self.contains(v) {
            self.without(v)
        } else {
            self.with(v)
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n
    }

    pub fn is_absorbing(&self) -> bool {
        self.is_empty() || self.is_full()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.contains(v))
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration(n={}, ", self.n)?;
        f.debug_set().entries(self.iter()).finish()?;
        write!(f, ")")
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// `w(S) = r|S| + (n - |S|)`.
pub fn total_fitness<T: Scalar>(cfg: &Configuration, params: &Params<T>) -> T {
    let m = cfg.len();
    params.r.clone() * T::from_usize(m) + T::from_usize(cfg.n() - m)
}

/// `w_u(S) = r|N(u) & S| + (deg_u - |N(u) & S|)`.
pub fn neighborhood_fitness<T: Scalar>(g: &Graph, cfg: &Configuration, u: usize, params: &Params<T>) -> T {
    let k = mutant_neighbors(g, cfg, u);
    params.r.clone() * T::from_usize(k) + T::from_usize(g.degree(u) - k)
}

pub(crate) fn mutant_neighbors(g: &Graph, cfg: &Configuration, u: usize) -> usize {
    g.neighbors(u).iter().filter(|&&x| cfg.contains(x)).count()
}

/// One-step law from a configuration, marginalised to which vertex flips.
///
/// `gain[v]` is the probability a mutant is placed at resident `v`;
/// `loss[u]` the probability a resident is placed at mutant `u`. Entries for
/// vertices that cannot flip that way are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution<T> {
    pub gain: Vec<T>,
    pub loss: Vec<T>,
    pub stay: T,
}

impl<T: Scalar> TransitionDistribution<T> {
    pub fn total_gain(&self) -> T {
        self.gain.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn total_loss(&self) -> T {
        self.loss.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// Probability that vertex `v` changes type.
    pub fn flip_probability(&self, v: usize) -> T {
        self.gain[v].clone() + self.loss[v].clone()
    }

    /// `stay + sum(gain) + sum(loss)`; one up to rounding.
    pub fn total(&self) -> T {
        self.stay.clone() + self.total_gain() + self.total_loss()
    }
}

pub fn transition_distribution<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    params: &Params<T>,
) -> TransitionDistribution<T> {
    let n = g.n();
    assert_eq!(cfg.n(), n, "configuration size does not match graph");
    let mut gain = vec![T::zero(); n];
    let mut loss = vec![T::zero(); n];
    if cfg.is_absorbing() {
        return TransitionDistribution {
            gain,
            loss,
            stay: T::one(),
        };
    }

    let lambda = params.lambda.clone();
    let dead = T::one() - lambda.clone();
    let r = params.r.clone();
    let w = total_fitness(cfg, params);
    let n_t = T::from_usize(n);

    let mut flips = T::zero();
    for v in 0..n {
        let deg = g.degree(v);
        let is_mutant = cfg.contains(v);
        // Bd: an opposite-type neighbour reproduces onto v.
        let mut birth = T::zero();
        let mut opposite = 0;
        for &u in g.neighbors(v) {
            if cfg.contains(u) != is_mutant {
                opposite += 1;
                birth = birth + T::one() / T::from_usize(g.degree(u));
            }
        }
        if opposite == 0 {
            continue;
        }
        let same = deg - opposite;
        let (opp_fit, same_fit) = if is_mutant {
            (T::one(), r.clone())
        } else {
            (r.clone(), T::one())
        };
        birth = birth * opp_fit.clone() / w.clone();
        // dB: v dies and an opposite-type neighbour wins the vacancy.
        let opp_weight = opp_fit * T::from_usize(opposite);
        let death = opp_weight.clone() / (n_t.clone() * (opp_weight + same_fit * T::from_usize(same)));
        let p = lambda.clone() * birth + dead.clone() * death;
        flips = flips + p.clone();
        if is_mutant {
            loss[v] = p;
        } else {
            gain[v] = p;
        }
    }
    let mut stay = T::one() - flips;
    if stay < T::zero() {
        stay = T::zero();
    }
    TransitionDistribution { gain, loss, stay }
}

/// Mutant set with O(1) uniform sampling inside each type class.
///
/// `order[..mutants]` lists the mutants, `order[mutants..]` the residents,
/// and `pos` inverts `order`.
#[derive(Debug, Clone)]
pub struct Population {
    is_mutant: Vec<bool>,
    order: Vec<usize>,
    pos: Vec<usize>,
    mutants: usize,
}

impl Population {
    pub fn new(cfg: &Configuration) -> Self {
        let n = cfg.n();
        let is_mutant: Vec<bool> = (0..n).map(|v| cfg.contains(v)).collect();
        let mut order: Vec<usize> = (0..n).filter(|&v| is_mutant[v]).collect();
        let mutants = order.len();
        order.extend((0..n).filter(|&v| !is_mutant[v]));
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        Population {
            is_mutant,
            order,
            pos,
            mutants,
        }
    }

    pub fn mutants(&self) -> usize {
        self.mutants
    }

    pub fn n(&self) -> usize {
        self.is_mutant.len()
    }

    pub fn is_absorbed(&self) -> bool {
        self.mutants == 0 || self.mutants == self.n()
    }

    pub fn to_configuration(&self) -> Configuration {
        Configuration::from_vertices(self.n(), self.order[..self.mutants].iter().copied())
            .expect("population vertices are in range")
    }

    fn swap_slots(&mut self, a: usize, b: usize) {
        self.order.swap(a, b);
        self.pos[self.order[a]] = a;
        self.pos[self.order[b]] = b;
    }

    fn set(&mut self, v: usize, mutant: bool) {
        if self.is_mutant[v] == mutant {
            return;
        }
        if mutant {
            self.swap_slots(self.pos[v], self.mutants);
            self.mutants += 1;
        } else {
            self.swap_slots(self.pos[v], self.mutants - 1);
            self.mutants -= 1;
        }
        self.is_mutant[v] = mutant;
    }

    /// Performs one mixed step. Returns the vertex whose type changed, if any.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, params: &ProcessParams, rng: &mut R) -> Option<usize> {
        let n = self.n();
        let m = self.mutants;
        if m == 0 || m == n {
            return None;
        }
        let r = params.r;
        let (target, mutant) = if rng.random::<f64>() < params.lambda {
            let mutant_weight = r * m as f64;
            let total = mutant_weight + (n - m) as f64;
            let u = if rng.random::<f64>() * total < mutant_weight {
                self.order[rng.random_range(0..m)]
            } else {
                self.order[m + rng.random_range(0..n - m)]
            };
            let nbrs = g.neighbors(u);
            (nbrs[rng.random_range(0..nbrs.len())], self.is_mutant[u])
        } else {
            let v = rng.random_range(0..n);
            let nbrs = g.neighbors(v);
            let k = nbrs.iter().filter(|&&x| self.is_mutant[x]).count();
            let mutant_weight = r * k as f64;
            let total = mutant_weight + (nbrs.len() - k) as f64;
            (v, rng.random::<f64>() * total < mutant_weight)
        };
        if self.is_mutant[target] == mutant {
            None
        } else {
            self.set(target, mutant);
            Some(target)
        }
    }
}

/// Samples the configuration after one step.
pub fn sample_step<R: Rng + ?Sized>(g: &Graph, cfg: &Configuration, params: &ProcessParams, rng: &mut R) -> Configuration {
    if cfg.is_absorbing() {
        return cfg.clone();
    }
    let mut pop = Population::new(cfg);
    match pop.step(g, params, rng) {
        Some(v) => cfg.toggled(v),
        None => cfg.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Absorption {
    Fixation,
    Extinction,
    /// `max_steps` elapsed without absorption.
    Cutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub absorption: Absorption,
    pub steps: u64,
}

/// Simulates from `cfg0` until fixation, extinction or `max_steps` steps.
pub fn run_to_absorption<R: Rng + ?Sized>(
    g: &Graph,
    cfg0: &Configuration,
    params: &ProcessParams,
    rng: &mut R,
    max_steps: u64,
) -> RunOutcome {
    let mut pop = Population::new(cfg0);
    let mut steps = 0;
    while !pop.is_absorbed() && steps < max_steps {
        pop.step(g, params, rng);
        steps += 1;
    }
    let absorption = if pop.mutants() == pop.n() {
        Absorption::Fixation
    } else if pop.mutants() == 0 {
        Absorption::Extinction
    } else {
        Absorption::Cutoff
    };
    RunOutcome { absorption, steps }
}

/// Default step cap: `100 n^4` scaled by the drift constant of the
/// absorption-time bound, `r/(r-1)` for `r > 1` and `1/(1-r)` for `r < 1`.
pub fn default_max_steps(n: usize, r: f64) -> u64 {
    let factor = if r > 1.0 {
        r / (r - 1.0)
    } else if r < 1.0 {
        1.0 / (1.0 - r)
    } else {
        1.0
    };
    let steps = 100.0 * (n as f64).powi(4) * factor.max(1.0);
    if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps.ceil() as u64
    }
}
