//! `φ̃`: the probability that an agent choosing actions uniformly at random
//! produces a trace satisfying a specification.

mod encoding;

use std::time::Instant;

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::automaton::{sample_trace, ProbabilisticAutomaton, StateId};
use crate::ptltl::{Formula, Monitor};
use crate::scalar::Weight;
use crate::{Error, Result};

pub use encoding::{UnrolledEncoding, DEFAULT_MAX_FRESH_BITS};

/// Default cap on enumerated runs.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

/// Manager size past which the decision-diagram backend starts afresh.
const DD_RESET_NODES: usize = 6_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    /// Walks every action sequence and stochastic branch.
    Enumeration { budget: u64 },
    /// Weighted model counting on the unrolled encoding.
    DecisionDiagram,
    /// Sample mean over seeded random runs.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Enumeration { .. } => "enumeration",
            Backend::DecisionDiagram => "decision-diagram",
            Backend::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Backend::MonteCarlo { .. })
    }
}

/// One served computation, for the query log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub formula: String,
    pub rand_rate: f64,
    pub backend: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    /// Distinct computations.
    pub queries: u64,
    pub cache_hits: u64,
    pub mean_query_seconds: f64,
    pub stddev_query_seconds: f64,
}

#[derive(Clone, Debug)]
struct Answer {
    value: f64,
    exact: Option<BigRational>,
    stderr: Option<f64>,
}

/// Memoizing `φ̃` oracle for one automaton and horizon.
///
/// Not synchronized: parallel callers [`fork`](Self::fork) one engine per
/// worker and [`merge`](Self::merge) them afterwards.
pub struct SatQueryEngine<'m> {
    automaton: &'m ProbabilisticAutomaton,
    horizon: usize,
    backend: Backend,
    max_fresh_bits: u32,
    cache: FxHashMap<String, Answer>,
    queries: u64,
    cache_hits: u64,
    log: Vec<QueryRecord>,
    encoding: Option<UnrolledEncoding>,
    samples: Option<SampleWords>,
}

impl<'m> SatQueryEngine<'m> {
    pub fn new(automaton: &'m ProbabilisticAutomaton, horizon: usize, backend: Backend) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if let Backend::MonteCarlo { samples: 0, .. } = backend {
            return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
        }
        Ok(Self {
            automaton,
            horizon,
            backend,
            max_fresh_bits: DEFAULT_MAX_FRESH_BITS,
            cache: FxHashMap::default(),
            queries: 0,
            cache_hits: 0,
            log: Vec::new(),
            encoding: None,
            samples: None,
        })
    }

    pub fn with_max_fresh_bits(mut self, bits: u32) -> Self {
        self.max_fresh_bits = bits;
        self
    }

    pub fn automaton(&self) -> &'m ProbabilisticAutomaton {
        self.automaton
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// `φ̃` from whichever backend the engine uses.
    pub fn query(&mut self, f: &Formula) -> Result<f64> {
        Ok(self.answer(f)?.value)
    }

    /// Exact `φ̃` as a float; fails on the Monte Carlo backend.
    pub fn rand_sat_exact(&mut self, f: &Formula) -> Result<f64> {
        self.require_exact()?;
        self.query(f)
    }

    /// Exact `φ̃` as a rational.
    pub fn rand_sat_rational(&mut self, f: &Formula) -> Result<BigRational> {
        self.require_exact()?;
        Ok(self.answer(f)?.exact.clone().expect("exact backends store rationals"))
    }

    /// Monte Carlo estimate and its standard error.
    pub fn rand_sat_mc(&mut self, f: &Formula) -> Result<(f64, f64)> {
        if self.backend.is_exact() {
            return Err(Error::InvalidInput(format!(
                "{} backend does not sample",
                self.backend.name()
            )));
        }
        let a = self.answer(f)?;
        Ok((a.value, a.stderr.expect("Monte Carlo answers carry an error")))
    }

    pub fn query_stats(&self) -> QueryStats {
        let n = self.log.len() as f64;
        let (mean, sd) = if self.log.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = self.log.iter().map(|r| r.seconds).sum::<f64>() / n;
            let var = self.log.iter().map(|r| (r.seconds - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        QueryStats {
            queries: self.queries,
            cache_hits: self.cache_hits,
            mean_query_seconds: mean,
            stddev_query_seconds: sd,
        }
    }

    pub fn query_log(&self) -> &[QueryRecord] {
        &self.log
    }

    /// A fresh engine with the same configuration and an empty cache.
    pub fn fork(&self) -> Self {
        Self {
            automaton: self.automaton,
            horizon: self.horizon,
            backend: self.backend,
            max_fresh_bits: self.max_fresh_bits,
            cache: FxHashMap::default(),
            queries: 0,
            cache_hits: 0,
            log: Vec::new(),
            encoding: None,
            samples: None,
        }
    }

    /// Absorbs the counters, log and cache of a forked engine.
    pub fn merge(&mut self, other: SatQueryEngine<'_>) {
        self.queries += other.queries;
        self.cache_hits += other.cache_hits;
        self.log.extend(other.log);
        for (k, v) in other.cache {
            self.cache.entry(k).or_insert(v);
        }
    }

    /// Whether `f` is already cached.
    pub fn is_cached(&self, f: &Formula) -> bool {
        self.cache.contains_key(&f.canonical_string())
    }

    fn require_exact(&self) -> Result<()> {
        if self.backend.is_exact() {
            Ok(())
        } else {
            Err(Error::InvalidInput("Monte Carlo backend gives estimates only".into()))
        }
    }

    fn answer(&mut self, f: &Formula) -> Result<&Answer> {
        let key = f.canonical_string();
        if self.cache.contains_key(&key) {
            self.cache_hits += 1;
            return Ok(&self.cache[&key]);
        }
        let start = Instant::now();
        let monitor = Monitor::compile(f, self.automaton.alphabet())?;
        let answer = match self.backend {
            Backend::Enumeration { budget } => {
                let exact = enumerate_mass::<BigRational>(self.automaton, self.horizon, &monitor, budget)?;
                Answer {
                    value: exact.to_f64(),
                    exact: Some(exact),
                    stderr: None,
                }
            }
            Backend::DecisionDiagram => {
                let exact = self.encoding()?.probability(&monitor);
                Answer {
                    value: Weight::to_f64(&exact),
                    exact: Some(exact),
                    stderr: None,
                }
            }
            Backend::MonteCarlo { samples, seed } => {
                let words = self
                    .samples
                    .get_or_insert_with(|| SampleWords::draw(self.automaton, self.horizon, samples, seed));
                let (value, stderr) = words.estimate(&monitor);
                Answer {
                    value,
                    exact: None,
                    stderr: Some(stderr),
                }
            }
        };
        self.queries += 1;
        self.log.push(QueryRecord {
            formula: key.clone(),
            rand_rate: answer.value,
            backend: self.backend.name().to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(self.cache.entry(key).or_insert(answer))
    }

    fn encoding(&mut self) -> Result<&mut UnrolledEncoding> {
        let stale = self.encoding.as_ref().is_some_and(|e| e.manager_size() > DD_RESET_NODES);
        if stale || self.encoding.is_none() {
            self.encoding = Some(UnrolledEncoding::new(self.automaton, self.horizon, self.max_fresh_bits)?);
        }
        let enc = self.encoding.as_mut().expect("just built");
        if enc.manager_size() > DD_RESET_NODES / 2 {
            enc.clear_cache();
        }
        Ok(enc)
    }
}

/// Probability mass of satisfying runs, walking every run explicitly.
/// Only the first `τ − 1` actions influence the labels, so the last one is
/// summed out analytically.
pub fn enumerate_mass<W: Weight>(
    m: &ProbabilisticAutomaton,
    horizon: usize,
    monitor: &Monitor,
    budget: u64,
) -> Result<W> {
    let steps = horizon.saturating_sub(1);
    let lower_bound = (m.num_actions() as f64).powi(steps as i32);
    if lower_bound > budget as f64 {
        return Err(Error::BudgetExceeded(format!(
            "{lower_bound} action sequences exceed the enumeration budget {budget}"
        )));
    }
    let mut walker = Walker {
        m,
        horizon,
        monitor,
        budget,
        visited: 0,
        uniform: W::from_ratio(1, m.num_actions() as u64),
    };
    let mut total = W::zero();
    walker.walk(0, m.initial_state(), None, W::one(), &mut total)?;
    Ok(total)
}

struct Walker<'a, W> {
    m: &'a ProbabilisticAutomaton,
    horizon: usize,
    monitor: &'a Monitor,
    budget: u64,
    visited: u64,
    uniform: W,
}

impl<W: Weight> Walker<'_, W> {
    fn walk(&mut self, t: usize, s: StateId, prev: Option<&[u64]>, mass: W, total: &mut W) -> Result<()> {
        let state = self.monitor.advance(prev, self.m.label(s));
        if t + 1 == self.horizon {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::BudgetExceeded(format!(
                    "more than {} runs to enumerate",
                    self.budget
                )));
            }
            if Monitor::root(&state) & 1 == 1 {
                *total = total.clone() + mass;
            }
            return Ok(());
        }
        for a in 0..self.m.num_actions() {
            for &(next, p) in self.m.successors(s, a) {
                let p = W::from_f64_exact(p).ok_or(Error::NonDyadic(p))?;
                let w = mass.clone() * self.uniform.clone() * p;
                self.walk(t + 1, next, Some(&state), w, total)?;
            }
        }
        Ok(())
    }
}

/// Seeded random runs packed 64 per word: `chunks[c][t * P + p]`.
struct SampleWords {
    horizon: usize,
    props: usize,
    samples: usize,
    chunks: Vec<Vec<u64>>,
}

impl SampleWords {
    fn draw(m: &ProbabilisticAutomaton, horizon: usize, samples: usize, seed: u64) -> Self {
        let props = m.alphabet().len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chunks = vec![vec![0u64; horizon * props]; samples.div_ceil(64)];
        for i in 0..samples {
            let chunk = &mut chunks[i / 64];
            for (t, &(s, _)) in sample_trace(m, horizon, &mut rng).iter().enumerate() {
                let label = m.label(s);
                for p in 0..props {
                    if label >> p & 1 == 1 {
                        chunk[t * props + p] |= 1 << (i % 64);
                    }
                }
            }
        }
        Self {
            horizon,
            props,
            samples,
            chunks,
        }
    }

    fn estimate(&self, monitor: &Monitor) -> (f64, f64) {
        let mut hits = 0u64;
        for (c, words) in self.chunks.iter().enumerate() {
            let lanes = (self.samples - c * 64).min(64);
            let mask = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
            let w = monitor.evaluate_words(self.horizon, |t, p| words[t * self.props + p]);
            hits += (w & mask).count_ones() as u64;
        }
        let n = self.samples as f64;
        let p = hits as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

/// Monte Carlo `φ̃` without an engine.
pub fn rand_sat_mc(
    f: &Formula,
    m: &ProbabilisticAutomaton,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
    }
    let monitor = Monitor::compile(f, m.alphabet())?;
    Ok(SampleWords::draw(m, horizon, samples, seed).estimate(&monitor))
}
