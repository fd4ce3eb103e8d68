//! MAP search over a concept class: brute force, chains and lattices.

mod antichain;

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::automaton::{DemoSet, ProbabilisticAutomaton};
use crate::concept::ConceptLattice;
use crate::posterior::{compare_scores, posterior_score, SatStats, ScoreMode};
use crate::ptltl::{Formula, Monitor, Valuation};
use crate::satprob::SatQueryEngine;
use crate::{Error, Result};

pub use antichain::max_antichain_width;

/// A scored specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedSpec {
    pub spec: Formula,
    pub score: f64,
    pub n_sat: usize,
    pub rand_rate: f64,
}

/// Skipped specifications re-scored after a lattice search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub skipped: usize,
    /// Skipped specs that beat every queried spec of their partition.
    pub violations: Vec<RankedSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    /// The winning specification, without the context conjunct.
    pub best_spec: Formula,
    pub best_score: f64,
    pub stats: SatStats<f64>,
    /// `φ̃` requests made by the search, one per distinct specification.
    pub queries_issued: usize,
    /// `φ̃` values the engine actually computed (cache misses).
    pub oracle_computations: u64,
    pub specs_scored: usize,
    pub ranking: Vec<RankedSpec>,
    pub wall_time: Duration,
    pub audit: Option<AuditReport>,
}

/// Demonstrations packed 64 per word for bit-parallel monitoring.
#[derive(Clone, Debug)]
pub struct DemoLanes {
    horizon: usize,
    props: usize,
    len: usize,
    /// `chunks[c][t·|AP| + p]`
    chunks: Vec<Vec<u64>>,
}

impl DemoLanes {
    pub fn new(demos: &DemoSet, m: &ProbabilisticAutomaton) -> Result<Self> {
        demos.validate(m)?;
        let valuations = demos
            .traces()
            .iter()
            .map(|t| m.valuation(t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_valuations(&valuations, m.alphabet().len())
    }

    pub fn from_valuations(valuations: &[Valuation], props: usize) -> Result<Self> {
        let Some(first) = valuations.first() else {
            return Err(Error::InvalidInput("demonstration set is empty".into()));
        };
        let horizon = first.len();
        if valuations.iter().any(|v| v.len() != horizon) {
            return Err(Error::InvalidInput("demonstrations differ in length".into()));
        }
        let mut chunks = vec![vec![0u64; horizon * props]; valuations.len().div_ceil(64)];
        for (i, v) in valuations.iter().enumerate() {
            for (t, &mask) in v.steps().iter().enumerate() {
                for p in 0..props {
                    if mask >> p & 1 == 1 {
                        chunks[i / 64][t * props + p] |= 1 << (i % 64);
                    }
                }
            }
        }
        Ok(Self {
            horizon,
            props,
            len: valuations.len(),
            chunks,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `N_φ`.
    pub fn count(&self, monitor: &Monitor) -> usize {
        self.chunks
            .iter()
            .enumerate()
            .map(|(c, words)| {
                let lanes = (self.len - c * 64).min(64);
                let mask = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
                let w = monitor.evaluate_words(self.horizon, |t, p| words[t * self.props + p]);
                (w & mask).count_ones() as usize
            })
            .sum()
    }
}

/// Shared scoring state: demonstrations, the engine and counters.
struct Scorer<'e, 'm> {
    lanes: &'e DemoLanes,
    engine: &'e mut SatQueryEngine<'m>,
    mode: ScoreMode,
    queried: usize,
    computed_before: u64,
}

impl<'e, 'm> Scorer<'e, 'm> {
    fn new(lanes: &'e DemoLanes, engine: &'e mut SatQueryEngine<'m>, mode: ScoreMode) -> Self {
        let computed_before = engine.query_stats().queries;
        Self {
            lanes,
            engine,
            mode,
            queried: 0,
            computed_before,
        }
    }

    fn membership(&self, f: &Formula) -> Result<usize> {
        let monitor = Monitor::compile(f, self.engine.automaton().alphabet())?;
        Ok(self.lanes.count(&monitor))
    }

    fn score(&mut self, f: &Formula, n_sat: usize) -> Result<(f64, SatStats<f64>)> {
        let rand_rate = self.engine.query(f)?;
        self.queried += 1;
        let stats = SatStats::new(n_sat, self.lanes.len(), rand_rate)?;
        let score = posterior_score(&stats, &self.mode);
        if score == f64::INFINITY {
            return Err(Error::InconsistentModel(format!(
                "{n_sat} demonstrations satisfy `{f}`, which random actions never satisfy"
            )));
        }
        Ok((score, stats))
    }

    fn computed(&self) -> u64 {
        self.engine.query_stats().queries - self.computed_before
    }
}

fn rank(mut scored: Vec<(usize, RankedSpec)>, top_k: usize) -> Vec<RankedSpec> {
    scored.sort_by(|a, b| compare_scores(b.1.score, a.1.score).then(a.0.cmp(&b.0)));
    scored.into_iter().take(top_k).map(|(_, r)| r).collect()
}

fn require_indicator(mode: &ScoreMode, what: &str) -> Result<()> {
    match mode {
        ScoreMode::Indicator => Ok(()),
        ScoreMode::Beta(_) => Err(Error::InvalidInput(format!(
            "{what} relies on the indicator posterior; use brute force with the Beta prior"
        ))),
    }
}

/// Scores every specification (context applied); ties go to the lowest
/// lattice index.
pub fn brute_force_map(
    lattice: &ConceptLattice,
    lanes: &DemoLanes,
    engine: &mut SatQueryEngine<'_>,
    mode: ScoreMode,
    top_k: usize,
) -> Result<InferenceResult> {
    let start = Instant::now();
    let mut scorer = Scorer::new(lanes, engine, mode);
    let mut best: Option<(usize, f64, SatStats<f64>)> = None;
    let mut scored = Vec::with_capacity(lattice.len());
    for i in 0..lattice.len() {
        let f = lattice.scored_formula(i);
        let n = scorer.membership(&f)?;
        let (score, stats) = scorer.score(&f, n)?;
        if best.as_ref().is_none_or(|b| compare_scores(score, b.1) == Ordering::Greater) {
            best = Some((i, score, stats));
        }
        scored.push((
            i,
            RankedSpec {
                spec: lattice.spec(i).clone(),
                score,
                n_sat: n,
                rand_rate: stats.rand_rate,
            },
        ));
    }
    let (i, score, stats) = best.expect("lattice has at least two specs");
    Ok(InferenceResult {
        best_spec: lattice.spec(i).clone(),
        best_score: score,
        stats,
        queries_issued: scorer.queried,
        oracle_computations: scorer.computed(),
        specs_scored: lattice.len(),
        ranking: rank(scored, top_k),
        wall_time: start.elapsed(),
        audit: None,
    })
}

/// Specifications totally ordered by inclusion, smallest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainView {
    specs: Vec<Formula>,
    context: Option<Formula>,
}

impl ChainView {
    pub fn new(specs: Vec<Formula>, context: Option<Formula>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidChain("chain is empty".into()));
        }
        Ok(Self { specs, context })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn specs(&self) -> &[Formula] {
        &self.specs
    }

    pub fn smallest(&self) -> &Formula {
        &self.specs[0]
    }

    fn scored_formula(&self, i: usize) -> Formula {
        self.specs[i].with_context(self.context.as_ref())
    }
}

/// Scores every element of a chain; ties go to the earliest element.
pub fn brute_force_chain(
    chain: &ChainView,
    lanes: &DemoLanes,
    engine: &mut SatQueryEngine<'_>,
    mode: ScoreMode,
) -> Result<InferenceResult> {
    let start = Instant::now();
    let mut scorer = Scorer::new(lanes, engine, mode);
    let mut best: Option<(usize, f64, SatStats<f64>)> = None;
    for i in 0..chain.len() {
        let f = chain.scored_formula(i);
        let n = scorer.membership(&f)?;
        let (score, stats) = scorer.score(&f, n)?;
        if best.as_ref().is_none_or(|b| compare_scores(score, b.1) == Ordering::Greater) {
            best = Some((i, score, stats));
        }
    }
    let (i, score, stats) = best.expect("chain is nonempty");
    Ok(InferenceResult {
        best_spec: chain.specs[i].clone(),
        best_score: score,
        stats,
        queries_issued: scorer.queried,
        oracle_computations: scorer.computed(),
        specs_scored: chain.len(),
        ranking: Vec::new(),
        wall_time: start.elapsed(),
        audit: None,
    })
}

/// Chain search: for each possible `N_φ`, binary-search the smallest chain
/// element with that count and query only those.
pub fn chain_inference(
    chain: &ChainView,
    lanes: &DemoLanes,
    engine: &mut SatQueryEngine<'_>,
    mode: ScoreMode,
) -> Result<InferenceResult> {
    require_indicator(&mode, "chain inference")?;
    let start = Instant::now();
    let mut scorer = Scorer::new(lanes, engine, mode);
    let mut counts: Vec<Option<usize>> = vec![None; chain.len()];
    let mut evaluated = 0usize;
    let mut count_at = |k: usize, scorer: &Scorer<'_, '_>| -> Result<usize> {
        if let Some(n) = counts[k] {
            return Ok(n);
        }
        let n = scorer.membership(&chain.scored_formula(k))?;
        // counts must be nondecreasing along the chain
        let below = counts[..k].iter().rev().flatten().next();
        let above = counts[k + 1..].iter().flatten().next();
        if below.is_some_and(|&b| b > n) || above.is_some_and(|&a| a < n) {
            return Err(Error::InvalidChain(format!("membership decreases at element {k}")));
        }
        counts[k] = Some(n);
        evaluated += 1;
        Ok(n)
    };

    let mut best: Option<(usize, f64, SatStats<f64>)> = None;
    let mut ranking = Vec::new();
    for i in 0..=lanes.len() {
        // first element with count >= i
        let (mut lo, mut hi) = (0, chain.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if count_at(mid, &scorer)? >= i {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == chain.len() || count_at(lo, &scorer)? != i {
            continue;
        }
        let f = chain.scored_formula(lo);
        let (score, stats) = scorer.score(&f, i)?;
        if best.as_ref().is_none_or(|b| compare_scores(score, b.1) == Ordering::Greater) {
            best = Some((lo, score, stats));
        }
        ranking.push((
            lo,
            RankedSpec {
                spec: chain.specs[lo].clone(),
                score,
                n_sat: i,
                rand_rate: stats.rand_rate,
            },
        ));
    }
    let (k, score, stats) = best.expect("some partition is nonempty");
    Ok(InferenceResult {
        best_spec: chain.specs[k].clone(),
        best_score: score,
        stats,
        queries_issued: scorer.queried,
        oracle_computations: scorer.computed(),
        specs_scored: evaluated,
        ranking: rank(ranking, usize::MAX),
        wall_time: start.elapsed(),
        audit: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub top_k: usize,
    /// Re-score skipped specs to check the skip rule.
    pub audit: bool,
    /// Threads serving `φ̃` queries within a layer.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            top_k: 10,
            audit: false,
            workers: 1,
        }
    }
}

/// Lattice search: breadth-first from `false`, querying `φ̃` only for specs
/// whose count differs from every direct predecessor's.
pub fn partial_order_inference(
    lattice: &ConceptLattice,
    lanes: &DemoLanes,
    engine: &mut SatQueryEngine<'_>,
    mode: ScoreMode,
    opts: &SearchOptions,
) -> Result<InferenceResult> {
    require_indicator(&mode, "lattice inference")?;
    let start = Instant::now();
    let n = lattice.len();
    let mut counts = vec![usize::MAX; n];
    let alphabet = engine.automaton().alphabet().clone();
    let count = |i: usize| -> Result<usize> {
        let monitor = Monitor::compile(&lattice.scored_formula(i), &alphabet)?;
        Ok(lanes.count(&monitor))
    };

    let mut layer = vec![0usize];
    let mut visited = vec![false; n];
    visited[0] = true;
    counts[0] = count(0)?;
    let mut to_query: Vec<usize> = Vec::new();
    let mut skipped: Vec<usize> = Vec::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    while !layer.is_empty() {
        let mut layer_queries = Vec::new();
        for &v in &layer {
            if v == 0 {
                continue;
            }
            counts[v] = count(v)?;
            if lattice.preds(v).iter().any(|&p| counts[p] == counts[v]) {
                skipped.push(v);
            } else {
                layer_queries.push(v);
            }
        }
        to_query.extend(&layer_queries);
        layers.push(layer_queries);
        let mut next: Vec<usize> = layer
            .iter()
            .flat_map(|&v| lattice.succs(v).iter().copied())
            .filter(|&w| !visited[w])
            .collect();
        next.sort_unstable();
        next.dedup();
        for &w in &next {
            visited[w] = true;
        }
        layer = next;
    }
    // every node lies above false, so BFT reaches all of them
    debug_assert!(visited.iter().all(|&v| v));

    let computed_before = engine.query_stats().queries;
    let rates = query_layers(lattice, &layers, engine, opts.workers)?;
    let n_total = lanes.len();
    let mut best = (0usize, 0.0f64, SatStats::new(counts[0], n_total, 0.0)?);
    let mut scored = Vec::with_capacity(to_query.len());
    for (&v, &rate) in to_query.iter().zip(&rates) {
        let stats = SatStats::new(counts[v], n_total, rate)?;
        let score = posterior_score(&stats, &mode);
        if score == f64::INFINITY {
            return Err(Error::InconsistentModel(format!(
                "{} demonstrations satisfy `{}`, which random actions never satisfy",
                counts[v],
                lattice.scored_formula(v)
            )));
        }
        if compare_scores(score, best.1) == Ordering::Greater {
            best = (v, score, stats);
        }
        scored.push((
            v,
            RankedSpec {
                spec: lattice.spec(v).clone(),
                score,
                n_sat: counts[v],
                rand_rate: rate,
            },
        ));
    }
    let oracle_computations = engine.query_stats().queries - computed_before;

    let audit = if opts.audit {
        Some(audit_skips(lattice, engine, &counts, n_total, &skipped, &scored, mode)?)
    } else {
        None
    };
    let (v, score, stats) = best;
    Ok(InferenceResult {
        best_spec: lattice.spec(v).clone(),
        best_score: score,
        stats,
        queries_issued: to_query.len(),
        oracle_computations,
        specs_scored: to_query.len(),
        ranking: rank(scored, opts.top_k),
        wall_time: start.elapsed(),
        audit,
    })
}

/// `φ̃` for each queued spec, layer by layer, optionally on worker engines.
/// Results come back in queue order so the incumbent update is unchanged.
fn query_layers(
    lattice: &ConceptLattice,
    layers: &[Vec<usize>],
    engine: &mut SatQueryEngine<'_>,
    workers: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    if workers <= 1 {
        for &v in layers.iter().flatten() {
            out.push(engine.query(&lattice.scored_formula(v))?);
        }
        return Ok(out);
    }
    let mut pool: Vec<SatQueryEngine<'_>> = (0..workers).map(|_| engine.fork()).collect();
    for layer in layers {
        if layer.is_empty() {
            continue;
        }
        let chunk = layer.len().div_ceil(workers);
        let results: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = pool
                .iter_mut()
                .zip(layer.chunks(chunk))
                .map(|(e, part)| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|&v| e.query(&lattice.scored_formula(v)))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            out.extend(r?);
        }
    }
    for e in pool {
        engine.merge(e);
    }
    Ok(out)
}

fn audit_skips(
    lattice: &ConceptLattice,
    engine: &SatQueryEngine<'_>,
    counts: &[usize],
    n_total: usize,
    skipped: &[usize],
    scored: &[(usize, RankedSpec)],
    mode: ScoreMode,
) -> Result<AuditReport> {
    let mut side = engine.fork();
    let mut violations = Vec::new();
    for &v in skipped {
        let rate = side.query(&lattice.scored_formula(v))?;
        let stats = SatStats::new(counts[v], n_total, rate)?;
        let score = posterior_score(&stats, &mode);
        // false is the initial incumbent with score 0
        let partition_best = scored
            .iter()
            .map(|(_, r)| (r.n_sat, r.score))
            .chain([(counts[0], 0.0)])
            .filter(|&(n, _)| n == counts[v])
            .map(|(_, s)| s)
            .max_by(|a, b| compare_scores(*a, *b));
        let ok = partition_best.is_some_and(|b| compare_scores(score, b) != Ordering::Greater);
        if !ok {
            violations.push(RankedSpec {
                spec: lattice.spec(v).clone(),
                score,
                n_sat: counts[v],
                rand_rate: rate,
            });
        }
    }
    Ok(AuditReport {
        skipped: skipped.len(),
        violations,
    })
}
