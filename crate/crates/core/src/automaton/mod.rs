//! Probabilistic automata, traces and demonstration sets.

mod grid;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ptltl::{Alphabet, Valuation};
use crate::scalar::Weight;
use crate::{Error, Result};

pub use grid::{build_gridworld, Direction, GridworldSpec, Tile};

pub type StateId = usize;
pub type ActionId = usize;

const SUM_TOLERANCE: f64 = 1e-12;

/// Finite states and actions with a stochastic transition function and a
/// labeling of states by atomic propositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticAutomaton {
    num_states: usize,
    initial: StateId,
    actions: Vec<String>,
    /// `transitions[s][a]` is the sparse successor distribution, sorted by state.
    transitions: Vec<Vec<Vec<(StateId, f64)>>>,
    alphabet: Alphabet,
    labels: Vec<u64>,
}

impl ProbabilisticAutomaton {
    /// Builds and validates an automaton. `labels[s]` lists the propositions
    /// holding in state `s`.
    pub fn new(
        num_states: usize,
        initial: StateId,
        actions: Vec<String>,
        transitions: Vec<Vec<Vec<(StateId, f64)>>>,
        alphabet: Alphabet,
        labels: Vec<BTreeSet<String>>,
    ) -> Result<Self> {
        if num_states == 0 || actions.is_empty() {
            return Err(Error::InvalidAutomaton("need at least one state and one action".into()));
        }
        if initial >= num_states {
            return Err(Error::InvalidAutomaton(format!(
                "initial state {initial} out of range"
            )));
        }
        if transitions.len() != num_states || labels.len() != num_states {
            return Err(Error::InvalidAutomaton(
                "transition table and labeling must cover every state".into(),
            ));
        }
        let mut table = Vec::with_capacity(num_states);
        for (s, row) in transitions.into_iter().enumerate() {
            if row.len() != actions.len() {
                return Err(Error::InvalidAutomaton(format!(
                    "state {s} has {} action rows, expected {}",
                    row.len(),
                    actions.len()
                )));
            }
            let mut new_row = Vec::with_capacity(row.len());
            for (a, dist) in row.into_iter().enumerate() {
                new_row.push(normalize_distribution(s, a, dist, num_states)?);
            }
            table.push(new_row);
        }
        let labels = labels
            .iter()
            .map(|set| alphabet.mask(set.iter().map(String::as_str)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_states,
            initial,
            actions,
            transitions: table,
            alphabet,
            labels,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Proposition bitmask of a state.
    pub fn label(&self, s: StateId) -> u64 {
        self.labels[s]
    }

    pub fn label_names(&self, s: StateId) -> Vec<&str> {
        self.alphabet
            .names()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.labels[s] >> i & 1 == 1)
            .map(|(_, n)| n.as_str())
            .collect()
    }

    pub fn successors(&self, s: StateId, a: ActionId) -> &[(StateId, f64)] {
        &self.transitions[s][a]
    }

    /// `δ(s, a, s')`.
    pub fn delta(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.transitions[s][a]
            .iter()
            .find(|(t, _)| *t == next)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn is_deterministic(&self) -> bool {
        self.transitions.iter().flatten().all(|d| d.len() == 1)
    }

    /// Proposition masks along a trace.
    pub fn valuation(&self, trace: &Trace) -> Result<Valuation> {
        self.check_indices(trace)?;
        Valuation::new(trace.steps.iter().map(|&(s, _)| self.labels[s]).collect())
    }

    /// Parses the JSON written by [`to_json`](Self::to_json), re-running the
    /// constructor's validation.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ProbabilisticAutomaton = serde_json::from_str(text)?;
        if raw.labels.len() != raw.num_states {
            return Err(Error::InvalidAutomaton("labeling must cover every state".into()));
        }
        let labels = (0..raw.num_states)
            .map(|s| {
                if raw.alphabet.len() < 64 && raw.labels[s] >> raw.alphabet.len() != 0 {
                    return Err(Error::InvalidAutomaton(format!("label of state {s} uses unknown propositions")));
                }
                Ok(raw.label_names(s).into_iter().map(String::from).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.num_states, raw.initial, raw.actions, raw.transitions, raw.alphabet, labels)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn check_indices(&self, trace: &Trace) -> Result<()> {
        for (i, &(s, a)) in trace.steps.iter().enumerate() {
            if s >= self.num_states || a >= self.actions.len() {
                return Err(Error::InvalidTrace(format!(
                    "step {i} references state {s} / action {a} outside the automaton"
                )));
            }
        }
        Ok(())
    }
}

fn normalize_distribution(
    s: StateId,
    a: ActionId,
    mut dist: Vec<(StateId, f64)>,
    num_states: usize,
) -> Result<Vec<(StateId, f64)>> {
    dist.retain(|&(_, p)| p != 0.0);
    dist.sort_by_key(|&(t, _)| t);
    let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(dist.len());
    for (t, p) in dist {
        if t >= num_states || !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidAutomaton(format!(
                "bad transition ({s}, {a}) -> ({t}, {p})"
            )));
        }
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += p,
            _ => merged.push((t, p)),
        }
    }
    let total: f64 = merged.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidAutomaton(format!(
            "distribution for ({s}, {a}) sums to {total}"
        )));
    }
    Ok(merged)
}

/// A fixed-length sequence of (state, action) pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    steps: Vec<(StateId, ActionId)>,
}

impl Trace {
    pub fn new(steps: Vec<(StateId, ActionId)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidTrace("trace horizon must be positive".into()));
        }
        Ok(Self { steps })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[(StateId, ActionId)] {
        &self.steps
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.steps.iter().map(|&(s, _)| s)
    }
}

/// `w(ξ, M)`: product of transition probabilities along the trace.
pub fn trace_weight(trace: &Trace, m: &ProbabilisticAutomaton) -> Result<f64> {
    trace_weight_as::<f64>(trace, m)
}

/// [`trace_weight`] accumulated in an arbitrary [`Weight`].
pub fn trace_weight_as<W: Weight>(trace: &Trace, m: &ProbabilisticAutomaton) -> Result<W> {
    m.check_indices(trace)?;
    if trace.steps[0].0 != m.initial {
        return Err(Error::InvalidTrace(format!(
            "trace starts in state {}, automaton starts in {}",
            trace.steps[0].0, m.initial
        )));
    }
    let mut w = W::one();
    for pair in trace.steps.windows(2) {
        let ((s, a), (next, _)) = (pair[0], pair[1]);
        let p = m.delta(s, a, next);
        let p = W::from_f64_exact(p).ok_or(Error::NonDyadic(p))?;
        w = w * p;
    }
    Ok(w)
}

/// Probability of generating `trace` when every action is drawn uniformly:
/// `|A|^-τ · w(ξ, M)`.
pub fn random_trace_probability(trace: &Trace, m: &ProbabilisticAutomaton) -> Result<f64> {
    let w = trace_weight(trace, m)?;
    Ok(w * (m.num_actions() as f64).powi(-(trace.horizon() as i32)))
}

/// A multiset of demonstrations sharing one horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoSet {
    horizon: usize,
    traces: Vec<Trace>,
}

impl DemoSet {
    pub fn new(horizon: usize, traces: Vec<Trace>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if let Some(t) = traces.iter().find(|t| t.horizon() != horizon) {
            return Err(Error::InvalidTrace(format!(
                "trace of length {} in a demonstration set with horizon {horizon}",
                t.horizon()
            )));
        }
        Ok(Self { horizon, traces })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Checks every trace is dynamically feasible in `m`.
    pub fn validate(&self, m: &ProbabilisticAutomaton) -> Result<()> {
        for (i, t) in self.traces.iter().enumerate() {
            if trace_weight(t, m)? <= 0.0 {
                return Err(Error::InvalidTrace(format!(
                    "demonstration {i} uses a transition with probability zero"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DemoSet = serde_json::from_str(text)?;
        Self::new(raw.horizon, raw.traces)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Draws `count` traces under the uniformly random action policy.
pub fn sample_random_traces(
    m: &ProbabilisticAutomaton,
    horizon: usize,
    count: usize,
    seed: u64,
) -> Result<DemoSet> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traces = (0..count)
        .map(|_| Trace::new(sample_trace(m, horizon, &mut rng)))
        .collect::<Result<Vec<_>>>()?;
    DemoSet::new(horizon, traces)
}

pub(crate) fn sample_trace(
    m: &ProbabilisticAutomaton,
    horizon: usize,
    rng: &mut impl Rng,
) -> Vec<(StateId, ActionId)> {
    let mut steps = Vec::with_capacity(horizon);
    let mut s = m.initial;
    for t in 0..horizon {
        let a = rng.gen_range(0..m.num_actions());
        steps.push((s, a));
        if t + 1 < horizon {
            s = sample_successor(m.successors(s, a), rng);
        }
    }
    steps
}

fn sample_successor(dist: &[(StateId, f64)], rng: &mut impl Rng) -> StateId {
    if let [(only, _)] = dist {
        return *only;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(t, p) in dist {
        acc += p;
        if u < acc {
            return t;
        }
    }
    dist.last().expect("nonempty distribution").0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> ProbabilisticAutomaton {
        ProbabilisticAutomaton::new(
            2,
            0,
            vec!["go".into()],
            vec![
                vec![vec![(0, 0.75), (1, 0.25)]],
                vec![vec![(0, 0.25), (1, 0.75)]],
            ],
            Alphabet::new(["a"]).unwrap(),
            vec![BTreeSet::new(), ["a".to_string()].into()],
        )
        .unwrap()
    }

    fn single_state() -> ProbabilisticAutomaton {
        ProbabilisticAutomaton::new(
            1,
            0,
            vec!["x".into(), "y".into()],
            vec![vec![vec![(0, 1.0)], vec![(0, 1.0)]]],
            Alphabet::new(["a"]).unwrap(),
            vec![["a".to_string()].into()],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_revalidates() {
        let m = two_state();
        assert_eq!(ProbabilisticAutomaton::from_json(&m.to_json().unwrap()).unwrap(), m);
        let bad = m.to_json().unwrap().replace("0.75", "0.7");
        assert!(matches!(ProbabilisticAutomaton::from_json(&bad), Err(Error::InvalidAutomaton(_))));
    }

    #[test]
    fn weight_of_single_state_self_loops_is_one() {
        let m = single_state();
        for tau in 1..6 {
            let t = Trace::new((0..tau).map(|i| (0, i % 2)).collect()).unwrap();
            assert_eq!(trace_weight(&t, &m).unwrap(), 1.0);
        }
    }

    #[test]
    fn weight_multiplies_transition_probabilities() {
        // s0 -> s1 -> s0, each crossing has probability 1/4
        let t = Trace::new(vec![(0, 0), (1, 0), (0, 0)]).unwrap();
        assert_eq!(trace_weight(&t, &two_state()).unwrap(), 0.0625);
    }

    #[test]
    fn weight_rejects_bad_traces() {
        let m = two_state();
        let wrong_start = Trace::new(vec![(1, 0), (1, 0)]).unwrap();
        assert!(matches!(trace_weight(&wrong_start, &m), Err(Error::InvalidTrace(_))));
        let out_of_range = Trace::new(vec![(0, 0), (5, 0)]).unwrap();
        assert!(matches!(trace_weight(&out_of_range, &m), Err(Error::InvalidTrace(_))));
        let bad_action = Trace::new(vec![(0, 3)]).unwrap();
        assert!(matches!(trace_weight(&bad_action, &m), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn validation_of_distributions() {
        let bad = ProbabilisticAutomaton::new(
            1,
            0,
            vec!["x".into()],
            vec![vec![vec![(0, 0.5)]]],
            Alphabet::new(["a"]).unwrap(),
            vec![BTreeSet::new()],
        );
        assert!(matches!(bad, Err(Error::InvalidAutomaton(_))));
        let bad_initial = ProbabilisticAutomaton::new(
            1,
            3,
            vec!["x".into()],
            vec![vec![vec![(0, 1.0)]]],
            Alphabet::new(["a"]).unwrap(),
            vec![BTreeSet::new()],
        );
        assert!(matches!(bad_initial, Err(Error::InvalidAutomaton(_))));
        let unknown_prop = ProbabilisticAutomaton::new(
            1,
            0,
            vec!["x".into()],
            vec![vec![vec![(0, 1.0)]]],
            Alphabet::new(["a"]).unwrap(),
            vec![["zzz".to_string()].into()],
        );
        assert!(matches!(unknown_prop, Err(Error::UnknownProposition(_))));
    }

    #[test]
    fn sampling_contract() {
        let m = single_state();
        assert!(sample_random_traces(&m, 3, 0, 1).is_err());
        let one = sample_random_traces(&m, 3, 1, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.traces()[0].states().all(|s| s == 0));
        let m = two_state();
        assert_eq!(
            sample_random_traces(&m, 7, 20, 42).unwrap(),
            sample_random_traces(&m, 7, 20, 42).unwrap()
        );
        sample_random_traces(&m, 7, 20, 42).unwrap().validate(&m).unwrap();
    }

    #[test]
    fn demo_json_format() {
        let demos = DemoSet::new(2, vec![Trace::new(vec![(0, 0), (1, 0)]).unwrap()]).unwrap();
        let text = demos.to_json().unwrap();
        assert_eq!(text, r#"{"horizon":2,"traces":[[[0,0],[1,0]]]}"#);
        assert_eq!(DemoSet::from_json(&text).unwrap(), demos);
        assert!(DemoSet::from_json(r#"{"horizon":3,"traces":[[[0,0]]]}"#).is_err());
    }
}
