//! Random instances shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use specinfer::automaton::{trace_weight, DemoSet, ProbabilisticAutomaton, Trace};
use specinfer::{Alphabet, Formula};

pub fn props(n: usize) -> Alphabet {
    Alphabet::new(["a", "b", "c", "d"].into_iter().take(n)).unwrap()
}

/// Transition probabilities are multiples of `1/2^bits`.
pub fn random_automaton(
    rng: &mut impl Rng,
    states: usize,
    actions: usize,
    alphabet: &Alphabet,
    bits: u32,
) -> ProbabilisticAutomaton {
    let units = 1u32 << bits;
    let transitions = (0..states)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    let support = rng.gen_range(1..=states.min(3));
                    let mut targets: Vec<usize> = (0..states).collect();
                    targets.shuffle(rng);
                    targets.truncate(support);
                    // cut `units` into `support` positive pieces where possible
                    let mut cuts: Vec<u32> = (0..support - 1).map(|_| rng.gen_range(0..=units)).collect();
                    cuts.push(0);
                    cuts.push(units);
                    cuts.sort_unstable();
                    targets
                        .iter()
                        .zip(cuts.windows(2))
                        .map(|(&t, w)| (t, f64::from(w[1] - w[0]) / f64::from(units)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let labels = (0..states)
        .map(|_| {
            alphabet
                .names()
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .cloned()
                .collect::<BTreeSet<_>>()
        })
        .collect();
    ProbabilisticAutomaton::new(
        states,
        0,
        (0..actions).map(|a| format!("a{a}")).collect(),
        transitions,
        alphabet.clone(),
        labels,
    )
    .unwrap()
}

/// Formula of depth at most `depth` over `alphabet`.
pub fn random_formula(rng: &mut impl Rng, alphabet: &Alphabet, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(alphabet.names().choose(rng).unwrap().clone()),
        };
    }
    let sub = |rng: &mut _| random_formula(rng, alphabet, depth - 1);
    match rng.gen_range(0..8) {
        0 => Formula::not(sub(rng)),
        1 => Formula::historically(sub(rng)),
        2 => Formula::once(sub(rng)),
        3 => Formula::and(sub(rng), sub(rng)),
        4 => Formula::or(sub(rng), sub(rng)),
        5 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::since(sub(rng), sub(rng)),
    }
}

/// Temporal formulas shaped like grammar output: `H`/`P` over a small body.
pub fn random_spec(rng: &mut impl Rng, alphabet: &Alphabet) -> Formula {
    let body = random_formula(rng, alphabet, 2);
    if rng.gen_bool(0.5) {
        Formula::historically(body)
    } else {
        Formula::once(body)
    }
}

/// Every trace of length `horizon` starting in the initial state, with its
/// weight (zero-weight traces omitted).
pub fn all_traces(m: &ProbabilisticAutomaton, horizon: usize) -> Vec<(Trace, f64)> {
    fn go(
        m: &ProbabilisticAutomaton,
        horizon: usize,
        steps: &mut Vec<(usize, usize)>,
        s: usize,
        out: &mut Vec<(Trace, f64)>,
    ) {
        for a in 0..m.num_actions() {
            steps.push((s, a));
            if steps.len() == horizon {
                let t = Trace::new(steps.clone()).unwrap();
                let w = trace_weight(&t, m).unwrap();
                out.push((t, w));
            } else {
                for &(next, _) in m.successors(s, a) {
                    go(m, horizon, steps, next, out);
                }
            }
            steps.pop();
        }
    }
    let mut out = Vec::new();
    go(m, horizon, &mut Vec::new(), m.initial_state(), &mut out);
    out
}

/// Demonstrations from a random stationary policy, so they carry signal
/// relative to uniformly random actions.
pub fn policy_demos(rng: &mut impl Rng, m: &ProbabilisticAutomaton, horizon: usize, count: usize) -> DemoSet {
    let prefs: Vec<Vec<f64>> = (0..m.num_states())
        .map(|_| (0..m.num_actions()).map(|_| rng.gen::<f64>().powi(3)).collect())
        .collect();
    let traces = (0..count)
        .map(|_| {
            let mut s = m.initial_state();
            let mut steps = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let total: f64 = prefs[s].iter().sum();
                let mut x = rng.gen::<f64>() * total;
                let mut a = m.num_actions() - 1;
                for (i, p) in prefs[s].iter().enumerate() {
                    if x < *p {
                        a = i;
                        break;
                    }
                    x -= p;
                }
                steps.push((s, a));
                if t + 1 < horizon {
                    let succ = m.successors(s, a);
                    let mut y = rng.gen::<f64>();
                    s = succ.last().unwrap().0;
                    for &(next, p) in succ {
                        if y < p {
                            s = next;
                            break;
                        }
                        y -= p;
                    }
                }
            }
            Trace::new(steps).unwrap()
        })
        .collect();
    DemoSet::new(horizon, traces).unwrap()
}

/// Truth of every subformula at every position, straight from the
/// quantifier definitions.
pub fn oracle(f: &Formula, alphabet: &Alphabet, v: &[u64]) -> Vec<bool> {
    let n = v.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(p) => {
            let i = alphabet.index_of(p).unwrap();
            v.iter().map(|m| m >> i & 1 == 1).collect()
        }
        Formula::Not(a) => oracle(a, alphabet, v).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            let (x, y) = (oracle(a, alphabet, v), oracle(b, alphabet, v));
            (0..n)
                .map(|t| match f {
                    Formula::And(..) => x[t] && y[t],
                    Formula::Or(..) => x[t] || y[t],
                    _ => !x[t] || y[t],
                })
                .collect()
        }
        Formula::Historically(a) => {
            let x = oracle(a, alphabet, v);
            (0..n).map(|t| (0..=t).all(|i| x[i])).collect()
        }
        Formula::Once(a) => {
            let x = oracle(a, alphabet, v);
            (0..n).map(|t| (0..=t).any(|i| x[i])).collect()
        }
        Formula::Since(a, b) => {
            let (x, y) = (oracle(a, alphabet, v), oracle(b, alphabet, v));
            (0..n)
                .map(|t| (0..=t).any(|i| y[i] && (i + 1..=t).all(|j| x[j])))
                .collect()
        }
    }
}

pub fn oracle_at_end(f: &Formula, alphabet: &Alphabet, v: &[u64]) -> bool {
    *oracle(f, alphabet, v).last().unwrap()
}

/// Hasse diagram over up to `max_specs` random temporal formulas.
pub fn random_lattice(
    rng: &mut impl Rng,
    alphabet: &Alphabet,
    horizon: usize,
    max_specs: usize,
) -> specinfer::ConceptLattice {
    let n = rng.gen_range(1..=max_specs);
    let specs: Vec<Formula> = (0..n).map(|_| random_spec(rng, alphabet)).collect();
    let opts = specinfer::concept::LatticeOptions {
        seed: rng.gen(),
        ..Default::default()
    };
    specinfer::concept::build_lattice(&specs, alphabet, horizon, None, &opts)
        .unwrap()
        .0
}

/// `ψ_1, ψ_1 ∨ ψ_2, …`: increasing by construction.
pub fn random_chain(rng: &mut impl Rng, alphabet: &Alphabet, len: usize) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::with_capacity(len);
    for _ in 0..len {
        let psi = random_spec(rng, alphabet);
        out.push(match out.last() {
            Some(prev) => Formula::or(prev.clone(), psi),
            None => psi,
        });
    }
    out
}
