use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::automaton::ProbabilisticAutomaton;
use crate::bdd::{Bdd, NodeId, FALSE, TRUE};
use crate::ptltl::Monitor;
use crate::scalar::dyadic_exponent;
use crate::{Error, Result};

/// Most fresh bits per step the exact encoding will allocate.
pub const DEFAULT_MAX_FRESH_BITS: u32 = 16;

/// The dynamics, labeling and random action policy unrolled over `τ` steps
/// as a Boolean function.
///
/// Variables are time-major: for each of the `τ − 1` transitions, the action
/// code (most significant bit first) followed by fresh bits that select the
/// successor of a stochastic transition. The state at each step is not a
/// variable; it is kept as one indicator function per state, so every
/// assignment of the free bits is one equally likely random run and
/// `φ̃ = #(φ ∧ valid) / #valid`.
#[derive(Debug)]
pub struct UnrolledEncoding {
    bdd: Bdd,
    horizon: usize,
    num_actions: usize,
    action_bits: u32,
    fresh_bits: u32,
    /// `props[t][p]`: proposition `p` holds at step `t`.
    props: Vec<Vec<NodeId>>,
    valid: NodeId,
    valid_count: BigInt,
}

impl UnrolledEncoding {
    pub fn new(m: &ProbabilisticAutomaton, horizon: usize, max_fresh_bits: u32) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        let num_actions = m.num_actions();
        let action_bits = usize::BITS - (num_actions - 1).leading_zeros();
        let mut fresh_bits = 0;
        for s in 0..m.num_states() {
            for a in 0..num_actions {
                for &(_, p) in m.successors(s, a) {
                    let k = dyadic_exponent(p, max_fresh_bits).ok_or(Error::NonDyadic(p))?;
                    fresh_bits = fresh_bits.max(k);
                }
            }
        }
        let steps = horizon - 1;
        let stride = action_bits + fresh_bits;
        let num_vars = u32::try_from(steps)
            .ok()
            .and_then(|n| n.checked_mul(stride))
            .ok_or_else(|| Error::BudgetExceeded("too many encoding variables".into()))?;

        let mut bdd = Bdd::new();
        // successor intervals in units of 2^-fresh_bits
        let mut intervals = vec![vec![Vec::new(); num_actions]; m.num_states()];
        for (s, row) in intervals.iter_mut().enumerate() {
            for (a, slot) in row.iter_mut().enumerate() {
                let mut lo = 0u64;
                for &(next, p) in m.successors(s, a) {
                    let width = (p * (1u64 << fresh_bits) as f64) as u64;
                    slot.push((next, lo, lo + width));
                    lo += width;
                }
                if lo != 1u64 << fresh_bits {
                    return Err(Error::InvalidAutomaton(format!(
                        "distribution for ({s}, {a}) does not sum exactly to one"
                    )));
                }
            }
        }

        let mut ind = vec![FALSE; m.num_states()];
        ind[m.initial_state()] = TRUE;
        let mut props = Vec::with_capacity(horizon);
        let mut valid = TRUE;
        for t in 0..horizon {
            props.push(label_functions(&mut bdd, m, &ind));
            if t == steps {
                break;
            }
            let base = t as u32 * stride;
            let action_vars: Vec<u32> = (base..base + action_bits).collect();
            let fresh_vars: Vec<u32> = (base + action_bits..base + stride).collect();
            if num_actions < 1 << action_bits {
                let ok = bdd.less_than(&action_vars, num_actions as u64);
                valid = bdd.and(valid, ok);
            }
            let mut next = vec![FALSE; m.num_states()];
            for (s, &here) in ind.iter().enumerate() {
                if here == FALSE {
                    continue;
                }
                for (a, succ) in intervals[s].iter().enumerate() {
                    let code = code_cube(&mut bdd, &action_vars, a as u64);
                    let guard = bdd.and(here, code);
                    for &(target, lo, hi) in succ {
                        let above = bdd.less_than(&fresh_vars, lo);
                        let above = bdd.not(above);
                        let below = bdd.less_than(&fresh_vars, hi);
                        let window = bdd.and(above, below);
                        let reach = bdd.and(guard, window);
                        next[target] = bdd.or(next[target], reach);
                    }
                }
            }
            ind = next;
        }
        let valid_count = BigInt::from(bdd.sat_count(valid, num_vars));
        Ok(Self {
            bdd,
            horizon,
            num_actions,
            action_bits,
            fresh_bits,
            props,
            valid,
            valid_count,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_vars(&self) -> u32 {
        (self.horizon as u32 - 1) * (self.action_bits + self.fresh_bits)
    }

    pub fn action_bits(&self) -> u32 {
        self.action_bits
    }

    pub fn fresh_bits(&self) -> u32 {
        self.fresh_bits
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Nodes allocated in the underlying manager.
    pub fn manager_size(&self) -> usize {
        self.bdd.len()
    }

    /// The formula as a function of the free bits, restricted to valid runs.
    pub fn formula_node(&mut self, monitor: &Monitor) -> NodeId {
        let mut prev = Vec::new();
        let mut cur = Vec::new();
        for t in 0..self.horizon {
            let row = &self.props[t];
            monitor.step(&mut self.bdd, |_, p| row[p], (t > 0).then_some(&prev[..]), &mut cur);
            std::mem::swap(&mut prev, &mut cur);
        }
        let root = Monitor::root(&prev);
        self.bdd.and(root, self.valid)
    }

    /// Exact probability that a random run satisfies the monitored formula.
    pub fn probability(&mut self, monitor: &Monitor) -> BigRational {
        let node = self.formula_node(monitor);
        let count = BigInt::from(self.bdd.sat_count(node, self.num_vars()));
        if count.is_zero() {
            return BigRational::zero();
        }
        BigRational::new(count, self.valid_count.clone())
    }

    /// Size of the diagram for the monitored formula.
    pub fn formula_size(&mut self, monitor: &Monitor) -> usize {
        let node = self.formula_node(monitor);
        self.bdd.node_count(node)
    }

    pub(crate) fn clear_cache(&mut self) {
        self.bdd.clear_cache();
    }
}

fn label_functions(bdd: &mut Bdd, m: &ProbabilisticAutomaton, ind: &[NodeId]) -> Vec<NodeId> {
    (0..m.alphabet().len())
        .map(|p| {
            let holders = ind
                .iter()
                .enumerate()
                .filter(|&(s, &f)| f != FALSE && m.label(s) >> p & 1 == 1)
                .map(|(_, &f)| f)
                .collect::<Vec<_>>();
            bdd.or_all(holders)
        })
        .collect()
}

fn code_cube(bdd: &mut Bdd, vars: &[u32], code: u64) -> NodeId {
    let width = vars.len();
    let lits: Vec<(u32, bool)> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, code >> (width - 1 - i) & 1 == 1))
        .collect();
    bdd.cube(&lits)
}
