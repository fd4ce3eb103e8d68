use rustc_hash::FxHashMap;

use super::{Alphabet, Formula};
use crate::{Error, Result};

/// Boolean algebra the monitor can run over: plain bits, 64-lane words, or
/// decision-diagram nodes.
pub trait BoolOps {
    type Value: Copy;

    fn constant(&mut self, value: bool) -> Self::Value;
    fn not(&mut self, a: Self::Value) -> Self::Value;
    fn and(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn or(&mut self, a: Self::Value, b: Self::Value) -> Self::Value;

    fn implies(&mut self, a: Self::Value, b: Self::Value) -> Self::Value {
        let na = self.not(a);
        self.or(na, b)
    }
}

/// 64 independent valuations evaluated in parallel, one per bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct WordOps;

impl BoolOps for WordOps {
    type Value = u64;

    fn constant(&mut self, value: bool) -> u64 {
        if value {
            !0
        } else {
            0
        }
    }
    fn not(&mut self, a: u64) -> u64 {
        !a
    }
    fn and(&mut self, a: u64, b: u64) -> u64 {
        a & b
    }
    fn or(&mut self, a: u64, b: u64) -> u64 {
        a | b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    True,
    False,
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Historically(usize),
    Once(usize),
    Since(usize, usize),
}

/// A formula compiled to a flat list of subformulas in dependency order.
///
/// Evaluation is a single forward pass over the valuation that keeps the
/// previous step's value of every subformula; the root is the last entry.
#[derive(Clone, Debug)]
pub struct Monitor {
    ops: Vec<Op>,
}

impl Monitor {
    pub fn compile(formula: &Formula, alphabet: &Alphabet) -> Result<Self> {
        let mut ops = Vec::new();
        let mut seen = FxHashMap::default();
        compile_into(formula, alphabet, &mut ops, &mut seen)?;
        Ok(Self { ops })
    }

    /// Number of subformulas (monitor bits).
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Values of every subformula at the next step. `prev` is `None` at the
    /// first step.
    pub fn step<O: BoolOps>(
        &self,
        alg: &mut O,
        mut atom: impl FnMut(&mut O, usize) -> O::Value,
        prev: Option<&[O::Value]>,
        out: &mut Vec<O::Value>,
    ) {
        out.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::True => alg.constant(true),
                Op::False => alg.constant(false),
                Op::Atom(p) => atom(alg, p),
                Op::Not(a) => alg.not(out[a]),
                Op::And(a, b) => alg.and(out[a], out[b]),
                Op::Or(a, b) => alg.or(out[a], out[b]),
                Op::Implies(a, b) => alg.implies(out[a], out[b]),
                Op::Historically(a) => match prev {
                    Some(p) => alg.and(p[i], out[a]),
                    None => out[a],
                },
                Op::Once(a) => match prev {
                    Some(p) => alg.or(p[i], out[a]),
                    None => out[a],
                },
                Op::Since(a, b) => match prev {
                    Some(p) => {
                        let held = alg.and(out[a], p[i]);
                        alg.or(out[b], held)
                    }
                    None => out[b],
                },
            };
            out.push(v);
        }
    }

    /// Advances a single valuation by one step with proposition mask `mask`.
    pub fn advance(&self, prev: Option<&[u64]>, mask: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.ops.len());
        self.step(
            &mut WordOps,
            |_, p| if mask >> p & 1 == 1 { !0 } else { 0 },
            prev,
            &mut out,
        );
        out
    }

    /// Root value of a state produced by [`Monitor::step`] or [`Monitor::advance`].
    pub fn root<V: Copy>(state: &[V]) -> V {
        *state.last().expect("monitor has at least one subformula")
    }

    /// Truth at the final step of a valuation given as proposition masks.
    pub fn evaluate(&self, steps: &[u64]) -> bool {
        let mut prev: Option<Vec<u64>> = None;
        for &mask in steps {
            prev = Some(self.advance(prev.as_deref(), mask));
        }
        prev.is_some_and(|s| Self::root(&s) & 1 == 1)
    }

    /// Evaluates 64 valuations at once. `atom_word(t, p)` is the lane word of
    /// proposition `p` at step `t`.
    pub fn evaluate_words(&self, horizon: usize, mut atom_word: impl FnMut(usize, usize) -> u64) -> u64 {
        let mut prev = Vec::with_capacity(self.ops.len());
        let mut cur = Vec::with_capacity(self.ops.len());
        for t in 0..horizon {
            self.step(&mut WordOps, |_, p| atom_word(t, p), (t > 0).then_some(&prev[..]), &mut cur);
            std::mem::swap(&mut prev, &mut cur);
        }
        if horizon == 0 {
            0
        } else {
            Self::root(&prev)
        }
    }
}

fn compile_into(
    f: &Formula,
    alphabet: &Alphabet,
    ops: &mut Vec<Op>,
    seen: &mut FxHashMap<Op, usize>,
) -> Result<usize> {
    let op = match f {
        Formula::True => Op::True,
        Formula::False => Op::False,
        Formula::Atom(name) => Op::Atom(
            alphabet
                .index_of(name)
                .ok_or_else(|| Error::UnknownProposition(name.clone()))?,
        ),
        Formula::Not(a) => Op::Not(compile_into(a, alphabet, ops, seen)?),
        Formula::Historically(a) => Op::Historically(compile_into(a, alphabet, ops, seen)?),
        Formula::Once(a) => Op::Once(compile_into(a, alphabet, ops, seen)?),
        Formula::And(a, b) => Op::And(compile_into(a, alphabet, ops, seen)?, compile_into(b, alphabet, ops, seen)?),
        Formula::Or(a, b) => Op::Or(compile_into(a, alphabet, ops, seen)?, compile_into(b, alphabet, ops, seen)?),
        Formula::Implies(a, b) => {
            Op::Implies(compile_into(a, alphabet, ops, seen)?, compile_into(b, alphabet, ops, seen)?)
        }
        Formula::Since(a, b) => Op::Since(compile_into(a, alphabet, ops, seen)?, compile_into(b, alphabet, ops, seen)?),
    };
    // the root never equals one of its own subterms, so it is always pushed last
    if let Some(&i) = seen.get(&op) {
        return Ok(i);
    }
    ops.push(op);
    seen.insert(op, ops.len() - 1);
    Ok(ops.len() - 1)
}
