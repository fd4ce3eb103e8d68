//! Reduced ordered binary decision diagrams with weighted model counting.
//!
//! Variables are ordered by index; all diagrams live in one [`Bdd`] manager
//! and are identified by their root [`NodeId`]. Nodes are hash-consed, so
//! two functions are equal iff their roots are equal.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use rustc_hash::FxHashMap;

use crate::ptltl::BoolOps;
use crate::scalar::Weight;

pub type NodeId = u32;

pub const FALSE: NodeId = 0;
pub const TRUE: NodeId = 1;

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: NodeId,
    hi: NodeId,
}

#[derive(Debug)]
pub struct Bdd {
    nodes: Vec<Node>,
    unique: FxHashMap<Node, NodeId>,
    ite_cache: FxHashMap<(NodeId, NodeId, NodeId), NodeId>,
}

impl Default for Bdd {
    fn default() -> Self {
        Self::new()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = |id| Node {
            var: TERMINAL_VAR,
            lo: id,
            hi: id,
        };
        Self {
            nodes: vec![terminal(FALSE), terminal(TRUE)],
            unique: FxHashMap::default(),
            ite_cache: FxHashMap::default(),
        }
    }

    /// Total number of nodes allocated, terminals included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn clear_cache(&mut self) {
        self.ite_cache.clear();
    }

    pub fn constant(value: bool) -> NodeId {
        if value {
            TRUE
        } else {
            FALSE
        }
    }

    fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = NodeId::try_from(self.nodes.len()).expect("decision diagram exceeds 2^32 nodes");
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    /// The function `x_var`.
    pub fn var(&mut self, var: u32) -> NodeId {
        self.mk(var, FALSE, TRUE)
    }

    /// The function `!x_var`.
    pub fn nvar(&mut self, var: u32) -> NodeId {
        self.mk(var, TRUE, FALSE)
    }

    pub fn top_var(&self, f: NodeId) -> Option<u32> {
        let v = self.nodes[f as usize].var;
        (v != TERMINAL_VAR).then_some(v)
    }

    fn cofactors(&self, f: NodeId, var: u32) -> (NodeId, NodeId) {
        let n = self.nodes[f as usize];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    /// `if f then g else h`.
    pub fn ite(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        match (f, g, h) {
            (TRUE, _, _) => return g,
            (FALSE, _, _) => return h,
            _ if g == h => return g,
            (_, TRUE, FALSE) => return f,
            _ => {}
        }
        if let Some(&r) = self.ite_cache.get(&(f, g, h)) {
            return r;
        }
        let var = [f, g, h]
            .iter()
            .map(|&x| self.nodes[x as usize].var)
            .min()
            .expect("three operands");
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let (h0, h1) = self.cofactors(h, var);
        let lo = self.ite(f0, g0, h0);
        let hi = self.ite(f1, g1, h1);
        let r = self.mk(var, lo, hi);
        self.ite_cache.insert((f, g, h), r);
        r
    }

    pub fn not(&mut self, f: NodeId) -> NodeId {
        self.ite(f, FALSE, TRUE)
    }

    pub fn and(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, g, FALSE)
    }

    pub fn or(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, TRUE, g)
    }

    pub fn implies(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, g, TRUE)
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = NodeId>) -> NodeId {
        fs.into_iter().fold(TRUE, |acc, f| self.and(acc, f))
    }

    pub fn or_all(&mut self, fs: impl IntoIterator<Item = NodeId>) -> NodeId {
        fs.into_iter().fold(FALSE, |acc, f| self.or(acc, f))
    }

    /// Whether `f ⇒ g` is valid.
    pub fn leq(&mut self, f: NodeId, g: NodeId) -> bool {
        self.implies(f, g) == TRUE
    }

    /// Conjunction of literals.
    pub fn cube(&mut self, literals: &[(u32, bool)]) -> NodeId {
        let mut sorted = literals.to_vec();
        sorted.sort_by(|a, b| b.0.cmp(&a.0));
        sorted.into_iter().fold(TRUE, |acc, (v, positive)| {
            if positive {
                self.mk(v, FALSE, acc)
            } else {
                self.mk(v, acc, FALSE)
            }
        })
    }

    /// `code < bound`, where `vars` hold the code most significant bit first.
    pub fn less_than(&mut self, vars: &[u32], bound: u64) -> NodeId {
        let width = vars.len() as u32;
        if width < 64 && bound >= 1u64 << width {
            return TRUE;
        }
        // scan from the least significant bit upward
        let mut acc = FALSE;
        for (i, &v) in vars.iter().enumerate().rev() {
            let bit = (bound >> (vars.len() - 1 - i)) & 1 == 1;
            let x = self.var(v);
            acc = if bit {
                // x = 0 makes the code smaller; x = 1 defers to lower bits
                let nx = self.not(x);
                self.or(nx, acc)
            } else {
                let nx = self.not(x);
                self.and(nx, acc)
            };
        }
        acc
    }

    /// Number of nodes reachable from `f`, terminals included.
    pub fn node_count(&self, f: NodeId) -> usize {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if seen.insert(x) && x > TRUE {
                let n = self.nodes[x as usize];
                stack.push(n.lo);
                stack.push(n.hi);
            }
        }
        seen.len()
    }

    /// Probability that `f` holds when variable `v` is independently true
    /// with weight `weights(v).1` and false with `weights(v).0`. The two
    /// weights of every variable must sum to one.
    pub fn probability<W: Weight>(&self, f: NodeId, weights: &dyn Fn(u32) -> (W, W)) -> W {
        let mut memo: FxHashMap<NodeId, W> = FxHashMap::default();
        self.probability_rec(f, weights, &mut memo)
    }

    fn probability_rec<W: Weight>(
        &self,
        f: NodeId,
        weights: &dyn Fn(u32) -> (W, W),
        memo: &mut FxHashMap<NodeId, W>,
    ) -> W {
        match f {
            FALSE => return W::zero(),
            TRUE => return W::one(),
            _ => {}
        }
        if let Some(w) = memo.get(&f) {
            return w.clone();
        }
        let n = self.nodes[f as usize];
        let (w0, w1) = weights(n.var);
        let lo = self.probability_rec(n.lo, weights, memo);
        let hi = self.probability_rec(n.hi, weights, memo);
        let r = w0 * lo + w1 * hi;
        memo.insert(f, r.clone());
        r
    }

    /// Exact fraction of assignments to variables `0..num_vars` satisfying `f`.
    pub fn sat_fraction(&self, f: NodeId, num_vars: u32) -> BigRational {
        let count = self.sat_count(f, num_vars);
        BigRational::new(BigInt::from(count), BigInt::from(BigUint::one() << num_vars as usize))
    }

    /// Number of satisfying assignments over variables `0..num_vars`.
    pub fn sat_count(&self, f: NodeId, num_vars: u32) -> BigUint {
        let mut memo = FxHashMap::default();
        if num_vars < 120 {
            if let Some(c) = self.count_u128(f, num_vars, &mut memo) {
                let top = self.level(f, num_vars);
                return BigUint::from(c) << top as usize;
            }
        }
        let mut memo = FxHashMap::default();
        let top = self.level(f, num_vars);
        self.count_big(f, num_vars, &mut memo) << top as usize
    }

    fn level(&self, f: NodeId, num_vars: u32) -> u32 {
        match self.nodes[f as usize].var {
            TERMINAL_VAR => num_vars,
            v => {
                assert!(v < num_vars, "diagram uses variable {v} beyond {num_vars}");
                v
            }
        }
    }

    // satisfying assignments of variables level(f)..num_vars
    fn count_u128(&self, f: NodeId, num_vars: u32, memo: &mut FxHashMap<NodeId, u128>) -> Option<u128> {
        match f {
            FALSE => return Some(0),
            TRUE => return Some(1),
            _ => {}
        }
        if let Some(&c) = memo.get(&f) {
            return Some(c);
        }
        let n = self.nodes[f as usize];
        let lo = self.count_u128(n.lo, num_vars, memo)?;
        let hi = self.count_u128(n.hi, num_vars, memo)?;
        let lo = lo.checked_shl(self.level(n.lo, num_vars) - n.var - 1)?;
        let hi = hi.checked_shl(self.level(n.hi, num_vars) - n.var - 1)?;
        let c = lo.checked_add(hi)?;
        memo.insert(f, c);
        Some(c)
    }

    fn count_big(&self, f: NodeId, num_vars: u32, memo: &mut FxHashMap<NodeId, BigUint>) -> BigUint {
        match f {
            FALSE => return BigUint::ZERO,
            TRUE => return BigUint::one(),
            _ => {}
        }
        if let Some(c) = memo.get(&f) {
            return c.clone();
        }
        let n = self.nodes[f as usize];
        let lo = self.count_big(n.lo, num_vars, memo) << (self.level(n.lo, num_vars) - n.var - 1) as usize;
        let hi = self.count_big(n.hi, num_vars, memo) << (self.level(n.hi, num_vars) - n.var - 1) as usize;
        let c = lo + hi;
        memo.insert(f, c.clone());
        c
    }

    /// Evaluates `f` under a total assignment.
    pub fn eval(&self, f: NodeId, assignment: impl Fn(u32) -> bool) -> bool {
        let mut x = f;
        while x > TRUE {
            let n = self.nodes[x as usize];
            x = if assignment(n.var) { n.hi } else { n.lo };
        }
        x == TRUE
    }
}

impl BoolOps for Bdd {
    type Value = NodeId;

    fn constant(&mut self, value: bool) -> NodeId {
        Bdd::constant(value)
    }
    fn not(&mut self, a: NodeId) -> NodeId {
        Bdd::not(self, a)
    }
    fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Bdd::and(self, a, b)
    }
    fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Bdd::or(self, a, b)
    }
    fn implies(&mut self, a: NodeId, b: NodeId) -> NodeId {
        Bdd::implies(self, a, b)
    }
}
