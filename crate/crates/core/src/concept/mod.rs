//! Concept classes: grammar enumeration, semantic deduplication and the
//! Hasse diagram of subset inclusion.

mod grammar;
mod subset;

use std::fmt::Write as _;
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::bdd::NodeId;
use crate::ptltl::{parse, Alphabet, Formula, Monitor};
use crate::{Error, Result};

pub use grammar::{enumerate_grammar, GrammarConfig, GrammarCounts, OnceConjuncts, PairMode};
pub use subset::{
    subset_check, SampledValuations, SubsetBackend, ValuationDiagrams, ValuationSpace,
    DEFAULT_EXHAUSTIVE_BITS,
};

/// Specifications ordered by subset inclusion, as a Hasse diagram.
///
/// Index 0 is `false`, the last index is `true`, and the rest follow
/// canonical order (smaller formulas first, then by printed form). Edges
/// point from the smaller set to the larger.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptLattice {
    specs: Vec<Formula>,
    names: Vec<String>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    context: Option<Formula>,
}

#[derive(Serialize, Deserialize)]
struct LatticeFile {
    specs: Vec<String>,
    edges: Vec<[usize; 2]>,
    context: Option<String>,
}

impl ConceptLattice {
    /// Assembles a lattice from specs and direct edges, checking the
    /// structural invariants (not the semantic ones).
    pub fn from_parts(specs: Vec<Formula>, edges: &[[usize; 2]], context: Option<Formula>) -> Result<Self> {
        let n = specs.len();
        if n < 2 || specs[0] != Formula::False || specs[n - 1] != Formula::True {
            return Err(Error::InvalidLattice("specs must start with false and end with true".into()));
        }
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &[i, j] in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidLattice(format!("bad edge ({i}, {j})")));
            }
            succs[i].push(j);
            preds[j].push(i);
        }
        for v in preds.iter_mut().chain(succs.iter_mut()) {
            v.sort_unstable();
            let before = v.len();
            v.dedup();
            if v.len() != before {
                return Err(Error::InvalidLattice("duplicate edge".into()));
            }
        }
        let names = specs.iter().map(ToString::to_string).collect();
        let lattice = Self {
            specs,
            names,
            preds,
            succs,
            context,
        };
        lattice.validate()?;
        Ok(lattice)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        if !self.preds[0].is_empty() || !self.succs[n - 1].is_empty() {
            return Err(Error::InvalidLattice("false needs no predecessors and true no successors".into()));
        }
        let order = self.topological_order()?;
        let reach = |start: usize, next: &Vec<Vec<usize>>| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(x) = stack.pop() {
                for &y in &next[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        };
        if reach(0, &self.succs).contains(&false) || reach(n - 1, &self.preds).contains(&false) {
            return Err(Error::InvalidLattice("every spec must lie between false and true".into()));
        }
        // transitive reduction: no edge is implied by a longer path
        let closure = self.closure_from(&order);
        for i in 0..n {
            for &j in &self.succs[i] {
                if self.succs[i].iter().any(|&k| k != j && closure[k].get(j)) {
                    return Err(Error::InvalidLattice(format!("edge ({i}, {j}) is implied by a path")));
                }
            }
        }
        Ok(())
    }

    fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.len();
        let mut indegree: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(x) = ready.pop() {
            order.push(x);
            for &y in &self.succs[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    ready.push(y);
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidLattice("edges contain a cycle".into()));
        }
        Ok(order)
    }

    fn closure_from(&self, order: &[usize]) -> Vec<BitSet> {
        let n = self.len();
        let mut up = vec![BitSet::new(n); n];
        for &i in order.iter().rev() {
            let mut row = BitSet::new(n);
            for &j in &self.succs[i] {
                row.set(j);
                row.union_with(&up[j]);
            }
            up[i] = row;
        }
        up
    }

    /// Strict upper sets: `closure()[i].get(j)` iff spec `i` ⊂ spec `j`.
    pub fn closure(&self) -> Vec<BitSet> {
        let order = self.topological_order().expect("validated lattice is acyclic");
        self.closure_from(&order)
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

    pub fn spec(&self, i: usize) -> &Formula {
        &self.specs[i]
    }

    /// Printed canonical form of spec `i`.
    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn preds(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn succs(&self, i: usize) -> &[usize] {
        &self.succs[i]
    }

    pub fn edges(&self) -> Vec<[usize; 2]> {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| [i, j]))
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    pub fn context(&self) -> Option<&Formula> {
        self.context.as_ref()
    }

    pub fn with_context(mut self, context: Option<Formula>) -> Self {
        self.context = context;
        self
    }

    /// Spec `i` conjoined with the context.
    pub fn scored_formula(&self, i: usize) -> Formula {
        self.specs[i].with_context(self.context.as_ref())
    }

    /// Index of a formula's canonical form, if present.
    pub fn position(&self, f: &Formula) -> Option<usize> {
        let key = f.canonical_string();
        self.names.iter().position(|n| *n == key)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LatticeFile {
            specs: self.names.clone(),
            edges: self.edges(),
            context: self.context.as_ref().map(ToString::to_string),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let file: LatticeFile = serde_json::from_str(text)?;
        let specs = file
            .specs
            .iter()
            .map(|s| parse(s, alphabet))
            .collect::<Result<Vec<_>>>()?;
        let context = file.context.as_deref().map(|c| parse(c, alphabet)).transpose()?;
        Self::from_parts(specs, &file.edges, context)
    }

    /// Graphviz rendering of the Hasse diagram, bottom to top.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hasse {\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", name.replace('"', "\\\""));
        }
        for [i, j] in self.edges() {
            let _ = writeln!(out, "  n{i} -> n{j};");
        }
        out.push_str("}\n");
        out
    }
}

/// Fixed-size bit set over lattice indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSet(Vec<u64>);

impl BitSet {
    pub fn new(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    k * 64 + b
                })
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeOptions {
    /// Threads for the pairwise inclusion filter.
    pub workers: usize,
    /// `|AP| · τ` budget for exhaustive valuation tables.
    pub exhaustive_bits: u32,
    /// Random valuations of the full horizon used to filter candidate pairs.
    pub sample_words: usize,
    pub seed: u64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            exhaustive_bits: 16,
            sample_words: 16,
            seed: 0x5eed,
        }
    }
}

/// What lattice construction did.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Distinct input formulas, constants excluded.
    pub input_specs: usize,
    /// Input formulas satisfiable at the horizon.
    pub non_false: usize,
    /// Input formulas equivalent to `true`.
    pub tautologies: usize,
    /// Semantic classes, bounds included.
    pub classes: usize,
    pub edges: usize,
    /// Pairs that survived the table filter.
    pub candidate_pairs: u64,
    /// Pairs confirmed with a decision diagram.
    pub diagram_checks: u64,
    /// Whether tables covered every valuation (no diagram needed).
    pub exhaustive: bool,
    pub seconds: f64,
}

/// Builds the Hasse diagram of `specs` over unconstrained valuations of
/// length `horizon`. Semantically equal specs collapse to the canonically
/// smallest one; unsatisfiable specs collapse into `false`.
///
/// Inclusion is decided exactly. Candidate pairs are filtered with truth
/// tables over every valuation of a shorter horizon plus random valuations of
/// the full one; since the logic cannot count steps, a valuation refuting
/// inclusion at a shorter horizon can be stretched to refute it at the full
/// horizon, so the filter never drops a true inclusion. Survivors are then
/// confirmed on decision diagrams unless the tables were already exhaustive.
pub fn build_lattice(
    specs: &[Formula],
    alphabet: &Alphabet,
    horizon: usize,
    context: Option<Formula>,
    opts: &LatticeOptions,
) -> Result<(ConceptLattice, BuildReport)> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let start = Instant::now();
    let props = alphabet.len().max(1);
    let mut items: Vec<(usize, String, Formula)> = Vec::new();
    let mut seen = FxHashMap::default();
    for f in specs
        .iter()
        .map(Formula::canonical)
        .chain([Formula::False, Formula::True])
    {
        let name = f.to_string();
        if !seen.contains_key(&name) {
            seen.insert(name.clone(), ());
            items.push((f.size(), name, f));
        }
    }
    items.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let monitors = items
        .iter()
        .map(|(_, _, f)| Monitor::compile(f, alphabet))
        .collect::<Result<Vec<_>>>()?;

    let short = horizon.min((opts.exhaustive_bits as usize / props).max(1));
    let exhaustive = short == horizon;
    let space = ValuationSpace::new(alphabet.len(), short);
    let sampled = (!exhaustive).then(|| SampledValuations::new(alphabet.len(), horizon, opts.sample_words, opts.seed));
    let tables: Vec<Vec<u64>> = parallel_map(&monitors, opts.workers, |m| {
        let mut t = space.table(m);
        if let Some(s) = &sampled {
            t.extend(s.table(m));
        }
        t
    });

    // semantic identity: exact tables, or diagram nodes at the full horizon
    let mut diagrams = (!exhaustive).then(|| ValuationDiagrams::new(alphabet.len(), horizon));
    let nodes: Vec<NodeId> = match &mut diagrams {
        Some(d) => monitors.iter().map(|m| d.node(m)).collect(),
        None => Vec::new(),
    };
    let key_of = |i: usize| -> Key<'_> {
        if exhaustive {
            Key::Table(&tables[i])
        } else {
            Key::Node(nodes[i])
        }
    };
    let false_item = items.iter().position(|it| it.2 == Formula::False).expect("false adjoined");
    let true_item = items.iter().position(|it| it.2 == Formula::True).expect("true adjoined");
    let mut class_of_key: FxHashMap<Key<'_>, usize> = FxHashMap::default();
    let mut reps: Vec<usize> = Vec::new();
    let mut report = BuildReport {
        input_specs: items.len() - 2,
        exhaustive,
        ..BuildReport::default()
    };
    let (false_key, true_key) = (key_of(false_item), key_of(true_item));
    for i in 0..items.len() {
        let key = key_of(i);
        let constant = i == false_item || i == true_item;
        if !constant && key != false_key {
            report.non_false += 1;
        }
        if !constant && key == true_key {
            report.tautologies += 1;
        }
        // items are in canonical order, so the first member represents the class
        class_of_key.entry(key).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
    }
    // false first, true last, the rest in canonical order
    let false_class = class_of_key[&false_key];
    let true_class = class_of_key[&true_key];
    let mut order: Vec<usize> = (0..reps.len()).filter(|&c| c != false_class && c != true_class).collect();
    order.insert(0, false_class);
    order.push(true_class);
    let reps: Vec<usize> = order.iter().map(|&c| reps[c]).collect();
    let n = reps.len();

    // strict inclusion among the middle classes
    let rep_tables: Vec<&Vec<u64>> = reps.iter().map(|&i| &tables[i]).collect();
    let weights: Vec<usize> = rep_tables
        .iter()
        .map(|t| t.iter().map(|w| w.count_ones() as usize).sum())
        .collect();
    let candidate_rows: Vec<Vec<usize>> = parallel_map(&(1..n - 1).collect::<Vec<_>>(), opts.workers, |&i| {
        (1..n - 1)
            .filter(|&j| j != i && weights[i] <= weights[j] && table_leq(rep_tables[i], rep_tables[j]))
            .collect()
    });
    let mut up = vec![BitSet::new(n); n];
    for j in 1..n {
        up[0].set(j);
    }
    for (row, i) in candidate_rows.iter().zip(1..n - 1) {
        up[i].set(n - 1);
        for &j in row {
            report.candidate_pairs += 1;
            let holds = match &mut diagrams {
                Some(d) => {
                    report.diagram_checks += 1;
                    d.leq(nodes[reps[i]], nodes[reps[j]])
                }
                None => true,
            };
            if holds {
                up[i].set(j);
            }
        }
    }

    // transitive reduction: visit each upper set nearest-first
    let sizes: Vec<usize> = up.iter().map(BitSet::count).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut above: Vec<usize> = up[i].iter().collect();
        above.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut covered = BitSet::new(n);
        for k in above {
            if !covered.get(k) {
                edges.push([i, k]);
                covered.union_with(&up[k]);
            }
        }
    }
    let specs: Vec<Formula> = reps.iter().map(|&i| items[i].2.clone()).collect();
    let lattice = ConceptLattice::from_parts(specs, &edges, context)?;
    report.classes = lattice.len();
    report.edges = lattice.num_edges();
    report.seconds = start.elapsed().as_secs_f64();
    Ok((lattice, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key<'a> {
    Table(&'a [u64]),
    Node(NodeId),
}

fn table_leq(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Order-preserving map over a slice on up to `workers` threads.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    fn build(specs: &[&str], horizon: usize, opts: LatticeOptions) -> ConceptLattice {
        let al = abc();
        let fs: Vec<Formula> = specs.iter().map(|s| parse(s, &al).unwrap()).collect();
        build_lattice(&fs, &al, horizon, None, &opts).unwrap().0
    }

    #[test]
    fn empty_class_is_one_edge() {
        let l = build(&[], 3, LatticeOptions::default());
        assert_eq!(l.len(), 2);
        assert_eq!(l.edges(), vec![[0, 1]]);
    }

    #[test]
    fn chain_example() {
        let l = build(&["H(a)", "H(a & b)", "P(a)"], 3, LatticeOptions::default());
        let names: Vec<&str> = (0..l.len()).map(|i| l.name(i)).collect();
        assert_eq!(names, ["false", "H(a)", "P(a)", "H(a & b)", "true"]);
        let mut edges = l.edges();
        edges.sort();
        assert_eq!(edges, vec![[0, 3], [1, 2], [2, 4], [3, 1]]);
    }

    #[test]
    fn duplicates_and_contradictions_collapse() {
        let l = build(&["H(a & !a)", "H(a)", "H(a & a)", "P(a | !a)"], 3, LatticeOptions::default());
        let names: Vec<&str> = (0..l.len()).map(|i| l.name(i)).collect();
        assert_eq!(names, ["false", "H(a)", "true"]);
    }

    #[test]
    fn diagram_path_matches_exhaustive_path() {
        let specs = [
            "H(a)",
            "P(b)",
            "H(a -> (b S c))",
            "P(a & b)",
            "H(!a)",
            "(a S b)",
            "H(b -> P(a))",
            "P(c) & H(!a)",
        ];
        let exact = build(&specs, 3, LatticeOptions::default());
        let symbolic = build(
            &specs,
            3,
            LatticeOptions {
                exhaustive_bits: 6,
                sample_words: 1,
                ..LatticeOptions::default()
            },
        );
        assert_eq!(exact, symbolic);
    }

    #[test]
    fn json_round_trip() {
        let al = abc();
        let l = build(&["H(a)", "H(a & b)", "P(a)"], 3, LatticeOptions::default())
            .with_context(Some(parse("P(c)", &al).unwrap()));
        let back = ConceptLattice::from_json(&l.to_json().unwrap(), &al).unwrap();
        assert_eq!(l, back);
        assert!(l.to_dot().contains("n0 -> n3"));
    }

    #[test]
    fn rejects_non_reduced_edges() {
        let specs = vec![Formula::False, Formula::atom("a"), Formula::True];
        let err = ConceptLattice::from_parts(specs, &[[0, 1], [1, 2], [0, 2]], None);
        assert!(matches!(err, Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn parallel_build_is_deterministic() {
        let specs = ["H(a)", "P(b)", "H(a -> (b S c))", "P(a & b)", "H(!a)", "(a S b)"];
        let one = build(&specs, 3, LatticeOptions::default());
        let four = build(&specs, 3, LatticeOptions { workers: 4, ..LatticeOptions::default() });
        assert_eq!(one, four);
    }
}
