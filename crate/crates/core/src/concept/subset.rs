use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bdd::{Bdd, NodeId};
use crate::ptltl::{Alphabet, Formula, Monitor};
use crate::{Error, Result};

/// Largest `|AP| · τ` the exhaustive backend will enumerate by default.
pub const DEFAULT_EXHAUSTIVE_BITS: u32 = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetBackend {
    /// Exhaustive when within budget, decision diagram otherwise.
    #[default]
    Auto,
    Exhaustive,
    DecisionDiagram,
}

/// Whether every length-`τ` valuation satisfying `f1` also satisfies `f2`.
/// Valuations are unconstrained: any set of propositions at any step.
pub fn subset_check(
    f1: &Formula,
    f2: &Formula,
    alphabet: &Alphabet,
    horizon: usize,
    backend: SubsetBackend,
    exhaustive_bits: u32,
) -> Result<bool> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let m1 = Monitor::compile(f1, alphabet)?;
    let m2 = Monitor::compile(f2, alphabet)?;
    let bits = alphabet.len() * horizon;
    let fits = bits <= exhaustive_bits as usize;
    match backend {
        SubsetBackend::Exhaustive if !fits => Err(Error::BudgetExceeded(format!(
            "{bits} valuation bits exceed the exhaustive budget of {exhaustive_bits}"
        ))),
        SubsetBackend::Exhaustive | SubsetBackend::Auto if fits => {
            let space = ValuationSpace::new(alphabet.len(), horizon);
            Ok((0..space.words()).all(|w| {
                let a = space.eval(&m1, w);
                let b = space.eval(&m2, w);
                a & !b & space.lane_mask() == 0
            }))
        }
        _ => {
            let mut dd = ValuationDiagrams::new(alphabet.len(), horizon);
            let a = dd.node(&m1);
            let b = dd.node(&m2);
            Ok(dd.leq(a, b))
        }
    }
}

/// All `2^(|AP|·τ)` valuations, 64 per word. Bit `t·|AP| + p` of a
/// valuation's index is proposition `p` at step `t`.
#[derive(Clone, Copy, Debug)]
pub struct ValuationSpace {
    props: usize,
    horizon: usize,
    bits: usize,
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl ValuationSpace {
    pub fn new(props: usize, horizon: usize) -> Self {
        let bits = props * horizon;
        assert!(bits < 40, "valuation space of {bits} bits is not enumerable");
        Self { props, horizon, bits }
    }

    pub fn words(&self) -> usize {
        1 << self.bits.saturating_sub(6)
    }

    /// Lanes of the (single) word that are real valuations.
    pub fn lane_mask(&self) -> u64 {
        if self.bits >= 6 {
            !0
        } else {
            (1u64 << (1 << self.bits)) - 1
        }
    }

    fn atom_word(&self, word: usize, t: usize, p: usize) -> u64 {
        let bit = t * self.props + p;
        if bit < 6 {
            LANE_PATTERNS[bit]
        } else if word >> (bit - 6) & 1 == 1 {
            !0
        } else {
            0
        }
    }

    pub fn eval(&self, monitor: &Monitor, word: usize) -> u64 {
        monitor.evaluate_words(self.horizon, |t, p| self.atom_word(word, t, p))
    }

    /// Truth table of the formula over the whole space.
    pub fn table(&self, monitor: &Monitor) -> Vec<u64> {
        let mask = self.lane_mask();
        (0..self.words()).map(|w| self.eval(monitor, w) & mask).collect()
    }
}

/// Seeded uniformly random valuations of a fixed horizon, 64 per word.
#[derive(Clone, Debug)]
pub struct SampledValuations {
    horizon: usize,
    props: usize,
    /// `words[w][t·|AP| + p]`.
    words: Vec<Vec<u64>>,
}

impl SampledValuations {
    pub fn new(props: usize, horizon: usize, words: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = (0..words)
            .map(|_| (0..props * horizon).map(|_| rng.next_u64()).collect())
            .collect();
        Self { horizon, props, words }
    }

    pub fn table(&self, monitor: &Monitor) -> Vec<u64> {
        self.words
            .iter()
            .map(|w| monitor.evaluate_words(self.horizon, |t, p| w[t * self.props + p]))
            .collect()
    }
}

/// Formulas as decision diagrams over one variable per proposition per step,
/// time-major.
#[derive(Debug)]
pub struct ValuationDiagrams {
    bdd: Bdd,
    props: usize,
    horizon: usize,
}

impl ValuationDiagrams {
    pub fn new(props: usize, horizon: usize) -> Self {
        Self {
            bdd: Bdd::new(),
            props,
            horizon,
        }
    }

    pub fn node(&mut self, monitor: &Monitor) -> NodeId {
        let mut prev = Vec::new();
        let mut cur = Vec::new();
        let props = self.props;
        for t in 0..self.horizon {
            monitor.step(
                &mut self.bdd,
                |b, p| b.var((t * props + p) as u32),
                (t > 0).then_some(&prev[..]),
                &mut cur,
            );
            std::mem::swap(&mut prev, &mut cur);
        }
        Monitor::root(&prev)
    }

    pub fn leq(&mut self, a: NodeId, b: NodeId) -> bool {
        self.bdd.leq(a, b)
    }

    pub fn manager_size(&self) -> usize {
        self.bdd.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptltl::parse;

    fn ab() -> Alphabet {
        Alphabet::new(["blue", "red", "yellow"]).unwrap()
    }

    fn check(a: &str, b: &str, horizon: usize) -> (bool, bool) {
        let al = ab();
        let (fa, fb) = (parse(a, &al).unwrap(), parse(b, &al).unwrap());
        let ex = subset_check(&fa, &fb, &al, horizon, SubsetBackend::Exhaustive, 24).unwrap();
        let dd = subset_check(&fa, &fb, &al, horizon, SubsetBackend::DecisionDiagram, 24).unwrap();
        (ex, dd)
    }

    #[test]
    fn bounds_and_examples() {
        assert_eq!(check("false", "P(red)", 3), (true, true));
        assert_eq!(check("P(red)", "P(red)", 3), (true, true));
        assert_eq!(check("H(red)", "true", 3), (true, true));
        assert_eq!(check("H(yellow & red)", "H(yellow)", 3), (true, true));
        assert_eq!(check("P(blue)", "H(blue)", 2), (false, false));
        assert_eq!(check("P(blue)", "H(blue)", 1), (true, true));
    }

    #[test]
    fn budget() {
        let al = ab();
        let f = parse("H(red)", &al).unwrap();
        assert!(matches!(
            subset_check(&f, &f, &al, 10, SubsetBackend::Exhaustive, 20),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(subset_check(&f, &f, &al, 10, SubsetBackend::Auto, 20).unwrap());
    }

    #[test]
    fn tiny_spaces_mask_unused_lanes() {
        let s = ValuationSpace::new(1, 2);
        assert_eq!(s.words(), 1);
        assert_eq!(s.lane_mask(), 0xF);
        let al = Alphabet::new(["a"]).unwrap();
        let m = Monitor::compile(&parse("true", &al).unwrap(), &al).unwrap();
        assert_eq!(s.table(&m), vec![0xF]);
    }
}
