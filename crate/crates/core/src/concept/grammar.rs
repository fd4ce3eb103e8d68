use rustc_hash::{FxHashSet, FxHasher};
use serde::{Deserialize, Serialize};
use std::hash::Hasher;

use crate::ptltl::{Alphabet, Formula};

/// Which literal pairs the binary `β` productions range over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// Every ordered pair of literals, including a literal with itself.
    #[default]
    All,
    /// Ordered pairs of different literals.
    DistinctLiterals,
    /// Ordered pairs of literals over different propositions.
    DistinctProps,
}

/// Where the `α ∧ P AP` conjuncts may appear.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnceConjuncts {
    #[default]
    Off,
    /// Only as the antecedent of an implication.
    Antecedent,
    /// Anywhere a `β` may appear.
    Everywhere,
}

/// The concept-class grammar
///
/// ```text
/// φ ::= H ψ | P ψ
/// ψ ::= β | β → β
/// β ::= α | α ∧ α | α S α
/// α ::= AP | ¬AP
/// ```
///
/// with a switch per production and an optional `β ::= α ∧ P AP` extension,
/// without which formulas such as `H((yellow ∧ P blue) → (¬blue S brown))`
/// are not derivable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrammarConfig {
    pub alphabet: Alphabet,
    pub historically: bool,
    pub once: bool,
    pub implications: bool,
    /// Allow `β → β` with the same `β` on both sides.
    pub identical_implications: bool,
    pub conjunctions: bool,
    pub since: bool,
    pub negated_literals: bool,
    pub pairs: PairMode,
    pub once_conjuncts: OnceConjuncts,
    /// Allow `α S α` as the antecedent of an implication.
    pub since_in_antecedents: bool,
}

impl GrammarConfig {
    /// Every production enabled, literal pairs unrestricted, no extension.
    pub fn full(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            historically: true,
            once: true,
            implications: true,
            identical_implications: true,
            conjunctions: true,
            since: true,
            negated_literals: true,
            pairs: PairMode::All,
            once_conjuncts: OnceConjuncts::Off,
            since_in_antecedents: true,
        }
    }

    /// `φ ::= H β` with `β ::= α` only.
    pub fn literals_only(alphabet: Alphabet) -> Self {
        Self {
            once: false,
            implications: false,
            conjunctions: false,
            since: false,
            ..Self::full(alphabet)
        }
    }

    pub fn with_once_conjuncts(mut self, mode: OnceConjuncts) -> Self {
        self.once_conjuncts = mode;
        self
    }

    /// The grammar used for the gridworld case study: the full grammar plus
    /// `α ∧ P AP` antecedents, with `S` kept out of antecedents so that
    /// implications read "condition → temporal obligation".
    pub fn case_study(alphabet: Alphabet) -> Self {
        Self {
            once_conjuncts: OnceConjuncts::Antecedent,
            since_in_antecedents: false,
            ..Self::full(alphabet)
        }
    }

    /// Stable digest of the configuration, for cache file names.
    pub fn digest(&self) -> u64 {
        let json = serde_json::to_string(self).expect("grammar config serializes");
        let mut h = FxHasher::default();
        h.write(json.as_bytes());
        h.finish()
    }
}

/// Derivation counts of a grammar.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarCounts {
    /// Derivation trees.
    pub derivations: usize,
    /// Distinct formulas after canonical syntactic deduplication.
    pub syntactic: usize,
}

/// All formulas the grammar derives, syntactically deduplicated and in
/// canonical order. Semantic pruning happens in lattice construction.
pub fn enumerate_grammar(g: &GrammarConfig) -> (Vec<Formula>, GrammarCounts) {
    let mut alphas = Vec::new();
    for p in g.alphabet.names() {
        alphas.push((p.as_str(), false));
        if g.negated_literals {
            alphas.push((p.as_str(), true));
        }
    }
    let lit = |&(p, neg): &(&str, bool)| {
        let a = Formula::atom(p);
        if neg {
            Formula::not(a)
        } else {
            a
        }
    };
    let pair_ok = |x: &(&str, bool), y: &(&str, bool)| match g.pairs {
        PairMode::All => true,
        PairMode::DistinctLiterals => x != y,
        PairMode::DistinctProps => x.0 != y.0,
    };

    let mut betas: Vec<Formula> = alphas.iter().map(lit).collect();
    for (op, enabled) in [(0, g.conjunctions), (1, g.since)] {
        if !enabled {
            continue;
        }
        for x in &alphas {
            for y in &alphas {
                if pair_ok(x, y) {
                    betas.push(if op == 0 {
                        Formula::and(lit(x), lit(y))
                    } else {
                        Formula::since(lit(x), lit(y))
                    });
                }
            }
        }
    }
    let mut extension = Vec::new();
    if g.once_conjuncts != OnceConjuncts::Off {
        for x in &alphas {
            for p in g.alphabet.names() {
                if pair_ok(x, &(p.as_str(), false)) {
                    extension.push(Formula::and(lit(x), Formula::once(Formula::atom(p.as_str()))));
                }
            }
        }
    }
    let everywhere = g.once_conjuncts == OnceConjuncts::Everywhere;
    let antecedents: Vec<&Formula> = betas
        .iter()
        .filter(|b| g.since_in_antecedents || !matches!(b, Formula::Since(..)))
        .chain(extension.iter().filter(|_| g.once_conjuncts != OnceConjuncts::Off))
        .collect();
    let consequents: Vec<&Formula> = betas.iter().chain(extension.iter().filter(|_| everywhere)).collect();

    let mut psis: Vec<Formula> = consequents.iter().map(|&b| b.clone()).collect();
    if g.implications {
        for &a in &antecedents {
            for &c in &consequents {
                if g.identical_implications || a != c {
                    psis.push(Formula::implies(a.clone(), c.clone()));
                }
            }
        }
    }

    let mut derivations = 0;
    let mut seen = FxHashSet::default();
    let mut out = Vec::new();
    for psi in &psis {
        for (op, enabled) in [(0, g.historically), (1, g.once)] {
            if !enabled {
                continue;
            }
            derivations += 1;
            let f = if op == 0 {
                Formula::historically(psi.clone())
            } else {
                Formula::once(psi.clone())
            }
            .canonical();
            let key = f.to_string();
            if seen.insert(key.clone()) {
                out.push((f.size(), key, f));
            }
        }
    }
    out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let counts = GrammarCounts {
        derivations,
        syntactic: out.len(),
    };
    (out.into_iter().map(|(_, _, f)| f).collect(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet(names: &[&str]) -> Alphabet {
        Alphabet::new(names.iter().copied()).unwrap()
    }

    #[test]
    fn literal_grammar() {
        let (fs, counts) = enumerate_grammar(&GrammarConfig::literals_only(alphabet(&["yellow"])));
        let shown: Vec<String> = fs.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["H(yellow)", "H(!yellow)"]);
        assert_eq!(counts.derivations, 2);
    }

    #[test]
    fn full_grammar_derivations() {
        let g = GrammarConfig::full(alphabet(&["blue", "brown", "red", "yellow"]));
        let (fs, counts) = enumerate_grammar(&g);
        // 8 literals, 8 + 64 + 64 betas, 136 + 136^2 psis, two temporal heads
        assert_eq!(counts.derivations, 2 * (136 + 136 * 136));
        assert_eq!(counts.syntactic, fs.len());
        assert!(counts.syntactic < counts.derivations);
    }

    #[test]
    fn extension_derives_the_recharge_formula() {
        let a = alphabet(&["blue", "brown", "red", "yellow"]);
        let target = crate::ptltl::parse("H(yellow & P(blue) -> (!blue S brown))", &a)
            .unwrap()
            .canonical();
        let (base, _) = enumerate_grammar(&GrammarConfig::full(a.clone()));
        assert!(!base.contains(&target));
        let g = GrammarConfig::full(a).with_once_conjuncts(OnceConjuncts::Antecedent);
        let (ext, _) = enumerate_grammar(&g);
        assert!(ext.contains(&target));
    }

    #[test]
    fn digest_is_stable_under_clone() {
        let g = GrammarConfig::full(alphabet(&["a", "b"]));
        assert_eq!(g.digest(), g.clone().digest());
        assert_ne!(g.digest(), GrammarConfig::literals_only(alphabet(&["a", "b"])).digest());
    }
}
