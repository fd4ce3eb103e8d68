//! Past-time temporal logic: formulas, concrete syntax and trace monitors.
//!
//! Formulas are evaluated at the final position of a finite valuation. The
//! monitor makes one forward pass keeping a single bit per subformula.

mod ast;
mod monitor;
mod parser;

use serde::{Deserialize, Serialize};

use crate::automaton::{DemoSet, ProbabilisticAutomaton};
use crate::{Error, Result};

pub use ast::Formula;
pub use monitor::{BoolOps, Monitor, WordOps};
pub use parser::{parse, parse_unchecked};

/// Ordered set of atomic proposition names. A proposition's index is its
/// bit position in a [`Valuation`] step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alphabet(Vec<String>);

impl Alphabet {
    pub const MAX_PROPS: usize = 64;

    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        if names.len() > Self::MAX_PROPS {
            return Err(Error::InvalidInput(format!(
                "alphabet has {} propositions, at most {} supported",
                names.len(),
                Self::MAX_PROPS
            )));
        }
        for name in &names {
            if !parser::is_proposition_name(name) {
                return Err(Error::InvalidInput(format!("`{name}` is not a valid proposition name")));
            }
        }
        Ok(Self(names))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Bitmask with the given propositions set.
    pub fn mask<'a>(&self, props: impl IntoIterator<Item = &'a str>) -> Result<u64> {
        props.into_iter().try_fold(0u64, |acc, p| {
            let i = self.index_of(p).ok_or_else(|| Error::UnknownProposition(p.to_string()))?;
            Ok(acc | (1 << i))
        })
    }
}

/// One proposition set per time step, encoded as bitmasks over an
/// [`Alphabet`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Valuation(Vec<u64>);

impl Valuation {
    pub fn new(steps: Vec<u64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidInput("valuation must have at least one step".into()));
        }
        Ok(Self(steps))
    }

    pub fn steps(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Truth of `formula` at the last step of `valuation`.
pub fn evaluate(formula: &Formula, alphabet: &Alphabet, valuation: &Valuation) -> Result<bool> {
    Ok(Monitor::compile(formula, alphabet)?.evaluate(valuation.steps()))
}

/// Demonstrations satisfying a formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    /// Indices into the demonstration set.
    pub satisfied: Vec<usize>,
}

impl Membership {
    pub fn count(&self) -> usize {
        self.satisfied.len()
    }
}

/// Valuations of every demonstration, ready for repeated monitoring.
#[derive(Clone, Debug)]
pub struct DemoValuations {
    valuations: Vec<Valuation>,
}

impl DemoValuations {
    pub fn new(demos: &DemoSet, automaton: &ProbabilisticAutomaton) -> Result<Self> {
        let valuations = demos
            .traces()
            .iter()
            .map(|t| automaton.valuation(t))
            .collect::<Result<Vec<_>>>()?;
        if valuations.is_empty() {
            return Err(Error::InvalidInput("demonstration set is empty".into()));
        }
        Ok(Self { valuations })
    }

    pub fn from_valuations(valuations: Vec<Valuation>) -> Result<Self> {
        if valuations.is_empty() {
            return Err(Error::InvalidInput("demonstration set is empty".into()));
        }
        Ok(Self { valuations })
    }

    pub fn len(&self) -> usize {
        self.valuations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valuations.is_empty()
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn membership(&self, monitor: &Monitor) -> Membership {
        let satisfied = self
            .valuations
            .iter()
            .enumerate()
            .filter(|(_, v)| monitor.evaluate(v.steps()))
            .map(|(i, _)| i)
            .collect();
        Membership { satisfied }
    }
}

/// `N_φ`: the number of demonstrations whose labeled valuation satisfies `formula`.
pub fn membership_count(
    formula: &Formula,
    demos: &DemoSet,
    automaton: &ProbabilisticAutomaton,
) -> Result<Membership> {
    let monitor = Monitor::compile(formula, automaton.alphabet())?;
    Ok(DemoValuations::new(demos, automaton)?.membership(&monitor))
}
