use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// Past-time temporal formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `H a`: `a` held at every step so far.
    Historically(Box<Formula>),
    /// `P a`: `a` held at some step so far.
    Once(Box<Formula>),
    /// `a S b`: `b` held at some step and `a` at every step after it.
    Since(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Self::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Self::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Self::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Self::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Self::Implies(Box::new(a), Box::new(b))
    }

    pub fn historically(a: Formula) -> Self {
        Self::Historically(Box::new(a))
    }

    pub fn once(a: Formula) -> Self {
        Self::Once(Box::new(a))
    }

    pub fn since(a: Formula, b: Formula) -> Self {
        Self::Since(Box::new(a), Box::new(b))
    }

    /// `context ∧ self`, collapsing the constant cases.
    pub fn with_context(&self, context: Option<&Formula>) -> Formula {
        match (context, self) {
            (None, f) => f.clone(),
            (Some(_), Formula::False) => Formula::False,
            (Some(c), Formula::True) => c.clone(),
            (Some(c), f) => Formula::and(c.clone(), f.clone()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Self::True | Self::False | Self::Atom(_) => 1,
            Self::Not(a) | Self::Historically(a) | Self::Once(a) => 1 + a.size(),
            Self::And(a, b) | Self::Or(a, b) | Self::Implies(a, b) | Self::Since(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::True | Self::False | Self::Atom(_) => 0,
            Self::Not(a) | Self::Historically(a) | Self::Once(a) => 1 + a.depth(),
            Self::And(a, b) | Self::Or(a, b) | Self::Implies(a, b) | Self::Since(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Self::True | Self::False => {}
            Self::Atom(a) => {
                out.insert(a);
            }
            Self::Not(a) | Self::Historically(a) | Self::Once(a) => a.collect_atoms(out),
            Self::And(a, b) | Self::Or(a, b) | Self::Implies(a, b) | Self::Since(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Normal form used for syntactic deduplication: operands of `&` and `|`
    /// are sorted by their printed form.
    pub fn canonical(&self) -> Formula {
        match self {
            Self::True | Self::False | Self::Atom(_) => self.clone(),
            Self::Not(a) => Self::not(a.canonical()),
            Self::Historically(a) => Self::historically(a.canonical()),
            Self::Once(a) => Self::once(a.canonical()),
            Self::Implies(a, b) => Self::implies(a.canonical(), b.canonical()),
            Self::Since(a, b) => Self::since(a.canonical(), b.canonical()),
            Self::And(a, b) => {
                let (a, b) = sorted_pair(a.canonical(), b.canonical());
                Self::and(a, b)
            }
            Self::Or(a, b) => {
                let (a, b) = sorted_pair(a.canonical(), b.canonical());
                Self::or(a, b)
            }
        }
    }

    pub fn canonical_string(&self) -> String {
        self.canonical().to_string()
    }

    /// Total order used for tie-breaking and representative selection:
    /// smaller formulas first, then by printed form.
    pub fn canonical_cmp(&self, other: &Formula) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.to_string().cmp(&other.to_string()))
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Self::And(..) | Self::Or(..) | Self::Implies(..) | Self::Since(..)
        )
    }
}

fn sorted_pair(a: Formula, b: Formula) -> (Formula, Formula) {
    if b.to_string() < a.to_string() {
        (b, a)
    } else {
        (a, b)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::True => f.write_str("true"),
            Self::False => f.write_str("false"),
            Self::Atom(a) => f.write_str(a),
            Self::Not(a) => write!(f, "!{a}"),
            Self::Historically(a) | Self::Once(a) => {
                let op = if matches!(self, Self::Historically(_)) { "H" } else { "P" };
                if a.is_binary() {
                    write!(f, "{op}{a}")
                } else {
                    write!(f, "{op}({a})")
                }
            }
            Self::And(a, b) => write!(f, "({a} & {b})"),
            Self::Or(a, b) => write!(f, "({a} | {b})"),
            Self::Implies(a, b) => write!(f, "({a} -> {b})"),
            Self::Since(a, b) => write!(f, "({a} S {b})"),
        }
    }
}

impl serde::Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_unchecked(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::atom("a")
    }
    fn b() -> Formula {
        Formula::atom("b")
    }

    #[test]
    fn printing_is_fully_parenthesized() {
        let f = Formula::historically(Formula::implies(
            Formula::and(Formula::atom("yellow"), Formula::once(Formula::atom("blue"))),
            Formula::since(Formula::not(Formula::atom("blue")), Formula::atom("brown")),
        ));
        assert_eq!(f.to_string(), "H((yellow & P(blue)) -> (!blue S brown))");
        assert_eq!(
            f.canonical_string(),
            "H((P(blue) & yellow) -> (!blue S brown))"
        );
        assert_eq!(Formula::not(Formula::and(a(), b())).to_string(), "!(a & b)");
    }

    #[test]
    fn canonical_sorts_commutative_operands_only() {
        assert_eq!(Formula::and(b(), a()).canonical(), Formula::and(a(), b()));
        assert_eq!(Formula::or(b(), a()).canonical(), Formula::or(a(), b()));
        assert_eq!(Formula::since(b(), a()).canonical(), Formula::since(b(), a()));
    }

    #[test]
    fn context_collapses_constants() {
        let c = Formula::historically(a());
        assert_eq!(Formula::False.with_context(Some(&c)), Formula::False);
        assert_eq!(Formula::True.with_context(Some(&c)), c);
        assert_eq!(b().with_context(None), b());
    }

    #[test]
    fn size_depth_and_atoms() {
        let f = Formula::since(Formula::not(a()), Formula::once(b()));
        assert_eq!(f.size(), 5);
        assert_eq!(f.depth(), 2);
        assert_eq!(f.atoms().into_iter().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(Formula::True.canonical_cmp(&a()), Ordering::Greater);
        assert_eq!(a().canonical_cmp(&f), Ordering::Less);
    }
}
