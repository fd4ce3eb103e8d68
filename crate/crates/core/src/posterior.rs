//! Scoring: the closed-form maximum-entropy likelihood, its log-likelihood
//! over a demonstration set, Bernoulli KL information gain and the posterior
//! scores used to rank specifications.
//!
//! Everything is generic over [`Float`]; the inference code runs on `f64`.

use std::cmp::Ordering;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::automaton::{random_trace_probability, DemoSet, ProbabilisticAutomaton};
use crate::{Error, Result};

/// `N_φ`, `|X|`, the empirical rate `φ̄ = N_φ/|X|` and the random rate `φ̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatStats<F> {
    pub n_sat: usize,
    pub n_total: usize,
    pub empirical_rate: F,
    pub rand_rate: F,
}

impl<F: Float> SatStats<F> {
    pub fn new(n_sat: usize, n_total: usize, rand_rate: F) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::InvalidInput("statistics need at least one demonstration".into()));
        }
        if n_sat > n_total {
            return Err(Error::InvalidInput(format!("{n_sat} satisfying demonstrations out of {n_total}")));
        }
        if !(rand_rate >= F::zero() && rand_rate <= F::one()) {
            return Err(Error::InvalidInput(format!(
                "random satisfaction rate {:?} outside [0, 1]",
                rand_rate.to_f64()
            )));
        }
        Ok(Self {
            n_sat,
            n_total,
            empirical_rate: ratio(n_sat, n_total),
            rand_rate,
        })
    }

    pub fn n_unsat(&self) -> usize {
        self.n_total - self.n_sat
    }

    /// Statistics of the negated specification.
    pub fn complement(&self) -> Self {
        Self {
            n_sat: self.n_unsat(),
            n_total: self.n_total,
            empirical_rate: ratio(self.n_unsat(), self.n_total),
            rand_rate: F::one() - self.rand_rate,
        }
    }
}

fn ratio<F: Float>(n: usize, d: usize) -> F {
    F::from(n).expect("count fits the float type") / F::from(d).expect("count fits the float type")
}

/// `x · ln(x / y)` with `0 · ln(…) = 0`.
fn xlogxy<F: Float>(x: F, y: F) -> F {
    if x == F::zero() {
        F::zero()
    } else if y == F::zero() {
        F::infinity()
    } else {
        x * (x / y).ln()
    }
}

/// `D_KL(B(p) ‖ B(q))`, `+∞` when `q` gives zero mass to an outcome `p` uses.
pub fn bernoulli_kl<F: Float>(p: F, q: F) -> F {
    let one = F::one();
    let kl = xlogxy(p, q) + xlogxy(one - p, one - q);
    // rounding can push the sum of two nearly cancelling terms below zero
    kl.max(F::zero())
}

/// The information gain `1[φ̄ ≥ φ̃] · D_KL(B(φ̄) ‖ B(φ̃))` with `φ̄ = n_sat / n_total`.
pub fn j_score<F: Float>(n_sat: usize, n_total: usize, rand_rate: F) -> F {
    let p = ratio::<F>(n_sat, n_total);
    if p < rand_rate {
        F::zero()
    } else {
        bernoulli_kl(p, rand_rate)
    }
}

/// Maximum-entropy probability of one trace given whether it satisfies the
/// specification and its probability `ξ̃` under random actions.
pub fn trace_likelihood<F: Float>(trace_in_phi: bool, rand_trace_prob: F, stats: &SatStats<F>) -> Result<F> {
    let one = F::one();
    let (num, den) = if trace_in_phi {
        (stats.empirical_rate, stats.rand_rate)
    } else {
        (one - stats.empirical_rate, one - stats.rand_rate)
    };
    if den == F::zero() {
        if num == F::zero() {
            return Ok(F::zero());
        }
        return Err(Error::InconsistentModel(format!(
            "trace {} the specification but random actions never do",
            if trace_in_phi { "satisfies" } else { "violates" }
        )));
    }
    Ok(rand_trace_prob * num / den)
}

/// `ρ_X + N_φ ln(φ̄/φ̃) + N_¬φ ln((1−φ̄)/(1−φ̃))`, without the multinomial term.
pub fn log_likelihood<F: Float>(stats: &SatStats<F>, log_rho_x: F) -> F {
    let one = F::one();
    let term = |n: usize, p: F, q: F| {
        if n == 0 {
            F::zero()
        } else if q == F::zero() {
            F::infinity()
        } else {
            F::from(n).expect("count fits the float type") * (p / q).ln()
        }
    };
    log_rho_x
        + term(stats.n_sat, stats.empirical_rate, stats.rand_rate)
        + term(stats.n_unsat(), one - stats.empirical_rate, one - stats.rand_rate)
}

/// `ρ_X = Σ_{ξ∈X} ln ξ̃`, the specification-independent part of the log-likelihood.
pub fn log_rho<F: Float>(demos: &DemoSet, m: &ProbabilisticAutomaton) -> Result<F> {
    let mut total = 0.0f64;
    for t in demos.traces() {
        total += random_trace_probability(t, m)?.ln();
    }
    Ok(F::from(total).expect("finite or infinite f64 converts"))
}

/// Parameters of the Beta prior on the demonstrator's competence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPriorConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPriorConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("Beta prior needs positive parameters, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }
}

/// Log density of `Beta(alpha, beta)` at `x ∈ (0, 1)`.
pub fn ln_beta_density(x: f64, alpha: f64, beta: f64) -> f64 {
    let ln_b = libm::lgamma(alpha) + libm::lgamma(beta) - libm::lgamma(alpha + beta);
    (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_b
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScoreMode {
    /// `|X| · J`, or `−∞` when the demonstrator does worse than random.
    #[default]
    Indicator,
    /// `|X| · D_KL + ln Beta(φ̄; α, β)`.
    Beta(BetaPriorConfig),
}

impl ScoreMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreMode::Indicator => "indicator",
            ScoreMode::Beta(_) => "beta",
        }
    }
}

/// Unnormalized log posterior of a specification, up to `ρ_X`.
pub fn posterior_score<F: Float>(stats: &SatStats<F>, mode: &ScoreMode) -> F {
    let n = F::from(stats.n_total).expect("count fits the float type");
    match mode {
        ScoreMode::Indicator => {
            if stats.empirical_rate < stats.rand_rate {
                F::neg_infinity()
            } else {
                n * bernoulli_kl(stats.empirical_rate, stats.rand_rate)
            }
        }
        ScoreMode::Beta(cfg) => {
            let eps = 0.5 / stats.n_total as f64;
            let p = stats.empirical_rate.to_f64().expect("rate is finite").clamp(eps, 1.0 - eps);
            let prior = F::from(ln_beta_density(p, cfg.alpha, cfg.beta)).expect("finite prior");
            n * bernoulli_kl(stats.empirical_rate, stats.rand_rate) + prior
        }
    }
}

/// Total order on scores: `−∞ < finite < +∞`; NaN sorts below everything.
pub fn compare_scores<F: Float>(a: F, b: F) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => a.partial_cmp(&b).expect("non-NaN floats are ordered"),
    }
}

/// The normalization constants of the maximum-entropy trace distribution
/// `Pr(ξ) = w(ξ) · e^{λ φ(ξ)} / Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxEntParams<F> {
    pub lambda: F,
    pub z: F,
    pub w_phi: F,
    pub w_not_phi: F,
}

impl<F: Float> MaxEntParams<F> {
    /// Solves the normalization and expectation constraints in closed form.
    /// `w_phi` and `w_not_phi` are the trace masses inside and outside `φ`.
    pub fn solve(w_phi: F, w_not_phi: F, empirical_rate: F) -> Result<Self> {
        let (zero, one) = (F::zero(), F::one());
        if w_phi < zero || w_not_phi < zero {
            return Err(Error::InvalidInput("trace masses must be nonnegative".into()));
        }
        if (w_phi == zero && empirical_rate > zero) || (w_not_phi == zero && empirical_rate < one) {
            return Err(Error::InconsistentModel(
                "empirical rate is unreachable under the trace masses".into(),
            ));
        }
        let z = if empirical_rate == one {
            F::infinity()
        } else {
            w_not_phi / (one - empirical_rate)
        };
        let lambda = if empirical_rate == zero {
            F::neg_infinity()
        } else if empirical_rate == one {
            F::infinity()
        } else {
            (z * empirical_rate / w_phi).ln()
        };
        Ok(Self {
            lambda,
            z,
            w_phi,
            w_not_phi,
        })
    }

    /// Probability of a trace of weight `w`.
    pub fn probability(&self, w: F, in_phi: bool) -> F {
        if in_phi {
            if self.lambda == F::infinity() {
                w / self.w_phi
            } else {
                w * self.lambda.exp() / self.z
            }
        } else if self.z == F::infinity() {
            F::zero()
        } else {
            w / self.z
        }
    }
}
