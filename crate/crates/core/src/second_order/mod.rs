//! Conditioning in the space of the sender's possible beliefs.
//!
//! HQ's belief is a point `(a, b, c, d)` of the 3-simplex giving the
//! probabilities of `R1, R2, B1, B2`. Judy holds a prior over these points;
//! the report `Pr_HQ(R1 | R) = q` becomes the positive-probability event
//! that `a / (a + b)` lies in a band around `q`, on which she simply
//! conditions. Her first-order beliefs are the expectation of HQ's
//! probabilities under the conditioned prior.
//!
//! Under the uniform prior `a / (a + b)` is uniform on `[0, 1]` and
//! independent of `Pr_HQ(B)`, whose CDF is `(3 - 2p) p²`. Everything exact in
//! this module follows from those two facts; the Monte Carlo estimators in
//! [`estimate`] check them numerically.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::belief::{Event, FiniteDistribution, OutcomeSpace};
use crate::error::{Error, Result};

pub mod estimate;
mod ks;
pub mod sampling;

pub use estimate::{
    estimate_posterior, independence_check, independence_deviation, mc_posterior_quadrants,
    trust_estimate, trust_expectation, McEstimate, PosteriorEstimate,
};
pub use ks::{ks_critical_value, ks_statistic};
pub use sampling::{sample_chunk, sample_prior, McConfig, DEFAULT_SEED};

/// Validity slack for belief coordinates.
const BELIEF_TOL: f64 = 1e-12;

pub const QUADRANTS: [&str; 4] = ["R1", "R2", "B1", "B2"];

/// The four-quadrant outcome space `{R1, R2, B1, B2}`.
pub fn quadrant_space() -> OutcomeSpace {
    static SPACE: OnceLock<OutcomeSpace> = OnceLock::new();
    SPACE.get_or_init(|| OutcomeSpace::new(QUADRANTS).expect("static labels")).clone()
}

/// One possible belief of HQ: probabilities `a, b, c` of `R1, R2, B1`;
/// `B2` gets the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HQBelief {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HQBelief {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let ok = [a, b, c].iter().all(|x| x.is_finite() && *x >= -BELIEF_TOL)
            && a + b + c <= 1.0 + BELIEF_TOL;
        if !ok {
            return Err(Error::InvalidBelief(format!("({a}, {b}, {c}) is not in the simplex")));
        }
        Ok(Self { a, b, c })
    }

    pub fn d(&self) -> f64 {
        (1.0 - self.a - self.b - self.c).max(0.0)
    }

    /// Probabilities of `R1, R2, B1, B2`.
    pub fn probs(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d()]
    }

    /// `Pr_HQ(E)` for an event over [`quadrant_space`].
    pub fn prob_of(&self, event: &Event) -> Result<f64> {
        if event.space().labels() != QUADRANTS {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.probs().iter().zip(event.mask()).filter(|(_, &m)| m).map(|(p, _)| p).sum())
    }

    pub fn to_distribution(&self) -> FiniteDistribution {
        FiniteDistribution::from_weights(quadrant_space(), self.probs().to_vec())
            .expect("belief coordinates are nonnegative and sum to one")
    }
}

/// `Pr_HQ(R1 | R) = a / (a + b)`.
pub fn cond_red(h: &HQBelief) -> Result<f64> {
    let red = h.a + h.b;
    if red <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    Ok(h.a / red)
}

/// `Pr_HQ(B) = 1 - a - b`.
pub fn blue_prob(h: &HQBelief) -> f64 {
    1.0 - h.a - h.b
}

/// The report `Pr_HQ(R1 | R) ∈ [q - ε, q + ε]`, clipped to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MessageBand {
    q: f64,
    epsilon: f64,
}

impl MessageBand {
    pub const DEFAULT_EPSILON: f64 = 0.01;

    pub fn new(q: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidBand(format!("q = {q} outside [0, 1]")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidBand(format!("epsilon = {epsilon} must be positive")));
        }
        Ok(Self { q, epsilon })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lo(&self) -> f64 {
        (self.q - self.epsilon).max(0.0)
    }

    pub fn hi(&self) -> f64 {
        (self.q + self.epsilon).min(1.0)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo() + self.hi())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    /// Whether `h` reports inside the band. Beliefs with `a + b = 0` never do.
    pub fn accepts(&self, h: &HQBelief) -> bool {
        cond_red(h).map(|x| self.contains(x)).unwrap_or(false)
    }
}

/// Uniform-prior CDF of `Pr_HQ(R1 | R)`: the identity on `[0, 1]`.
pub fn cdf_cond_red(q: f64) -> f64 {
    q.clamp(0.0, 1.0)
}

/// Uniform-prior CDF of `Pr_HQ(B)`: `(3 - 2p) p²`.
pub fn cdf_blue(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (3.0 - 2.0 * p) * p * p
}

/// Uniform-prior joint CDF, `q (3 - 2p) p²`, the product of the marginals.
pub fn joint_cdf(q: f64, p: f64) -> f64 {
    let (q, p) = (q.clamp(0.0, 1.0), p.clamp(0.0, 1.0));
    q * (3.0 - 2.0 * p) * p * p
}

/// Uniform-prior density of `Pr_HQ(B)`: `6p(1 - p)` on `[0, 1]`.
pub fn density_blue(p: f64) -> f64 {
    if (0.0..=1.0).contains(&p) {
        6.0 * p * (1.0 - p)
    } else {
        0.0
    }
}

/// Judy's posterior probability of Blue after conditioning the uniform prior
/// on `band`.
///
/// The band is an event about `a / (a + b)` alone, which is independent of
/// `Pr_HQ(B)`; conditioning leaves the law of `Pr_HQ(B)` unchanged and its
/// mean is `∫ 6p²(1 - p) dp = 1/2` whatever `q` and `ε` are.
pub fn expected_blue_given_message(band: &MessageBand) -> f64 {
    let _ = band;
    0.5
}

/// Judy's posterior over the quadrants after conditioning the uniform prior
/// on `band`: `(m/2, (1 - m)/2, 1/4, 1/4)` with `m` the clipped band midpoint.
pub fn exact_posterior_quadrants(band: &MessageBand) -> FiniteDistribution {
    let m = band.midpoint();
    FiniteDistribution::new(quadrant_space(), vec![m / 2.0, (1.0 - m) / 2.0, 0.25, 0.25])
        .expect("closed form is a distribution")
}

/// Judy's prior over HQ's beliefs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorSpec", into = "PriorSpec")]
pub enum SecondOrderPrior {
    /// Lebesgue measure on `{a, b, c ≥ 0, a + b + c ≤ 1}`.
    UniformSimplex,
    /// Dirichlet over `(R1, R2, B1, B2)`.
    Dirichlet([f64; 4]),
    /// `r = Pr(R)`, `x = Pr(R1 | R)`, `y = Pr(B1 | B)` independent uniforms.
    ConditionalParamUniform,
}

/// Wire format: `{"variant": "uniform" | "dirichlet" | "conditional", "alpha": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

impl TryFrom<PriorSpec> for SecondOrderPrior {
    type Error = Error;

    fn try_from(spec: PriorSpec) -> Result<Self> {
        match (spec.variant.as_str(), spec.alpha) {
            ("uniform", None) => Ok(Self::UniformSimplex),
            ("conditional", None) => Ok(Self::ConditionalParamUniform),
            ("dirichlet", Some(alpha)) => {
                let alpha: [f64; 4] = alpha.try_into().map_err(|a: Vec<f64>| {
                    Error::InvalidPrior(format!("dirichlet needs 4 parameters, got {}", a.len()))
                })?;
                Self::dirichlet(alpha)
            }
            ("dirichlet", None) => Err(Error::InvalidPrior("dirichlet needs `alpha`".into())),
            ("uniform" | "conditional", Some(_)) => {
                Err(Error::InvalidPrior(format!("`{}` takes no `alpha`", spec.variant)))
            }
            (other, _) => Err(Error::InvalidPrior(format!("unknown variant `{other}`"))),
        }
    }
}

impl From<SecondOrderPrior> for PriorSpec {
    fn from(p: SecondOrderPrior) -> Self {
        match p {
            SecondOrderPrior::UniformSimplex => PriorSpec { variant: "uniform".into(), alpha: None },
            SecondOrderPrior::Dirichlet(a) => {
                PriorSpec { variant: "dirichlet".into(), alpha: Some(a.to_vec()) }
            }
            SecondOrderPrior::ConditionalParamUniform => {
                PriorSpec { variant: "conditional".into(), alpha: None }
            }
        }
    }
}

impl SecondOrderPrior {
    pub fn dirichlet(alpha: [f64; 4]) -> Result<Self> {
        if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidPrior(format!("alpha {alpha:?} must be positive")));
        }
        Ok(Self::Dirichlet(alpha))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidPrior(e.to_string()))
    }

    /// Uniform on the simplex, in either spelling.
    pub fn is_uniform_simplex(&self) -> bool {
        match self {
            Self::UniformSimplex => true,
            Self::Dirichlet(a) => a.iter().all(|&x| x == 1.0),
            Self::ConditionalParamUniform => false,
        }
    }

    /// CDF of `Pr_HQ(R1 | R)` under this prior.
    pub fn cond_red_cdf(&self, q: f64) -> f64 {
        match self {
            _ if self.is_uniform_simplex() => cdf_cond_red(q),
            Self::Dirichlet([a1, a2, _, _]) => beta_cdf(q, *a1, *a2),
            _ => cdf_cond_red(q),
        }
    }

    /// CDF of `Pr_HQ(B)` under this prior.
    pub fn blue_cdf(&self, p: f64) -> f64 {
        match self {
            _ if self.is_uniform_simplex() => cdf_blue(p),
            Self::Dirichlet([a1, a2, a3, a4]) => beta_cdf(p, a3 + a4, a1 + a2),
            // Pr(B) = 1 - r with r uniform.
            _ => p.clamp(0.0, 1.0),
        }
    }

    /// Exact posterior over the quadrants after conditioning on `band`.
    ///
    /// All supported priors make `a / (a + b)` independent of
    /// `(a + b, c, d)`, so only the band mean of `a / (a + b)` moves.
    pub fn exact_posterior(&self, band: &MessageBand) -> Result<FiniteDistribution> {
        match self {
            Self::UniformSimplex | Self::ConditionalParamUniform => {
                Ok(exact_posterior_quadrants(band))
            }
            _ if self.is_uniform_simplex() => Ok(exact_posterior_quadrants(band)),
            Self::Dirichlet([a1, a2, a3, a4]) => {
                let total = a1 + a2 + a3 + a4;
                let red = (a1 + a2) / total;
                let m = truncated_beta_mean(*a1, *a2, band.lo(), band.hi())?;
                FiniteDistribution::from_weights(
                    quadrant_space(),
                    vec![m * red, (1.0 - m) * red, a3 / total, a4 / total],
                )
            }
        }
    }
}

fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// `E[X | lo ≤ X ≤ hi]` for `X ~ Beta(a, b)`.
fn truncated_beta_mean(a: f64, b: f64, lo: f64, hi: f64) -> Result<f64> {
    let mass = beta_cdf(hi, a, b) - beta_cdf(lo, a, b);
    if !(mass > 0.0) {
        return Err(Error::InvalidBand(format!("band [{lo}, {hi}] has no prior mass")));
    }
    let first_moment = a / (a + b) * (beta_cdf(hi, a + 1.0, b) - beta_cdf(lo, a + 1.0, b));
    Ok((first_moment / mass).clamp(lo, hi))
}
