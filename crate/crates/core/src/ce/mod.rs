//! Minimum cross-entropy update (I-projection) under affine constraints.
//!
//! The posterior is the distribution closest to the prior in KL divergence
//! among those satisfying every constraint. Conditional-probability
//! constraints such as `q(R1 | R) = 3/4` are compiled to the linear form
//! `q(A ∩ B) - t q(B) = 0` and solved jointly with any plain linear ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::{Event, OutcomeSpace};
use crate::error::{Error, Result};

mod feasibility;
mod solver;

pub use solver::{ce_update, CeOptions, CeSolution};

/// `sum_x coeffs[x] q(x) = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    coeffs: Vec<f64>,
    rhs: f64,
}

impl LinearConstraint {
    pub fn new(space: &OutcomeSpace, coeffs: Vec<f64>, rhs: f64) -> Result<Self> {
        if coeffs.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: coeffs.len() });
        }
        if coeffs.iter().chain(Some(&rhs)).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConstraint("non-finite coefficient".into()));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidConstraint("all coefficients are zero".into()));
        }
        Ok(Self { coeffs, rhs })
    }

    /// `q(event) = mass`.
    pub fn event_mass(event: &Event, mass: f64) -> Result<Self> {
        Self::new(event.space(), event.indicator(), mass)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn evaluate(&self, probs: &[f64]) -> f64 {
        self.coeffs.iter().zip(probs).map(|(c, p)| c * p).sum()
    }
}

/// `q(A | B) = target`. `A` is stored already intersected with `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalConstraint {
    a: Event,
    b: Event,
    target: f64,
}

impl ConditionalConstraint {
    pub fn new(a: &Event, b: &Event, target: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::InvalidConstraint(format!("target {target} outside [0, 1]")));
        }
        if b.is_empty() {
            return Err(Error::InvalidConstraint("conditioning event is empty".into()));
        }
        Ok(Self { a: a.intersect(b)?, b: b.clone(), target })
    }

    pub fn a(&self) -> &Event {
        &self.a
    }

    pub fn b(&self) -> &Event {
        &self.b
    }

    pub fn target(&self) -> f64 {
        self.target
    }
}

/// Unfolds `q(A | B) = t` into `sum_x (1[x in A] - t 1[x in B]) q(x) = 0`.
///
/// The result can have all-zero coefficients (e.g. `A = B`, `t = 1`), in
/// which case every distribution satisfies it.
pub fn compile_conditional(c: &ConditionalConstraint) -> LinearConstraint {
    let coeffs = c
        .a
        .mask()
        .iter()
        .zip(c.b.mask())
        .map(|(&in_a, &in_b)| {
            let a = if in_a { 1.0 } else { 0.0 };
            let b = if in_b { c.target } else { 0.0 };
            a - b
        })
        .collect();
    LinearConstraint { coeffs, rhs: 0.0 }
}

/// Constraints over one outcome space. Conditional constraints come first
/// in [`ConstraintSet::compile`] and in the solver's multiplier vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    space: OutcomeSpace,
    conditional: Vec<ConditionalConstraint>,
    linear: Vec<LinearConstraint>,
}

impl ConstraintSet {
    pub fn new(space: &OutcomeSpace) -> Self {
        Self { space: space.clone(), conditional: Vec::new(), linear: Vec::new() }
    }

    pub fn with_conditional(mut self, c: ConditionalConstraint) -> Result<Self> {
        if c.b.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        self.conditional.push(c);
        Ok(self)
    }

    pub fn with_linear(mut self, c: LinearConstraint) -> Result<Self> {
        if c.coeffs.len() != self.space.len() {
            return Err(Error::SpaceMismatch);
        }
        self.linear.push(c);
        Ok(self)
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn conditional(&self) -> &[ConditionalConstraint] {
        &self.conditional
    }

    pub fn linear(&self) -> &[LinearConstraint] {
        &self.linear
    }

    pub fn len(&self) -> usize {
        self.conditional.len() + self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn compile(&self) -> Vec<LinearConstraint> {
        self.conditional.iter().map(compile_conditional).chain(self.linear.iter().cloned()).collect()
    }

    pub fn from_json(space: &OutcomeSpace, json: &str) -> Result<Self> {
        let spec: ConstraintSetSpec =
            serde_json::from_str(json).map_err(|e| Error::InvalidInput(e.to_string()))?;
        spec.resolve(space)
    }
}

/// Wire format: `{"conditional": [{"A": [...], "B": [...], "target": t}],
/// "linear": [{"coeffs": {label: c, ...}, "rhs": r}]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSetSpec {
    #[serde(default)]
    pub conditional: Vec<ConditionalSpec>,
    #[serde(default)]
    pub linear: Vec<LinearSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    /// Missing labels have coefficient zero.
    pub coeffs: BTreeMap<String, f64>,
    pub rhs: f64,
}

impl ConstraintSetSpec {
    pub fn resolve(&self, space: &OutcomeSpace) -> Result<ConstraintSet> {
        let mut set = ConstraintSet::new(space);
        for c in &self.conditional {
            let a = Event::from_labels(space, &c.a)?;
            let b = Event::from_labels(space, &c.b)?;
            set = set.with_conditional(ConditionalConstraint::new(&a, &b, c.target)?)?;
        }
        for l in &self.linear {
            let mut coeffs = vec![0.0; space.len()];
            for (label, &c) in &l.coeffs {
                coeffs[space.index_of(label)?] = c;
            }
            set = set.with_linear(LinearConstraint::new(space, coeffs, l.rhs)?)?;
        }
        Ok(set)
    }
}

/// Natural-log binary entropy with `H(0) = H(1) = 0`.
pub fn binary_entropy(c: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(c) + term(1.0 - c)
}

/// Posterior probability of Blue under the minimum cross-entropy update of
/// the Judy Benjamin prior `(1/4, 1/4, 1/2)` with `q(R1 | R) = target`.
///
/// Closed form `2k / (2k + 1)` with `k = exp(-H(target))`.
pub fn jb_ce_blue(target: f64) -> f64 {
    let k = (-binary_entropy(target)).exp();
    2.0 * k / (2.0 * k + 1.0)
}
