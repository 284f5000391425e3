//! Finite distributions, events, and the two classical update rules.
//!
//! Every value here is immutable once built; the update rules are pure
//! functions returning fresh distributions. Outcome order is part of the
//! space and is preserved by every operation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a valid distribution.
pub const PROB_TOL: f64 = 1e-12;

/// Ordered set of distinct outcome labels.
#[derive(Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    labels: Arc<[String]>,
}

impl OutcomeSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels: labels.into() })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn same_as(&self, other: &OutcomeSpace) -> bool {
        Arc::ptr_eq(&self.labels, &other.labels) || self.labels == other.labels
    }

    fn ensure_same(&self, other: &OutcomeSpace) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

impl fmt::Debug for OutcomeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// A subset of an outcome space.
#[derive(Clone, PartialEq, Eq)]
pub struct Event {
    space: OutcomeSpace,
    mask: Vec<bool>,
}

impl Event {
    pub fn from_labels<I, S>(space: &OutcomeSpace, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut mask = vec![false; space.len()];
        for label in labels {
            mask[space.index_of(label.as_ref())?] = true;
        }
        Ok(Self { space: space.clone(), mask })
    }

    pub fn from_mask(space: &OutcomeSpace, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: mask.len() });
        }
        Ok(Self { space: space.clone(), mask })
    }

    pub fn empty(space: &OutcomeSpace) -> Self {
        Self { space: space.clone(), mask: vec![false; space.len()] }
    }

    pub fn full(space: &OutcomeSpace) -> Self {
        Self { space: space.clone(), mask: vec![true; space.len()] }
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn labels(&self) -> Vec<&str> {
        self.space
            .labels()
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(l, _)| l.as_str())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn complement(&self) -> Event {
        Event { space: self.space.clone(), mask: self.mask.iter().map(|m| !m).collect() }
    }

    pub fn intersect(&self, other: &Event) -> Result<Event> {
        self.space.ensure_same(&other.space)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Ok(Event { space: self.space.clone(), mask })
    }

    pub fn union(&self, other: &Event) -> Result<Event> {
        self.space.ensure_same(&other.space)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Ok(Event { space: self.space.clone(), mask })
    }

    /// Indicator vector aligned with the space.
    pub fn indicator(&self) -> Vec<f64> {
        self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.labels()).finish()
    }
}

/// Pairwise disjoint events covering the whole space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Event>,
}

impl Partition {
    pub fn new(space: &OutcomeSpace, cells: Vec<Event>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::BadPartition("no cells".into()));
        }
        let mut owner: Vec<Option<usize>> = vec![None; space.len()];
        for (ci, cell) in cells.iter().enumerate() {
            space.ensure_same(cell.space())?;
            for (i, &m) in cell.mask().iter().enumerate() {
                if !m {
                    continue;
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::BadPartition(format!(
                        "outcome `{}` lies in cells {prev} and {ci}",
                        space.labels()[i]
                    )));
                }
                owner[i] = Some(ci);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::BadPartition(format!(
                "outcome `{}` is not covered",
                space.labels()[i]
            )));
        }
        Ok(Self { cells })
    }

    pub fn from_labels<S: AsRef<str>>(space: &OutcomeSpace, cells: &[Vec<S>]) -> Result<Self> {
        let cells = cells
            .iter()
            .map(|c| Event::from_labels(space, c.iter().map(AsRef::as_ref)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, cells)
    }

    pub fn cells(&self) -> &[Event] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Probabilities over a labeled finite outcome space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct FiniteDistribution {
    space: OutcomeSpace,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for FiniteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        FiniteDistribution::new(OutcomeSpace::new(raw.labels)?, raw.probs)
    }
}

impl From<FiniteDistribution> for RawDistribution {
    fn from(d: FiniteDistribution) -> Self {
        RawDistribution { labels: d.space.labels().to_vec(), probs: d.probs }
    }
}

impl FiniteDistribution {
    /// Validates nonnegativity and that the weights sum to 1 within [`PROB_TOL`].
    pub fn new(space: OutcomeSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: probs.len() });
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { space, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(space: OutcomeSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { space, probs })
    }

    pub fn uniform(space: OutcomeSpace) -> Self {
        let n = space.len();
        Self { space, probs: vec![1.0 / n as f64; n] }
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, label: &str) -> Result<f64> {
        Ok(self.probs[self.space.index_of(label)?])
    }

    pub fn support(&self) -> Event {
        Event { space: self.space.clone(), mask: self.probs.iter().map(|&p| p > 0.0).collect() }
    }

    /// Largest per-outcome absolute difference.
    pub fn max_abs_diff(&self, other: &FiniteDistribution) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Merges outcomes into coarser labeled groups, e.g. `{R1, R2, B}`.
    pub fn coarsen<S: AsRef<str>>(&self, groups: &[(S, Vec<S>)]) -> Result<FiniteDistribution> {
        let space = OutcomeSpace::new(groups.iter().map(|(name, _)| name.as_ref().to_string()))?;
        let cells = groups
            .iter()
            .map(|(_, members)| Event::from_labels(&self.space, members.iter().map(AsRef::as_ref)))
            .collect::<Result<Vec<_>>>()?;
        let partition = Partition::new(&self.space, cells)?;
        let probs = partition
            .cells()
            .iter()
            .map(|cell| event_probability(self, cell))
            .collect::<Result<Vec<_>>>()?;
        FiniteDistribution::new(space, probs)
    }
}

impl fmt::Debug for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.space.labels().iter().zip(&self.probs)).finish()
    }
}

pub fn event_probability(p: &FiniteDistribution, event: &Event) -> Result<f64> {
    p.space.ensure_same(event.space())?;
    Ok(p.probs.iter().zip(event.mask()).filter(|(_, &m)| m).map(|(x, _)| x).sum())
}

/// `p(A | B)`; fails with [`Error::ZeroConditioningEvent`] when `p(B) = 0`.
pub fn conditional_probability(p: &FiniteDistribution, a: &Event, b: &Event) -> Result<f64> {
    let pb = event_probability(p, b)?;
    if pb <= 0.0 {
        return Err(Error::ZeroConditioningEvent);
    }
    Ok(event_probability(p, &a.intersect(b)?)? / pb)
}

/// Strict conditioning on an event of positive probability.
pub fn condition(p: &FiniteDistribution, event: &Event) -> Result<FiniteDistribution> {
    let pt = event_probability(p, event)?;
    if pt <= 0.0 {
        return Err(Error::ZeroConditioningEvent);
    }
    let probs = p
        .probs
        .iter()
        .zip(event.mask())
        .map(|(&x, &m)| if m { x / pt } else { 0.0 })
        .collect();
    Ok(FiniteDistribution { space: p.space.clone(), probs })
}

/// Jeffrey's rule: put mass `weights[i]` on cell `i`, keeping the
/// within-cell proportions of `p`.
///
/// Cells with zero new weight receive zero mass even when their prior mass
/// is zero as well.
pub fn jeffrey_update(
    p: &FiniteDistribution,
    partition: &Partition,
    weights: &[f64],
) -> Result<FiniteDistribution> {
    if weights.len() != partition.len() {
        return Err(Error::LengthMismatch { expected: partition.len(), got: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDistribution(format!("cell weight {w} is not a probability")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("cell weights sum to {total}")));
    }
    let mut probs = vec![0.0; p.probs.len()];
    for (i, (cell, &w)) in partition.cells().iter().zip(weights).enumerate() {
        let mass = event_probability(p, cell)?;
        if w == 0.0 {
            continue;
        }
        if mass <= 0.0 {
            return Err(Error::InfeasibleWeight { cell: i });
        }
        for (j, &m) in cell.mask().iter().enumerate() {
            if m {
                probs[j] = w * p.probs[j] / mass;
            }
        }
    }
    Ok(FiniteDistribution { space: p.space.clone(), probs })
}

/// `KL(q || p) = sum q ln(q / p)` with `0 ln 0 = 0`.
///
/// Returns [`Error::NotAbsolutelyContinuous`] rather than `+inf` when `q`
/// puts mass where `p` has none.
pub fn kl_divergence(q: &FiniteDistribution, p: &FiniteDistribution) -> Result<f64> {
    q.space.ensure_same(&p.space)?;
    let mut kl = 0.0;
    for (&qx, &px) in q.probs.iter().zip(&p.probs) {
        if qx == 0.0 {
            continue;
        }
        if px == 0.0 {
            return Err(Error::NotAbsolutelyContinuous);
        }
        kl += qx * (qx / px).ln();
    }
    // Rounding can leave a tiny negative value for q == p.
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jb() -> FiniteDistribution {
        FiniteDistribution::uniform(OutcomeSpace::new(["R1", "R2", "B1", "B2"]).unwrap())
    }

    fn ev(p: &FiniteDistribution, labels: &[&str]) -> Event {
        Event::from_labels(p.space(), labels).unwrap()
    }

    #[test]
    fn space_rejects_empty_and_duplicates() {
        assert_eq!(OutcomeSpace::new(Vec::<String>::new()), Err(Error::EmptySpace));
        assert_eq!(OutcomeSpace::new(["x", "y", "x"]), Err(Error::DuplicateLabel("x".into())));
    }

    #[test]
    fn distribution_validation() {
        let s = OutcomeSpace::new(["x", "y"]).unwrap();
        assert!(FiniteDistribution::new(s.clone(), vec![0.5, 0.5]).is_ok());
        assert!(FiniteDistribution::new(s.clone(), vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(FiniteDistribution::new(s.clone(), vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(FiniteDistribution::new(s.clone(), vec![1.5, -0.5]).is_err());
        assert!(FiniteDistribution::new(s.clone(), vec![1.0]).is_err());
        assert!(FiniteDistribution::new(s, vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn event_probability_examples() {
        let p = jb();
        assert_eq!(event_probability(&p, &ev(&p, &["B1", "B2"])).unwrap(), 0.5);
        assert_eq!(event_probability(&p, &Event::empty(p.space())).unwrap(), 0.0);
        assert_eq!(event_probability(&p, &Event::full(p.space())).unwrap(), 1.0);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let p = jb();
        assert_eq!(
            Event::from_labels(p.space(), ["Q"]).unwrap_err(),
            Error::UnknownLabel("Q".into())
        );
    }

    #[test]
    fn conditional_probability_examples() {
        let p = jb();
        let r1 = ev(&p, &["R1"]);
        let red = ev(&p, &["R1", "R2"]);
        assert_eq!(conditional_probability(&p, &r1, &red).unwrap(), 0.5);

        let q = FiniteDistribution::new(p.space().clone(), vec![3.0 / 8.0, 1.0 / 8.0, 0.25, 0.25])
            .unwrap();
        assert_eq!(conditional_probability(&q, &r1, &red).unwrap(), 0.75);

        let z = FiniteDistribution::new(p.space().clone(), vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(conditional_probability(&z, &r1, &red), Err(Error::ZeroConditioningEvent));
    }

    #[test]
    fn condition_on_not_r2() {
        let p = jb();
        let post = condition(&p, &ev(&p, &["R1", "B1", "B2"])).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(post.probs(), &[third, 0.0, third, third]);
        let blue = event_probability(&post, &ev(&p, &["B1", "B2"])).unwrap();
        assert!((blue - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn condition_on_full_space_is_identity() {
        let p = jb();
        assert_eq!(condition(&p, &Event::full(p.space())).unwrap(), p);
    }

    #[test]
    fn condition_on_null_event() {
        let s = OutcomeSpace::new(["x", "y"]).unwrap();
        let p = FiniteDistribution::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let y = Event::from_labels(&s, ["y"]).unwrap();
        assert_eq!(condition(&p, &y), Err(Error::ZeroConditioningEvent));
    }

    #[test]
    fn jeffrey_intuitive_answer() {
        let p = jb();
        let part = Partition::from_labels(p.space(), &[vec!["R1"], vec!["R2"], vec!["B1", "B2"]])
            .unwrap();
        let post = jeffrey_update(&p, &part, &[3.0 / 8.0, 1.0 / 8.0, 0.5]).unwrap();
        assert_eq!(post.probs(), &[0.375, 0.125, 0.25, 0.25]);
    }

    #[test]
    fn jeffrey_degenerate_cases() {
        let p = jb();
        let part = Partition::from_labels(p.space(), &[vec!["R1"], vec!["R2"], vec!["B1", "B2"]])
            .unwrap();
        assert_eq!(jeffrey_update(&p, &part, &[0.25, 0.25, 0.5]).unwrap(), p);
        let point = jeffrey_update(&p, &part, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(point, condition(&p, &ev(&p, &["R1"])).unwrap());
    }

    #[test]
    fn jeffrey_errors() {
        let s = OutcomeSpace::new(["x", "y", "z"]).unwrap();
        let p = FiniteDistribution::new(s.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        let part = Partition::from_labels(&s, &[vec!["x", "y"], vec!["z"]]).unwrap();
        assert_eq!(jeffrey_update(&p, &part, &[0.5, 0.5]), Err(Error::InfeasibleWeight { cell: 1 }));
        // zero weight on a null cell is fine
        assert_eq!(jeffrey_update(&p, &part, &[1.0, 0.0]).unwrap(), p);

        let overlap = vec![
            Event::from_labels(&s, ["x", "y"]).unwrap(),
            Event::from_labels(&s, ["y", "z"]).unwrap(),
        ];
        assert!(matches!(Partition::new(&s, overlap), Err(Error::BadPartition(_))));
        let gap = vec![Event::from_labels(&s, ["x"]).unwrap()];
        assert!(matches!(Partition::new(&s, gap), Err(Error::BadPartition(_))));
    }

    #[test]
    fn kl_examples() {
        let s = OutcomeSpace::new(["x", "y"]).unwrap();
        let q = FiniteDistribution::new(s.clone(), vec![0.5, 0.5]).unwrap();
        let p = FiniteDistribution::new(s.clone(), vec![0.25, 0.75]).unwrap();
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        // 0.5 ln 2 + 0.5 ln(2/3)
        let expected = 0.143_841_036_225_890_1;
        assert!((kl_divergence(&q, &p).unwrap() - expected).abs() < 1e-15);

        let a = FiniteDistribution::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let b = FiniteDistribution::new(s, vec![0.0, 1.0]).unwrap();
        assert_eq!(kl_divergence(&a, &b), Err(Error::NotAbsolutelyContinuous));
        assert_eq!(kl_divergence(&a, &q).unwrap(), 2f64.ln());
    }

    #[test]
    fn coarsen_to_three_cells() {
        let p = jb();
        let c = p
            .coarsen(&[("R1", vec!["R1"]), ("R2", vec!["R2"]), ("B", vec!["B1", "B2"])])
            .unwrap();
        assert_eq!(c.probs(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let p = jb();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"labels":["R1","R2","B1","B2"],"probs":[0.25,0.25,0.25,0.25]}"#);
        let back: FiniteDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<FiniteDistribution>(
            r#"{"labels":["a","b"],"probs":[0.2,0.2]}"#
        )
        .is_err());
    }
}
