//! Monte Carlo estimators over second-order samples.

use serde::{Deserialize, Serialize};

use super::sampling::{map_chunks, McConfig};
use super::{blue_prob, cond_red, HQBelief, MessageBand, SecondOrderPrior, QUADRANTS};
use crate::belief::Event;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_accepted)`.
    pub stderr: f64,
    pub n_total: u64,
    /// Draws that fell inside the conditioning band.
    pub n_accepted: u64,
}

impl McEstimate {
    /// `|mean - target| / stderr`; infinite when the estimate has no spread
    /// but misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// Welford running moments; chunk results merge with Chan's formula.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self, n_total: u64) -> McEstimate {
        let stderr = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean: self.mean, stderr, n_total, n_accepted: self.n }
    }
}

/// Judy's posterior expectations of HQ's quadrant probabilities given a
/// band, plus the Blue total `B1 + B2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEstimate {
    #[serde(rename = "R1")]
    pub r1: McEstimate,
    #[serde(rename = "R2")]
    pub r2: McEstimate,
    #[serde(rename = "B1")]
    pub b1: McEstimate,
    #[serde(rename = "B2")]
    pub b2: McEstimate,
    #[serde(rename = "Blue")]
    pub blue: McEstimate,
}

impl PosteriorEstimate {
    /// Estimates in `R1, R2, B1, B2` order.
    pub fn quadrants(&self) -> [(&'static str, &McEstimate); 4] {
        [
            (QUADRANTS[0], &self.r1),
            (QUADRANTS[1], &self.r2),
            (QUADRANTS[2], &self.b1),
            (QUADRANTS[3], &self.b2),
        ]
    }

    pub fn n_accepted(&self) -> u64 {
        self.blue.n_accepted
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct PosteriorAccumulator {
    n_total: u64,
    moments: [Moments; 5],
}

impl PosteriorAccumulator {
    fn push(&mut self, h: &HQBelief, band: &MessageBand) {
        self.n_total += 1;
        if !band.accepts(h) {
            return;
        }
        let [a, b, c, d] = h.probs();
        for (m, x) in self.moments.iter_mut().zip([a, b, c, d, blue_prob(h)]) {
            m.push(x);
        }
    }

    fn merge(&mut self, other: &PosteriorAccumulator) {
        self.n_total += other.n_total;
        for (m, o) in self.moments.iter_mut().zip(&other.moments) {
            m.merge(o);
        }
    }

    fn finish(&self) -> Result<PosteriorEstimate> {
        if self.moments[0].n == 0 {
            return Err(Error::NoAcceptedSamples { n_total: self.n_total });
        }
        let [r1, r2, b1, b2, blue] = self.moments.map(|m| m.estimate(self.n_total));
        Ok(PosteriorEstimate { r1, r2, b1, b2, blue })
    }
}

/// Rejection conditioning of arbitrary second-order draws on `band`.
pub fn estimate_posterior<I>(beliefs: I, band: &MessageBand) -> Result<PosteriorEstimate>
where
    I: IntoIterator<Item = HQBelief>,
{
    let mut acc = PosteriorAccumulator::default();
    for h in beliefs {
        acc.push(&h, band);
    }
    acc.finish()
}

/// Rejection conditioning of `prior` on `band`, chunk-parallel. Results are
/// bit-identical to a sequential pass over the same `(seed, chunks)`.
pub fn mc_posterior_quadrants(
    prior: &SecondOrderPrior,
    band: &MessageBand,
    cfg: &McConfig,
) -> Result<PosteriorEstimate> {
    let chunks = map_chunks(prior, cfg, |draws| {
        let mut acc = PosteriorAccumulator::default();
        for h in draws {
            acc.push(&h, band);
        }
        acc
    });
    let mut total = PosteriorAccumulator::default();
    for c in &chunks {
        total.merge(c);
    }
    total.finish()
}

/// Trust: Judy's probability of `event` is the weighted mean of HQ's.
pub fn trust_expectation(weighted: &[(HQBelief, f64)], event: &Event) -> Result<f64> {
    let mut total_w = 0.0;
    let mut acc = 0.0;
    for (h, w) in weighted {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidInput(format!("weight {w} must be nonnegative")));
        }
        total_w += w;
        acc += w * h.prob_of(event)?;
    }
    if !(total_w > 0.0) {
        return Err(Error::InvalidInput("weights have zero total".into()));
    }
    Ok(acc / total_w)
}

/// Unweighted Trust expectation with a standard error.
pub fn trust_estimate<I>(beliefs: I, event: &Event) -> Result<McEstimate>
where
    I: IntoIterator<Item = HQBelief>,
{
    let mut m = Moments::default();
    for h in beliefs {
        m.push(h.prob_of(event)?);
    }
    if m.n == 0 {
        return Err(Error::InvalidInput("no samples".into()));
    }
    Ok(m.estimate(m.n))
}

/// Joint-vs-product CDF histogram on the lattice `k / (grid - 1)`.
#[derive(Clone, Debug)]
struct LatticeCounts {
    lattice: Vec<f64>,
    /// counts[i][j]: samples whose first lattice point strictly above x is i
    /// and strictly above p is j (index `grid` when none is).
    counts: Vec<Vec<u64>>,
}

impl LatticeCounts {
    fn new(grid: usize) -> Self {
        let lattice = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
        Self { lattice, counts: vec![vec![0; grid + 1]; grid + 1] }
    }

    fn push(&mut self, x: f64, p: f64) {
        let i = self.lattice.partition_point(|&t| t <= x);
        let j = self.lattice.partition_point(|&t| t <= p);
        self.counts[i][j] += 1;
    }

    fn merge(&mut self, other: &LatticeCounts) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    fn max_deviation(&self) -> f64 {
        let g = self.lattice.len();
        // below[k][l] = #{x < t_k, p < t_l}; row/column g holds the marginals.
        let mut below = vec![vec![0u64; g + 1]; g + 1];
        for k in 0..=g {
            for l in 0..=g {
                let mut v = self.counts[k][l];
                if k > 0 {
                    v += below[k - 1][l];
                }
                if l > 0 {
                    v += below[k][l - 1];
                }
                if k > 0 && l > 0 {
                    v -= below[k - 1][l - 1];
                }
                below[k][l] = v;
            }
        }
        let n = below[g][g];
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        let mut worst = 0.0_f64;
        for k in 0..g {
            for l in 0..g {
                let joint = below[k][l] as f64 / n;
                let fx = below[k][g] as f64 / n;
                let fp = below[g][l] as f64 / n;
                worst = worst.max((joint - fx * fp).abs());
            }
        }
        worst
    }
}

/// Max absolute gap between the empirical joint CDF of `(x, p)` pairs and the
/// product of the empirical marginals, over a `grid × grid` lattice on
/// `[0, 1]²`. Constant marginals are fine: nothing is divided by a spread.
pub fn independence_deviation<I>(pairs: I, grid: usize) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    if grid < 2 {
        return Err(Error::InvalidGrid("independence grid needs at least 2 points".into()));
    }
    let mut counts = LatticeCounts::new(grid);
    for (x, p) in pairs {
        counts.push(x, p);
    }
    Ok(counts.max_deviation())
}

/// [`independence_deviation`] for `(cond_red, blue_prob)` under `prior`.
/// Draws with `a + b = 0` have no `cond_red` and are skipped.
pub fn independence_check(prior: &SecondOrderPrior, cfg: &McConfig, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::InvalidGrid("independence grid needs at least 2 points".into()));
    }
    let chunks = map_chunks(prior, cfg, |draws| {
        let mut counts = LatticeCounts::new(grid);
        for h in draws {
            if let Ok(x) = cond_red(&h) {
                counts.push(x, blue_prob(&h));
            }
        }
        counts
    });
    let mut total = LatticeCounts::new(grid);
    for c in &chunks {
        total.merge(c);
    }
    Ok(total.max_deviation())
}
