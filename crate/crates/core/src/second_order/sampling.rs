//! Seeded, chunked sampling from second-order priors.
//!
//! A run of `samples` draws is split into `chunks` contiguous chunks. Chunk
//! `i` draws from a ChaCha8 generator seeded with `seed` and switched to
//! stream `i`, so every chunk is an independent, reproducible stream and the
//! concatenated sample sequence depends only on `(seed, chunks, samples)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HQBelief, SecondOrderPrior};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub chunks: u32,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64, chunks: u32) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if chunks == 0 {
            return Err(Error::InvalidConfig("chunks must be at least 1".into()));
        }
        Ok(Self { samples, seed, chunks })
    }

    /// Draws in chunk `i`; the first `samples % chunks` chunks take one extra.
    pub fn chunk_len(&self, i: u32) -> u64 {
        let chunks = u64::from(self.chunks);
        self.samples / chunks + u64::from(u64::from(i) < self.samples % chunks)
    }

    pub fn chunk_rng(&self, i: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(i));
        rng
    }
}

enum Sampler {
    Uniform,
    Dirichlet([Gamma<f64>; 4]),
    Conditional,
}

impl Sampler {
    fn new(prior: &SecondOrderPrior) -> Self {
        match prior {
            SecondOrderPrior::UniformSimplex => Sampler::Uniform,
            SecondOrderPrior::Dirichlet(alpha) => Sampler::Dirichlet(
                alpha.map(|a| Gamma::new(a, 1.0).expect("dirichlet parameters are positive")),
            ),
            SecondOrderPrior::ConditionalParamUniform => Sampler::Conditional,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> HQBelief {
        match self {
            Sampler::Uniform => {
                let e: [f64; 4] = std::array::from_fn(|_| Exp1.sample(rng));
                normalize(e)
            }
            Sampler::Dirichlet(gammas) => loop {
                let g: [f64; 4] = std::array::from_fn(|i| gammas[i].sample(rng));
                // All four can underflow for very small shapes.
                if g.iter().sum::<f64>() > 0.0 {
                    break normalize(g);
                }
            },
            Sampler::Conditional => {
                let (r, x, y): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
                HQBelief { a: r * x, b: r * (1.0 - x), c: (1.0 - r) * y }
            }
        }
    }
}

fn normalize(w: [f64; 4]) -> HQBelief {
    let total: f64 = w.iter().sum();
    HQBelief { a: w[0] / total, b: w[1] / total, c: w[2] / total }
}

/// The draws of chunk `i`.
pub fn sample_chunk(
    prior: &SecondOrderPrior,
    cfg: &McConfig,
    i: u32,
) -> impl Iterator<Item = HQBelief> + use<> {
    let sampler = Sampler::new(prior);
    let mut rng = cfg.chunk_rng(i);
    (0..cfg.chunk_len(i)).map(move |_| sampler.draw(&mut rng))
}

/// All draws of a run, chunk by chunk.
pub fn sample_prior(
    prior: &SecondOrderPrior,
    cfg: &McConfig,
) -> impl Iterator<Item = HQBelief> + use<> {
    let (prior, cfg) = (*prior, *cfg);
    (0..cfg.chunks).flat_map(move |i| sample_chunk(&prior, &cfg, i))
}

/// Runs `f` on every chunk's stream in parallel and returns the results in
/// chunk order, so any order-sensitive merge downstream is deterministic.
pub(crate) fn map_chunks<T, F>(prior: &SecondOrderPrior, cfg: &McConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut dyn Iterator<Item = HQBelief>) -> T + Sync,
{
    (0..cfg.chunks)
        .into_par_iter()
        .map(|i| f(&mut sample_chunk(prior, cfg, i)))
        .collect()
}
