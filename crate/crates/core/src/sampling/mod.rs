//! Seeded sampling: counter-based random streams, deterministic parallel Monte
//! Carlo with compensated reductions, and the Doeblin / Nummelin machinery.

mod doeblin;

pub use doeblin::{
    a_r, doeblin_check, ks_critical_value_1pct, ks_two_sample, m_r, nummelin_sample, psi_r,
    DoeblinCert, DoeblinCheck, NummelinDraw, NummelinSampler, MIN_ACCEPTANCE,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{ModelSpec, SampleBuffers};

/// A ChaCha8 keystream selected by `(seed, stream_id)`.
///
/// ChaCha is counter-based: the stream id is the cipher nonce, so streams are
/// independent and reproducible on every platform without jump-ahead.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `|mean - reference| ≤ k · se`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.se
    }
}

/// How Monte Carlo samples map onto random streams and worker threads.
///
/// Sample `i` always draws from stream `stream_base + i`; workers own contiguous
/// blocks of samples and their partial sums are combined in block order, so the
/// result is bit-identical for a fixed `(seed, workers)` and agrees to rounding
/// across worker counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub stream_base: u64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64, workers: usize) -> Self {
        McConfig {
            samples,
            seed,
            workers,
            stream_base: 0,
        }
    }

    /// Disjoint streams for grid point `tag`; pass the same tag everywhere for common random numbers.
    pub fn tagged(self, tag: u64) -> Self {
        McConfig {
            stream_base: tag << 40,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::arg("samples", "need at least 2 samples"));
        }
        if self.workers == 0 {
            return Err(Error::arg("workers", "need at least one worker"));
        }
        if self.samples as u64 >= 1 << 40 {
            return Err(Error::arg("samples", "at most 2^40 samples per grid point"));
        }
        Ok(())
    }
}

/// Runs `f` once per sample and averages each of its `width` outputs.
///
/// `init` builds per-worker scratch state; `f(state, rng, out)` fills `out` for one sample.
pub fn monte_carlo<S, I, F>(cfg: &McConfig, width: usize, init: I, f: F) -> Result<Vec<Estimate>>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &mut RngStream, &mut [f64]) + Sync,
{
    cfg.validate()?;
    let blocks = cfg.workers.min(cfg.samples);
    let per = cfg.samples / blocks;
    let extra = cfg.samples % blocks;
    let range = |b: usize| {
        let start = b * per + b.min(extra);
        start..start + per + usize::from(b < extra)
    };
    let run_block = |b: usize| {
        let mut state = init();
        let mut out = vec![0.0; width];
        let mut sums = vec![(CompensatedSum::default(), CompensatedSum::default()); width];
        for i in range(b) {
            let mut rng = RngStream::new(cfg.seed, cfg.stream_base + i as u64);
            out.iter_mut().for_each(|v| *v = 0.0);
            f(&mut state, &mut rng, &mut out);
            for (s, &v) in sums.iter_mut().zip(&out) {
                s.0.add(v);
                s.1.add(v * v);
            }
        }
        sums
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::arg("workers", e.to_string()))?;
    let partials: Vec<_> = pool.install(|| (0..blocks).into_par_iter().map(run_block).collect());
    let n = cfg.samples as f64;
    Ok((0..width)
        .map(|k| {
            let mut s = CompensatedSum::default();
            let mut s2 = CompensatedSum::default();
            for p in &partials {
                s.merge(&p[k].0);
                s2.merge(&p[k].1);
            }
            let mean = s.value() / n;
            let var = ((s2.value() - n * mean * mean) / (n - 1.0)).max(0.0);
            Estimate {
                mean,
                se: (var / n).sqrt(),
            }
        })
        .collect())
}

/// One draw of `S_n = n^{-1/2} Σ_k C_{n,k} Y_k`.
pub fn sample_sum<R: rand::Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Vec<f64> {
    model.sample_sum(rng)
}

/// `E[f(S_n)]` by Monte Carlo.
pub fn mc_expectation(
    f: impl Fn(&[f64]) -> f64 + Sync,
    model: &ModelSpec,
    cfg: &McConfig,
) -> Result<Estimate> {
    let d = model.d();
    let est = monte_carlo(
        cfg,
        1,
        || (SampleBuffers::new(model), vec![0.0; d]),
        |(buf, x), rng, out| {
            model.sample_sum_into(rng, buf, x);
            out[0] = f(x);
        },
    )?;
    Ok(est[0])
}
