//! Monte Carlo driver: runs `n` keyed samples on a worker pool and reduces
//! them in sample-index order, so results do not depend on the worker count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        iter.into_iter().for_each(|x| acc.update(x));
        acc
    }
}

/// `acc` after one more observation.
pub fn welford_update(mut acc: Welford, x: f64) -> Welford {
    acc.update(x);
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub wall_time: f64,
}

impl EstimateResult {
    pub fn from_welford(acc: &Welford, z: f64, wall_time: f64) -> Self {
        let variance = acc.variance();
        let stderr = (variance / acc.count() as f64).sqrt();
        Self {
            mean: acc.mean(),
            variance,
            stderr,
            ci_low: acc.mean() - z * stderr,
            ci_high: acc.mean() + z * stderr,
            n: acc.count(),
            wall_time,
        }
    }

    /// `|mean − target| ≤ k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub n: u64,
    pub root_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Normal quantile for the confidence interval.
    pub z: f64,
}

impl RunOptions {
    pub fn new(n: u64, root_seed: u64) -> Self {
        Self {
            n,
            root_seed,
            workers: 0,
            z: 1.96,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Runs `sampler` on the keys `root(seed).child(i)`, `i < n`.
pub fn run_estimator<F>(sampler: F, opts: &RunOptions) -> Result<EstimateResult>
where
    F: Fn(&StreamKey) -> Result<f64> + Sync,
{
    Ok(run_collect(sampler, opts)?.0)
}

/// As [`run_estimator`], also returning every sample in index order.
pub fn run_collect<F>(sampler: F, opts: &RunOptions) -> Result<(EstimateResult, Vec<f64>)>
where
    F: Fn(&StreamKey) -> Result<f64> + Sync,
{
    if opts.n < 2 {
        return Err(Error::Config(format!("at least 2 samples are required, got {}", opts.n)));
    }
    let started = Instant::now();
    let root = StreamKey::root(opts.root_seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let samples: Vec<Result<f64>> = pool.install(|| {
        (0..opts.n)
            .into_par_iter()
            .map(|i| sampler(&root.child(i)))
            .collect()
    });
    let mut values = Vec::with_capacity(samples.len());
    for (index, s) in samples.into_iter().enumerate() {
        let index = index as u64;
        match s {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Sample {
                    index,
                    source: Box::new(Error::Config(format!("non-finite sample value {v}"))),
                })
            }
            Err(e) => return Err(Error::Sample { index, source: Box::new(e) }),
        }
    }
    let acc: Welford = values.iter().copied().collect();
    let result = EstimateResult::from_welford(&acc, opts.z, started.elapsed().as_secs_f64());
    Ok((result, values))
}
