//! Seeded, optionally multi-worker Monte Carlo driver and its report type.
//!
//! Worker `w` draws from stream `w` of the generator seeded with `seed` and
//! handles a fixed share of the samples (the first `N mod W` workers take one
//! extra). Worker moments are pooled in worker order, so results depend only
//! on `(seed, samples, workers)`.

use crate::error::{Error, Result};
use crate::sampler::{worker_rng, SampleRng, SamplerConfig};
use crate::stats::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub max_walk_steps: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        McConfig { samples, seed, workers: 1, max_walk_steps: SamplerConfig::default().max_walk_steps }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig { seed: self.seed, max_walk_steps: self.max_walk_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sample mean with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub shape: Shape,
    /// Row-major values.
    pub values: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl EstimateReport {
    pub(crate) fn from_moments(shape: Shape, moments: &Moments, cfg: &McConfig) -> Self {
        EstimateReport {
            shape,
            values: moments.mean().to_vec(),
            std_error: moments.std_error(),
            samples: moments.count(),
            seed: cfg.seed,
            workers: cfg.workers,
        }
    }

    pub fn scalar(&self) -> f64 {
        self.values[0]
    }

    pub fn scalar_error(&self) -> f64 {
        self.std_error[0]
    }

    /// Entry `(k, l)` of a matrix-shaped report as `(value, std_error)`.
    pub fn entry(&self, k: usize, l: usize) -> (f64, f64) {
        let cols = match self.shape {
            Shape::Matrix(_, c) => c,
            _ => panic!("entry() on a non-matrix report"),
        };
        (self.values[k * cols + l], self.std_error[k * cols + l])
    }

    /// A scalar report holding component `i` of this one.
    pub fn component(&self, i: usize) -> EstimateReport {
        EstimateReport {
            shape: Shape::Scalar,
            values: vec![self.values[i]],
            std_error: vec![self.std_error[i]],
            ..self.clone()
        }
    }
}

/// Runs `draw` `cfg.samples` times and returns the pooled moments. `draw`
/// overwrites its buffer with one sample.
pub(crate) fn run<F>(cfg: &McConfig, dim: usize, draw: F) -> Result<Moments>
where
    F: Fn(&mut SampleRng, &mut [f64]) -> Result<()> + Sync,
{
    if cfg.samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if cfg.workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    let workers = cfg.workers;
    let share = |w: usize| cfg.samples / workers as u64 + u64::from((w as u64) < cfg.samples % workers as u64);
    let work = |w: usize| -> Result<Moments> {
        let mut rng = worker_rng(cfg.seed, w);
        let mut moments = Moments::new(dim);
        let mut buf = vec![0.0; dim];
        for _ in 0..share(w) {
            draw(&mut rng, &mut buf)?;
            moments.push(&buf);
        }
        Ok(moments)
    };
    let parts: Vec<Result<Moments>> = if workers == 1 {
        vec![work(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || work(w))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let mut total = Moments::new(dim);
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}
