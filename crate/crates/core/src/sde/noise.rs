use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{Schedule, TimeGrid};
use super::rng::{keyed_uniform, StreamSeed};
use crate::error::{Error, Result};

/// Brownian increments on a schedule, one per step with variance `Δ`.
///
/// Each step also carries a uniform variate, addressed by a key and the step
/// index, used to decide whether the path touched zero between two nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    schedule: Schedule,
    increments: Vec<f64>,
    bridge_key: u64,
}

/// Increments on a uniform grid from stream 0 of `seed`.
pub fn generate_noise(grid: &TimeGrid, seed: u64) -> NoisePath {
    let mut rng = StreamSeed::new(seed).rng(0);
    NoisePath::sample(&Schedule::uniform(*grid), &mut rng)
}

impl NoisePath {
    /// Draws the bridge key first, then the increments in step order.
    pub fn sample<R: Rng + ?Sized>(schedule: &Schedule, rng: &mut R) -> Self {
        let bridge_key = rng.next_u64();
        let mut increments = Vec::with_capacity(schedule.n_steps());
        for g in schedule.segments() {
            let sd = g.dt().sqrt();
            for _ in 0..g.n_steps() {
                let z: f64 = rng.sample(StandardNormal);
                increments.push(sd * z);
            }
        }
        Self {
            schedule: schedule.clone(),
            increments,
            bridge_key,
        }
    }

    pub fn from_increments(schedule: Schedule, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != schedule.n_steps() {
            return Err(Error::Grid(format!(
                "{} increments for {} steps",
                increments.len(),
                schedule.n_steps()
            )));
        }
        Ok(Self {
            schedule,
            increments,
            bridge_key: 0,
        })
    }

    pub fn with_bridge_key(mut self, key: u64) -> Self {
        self.bridge_key = key;
        self
    }

    pub fn bridge_key(&self) -> u64 {
        self.bridge_key
    }

    /// Uniform variate attached to step `k`.
    pub fn bridge_uniform(&self, k: usize) -> f64 {
        keyed_uniform(self.bridge_key, k as u64)
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// The same Brownian path observed on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Grid("coarsening factor must be positive".into()));
        }
        let mut segments = Vec::with_capacity(self.schedule.segments().len());
        for g in self.schedule.segments() {
            if g.n_steps() % factor != 0 {
                return Err(Error::Grid(format!(
                    "block with {} steps not divisible by {factor}",
                    g.n_steps()
                )));
            }
            segments.push(TimeGrid::new(g.t0(), g.t_end(), g.n_steps() / factor)?);
        }
        let increments = self
            .increments
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(Self {
            schedule: Schedule::new(segments)?,
            increments,
            bridge_key: self.bridge_key,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bits() {
        let g = TimeGrid::horizon(1.0, 1000).unwrap();
        let a = generate_noise(&g, 7);
        let b = generate_noise(&g, 7);
        assert_eq!(a.increments(), b.increments());
        assert_ne!(a.increments(), generate_noise(&g, 8).increments());
    }

    #[test]
    fn increments_have_variance_dt() {
        // 10^5 increments with Δ = 1e-3: mean within 4σ of 0, variance within 5%.
        let n = 100_000;
        let dt = 1e-3;
        let g = TimeGrid::horizon(n as f64 * dt, n).unwrap();
        let w = generate_noise(&g, 2024);
        assert_eq!(w.increments().len(), n);
        let mean = w.increments().iter().sum::<f64>() / n as f64;
        let var = w.increments().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt(), "mean {mean}");
        assert!((var / dt - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn coarsening_preserves_the_path() {
        let g = TimeGrid::horizon(1.0, 64).unwrap();
        let w = generate_noise(&g, 1);
        let c = w.coarsen(4).unwrap();
        assert_eq!(c.increments().len(), 16);
        let total: f64 = w.increments().iter().sum();
        let total_c: f64 = c.increments().iter().sum();
        assert!((total - total_c).abs() < 1e-12);
        assert!(w.coarsen(3).is_err());
    }
}
