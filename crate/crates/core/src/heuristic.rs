//! Promising-region biased sampling.
//!
//! With probability `1 - bias` a draw is uniform over the whole map; otherwise it picks
//! a promising cell uniformly and jitters uniformly inside it. An empty region always
//! falls back to uniform sampling.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid_map::State;
use crate::region_graph::RegionMask;
use crate::scalar::Scalar;

#[derive(Debug)]
pub struct HeuristicSampler {
    width: usize,
    height: usize,
    promising_cells: Vec<usize>,
    bias: f64,
    fallbacks: AtomicU64,
}

impl Clone for HeuristicSampler {
    fn clone(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            promising_cells: self.promising_cells.clone(),
            bias: self.bias,
            fallbacks: AtomicU64::new(self.fallbacks()),
        }
    }
}

impl HeuristicSampler {
    /// Plain uniform sampling over a `width x height` map.
    pub fn uniform(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            promising_cells: Vec::new(),
            bias: 0.0,
            fallbacks: AtomicU64::new(0),
        }
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Row-major flat indices of the promising cells.
    pub fn promising_cells(&self) -> &[usize] {
        &self.promising_cells
    }

    /// Heuristic draws that found an empty region and fell back to uniform sampling.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> State<T> {
        // A coin is only tossed when both branches are possible, so a zero-bias
        // sampler consumes exactly the random stream of the uniform sampler.
        let heuristic = if self.bias <= 0.0 {
            false
        } else if self.bias >= 1.0 {
            true
        } else {
            rng.gen::<f64>() <= self.bias
        };
        if heuristic {
            if self.promising_cells.is_empty() {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
            } else {
                return self.sample_region(rng);
            }
        }
        self.sample_uniform(rng)
    }

    pub fn sample_uniform<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> State<T> {
        let (w, h) = (
            T::from_usize_lossy(self.width),
            T::from_usize_lossy(self.height),
        );
        let x = T::lit(rng.gen::<f64>()) * w;
        let y = T::lit(rng.gen::<f64>()) * h;
        State::new(x.clamp_below(w), y.clamp_below(h))
    }

    fn sample_region<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> State<T> {
        let cell = self.promising_cells[rng.gen_range(0..self.promising_cells.len())];
        let col = T::from_usize_lossy(cell % self.width);
        let row = T::from_usize_lossy(cell / self.width);
        let x = col + T::lit(rng.gen::<f64>());
        let y = row + T::lit(rng.gen::<f64>());
        State::new(x.clamp_below(col + T::one()), y.clamp_below(row + T::one()))
    }
}

/// Builds a sampler over the promising cells of `region` with heuristic bias `bias`.
pub fn build_sampler(region: &RegionMask, bias: f64) -> Result<HeuristicSampler> {
    if !(0.0..=1.0).contains(&bias) {
        return Err(Error::InvalidBias(bias));
    }
    Ok(HeuristicSampler {
        width: region.width(),
        height: region.height(),
        promising_cells: region.promising_indices(),
        bias,
        fallbacks: AtomicU64::new(0),
    })
}
