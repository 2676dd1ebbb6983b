//! Driving paths sampled onto grids: smooth named paths for convergence
//! studies and a seeded random-walk interpolation whose regularity sits
//! near 1/2, used as a negative control.
//!
//! The random walk is laid down once on a fine dyadic grid over the
//! requested span and linearly interpolated, so sampling the same driver
//! on nested grids yields consistent values at shared times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::increments::{Grid, Inc1};
use crate::scalar::Real;

/// A named driving path.
#[derive(Clone, Debug, PartialEq)]
pub enum Driver {
    /// x(t) = t.
    Identity,
    /// x(t) = (t, t^2).
    Parabola,
    /// x(t) = sin(a t).
    Sine { a: f64 },
    /// x(t) = (sin(a t), cos(b t)).
    Trig { a: f64, b: f64 },
    /// Piecewise-linear interpolation of a +-sqrt(dt) random walk on the
    /// dyadic grid of the given level over the sampled span.
    RandomWalk { seed: u64, level: u32, dim: usize },
}

impl Driver {
    pub fn dim(&self) -> usize {
        match self {
            Driver::Identity | Driver::Sine { .. } => 1,
            Driver::Parabola | Driver::Trig { .. } => 2,
            Driver::RandomWalk { dim, .. } => *dim,
        }
    }

    /// Sample the path at every grid time.
    pub fn sample<R: Real>(&self, grid: &Grid<R>) -> Result<Inc1<R>> {
        match self {
            Driver::Identity => Inc1::from_fn(grid.clone(), 1, |t| vec![t]),
            Driver::Parabola => Inc1::from_fn(grid.clone(), 2, |t| vec![t, t * t]),
            Driver::Sine { a } => {
                let a = R::from_f(*a);
                Inc1::from_fn(grid.clone(), 1, |t| vec![(a * t).sin()])
            }
            Driver::Trig { a, b } => {
                let a = R::from_f(*a);
                let b = R::from_f(*b);
                Inc1::from_fn(grid.clone(), 2, |t| vec![(a * t).sin(), (b * t).cos()])
            }
            Driver::RandomWalk { seed, level, dim } => {
                let walk = WalkTable::build(*seed, *level, *dim, grid.span().to_f());
                Inc1::from_fn(grid.clone(), *dim, |t| walk.at(t.to_f()))
            }
        }
    }
}

/// Dense walk values on the fine dyadic grid.
struct WalkTable {
    span: f64,
    /// (point, component), row-major
    values: Vec<Vec<f64>>,
}

impl WalkTable {
    fn build(seed: u64, level: u32, dim: usize, span: f64) -> Self {
        let n = 1usize << level;
        let dt = span / n as f64;
        let step = dt.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(n + 1);
        values.push(vec![0.0; dim]);
        for _ in 0..n {
            let last = values.last().unwrap().clone();
            let next: Vec<f64> = last
                .iter()
                .map(|&v| if rng.gen_bool(0.5) { v + step } else { v - step })
                .collect();
            values.push(next);
        }
        Self { span, values }
    }

    fn at<R: Real>(&self, t: f64) -> Vec<R> {
        let n = self.values.len() - 1;
        let pos = (t / self.span * n as f64).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        self.values[i]
            .iter()
            .zip(&self.values[i + 1])
            .map(|(&a, &b)| R::from_f(a + frac * (b - a)))
            .collect()
    }
}
