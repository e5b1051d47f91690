//! Sample grids for pointwise identity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    points: Vec<f64>,
}

impl SampleGrid {
    /// 512 Chebyshev points on [-20, 20] plus 16 seeded uniform points.
    pub fn standard(seed: u64) -> Self {
        let mut points = chebyshev(512, -20.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        points.extend((0..16).map(|_| rng.random_range(-20.0..20.0)));
        SampleGrid { points }
    }

    pub fn chebyshev(n: usize, a: f64, b: f64) -> Self {
        SampleGrid { points: chebyshev(n, a, b) }
    }

    /// `steps` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, steps: usize) -> Self {
        let points = match steps {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect(),
        };
        SampleGrid { points }
    }

    pub fn from_points(points: Vec<f64>) -> Self {
        SampleGrid { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn retain(&self, keep: impl Fn(f64) -> bool) -> Self {
        SampleGrid { points: self.points.iter().copied().filter(|&x| keep(x)).collect() }
    }
}

fn chebyshev(n: usize, a: f64, b: f64) -> Vec<f64> {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    (0..n)
        .map(|j| mid + half * (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}
