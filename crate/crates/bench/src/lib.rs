//! Shared inputs for the benchmarks.

use std::sync::Arc;

use num_complex::Complex64;
use pbs_core::family::{asymmetric, quartic};
use pbs_core::{PbsFamily, TestFunction};

pub const K: f64 = 0.5;

pub fn asymmetric_family() -> Arc<PbsFamily> {
    Arc::new(asymmetric(K))
}

pub fn quartic_family() -> Arc<PbsFamily> {
    Arc::new(quartic(K))
}

pub fn bump_pair() -> (TestFunction, TestFunction) {
    (TestFunction::bump(-0.5, 1.5), TestFunction::bump(0.5, 1.5))
}

/// Points on the circles `|z| = 0.5, 1, ..., 3`.
pub fn z_samples() -> Vec<Complex64> {
    (1..=6)
        .flat_map(|i| (0..4).map(move |j| Complex64::from_polar(0.5 * i as f64, j as f64 * std::f64::consts::FRAC_PI_2)))
        .collect()
}
