//! Inner products, norms and radial moments.
//!
//! Pairings `<f, g> = int conj(f) g dx` are conjugate-linear in the first slot.

pub mod rules;

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{classify_integrability, PbsFamily};
use crate::poly::{ln_factorial, normalized_values};
use crate::states::{eigenstate, Side, StateFn};
use crate::testfn::CompactFn;

pub use rules::{adaptive_simpson, gauss_hermite, gauss_laguerre, gauss_legendre, integrate_legendre, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub hermite_points: usize,
    pub legendre_points: usize,
    pub laguerre_points: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { hermite_points: 200, legendre_points: 128, laguerre_points: 64, tolerance: 1e-10 }
    }
}

pub const MIN_NODES: usize = 16;

impl QuadratureSpec {
    /// Same tolerance, every node count doubled.
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            hermite_points: 2 * self.hermite_points,
            legendre_points: 2 * self.legendre_points,
            laguerre_points: 2 * self.laguerre_points,
            tolerance: self.tolerance,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, n) in [
            ("hermite_points", self.hermite_points),
            ("legendre_points", self.legendre_points),
            ("laguerre_points", self.laguerre_points),
        ] {
            if n < MIN_NODES {
                return Err(format!("{name} must be at least {MIN_NODES}, got {n}"));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("states belong to different families")]
    FamilyMismatch,
    #[error("expected a side-{expected} state in this slot")]
    WrongSide { expected: Side },
}

/// `<Psi, phi> = int conj(Psi) phi dx`. The integrand is a polynomial times
/// `e^{-x^2/2 - kx}` for every family, so with `y = (x+k)/sqrt 2` it is a
/// Gauss-Hermite integral with the constant `sqrt 2 e^{k^2/2}` pulled out.
pub fn pair_inner(psi: &StateFn, phi: &StateFn, spec: &QuadratureSpec) -> Result<Complex64, QuadError> {
    if psi.side() != Side::B {
        return Err(QuadError::WrongSide { expected: Side::B });
    }
    if phi.side() != Side::A {
        return Err(QuadError::WrongSide { expected: Side::A });
    }
    if !psi.family().same_family(phi.family()) {
        return Err(QuadError::FamilyMismatch);
    }
    let k = phi.family().k;
    let rule = gauss_hermite(spec.hermite_points);
    let sum: Complex64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(y, w)| {
            let u = SQRT_2 * y;
            psi.poly_value(u).conj() * phi.poly_value(u) * *w
        })
        .sum();
    Ok(psi.scale().conj() * phi.scale() * SQRT_2 * (k * k / 2.0).exp() * sum)
}

/// `G[m][n] = <Psi_m, phi_n>` for `m, n <= nmax`, rows computed in parallel.
pub fn gram_matrix(f: &Arc<PbsFamily>, nmax: usize, spec: &QuadratureSpec) -> Vec<Vec<Complex64>> {
    let phis: Vec<StateFn> = (0..=nmax).map(|n| eigenstate(f, Side::A, n)).collect();
    (0..=nmax)
        .into_par_iter()
        .map(|m| {
            let psi = eigenstate(f, Side::B, m);
            phis.iter().map(|phi| pair_inner(&psi, phi, spec).expect("same family")).collect()
        })
        .collect()
}

/// `max |G - I|`.
pub fn gram_deviation(g: &[Vec<Complex64>]) -> f64 {
    g.iter()
        .enumerate()
        .flat_map(|(m, row)| row.iter().enumerate().map(move |(n, v)| (v - if m == n { 1.0 } else { 0.0 }).norm()))
        .fold(0.0, f64::max)
}

/// Panels per compact piece. Bumps are smooth but not analytic at their
/// edges, so a composite rule converges much faster than one wide rule.
pub const PANELS: usize = 4;

/// Nodes and weights of the composite rule on `[a, b]`.
fn panel_nodes(rule: &Rule, (a, b): (f64, f64)) -> impl Iterator<Item = (f64, f64)> + '_ {
    let h = (b - a) / PANELS as f64;
    (0..PANELS).flat_map(move |p| {
        let mid = a + h * (p as f64 + 0.5);
        rule.nodes.iter().zip(&rule.weights).map(move |(t, w)| (mid + h / 2.0 * t, w * h / 2.0))
    })
}

/// `int_a^b g` by the composite Gauss-Legendre rule.
pub fn integrate_panels(n: usize, a: f64, b: f64, g: impl Fn(f64) -> Complex64) -> Complex64 {
    panel_nodes(&gauss_legendre(n), (a, b)).map(|(x, w)| g(x) * w).sum()
}

/// `<v, s> = int conj(v) s dx` by composite Gauss-Legendre on each piece of `v`.
pub fn test_inner(v: &dyn CompactFn, s: &StateFn, spec: &QuadratureSpec) -> Complex64 {
    (0..v.piece_count())
        .map(|i| {
            let (a, b) = v.piece_support(i);
            integrate_panels(spec.legendre_points, a, b, |x| v.piece_value(i, x).conj() * s.value(x))
        })
        .sum()
}

/// `<v, phi_n>` (side A) or `<v, Psi_n>` (side B) for all `n <= nmax` at once.
pub fn test_inner_all(v: &dyn CompactFn, f: &PbsFamily, side: Side, nmax: usize, spec: &QuadratureSpec) -> Vec<Complex64> {
    let rule = gauss_legendre(spec.legendre_points);
    let c = f.vacuum_constant(side);
    let exponent = f.exponent(side);
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    for i in 0..v.piece_count() {
        for (x, w) in panel_nodes(&rule, v.piece_support(i)) {
            let vx = v.piece_value(i, x);
            if vx == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = exponent.eval_real(x).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let g = vx.conj() * c * (-e).exp() * w;
            for (o, p) in out.iter_mut().zip(normalized_values(x + f.k, nmax)) {
                *o += g * p;
            }
        }
    }
    out
}

/// `<v, w>` for two compactly supported functions, piece by piece.
pub fn compact_inner(v: &dyn CompactFn, w: &dyn CompactFn, spec: &QuadratureSpec) -> Complex64 {
    (0..w.piece_count())
        .map(|j| {
            let (a, b) = w.piece_support(j);
            integrate_panels(spec.legendre_points, a, b, |x| v.value(x).conj() * w.piece_value(j, x))
        })
        .sum()
}

/// `<v, w>` by adaptive Simpson over each piece of `w`; independent of the Gauss rules.
pub fn reference_inner(v: &dyn CompactFn, w: &dyn CompactFn, tol: f64) -> Complex64 {
    (0..w.piece_count())
        .map(|j| {
            let (a, b) = w.piece_support(j);
            adaptive_simpson(&|x| v.value(x).conj() * w.piece_value(j, x), a, b, tol)
        })
        .sum()
}

/// `||v||^2` of a compactly supported function, by the adaptive reference rule.
pub fn compact_norm_sq(v: &dyn CompactFn, tol: f64) -> f64 {
    reference_inner(v, v, tol).re
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Norm {
    Value(f64),
    NonIntegrable,
}

impl L2Norm {
    pub fn value(self) -> Option<f64> {
        match self {
            L2Norm::Value(v) => Some(v),
            L2Norm::NonIntegrable => None,
        }
    }
}

/// Gaussian `e^{-2a(x-x0)^2}` matched to `e^{-2 Re s}`: `x0` is the minimum of
/// `Re s` and `a` matches the width at which `Re s` rises by `RISE`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFit {
    pub x0: f64,
    pub a: f64,
    pub s0: f64,
}

const RISE: f64 = 30.0;

pub fn fit_gaussian(g: &dyn Fn(f64) -> f64) -> Option<GaussianFit> {
    let (mut x0, mut s0) = (0.0, g(0.0));
    for i in -1000..=1000 {
        let x = i as f64 * 0.05;
        let v = g(x);
        if v < s0 {
            (x0, s0) = (x, v);
        }
    }
    // golden-section refine
    let (mut lo, mut hi) = (x0 - 0.05, x0 + 0.05);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if g(c) < g(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    x0 = (lo + hi) / 2.0;
    s0 = g(x0);
    if !s0.is_finite() {
        return None;
    }
    let reach = |dir: f64| -> Option<f64> {
        let mut hi = 1.0;
        while g(x0 + dir * hi) - s0 < RISE {
            hi *= 2.0;
            if hi > 1e4 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let m = (lo + hi) / 2.0;
            if g(x0 + dir * m) - s0 < RISE {
                lo = m;
            } else {
                hi = m;
            }
        }
        Some((lo + hi) / 2.0)
    };
    let l = (reach(1.0)? + reach(-1.0)?) / 2.0;
    Some(GaussianFit { x0, a: RISE / (l * l), s0 })
}

/// `int |s|^2 dx` with Gauss-Hermite in `y = sqrt(2a)(x - x0)` for the fitted
/// Gaussian, or the non-integrable flag when the weight is not square-integrable.
pub fn l2_norm_sq(s: &StateFn, spec: &QuadratureSpec) -> L2Norm {
    let f = s.family();
    if !classify_integrability(f).side(s.side()).is_square_integrable() {
        return L2Norm::NonIntegrable;
    }
    let exponent = s.exponent();
    let g = |x: f64| exponent.eval_real(x).map(|v| v.re).unwrap_or(f64::INFINITY);
    let Some(fit) = fit_gaussian(&g) else {
        return L2Norm::NonIntegrable;
    };
    let scale = (2.0 * fit.a).sqrt();
    let rule = gauss_hermite(spec.hermite_points);
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(y, w)| {
            let x = fit.x0 + y / scale;
            let q = s.poly_value(x + f.k).norm_sqr();
            if q == 0.0 {
                return 0.0;
            }
            w * q * (-2.0 * (g(x) - fit.s0) + y * y).exp()
        })
        .sum();
    L2Norm::Value(s.scale().norm_sqr() * (-2.0 * fit.s0).exp() * sum / scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: usize,
    pub value: f64,
    pub exact: f64,
}

impl MomentCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.value - self.exact) / self.exact).abs()
    }
}

/// `int_0^inf (1/pi) e^{-r^2} r^{2 order + 1} dr` by Gauss-Laguerre in `t = r^2`,
/// against `order!/(2 pi)`.
pub fn moment_check(order: usize, spec: &QuadratureSpec) -> MomentCheck {
    let rule = gauss_laguerre(spec.laguerre_points);
    let sum: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t.powi(order as i32)).sum();
    MomentCheck { order, value: sum / (2.0 * PI), exact: ln_factorial(order).exp() / (2.0 * PI) }
}

/// Difference between a quantity at `spec` and at `spec.doubled()`.
pub fn doubling_gap<T>(spec: &QuadratureSpec, f: impl Fn(&QuadratureSpec) -> T, dist: impl Fn(&T, &T) -> f64) -> f64 {
    let a = f(spec);
    let b = f(&spec.doubled());
    dist(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{asymmetric, bounded_cos, presets, quartic, vacuum};
    use crate::poly::laguerre_neg_sq;
    use crate::testfn::TestFunction;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn vacuum_pairing_is_one() {
        for f in presets(0.5) {
            let v = pair_inner(&vacuum(&f, Side::B), &vacuum(&f, Side::A), &spec()).unwrap();
            assert!((v - 1.0).norm() < 1e-12, "{}", f.label);
        }
    }

    #[test]
    fn biorthonormal_examples() {
        let f = Arc::new(asymmetric(0.5));
        let s = spec();
        let v = pair_inner(&eigenstate(&f, Side::B, 3), &eigenstate(&f, Side::A, 3), &s).unwrap();
        assert!((v - 1.0).norm() < 1e-10);
        let v = pair_inner(&eigenstate(&f, Side::B, 5), &eigenstate(&f, Side::A, 2), &s).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn gram_independent_of_superpotential() {
        let s = spec();
        let g1 = gram_matrix(&Arc::new(bounded_cos(0.5)), 12, &s);
        let g2 = gram_matrix(&Arc::new(quartic(0.5)), 12, &s);
        assert!(gram_deviation(&g1) < 1e-10);
        for (r1, r2) in g1.iter().zip(&g2) {
            for (a, b) in r1.iter().zip(r2) {
                assert!((a - b).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn pair_inner_rejects_mismatch() {
        let f = Arc::new(asymmetric(0.5));
        let g = Arc::new(quartic(0.5));
        let r = pair_inner(&eigenstate(&g, Side::B, 0), &eigenstate(&f, Side::A, 0), &spec());
        assert_eq!(r, Err(QuadError::FamilyMismatch));
        let r = pair_inner(&eigenstate(&f, Side::A, 0), &eigenstate(&f, Side::A, 0), &spec());
        assert!(matches!(r, Err(QuadError::WrongSide { .. })));
    }

    #[test]
    fn test_inner_against_adaptive_oracle() {
        let f = Arc::new(asymmetric(0.5));
        let phi0 = vacuum(&f, Side::A);
        let v = TestFunction::bump(6.0, 1.0);
        let g = test_inner(&v, &phi0, &spec());
        let oracle = adaptive_simpson(&|x| v.value(x).conj() * phi0.value(x), 5.0, 7.0, 1e-14);
        assert!((g - oracle).norm() <= 1e-10 * oracle.norm().max(1e-30) + 1e-18, "{g} {oracle}");
        let zero = phi0.scaled(Complex64::new(0.0, 0.0));
        assert_eq!(test_inner(&v, &zero, &spec()), Complex64::new(0.0, 0.0));
        let alpha = Complex64::new(0.3, -1.7);
        let lhs = test_inner(&v, &phi0.scaled(alpha), &spec());
        assert!((lhs - alpha * g).norm() <= 1e-14 * lhs.norm());
    }

    #[test]
    fn batched_pairings_match_single() {
        let f = Arc::new(bounded_cos(0.5));
        let v = TestFunction::bump(0.5, 2.0).plus(&TestFunction::bump(-1.0, 0.7));
        let all = test_inner_all(&v, &f, Side::B, 12, &spec());
        for (n, a) in all.iter().enumerate() {
            let one = test_inner(&v, &eigenstate(&f, Side::B, n), &spec());
            assert!((a - one).norm() <= 1e-13 * one.norm().max(1e-3));
        }
    }

    #[test]
    fn asymmetric_norms_match_laguerre() {
        let k = 0.5;
        let f = Arc::new(asymmetric(k));
        for n in 0..=30 {
            let lag = laguerre_neg_sq(n, k).value();
            let a = l2_norm_sq(&eigenstate(&f, Side::A, n), &spec()).value().unwrap();
            let b = l2_norm_sq(&eigenstate(&f, Side::B, n), &spec()).value().unwrap();
            let ea = f.n_phi.norm_sqr() * (2.0 * PI).sqrt() * lag;
            let eb = f.n_psi.norm_sqr() * (2.0 * PI).sqrt() * (2.0 * k * k).exp() * lag;
            assert!((a / ea - 1.0).abs() < 1e-8, "n={n}");
            assert!((b / eb - 1.0).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn quartic_side_b_flagged() {
        let f = Arc::new(quartic(0.5));
        assert_eq!(l2_norm_sq(&vacuum(&f, Side::B), &spec()), L2Norm::NonIntegrable);
        assert!(l2_norm_sq(&vacuum(&f, Side::A), &spec()).value().is_some());
    }

    #[test]
    fn l2_converges_under_doubling() {
        for f in presets(0.5) {
            let s = eigenstate(&f, Side::A, 6);
            let gap = doubling_gap(&spec(), |sp| l2_norm_sq(&s, sp).value().unwrap(), |a, b| (a - b).abs() / b);
            assert!(gap < 1e-10, "{} {gap}", f.label);
        }
    }

    #[test]
    fn moments() {
        let s = spec();
        assert!((moment_check(0, &s).value - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((moment_check(2, &s).value - 1.0 / PI).abs() < 1e-14);
        for k in 0..=15 {
            assert!(moment_check(k, &s).relative_error() <= 1e-10, "k={k}");
        }
    }

    #[test]
    fn spec_validation() {
        assert!(spec().validate().is_ok());
        let bad = QuadratureSpec { legendre_points: 8, ..spec() };
        assert!(bad.validate().is_err());
        assert_eq!(spec().doubled().hermite_points, 400);
    }
}
