//! Bi-coherent states as functionals on compactly supported test functions,
//! for families whose states leave `L^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bicoherent::{normalization, series_weights, BcsError, Truncation};
use crate::family::PbsFamily;
use crate::quadrature::{integrate_panels, reference_inner, test_inner_all, QuadratureSpec};
use crate::states::Side;
use crate::testfn::{AppliedTest, Bump, CompactFn, TestFunction};

/// `<f(z), v>` (side A, over `phi_n`) or `<g(z), v>` (side B, over `Psi_n`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub value: Complex64,
    pub nmax: usize,
    pub normalization: f64,
    /// `N sum |z|^n / sqrt(n!) |<phi_n, v>|`, the scale of rounding error in `value`.
    pub magnitude: f64,
    /// `<phi_n, v>` (or `<Psi_n, v>`) for `n <= nmax`.
    pub pairings: Vec<Complex64>,
}

/// `N(|z|) sum conj(z)^n / sqrt(n!) <phi_n, v>`.
pub fn weak_functional(
    f: &PbsFamily,
    side: Side,
    z: Complex64,
    v: &dyn CompactFn,
    truncation: Truncation,
    spec: &QuadratureSpec,
) -> Result<WeakValue, BcsError> {
    let nmax = truncation.resolve(z.norm())?;
    let n = normalization(z, nmax);
    let pairings: Vec<Complex64> = test_inner_all(v, f, side, nmax, spec).iter().map(|c| c.conj()).collect();
    let weights = series_weights(z, nmax);
    let value = weights.iter().zip(&pairings).map(|(c, p)| c.conj() * p).sum::<Complex64>() * n;
    let magnitude = weights.iter().zip(&pairings).map(|(c, p)| c.norm() * p.norm()).sum::<f64>() * n;
    Ok(WeakValue { value, nmax, normalization: n, magnitude, pairings })
}

/// `N(|z|) ||conj(rho) v|| sum |z|^n / sqrt(n!)`, where `phi_n = rho c_n` with
/// `||c_n|| = 1`, so `|<phi_n, v>| <= ||conj(rho) v||` term by term.
pub fn weak_bound(f: &PbsFamily, side: Side, z: Complex64, v: &TestFunction, nmax: usize, spec: &QuadratureSpec) -> f64 {
    let c = f.vacuum_constant(side);
    let exponent = f.exponent(side);
    let mut norm_sq = 0.0;
    for b in v.terms() {
        let (lo, hi) = b.support();
        norm_sq += integrate_panels(spec.legendre_points, lo, hi, |x| {
            let e = exponent.eval_real(x).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let v = b.value(x).norm();
            if v == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            // |rho v|^2 in log space: rho alone overflows where v is tiny
            let ln_rho = c.norm().ln() + 0.25 * (2.0 * PI).ln() + (x + f.k).powi(2) / 4.0 - e.re;
            Complex64::new((2.0 * (ln_rho + v.ln())).exp(), 0.0)
        })
        .re;
    }
    let sum: f64 = series_weights(Complex64::new(z.norm(), 0.0), nmax).iter().map(|c| c.re).sum();
    normalization(z, nmax) * norm_sq.sqrt() * sum
}

/// Result of testing the weak eigenvalue equations
/// `<A^dagger v, f(z)> = z <v, f(z)>` and `<B v, g(z)> = z <v, g(z)>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakEigen {
    pub nmax: usize,
    pub residual_a: f64,
    pub residual_b: f64,
    /// `|z| N |z|^{nmax} / sqrt(nmax!) |<v, phi_nmax>|`, the truncation term on side A.
    pub predicted_a: f64,
    pub predicted_b: f64,
}

impl WeakEigen {
    /// Both residuals are within the truncation term plus `slack`.
    pub fn within(&self, slack: f64) -> bool {
        self.residual_a <= self.predicted_a + slack && self.residual_b <= self.predicted_b + slack
    }
}

pub fn weak_eigen_check(
    f: &PbsFamily,
    z: Complex64,
    v: &TestFunction,
    truncation: Truncation,
    spec: &QuadratureSpec,
) -> Result<WeakEigen, BcsError> {
    let membership = v0_membership(v, f);
    if !membership.member {
        return Err(BcsError::NotInV0(membership.reason.unwrap_or_default()));
    }
    let residual = |side: Side, moved: &AppliedTest| -> Result<(f64, f64, usize), BcsError> {
        let plain = weak_functional(f, side, z, v, truncation, spec)?;
        let shifted = weak_functional(f, side, z, moved, truncation, spec)?;
        // <u, f(z)> = conj(<f(z), u>)
        let lhs = shifted.value.conj();
        let rhs = z * plain.value.conj();
        let top = plain.pairings[plain.nmax].norm();
        let coeff = series_weights(Complex64::new(z.norm(), 0.0), plain.nmax)[plain.nmax].re;
        Ok(((lhs - rhs).norm(), z.norm() * plain.normalization * coeff * top, plain.nmax))
    };
    let (residual_a, predicted_a, nmax) = residual(Side::A, &membership.a_dag_v)?;
    let (residual_b, predicted_b, _) = residual(Side::B, &membership.b_v)?;
    Ok(WeakEigen { nmax, residual_a, residual_b, predicted_a, predicted_b })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiBasisSums {
    pub n_list: Vec<usize>,
    /// `sum_{n <= N} <v, phi_n> <Psi_n, w>`.
    pub sums: Vec<Complex64>,
    /// `sum_{n <= N} <v, Psi_n> <phi_n, w>`.
    pub swapped: Vec<Complex64>,
    /// `<v, w>` by adaptive Simpson.
    pub reference: Complex64,
}

impl QuasiBasisSums {
    /// Largest distance of either ordering from the reference at the last `N`.
    pub fn final_error(&self) -> f64 {
        match (self.sums.last(), self.swapped.last()) {
            (Some(a), Some(b)) => (a - self.reference).norm().max((b - self.reference).norm()),
            _ => f64::INFINITY,
        }
    }
}

pub fn quasi_basis_partial_sums(
    v: &dyn CompactFn,
    w: &dyn CompactFn,
    f: &PbsFamily,
    n_list: &[usize],
    spec: &QuadratureSpec,
) -> QuasiBasisSums {
    let top = n_list.iter().copied().max().unwrap_or(0);
    let v_phi = test_inner_all(v, f, Side::A, top, spec);
    let v_psi = test_inner_all(v, f, Side::B, top, spec);
    let w_phi = test_inner_all(w, f, Side::A, top, spec);
    let w_psi = test_inner_all(w, f, Side::B, top, spec);
    let partial = |a: &[Complex64], b: &[Complex64], n: usize| -> Complex64 {
        a[..=n].iter().zip(&b[..=n]).map(|(x, y)| x * y.conj()).sum()
    };
    QuasiBasisSums {
        n_list: n_list.to_vec(),
        sums: n_list.iter().map(|&n| partial(&v_phi, &w_psi, n)).collect(),
        swapped: n_list.iter().map(|&n| partial(&v_psi, &w_phi, n)).collect(),
        reference: reference_inner(v, w, 1e-13),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub scale: f64,
    /// `|<f(z), v_k - v>|`.
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    pub rows: Vec<ProbeRow>,
    /// Consecutive values halve within 5% when the scales halve.
    pub linear: bool,
}

/// Shrinks a fixed perturbation `s_k bump(c + w/4, w/2)` inside the support
/// of `v` and records `|<f(z), v_k - v>|`.
pub fn continuity_probe(
    f: &PbsFamily,
    side: Side,
    z: Complex64,
    v: &TestFunction,
    scales: &[f64],
    truncation: Truncation,
    spec: &QuadratureSpec,
) -> Result<ContinuityProbe, BcsError> {
    let (lo, hi) = v.support().unwrap_or((-1.0, 1.0));
    let (c, w) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let shape = TestFunction::bump(c + 0.25 * w, 0.5 * w);
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let vk = v.plus(&shape.scaled(Complex64::new(s, 0.0)));
        let diff = vk.minus(v);
        let fv = weak_functional(f, side, z, &diff, truncation, spec)?;
        let bound = weak_bound(f, side, z, &diff, fv.nmax, spec);
        rows.push(ProbeRow { scale: s, value: fv.value.norm(), bound });
    }
    let linear = rows.windows(2).all(|p| {
        let want = p[0].value * p[1].scale / p[0].scale;
        (p[1].value - want).abs() <= 0.05 * want.abs()
    });
    Ok(ContinuityProbe { rows, linear })
}

#[derive(Clone, Debug)]
pub struct V0Report {
    pub member: bool,
    pub reason: Option<String>,
    /// `A^dagger v = -v' + conj(w_A) v`.
    pub a_dag_v: AppliedTest,
    /// `B v = -v' + w_B v`.
    pub b_v: AppliedTest,
}

const POLE_LIMIT: f64 = 1e8;

/// `v` is in `V0` when `w_A` and `w_B` are finite and bounded on its support,
/// so that `A^dagger v` and `B v` are again smooth and compactly supported.
pub fn v0_membership(v: &TestFunction, f: &PbsFamily) -> V0Report {
    let a_dag_v = v.apply_first_order(f.w_a.conjugate());
    let b_v = v.apply_first_order(f.w_b.clone());
    let reason = v.terms().iter().find_map(|b| check_piece(b, f));
    V0Report { member: reason.is_none(), reason, a_dag_v, b_v }
}

fn check_piece(b: &Bump, f: &PbsFamily) -> Option<String> {
    let (lo, hi) = b.support();
    for (name, e) in [("w_A", &f.w_a), ("w_B", &f.w_b)] {
        let probe = |x: f64| match e.eval_real(x) {
            Ok(v) if v.is_finite() => Ok(v.norm()),
            Ok(_) => Err(format!("{name} is not finite at x = {x}")),
            Err(err) => Err(format!("{name} fails at x = {x}: {err}")),
        };
        let mut best = (f64::NEG_INFINITY, b.center);
        let samples = (0..=1024).map(|i| lo + (hi - lo) * i as f64 / 1024.0).chain([b.center]);
        for x in samples {
            match probe(x) {
                Ok(m) if m > best.0 => best = (m, x),
                Ok(_) => {}
                Err(msg) => return Some(msg),
            }
        }
        // zoom in on the largest sample to catch poles between grid points
        let mut h = (hi - lo) / 1024.0;
        for _ in 0..30 {
            let center = best.1;
            for i in -10..=10 {
                let x = (center + h * i as f64 / 10.0).clamp(lo, hi);
                match probe(x) {
                    Ok(m) if m > best.0 => best = (m, x),
                    Ok(_) => {}
                    Err(msg) => return Some(msg),
                }
            }
            if best.0 > POLE_LIMIT {
                return Some(format!("|{name}| exceeds {POLE_LIMIT:e} near x = {}", best.1));
            }
            h /= 10.0;
        }
    }
    None
}
