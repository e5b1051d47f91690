//! Bi-coherent states `phi(z) = N(|z|) sum z^n/sqrt(n!) phi_n` and
//! `Psi(z) = N(|z|) sum z^n/sqrt(n!) Psi_n`, their eigenvalue residuals, norm
//! growth, and the resolution-of-identity integral.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{asymmetric, PbsFamily};
use crate::poly::{laguerre_neg_sq, ln_factorial};
use crate::quadrature::{gauss_legendre, l2_norm_sq, test_inner_all, QuadratureSpec};
use crate::states::{apply_ladder, LadderOp, Side, StateFn};
use crate::testfn::CompactFn;

/// Required bound on the truncation tail under the automatic policy.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BcsError {
    #[error("truncation at nmax = {nmax} leaves tail bound {bound:e} above {tol:e}")]
    TailBound { nmax: usize, bound: f64, tol: f64 },
    #[error("closed-form norms need the x^2/4 family, got {label}")]
    NotAsymmetric { label: String },
    #[error("the asymptotic formula needs k != 0")]
    ZeroShift,
    #[error("growth fit needs at least 32 finite norms, got {0}")]
    TooFewNorms(usize),
    #[error("test function is not in V0: {0}")]
    NotInV0(String),
}

/// `(sum_{n <= nmax} |z|^{2n}/n!)^{-1/2}`.
pub fn normalization(z: Complex64, nmax: usize) -> f64 {
    let r2 = z.norm_sqr();
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=nmax {
        term *= r2 / n as f64;
        sum += term;
    }
    sum.powf(-0.5)
}

/// `r^{nmax+1} / sqrt((nmax+1)!)`.
pub fn tail_bound(r: f64, nmax: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    ((nmax + 1) as f64 * r.ln() - ln_factorial(nmax + 1) / 2.0).exp()
}

/// Smallest `nmax` with `r^{nmax+1}/sqrt(nmax!) < tol`. This also bounds the
/// eigenvalue residual coefficient, and implies `tail_bound(r, nmax) < tol`.
pub fn auto_nmax(r: f64, tol: f64) -> usize {
    if r == 0.0 {
        return 0;
    }
    let lt = tol.ln();
    (0..)
        .find(|&n| (n + 1) as f64 * r.ln() - ln_factorial(n) / 2.0 < lt)
        .expect("terminates: n! outgrows r^n")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Chosen by [`auto_nmax`] at [`TAIL_TOL`].
    Auto,
    /// Used as given; the tail bound is recorded, not enforced.
    Fixed(usize),
    /// Automatic, but an error if more than this many terms are needed.
    Capped(usize),
}

impl Truncation {
    pub fn resolve(self, r: f64) -> Result<usize, BcsError> {
        let auto = auto_nmax(r, TAIL_TOL);
        match self {
            Truncation::Auto => Ok(auto),
            Truncation::Fixed(n) => Ok(n),
            Truncation::Capped(cap) if auto <= cap => Ok(auto),
            Truncation::Capped(cap) => Err(BcsError::TailBound { nmax: cap, bound: tail_bound(r, cap), tol: TAIL_TOL }),
        }
    }
}

/// `z^n / sqrt(n!)` for `n <= nmax`.
pub fn series_weights(z: Complex64, nmax: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut c = Complex64::new(1.0, 0.0);
    out.push(c);
    for n in 1..=nmax {
        c *= z / (n as f64).sqrt();
        out.push(c);
    }
    out
}

#[derive(Clone, Debug)]
pub struct BcsState {
    pub z: Complex64,
    pub nmax: usize,
    pub normalization: f64,
    /// `N(|z|) z^n / sqrt(n!)`.
    pub coefficients: Vec<Complex64>,
    pub tail_bound: f64,
    pub state: StateFn,
}

pub fn bcs_state(f: &Arc<PbsFamily>, side: Side, z: Complex64, truncation: Truncation) -> Result<BcsState, BcsError> {
    let nmax = truncation.resolve(z.norm())?;
    let n = normalization(z, nmax);
    let coefficients: Vec<Complex64> = series_weights(z, nmax).into_iter().map(|c| c * n).collect();
    Ok(BcsState {
        z,
        nmax,
        normalization: n,
        tail_bound: tail_bound(z.norm(), nmax),
        state: StateFn::series(f, side, coefficients.clone()),
        coefficients,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub nmax: usize,
    /// `N(|z|) |z|^{nmax+1} / sqrt(nmax!)`, the coefficient of the only surviving term.
    pub analytic_tail: f64,
    /// `||L phi(z) - z phi(z)|| / ||phi(z)||`; `None` when the side is not square-integrable.
    pub numeric_residual: Option<f64>,
}

/// Lowers the truncated state (`A` on side A, `B^dagger` on side B) and
/// compares with `z` times it.
pub fn eigen_residual(
    f: &Arc<PbsFamily>,
    side: Side,
    z: Complex64,
    truncation: Truncation,
    spec: &QuadratureSpec,
) -> Result<EigenResidual, BcsError> {
    let bcs = bcs_state(f, side, z, truncation)?;
    let op = match side {
        Side::A => LadderOp::A,
        Side::B => LadderOp::BDag,
    };
    let lowered = apply_ladder(op, &bcs.state).expect("operator matches side");
    let residual = lowered
        .combine(Complex64::new(1.0, 0.0), &bcs.state, -z)
        .expect("same family and side");
    let analytic_tail = if z.norm() == 0.0 {
        0.0
    } else {
        bcs.normalization * ((bcs.nmax + 1) as f64 * z.norm().ln() - ln_factorial(bcs.nmax) / 2.0).exp()
    };
    let numeric_residual = match (l2_norm_sq(&residual, spec).value(), l2_norm_sq(&bcs.state, spec).value()) {
        (Some(r), Some(s)) => Some((r.max(0.0) / s).sqrt()),
        _ => None,
    };
    Ok(EigenResidual { nmax: bcs.nmax, analytic_tail, numeric_residual })
}

/// `||phi_n||^2 = |N_phi|^2 sqrt(2 pi) L_n(-k^2)`; side B carries an extra `e^{2k^2}`
/// (with `|N_psi|^2` in place of `|N_phi|^2`).
pub fn norm_formula(f: &PbsFamily, side: Side, n: usize) -> Result<f64, BcsError> {
    if !f.is_asymmetric() {
        return Err(BcsError::NotAsymmetric { label: f.label.clone() });
    }
    Ok(ln_norm_formula(f, side, n).exp())
}

fn ln_norm_formula(f: &PbsFamily, side: Side, n: usize) -> f64 {
    let k = f.k;
    let lag = laguerre_neg_sq(n, k).ln_abs;
    let base = 2.0 * f.vacuum_constant(side).norm().ln() + 0.5 * (2.0 * PI).ln() + lag;
    match side {
        Side::A => base,
        Side::B => base + 2.0 * k * k,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub ratio_a: f64,
    pub ratio_b: f64,
}

/// `||phi_n|| / [(|N|/(2|k|)^{1/4}) e^{-k^2/4} e^{|k| sqrt n} n^{-1/8}]` in log
/// space; the side-B denominator carries the extra `e^{k^2}`.
pub fn asymptotic_check(k: f64, n_list: &[usize]) -> Result<Vec<AsymptoticRow>, BcsError> {
    if k == 0.0 {
        return Err(BcsError::ZeroShift);
    }
    let f = asymmetric(k);
    let ka = k.abs();
    let ln_model = |side: Side, n: usize| {
        let nf = n as f64;
        let extra = if side == Side::B { k * k } else { 0.0 };
        f.vacuum_constant(side).norm().ln() - 0.25 * (2.0 * ka).ln() - k * k / 4.0 + ka * nf.sqrt() - nf.ln() / 8.0
            + extra
    };
    Ok(n_list
        .iter()
        .map(|&n| AsymptoticRow {
            n,
            ratio_a: (0.5 * ln_norm_formula(&f, Side::A, n) - ln_model(Side::A, n)).exp(),
            ratio_b: (0.5 * ln_norm_formula(&f, Side::B, n) - ln_model(Side::B, n)).exp(),
        })
        .collect())
}

/// Log-log slope of `|ratio - 1|` between two rows.
pub fn deviation_slope(a: &AsymptoticRow, b: &AsymptoticRow) -> f64 {
    ((b.ratio_a - 1.0).abs().ln() - (a.ratio_a - 1.0).abs().ln()) / ((b.n as f64).ln() - (a.n as f64).ln())
}

/// Declared shape of `M_n` in `||phi_n|| <= A r^n M_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MProfile {
    Constant,
    InverseEighthRoot,
    Custom(Vec<f64>),
}

impl MProfile {
    fn value(&self, n: usize) -> f64 {
        match self {
            MProfile::Constant => 1.0,
            MProfile::InverseEighthRoot => (n.max(1) as f64).powf(-0.125),
            MProfile::Custom(v) => v.get(n).copied().unwrap_or(f64::NAN),
        }
    }

    /// `lim M_n / M_{n+1}`, estimated at `len`.
    fn limit_ratio(&self, len: usize) -> f64 {
        match self {
            MProfile::Constant | MProfile::InverseEighthRoot => 1.0,
            MProfile::Custom(v) if v.len() >= 2 => v[v.len() - 2] / v[v.len() - 1],
            MProfile::Custom(_) => self.value(len.saturating_sub(2)) / self.value(len - 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthModel {
    pub profile: MProfile,
    /// Declared `r`; fitted from the data when absent.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSequence {
    /// `alpha_n = sqrt(n)`, unbounded.
    SqrtN,
    Custom(Vec<f64>),
}

impl AlphaSequence {
    fn limit(&self) -> f64 {
        match self {
            AlphaSequence::SqrtN => f64::INFINITY,
            AlphaSequence::Custom(v) => v.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub a: f64,
    pub r: f64,
    pub profile: MProfile,
    /// `lim M_n / M_{n+1}`.
    pub m_limit: f64,
    /// `alpha_bar * min(1, M/r)`.
    pub rho_estimate: f64,
    /// Largest `log(norm_n / (A_1 r^n M_n))` over the second half of the data,
    /// with `A_1` fitted on the first half; zero or below means the bound held out of sample.
    pub max_log_slack: f64,
    pub certified: bool,
}

/// Certifies `||phi_n|| <= A r^n M_n` for the first model that bounds the data.
/// A missing rate is fitted as the largest log-increment over the last half.
/// The certificate is out of sample: `A` fitted on the first half must bound
/// the second half. The reported `A` is the maximum over all the data.
pub fn radius_estimate(norms: &[f64], alpha: &AlphaSequence, models: &[GrowthModel]) -> Result<GrowthFit, BcsError> {
    let len = norms.len();
    if len < 32 || norms.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(BcsError::TooFewNorms(norms.iter().filter(|v| v.is_finite() && **v > 0.0).count()));
    }
    let mut last = None;
    for model in models {
        let y: Vec<f64> = (0..len).map(|n| norms[n].ln() - model.profile.value(n).ln()).collect();
        let ln_r = match model.rate {
            Some(r) => r.ln(),
            None => (len / 2..len).map(|n| y[n] - y[n - 1]).fold(0.0, f64::max),
        };
        let b: Vec<f64> = (0..len).map(|n| y[n] - n as f64 * ln_r).collect();
        let ln_a = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ln_a1 = b[..len / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = b[len / 2..].iter().map(|v| v - ln_a1).fold(f64::NEG_INFINITY, f64::max);
        let m_limit = model.profile.limit_ratio(len);
        let r = ln_r.exp();
        let fit = GrowthFit {
            a: ln_a.exp(),
            r,
            profile: model.profile.clone(),
            m_limit,
            rho_estimate: alpha.limit() * 1f64.min(m_limit / r),
            max_log_slack: slack,
            certified: ln_a.is_finite() && slack <= 1e-12,
        };
        if fit.certified {
            return Ok(fit);
        }
        last = Some(fit);
    }
    Ok(last.unwrap_or(GrowthFit {
        a: f64::NAN,
        r: f64::NAN,
        profile: MProfile::Constant,
        m_limit: f64::NAN,
        rho_estimate: f64::NAN,
        max_log_slack: f64::NAN,
        certified: false,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResult {
    /// `int <v, Psi(z)> <phi(z), w> dnu`.
    pub value: Complex64,
    /// `int <v, phi(z)> <Psi(z), w> dnu`.
    pub swapped: Complex64,
    /// `sum_{n <= nmax} <v, phi_n> <Psi_n, w>`.
    pub partial_sum: Complex64,
    /// `sum_{n <= nmax} <v, Psi_n> <phi_n, w>`.
    pub partial_sum_swapped: Complex64,
    /// Largest `|term_n| Q(n+1, R^2)`: the part of term `n` beyond the cutoff.
    pub cutoff_tail: f64,
    pub cutoff_warning: bool,
}

/// Upper regularized incomplete gamma `Q(n+1, x) = e^{-x} sum_{j<=n} x^j/j!`.
pub fn upper_gamma_q(n: usize, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    for j in 1..=n {
        term *= x / j as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// The disk integral with `dnu = N(r)^{-2} (1/pi) e^{-r^2} r dr dtheta`:
/// Gauss-Legendre on `[0, R]` with `nr` nodes, periodic trapezoid with `ntheta`.
#[allow(clippy::too_many_arguments)]
pub fn resolution_check(
    v: &dyn CompactFn,
    w: &dyn CompactFn,
    f: &PbsFamily,
    nmax: usize,
    radius: f64,
    nr: usize,
    ntheta: usize,
    spec: &QuadratureSpec,
) -> ResolutionResult {
    let v_phi = test_inner_all(v, f, Side::A, nmax, spec);
    let v_psi = test_inner_all(v, f, Side::B, nmax, spec);
    let phi_w: Vec<Complex64> = test_inner_all(w, f, Side::A, nmax, spec).iter().map(|c| c.conj()).collect();
    let psi_w: Vec<Complex64> = test_inner_all(w, f, Side::B, nmax, spec).iter().map(|c| c.conj()).collect();

    let rule = gauss_legendre(nr);
    let half = radius / 2.0;
    let dtheta = 2.0 * PI / ntheta as f64;
    let rows: Vec<(Complex64, Complex64)> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(t, wr)| {
            let r = half * (t + 1.0);
            let n = normalization(Complex64::new(r, 0.0), nmax);
            let measure = (-r * r).exp() * r / PI / (n * n) * wr * half * dtheta;
            let mut acc = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for j in 0..ntheta {
                let z = Complex64::from_polar(r, j as f64 * dtheta);
                let zw = series_weights(z, nmax);
                let zc: Vec<Complex64> = zw.iter().map(|c| c.conj()).collect();
                let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
                // <v, Psi(z)> = N sum z^n/sqrt(n!) <v, Psi_n>; <phi(z), w> = N sum conj(z)^n/sqrt(n!) <phi_n, w>
                acc.0 += n * dot(&zw, &v_psi) * n * dot(&zc, &phi_w);
                acc.1 += n * dot(&zw, &v_phi) * n * dot(&zc, &psi_w);
            }
            (acc.0 * measure, acc.1 * measure)
        })
        .collect();
    let (value, swapped) = rows.iter().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |a, b| (a.0 + b.0, a.1 + b.1));

    let partial_sum = v_phi.iter().zip(&psi_w).map(|(a, b)| a * b).sum();
    let partial_sum_swapped = v_psi.iter().zip(&phi_w).map(|(a, b)| a * b).sum();
    let cutoff_tail = (0..=nmax)
        .map(|n| (v_phi[n] * psi_w[n]).norm().max((v_psi[n] * phi_w[n]).norm()) * upper_gamma_q(n, radius * radius))
        .fold(0.0, f64::max);
    ResolutionResult {
        value,
        swapped,
        partial_sum,
        partial_sum_swapped,
        cutoff_tail,
        cutoff_warning: cutoff_tail > spec.tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{bounded_cos, vacuum};
    use crate::quadrature::{compact_norm_sq, L2Norm};
    use crate::states::{eigenstate, factorize, sup_norm_bounds};
    use crate::testfn::TestFunction;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalization_closed_form() {
        assert_eq!(normalization(c(0.0, 0.0), 10), 1.0);
        assert!((normalization(c(1.0, 0.0), 80) - (-0.5f64).exp()).abs() < 1e-12);
        let n3 = normalization(c(0.0, 3.0), 80);
        assert!((n3 / (-4.5f64).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_examples() {
        assert!(tail_bound(2.0, 40) < 1e-12);
        let nmax = auto_nmax(2.0, TAIL_TOL);
        assert!(tail_bound(2.0, nmax) < TAIL_TOL);
        assert!(2f64.powi(nmax as i32 + 1) / ln_factorial(nmax).exp().sqrt() < TAIL_TOL);
        assert!(2f64.powi(nmax as i32) / ln_factorial(nmax - 1).exp().sqrt() >= TAIL_TOL);
        assert_eq!(auto_nmax(0.0, TAIL_TOL), 0);
        assert!(matches!(Truncation::Capped(5).resolve(2.0), Err(BcsError::TailBound { .. })));
    }

    #[test]
    fn zero_point_is_vacuum() {
        let f = Arc::new(asymmetric(0.5));
        let b = bcs_state(&f, Side::A, c(0.0, 0.0), Truncation::Auto).unwrap();
        assert_eq!(b.nmax, 0);
        let v = vacuum(&f, Side::A);
        for x in [-1.0, 0.0, 2.0] {
            assert_eq!(b.state.value(x), v.value(x));
        }
    }

    #[test]
    fn sides_share_coefficients() {
        let f = Arc::new(bounded_cos(0.5));
        let z = c(0.7, -1.1);
        let a = bcs_state(&f, Side::A, z, Truncation::Fixed(30)).unwrap();
        let b = bcs_state(&f, Side::B, z, Truncation::Fixed(30)).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
    }

    #[test]
    fn residual_tail_is_exact() {
        let f = Arc::new(asymmetric(0.5));
        let spec = QuadratureSpec::default();
        let z = c(1.5, 0.0);
        let r = eigen_residual(&f, Side::A, z, Truncation::Fixed(40), &spec).unwrap();
        let expect = normalization(z, 40) * 1.5f64.powi(41) / ln_factorial(40).exp().sqrt();
        assert!((r.analytic_tail / expect - 1.0).abs() < 1e-13);
        assert!((r.analytic_tail - 6.0e-18).abs() < 1e-19);
        let zero = eigen_residual(&f, Side::A, c(0.0, 0.0), Truncation::Auto, &spec).unwrap();
        assert_eq!(zero.analytic_tail, 0.0);
        assert_eq!(zero.numeric_residual, Some(0.0));
        let rb = eigen_residual(&f, Side::B, c(0.0, 1.5), Truncation::Fixed(40), &spec).unwrap();
        assert!((rb.analytic_tail / r.analytic_tail - 1.0).abs() < 1e-13);
    }

    #[test]
    fn residual_coefficient_matches_lowered_series() {
        let f = Arc::new(asymmetric(0.5));
        let z = c(1.2, 0.4);
        let b = bcs_state(&f, Side::A, z, Truncation::Fixed(12)).unwrap();
        let low = apply_ladder(LadderOp::A, &b.state).unwrap();
        let res = low.combine(c(1.0, 0.0), &b.state, -z).unwrap();
        let coeffs = res.basis();
        let tail = normalization(z, 12) * z.norm().powi(13) / ln_factorial(12).exp().sqrt();
        assert!((coeffs[12].norm() - tail).abs() < 1e-14);
        assert!(coeffs[..12].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn norm_formula_examples() {
        let f = asymmetric(0.5);
        let base = f.n_phi.norm_sqr() * (2.0 * PI).sqrt();
        assert!((norm_formula(&f, Side::A, 0).unwrap() / base - 1.0).abs() < 1e-14);
        let g = asymmetric(1.0);
        let b2 = g.n_phi.norm_sqr() * (2.0 * PI).sqrt() * 3.5;
        assert!((norm_formula(&g, Side::A, 2).unwrap() / b2 - 1.0).abs() < 1e-14);
        for n in [0, 5, 50] {
            let ratio = norm_formula(&f, Side::B, n).unwrap() / norm_formula(&f, Side::A, n).unwrap();
            let expect = (2.0 * 0.25f64).exp() * (f.n_psi / f.n_phi).norm_sqr();
            assert!((ratio / expect - 1.0).abs() < 1e-13);
        }
        assert!(norm_formula(&bounded_cos(0.5), Side::A, 0).is_err());
    }

    #[test]
    fn asymptotics() {
        let rows = asymptotic_check(0.5, &[100, 400, 1600, 2000]).unwrap();
        let dev = |r: &AsymptoticRow| (r.ratio_a - 1.0).abs();
        assert!(dev(&rows[3]) <= 0.05);
        let shrink = dev(&rows[0]) / dev(&rows[1]);
        assert!((shrink - 2.0).abs() < 0.3, "{shrink}");
        assert!((deviation_slope(&rows[0], &rows[2]) + 0.5).abs() <= 0.15);
        for r in &rows {
            assert!((r.ratio_b / r.ratio_a - 1.0).abs() < 1e-12);
        }
        assert_eq!(asymptotic_check(0.0, &[10]), Err(BcsError::ZeroShift));
    }

    #[test]
    fn growth_fit_asymmetric() {
        let k = 0.5;
        let f = asymmetric(k);
        let norms: Vec<f64> = (0..64).map(|n| norm_formula(&f, Side::A, n).unwrap().sqrt()).collect();
        let model = GrowthModel { profile: MProfile::InverseEighthRoot, rate: Some(k.exp()) };
        let fit = radius_estimate(&norms, &AlphaSequence::SqrtN, &[model]).unwrap();
        assert!(fit.certified);
        assert_eq!(fit.r, k.exp());
        assert!(fit.rho_estimate.is_infinite());
    }

    #[test]
    fn growth_fit_bounded() {
        let f = Arc::new(bounded_cos(0.5));
        let spec = QuadratureSpec::default();
        let norms: Vec<f64> = (0..40)
            .map(|n| l2_norm_sq(&eigenstate(&f, Side::A, n), &spec).value().unwrap().sqrt())
            .collect();
        let model = GrowthModel { profile: MProfile::Constant, rate: Some(1.0) };
        let fit = radius_estimate(&norms, &AlphaSequence::SqrtN, &[model]).unwrap();
        let sup = sup_norm_bounds(&f, None, 10_000).unwrap();
        assert!(fit.certified);
        assert!(fit.a <= sup.bound_a * (1.0 + 1e-9));
        assert_eq!((fit.r, fit.m_limit), (1.0, 1.0));
    }

    #[test]
    fn growth_fit_constant() {
        let norms = vec![2.5; 40];
        let fit = radius_estimate(&norms, &AlphaSequence::SqrtN, &[GrowthModel { profile: MProfile::Constant, rate: None }]).unwrap();
        assert!(fit.certified);
        assert_eq!((fit.r, fit.m_limit), (1.0, 1.0));
        assert!(fit.rho_estimate.is_infinite());
        assert!(radius_estimate(&norms[..10], &AlphaSequence::SqrtN, &[]).is_err());
    }

    #[test]
    fn growth_fit_failure_flag() {
        // super-exponential growth is not bounded by a constant rate
        let norms: Vec<f64> = (0..40).map(|n| (0.05 * (n * n) as f64).exp()).collect();
        let model = GrowthModel { profile: MProfile::Constant, rate: Some(2.0) };
        let fit = radius_estimate(&norms, &AlphaSequence::SqrtN, &[model]).unwrap();
        assert!(!fit.certified);
    }

    #[test]
    fn resolution_matches_damped_partial_sum() {
        let f = asymmetric(0.5);
        let spec = QuadratureSpec::default();
        let v = TestFunction::bump(0.0, 2.0);
        let nmax = 10;
        let radius = 6.0;
        let res = resolution_check(&v, &v, &f, nmax, radius, 64, 32, &spec);
        // theta integral keeps the diagonal, radial integral damps term n by P(n+1, R^2)
        let v_psi = test_inner_all(&v, &f, Side::B, nmax, &spec);
        let phi_w: Vec<Complex64> = test_inner_all(&v, &f, Side::A, nmax, &spec).iter().map(|c| c.conj()).collect();
        let damped: Complex64 = (0..=nmax).map(|n| v_psi[n] * phi_w[n] * (1.0 - upper_gamma_q(n, radius * radius))).sum();
        assert!((res.value - damped).norm() < 1e-12);
        assert!((res.partial_sum - res.partial_sum_swapped).norm() < 1e-3);
        let norm = compact_norm_sq(&v, 1e-14);
        assert!(norm > 0.0);
        let _ = factorize(&f);
        let _ = L2Norm::NonIntegrable;
    }

    #[test]
    fn incomplete_gamma() {
        assert!((upper_gamma_q(0, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((upper_gamma_q(1, 2.0) - 3.0 * (-2.0f64).exp()).abs() < 1e-16);
    }
}
