//! Eigenfunctions `phi_n = N_phi p_n(x+k) e^{-s_A}` and
//! `Psi_n = N_psi p_n(x+k) e^{-conj(s_B)}` in (polynomial, exponent) form,
//! with symbolic ladder action.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::family::PbsFamily;
use crate::grid::SampleGrid;
use crate::poly::{ln_factorial, normalized_values, pn_sequence, ScaledPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LadderOp {
    A,
    B,
    ADag,
    BDag,
}

impl LadderOp {
    /// The side this operator acts on and whether it lowers.
    fn action(self) -> (Side, bool) {
        match self {
            LadderOp::A => (Side::A, true),
            LadderOp::B => (Side::A, false),
            LadderOp::BDag => (Side::B, true),
            LadderOp::ADag => (Side::B, false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StateError {
    #[error("{op:?} does not act on side-{side} states")]
    SideMismatch { op: LadderOp, side: Side },
    #[error("states belong to different families")]
    FamilyMismatch,
    #[error("operation needs an exact eigenstate")]
    NotExact,
    #[error("family {label} has no bounded-Phi structure")]
    NotBounded { label: String },
}

static PN_CACHE: OnceLock<RwLock<Vec<ScaledPoly>>> = OnceLock::new();

/// `P_n` from the exact recursion, memoized.
pub fn pn(n: usize) -> ScaledPoly {
    let cache = PN_CACHE.get_or_init(|| RwLock::new(pn_sequence(0)));
    if let Some(p) = cache.read().expect("poisoned").get(n) {
        return p.clone();
    }
    let mut w = cache.write().expect("poisoned");
    while w.len() <= n {
        let next = w[w.len() - 1].raise();
        w.push(next);
    }
    w[n].clone()
}

/// A state `scale * q(x+k) * e^{-exponent(x)}` where `q = sum_j basis_j p_j`.
#[derive(Clone, Debug)]
pub struct StateFn {
    family: Arc<PbsFamily>,
    side: Side,
    scale: Complex64,
    /// Exact form `poly / sqrt(fact!)` of `q`, when known.
    exact: Option<(ScaledPoly, usize)>,
    basis: Vec<Complex64>,
    index: Option<usize>,
}

fn basis_from_exact(poly: &ScaledPoly, fact: usize) -> Vec<Complex64> {
    let lf = ln_factorial(fact);
    poly.to_hermite_basis()
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let d = d.to_f64().unwrap_or(f64::NAN);
            Complex64::new(d * ((ln_factorial(j) - lf) / 2.0).exp(), 0.0)
        })
        .collect()
}

/// `phi_n` (side A) or `Psi_n` (side B).
pub fn eigenstate(f: &Arc<PbsFamily>, side: Side, n: usize) -> StateFn {
    let mut basis = vec![Complex64::new(0.0, 0.0); n + 1];
    basis[n] = Complex64::new(1.0, 0.0);
    StateFn {
        family: Arc::clone(f),
        side,
        scale: f.vacuum_constant(side),
        exact: Some((pn(n), n)),
        basis,
        index: Some(n),
    }
}

impl StateFn {
    /// `scale * vacuum_constant * sum_j coeffs_j p_j` with coefficients in doubles.
    pub fn series(f: &Arc<PbsFamily>, side: Side, coeffs: Vec<Complex64>) -> StateFn {
        StateFn { family: Arc::clone(f), side, scale: f.vacuum_constant(side), exact: None, basis: coeffs, index: None }
    }

    pub fn family(&self) -> &Arc<PbsFamily> {
        &self.family
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn index(&self) -> Option<usize> {
        self.index
    }

    /// Coefficients of `q` in the normalized basis `p_j`, excluding `scale`.
    pub fn basis(&self) -> &[Complex64] {
        &self.basis
    }

    pub fn exact_poly(&self) -> Option<&ScaledPoly> {
        self.exact.as_ref().map(|(p, _)| p)
    }

    /// `m` in the `1/sqrt(m!)` attached to the exact polynomial.
    pub fn factorial_index(&self) -> Option<usize> {
        self.exact.as_ref().map(|(_, m)| *m)
    }

    pub fn is_zero(&self) -> bool {
        let poly_zero = match &self.exact {
            Some((p, _)) => p.is_zero(),
            None => self.basis.iter().all(|c| *c == Complex64::new(0.0, 0.0)),
        };
        poly_zero || self.scale == Complex64::new(0.0, 0.0)
    }

    pub fn exponent(&self) -> &Expr {
        self.family.exponent(self.side)
    }

    pub fn scaled(&self, alpha: Complex64) -> StateFn {
        StateFn { scale: self.scale * alpha, index: None, ..self.clone() }
    }

    /// `alpha * self + beta * other`, as a double-precision series.
    pub fn combine(&self, alpha: Complex64, other: &StateFn, beta: Complex64) -> Result<StateFn, StateError> {
        if !self.family.same_family(&other.family) {
            return Err(StateError::FamilyMismatch);
        }
        if self.side != other.side {
            return Err(StateError::SideMismatch { op: LadderOp::A, side: other.side });
        }
        let n = self.basis.len().max(other.basis.len());
        let zero = Complex64::new(0.0, 0.0);
        let a = alpha * self.scale;
        let b = beta * other.scale;
        let base = self.family.vacuum_constant(self.side);
        let coeffs = (0..n)
            .map(|j| {
                (a * self.basis.get(j).copied().unwrap_or(zero) + b * other.basis.get(j).copied().unwrap_or(zero))
                    / base
            })
            .collect();
        Ok(StateFn::series(&self.family, self.side, coeffs))
    }

    /// `q(u)` at `u = x + k`, excluding scale and exponential.
    pub fn poly_value(&self, u: f64) -> Complex64 {
        let p = normalized_values(u, self.basis.len().saturating_sub(1));
        self.basis.iter().zip(&p).map(|(c, p)| c * p).sum()
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let e = self.exponent().eval_real(x).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        self.scale * self.poly_value(x + self.family.k) * (-e).exp()
    }

    fn with_exact(&self, poly: ScaledPoly, fact: usize) -> StateFn {
        StateFn {
            family: Arc::clone(&self.family),
            side: self.side,
            scale: self.scale,
            basis: basis_from_exact(&poly, fact),
            exact: Some((poly, fact)),
            index: None,
        }
    }
}

/// Applies `A`, `B` (side A) or `A^dagger`, `B^dagger` (side B) by acting on
/// the polynomial part: the superpotential terms cancel exactly.
pub fn apply_ladder(op: LadderOp, s: &StateFn) -> Result<StateFn, StateError> {
    let (side, lowers) = op.action();
    if side != s.side {
        return Err(StateError::SideMismatch { op, side: s.side });
    }
    if let Some((poly, fact)) = &s.exact {
        let next = if lowers { poly.derivative() } else { poly.raise() };
        return Ok(s.with_exact(next, *fact));
    }
    let zero = Complex64::new(0.0, 0.0);
    let n = s.basis.len();
    let basis = if lowers {
        // p_j' = sqrt(j) p_{j-1}
        (0..n.saturating_sub(1)).map(|j| s.basis[j + 1] * ((j + 1) as f64).sqrt()).collect()
    } else {
        // u p_j - p_j' = sqrt(j+1) p_{j+1}
        (0..=n).map(|j| if j == 0 { zero } else { s.basis[j - 1] * (j as f64).sqrt() }).collect()
    };
    Ok(StateFn { basis, index: None, ..s.clone() })
}

/// `N = BA` on side A and `N^dagger = A^dagger B^dagger` on side B.
pub fn apply_number(s: &StateFn) -> Result<StateFn, StateError> {
    let (lower, raise) = match s.side {
        Side::A => (LadderOp::A, LadderOp::B),
        Side::B => (LadderOp::BDag, LadderOp::ADag),
    };
    apply_ladder(raise, &apply_ladder(lower, s)?)
}

/// Numerical cross-check of a ladder application: `(+-d/dx + w) s` by central
/// differences against the symbolic result, at `x`. Returns `(numeric, symbolic)`.
pub fn ladder_crosscheck(op: LadderOp, s: &StateFn, x: f64, h: f64) -> Result<(Complex64, Complex64), StateError> {
    let symbolic = apply_ladder(op, s)?.value(x);
    let f = &s.family;
    let (sign, w) = match op {
        LadderOp::A => (1.0, f.w_a.clone()),
        LadderOp::B => (-1.0, f.w_b.clone()),
        LadderOp::BDag => (1.0, f.w_b.conjugate()),
        LadderOp::ADag => (-1.0, f.w_a.conjugate()),
    };
    let d = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
    let w = w.eval_real(x).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    Ok((sign * d + w * s.value(x), symbolic))
}

/// `phi_n = c_n rho_A`, `Psi_n = c_n rho_B` with `c_n` the oscillator mode
/// `2^{-1/4} e_n((x+k)/sqrt 2)`.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub k: f64,
    pub rho_a: Expr,
    pub rho_b: Expr,
}

impl Factorization {
    /// `c_0(x) ..= c_nmax(x)`.
    pub fn cn_values(&self, x: f64, nmax: usize) -> Vec<f64> {
        let u = x + self.k;
        let g = (2.0 * PI).powf(-0.25) * (-u * u / 4.0).exp();
        normalized_values(u, nmax).into_iter().map(|p| p * g).collect()
    }

    pub fn cn(&self, n: usize, x: f64) -> f64 {
        self.cn_values(x, n)[n]
    }

    /// `max |rho_A(x) conj(rho_B(x)) - 1|` on the grid.
    pub fn product_residual(&self, grid: &SampleGrid) -> f64 {
        grid.points()
            .iter()
            .map(|&x| match (self.rho_a.eval_real(x), self.rho_b.eval_real(x)) {
                (Ok(a), Ok(b)) => (a * b.conj() - 1.0).norm(),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

pub fn factorize(f: &PbsFamily) -> Factorization {
    let quarter = Expr::div(Expr::pow(Expr::add(Expr::x(), Expr::real(f.k)), 2), Expr::real(4.0));
    let c = (2.0 * PI).powf(0.25);
    let rho = |n: Complex64, s: &Expr| Expr::mul(Expr::constant(n * c), Expr::exp(Expr::sub(quarter.clone(), s.clone())));
    Factorization { k: f.k, rho_a: rho(f.n_phi, &f.s_a), rho_b: rho(f.n_psi, &f.s_b_conj) }
}

/// `rho_A / rho_B = (N_phi/N_psi) e^{conj(s_B) - s_A}`; multiplication by it maps `Psi_n` to `phi_n`.
pub fn metric_multiplier(f: &PbsFamily) -> Expr {
    Expr::mul(
        Expr::constant(f.n_phi / f.n_psi),
        Expr::exp(Expr::sub(f.s_b_conj.clone(), f.s_a.clone())),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub phi_min: f64,
    pub phi_max: f64,
    pub bound_a: f64,
    pub bound_b: f64,
    pub measured_a: f64,
    pub measured_b: f64,
}

/// Analytic `||rho_A||_inf = N_phi (2 pi)^{1/4} e^{k^2/4 - m}` and
/// `||rho_B||_inf = N_psi (2 pi)^{1/4} e^{k^2/4 + M}` for `m <= Phi <= M`,
/// with suprema measured on `points` equally spaced points of [-20, 20].
/// The range of `Phi` is estimated on the same points when not supplied.
pub fn sup_norm_bounds(f: &PbsFamily, range: Option<(f64, f64)>, points: usize) -> Result<SupNorms, StateError> {
    let phi = f.phi.as_ref().ok_or_else(|| StateError::NotBounded { label: f.label.clone() })?;
    let grid = SampleGrid::uniform(-20.0, 20.0, points);
    let (m, big_m) = range.unwrap_or_else(|| {
        grid.points().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            let v = phi.eval_real(x).map(|v| v.re).unwrap_or(f64::NAN);
            (lo.min(v), hi.max(v))
        })
    });
    let fac = (2.0 * PI).powf(0.25);
    let fz = factorize(f);
    let sup = |e: &Expr| grid.points().iter().map(|&x| e.eval_real(x).map(|v| v.norm()).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    Ok(SupNorms {
        phi_min: m,
        phi_max: big_m,
        bound_a: f.n_phi.norm() * fac * (f.k * f.k / 4.0 - m).exp(),
        bound_b: f.n_psi.norm() * fac * (f.k * f.k / 4.0 + big_m).exp(),
        measured_a: sup(&fz.rho_a),
        measured_b: sup(&fz.rho_b),
    })
}

/// `P_n` as rational coefficient list; side-independent by construction.
pub fn exact_coefficients(s: &StateFn) -> Option<Vec<BigRational>> {
    s.exact_poly().map(|p| p.coeffs().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::family::{asymmetric, bounded_cos, build_bounded, presets, quartic, NormSplit};
    use crate::grid::DEFAULT_SEED;
    use num_traits::{One, Zero};

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn vacuum_matches_constant() {
        let f = Arc::new(asymmetric(0.5));
        let v = eigenstate(&f, Side::A, 0);
        assert!((v.value(0.0) - f.n_phi).norm() < 1e-16);
        let z = apply_ladder(LadderOp::A, &v).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.value(1.3), Complex64::new(0.0, 0.0));
        let w = apply_ladder(LadderOp::BDag, &eigenstate(&f, Side::B, 0)).unwrap();
        assert!(w.is_zero());
    }

    #[test]
    fn first_excited_state() {
        let k = 0.5;
        let f = Arc::new(asymmetric(k));
        let s = eigenstate(&f, Side::A, 1);
        for x in [-2.0, 0.0, 1.5] {
            let expect = f.n_phi * (x + k) * (-x * x / 4.0f64).exp();
            assert!((s.value(x) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn sides_share_polynomial() {
        let f = Arc::new(bounded_cos(0.5));
        let a = eigenstate(&f, Side::A, 7);
        let b = eigenstate(&f, Side::B, 7);
        assert_eq!(exact_coefficients(&a), exact_coefficients(&b));
        let g = Arc::new(quartic(0.5));
        assert_eq!(exact_coefficients(&a), exact_coefficients(&eigenstate(&g, Side::A, 7)));
    }

    #[test]
    fn raising_and_lowering_exact() {
        let f = Arc::new(asymmetric(0.5));
        for n in 0..10 {
            let b = apply_ladder(LadderOp::B, &eigenstate(&f, Side::A, n)).unwrap();
            assert_eq!(b.exact_poly(), Some(&pn(n + 1)));
            assert_eq!(b.factorial_index(), Some(n));
        }
        let psi3 = eigenstate(&f, Side::B, 3);
        let low = apply_ladder(LadderOp::BDag, &psi3).unwrap();
        assert_eq!(low.exact_poly(), Some(&pn(2).scale(&rat(3))));
        // sqrt(3) Psi_2 pointwise
        let psi2 = eigenstate(&f, Side::B, 2);
        for x in [-1.0, 0.3, 2.0] {
            assert!((low.value(x) - 3f64.sqrt() * psi2.value(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn side_mismatch_is_an_error() {
        let f = Arc::new(asymmetric(0.5));
        let psi = eigenstate(&f, Side::B, 2);
        assert!(matches!(apply_ladder(LadderOp::A, &psi), Err(StateError::SideMismatch { .. })));
        let phi = eigenstate(&f, Side::A, 2);
        assert!(apply_ladder(LadderOp::ADag, &phi).is_err());
    }

    #[test]
    fn number_operator_exact() {
        let f = Arc::new(asymmetric(0.5));
        assert!(apply_number(&eigenstate(&f, Side::A, 0)).unwrap().is_zero());
        let n5 = apply_number(&eigenstate(&f, Side::A, 5)).unwrap();
        assert_eq!(n5.exact_poly(), Some(&pn(5).scale(&rat(5))));
        let n2 = apply_number(&eigenstate(&f, Side::B, 2)).unwrap();
        assert_eq!(n2.exact_poly(), Some(&pn(2).scale(&rat(2))));
    }

    #[test]
    fn commutator_exact_on_polynomials() {
        let f = Arc::new(quartic(0.5));
        for n in 0..=30 {
            let s = eigenstate(&f, Side::A, n);
            let ab = apply_ladder(LadderOp::A, &apply_ladder(LadderOp::B, &s).unwrap()).unwrap();
            let ba = apply_ladder(LadderOp::B, &apply_ladder(LadderOp::A, &s).unwrap()).unwrap();
            let diff = ab.exact_poly().unwrap() - ba.exact_poly().unwrap();
            assert_eq!(&diff, s.exact_poly().unwrap());
        }
    }

    #[test]
    fn series_ladder_matches_exact() {
        let f = Arc::new(asymmetric(0.5));
        let coeffs: Vec<Complex64> = (0..6).map(|j| Complex64::new(j as f64 * 0.3, 1.0 - j as f64 * 0.1)).collect();
        let s = StateFn::series(&f, Side::A, coeffs.clone());
        let lowered = apply_ladder(LadderOp::A, &s).unwrap();
        let expect = (1..6)
            .map(|j| apply_ladder(LadderOp::A, &eigenstate(&f, Side::A, j)).unwrap().scaled(coeffs[j]))
            .fold(StateFn::series(&f, Side::A, vec![]), |acc, t| acc.combine(Complex64::one(), &t, Complex64::one()).unwrap());
        for x in [-1.0, 0.0, 2.5] {
            assert!((lowered.value(x) - expect.value(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn symbolic_matches_numeric_derivative() {
        let f = Arc::new(bounded_cos(0.5));
        for (op, side) in [(LadderOp::A, Side::A), (LadderOp::B, Side::A), (LadderOp::BDag, Side::B), (LadderOp::ADag, Side::B)] {
            let s = eigenstate(&f, side, 4);
            for x in [-1.5, 0.2, 1.7] {
                let (num, sym) = ladder_crosscheck(op, &s, x, 1e-5).unwrap();
                assert!((num - sym).norm() < 1e-7 * (1.0 + sym.norm()), "{op:?} {x}");
            }
        }
    }

    #[test]
    fn factorization_identities() {
        let grid = SampleGrid::standard(DEFAULT_SEED);
        for f in presets(0.5) {
            let fz = factorize(&f);
            let window = f.pointwise_window(&grid);
            assert!(fz.product_residual(&window) <= 1e-12, "{}", f.label);
            for n in 0..=15 {
                let (a, b) = (eigenstate(&f, Side::A, n), eigenstate(&f, Side::B, n));
                for &x in window.points() {
                    let c = fz.cn(n, x);
                    let ra = fz.rho_a.eval_real(x).unwrap();
                    let rb = fz.rho_b.eval_real(x).unwrap();
                    let (pa, pb) = (a.value(x), b.value(x));
                    assert!((pa - c * ra).norm() <= 1e-12 * pa.norm().max(1.0), "{} n={n} x={x}", f.label);
                    assert!((pb - c * rb).norm() <= 1e-12 * pb.norm().max(1.0), "{} n={n} x={x}", f.label);
                }
            }
        }
    }

    #[test]
    fn asymmetric_rho_closed_form() {
        let k = 0.5;
        let f = asymmetric(k);
        let fz = factorize(&f);
        for x in [-3.0, 0.0, 4.0] {
            let expect = f.n_phi.re * (2.0 * PI).powf(0.25) * ((2.0 * k * x + k * k) / 4.0).exp();
            assert!((fz.rho_a.eval_real(x).unwrap().re - expect).abs() < 1e-13 * expect);
        }
    }

    #[test]
    fn metric_multiplier_maps_psi_to_phi() {
        let f = Arc::new(bounded_cos(0.5));
        let s = metric_multiplier(&f);
        let window = f.pointwise_window(&SampleGrid::standard(DEFAULT_SEED));
        for n in 0..=10 {
            let (a, b) = (eigenstate(&f, Side::A, n), eigenstate(&f, Side::B, n));
            for &x in window.points() {
                let m = s.eval_real(x).unwrap();
                assert!((m * b.value(x) - a.value(x)).norm() <= 1e-10);
                assert!(m.re > 0.0);
            }
        }
        let zero_phi = build_bounded(Expr::real(0.0), 0.5, NormSplit::Symmetric);
        let m = metric_multiplier(&zero_phi);
        let m0 = m.eval_real(0.0).unwrap();
        for x in [-4.0, 1.0, 9.0] {
            assert!((m.eval_real(x).unwrap() - m0).norm() < 1e-12);
        }
    }

    #[test]
    fn sup_bounds() {
        let f = bounded_cos(0.5);
        let s = sup_norm_bounds(&f, None, 10_000).unwrap();
        assert!((s.phi_min + 1.0).abs() < 1e-6 && (s.phi_max - 1.0).abs() < 1e-6);
        assert!(s.measured_a <= s.bound_a + 1e-9);
        assert!(s.measured_b <= s.bound_b + 1e-9);
        let g = build_bounded(parse("0").unwrap(), 0.0, NormSplit::Symmetric);
        let s = sup_norm_bounds(&g, Some((0.0, 0.0)), 100).unwrap();
        let n = g.n_phi.re * (2.0 * PI).powf(0.25);
        assert!((s.bound_a - n).abs() < 1e-15 && (s.bound_b - n).abs() < 1e-15);
        assert!(sup_norm_bounds(&asymmetric(0.5), None, 10).is_err());
    }

    #[test]
    fn exact_basis_conversion() {
        let p = &pn(4).mul_u() - &pn(3);
        let c = basis_from_exact(&p, 4);
        // u He_4 = He_5 + 4 He_3, minus He_3
        let s5 = (120f64 / 24.0).sqrt();
        let s3 = (6f64 / 24.0).sqrt();
        assert!((c[5].re - s5).abs() < 1e-15 && (c[3].re - 3.0 * s3).abs() < 1e-15);
        assert!(c[4].re.is_zero());
    }
}
