//! Superpotential families `A = d/dx + w_A`, `B = -d/dx + w_B` with
//! `w_A + w_B = x + k`, so that `[A, B] = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{parse, Expr};
use crate::grid::SampleGrid;
use crate::report::{CheckRecord, VerificationReport};
use crate::states::{eigenstate, Side, StateFn};
use crate::testfn::Bump;

pub const DEFAULT_K: f64 = 0.5;

/// Labels of the built-in families.
pub const BOUNDED_COS: &str = "bounded-cos";
pub const ASYMMETRIC: &str = "asymmetric-k";
pub const QUARTIC: &str = "quartic-nonL2";

/// Largest |Re exponent| for which `e^{-exponent}` is evaluated pointwise.
pub const EXPONENT_WINDOW: f64 = 600.0;

/// How the product `N_phi * conj(N_psi)` is split between the two vacua.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSplit {
    #[default]
    Symmetric,
    PhiUnit,
}

/// `N_phi * conj(N_psi)` making `<Psi_0, phi_0> = 1`.
pub fn normalization_product(k: f64) -> f64 {
    (-k * k / 2.0).exp() / (2.0 * PI).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbsFamily {
    pub label: String,
    pub k: f64,
    pub s_a: Expr,
    pub s_b: Expr,
    /// `conj(s_B)`, the exponent of the B-side vacuum.
    pub s_b_conj: Expr,
    pub w_a: Expr,
    pub w_b: Expr,
    pub n_phi: Complex64,
    pub n_psi: Complex64,
    /// `Phi` when the family was built as `x^2/4 + kx/2 + Phi`.
    pub phi: Option<Expr>,
}

fn x_plus_k(k: f64) -> Expr {
    Expr::add(Expr::x(), Expr::real(k))
}

fn split_constants(k: f64, split: NormSplit) -> (Complex64, Complex64) {
    match split {
        NormSplit::Symmetric => {
            let n = (-k * k / 4.0).exp() / (2.0 * PI).powf(0.25);
            (Complex64::new(n, 0.0), Complex64::new(n, 0.0))
        }
        NormSplit::PhiUnit => (Complex64::new(1.0, 0.0), Complex64::new(normalization_product(k), 0.0)),
    }
}

/// `s_B = x^2/2 + kx - s_A`, `w_A = s_A'`, `w_B = x + k - w_A`.
pub fn build_family(s_a: Expr, k: f64, split: NormSplit) -> PbsFamily {
    let quad = Expr::add(
        Expr::div(Expr::pow(Expr::x(), 2), Expr::real(2.0)),
        Expr::mul(Expr::real(k), Expr::x()),
    );
    let s_b = Expr::sub(quad, s_a.clone());
    let w_a = s_a.differentiate();
    let w_b = Expr::sub(x_plus_k(k), w_a.clone());
    let (n_phi, n_psi) = split_constants(k, split);
    PbsFamily {
        label: "custom".into(),
        k,
        s_b_conj: s_b.conjugate(),
        s_a,
        s_b,
        w_a,
        w_b,
        n_phi,
        n_psi,
        phi: None,
    }
}

/// `s_A = x^2/4 + kx/2 + Phi` with `Phi` real and bounded.
pub fn build_bounded(phi: Expr, k: f64, split: NormSplit) -> PbsFamily {
    let s_a = Expr::add(
        Expr::add(
            Expr::div(Expr::pow(Expr::x(), 2), Expr::real(4.0)),
            Expr::mul(Expr::real(k / 2.0), Expr::x()),
        ),
        phi.clone(),
    );
    let mut f = build_family(s_a, k, split);
    f.phi = Some(phi);
    f
}

pub fn bounded_cos(k: f64) -> PbsFamily {
    build_bounded(parse("cos(x)").expect("literal"), k, NormSplit::Symmetric).with_label(BOUNDED_COS)
}

pub fn asymmetric(k: f64) -> PbsFamily {
    build_family(parse("x^2/4").expect("literal"), k, NormSplit::Symmetric).with_label(ASYMMETRIC)
}

pub fn quartic(k: f64) -> PbsFamily {
    build_family(parse("x^2/2 + x^4").expect("literal"), k, NormSplit::Symmetric).with_label(QUARTIC)
}

/// The three built-in families at shift `k`.
pub fn presets(k: f64) -> Vec<Arc<PbsFamily>> {
    vec![Arc::new(bounded_cos(k)), Arc::new(asymmetric(k)), Arc::new(quartic(k))]
}

pub fn preset(label: &str, k: f64) -> Option<PbsFamily> {
    match label {
        BOUNDED_COS => Some(bounded_cos(k)),
        ASYMMETRIC => Some(asymmetric(k)),
        QUARTIC => Some(quartic(k)),
        _ => None,
    }
}

impl PbsFamily {
    /// Assemble a family from explicit parts without enforcing the constraint.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        label: impl Into<String>,
        k: f64,
        s_a: Expr,
        s_b: Expr,
        w_a: Expr,
        w_b: Expr,
        n_phi: Complex64,
        n_psi: Complex64,
    ) -> Self {
        PbsFamily { label: label.into(), k, s_b_conj: s_b.conjugate(), s_a, s_b, w_a, w_b, n_phi, n_psi, phi: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn exponent(&self, side: Side) -> &Expr {
        match side {
            Side::A => &self.s_a,
            Side::B => &self.s_b_conj,
        }
    }

    pub fn vacuum_constant(&self, side: Side) -> Complex64 {
        match side {
            Side::A => self.n_phi,
            Side::B => self.n_psi,
        }
    }

    /// Same superpotential and shift.
    pub fn same_family(&self, other: &PbsFamily) -> bool {
        std::ptr::eq(self, other) || (self.k == other.k && self.s_a == other.s_a && self.s_b == other.s_b)
    }

    /// True when `s_A` is `x^2/4` (the asymmetric family with closed-form norms).
    pub fn is_asymmetric(&self) -> bool {
        [-3.0, -1.0, 0.5, 2.0, 7.0].iter().all(|&x| match self.s_a.eval_real(x) {
            Ok(v) => (v.re - x * x / 4.0).abs() <= 1e-14 * (1.0 + x * x) && v.im == 0.0,
            Err(_) => false,
        })
    }

    /// Grid points where both vacuum exponents evaluate and stay inside the
    /// range where `e^{-s}` is representable.
    pub fn pointwise_window(&self, grid: &SampleGrid) -> SampleGrid {
        grid.retain(|x| {
            [Side::A, Side::B].iter().all(|&side| match self.exponent(side).eval_real(x) {
                Ok(v) => v.re.abs() <= EXPONENT_WINDOW && v.is_finite(),
                Err(_) => false,
            })
        })
    }
}

/// Lowest vacuum state: `N_phi e^{-s_A}` or `N_psi e^{-conj(s_B)}`.
pub fn vacuum(f: &Arc<PbsFamily>, side: Side) -> StateFn {
    eigenstate(f, side, 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianData {
    pub q1: Expr,
    pub v1: Expr,
    pub v2: Expr,
}

/// `q1 = w_B - w_A`, `V1 = w_A w_B - w_A'`, `V2 = w_A w_B + w_B'`.
pub fn hamiltonian_data(f: &PbsFamily) -> HamiltonianData {
    let prod = Expr::mul(f.w_a.clone(), f.w_b.clone());
    HamiltonianData {
        q1: Expr::sub(f.w_b.clone(), f.w_a.clone()),
        v1: Expr::sub(prod.clone(), f.w_a.differentiate()),
        v2: Expr::add(prod, f.w_b.differentiate()),
    }
}

impl HamiltonianData {
    /// Largest scaled `|V2 - V1 - 1|` over the grid.
    pub fn gap_residual(&self, grid: &SampleGrid) -> f64 {
        max_scaled(grid.points(), |x| {
            let v1 = self.v1.eval_real(x)?;
            let v2 = self.v2.eval_real(x)?;
            Ok((v2 - v1 - 1.0, v1.norm() + v2.norm() + 1.0))
        })
    }
}

type Eval = Result<(Complex64, f64), crate::expr::EvalError>;

/// `max |r(x)| / max(1, m(x))` where `(r, m)` is a residual and the magnitude
/// of the terms it cancels. Evaluation errors count as infinite.
fn max_scaled(points: &[f64], f: impl Fn(f64) -> Eval) -> f64 {
    points
        .iter()
        .map(|&x| match f(x) {
            Ok((r, m)) if r.is_finite() => r.norm() / m.max(1.0),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Default tolerance for the scaled identity residuals.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Constraint, antiderivative, commutator and normalization checks on a grid.
pub fn validate_pbs(f: &PbsFamily, grid: &SampleGrid, tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::new(format!("validate:{}", f.label));
    let id = |s: &str| format!("validate.{}.{s}", f.label);
    let pts = grid.points();

    let constraint = max_scaled(pts, |x| {
        let a = f.w_a.eval_real(x)?;
        let b = f.w_b.eval_real(x)?;
        Ok((a + b - (x + f.k), a.norm() + b.norm() + (x + f.k).abs()))
    });
    rep.push(CheckRecord::new(id("constraint"), "max scaled |w_A + w_B - (x + k)|", constraint, 0.0, tol));

    let anti = max_scaled(pts, |x| {
        let a = f.s_a.eval_real(x)?;
        let b = f.s_b.eval_real(x)?;
        let q = x * x / 2.0 + f.k * x;
        Ok((a + b - q, a.norm() + b.norm() + q.abs()))
    });
    rep.push(CheckRecord::new(id("antiderivative"), "max scaled |s_A + s_B - (x^2/2 + kx)|", anti, 0.0, tol));

    rep.push(CheckRecord::new(
        id("commutator"),
        "max scaled |([A,B]v - v)(x)| over bump test functions",
        commutator_residual(f),
        0.0,
        tol,
    ));

    rep.push(CheckRecord::new(
        id("hamiltonian_gap"),
        "max scaled |V2 - V1 - 1|",
        hamiltonian_data(f).gap_residual(grid),
        0.0,
        tol,
    ));

    let prod = (f.n_phi * f.n_psi.conj()).re;
    let target = normalization_product(f.k);
    rep.push(CheckRecord::new(
        id("normalization"),
        "relative error of N_phi conj(N_psi) against e^{-k^2/2}/sqrt(2 pi)",
        ((f.n_phi * f.n_psi.conj() - target).norm() / target).max((prod - target).abs() / target),
        0.0,
        1e-14,
    ));

    let branchy = [&f.s_a, &f.w_a, &f.w_b].iter().any(|e| {
        let s = e.to_string();
        s.contains("sqrt(") || s.contains("log(")
    });
    if branchy {
        let touched = pts.iter().any(|&x| {
            [&f.s_a, &f.s_b, &f.w_a, &f.w_b]
                .iter()
                .any(|e| e.touches_branch_cut(x).unwrap_or(true))
        });
        rep.push(CheckRecord::flag(
            id("branch_cut_clear"),
            "no sqrt/log argument crosses the negative real axis on the grid",
            !touched,
        ));
    }
    rep
}

/// `ABv - BAv - v` expanded with closed-form bump derivatives, so no
/// numerical differentiation enters.
pub fn commutator_residual(f: &PbsFamily) -> f64 {
    let dwa = f.w_a.differentiate();
    let dwb = f.w_b.differentiate();
    let mut worst = 0.0f64;
    for center in [-5.0, 0.0, 5.0] {
        let b = Bump::new(center, 2.0);
        let (lo, hi) = b.support();
        for i in 1..256 {
            let x = lo + (hi - lo) * i as f64 / 256.0;
            let eval = || -> Eval {
                let (v, d1, d2) = (b.value(x), b.derivative(x), b.second_derivative(x));
                let (wa, wb) = (f.w_a.eval_real(x)?, f.w_b.eval_real(x)?);
                let (dwa, dwb) = (dwa.eval_real(x)?, dwb.eval_real(x)?);
                // A(Bv) = -v'' + w_B' v + w_B v' - w_A v' + w_A w_B v
                // B(Av) = -v'' - w_A' v - w_A v' + w_B v' + w_A w_B v
                let ab = -d2 + dwb * v + wb * d1 - wa * d1 + wa * wb * v;
                let ba = -d2 - dwa * v - wa * d1 + wb * d1 + wa * wb * v;
                let mag = d2.norm() + (dwa.norm() + dwb.norm()) * v.norm()
                    + 2.0 * (wa.norm() + wb.norm()) * d1.norm()
                    + (wa * wb).norm() * v.norm()
                    + v.norm();
                Ok((ab - ba - v, mag))
            };
            worst = worst.max(max_scaled(&[x], |_| eval()));
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    /// Weight satisfies `|e^{-s}| <= C e^{-delta |x|}` on the probe range.
    ExpDecay,
    SquareIntegrableOnly,
    NonSquareIntegrable,
}

impl Integrability {
    pub fn is_square_integrable(self) -> bool {
        !matches!(self, Integrability::NonSquareIntegrable)
    }
}

/// Heuristic classification of `e^{-Re s}` per side from samples on `10 <= |x| <= 50`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrabilityClass {
    pub side_a: Integrability,
    pub side_b: Integrability,
}

impl IntegrabilityClass {
    pub fn side(&self, side: Side) -> Integrability {
        match side {
            Side::A => self.side_a,
            Side::B => self.side_b,
        }
    }
}

const DECAY_RATE: f64 = 0.1;

fn classify_exponent(e: &Expr) -> Integrability {
    let mut worst = Integrability::ExpDecay;
    for dir in [1.0, -1.0] {
        let samples: Option<Vec<(f64, f64)>> = (10..=50)
            .map(|r| {
                let x = dir * r as f64;
                e.eval_real(x).ok().filter(|v| v.is_finite()).map(|v| (r as f64, v.re))
            })
            .collect();
        let Some(samples) = samples else {
            return Integrability::NonSquareIntegrable;
        };
        let (r0, g0) = samples[0];
        let exp_decay = samples[1..].iter().all(|&(r, g)| (g - g0) / (r - r0) >= DECAY_RATE);
        let class = if exp_decay {
            Integrability::ExpDecay
        } else {
            // e^{-2 Re s} integrable needs 2 Re s - ln|x| to grow
            let h = |(r, g): (f64, f64)| 2.0 * g - r.ln();
            let (first, last) = (h(samples[0]), h(samples[samples.len() - 1]));
            if last - first > 2.0 {
                Integrability::SquareIntegrableOnly
            } else {
                Integrability::NonSquareIntegrable
            }
        };
        worst = match (worst, class) {
            (Integrability::NonSquareIntegrable, _) | (_, Integrability::NonSquareIntegrable) => {
                Integrability::NonSquareIntegrable
            }
            (Integrability::SquareIntegrableOnly, _) | (_, Integrability::SquareIntegrableOnly) => {
                Integrability::SquareIntegrableOnly
            }
            _ => Integrability::ExpDecay,
        };
    }
    worst
}

pub fn classify_integrability(f: &PbsFamily) -> IntegrabilityClass {
    IntegrabilityClass { side_a: classify_exponent(&f.s_a), side_b: classify_exponent(&f.s_b_conj) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::substitute_param;
    use crate::grid::DEFAULT_SEED;

    fn close(e: &Expr, f: impl Fn(f64) -> f64) -> bool {
        [-3.0, -0.7, 0.0, 1.1, 4.0].iter().all(|&x| (e.eval_real(x).unwrap().re - f(x)).abs() < 1e-13)
    }

    #[test]
    fn derived_parts_of_quadratic() {
        let f = build_family(parse("x^2/4").unwrap(), 1.0, NormSplit::Symmetric);
        assert!(close(&f.w_a, |x| x / 2.0));
        assert!(close(&f.w_b, |x| x / 2.0 + 1.0));
        assert!(close(&f.s_b, |x| x * x / 4.0 + x));
    }

    #[test]
    fn bounded_cos_superpotentials() {
        let src = substitute_param("x^2/4 + k*x/2 + cos(x)", "k", 0.5);
        let f = build_family(parse(&src).unwrap(), 0.5, NormSplit::Symmetric);
        assert!(close(&f.w_a, |x| x / 2.0 + 0.25 - x.sin()));
        assert!(close(&f.w_b, |x| x / 2.0 + 0.25 + x.sin()));
        let g = bounded_cos(0.5);
        assert!(close(&g.w_a, |x| x / 2.0 + 0.25 - x.sin()));
    }

    #[test]
    fn normalization_at_zero_shift() {
        let f = asymmetric(0.0);
        let p = (f.n_phi * f.n_psi.conj()).re;
        assert!((p - 0.398_942_280_401_432_7).abs() < 1e-15);
        let g = build_family(parse("x^2/4").unwrap(), 0.8, NormSplit::PhiUnit);
        assert_eq!(g.n_phi.re, 1.0);
        assert!(((g.n_phi * g.n_psi.conj()).re / normalization_product(0.8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn presets_validate() {
        let grid = SampleGrid::standard(DEFAULT_SEED);
        for f in presets(DEFAULT_K) {
            let r = validate_pbs(&f, &grid, IDENTITY_TOL);
            assert!(r.passed(), "{}: {:?}", f.label, r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn asymmetric_residuals_vanish() {
        let grid = SampleGrid::standard(DEFAULT_SEED);
        let r = validate_pbs(&asymmetric(0.5), &grid, IDENTITY_TOL);
        for c in &r.checks[..2] {
            assert!(c.measured.unwrap() < 1e-15, "{c:?}");
        }
    }

    #[test]
    fn broken_family_fails_constraint() {
        let k = 0.5;
        let s_a = parse("x^2/4").unwrap();
        let w_a = s_a.differentiate();
        let w_b = Expr::sub(Expr::x(), w_a.clone());
        let s_b = parse("x^2/4 + 0.5*x").unwrap();
        let n = Complex64::new(1.0, 0.0);
        let f = PbsFamily::from_parts("broken", k, s_a, s_b, w_a, w_b, n, n);
        let r = validate_pbs(&f, &SampleGrid::standard(1), IDENTITY_TOL);
        let c = r.get("validate.broken.constraint").unwrap();
        assert!(!c.pass);
        assert!((c.measured.unwrap() - k).abs() < 1e-12);
    }

    #[test]
    fn bounded_commutator_small() {
        assert!(commutator_residual(&bounded_cos(0.5)) <= 1e-10);
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian_data(&asymmetric(0.0));
        assert!(close(&h.q1, |_| 0.0));
        assert!(close(&h.v1, |x| x * x / 4.0 - 0.5));
        assert!(close(&h.v2, |x| x * x / 4.0 + 0.5));
        let grid = SampleGrid::standard(3);
        for f in presets(0.5) {
            assert!(hamiltonian_data(&f).gap_residual(&grid) < 1e-12);
        }
        let h = hamiltonian_data(&bounded_cos(0.0));
        assert!(close(&h.q1, |x| 2.0 * x.sin()));
    }

    #[test]
    fn integrability_classes() {
        let c = classify_integrability(&asymmetric(0.5));
        assert_eq!(c.side_a, Integrability::ExpDecay);
        assert_eq!(c.side_b, Integrability::ExpDecay);
        let c = classify_integrability(&quartic(0.5));
        assert_eq!(c.side_a, Integrability::ExpDecay);
        assert_eq!(c.side_b, Integrability::NonSquareIntegrable);
        let c = classify_integrability(&bounded_cos(0.5));
        assert_eq!((c.side_a, c.side_b), (Integrability::ExpDecay, Integrability::ExpDecay));
        // log growth only: e^{-2 log(1+x^2)} is integrable but not exponentially small
        let f = build_family(parse("log(1 + x^2)").unwrap(), 0.0, NormSplit::Symmetric);
        assert_eq!(classify_integrability(&f).side_a, Integrability::SquareIntegrableOnly);
    }

    #[test]
    fn deterministic_build() {
        assert_eq!(quartic(0.5), quartic(0.5));
        assert!(asymmetric(0.5).is_asymmetric());
        assert!(!quartic(0.5).is_asymmetric());
    }
}
