//! Exact recursion polynomials and the numeric Hermite/Laguerre kernels.
//!
//! `P_n` is the monic probabilists' Hermite polynomial in `u = x + k`;
//! the normalized eigenfunction polynomial is `p_n = P_n / sqrt(n!)`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial in `u` with exact rational coefficients, lowest power first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScaledPoly {
    coeffs: Vec<BigRational>,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

impl ScaledPoly {
    pub fn zero() -> Self {
        ScaledPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        ScaledPoly { coeffs: vec![BigRational::one()] }
    }

    pub fn u() -> Self {
        ScaledPoly { coeffs: vec![BigRational::zero(), BigRational::one()] }
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = ScaledPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| int(c)).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, power: usize) -> BigRational {
        self.coeffs.get(power).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(One::is_one)
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * int(j as i64))
                .collect(),
        )
    }

    pub fn mul_u(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        ScaledPoly { coeffs }
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `u P - P'`, the raising step.
    pub fn raise(&self) -> Self {
        &self.mul_u() - &self.derivative()
    }

    pub fn eval_exact(&self, u: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * u + c)
    }

    /// Horner evaluation in doubles. Fine for moderate degree; the state
    /// evaluator goes through the Hermite basis instead.
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * u + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Coefficients `d_j` with `self = sum_j d_j He_j(u)`.
    pub fn to_hermite_basis(&self) -> Vec<BigRational> {
        let n = self.coeffs.len();
        let mut out = vec![BigRational::zero(); n];
        for (p, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // u^p = sum_m p!/(m! (p-2m)! 2^m) He_{p-2m}
            let pf = factorial(p);
            for m in 0..=p / 2 {
                let den = factorial(m) * factorial(p - 2 * m) * (BigInt::one() << m);
                out[p - 2 * m] += c * BigRational::new(pf.clone(), den);
            }
        }
        while out.last().is_some_and(Zero::is_zero) {
            out.pop();
        }
        out
    }

    /// Coefficients as `(numerator, denominator)` decimal strings.
    pub fn coeff_strings(&self) -> Vec<(String, String)> {
        self.coeffs
            .iter()
            .map(|c| (c.numer().to_string(), c.denom().to_string()))
            .collect()
    }
}

impl Add for &ScaledPoly {
    type Output = ScaledPoly;
    fn add(self, rhs: &ScaledPoly) -> ScaledPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ScaledPoly::from_coeffs((0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl Sub for &ScaledPoly {
    type Output = ScaledPoly;
    fn sub(self, rhs: &ScaledPoly) -> ScaledPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ScaledPoly::from_coeffs((0..n).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl Neg for &ScaledPoly {
    type Output = ScaledPoly;
    fn neg(self) -> ScaledPoly {
        ScaledPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for ScaledPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (p, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            let unit = mag.is_one();
            if !unit || p == 0 {
                write!(f, "{mag}")?;
            }
            match p {
                0 => {}
                1 => f.write_str("u")?,
                _ => write!(f, "u^{p}")?,
            }
        }
        Ok(())
    }
}

/// `P_0 ..= P_nmax` by the recursion `P_n = u P_{n-1} - P'_{n-1}`.
pub fn pn_sequence(nmax: usize) -> Vec<ScaledPoly> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(ScaledPoly::one());
    for n in 1..=nmax {
        let next = out[n - 1].raise();
        out.push(next);
    }
    out
}

/// `sum_m (-1)^m n!/(m! (n-2m)! 2^m) u^(n-2m)`.
pub fn hermite_closed_form(n: usize) -> ScaledPoly {
    let mut coeffs = vec![BigRational::zero(); n + 1];
    let nf = factorial(n);
    for m in 0..=n / 2 {
        let den = factorial(m) * factorial(n - 2 * m) * (BigInt::one() << m);
        let mut c = BigRational::new(nf.clone(), den);
        if m % 2 == 1 {
            c = -c;
        }
        coeffs[n - 2 * m] = c;
    }
    ScaledPoly::from_coeffs(coeffs)
}

/// Logarithm of a magnitude together with its sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSigned {
    pub ln_abs: f64,
    pub sign: i8,
}

impl LogSigned {
    pub fn value(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }
}

/// Physicists' Hermite `H_n(y)` by the three-term recurrence.
/// Overflows to infinity for large arguments; see [`hermite_eval_log`].
pub fn hermite_eval(n: usize, y: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * y;
    for j in 1..n {
        let h2 = 2.0 * y * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_n(y)` as log-magnitude and sign, rescaling the recurrence to stay finite.
pub fn hermite_eval_log(n: usize, y: f64) -> LogSigned {
    let mut h0 = 1.0f64;
    let mut h1 = if n == 0 { 1.0 } else { 2.0 * y };
    let mut ln_scale = 0.0f64;
    for j in 1..n {
        let h2 = 2.0 * y * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
        let m = h1.abs().max(h0.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            h0 /= m;
            h1 /= m;
            ln_scale += m.ln();
        }
    }
    if h1 == 0.0 {
        return LogSigned { ln_abs: f64::NEG_INFINITY, sign: 0 };
    }
    LogSigned { ln_abs: h1.abs().ln() + ln_scale, sign: if h1 > 0.0 { 1 } else { -1 } }
}

/// `ln L_n(-k^2)`. The series `sum_m C(n,m) k^(2m)/m!` has positive terms,
/// summed by log-sum-exp.
pub fn laguerre_neg_sq(n: usize, k: f64) -> LogSigned {
    let k2 = k * k;
    if k2 == 0.0 || n == 0 {
        return LogSigned { ln_abs: 0.0, sign: 1 };
    }
    // t_{m+1}/t_m = (n-m) k^2 / (m+1)^2
    let ln_k2 = k2.ln();
    let mut ln_terms = Vec::with_capacity(n + 1);
    let mut lt = 0.0f64;
    ln_terms.push(lt);
    for m in 0..n {
        lt += ((n - m) as f64).ln() + ln_k2 - 2.0 * ((m + 1) as f64).ln();
        ln_terms.push(lt);
    }
    let max = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ln_terms.iter().map(|t| (t - max).exp()).sum();
    LogSigned { ln_abs: max + sum.ln(), sign: 1 }
}

/// `p_0(u) ..= p_nmax(u)` with `p_j = He_j / sqrt(j!)`, by the normalized recurrence
/// `p_j = (u p_{j-1} - sqrt(j-1) p_{j-2}) / sqrt(j)`.
pub fn normalized_values(u: f64, nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax >= 1 {
        out.push(u);
    }
    for j in 2..=nmax {
        let v = (u * out[j - 1] - ((j - 1) as f64).sqrt() * out[j - 2]) / (j as f64).sqrt();
        out.push(v);
    }
    out
}

/// `ln(n!)` by direct summation (exact enough for the sizes used here).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_polynomials() {
        let p = pn_sequence(5);
        assert_eq!(p[0], ScaledPoly::one());
        assert_eq!(p[1], ScaledPoly::u());
        assert_eq!(p[2], ScaledPoly::from_integers(&[-1, 0, 1]));
        assert_eq!(p[3], ScaledPoly::from_integers(&[0, -3, 0, 1]));
        assert_eq!(p[5], ScaledPoly::from_integers(&[0, 15, 0, -10, 0, 1]));
        assert_eq!(p[5].to_string(), "u^5 - 10u^3 + 15u");
    }

    #[test]
    fn p2_vanishes_at_one() {
        let p2 = &pn_sequence(2)[2];
        assert!(p2.eval_exact(&int(1)).is_zero());
        assert_eq!(p2.eval(1.0) / 2f64.sqrt(), 0.0);
    }

    #[test]
    fn closed_form_matches_recursion() {
        let seq = pn_sequence(50);
        for (n, p) in seq.iter().enumerate() {
            assert_eq!(&hermite_closed_form(n), p, "n = {n}");
            assert!(p.is_monic());
            assert_eq!(p.degree(), Some(n));
        }
        assert_eq!(hermite_closed_form(0), ScaledPoly::one());
        assert_eq!(hermite_closed_form(2).coeffs(), &[int(-1), int(0), int(1)]);
    }

    #[test]
    fn ladder_identities_exact() {
        let seq = pn_sequence(51);
        for n in 1..=50 {
            assert_eq!(seq[n].derivative(), seq[n - 1].scale(&int(n as i64)));
            assert_eq!(seq[n].raise(), seq[n + 1]);
        }
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_eval(2, 1.0), 2.0);
        assert_eq!(hermite_eval(0, 3.7), 1.0);
        assert_eq!(hermite_eval(3, 0.0), 0.0);
        let l = hermite_eval_log(2, 1.0);
        assert!((l.value() - 2.0).abs() < 1e-15);
        assert_eq!(hermite_eval_log(3, 0.0).sign, 0);
    }

    #[test]
    fn hermite_log_survives_overflow() {
        assert!(!hermite_eval(400, 30.0).is_finite());
        let l = hermite_eval_log(400, 30.0);
        assert!(l.ln_abs.is_finite());
        // leading term dominates: H_n(y) ~ (2y)^n
        let lead = 400.0 * 60f64.ln();
        assert!((l.ln_abs - lead).abs() < 200.0);
    }

    #[test]
    fn hermite_agrees_with_exact_closed_form() {
        // H_n(y) = 2^(n/2) He_n(sqrt(2) y) = sum_p c_p 2^((n+p)/2) y^p, exact in rationals
        let seq = pn_sequence(30);
        for n in 0..=30 {
            let physicist = ScaledPoly::from_coeffs(
                seq[n]
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(p, c)| {
                        if c.is_zero() {
                            c.clone()
                        } else {
                            c * BigRational::from_integer(BigInt::one() << ((n + p) / 2))
                        }
                    })
                    .collect(),
            );
            for i in 0..=20 {
                let y = BigRational::new(BigInt::from(i - 10), BigInt::from(2));
                let exact = physicist.eval_exact(&y).to_f64().unwrap();
                let h = hermite_eval(n, y.to_f64().unwrap());
                assert!((h - exact).abs() <= 1e-10 * exact.abs().max(1.0), "n={n} y={y}");
            }
        }
    }

    fn laguerre_recurrence(n: usize, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 - x);
        if n == 0 {
            return l0;
        }
        for j in 1..n {
            let j = j as f64;
            let l2 = ((2.0 * j + 1.0 - x) * l1 - j * l0) / (j + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre_neg_sq(0, 0.7).ln_abs, 0.0);
        assert!((laguerre_neg_sq(2, 1.0).value() - 3.5).abs() < 1e-14);
        for n in 0..60 {
            let r = laguerre_recurrence(n, -0.25);
            assert!((laguerre_neg_sq(n, 0.5).value() - r).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn laguerre_large_n_is_finite_and_tracks_asymptote() {
        let k = 1.0f64;
        let l = laguerre_neg_sq(5000, k);
        assert!(l.ln_abs.is_finite());
        let trend = |n: usize| {
            let n_f = n as f64;
            laguerre_neg_sq(n, k).ln_abs - (2.0 * k * n_f.sqrt() - 0.25 * n_f.ln())
        };
        assert!((trend(5000) - trend(2500)).abs() < 1e-2);
    }

    #[test]
    fn normalized_values_match_exact() {
        let seq = pn_sequence(20);
        let v = normalized_values(1.3, 20);
        for n in 0..=20 {
            let exact = seq[n].eval(1.3) / ln_factorial(n).exp().sqrt();
            assert!((v[n] - exact).abs() < 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn hermite_basis_roundtrip() {
        let seq = pn_sequence(12);
        let d = seq[7].to_hermite_basis();
        assert_eq!(d.len(), 8);
        assert!(d[..7].iter().all(Zero::is_zero));
        assert!(d[7].is_one());
        let mixed = &seq[4].mul_u() - &seq[2];
        let d = mixed.to_hermite_basis();
        let rebuilt = d
            .iter()
            .enumerate()
            .fold(ScaledPoly::zero(), |acc, (j, c)| &acc + &seq[j].scale(c));
        assert_eq!(rebuilt, mixed);
    }

    proptest! {
        #[test]
        fn raising_then_lowering_is_number(n in 0usize..25) {
            let seq = pn_sequence(n + 1);
            let lowered = seq[n].raise().derivative();
            prop_assert_eq!(lowered, seq[n].scale(&int(n as i64 + 1)));
        }

        #[test]
        fn exact_eval_matches_float(n in 0usize..20, u in -4.0f64..4.0) {
            let p = &pn_sequence(n)[n];
            let q = BigRational::from_float(u).unwrap();
            let exact = p.eval_exact(&q).to_f64().unwrap();
            prop_assert!((p.eval(u) - exact).abs() <= 1e-9 * exact.abs().max(1.0));
        }
    }
}
