//! Compactly supported smooth test functions built from the mollifier bump.

use num_complex::Complex64;

use crate::expr::Expr;

/// `amplitude * exp(-1/(1 - t^2))` with `t = (x - center)/width`, zero for `|t| >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: Complex64,
}

impl Bump {
    pub fn new(center: f64, width: f64) -> Self {
        assert!(width > 0.0, "bump width must be positive");
        Bump { center, width, amplitude: Complex64::new(1.0, 0.0) }
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    fn t(&self, x: f64) -> Option<f64> {
        let t = (x - self.center) / self.width;
        (t.abs() < 1.0).then_some(t)
    }

    pub fn value(&self, x: f64) -> Complex64 {
        match self.t(x) {
            Some(t) => self.amplitude * (-1.0 / (1.0 - t * t)).exp(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        match self.t(x) {
            Some(t) => {
                let s = 1.0 - t * t;
                let g1 = -2.0 * t / (s * s);
                self.amplitude * ((-1.0 / s).exp() * g1 / self.width)
            }
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn second_derivative(&self, x: f64) -> Complex64 {
        match self.t(x) {
            Some(t) => {
                let s = 1.0 - t * t;
                let g1 = -2.0 * t / (s * s);
                let g2 = -(2.0 + 6.0 * t * t) / (s * s * s);
                self.amplitude * ((-1.0 / s).exp() * (g1 * g1 + g2) / (self.width * self.width))
            }
            None => Complex64::new(0.0, 0.0),
        }
    }

    fn same_shape(&self, other: &Bump) -> bool {
        self.center == other.center && self.width == other.width
    }
}

/// A function integrated piece by piece: each piece has its own compact support.
pub trait CompactFn: Sync {
    fn piece_count(&self) -> usize;
    fn piece_support(&self, i: usize) -> (f64, f64);
    fn piece_value(&self, i: usize, x: f64) -> Complex64;

    fn value(&self, x: f64) -> Complex64 {
        (0..self.piece_count()).map(|i| self.piece_value(i, x)).sum()
    }
}

/// Finite linear combination of bumps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestFunction {
    terms: Vec<Bump>,
}

impl TestFunction {
    pub fn bump(center: f64, width: f64) -> Self {
        Self::from(Bump::new(center, width))
    }

    pub fn terms(&self) -> &[Bump] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|b| b.value(x)).sum()
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|b| b.derivative(x)).sum()
    }

    pub fn second_derivative(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|b| b.second_derivative(x)).sum()
    }

    /// Smallest interval containing every term's support.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.terms.iter().map(Bump::support).reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = TestFunction::default();
        for b in &self.terms {
            out.push(b.with_amplitude(b.amplitude * alpha));
        }
        out
    }

    /// Adds a term, merging it with an existing bump of the same shape.
    fn push(&mut self, b: Bump) {
        if let Some(existing) = self.terms.iter_mut().find(|t| t.same_shape(&b)) {
            existing.amplitude += b.amplitude;
        } else {
            self.terms.push(b);
        }
        self.terms.retain(|t| t.amplitude != Complex64::new(0.0, 0.0));
    }

    pub fn plus(&self, other: &TestFunction) -> Self {
        let mut out = self.clone();
        for b in &other.terms {
            out.push(*b);
        }
        out
    }

    pub fn minus(&self, other: &TestFunction) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn combination(alpha: Complex64, v: &TestFunction, beta: Complex64, w: &TestFunction) -> Self {
        v.scaled(alpha).plus(&w.scaled(beta))
    }

    /// `-v' + c v` for a coefficient expression `c`, the form of `A^dagger v` and `B v`.
    pub fn apply_first_order(&self, coefficient: Expr) -> AppliedTest {
        AppliedTest { base: self.clone(), coefficient }
    }
}

impl From<Bump> for TestFunction {
    fn from(b: Bump) -> Self {
        TestFunction { terms: vec![b] }
    }
}

impl CompactFn for TestFunction {
    fn piece_count(&self) -> usize {
        self.terms.len()
    }
    fn piece_support(&self, i: usize) -> (f64, f64) {
        self.terms[i].support()
    }
    fn piece_value(&self, i: usize, x: f64) -> Complex64 {
        self.terms[i].value(x)
    }
}

/// `-v' + c(x) v` with the derivative taken in closed form.
#[derive(Clone, Debug)]
pub struct AppliedTest {
    pub base: TestFunction,
    pub coefficient: Expr,
}

impl CompactFn for AppliedTest {
    fn piece_count(&self) -> usize {
        self.base.terms.len()
    }
    fn piece_support(&self, i: usize) -> (f64, f64) {
        self.base.terms[i].support()
    }
    fn piece_value(&self, i: usize, x: f64) -> Complex64 {
        let b = &self.base.terms[i];
        let v = b.value(x);
        if v == Complex64::new(0.0, 0.0) {
            return v;
        }
        let c = self.coefficient.eval_real(x).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        -b.derivative(x) + c * v
    }
}
