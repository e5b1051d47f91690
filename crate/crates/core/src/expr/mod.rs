//! Symbolic expressions in one real variable `x` with complex constants.
//!
//! This is the input language for superpotentials. Trees are immutable once
//! built; differentiation and conjugation return new trees and evaluation is
//! a pure function of the tree and the argument.

mod parse;

pub use parse::{parse, substitute_param, ParseError};

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Unary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Log,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
        Func::Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Principal-branch functions whose conjugate symmetry breaks on the
    /// negative real axis.
    pub fn has_branch_cut(self) -> bool {
        matches!(self, Func::Sqrt | Func::Log)
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: Complex64 },
    #[error("log of zero at x = {x}")]
    LogOfZero { x: Complex64 },
}

impl Expr {
    pub fn real(value: f64) -> Expr {
        Expr::Const(Complex64::new(value, 0.0))
    }

    pub fn constant(value: Complex64) -> Expr {
        Expr::Const(value)
    }

    pub fn x() -> Expr {
        Expr::X
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, value: f64) -> bool {
        matches!(self, Expr::Const(c) if c.re == value && c.im == 0.0)
    }

    // Smart constructors. They fold constants with the same floating-point
    // operation evaluation would perform and drop additive/multiplicative
    // identities, nothing more.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(p), Expr::Const(q)) => Expr::Const(p + q),
            _ if a.is_const(0.0) => b,
            _ if b.is_const(0.0) => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(p), Expr::Const(q)) => Expr::Const(p - q),
            _ if b.is_const(0.0) => a,
            _ if a.is_const(0.0) => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(p), Expr::Const(q)) => Expr::Const(p * q),
            _ if a.is_const(0.0) || b.is_const(0.0) => Expr::real(0.0),
            _ if a.is_const(1.0) => b,
            _ if b.is_const(1.0) => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(p), Expr::Const(q)) if !q.is_zero_value() => Expr::Const(p / q),
            _ if b.is_const(1.0) => a,
            _ if a.is_const(0.0) && !b.is_const(0.0) => Expr::real(0.0),
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(base: Expr, n: i32) -> Expr {
        match (&base, n) {
            (_, 0) => Expr::real(1.0),
            (_, 1) => base,
            (Expr::Const(c), _) if n > 0 || !c.is_zero_value() => Expr::Const(c.powi(n)),
            _ => Expr::Pow(Box::new(base), n),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::func(Func::Exp, arg)
    }

    /// Evaluate at a complex argument.
    pub fn eval(&self, x: Complex64) -> Result<Complex64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::X => x,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den.is_zero_value() {
                    return Err(EvalError::DivisionByZero { x });
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base.is_zero_value() {
                    return Err(EvalError::DivisionByZero { x });
                }
                base.powi(*n)
            }
            Expr::Func(f, a) => {
                let u = a.eval(x)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Sqrt => u.sqrt(),
                    Func::Log => {
                        if u.is_zero_value() {
                            return Err(EvalError::LogOfZero { x });
                        }
                        u.ln()
                    }
                }
            }
        })
    }

    pub fn eval_real(&self, x: f64) -> Result<Complex64, EvalError> {
        self.eval(Complex64::new(x, 0.0))
    }

    /// Exact symbolic derivative with respect to `x`.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::real(0.0),
            Expr::X => Expr::real(1.0),
            Expr::Neg(a) => Expr::neg(a.differentiate()),
            Expr::Add(a, b) => Expr::add(a.differentiate(), b.differentiate()),
            Expr::Sub(a, b) => Expr::sub(a.differentiate(), b.differentiate()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.differentiate(), (**b).clone()),
                Expr::mul((**a).clone(), b.differentiate()),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = Expr::sub(
                    Expr::mul(a.differentiate(), (**b).clone()),
                    Expr::mul((**a).clone(), b.differentiate()),
                );
                Expr::div(num, Expr::pow((**b).clone(), 2))
            }
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::real(f64::from(*n)), Expr::pow((**a).clone(), n - 1)),
                a.differentiate(),
            ),
            Expr::Func(f, a) => {
                let inner = a.differentiate();
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::func(Func::Exp, u),
                    Func::Sin => Expr::func(Func::Cos, u),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, u)),
                    Func::Sinh => Expr::func(Func::Cosh, u),
                    Func::Cosh => Expr::func(Func::Sinh, u),
                    Func::Sqrt => {
                        return Expr::div(inner, Expr::mul(Expr::real(2.0), Expr::func(Func::Sqrt, u)))
                    }
                    Func::Log => return Expr::div(inner, u),
                };
                Expr::mul(outer, inner)
            }
        }
    }

    /// The expression whose value at real `x` is the conjugate of this one's.
    ///
    /// Exact away from the branch cuts of `sqrt` and `log`; see
    /// [`Expr::touches_branch_cut`].
    pub fn conjugate(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::X => Expr::X,
            Expr::Neg(a) => Expr::Neg(Box::new(a.conjugate())),
            Expr::Add(a, b) => Expr::Add(Box::new(a.conjugate()), Box::new(b.conjugate())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.conjugate()), Box::new(b.conjugate())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.conjugate()), Box::new(b.conjugate())),
            Expr::Div(a, b) => Expr::Div(Box::new(a.conjugate()), Box::new(b.conjugate())),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.conjugate()), *n),
            Expr::Func(f, a) => Expr::Func(*f, Box::new(a.conjugate())),
        }
    }

    /// True when some `sqrt`/`log` argument lies on the negative real axis at
    /// `x`, where the principal branch is discontinuous and conjugation does
    /// not commute with evaluation.
    pub fn touches_branch_cut(&self, x: f64) -> Result<bool, EvalError> {
        let z = Complex64::new(x, 0.0);
        let mut hit = false;
        self.visit(&mut |node| {
            if let Expr::Func(f, arg) = node {
                if f.has_branch_cut() {
                    let u = arg.eval(z)?;
                    if u.re < 0.0 && u.im == 0.0 {
                        hit = true;
                    }
                }
            }
            Ok(())
        })?;
        Ok(hit)
    }

    /// True when the tree contains any non-real constant.
    pub fn has_complex_constants(&self) -> bool {
        let mut found = false;
        let _ = self.visit(&mut |node| {
            if let Expr::Const(c) = node {
                found |= c.im != 0.0;
            }
            Ok(())
        });
        found
    }

    fn visit<F>(&self, f: &mut F) -> Result<(), EvalError>
    where
        F: FnMut(&Expr) -> Result<(), EvalError>,
    {
        f(self)?;
        match self {
            Expr::Const(_) | Expr::X => Ok(()),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f)?;
                b.visit(f)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.im != 0.0 || c.re.is_sign_negative() => 3,
            Expr::Const(_) | Expr::X | Expr::Func(..) => 5,
        }
    }
}

trait ZeroValue {
    fn is_zero_value(&self) -> bool;
}

impl ZeroValue for Complex64 {
    fn is_zero_value(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

fn write_real(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that parses back to the same f64.
    if v.is_sign_negative() {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.im == 0.0 {
        return write_real(f, c.re);
    }
    let mag = c.im.abs();
    let imag = if mag == 1.0 { "i".to_string() } else { format!("{mag:?} * i") };
    if c.re == 0.0 && !c.re.is_sign_negative() {
        if c.im > 0.0 {
            if mag == 1.0 {
                write!(f, "i")
            } else {
                write!(f, "({imag})")
            }
        } else {
            write!(f, "(-{imag})")
        }
    } else {
        write!(f, "(")?;
        write_real(f, c.re)?;
        let sign = if c.im > 0.0 { '+' } else { '-' };
        write!(f, " {sign} {imag})")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical printing: single spaces around binary `+ - * /`, none around
/// `^`, and parentheses wherever re-parsing would otherwise regroup the tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::X => write!(f, "x"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, a.precedence() < 4)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => ("+", 1),
                    Expr::Sub(..) => ("-", 1),
                    Expr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                write_operand(f, a, a.precedence() < prec)?;
                write!(f, " {op} ")?;
                write_operand(f, b, b.precedence() <= prec || matches!(**b, Expr::Neg(_)))
            }
            Expr::Pow(a, n) => {
                write_operand(f, a, a.precedence() < 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn ev(src: &str, x: f64) -> Complex64 {
        parse(src).unwrap().eval_real(x).unwrap()
    }

    #[test]
    fn evaluates_simple_forms() {
        assert_eq!(ev("x^2/4", 1.0), Complex64::new(0.25, 0.0));
        assert_eq!(ev("x^2/4", 2.0), Complex64::new(1.0, 0.0));
        assert_eq!(ev("cos(x)", 0.0), Complex64::new(1.0, 0.0));
        assert_eq!(ev("exp(-x^2/2)", 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn sin_of_imaginary_unit() {
        let e = parse("sin(x)").unwrap();
        let v = e.eval(Complex64::new(0.0, 1.0)).unwrap();
        // series oracle: sin(i) = i * sum 1/(2j+1)!
        let mut series = 0.0;
        let mut fact = 1.0;
        for j in 0..20 {
            if j > 0 {
                fact *= ((2 * j) * (2 * j + 1)) as f64;
            }
            series += 1.0 / fact;
        }
        assert!(v.re.abs() < 1e-15);
        assert_relative_eq!(v.im, series, max_relative = 1e-14);
        assert_relative_eq!(v.im, 1.1752011936438014, max_relative = 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let d = parse("x^2/4").unwrap().differentiate();
        for x in [-3.0, 0.5, 2.0] {
            assert_relative_eq!(d.eval_real(x).unwrap().re, x / 2.0, max_relative = 1e-15);
        }
        let d = parse("cos(x)").unwrap().differentiate();
        assert_relative_eq!(d.eval_real(0.7).unwrap().re, -(0.7f64).sin(), max_relative = 1e-15);
        let d = parse("exp(x^2/4)").unwrap().differentiate();
        assert_relative_eq!(d.eval_real(2.0).unwrap().re, E, max_relative = 1e-15);
    }

    #[test]
    fn conjugate_examples() {
        let c = parse("i*x").unwrap().conjugate();
        assert_eq!(c.eval_real(1.0).unwrap(), Complex64::new(0.0, -1.0));
        let e = parse("x^2").unwrap();
        assert_eq!(e.conjugate().eval_real(1.7).unwrap(), e.eval_real(1.7).unwrap());
        let c = parse("exp(i*x)").unwrap().conjugate();
        let v = c.eval_real(PI).unwrap();
        assert_relative_eq!(v.re, -1.0, max_relative = 1e-15);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let e = parse("1/x").unwrap();
        assert!(matches!(e.eval_real(0.0), Err(EvalError::DivisionByZero { .. })));
        let e = parse("log(x)").unwrap();
        assert!(matches!(e.eval_real(0.0), Err(EvalError::LogOfZero { .. })));
        let e = parse("x^(-2)").unwrap();
        assert!(e.eval_real(0.0).is_err());
    }

    #[test]
    fn branch_cut_is_reported() {
        let e = parse("sqrt(x)").unwrap();
        assert!(e.touches_branch_cut(-1.0).unwrap());
        assert!(!e.touches_branch_cut(1.0).unwrap());
        assert!(!parse("x^2").unwrap().touches_branch_cut(-1.0).unwrap());
    }

    #[test]
    fn printing_is_canonical() {
        assert_eq!(parse("x^2/4+cos( x )").unwrap().to_string(), "x^2 / 4.0 + cos(x)");
        assert_eq!(parse("x - (x - 1)").unwrap().to_string(), "x - (x - 1.0)");
        assert_eq!(parse("-x^2").unwrap().to_string(), "-x^2");
        assert_eq!(parse("(2*i)*x").unwrap().to_string(), "(2.0 * i) * x");
    }

    fn productions() -> Vec<Expr> {
        [
            "x",
            "3.5",
            "-x",
            "x + x^2",
            "x^3 - 2*x",
            "x * sin(x)",
            "x / (2 + x^2)",
            "x^(-2) + x^5",
            "exp(x/3)",
            "sin(x)",
            "cos(2*x)",
            "sinh(x/2)",
            "cosh(x/4)",
            "sqrt(1 + x^2)",
            "log(2 + x^2)",
            "(1 + 0.5*i) * x^2 + exp(i*x)",
            "x^2/4 + 0.25*x + cos(x)",
            "x^2/2 + x^4",
        ]
        .iter()
        .map(|s| parse(s).unwrap())
        .collect()
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(x in 0.3f64..3.0, sign in prop::bool::ANY) {
            let x = if sign { x } else { -x };
            let h = 1e-5;
            for e in productions() {
                let d = e.differentiate().eval_real(x).unwrap();
                let fd = (e.eval_real(x + h).unwrap() - e.eval_real(x - h).unwrap()) / (2.0 * h);
                prop_assert!((d - fd).norm() <= 1e-6 * (1.0 + d.norm()), "{e}: {d} vs {fd}");
            }
        }

        #[test]
        fn print_then_parse_is_identity(x in -4.0f64..4.0) {
            prop_assume!(x.abs() > 1e-3);
            for e in productions() {
                let again = parse(&e.to_string()).unwrap();
                let a = e.eval_real(x).unwrap();
                let b = again.eval_real(x).unwrap();
                prop_assert!(a == b, "{e}: {a} vs {b}");
            }
        }

        #[test]
        fn conjugate_is_an_involution(x in -4.0f64..4.0) {
            prop_assume!(x.abs() > 1e-3);
            for e in productions() {
                let twice = e.conjugate().conjugate();
                prop_assert_eq!(twice.eval_real(x).unwrap(), e.eval_real(x).unwrap());
                let c = e.conjugate().eval_real(x).unwrap();
                let v = e.eval_real(x).unwrap();
                prop_assert!((c - v.conj()).norm() <= 1e-15 * (1.0 + v.norm()));
            }
        }

        #[test]
        fn conjugation_is_exact_on_polynomials(x in -10.0f64..10.0) {
            let e = parse("(1.5 - 2*i)*x^3 + i*x - 0.25").unwrap();
            prop_assert_eq!(e.conjugate().eval_real(x).unwrap(), e.eval_real(x).unwrap().conj());
        }
    }
}
