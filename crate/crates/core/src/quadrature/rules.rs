//! Gaussian rules by Newton iteration on the three-term recurrences, plus an
//! adaptive Simpson integrator used as an independent reference.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Hermite,
    Legendre,
    Laguerre,
}

fn cached(kind: Kind, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<(Kind, usize), Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("poisoned").get(&(kind, n)) {
        return Arc::clone(r);
    }
    let rule = Arc::new(build(n));
    cache.lock().expect("poisoned").insert((kind, n), Arc::clone(&rule));
    rule
}

/// Nodes and weights for `int e^{-y^2} f(y) dy`.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    cached(Kind::Hermite, n, build_hermite)
}

/// Nodes and weights for `int_{-1}^{1} f(t) dt`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    cached(Kind::Legendre, n, build_legendre)
}

/// Nodes and weights for `int_0^inf e^{-t} f(t) dt`.
pub fn gauss_laguerre(n: usize) -> Arc<Rule> {
    cached(Kind::Laguerre, n, build_laguerre)
}

const EPS: f64 = 3e-15;
const MAX_ITER: usize = 100;

/// Orthonormal Hermite function `psi_n(z)` and `sqrt(2n) psi_{n-1}(z)`,
/// which equals `psi_n'(z) + z psi_n(z)`.
fn hermite_function(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25) * (-z * z / 2.0).exp();
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

fn build_hermite(n: usize) -> Rule {
    // bracket the nonnegative roots by a sign scan, then polish
    let top = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let step = 0.25 * PI / (2.0 * n as f64 + 1.0).sqrt();
    let mut roots = Vec::with_capacity(n.div_ceil(2));
    if n % 2 == 1 {
        roots.push(0.0);
    }
    let mut a = if n % 2 == 1 { step / 2.0 } else { 0.0 };
    let mut fa = hermite_function(n, a).0;
    while a < top && roots.len() < n.div_ceil(2) {
        let b = a + step;
        let fb = hermite_function(n, b).0;
        if fa == 0.0 || fa.signum() != fb.signum() {
            roots.push(polish(n, a, b));
        }
        a = b;
        fa = fb;
    }
    assert_eq!(roots.len(), n.div_ceil(2), "Gauss-Hermite root scan missed roots for n = {n}");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &z in roots.iter().rev() {
        let (_, pp) = hermite_function(n, z);
        // pp carries e^{-z^2/2}; undo it in log space
        let w = (2f64.ln() - z * z - 2.0 * pp.abs().ln()).exp();
        nodes.push(-z);
        weights.push(w);
    }
    let skip = usize::from(n % 2 == 1);
    for (i, &z) in roots.iter().enumerate().skip(skip) {
        nodes.push(z);
        weights.push(weights[roots.len() - 1 - i]);
    }
    Rule { nodes, weights }
}

/// Newton from the bracket midpoint, falling back to bisection.
fn polish(n: usize, mut a: f64, mut b: f64) -> f64 {
    let fa = hermite_function(n, a).0;
    let mut z = (a + b) / 2.0;
    for _ in 0..MAX_ITER {
        let (p, pp) = hermite_function(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == fa.signum() {
            a = z;
        } else {
            b = z;
        }
        // psi' = pp - z psi and at a root psi' = pp
        let d = pp - z * p;
        let mut next = z - p / d;
        if !(next > a && next < b) {
            next = (a + b) / 2.0;
        }
        if (next - z).abs() <= EPS * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

fn build_legendre(n: usize) -> Rule {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..MAX_ITER {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule { nodes: x, weights: w }
}

fn build_laguerre(n: usize) -> Rule {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..MAX_ITER {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    Rule { nodes: x, weights: w }
}

/// `int_a^b f` with an n-point Gauss-Legendre rule.
pub fn integrate_legendre(n: usize, a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let rule = gauss_legendre(n);
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| f(mid + half * t) * *w)
        .sum::<Complex64>()
        * half
}

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
