//! Verification suites. Each suite records checks and never aborts on a failure.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use pbs_core::bicoherent::{
    asymptotic_check, deviation_slope, eigen_residual, normalization, norm_formula, radius_estimate, resolution_check,
    AlphaSequence, GrowthModel, MProfile, Truncation,
};
use pbs_core::family::{
    asymmetric, build_family, classify_integrability, presets, quartic, validate_pbs, NormSplit,
};
use pbs_core::poly::{hermite_closed_form, hermite_eval, laguerre_neg_sq, pn_sequence};
use pbs_core::quadrature::{
    doubling_gap, gram_deviation, gram_matrix, l2_norm_sq, moment_check, pair_inner, reference_inner, test_inner,
};
use pbs_core::states::{apply_ladder, apply_number, eigenstate, factorize, ladder_crosscheck, metric_multiplier, pn, sup_norm_bounds};
use pbs_core::weak::{continuity_probe, quasi_basis_partial_sums, v0_membership, weak_bound, weak_eigen_check, weak_functional};
use pbs_core::{
    bicoherent::bcs_state, parse, CheckRecord, LadderOp, PbsFamily, SampleGrid, ScaledPoly, Side, TestFunction,
    VerificationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Validate,
    Poly,
    States,
    Biorth,
    Norms,
    Bcs,
    Weak,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] =
        [Suite::Validate, Suite::Poly, Suite::States, Suite::Biorth, Suite::Norms, Suite::Bcs, Suite::Weak];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Validate => "validate",
            Suite::Poly => "poly",
            Suite::States => "states",
            Suite::Biorth => "biorth",
            Suite::Norms => "norms",
            Suite::Bcs => "bcs",
            Suite::Weak => "weak",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

/// Runs `suite` and returns its checks sorted by id, with the config echoed.
pub fn run_suite(cfg: &Config, suite: Suite) -> VerificationReport {
    let mut rep = VerificationReport::new(suite.name());
    let parts: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in parts {
        let r = match s {
            Suite::Validate => validate_suite(cfg),
            Suite::Poly => poly_suite(cfg),
            Suite::States => states_suite(cfg),
            Suite::Biorth => biorth_suite(cfg),
            Suite::Norms => norms_suite(cfg),
            Suite::Bcs => bcs_suite(cfg),
            Suite::Weak => weak_suite(cfg),
            Suite::All => unreachable!("expanded above"),
        };
        rep.extend(r);
    }
    rep.config = Some(cfg.echo());
    rep.sort();
    rep
}

/// The three presets plus the configured family when it is not one of them.
pub fn families(cfg: &Config) -> Vec<Arc<PbsFamily>> {
    let mut out = presets(cfg.k);
    if let Ok(f) = cfg.family() {
        if !out.iter().any(|p| **p == *f) {
            let f = if out.iter().any(|p| p.label == f.label) {
                Arc::new((*f).clone().with_label(format!("config-{}", f.label)))
            } else {
                f
            };
            out.push(f);
        }
    }
    out
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn validate_suite(cfg: &Config) -> VerificationReport {
    let grid = SampleGrid::standard(cfg.seed);
    let spec = cfg.quadrature;
    let mut rep = VerificationReport::new("validate");
    for f in families(cfg) {
        rep.extend(validate_pbs(&f, &grid, cfg.tolerance("identity")));
        let id = |s: &str| format!("validate.{}.{s}", f.label);
        let (va, vb) = (eigenstate(&f, Side::A, 0), eigenstate(&f, Side::B, 0));
        let pairing = pair_inner(&vb, &va, &spec).map(|v| (v - 1.0).norm()).unwrap_or(f64::INFINITY);
        rep.push(CheckRecord::new(id("vacuum_pairing"), "|<Psi_0, phi_0> - 1|", pairing, 0.0, cfg.tolerance("vacuum")));
        let killed = apply_ladder(LadderOp::A, &va).map(|s| s.is_zero()).unwrap_or(false)
            && apply_ladder(LadderOp::BDag, &vb).map(|s| s.is_zero()).unwrap_or(false);
        rep.push(CheckRecord::flag(id("vacuum_annihilated"), "A phi_0 = 0 and B^dagger Psi_0 = 0 exactly", killed));
    }
    rep
}

/// `H_n(y) = sum_p c_p 2^{(n+p)/2} y^p` exactly, from the closed-form coefficients
/// of `2^{-n/2} H_n(u/sqrt 2)`; `n + p` is always even.
fn hermite_exact(n: usize, y: &BigRational) -> f64 {
    let coeffs: Vec<BigRational> = hermite_closed_form(n)
        .coeffs()
        .iter()
        .enumerate()
        .map(|(p, cp)| {
            let two = BigRational::from_integer(2.into());
            let mut scale = BigRational::one();
            for _ in 0..(n + p) / 2 {
                scale *= &two;
            }
            cp * scale
        })
        .collect();
    ScaledPoly::from_coeffs(coeffs).eval_exact(y).to_f64().unwrap_or(f64::NAN)
}

fn poly_suite(_cfg: &Config) -> VerificationReport {
    const N: usize = 50;
    let mut rep = VerificationReport::new("poly");
    let seq = pn_sequence(N + 1);
    let closed = (0..=N).all(|n| seq[n] == hermite_closed_form(n));
    rep.push(CheckRecord::flag("poly.closed_form", "recursion P_n equals the Hermite closed form for n <= 50", closed));
    let lowering = (1..=N).all(|n| {
        let scaled = seq[n - 1].scale(&BigRational::from_integer((n as i64).into()));
        seq[n].derivative() == scaled
    });
    rep.push(CheckRecord::flag("poly.lowering", "P_n' = n P_{n-1} for n <= 50", lowering));
    let raising = (0..=N).all(|n| &seq[n].mul_u() - &seq[n].derivative() == seq[n + 1]);
    rep.push(CheckRecord::flag("poly.raising", "u P_n - P_n' = P_{n+1} for n <= 50", raising));
    let monic = (0..=N).all(|n| seq[n].degree() == Some(n) && seq[n].is_monic());
    rep.push(CheckRecord::flag("poly.monic", "deg P_n = n with leading coefficient 1", monic));

    let mut worst = 0.0f64;
    for n in 0..=30 {
        for i in -20..=20 {
            let y = BigRational::new(i.into(), 4.into());
            let exact = hermite_exact(n, &y);
            let got = hermite_eval(n, i as f64 / 4.0);
            worst = worst.max((got - exact).abs() / exact.abs().max(1.0));
        }
    }
    rep.push(CheckRecord::new(
        "poly.hermite_eval",
        "max relative error of the H_n recurrence against exact evaluation, n <= 30, |y| <= 5",
        worst,
        0.0,
        1e-10,
    ));
    let l2 = laguerre_neg_sq(2, 1.0).value();
    rep.push(CheckRecord::new("poly.laguerre", "L_2(-1) from the log-space series", l2, 3.5, 1e-13));
    rep
}

fn states_suite(cfg: &Config) -> VerificationReport {
    let grid = SampleGrid::standard(cfg.seed);
    let mut rep = VerificationReport::new("states");
    let fams = families(cfg);
    for f in &fams {
        let id = |s: &str| format!("states.{}.{s}", f.label);
        let number = (0..=30).all(|n| {
            [Side::A, Side::B].iter().all(|&side| {
                let s = eigenstate(f, side, n);
                apply_number(&s).ok().is_some_and(|r| {
                    r.exact_poly() == Some(&pn(n).scale(&BigRational::from_integer((n as i64).into())))
                        && r.factorial_index() == Some(n)
                })
            })
        });
        rep.push(CheckRecord::flag(id("number_exact"), "N phi_n = n phi_n and N^dagger Psi_n = n Psi_n exactly, n <= 30", number));
        let commutator = (0..=30).all(|n| {
            let s = eigenstate(f, Side::A, n);
            let ab = apply_ladder(LadderOp::B, &s).and_then(|t| apply_ladder(LadderOp::A, &t));
            let ba = apply_ladder(LadderOp::A, &s).and_then(|t| apply_ladder(LadderOp::B, &t));
            match (ab, ba) {
                (Ok(ab), Ok(ba)) => match (ab.exact_poly(), ba.exact_poly()) {
                    (Some(p), Some(q)) => &(p - q) == s.exact_poly().expect("eigenstate is exact"),
                    _ => false,
                },
                _ => false,
            }
        });
        rep.push(CheckRecord::flag(id("commutator_exact"), "(AB - BA) phi_n = phi_n exactly, n <= 30", commutator));

        let window = f.pointwise_window(&grid);
        let fz = factorize(f);
        rep.push(CheckRecord::new(
            id("rho_product"),
            "max |rho_A conj(rho_B) - 1| on the grid",
            fz.product_residual(&window),
            0.0,
            cfg.tolerance("factorization"),
        ));
        let mut fact = 0.0f64;
        let mut metric = 0.0f64;
        let s_phi = metric_multiplier(f);
        for &x in window.points() {
            let (ra, rb) = (fz.rho_a.eval_real(x), fz.rho_b.eval_real(x));
            let m = s_phi.eval_real(x);
            let cn = fz.cn_values(x, 15);
            for (n, cn) in cn.iter().enumerate() {
                let phi = eigenstate(f, Side::A, n).value(x);
                let psi = eigenstate(f, Side::B, n).value(x);
                let scale = phi.norm().max(1.0);
                let fa = ra.as_ref().map(|r| (phi - r * cn).norm()).unwrap_or(f64::INFINITY);
                let fb = rb.as_ref().map(|r| (psi - r * cn).norm() / psi.norm().max(1.0)).unwrap_or(f64::INFINITY);
                fact = fact.max(fa / scale).max(fb);
                if n <= 10 {
                    metric = metric.max(m.as_ref().map(|m| (m * psi - phi).norm() / scale).unwrap_or(f64::INFINITY));
                }
            }
        }
        rep.push(CheckRecord::new(
            id("factorization"),
            "max |phi_n - c_n rho_A| / max(1, |phi_n|) and likewise for Psi_n, n <= 15",
            fact,
            0.0,
            cfg.tolerance("factorization"),
        ));
        rep.push(CheckRecord::new(
            id("metric"),
            "max |S_phi Psi_n - phi_n| / max(1, |phi_n|), n <= 10",
            metric,
            0.0,
            cfg.tolerance("metric"),
        ));
        let mut cross = 0.0f64;
        for n in 0..=5 {
            for &(op, side) in &[(LadderOp::A, Side::A), (LadderOp::B, Side::A), (LadderOp::BDag, Side::B), (LadderOp::ADag, Side::B)] {
                for x in [-1.0, 0.0, 1.0] {
                    if let Ok((num, sym)) = ladder_crosscheck(op, &eigenstate(f, side, n), x, 1e-5) {
                        cross = cross.max((num - sym).norm() / sym.norm().max(1.0));
                    } else {
                        cross = f64::INFINITY;
                    }
                }
            }
        }
        rep.push(CheckRecord::new(
            id("ladder_crosscheck"),
            "central-difference ladder action against the symbolic one, n <= 5",
            cross,
            0.0,
            1e-6,
        ));
        if let Ok(sup) = sup_norm_bounds(f, None, 10_000) {
            let ok = sup.measured_a <= sup.bound_a + 1e-9 && sup.measured_b <= sup.bound_b + 1e-9;
            rep.push(CheckRecord::flag(id("sup_bounds"), "grid suprema of |rho_A|, |rho_B| within the analytic bounds", ok));
        }
    }
    let same = (0..=20).all(|n| {
        let polys: Vec<_> = fams
            .iter()
            .flat_map(|f| [Side::A, Side::B].map(|s| eigenstate(f, s, n).exact_poly().cloned()))
            .collect();
        polys.windows(2).all(|w| w[0] == w[1])
    });
    rep.push(CheckRecord::flag("states.poly_independent", "eigenstate polynomials agree across families and sides, n <= 20", same));
    rep
}

fn biorth_suite(cfg: &Config) -> VerificationReport {
    let spec = cfg.quadrature;
    let mut rep = VerificationReport::new("biorth");
    let fams = families(cfg);
    let grams: Vec<_> = fams.iter().map(|f| gram_matrix(f, cfg.nmax, &spec)).collect();
    for (f, g) in fams.iter().zip(&grams) {
        let id = |s: &str| format!("biorth.{}.{s}", f.label);
        rep.push(CheckRecord::new(
            id("gram_deviation"),
            format!("max |<Psi_m, phi_n> - delta_mn|, m, n <= {}", cfg.nmax),
            gram_deviation(g),
            0.0,
            cfg.tolerance("gram"),
        ));
        let gap = doubling_gap(&spec, |s| gram_deviation(&gram_matrix(f, cfg.nmax, s)), |a, b| (a - b).abs());
        rep.push(CheckRecord::new(id("doubling"), "change of the Gram deviation when nodes double", gap, 0.0, spec.tolerance));
    }
    let mut worst = 0.0f64;
    for i in 0..fams.len() {
        for j in i + 1..fams.len() {
            if fams[i].k == fams[j].k {
                for (ri, rj) in grams[i].iter().zip(&grams[j]) {
                    for (a, b) in ri.iter().zip(rj) {
                        worst = worst.max((a - b).norm());
                    }
                }
            }
        }
    }
    rep.push(CheckRecord::new(
        "biorth.family_independence",
        "max entrywise difference of Gram matrices between families with equal k",
        worst,
        0.0,
        cfg.tolerance("family_independence"),
    ));
    rep
}

fn norms_suite(cfg: &Config) -> VerificationReport {
    let spec = cfg.quadrature;
    let mut rep = VerificationReport::new("norms");
    let f = Arc::new(asymmetric(cfg.k));
    let top = cfg.nmax.max(30);
    for side in [Side::A, Side::B] {
        let worst = (0..=top)
            .map(|n| {
                let exact = norm_formula(&f, side, n).expect("asymmetric family");
                match l2_norm_sq(&eigenstate(&f, side, n), &spec).value() {
                    Some(q) => ((q - exact) / exact).abs(),
                    None => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max);
        let name = if side == Side::A { "phi" } else { "psi" };
        rep.push(CheckRecord::new(
            format!("norms.{}.{name}_closed_form", f.label),
            format!("max relative error of quadrature norms against the Laguerre closed form, n <= {top}"),
            worst,
            0.0,
            cfg.tolerance("norms"),
        ));
    }
    let gap = doubling_gap(
        &spec,
        |s| l2_norm_sq(&eigenstate(&f, Side::A, top), s).value().unwrap_or(f64::NAN),
        |a, b| ((a - b) / a).abs(),
    );
    rep.push(CheckRecord::new(format!("norms.{}.doubling", f.label), "relative change of ||phi_nmax||^2 when nodes double", gap, 0.0, spec.tolerance));

    let q = Arc::new(quartic(cfg.k));
    let classes = classify_integrability(&q);
    let flagged = (0..=5).all(|n| l2_norm_sq(&eigenstate(&q, Side::B, n), &spec).value().is_none())
        && !classes.side_b.is_square_integrable()
        && classes.side_a.is_square_integrable();
    rep.push(CheckRecord::flag(
        format!("norms.{}.side_b_flagged", q.label),
        "side-B states are flagged non-integrable instead of integrated",
        flagged,
    ));

    if cfg.k != 0.0 {
        let rows = asymptotic_check(cfg.k, &[100, 400, 1600, 2000]).expect("k != 0");
        let dev = |i: usize| (rows[i].ratio_a - 1.0).abs();
        rep.push(CheckRecord::new("norms.asymptotic.n2000", "|ratio - 1| at n = 2000", dev(3), 0.0, cfg.tolerance("asymptotic")));
        rep.push(CheckRecord::new(
            "norms.asymptotic.slope",
            "log-log slope of |ratio - 1| between n = 100 and n = 1600",
            deviation_slope(&rows[0], &rows[2]),
            -0.5,
            cfg.tolerance("asymptotic_slope"),
        ));
        let sides = rows.iter().map(|r| (r.ratio_b / r.ratio_a - 1.0).abs()).fold(0.0, f64::max);
        rep.push(CheckRecord::new("norms.asymptotic.side_b", "side-B ratio against side-A ratio", sides, 0.0, 1e-12));
    }
    rep
}

fn bcs_suite(cfg: &Config) -> VerificationReport {
    let spec = cfg.quadrature;
    let mut rep = VerificationReport::new("bcs");
    let zs: Vec<Complex64> = (0..=6)
        .flat_map(|i| (0..8).map(move |j| Complex64::from_polar(0.5 * i as f64, j as f64 * std::f64::consts::FRAC_PI_4)))
        .collect();

    let norm_err = zs
        .iter()
        .map(|z| (normalization(*z, 80) / (-z.norm_sqr() / 2.0).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    rep.push(CheckRecord::new(
        "bcs.normalization",
        "max relative error of N(|z|) at nmax = 80 against e^{-|z|^2/2}, |z| <= 3",
        norm_err,
        0.0,
        cfg.tolerance("normalization"),
    ));

    let f = Arc::new(asymmetric(cfg.k));
    let small: Vec<Complex64> = zs.iter().copied().filter(|z| z.norm() <= 2.0 + 1e-12).collect();
    let (mut tail, mut l2, mut sides) = (0.0f64, 0.0f64, 0.0f64);
    for &z in &small {
        match (
            eigen_residual(&f, Side::A, z, Truncation::Auto, &spec),
            eigen_residual(&f, Side::B, z, Truncation::Auto, &spec),
        ) {
            (Ok(a), Ok(b)) => {
                tail = tail.max(a.analytic_tail);
                l2 = l2.max(a.numeric_residual.unwrap_or(f64::INFINITY));
                sides = sides.max((a.analytic_tail - b.analytic_tail).abs());
            }
            _ => tail = f64::INFINITY,
        }
    }
    rep.push(CheckRecord::new(
        "bcs.tail_auto",
        "largest analytic eigenvalue residual under automatic truncation, |z| <= 2 (must be below tolerance)",
        tail,
        0.0,
        cfg.tolerance("tail"),
    ));
    rep.push(CheckRecord::new(
        format!("bcs.{}.eigen_l2", f.label),
        "max ||A phi(z) - z phi(z)|| / ||phi(z)||, |z| <= 2",
        l2,
        0.0,
        cfg.tolerance("eigen_l2"),
    ));
    rep.push(CheckRecord::new("bcs.eigen_sides", "side-A and side-B analytic tails agree", sides, 0.0, 1e-15));

    let moments = (0..=15).map(|k| moment_check(k, &spec).relative_error()).fold(0.0, f64::max);
    rep.push(CheckRecord::new(
        "bcs.moments",
        "max relative error of radial moments against k!/(2 pi), k <= 15",
        moments,
        0.0,
        cfg.tolerance("moments"),
    ));

    let norms: Vec<f64> = (0..64).map(|n| norm_formula(&f, Side::A, n).expect("asymmetric").sqrt()).collect();
    let model = GrowthModel { profile: MProfile::InverseEighthRoot, rate: Some(cfg.k.abs().exp()) };
    let ok = radius_estimate(&norms, &AlphaSequence::SqrtN, &[model]).is_ok_and(|g| g.certified && g.rho_estimate.is_infinite());
    rep.push(CheckRecord::flag(
        format!("bcs.{}.growth", f.label),
        "||phi_n|| <= A e^{|k| n} n^{-1/8} certified and the radius is infinite",
        ok,
    ));
    let b = Arc::new(pbs_core::family::bounded_cos(cfg.k));
    let norms: Vec<f64> = (0..40)
        .map(|n| l2_norm_sq(&eigenstate(&b, Side::A, n), &spec).value().map_or(f64::NAN, f64::sqrt))
        .collect();
    let model = GrowthModel { profile: MProfile::Constant, rate: Some(1.0) };
    let bound = sup_norm_bounds(&b, None, 10_000).map(|s| s.bound_a).unwrap_or(f64::NAN);
    let ok = radius_estimate(&norms, &AlphaSequence::SqrtN, &[model])
        .is_ok_and(|g| g.certified && g.a <= bound * (1.0 + 1e-9) && g.rho_estimate.is_infinite());
    rep.push(CheckRecord::flag(
        format!("bcs.{}.growth", b.label),
        "||phi_n|| <= ||rho_A||_inf certified with r = M = 1",
        ok,
    ));

    let v = TestFunction::bump(0.0, 2.0);
    let res = resolution_check(&v, &v, &f, 25, 6.0, 200, 128, &spec);
    let reference = reference_inner(&v, &v, 1e-14);
    let tol = cfg.tolerance("resolution");
    let id = |s: &str| format!("bcs.{}.resolution.{s}", f.label);
    rep.push(CheckRecord::new(
        id("value"),
        "|int <v, Psi(z)><phi(z), v> dnu - <v, v>|, bump(0, 2), nmax = 25, R = 6",
        (res.value - reference).norm(),
        0.0,
        tol,
    ));
    rep.push(CheckRecord::new(
        id("swapped"),
        "|int <v, phi(z)><Psi(z), v> dnu - <v, v>|",
        (res.swapped - reference).norm(),
        0.0,
        tol,
    ));
    rep.push(CheckRecord::new(
        id("oracle"),
        "distance of both orderings from the partial biorthogonal sums over n <= 25",
        (res.value - res.partial_sum_swapped).norm().max((res.swapped - res.partial_sum).norm()),
        0.0,
        cfg.tolerance("oracle"),
    ));
    rep.push(CheckRecord::flag(id("cutoff_clear"), "no cutoff-tail warning at R = 6", !res.cutoff_warning));
    let (l, r) = (TestFunction::bump(-6.0, 1.0), TestFunction::bump(6.0, 1.0));
    let disjoint = resolution_check(&l, &r, &f, 25, 6.0, 200, 128, &spec);
    rep.push(CheckRecord::new(
        id("disjoint"),
        "|integral| for bumps with disjoint supports",
        disjoint.value.norm().max(disjoint.swapped.norm()),
        0.0,
        tol,
    ));
    rep
}

fn weak_suite(cfg: &Config) -> VerificationReport {
    let spec = cfg.quadrature;
    let mut rep = VerificationReport::new("weak");
    let q = Arc::new(quartic(cfg.k));
    let v = TestFunction::bump(0.0, 2.0);
    let z = c(1.0, 0.5);
    let id = |s: &str| format!("weak.{}.{s}", q.label);
    let tol = cfg.tolerance("weak_eigen");

    match weak_eigen_check(&q, z, &v, Truncation::Fixed(40), &spec) {
        Ok(r) => {
            rep.push(CheckRecord::new(id("eigen_a"), "|<A^dagger v, f(z)> - z <v, f(z)>|, z = 1+0.5i, bump(0, 2)", r.residual_a, 0.0, tol));
            rep.push(CheckRecord::new(id("eigen_b"), "|<B v, g(z)> - z <v, g(z)>|, z = 1+0.5i, bump(0, 2)", r.residual_b, 0.0, tol));
            rep.push(CheckRecord::flag(id("eigen_tail"), "residuals within the truncation term plus 1e-9", r.within(1e-9)));
        }
        Err(e) => rep.push(CheckRecord::flag(id("eigen_a"), format!("weak eigenvalue check failed: {e}"), false)),
    }
    let zero = weak_eigen_check(&q, c(0.0, 0.0), &v, Truncation::Auto, &spec)
        .map(|r| r.residual_a.max(r.residual_b))
        .unwrap_or(f64::INFINITY);
    rep.push(CheckRecord::new(id("eigen_zero"), "weak residuals at z = 0", zero, 0.0, 1e-12));

    let sums = quasi_basis_partial_sums(&v, &v, &q, &[10, 20, 40, 60], &spec);
    rep.push(CheckRecord::new(
        id("quasi_basis"),
        "|S_N - <v, v>| at N = 60 for both orderings, bump(0, 2)",
        sums.final_error(),
        0.0,
        cfg.tolerance("quasi_basis"),
    ));
    let orderings = (sums.sums[3] - sums.swapped[3]).norm();
    rep.push(CheckRecord::new(id("quasi_basis_orderings"), "|S_60 - swapped S_60|", orderings, 0.0, cfg.tolerance("oracle")));
    let (l, r) = (TestFunction::bump(-3.0, 0.5), TestFunction::bump(3.0, 0.5));
    let disjoint = quasi_basis_partial_sums(&l, &r, &q, &[60], &spec);
    rep.push(CheckRecord::new(
        id("quasi_basis_disjoint"),
        "|S_60| for bumps with disjoint supports",
        disjoint.sums[0].norm().max(disjoint.swapped[0].norm()),
        0.0,
        cfg.tolerance("quasi_basis"),
    ));

    let scales: Vec<f64> = (0..8).map(|i| 0.5f64.powi(i)).collect();
    for side in [Side::A, Side::B] {
        match continuity_probe(&q, side, z, &v, &scales, Truncation::Auto, &spec) {
            Ok(p) => {
                rep.push(CheckRecord::flag(id(&format!("continuity_{side}")), "probe values halve with halved scales within 5%", p.linear));
                let bounded = p.rows.iter().all(|r| r.value <= r.bound);
                rep.push(CheckRecord::flag(id(&format!("continuity_bound_{side}")), "probe values within the functional bound", bounded));
            }
            Err(e) => rep.push(CheckRecord::flag(id(&format!("continuity_{side}")), format!("probe failed: {e}"), false)),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bounded = true;
    let mut exchange = 0.0f64;
    let mut linear = 0.0f64;
    for f in presets(cfg.k) {
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.random_range(0.0..3.0), rng.random_range(0.0..std::f64::consts::TAU));
            let v = TestFunction::bump(rng.random_range(-3.0..3.0), rng.random_range(0.3..2.0));
            let w = TestFunction::bump(rng.random_range(-3.0..3.0), rng.random_range(0.3..2.0));
            for side in [Side::A, Side::B] {
                let Ok(fv) = weak_functional(&f, side, z, &v, Truncation::Auto, &spec) else {
                    bounded = false;
                    continue;
                };
                bounded &= fv.value.norm() <= weak_bound(&f, side, z, &v, fv.nmax, &spec);
                let s = bcs_state(&f, side, z, Truncation::Auto).expect("auto truncation");
                let direct = test_inner(&v, &s.state, &spec).conj();
                exchange = exchange.max((fv.value - direct).norm() / fv.magnitude.max(f64::MIN_POSITIVE));
                let (a, b) = (c(0.7, -0.2), c(-1.3, 0.4));
                let combo = TestFunction::combination(a, &v, b, &w);
                let fw = weak_functional(&f, side, z, &w, Truncation::Auto, &spec).expect("same truncation");
                let fc = weak_functional(&f, side, z, &combo, Truncation::Auto, &spec).expect("same truncation");
                let want = a * fv.value + b * fw.value;
                let scale = (a.norm() * fv.magnitude + b.norm() * fw.magnitude).max(f64::MIN_POSITIVE);
                linear = linear.max((fc.value - want).norm() / scale);
            }
        }
    }
    rep.push(CheckRecord::flag("weak.bound", "|F(z)[v]| <= ||conj(rho) v|| N sum |z|^n/sqrt(n!) on 20 seeded (z, v) per preset and side", bounded));
    rep.push(CheckRecord::new(
        "weak.series_exchange",
        "weak series against the pairing of the truncated state, relative to N sum |z^n/sqrt(n!)| |<phi_n, v>|, |z| <= 3",
        exchange,
        0.0,
        1e-10,
    ));
    rep.push(CheckRecord::new("weak.linearity", "F(z)[a v + b w] against a F(z)[v] + b F(z)[w], relative to the absolute series", linear, 0.0, 1e-12));

    let members = presets(cfg.k).iter().all(|f| v0_membership(&v, f).member);
    rep.push(CheckRecord::flag("weak.v0_presets", "bump(0, 2) is in V0 for every preset", members));
    let pole = build_family(parse("x^2/4 + log(x^2)").expect("literal"), cfg.k, NormSplit::Symmetric);
    rep.push(CheckRecord::flag(
        "weak.v0_pole",
        "bump over the pole of w_A = x/2 + 2/x is rejected",
        !v0_membership(&v, &pole).member,
    ));
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn config_family_added_once() {
        let cfg = Config::default();
        assert_eq!(families(&cfg).len(), 3);
        let cfg = Config::load(None, &["s_A=x^2/4 + sin(x)".into(), "family_label=mine".into()]).unwrap();
        let f = families(&cfg);
        assert_eq!(f.len(), 4);
        assert_eq!(f[3].label, "mine");
        let cfg = Config::load(None, &["norm_split=phi_unit".into()]).unwrap();
        assert_eq!(families(&cfg)[3].label, "config-asymmetric-k");
    }

    #[test]
    fn hermite_oracle_examples() {
        let y = BigRational::from_integer(1.into());
        assert_eq!(hermite_exact(2, &y), 2.0);
        assert_eq!(hermite_exact(3, &BigRational::from_integer(0.into())), 0.0);
        assert_eq!(hermite_exact(0, &y), 1.0);
    }

    #[test]
    fn fast_suites_pass() {
        let cfg = Config::default();
        for s in [Suite::Validate, Suite::Poly, Suite::Norms] {
            let r = run_suite(&cfg, s);
            assert!(r.passed(), "{s}: {:?}", r.failures().collect::<Vec<_>>());
            assert!(r.checks.windows(2).all(|w| w[0].id <= w[1].id));
        }
    }
}
