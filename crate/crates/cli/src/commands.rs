//! Individual subcommands. Each returns an [`Outcome`] whose `passed` flag
//! drives the exit code.

use num_complex::Complex64;
use pbs_core::bicoherent::{bcs_state, eigen_residual, resolution_check, Truncation, TAIL_TOL};
use pbs_core::poly::pn_sequence;
use pbs_core::quadrature::{gram_deviation, gram_matrix, reference_inner};
use pbs_core::report::canonical_json;
use pbs_core::states::eigenstate;
use pbs_core::weak::{weak_bound, weak_eigen_check, weak_functional};
use pbs_core::{Format, Side, TestFunction, VerificationReport};
use serde_json::{json, Value};

use crate::config::Config;
use crate::suites::{run_suite, Suite};

#[derive(Clone, Debug)]
pub enum Output {
    Report(VerificationReport),
    Json(Value),
    Csv(String),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub output: Output,
    pub passed: bool,
}

impl Outcome {
    /// Serializes in `format`. Reports support every format; plain JSON results only JSON;
    /// CSV dumps are written as CSV.
    pub fn render(&self, format: Format) -> Result<Vec<u8>, String> {
        match (&self.output, format) {
            (Output::Report(r), f) => Ok(r.emit(f)),
            (Output::Json(v), Format::Json) => Ok(canonical_json(v).into_bytes()),
            (Output::Json(_), f) => Err(format!("this command only emits json, not {f:?}")),
            (Output::Csv(s), _) => Ok(s.clone().into_bytes()),
        }
    }
}

/// `RE+IMi`, `RE-IMi`, `RE`, or `IMi`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number '{text}' (expected RE+IMi)");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        s => s,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

/// `a:b:steps`.
pub fn parse_grid(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || format!("cannot parse grid '{text}' (expected a:b:steps)");
    if parts.len() != 3 {
        return Err(bad());
    }
    let (a, b) = (parts[0].parse::<f64>().map_err(|_| bad())?, parts[1].parse::<f64>().map_err(|_| bad())?);
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a < b) || steps == 0 {
        return Err(bad());
    }
    Ok((a, b, steps))
}

/// `CENTER,WIDTH`.
pub fn parse_bump(text: &str) -> Result<TestFunction, String> {
    let bad = || format!("cannot parse bump '{text}' (expected CENTER,WIDTH with WIDTH > 0)");
    let (c, w) = text.split_once(',').ok_or_else(bad)?;
    let (c, w): (f64, f64) = (c.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?);
    if !(w > 0.0) || !c.is_finite() || !w.is_finite() {
        return Err(bad());
    }
    Ok(TestFunction::bump(c, w))
}

pub fn suite(cfg: &Config, suite: Suite) -> Outcome {
    let rep = run_suite(cfg, suite);
    Outcome { passed: rep.passed(), output: Output::Report(rep) }
}

/// Exact coefficients of `P_0 ..= P_nmax` as numerator/denominator strings.
pub fn poly(nmax: usize, csv: bool) -> Outcome {
    let seq = pn_sequence(nmax);
    let output = if csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "power", "numerator", "denominator"]).expect("in-memory write");
        for (n, p) in seq.iter().enumerate() {
            for (power, (num, den)) in p.coeff_strings().into_iter().enumerate() {
                w.write_record([n.to_string(), power.to_string(), num, den]).expect("in-memory write");
            }
        }
        Output::Csv(String::from_utf8(w.into_inner().expect("flush")).expect("utf8"))
    } else {
        Output::Json(Value::Array(
            seq.iter()
                .enumerate()
                .map(|(n, p)| {
                    let coeffs: Vec<Value> = p
                        .coeff_strings()
                        .into_iter()
                        .map(|(num, den)| json!({"numerator": num, "denominator": den}))
                        .collect();
                    json!({"n": n, "poly": p.to_string(), "coefficients": coeffs})
                })
                .collect(),
        ))
    };
    Outcome { output, passed: true }
}

/// `x, Re/Im phi_n(x), Re/Im Psi_n(x)` on a uniform grid.
pub fn states(cfg: &Config, nmax: usize, grid: (f64, f64, usize), csv: bool) -> Result<Outcome, String> {
    let f = cfg.family().map_err(|e| e.to_string())?;
    let (a, b, steps) = grid;
    let mut columns = vec!["x".to_string()];
    for n in 0..=nmax {
        for name in ["phi", "psi"] {
            columns.push(format!("{name}_{n}_re"));
            columns.push(format!("{name}_{n}_im"));
        }
    }
    let phis: Vec<_> = (0..=nmax).map(|n| (eigenstate(&f, Side::A, n), eigenstate(&f, Side::B, n))).collect();
    let rows: Vec<Vec<f64>> = (0..=steps)
        .map(|i| {
            let x = a + (b - a) * i as f64 / steps as f64;
            let mut row = vec![x];
            for (p, q) in &phis {
                let (vp, vq) = (p.value(x), q.value(x));
                row.extend([vp.re, vp.im, vq.re, vq.im]);
            }
            row
        })
        .collect();
    let output = if csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&columns).map_err(|e| e.to_string())?;
        for r in &rows {
            w.write_record(r.iter().map(|v| format!("{v:.17e}"))).map_err(|e| e.to_string())?;
        }
        Output::Csv(String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?)
    } else {
        Output::Json(json!({"family": f.label, "columns": columns, "rows": rows}))
    };
    Ok(Outcome { output, passed: true })
}

pub fn biorth(cfg: &Config, nmax: usize, tol: f64) -> Result<Outcome, String> {
    let f = cfg.family().map_err(|e| e.to_string())?;
    let g = gram_matrix(&f, nmax, &cfg.quadrature);
    let dev = gram_deviation(&g);
    let passed = dev <= tol;
    let output = Output::Json(json!({
        "family": f.label,
        "nmax": nmax,
        "tolerance": tol,
        "max_deviation": dev,
        "pass": passed,
        "gram": g,
    }));
    Ok(Outcome { output, passed })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub radius: f64,
    pub nr: usize,
    pub ntheta: usize,
}

/// Bi-coherent state at `z` on side A of the configured family; with `resolution`,
/// also the disk integral for `v = w = bump`.
pub fn bcs(
    cfg: &Config,
    z: Complex64,
    nmax: Option<usize>,
    resolution: Option<Resolution>,
    bump: &TestFunction,
) -> Result<Outcome, String> {
    let f = cfg.family().map_err(|e| e.to_string())?;
    let spec = cfg.quadrature;
    let trunc = nmax.map_or(Truncation::Auto, Truncation::Fixed);
    let state = bcs_state(&f, Side::A, z, trunc).map_err(|e| e.to_string())?;
    let eig = eigen_residual(&f, Side::A, z, trunc, &spec).map_err(|e| e.to_string())?;
    let mut passed = state.tail_bound < TAIL_TOL
        && eig.numeric_residual.is_none_or(|r| r <= cfg.tolerance("eigen_l2"));
    let mut out = json!({
        "family": f.label,
        "z": z,
        "nmax": state.nmax,
        "normalization": state.normalization,
        "tail_bound": state.tail_bound,
        "eigen_residual": eig,
        "resolution_value": null,
        "reference_inner": null,
    });
    if let Some(r) = resolution {
        let res = resolution_check(bump, bump, &f, state.nmax, r.radius, r.nr, r.ntheta, &spec);
        let reference = reference_inner(bump, bump, 1e-14);
        let tol = cfg.tolerance("resolution");
        passed &= (res.value - reference).norm() <= tol && (res.swapped - reference).norm() <= tol;
        out["resolution_value"] = json!(res.value);
        out["reference_inner"] = json!(reference);
        out["resolution"] = json!(res);
    }
    out["pass"] = json!(passed);
    Ok(Outcome { output: Output::Json(out), passed })
}

/// Weak functionals `<f(z), v>`, `<g(z), v>` and the weak eigenvalue residuals.
pub fn weak(cfg: &Config, z: Complex64, v: &TestFunction, nmax: Option<usize>) -> Result<Outcome, String> {
    let f = cfg.family().map_err(|e| e.to_string())?;
    let spec = cfg.quadrature;
    let trunc = nmax.map_or(Truncation::Auto, Truncation::Fixed);
    let fv = weak_functional(&f, Side::A, z, v, trunc, &spec).map_err(|e| e.to_string())?;
    let gv = weak_functional(&f, Side::B, z, v, trunc, &spec).map_err(|e| e.to_string())?;
    let slack = (weak_bound(&f, Side::A, z, v, fv.nmax, &spec) - fv.value.norm())
        .min(weak_bound(&f, Side::B, z, v, gv.nmax, &spec) - gv.value.norm());
    let mut out = json!({
        "family": f.label,
        "z": z,
        "nmax": fv.nmax,
        "convention": "<f(z), v> = N(|z|) sum conj(z)^n / sqrt(n!) <phi_n, v>, conjugate-linear in the first slot",
        "F_value": fv.value,
        "G_value": gv.value,
        "bound_slack": slack,
    });
    let passed = match weak_eigen_check(&f, z, v, trunc, &spec) {
        Ok(r) => {
            out["eigen_residual_A"] = json!(r.residual_a);
            out["eigen_residual_B"] = json!(r.residual_b);
            out["truncation_term_A"] = json!(r.predicted_a);
            out["truncation_term_B"] = json!(r.predicted_b);
            r.within(cfg.tolerance("weak_eigen")) && slack >= 0.0
        }
        Err(e) => {
            out["eigen_residual_A"] = Value::Null;
            out["eigen_residual_B"] = Value::Null;
            out["error"] = json!(e.to_string());
            false
        }
    };
    out["pass"] = json!(passed);
    Ok(Outcome { output: Output::Json(out), passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1+0.5i").unwrap(), Complex64::new(1.0, 0.5));
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert_eq!(parse_complex("-1.5e-3+2e1i").unwrap(), Complex64::new(-1.5e-3, 20.0));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("0.75").unwrap(), Complex64::new(0.75, 0.0));
        assert!(parse_complex("1+xi").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn grid_and_bump() {
        assert_eq!(parse_grid("-5:5:100").unwrap(), (-5.0, 5.0, 100));
        assert!(parse_grid("5:-5:10").is_err());
        assert!(parse_grid("1:2").is_err());
        assert_eq!(parse_bump("0,2").unwrap(), TestFunction::bump(0.0, 2.0));
        assert!(parse_bump("0,-1").is_err());
    }

    #[test]
    fn poly_csv_rows() {
        let o = poly(2, true);
        let text = String::from_utf8(o.render(Format::Json).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,power,numerator,denominator");
        assert!(lines.contains(&"2,0,-1,1"));
        assert!(lines.contains(&"2,2,1,1"));
    }

    #[test]
    fn json_only_commands_reject_csv() {
        let o = biorth(&Config::default(), 3, 1e-10).unwrap();
        assert!(o.passed);
        assert!(o.render(Format::Csv).is_err());
    }
}
