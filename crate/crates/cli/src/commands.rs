use crate::output::{c, cmat, cvec, num, Record, Rows};
use crate::{Failure, Suite};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sl2c_spherical::bispectral::{chebyshev_grid, fit_recursion, max_deviation, paper_tables, verify_recursion};
use sl2c_spherical::spherical::{
    adjoint_params, build_family, equivalents, eval_H, eval_h_derivs, FamilyDescriptor, TwoPClass,
};
use sl2c_spherical::verify::{
    closed_form_oracle, connection_check, eta_limit, linear_grid, ode_oracle, resolve_closed_form, residuals,
    series_family, EtaScaling,
};
use sl2c_spherical::Error;

/// Probe points for bispectral fits.
pub const PROBE: [f64; 6] = [0.15, 0.33, 0.52, 0.71, 0.86, 0.95];
pub const BISPECTRAL_TOL: f64 = 1e-6;
const TABLE_ELLS: [usize; 4] = [0, 1, 3, 4];

fn class_name(c: TwoPClass) -> Value {
    match c {
        TwoPClass::Generic => json!({"kind": "generic"}),
        TwoPClass::IntegerGE1(n) => json!({"kind": "integer_ge_1", "two_p": n}),
        TwoPClass::IntegerLE0(n) => json!({"kind": "integer_le_0", "two_p": n}),
        TwoPClass::HalfLine => json!({"kind": "half_line"}),
    }
}

fn base_params(ell: usize, k: Option<usize>, p: Complex64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("ell".into(), json!(ell));
    if let Some(k) = k {
        m.insert("k".into(), json!(k));
    }
    m.insert("p".into(), c(p));
    m
}

fn build(ell: usize, k: usize, p: Complex64) -> Result<FamilyDescriptor, Failure> {
    if k > ell {
        return Err(Failure::Usage(format!("k out of range: k = {k} > ell = {ell}")));
    }
    build_family(ell, k, p).map_err(Failure::from)
}

fn family_warnings(fam: &FamilyDescriptor, out: &mut Vec<String>) {
    let s = &fam.params;
    if s.mirrored {
        out.push(format!("normalized (p, k) = ({}, {}) to ({}, {})", s.input_p, s.input_k, s.p, s.k));
    }
    if s.near_integer_warning {
        out.push(format!("2p = {} is close to an integer; coefficients may be ill-conditioned", s.p * 2.0));
    }
    if fam.degenerate_a0 {
        out.push("a_0 vanishes; boundary normalization not applied".into());
    }
}

pub fn eval(ell: usize, k: usize, p: Complex64, ts: &[f64]) -> Result<(Record, Rows), Failure> {
    let fam = build(ell, k, p)?;
    let samples = ts.par_iter().map(|&t| eval_H(&fam, t)).collect::<Result<Vec<_>, Error>>()?;
    let mut rec = Record::new("eval");
    rec.parameters = base_params(ell, Some(k), p);
    rec.parameters.insert("t".into(), json!(ts));
    family_warnings(&fam, &mut rec.warnings);
    let rows: Rows = samples.iter().map(|s| (s.t, s.h.iter().copied().collect())).collect();
    rec.result = json!({
        "rows": rows.iter().map(|(t, h)| json!({"t": t, "h": cvec(h)})).collect::<Vec<_>>(),
    });
    let terms = samples.iter().flat_map(|s| s.diagnostics.iter()).map(|d| d.terms_used).max().unwrap_or(0);
    let trunc = samples.iter().flat_map(|s| s.diagnostics.iter()).map(|d| d.trunc_estimate).fold(0.0, f64::max);
    rec.diagnostics.insert("max_terms_used".into(), json!(terms));
    rec.diagnostics.insert("max_trunc_estimate".into(), num(trunc));
    Ok((rec, rows))
}

pub fn family(ell: usize, k: usize, p: Complex64) -> Result<Record, Failure> {
    let fam = build(ell, k, p)?;
    let s = &fam.params;
    let mut rec = Record::new("family");
    rec.parameters = base_params(ell, Some(k), p);
    family_warnings(&fam, &mut rec.warnings);
    let eqs: Vec<Value> = equivalents(ell, s.p, s.k).into_iter().map(|(q, j)| json!({"p": c(q), "k": j})).collect();
    let (ap, ak) = adjoint_params(ell, s.p, s.k);
    rec.result = json!({
        "lambda": c(s.lambda),
        "mu": c(s.mu),
        "normalized": {"p": c(s.p), "k": s.k, "mirrored": s.mirrored},
        "two_p_class": class_name(s.two_p_class),
        "branch": format!("{:?}", fam.branch),
        "a": cvec(fam.a.iter()),
        "alpha": cvec(fam.alpha.iter()),
        "eigenvector_index": fam.eigen_index,
        "equivalents": eqs,
        "unitarizable": fam.unitarizable,
        "adjoint": {"p": c(ap), "k": ak},
        "principal_series": {"v": c(fam.vr.0), "r": fam.vr.1},
        "omega_eigenvalue": c(fam.omega_eig),
        "omega_bar_eigenvalue": c(fam.omega_bar_eig),
    });
    Ok(rec)
}

/// One verification line.
struct Check {
    suite: &'static str,
    name: String,
    k: Option<usize>,
    value: f64,
    tol: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tol
    }

    fn to_value(&self) -> Value {
        json!({
            "suite": self.suite,
            "name": self.name,
            "k": self.k,
            "value": num(self.value),
            "tol": self.tol,
            "pass": self.pass(),
        })
    }
}

/// Accuracy floors of the limit and oracle checks; a requested `--tol`
/// below these is raised to them.
pub const ETA_POWER_FLOOR: f64 = 1e-5;
pub const ETA_LOG_FLOOR: f64 = 1e-4;
pub const ORACLE_FLOOR: f64 = 1e-7;
pub const CLOSED_FORM_FLOOR: f64 = 1e-9;
pub const CONNECTION_FLOOR: f64 = 1e-10;

pub fn verify(
    ell: usize,
    p: Complex64,
    k: Option<usize>,
    grid_n: usize,
    tol: f64,
    suite: Suite,
) -> Result<(Record, bool), Failure> {
    if grid_n < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let ks: Vec<usize> = match k {
        Some(k) if k > ell => return Err(Failure::Usage(format!("k out of range: k = {k} > ell = {ell}"))),
        Some(k) => vec![k],
        None => (0..=ell).collect(),
    };
    let fams = ks.iter().map(|&k| build(ell, k, p)).collect::<Result<Vec<_>, _>>()?;
    let mut rec = Record::new("verify");
    rec.parameters = base_params(ell, k, p);
    rec.parameters.insert("grid".into(), json!(grid_n));
    rec.parameters.insert("tol".into(), json!(tol));
    rec.parameters.insert("suite".into(), json!(suite.name()));
    for f in &fams {
        family_warnings(f, &mut rec.warnings);
    }
    rec.warnings.dedup();
    let grid = linear_grid(0.05, 0.95, grid_n);
    let mut checks = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;

    for (fam, &k) in fams.iter().zip(&ks) {
        if want(Suite::Residual) {
            let r = residuals(fam, &grid)?;
            checks.push(Check { suite: "residual", name: "max_d".into(), k: Some(k), value: r.max_d, tol });
            checks.push(Check { suite: "residual", name: "max_e".into(), k: Some(k), value: r.max_e, tol });
        }
        if want(Suite::Limits) {
            let half_line = fam.params.two_p_class == TwoPClass::HalfLine;
            if half_line {
                rec.warnings.push(format!("k = {k}: no t -> 0 limit statement on Re 2p = 1 off the real axis"));
            } else {
                let e = eta_limit(fam)?;
                let (name, floor) = match e.scaling {
                    EtaScaling::Power => ("eta_power", ETA_POWER_FLOOR),
                    EtaScaling::Log => ("eta_log", ETA_LOG_FLOOR),
                };
                checks.push(Check { suite: "limits", name: name.into(), k: Some(k), value: e.rel_error, tol: tol.max(floor) });
            }
        }
        if want(Suite::Oracle) {
            oracle_checks(fam, k, tol, &mut checks, &mut rec.warnings)?;
        }
    }
    if want(Suite::Connection) {
        let q = fams[0].params.p;
        let mut worst: f64 = 0.0;
        let mut used = 0;
        for i in 0..=ell.max(1) {
            for t in [0.25, 0.5, 0.75] {
                match connection_check(q, i, t) {
                    Ok(r) => {
                        worst = worst.max(r);
                        used += 1;
                    }
                    Err(Error::InvalidParameter(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if used > 0 {
            checks.push(Check { suite: "connection", name: "identity".into(), k: None, value: worst, tol: tol.max(CONNECTION_FLOOR) });
        } else {
            rec.warnings.push(format!("connection identity not admissible at 2p = {}", q * 2.0));
        }
    }

    let ok = checks.iter().all(Check::pass);
    let worst = checks
        .iter()
        .filter(|c| !c.pass())
        .max_by(|a, b| (a.value / a.tol).total_cmp(&(b.value / b.tol)));
    rec.result = json!({
        "pass": ok,
        "checks": checks.iter().map(Check::to_value).collect::<Vec<_>>(),
        "worst_offender": worst.map(Check::to_value),
    });
    Ok((rec, ok))
}

fn oracle_checks(
    fam: &FamilyDescriptor,
    k: usize,
    tol: f64,
    checks: &mut Vec<Check>,
    warnings: &mut Vec<String>,
) -> Result<(), Failure> {
    let ell = fam.ell();
    let s = &fam.params;
    let rel = |a: &nalgebra::DVector<Complex64>, b: &nalgebra::DVector<Complex64>| {
        let d = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        d / b.iter().map(|x| x.norm()).fold(1.0, f64::max)
    };
    if ell <= 2 && resolve_closed_form(ell, k, s.input_p).is_ok() {
        let mut worst: f64 = 0.0;
        for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let a = closed_form_oracle(ell, k, s.input_p, t)?;
            worst = worst.max(rel(&a, &eval_H(fam, t)?.h));
        }
        checks.push(Check { suite: "oracle", name: "closed_form".into(), k: Some(k), value: worst, tol: tol.max(CLOSED_FORM_FLOOR) });
    }
    if s.two_p_integer().is_none() {
        let (sp, sq) = series_family(fam, 400)?;
        let mut worst: f64 = 0.0;
        for t in [0.1, 0.2, 0.3] {
            worst = worst.max(rel(&(sp.eval(t) + sq.eval(t)), &eval_H(fam, t)?.h));
        }
        checks.push(Check { suite: "oracle", name: "series".into(), k: Some(k), value: worst, tol: tol.max(ORACLE_FLOOR) });
    } else {
        warnings.push(format!("k = {k}: series oracle needs non-integer 2p"));
    }
    let d = eval_h_derivs(fam, 0.5)?;
    let mut worst: f64 = 0.0;
    for t1 in [0.2, 0.8] {
        let sol = ode_oracle(ell, s.lambda, s.mu, 0.5, &d[0], &d[1], t1)?;
        worst = worst.max(rel(&sol.h, &eval_H(fam, t1)?.h));
    }
    checks.push(Check { suite: "oracle", name: "ode".into(), k: Some(k), value: worst, tol: tol.max(ORACLE_FLOOR) });
    Ok(())
}

pub enum BispectralStatus {
    Pass,
    FitFailed,
    PaperMismatch,
}

pub fn bispectral(ell: usize, p: Complex64, compare: bool, fit_n: usize) -> Result<(Record, BispectralStatus), Failure> {
    let grid = chebyshev_grid(0.2, 0.9, fit_n);
    let fit = fit_recursion(ell, p, &grid).map_err(|e| match e {
        Error::InvalidParameter(m) => Failure::Usage(m),
        e => Failure::from(e),
    })?;
    let probe = verify_recursion(&fit, &PROBE)?;
    let mut rec = Record::new("bispectral");
    rec.parameters = base_params(ell, None, p);
    rec.parameters.insert("compare_paper".into(), json!(compare));
    rec.parameters.insert("fit_grid".into(), json!(fit_n));
    let fit_res = fit.fit_residual.unwrap_or(f64::NAN);
    let mut status = if fit_res.max(probe.max_residual) > BISPECTRAL_TOL {
        BispectralStatus::FitFailed
    } else {
        BispectralStatus::Pass
    };
    let mut result = json!({
        "A": cmat(&fit.a),
        "B": cmat(&fit.b),
        "C": cmat(&fit.c),
        "fit_residual": num(fit_res),
        "probe_grid": PROBE,
        "probe_residual": num(probe.max_residual),
        "condition": fit.condition.map(num),
        "method": format!("{:?}", fit.method),
    });
    if compare {
        if TABLE_ELLS.contains(&ell) {
            let tab = paper_tables(ell, p)?;
            let dev = max_deviation(&fit, &tab);
            result["paper_deviation"] = num(dev);
            if dev > BISPECTRAL_TOL && matches!(status, BispectralStatus::Pass) {
                status = BispectralStatus::PaperMismatch;
            }
        } else {
            rec.warnings.push(format!("no tabulated recursion for ell = {ell}; comparison skipped"));
        }
    }
    rec.diagnostics.insert("tolerance".into(), json!(BISPECTRAL_TOL));
    rec.result = result;
    Ok((rec, status))
}
