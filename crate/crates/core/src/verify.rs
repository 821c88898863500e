//! Independent checks of the families: ODE residuals, `t -> 0` limits,
//! the hypergeometric connection identity, and three oracles (power series,
//! numerical integration, printed closed forms).

use crate::error::{Error, Result};
use crate::lsq::lstsq;
use crate::max_abs;
use crate::repmat::{l_matrix, structure_matrices};
use crate::specfun::{gauss2f1, pochhammer};
use crate::spherical::{equivalents, eval_check, eval_h_derivs, pq_decomposition, FamilyDescriptor};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Admissible range for residual grids.
pub const GRID_MIN: f64 = 0.02;
pub const GRID_MAX: f64 = 0.98;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn norm(v: &DVector<Complex64>) -> f64 {
    max_abs(v.iter())
}

/// `n` points evenly spaced in `[a, b]`.
pub fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub grid: Vec<f64>,
    pub d_residual: Vec<f64>,
    pub e_residual: Vec<f64>,
    pub max_d: f64,
    pub max_e: f64,
}

/// `D H` from `H`, `H'`, `H''`.
pub fn apply_d(c_sum: &DMatrix<Complex64>, t: f64, h: &[DVector<Complex64>; 3]) -> DVector<Complex64> {
    let w = 1.0 - t;
    &h[2] * cr(4.0 * t * t) - &h[1] * cr(8.0 * t * t / w) + c_sum * &h[0] * cr(4.0 * t / (w * w))
}

/// `E H` from `H`, `H'`.
pub fn apply_e(
    a0: &DMatrix<Complex64>,
    c0: &DMatrix<Complex64>,
    c1: &DMatrix<Complex64>,
    t: f64,
    h: &DVector<Complex64>,
    hp: &DVector<Complex64>,
) -> DVector<Complex64> {
    let w = 1.0 - t;
    a0 * hp * cr(-4.0 * t) + c0 * h * cr(4.0 / w) - c1 * h * cr(4.0 * t / w)
}

fn rel(r: &DVector<Complex64>, ev: Complex64, h: &DVector<Complex64>) -> f64 {
    norm(r) / (ev.norm() * norm(h) + norm(h) + 1.0)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.iter().find(|t| !(GRID_MIN..=GRID_MAX).contains(*t)) {
        Some(&t) => Err(Error::OutOfDomain(t)),
        None => Ok(()),
    }
}

/// D and E residuals of any function given through `H`, `H'`, `H''`.
pub fn ode_residuals<F>(ell: usize, lambda: Complex64, mu: Complex64, grid: &[f64], f: F) -> Result<ResidualReport>
where
    F: Fn(f64) -> Result<[DVector<Complex64>; 3]> + Sync,
{
    check_grid(grid)?;
    let s = structure_matrices(ell);
    let (a0, c0, c1) = (s.a0_c(), s.c0_c(), s.c1_c());
    let cs = &c0 + &c1;
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| {
            let h = f(t)?;
            let dr = apply_d(&cs, t, &h) - &h[0] * lambda;
            let er = apply_e(&a0, &c0, &c1, t, &h[0], &h[1]) - &h[0] * mu;
            Ok((rel(&dr, lambda, &h[0]), rel(&er, mu, &h[0])))
        })
        .collect::<Result<_>>()?;
    let d_residual: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let e_residual: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(ResidualReport {
        grid: grid.to_vec(),
        max_d: d_residual.iter().cloned().fold(0.0, f64::max),
        max_e: e_residual.iter().cloned().fold(0.0, f64::max),
        d_residual,
        e_residual,
    })
}

pub fn residuals(fam: &FamilyDescriptor, grid: &[f64]) -> Result<ResidualReport> {
    ode_residuals(fam.ell(), fam.params.lambda, fam.params.mu, grid, |t| eval_h_derivs(fam, t))
}

/// Report with only the D part filled in.
pub fn d_residual(fam: &FamilyDescriptor, grid: &[f64]) -> Result<ResidualReport> {
    let mut r = residuals(fam, grid)?;
    r.e_residual = vec![0.0; grid.len()];
    r.max_e = 0.0;
    Ok(r)
}

/// Report with only the E part filled in.
pub fn e_residual(fam: &FamilyDescriptor, grid: &[f64]) -> Result<ResidualReport> {
    let mut r = residuals(fam, grid)?;
    r.d_residual = vec![0.0; grid.len()];
    r.max_d = 0.0;
    Ok(r)
}

/// Scaling used for the `t -> 0` limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaScaling {
    /// `t^(p-1) Hc(t)`.
    Power,
    /// `Hc(t) / (sqrt(t) ln t)`, for `2p = 1`.
    Log,
}

#[derive(Debug, Clone)]
pub struct EtaLimit {
    pub scaling: EtaScaling,
    /// Extrapolated limit of the decoupled coordinates.
    pub numeric: DVector<Complex64>,
    /// `a_i (i+1)_(i+1) / (2p-1)_(i+1)`, or `-a_i Gamma(2i+2)/Gamma(i+1)^2`.
    pub predicted: DVector<Complex64>,
    /// Max componentwise error relative to `max |predicted|`.
    pub rel_error: f64,
}

/// Sample points for the extrapolation.
pub const ETA_SAMPLES: [f64; 9] = [1e-5, 1.8e-5, 3.2e-5, 5.6e-5, 1e-4, 1.8e-4, 3.2e-4, 5.6e-4, 1e-3];

/// Basis functions of the small-`t` expansion of the scaled coordinates.
fn eta_basis(scaling: EtaScaling, p: Complex64, two_p: Option<i64>) -> Vec<Box<dyn Fn(f64) -> Complex64>> {
    let mut b: Vec<Box<dyn Fn(f64) -> Complex64>> = vec![Box::new(|_| cr(1.0)), Box::new(cr), Box::new(|t| cr(t * t))];
    match (scaling, two_p) {
        (EtaScaling::Log, _) => {
            b.push(Box::new(|t| cr(1.0 / t.ln())));
            b.push(Box::new(|t| cr(t / t.ln())));
            b.push(Box::new(|t| cr(t * t / t.ln())));
        }
        (EtaScaling::Power, Some(n)) => {
            b.push(Box::new(move |t| cr(t.powi(n as i32 - 1) * t.ln())));
            b.push(Box::new(move |t| cr(t.powi(n as i32) * t.ln())));
        }
        (EtaScaling::Power, None) => {
            b.push(Box::new(move |t| cr(t).powc(p * 2.0 - 1.0)));
            b.push(Box::new(move |t| cr(t).powc(p * 2.0)));
        }
    }
    b
}

/// Fit each row of `samples` (one column per `ETA_SAMPLES` entry) and return
/// the constant terms.
fn extrapolate(basis: &[Box<dyn Fn(f64) -> Complex64>], samples: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let a = DMatrix::from_fn(ETA_SAMPLES.len(), basis.len(), |i, j| basis[j](ETA_SAMPLES[i]));
    let sol = lstsq(&a, &samples.transpose(), 1e14).map_err(|e| Error::ScalingMismatch(e.to_string()))?;
    let c = sol.x.row(0).transpose();
    if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ScalingMismatch("non-finite extrapolated limit".into()));
    }
    Ok(c)
}

fn eta_scaling(fam: &FamilyDescriptor) -> Result<EtaScaling> {
    let p = fam.params.p;
    match fam.params.two_p_integer() {
        Some(1) => Ok(EtaScaling::Log),
        _ if p.re * 2.0 > 1.0 + 1e-9 => Ok(EtaScaling::Power),
        _ => Err(Error::InvalidParameter(format!("no t -> 0 limit for Re(2p) = 1, p = {p}"))),
    }
}

fn eta_predicted(fam: &FamilyDescriptor, scaling: EtaScaling) -> DVector<Complex64> {
    let p = fam.params.p;
    DVector::from_fn(fam.ell() + 1, |i, _| {
        let norm = pochhammer(cr(i as f64 + 1.0), i + 1);
        match scaling {
            EtaScaling::Power => fam.a[i] * norm / pochhammer(p * 2.0 - 1.0, i + 1),
            EtaScaling::Log => -fam.a[i] * norm / pochhammer(cr(1.0), i),
        }
    })
}

/// Numerical `t -> 0` limit of the decoupled coordinates against its formula.
pub fn eta_limit(fam: &FamilyDescriptor) -> Result<EtaLimit> {
    let scaling = eta_scaling(fam)?;
    let p = fam.params.p;
    let n = fam.ell() + 1;
    let mut samples = DMatrix::from_element(n, ETA_SAMPLES.len(), cr(0.0));
    for (m, &t) in ETA_SAMPLES.iter().enumerate() {
        let hc = eval_check(fam, t)?.values;
        let s = match scaling {
            EtaScaling::Power => cr(t).powc(p - 1.0),
            EtaScaling::Log => cr(1.0 / (t.sqrt() * t.ln())),
        };
        samples.set_column(m, &(hc * s));
    }
    let basis = eta_basis(scaling, p, fam.params.two_p_integer());
    let numeric = extrapolate(&basis, &samples)?;
    let predicted = eta_predicted(fam, scaling);
    let rel_error = norm(&(&numeric - &predicted)) / norm(&predicted).max(f64::MIN_POSITIVE);
    Ok(EtaLimit { scaling, numeric, predicted, rel_error })
}

/// `eta(E H)` against `L(1-p) eta(H)`, both in the weight basis.
#[derive(Debug, Clone)]
pub struct EtaIntertwining {
    pub eta_e_image: DVector<Complex64>,
    pub l_eta: DVector<Complex64>,
    pub rel_error: f64,
}

pub fn eta_intertwining(fam: &FamilyDescriptor) -> Result<EtaIntertwining> {
    if eta_scaling(fam)? != EtaScaling::Power {
        return Err(Error::InvalidParameter("intertwining check needs Re(2p) > 1".into()));
    }
    let p = fam.params.p;
    let n = fam.ell() + 1;
    let (a0, c0, c1) = (fam.structure.a0_c(), fam.structure.c0_c(), fam.structure.c1_c());
    let mut samples = DMatrix::from_element(n, ETA_SAMPLES.len(), cr(0.0));
    for (m, &t) in ETA_SAMPLES.iter().enumerate() {
        let h = eval_h_derivs(fam, t)?;
        let eh = apply_e(&a0, &c0, &c1, t, &h[0], &h[1]);
        samples.set_column(m, &(eh * cr(t).powc(p - 1.0)));
    }
    let basis = eta_basis(EtaScaling::Power, p, fam.params.two_p_integer());
    let eta_e_image = extrapolate(&basis, &samples)?;
    let eta_h = fam.hahn.apply(&eta_predicted(fam, EtaScaling::Power));
    let l_eta = l_matrix(fam.ell(), cr(1.0) - p) * eta_h;
    let rel_error = norm(&(&eta_e_image - &l_eta)) / norm(&l_eta).max(1.0);
    Ok(EtaIntertwining { eta_e_image, l_eta, rel_error })
}

fn connection_admissible(p: Complex64, i: usize) -> bool {
    let tp = p * 2.0;
    let n = tp.re.round();
    if (tp - n).norm() > 1e-9 {
        return true;
    }
    let fi = i as f64;
    n > fi + 1.0 || n < 1.0 - fi
}

/// Residual of the three-term connection identity between the `t` and
/// `1 - t` Gauss functions, relative to the size of the summands.
pub fn connection_check(p: Complex64, i: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfDomain(t));
    }
    if !connection_admissible(p, i) {
        return Err(Error::InvalidParameter(format!("connection identity excluded at 2p = {}, i = {i}", p * 2.0)));
    }
    let fi = i as f64;
    let tp = p * 2.0;
    let norm_c = pochhammer(cr(fi + 1.0), i + 1);
    let t12p = cr(t).powc(cr(1.0) - tp);
    let f1 = gauss2f1(cr(-fi), tp - fi - 1.0, tp, t)?.value;
    let f2 = gauss2f1(cr(-fi), cr(1.0 - fi) - tp, cr(2.0) - tp, t)?.value;
    let f3 = gauss2f1(cr(fi + 1.0), cr(fi + 2.0) - tp, cr(2.0 * fi + 2.0), 1.0 - t)?.value;
    let u = norm_c / pochhammer(cr(1.0) - tp, i + 1) * f1;
    let v = norm_c / pochhammer(tp - 1.0, i + 1) * t12p * f2;
    let rhs = t12p * (1.0 - t).powi(2 * i as i32 + 1) * f3;
    // The two left-hand terms can cancel by many orders, so scale by their size.
    let scale = (u.norm() + v.norm()).max(rhs.norm()).max(f64::MIN_POSITIVE);
    Ok((u + v - rhs).norm() / scale)
}

/// Coefficients `F_j` of `H = t^p sum_j F_j t^j`.
#[derive(Debug, Clone)]
pub struct SeriesOracle {
    pub ell: usize,
    pub p: Complex64,
    pub coeffs: Vec<DVector<Complex64>>,
}

impl SeriesOracle {
    pub fn eval(&self, t: f64) -> DVector<Complex64> {
        let mut acc = DVector::from_element(self.ell + 1, cr(0.0));
        for f in self.coeffs.iter().rev() {
            acc = acc * cr(t) + f;
        }
        acc * cr(t).powc(self.p)
    }

    /// Size of the last retained term at `t`, relative to the sum.
    pub fn tail_estimate(&self, t: f64) -> f64 {
        let n = self.coeffs.len();
        let last = self.coeffs.last().map(norm).unwrap_or(0.0) * t.powi(n as i32 - 1);
        last / norm(&(self.eval(t) * cr(t).powc(-self.p))).max(f64::MIN_POSITIVE)
    }
}

/// Solve the three-term recursion for `F_1, ..., F_n_terms` from `F_0`.
pub fn series_oracle(ell: usize, p: Complex64, f0: &DVector<Complex64>, n_terms: usize) -> Result<SeriesOracle> {
    if f0.len() != ell + 1 {
        return Err(Error::InvalidParameter(format!("F0 has length {}, expected {}", f0.len(), ell + 1)));
    }
    let cs = structure_matrices(ell).c_sum().map(|x| cr(x as f64));
    let mut coeffs = vec![f0.clone()];
    for j in 1..=n_terms {
        let jf = j as f64;
        let lead = (p * 2.0 + jf - 1.0) * jf;
        if lead.norm() < 1e-12 {
            return Err(Error::RecursionPole(j));
        }
        let mid = p * 2.0 * (2.0 * jf - 1.0) + 2.0 * (jf - 1.0).powi(2);
        let mut rhs = &coeffs[j - 1] * mid - &cs * &coeffs[j - 1];
        if j >= 2 {
            rhs -= &coeffs[j - 2] * ((p * 2.0 + jf - 2.0) * (jf - 1.0));
        }
        coeffs.push(rhs / lead);
    }
    Ok(SeriesOracle { ell, p, coeffs })
}

/// `H` rebuilt from two recursion series seeded with `P(0)` and `Q(0)`.
pub fn series_family(fam: &FamilyDescriptor, n_terms: usize) -> Result<(SeriesOracle, SeriesOracle)> {
    let pq = pq_decomposition(fam)?;
    let p = fam.params.p;
    let ell = fam.ell();
    Ok((series_oracle(ell, p, &pq.p_at(0.0), n_terms)?, series_oracle(ell, cr(1.0) - p, &pq.q_at(0.0), n_terms)?))
}

/// Result of integrating the coupled D system.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub h: DVector<Complex64>,
    pub hprime: DVector<Complex64>,
    pub steps: usize,
    /// `|E H - mu H|` relative, at the start and end points.
    pub e_consistency: (f64, f64),
}

pub const ODE_RTOL: f64 = 1e-10;
const ODE_ATOL: f64 = 1e-13;
const ODE_MAX_STEPS: usize = 200_000;

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand-Prince integration of `y' = f(t, y)` from `t0` to `t1`.
pub fn dopri45<F>(f: F, t0: f64, y0: &DVector<Complex64>, t1: f64, rtol: f64) -> Result<(DVector<Complex64>, usize)>
where
    F: Fn(f64, &DVector<Complex64>) -> DVector<Complex64>,
{
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = 1e-3 * span.max(1e-12);
    let mut steps = 0;
    let mut k: Vec<DVector<Complex64>> = Vec::with_capacity(7);
    while (t1 - t) * dir > 0.0 {
        if steps >= ODE_MAX_STEPS {
            return Err(Error::StepFailure { t, reason: "step budget exhausted".into() });
        }
        h = h.min((t1 - t).abs());
        k.clear();
        for s in 0..7 {
            let mut ys = y.clone();
            for (r, kr) in k.iter().enumerate() {
                if DP_A[s][r] != 0.0 {
                    ys += kr * cr(DP_A[s][r] * h * dir);
                }
            }
            k.push(f(t + DP_C[s] * h * dir, &ys));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for s in 0..7 {
            y5 += &k[s] * cr(DP_B5[s] * h * dir);
            y4 += &k[s] * cr(DP_B4[s] * h * dir);
        }
        let err = (0..y.len())
            .map(|i| (y5[i] - y4[i]).norm() / (ODE_ATOL + rtol * y[i].norm().max(y5[i].norm())))
            .fold(0.0, f64::max);
        if !err.is_finite() {
            return Err(Error::StepFailure { t, reason: "non-finite state".into() });
        }
        if err <= 1.0 {
            t += h * dir;
            y = y5;
            steps += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * span.max(t.abs()) {
            return Err(Error::StepFailure { t, reason: "step size underflow".into() });
        }
    }
    Ok((y, steps))
}

/// Integrate `D H = lambda H` from `(t0, H0, H0')` to `t1`.
pub fn ode_oracle(
    ell: usize,
    lambda: Complex64,
    mu: Complex64,
    t0: f64,
    h0: &DVector<Complex64>,
    h0prime: &DVector<Complex64>,
    t1: f64,
) -> Result<OdeSolution> {
    for t in [t0, t1] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::OutOfDomain(t));
        }
    }
    let n = ell + 1;
    if h0.len() != n || h0prime.len() != n {
        return Err(Error::InvalidParameter(format!("initial data must have length {n}")));
    }
    let s = structure_matrices(ell);
    let (a0, c0, c1) = (s.a0_c(), s.c0_c(), s.c1_c());
    let cs = &c0 + &c1;
    let rhs = |t: f64, y: &DVector<Complex64>| {
        let h = y.rows(0, n).into_owned();
        let hp = y.rows(n, n).into_owned();
        let w = 1.0 - t;
        let hpp = (&h * lambda + &hp * cr(8.0 * t * t / w) - &cs * &h * cr(4.0 * t / (w * w))) / cr(4.0 * t * t);
        let mut out = DVector::from_element(2 * n, cr(0.0));
        out.rows_mut(0, n).copy_from(&hp);
        out.rows_mut(n, n).copy_from(&hpp);
        out
    };
    let mut y0 = DVector::from_element(2 * n, cr(0.0));
    y0.rows_mut(0, n).copy_from(h0);
    y0.rows_mut(n, n).copy_from(h0prime);
    let (y, steps) = dopri45(rhs, t0, &y0, t1, ODE_RTOL)?;
    let h = y.rows(0, n).into_owned();
    let hprime = y.rows(n, n).into_owned();
    let e_at = |t: f64, h: &DVector<Complex64>, hp: &DVector<Complex64>| {
        rel(&(apply_e(&a0, &c0, &c1, t, h, hp) - h * mu), mu, h)
    };
    let e_consistency = (e_at(t0, h0, h0prime), e_at(t1, &h, &hprime));
    Ok(OdeSolution { h, hprime, steps, e_consistency })
}

/// Printed closed form the oracle resolved to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    Generic { k: usize },
    Exceptional { k: usize, two_p: i64 },
}

fn near(p: Complex64, x: f64) -> bool {
    (p - x).norm() < 1e-9
}

fn printed_exceptional(ell: usize, k: usize, p: Complex64) -> Option<i64> {
    let table: &[(usize, usize, i64)] = &[
        (0, 0, 1),
        (1, 0, 1),
        (1, 1, 1),
        (1, 0, 2),
        (2, 2, -1),
        (2, 2, 0),
        (2, 1, 0),
        (2, 2, 1),
        (2, 1, 1),
    ];
    table.iter().find(|&&(l, kk, n)| l == ell && kk == k && near(p, n as f64 / 2.0)).map(|e| e.2)
}

fn printed_poles(ell: usize, k: usize) -> &'static [f64] {
    match (ell, k) {
        (0, _) => &[0.5],
        (1, 0) => &[0.5, 1.0],
        (1, _) => &[0.5, 0.0],
        (2, 0) => &[0.5, 1.0, 1.5],
        (2, 1) => &[0.0, 0.5, 1.0],
        _ => &[-0.5, 0.0, 0.5],
    }
}

/// Which printed display covers `(ell, k, p)`, through mirror and shift equivalences.
pub fn resolve_closed_form(ell: usize, k: usize, p: Complex64) -> Result<(ClosedForm, Complex64)> {
    if ell > 2 || k > ell {
        return Err(Error::InvalidParameter(format!("no closed form for ell = {ell}, k = {k}")));
    }
    let eqs = equivalents(ell, p, k);
    for &(q, j) in &eqs {
        if let Some(n) = printed_exceptional(ell, j, q) {
            return Ok((ClosedForm::Exceptional { k: j, two_p: n }, cr(n as f64 / 2.0)));
        }
    }
    for &(q, j) in &eqs {
        if printed_poles(ell, j).iter().all(|&x| !near(q, x)) {
            return Ok((ClosedForm::Generic { k: j }, q));
        }
    }
    Err(Error::PrintedPole(p))
}

/// The printed closed-form `H(t)` for `ell <= 2`.
pub fn closed_form_oracle(ell: usize, k: usize, p: Complex64, t: f64) -> Result<DVector<Complex64>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfDomain(t));
    }
    let (form, q) = resolve_closed_form(ell, k, p)?;
    let v = match form {
        ClosedForm::Generic { k } => closed_generic(ell, k, q, t),
        ClosedForm::Exceptional { k, two_p } => closed_exceptional(ell, k, two_p, t),
    };
    Ok(DVector::from_vec(v))
}

fn closed_generic(ell: usize, k: usize, p: Complex64, t: f64) -> Vec<Complex64> {
    let tc = cr(t);
    let tp = tc.powc(p);
    let tq = tc.powc(cr(1.0) - p);
    let one = cr(1.0);
    match (ell, k) {
        (0, _) => vec![(tp - tq) / ((p * 2.0 - 1.0) * (t - 1.0))],
        (1, _) => {
            let p = if k == 0 { p } else { one - p };
            let (tp, tq) = if k == 0 { (tp, tq) } else { (tq, tp) };
            let d = (p - 1.0) * (p * 2.0 - 1.0) * (t - 1.0).powi(2);
            let h0 = (tc.powc(cr(2.0) - p) + tp * ((p - 1.0) * 2.0 * t - p * 2.0 + 1.0)) / d;
            let h1 = (tp - tq * ((p * 2.0 - 1.0) * t - p * 2.0 + 2.0)) / d;
            vec![h0, h1]
        }
        _ => {
            let (pp, qq) = closed_pq2(k, p, t);
            let w3 = (t - 1.0).powi(3);
            (0..3).map(|i| (tp * pp[i] + tq * qq[i]) / w3).collect()
        }
    }
}

/// `(P(t), Q(t))` for the three `ell = 2` families.
fn closed_pq2(k: usize, p: Complex64, t: f64) -> ([Complex64; 3], [Complex64; 3]) {
    let (t2, p2) = (t * t, p * p);
    match k {
        0 => {
            let d = (p - 1.0) * (p * 2.0 - 3.0) * (p * 2.0 - 1.0) / 3.0;
            (
                [
                    (p2 * 2.0 * t2 - p * 5.0 * t2 + 3.0 * t2 - p2 * 4.0 * t + p * 8.0 * t - 3.0 * t + p2 * 2.0 - p * 3.0 + 1.0) / d,
                    (p * 2.0 * t - 3.0 * t - p * 2.0 + 1.0) / d,
                    cr(1.0) / d,
                ],
                [
                    -cr(t2) / d,
                    (p * 2.0 * t - t - p * 2.0 + 3.0) * t / d,
                    -(p2 * 2.0 * t2 - p * 3.0 * t2 + t2 - p2 * 4.0 * t + p * 8.0 * t - 3.0 * t + p2 * 2.0 - p * 5.0 + 3.0) / d,
                ],
            )
        }
        1 => {
            let d = (p - 1.0) * p * (p * 2.0 - 1.0) / 3.0;
            (
                [
                    (p * t - t - p) * t / d,
                    (p2 * t2 - p * 2.0 * t2 + t2 - p2 * 2.0 * t + p * 2.0 * t + t + p2) / d,
                    (p * t - t - p) / d,
                ],
                [
                    (p * t - p + 1.0) * t / d,
                    -(p2 * t2 - p2 * 2.0 * t + p * 2.0 * t + t + p2 - p * 2.0 + 1.0) / d,
                    (p * t - p + 1.0) / d,
                ],
            )
        }
        _ => {
            let d = p * (p * 2.0 - 1.0) * (p * 2.0 + 1.0) / 3.0;
            (
                [
                    cr(t2) / d,
                    (p * 2.0 * t - t - p * 2.0 - 1.0) * t / d,
                    (p2 * 2.0 * t2 - p * t2 - p2 * 4.0 * t + t + p2 * 2.0 + p) / d,
                ],
                [
                    // Mirror of the k = 0 P_0: the t coefficient is 1 - 4p^2.
                    -(p2 * 2.0 * t2 + p * t2 - p2 * 4.0 * t + t + p2 * 2.0 - p) / d,
                    (p * 2.0 * t + t - p * 2.0 + 1.0) / d,
                    -cr(1.0) / d,
                ],
            )
        }
    }
}

fn closed_exceptional(ell: usize, k: usize, two_p: i64, t: f64) -> Vec<Complex64> {
    let l = t.ln();
    let s = t.sqrt();
    let w2 = (t - 1.0).powi(2);
    let w3 = (t - 1.0).powi(3);
    let v: Vec<f64> = match (ell, k, two_p) {
        (0, _, _) => vec![s * l / (t - 1.0)],
        (1, _, 1) => vec![2.0 * s * (t * l - t + 1.0) / w2, -2.0 * s * (l - t + 1.0) / w2],
        (1, _, _) => vec![-2.0 * t * (l - t + 1.0) / w2, 2.0 * (t * l - t + 1.0) / w2],
        (2, 2, -1) => vec![
            3.0 * t.powf(1.5) * (2.0 * l + t * t - 4.0 * t + 3.0) / (2.0 * w3),
            -3.0 * s * (2.0 * t * l - t * t + 1.0) / w3,
            3.0 / s * (2.0 * t * t * l - 3.0 * t * t + 4.0 * t - 1.0) / (2.0 * w3),
        ],
        (2, _, 0) => vec![
            -3.0 * t * (2.0 * t * l - t * t + 1.0) / w3,
            6.0 * t * (t * l + l - 2.0 * t + 2.0) / w3,
            -3.0 * (2.0 * t * l - t * t + 1.0) / w3,
        ],
        (2, 2, _) => vec![
            3.0 * s * (2.0 * t * t * l - 3.0 * t * t + 4.0 * t - 1.0) / (2.0 * w3),
            -3.0 * s * (2.0 * t * l - t * t + 1.0) / w3,
            3.0 * s * (2.0 * l + t * t - 4.0 * t + 3.0) / (2.0 * w3),
        ],
        _ => vec![
            6.0 * t.powf(1.5) * (t * l + l - 2.0 * t + 2.0) / w3,
            -3.0 * s * (t * t * l + 6.0 * t * l + l - 4.0 * t * t + 4.0) / w3,
            6.0 * s * (t * l + l - 2.0 * t + 2.0) / w3,
        ],
    };
    v.into_iter().map(cr).collect()
}
