//! Three-term recursion in `p`:
//! `A_p Phi(t,p-1) + B_p Phi(t,p) + C_p Phi(t,p+1) = ((t^2+1)/t) Phi(t,p)`.
//!
//! The matrices are fitted by least squares with the band structure imposed
//! (`A` upper with three diagonals, `B` tridiagonal, `C` lower with three
//! diagonals). Rows decouple, so each row is an independent small problem.

use crate::error::{Error, Result};
use crate::lsq::lstsq;
use crate::spherical::{phi_families, phi_from_families};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Condition number above which a direct fit is rejected.
pub const MAX_COND: f64 = 1e10;
/// Offset of the Richardson fallback used when `Phi(t, p +- 1)` is singular.
pub const FALLBACK_DELTA: f64 = 1e-3;
pub const FIT_MIN: f64 = 0.2;
pub const FIT_MAX: f64 = 0.9;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Direct,
    /// Symmetric extrapolation from fits at `p +- delta`, `p +- 2 delta`.
    Richardson,
    /// Transcribed closed forms.
    Table,
}

#[derive(Debug, Clone)]
pub struct RecursionTriple {
    pub ell: usize,
    pub p: Complex64,
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    /// Max relative residual on the fitting grid (`None` for tables).
    pub fit_residual: Option<f64>,
    /// Scaled condition number of the worst row system.
    pub condition: Option<f64>,
    pub method: FitMethod,
}

/// `n` Chebyshev points mapped to `[a, b]`, ascending.
pub fn chebyshev_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|k| {
            let x = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect();
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g
}

/// `Phi(t, p-1)`, `Phi(t, p)`, `Phi(t, p+1)` on a grid.
type PhiTriple = Vec<[DMatrix<Complex64>; 3]>;

fn phi_samples(ell: usize, p: Complex64, grid: &[f64]) -> Result<PhiTriple> {
    let (fm, (f0, fp)) = rayon::join(
        || phi_families(ell, p - 1.0),
        || rayon::join(|| phi_families(ell, p), || phi_families(ell, p + 1.0)),
    );
    let fams = [fm?, f0?, fp?];
    grid.par_iter()
        .map(|&t| {
            Ok([
                phi_from_families(&fams[0], t)?,
                phi_from_families(&fams[1], t)?,
                phi_from_families(&fams[2], t)?,
            ])
        })
        .collect()
}

/// Column indices of row `i` allowed in `A`, `B`, `C`.
pub fn band_columns(ell: usize, i: usize) -> [Vec<usize>; 3] {
    let clip = |v: Vec<i64>| v.into_iter().filter(|&j| j >= 0 && j <= ell as i64).map(|j| j as usize).collect();
    let ii = i as i64;
    [clip(vec![ii, ii + 1, ii + 2]), clip(vec![ii - 1, ii, ii + 1]), clip(vec![ii - 2, ii - 1, ii])]
}

fn all_columns(ell: usize) -> [Vec<usize>; 3] {
    let v: Vec<usize> = (0..=ell).collect();
    [v.clone(), v.clone(), v]
}

struct RowFit {
    coeffs: [Vec<(usize, Complex64)>; 3],
    cond: f64,
}

fn fit_row(samples: &PhiTriple, grid: &[f64], ell: usize, i: usize, cols: &[Vec<usize>; 3]) -> Result<RowFit> {
    let n = ell + 1;
    let unknowns: Vec<(usize, usize)> = (0..3).flat_map(|m| cols[m].iter().map(move |&j| (m, j))).collect();
    let neq = grid.len() * n;
    let mut a = DMatrix::from_element(neq, unknowns.len(), cr(0.0));
    let mut rhs = DMatrix::from_element(neq, 1, cr(0.0));
    for (g, &t) in grid.iter().enumerate() {
        for comp in 0..n {
            let r = g * n + comp;
            for (u, &(m, j)) in unknowns.iter().enumerate() {
                a[(r, u)] = samples[g][m][(j, comp)];
            }
            rhs[(r, 0)] = samples[g][1][(i, comp)] * ((t * t + 1.0) / t);
        }
    }
    let sol = lstsq(&a, &rhs, MAX_COND)?;
    let mut coeffs: [Vec<(usize, Complex64)>; 3] = [vec![], vec![], vec![]];
    for (u, &(m, j)) in unknowns.iter().enumerate() {
        coeffs[m].push((j, sol.x[(u, 0)]));
    }
    Ok(RowFit { coeffs, cond: sol.cond })
}

fn check_fit_grid(ell: usize, grid: &[f64]) -> Result<()> {
    if let Some(&t) = grid.iter().find(|t| !(FIT_MIN..=FIT_MAX).contains(*t)) {
        return Err(Error::OutOfDomain(t));
    }
    if grid.len() * (ell + 1) < 27 {
        return Err(Error::InvalidParameter(format!("fitting grid of {} points is too small", grid.len())));
    }
    Ok(())
}

fn assemble(ell: usize, rows: Vec<RowFit>) -> ([DMatrix<Complex64>; 3], f64) {
    let n = ell + 1;
    let mut m = [(); 3].map(|_| DMatrix::from_element(n, n, cr(0.0)));
    let mut cond: f64 = 0.0;
    for (i, r) in rows.into_iter().enumerate() {
        cond = cond.max(r.cond);
        for (k, c) in r.coeffs.iter().enumerate() {
            for &(j, v) in c {
                m[k][(i, j)] = v;
            }
        }
    }
    (m, cond)
}

fn fit_direct(ell: usize, p: Complex64, grid: &[f64], cols: impl Fn(usize) -> [Vec<usize>; 3]) -> Result<([DMatrix<Complex64>; 3], f64)> {
    let samples = phi_samples(ell, p, grid)?;
    let rows = (0..=ell).map(|i| fit_row(&samples, grid, ell, i, &cols(i))).collect::<Result<Vec<_>>>()?;
    Ok(assemble(ell, rows))
}

/// Max over `grid` of the recursion defect, relative to `|((t^2+1)/t) Phi(t,p)|`.
pub fn recursion_residuals(
    ell: usize,
    p: Complex64,
    m: [&DMatrix<Complex64>; 3],
    grid: &[f64],
) -> Result<Vec<f64>> {
    let samples = phi_samples(ell, p, grid)?;
    Ok(grid
        .iter()
        .zip(samples.iter())
        .map(|(&t, s)| {
            let rhs = &s[1] * cr((t * t + 1.0) / t);
            let lhs = m[0] * &s[0] + m[1] * &s[1] + m[2] * &s[2];
            crate::max_abs((lhs - &rhs).iter()) / crate::max_abs(rhs.iter()).max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Banded least-squares fit of `(A_p, B_p, C_p)` on `grid`.
pub fn fit_recursion(ell: usize, p: Complex64, grid: &[f64]) -> Result<RecursionTriple> {
    check_fit_grid(ell, grid)?;
    let (m, cond, method) = match fit_direct(ell, p, grid, |i| band_columns(ell, i)) {
        Ok((m, cond)) => (m, cond, FitMethod::Direct),
        Err(Error::IllConditioned(_)) => {
            let d = FALLBACK_DELTA;
            let offs = [(d, 4.0), (-d, 4.0), (2.0 * d, -1.0), (-2.0 * d, -1.0)];
            let fits = offs
                .par_iter()
                .map(|&(o, _)| fit_direct(ell, p + o, grid, |i| band_columns(ell, i)))
                .collect::<Result<Vec<_>>>()?;
            let n = ell + 1;
            let mut acc = [(); 3].map(|_| DMatrix::from_element(n, n, cr(0.0)));
            let mut cond: f64 = 0.0;
            for ((mm, c), &(_, w)) in fits.iter().zip(offs.iter()) {
                cond = cond.max(*c);
                for k in 0..3 {
                    acc[k] += &mm[k] * cr(w / 6.0);
                }
            }
            (acc, cond, FitMethod::Richardson)
        }
        Err(e) => return Err(e),
    };
    let res = recursion_residuals(ell, p, [&m[0], &m[1], &m[2]], grid)?;
    let [a, b, c] = m;
    Ok(RecursionTriple {
        ell,
        p,
        a,
        b,
        c,
        fit_residual: Some(res.into_iter().fold(0.0, f64::max)),
        condition: Some(cond),
        method,
    })
}

/// Largest entry outside the band when all `3(ell+1)` coefficients per row
/// are left free.
pub fn off_band_leakage(ell: usize, p: Complex64, grid: &[f64]) -> Result<f64> {
    check_fit_grid(ell, grid)?;
    let (m, _) = fit_direct(ell, p, grid, |_| all_columns(ell))?;
    let mut leak: f64 = 0.0;
    for i in 0..=ell {
        let band = band_columns(ell, i);
        for k in 0..3 {
            for j in 0..=ell {
                if !band[k].contains(&j) {
                    leak = leak.max(m[k][(i, j)].norm());
                }
            }
        }
    }
    Ok(leak)
}

/// Residuals of a triple on a probe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionCheck {
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn verify_recursion(triple: &RecursionTriple, probe: &[f64]) -> Result<RecursionCheck> {
    if let Some(&t) = probe.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::OutOfDomain(t));
    }
    let residuals = recursion_residuals(triple.ell, triple.p, [&triple.a, &triple.b, &triple.c], probe)?;
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(RecursionCheck { grid: probe.to_vec(), residuals, max_residual })
}

/// Entrywise deviation: relative where the reference is nonzero, absolute otherwise.
pub fn max_deviation(x: &RecursionTriple, reference: &RecursionTriple) -> f64 {
    let pairs = [(&x.a, &reference.a), (&x.b, &reference.b), (&x.c, &reference.c)];
    pairs
        .iter()
        .flat_map(|(m, r)| m.iter().zip(r.iter()))
        .map(|(v, w)| {
            let d = (v - w).norm();
            if w.norm() > 1e-12 { d / w.norm() } else { d }
        })
        .fold(0.0, f64::max)
}

/// Rational entries with a guard on vanishing denominators.
struct Entries {
    p: Complex64,
    pole: bool,
}

impl Entries {
    fn q(&mut self, num: Complex64, den: Complex64) -> Complex64 {
        if den.norm() < 1e-12 {
            self.pole = true;
            cr(0.0)
        } else {
            num / den
        }
    }
}

/// The tabulated `(A_p, B_p, C_p)` for `ell` in `{0, 1, 3, 4}`.
pub fn paper_tables(ell: usize, p: Complex64) -> Result<RecursionTriple> {
    let mut e = Entries { p, pole: false };
    let n = ell + 1;
    let mut a = DMatrix::from_element(n, n, cr(0.0));
    let mut b = a.clone();
    let mut c = a.clone();
    let one = cr(1.0);
    let (p1, p2, q1, q3, q5, r1, r3) = (p - 1.0, p - 2.0, p * 2.0 - 1.0, p * 2.0 - 3.0, p * 2.0 - 5.0, p * 2.0 + 1.0, p * 2.0 + 3.0);
    match ell {
        0 => {
            a[(0, 0)] = e.q(q3, q1);
            c[(0, 0)] = e.q(r1, q1);
        }
        1 => {
            a[(0, 0)] = e.q(p2, p1);
            a[(0, 1)] = e.q(one, p1 * q1);
            a[(1, 1)] = e.q(q3, q1);
            b[(0, 0)] = e.q(one, -p1 * q1);
            b[(0, 1)] = e.q(one, p1 * q1);
            b[(1, 0)] = e.q(one, p * q1);
            b[(1, 1)] = e.q(one, -p * q1);
            c[(0, 0)] = e.q(r1, q1);
            c[(1, 0)] = e.q(one, p * q1);
            c[(1, 1)] = e.q(p + 1.0, p);
        }
        3 => {
            let pp = p + 1.0;
            a[(0, 0)] = e.q(p - 3.0, p2);
            a[(0, 1)] = e.q(cr(3.0), p1 * q3);
            a[(0, 2)] = e.q(cr(3.0), p2 * p1 * q3 * q1);
            a[(1, 1)] = e.q(p2 * p * q5, p1 * p1 * q3);
            a[(1, 2)] = e.q(p2 * p * 16.0, p1 * q3 * q1 * q1);
            a[(1, 3)] = e.q(cr(3.0), p1 * p1 * q1 * q1);
            a[(2, 2)] = e.q(p2 * q3 * r1, p1 * q1 * q1);
            a[(2, 3)] = e.q(q3 * 3.0, p1 * q1 * q1);
            a[(3, 3)] = e.q(q3, q1);
            b[(0, 0)] = e.q(cr(-3.0), p1 * q3);
            b[(0, 1)] = e.q(cr(3.0), p1 * q3);
            b[(1, 0)] = e.q(p2 * 3.0, p1 * p1 * q3);
            b[(1, 1)] = e.q(-(p * p * 14.0 - p * 21.0 - 9.0), p1 * p * q3 * q1);
            b[(1, 2)] = e.q(q3 * r1, p1 * p1 * p * q1);
            b[(2, 1)] = e.q(q3 * r1, p1 * p * p * q1);
            b[(2, 2)] = e.q(-(p * p * 14.0 - p * 7.0 - 16.0), p1 * p * q1 * r1);
            b[(2, 3)] = e.q(pp * 3.0, p * p * r1);
            b[(3, 2)] = e.q(cr(3.0), p * r1);
            b[(3, 3)] = e.q(cr(-3.0), p * r1);
            c[(0, 0)] = e.q(r1, q1);
            c[(1, 0)] = e.q(r1 * 3.0, p * q1 * q1);
            c[(1, 1)] = e.q(pp * q3 * r1, p * q1 * q1);
            c[(2, 0)] = e.q(cr(3.0), p * p * q1 * q1);
            c[(2, 1)] = e.q(p1 * pp * 16.0, p * q1 * q1 * r1);
            c[(2, 2)] = e.q(p1 * pp * r3, p * p * r1);
            c[(3, 1)] = e.q(cr(3.0), p * pp * q1 * r1);
            c[(3, 2)] = e.q(cr(3.0), p * r1);
            c[(3, 3)] = e.q(p + 2.0, pp);
        }
        4 => {
            let pp = p + 1.0;
            a[(0, 0)] = e.q(p * 2.0 - 7.0, q5);
            a[(0, 1)] = e.q(cr(2.0), p2 * p1);
            a[(0, 2)] = e.q(cr(6.0), p2 * p1 * q5 * q1);
            a[(1, 1)] = e.q((p - 3.0) * p * q5, p2 * p1 * q3);
            a[(1, 2)] = e.q(p * q5 * 3.0, p2 * p1 * p1 * q1);
            a[(1, 3)] = e.q(cr(9.0), p1 * p1 * q3 * q1);
            a[(2, 2)] = e.q(p * p2 * q5 * r1, p1 * p1 * q1 * q1);
            a[(2, 3)] = e.q(p2 * r1 * 3.0, p1 * p1 * p * q1);
            a[(2, 4)] = e.q(cr(6.0), p1 * p * q1 * q1);
            a[(3, 3)] = e.q(p2 * pp * q3, p1 * p * q1);
            a[(3, 4)] = e.q(q3 * 2.0, p1 * p * q1);
            a[(4, 4)] = e.q(q3, q1);
            b[(0, 0)] = e.q(cr(-2.0), p2 * p1);
            b[(0, 1)] = e.q(cr(2.0), p2 * p1);
            b[(1, 0)] = e.q(q5 * 2.0, p2 * p1 * q3);
            b[(1, 1)] = e.q(-(p * p * 5.0 - p * 10.0 - 4.0), p2 * p1 * p1 * p);
            b[(1, 2)] = e.q(p2 * r1 * 3.0, p1 * p1 * p * q3);
            b[(2, 1)] = e.q(p2 * r1 * 3.0, p1 * p1 * p * q1);
            b[(2, 2)] = e.q(-(p * p * 2.0 - p * 2.0 - 3.0) * 3.0, p1 * p1 * p * p);
            b[(2, 3)] = e.q(pp * q3 * 3.0, p1 * p * p * q1);
            b[(3, 2)] = e.q(pp * q3 * 3.0, p1 * p * p * r1);
            b[(3, 3)] = e.q(-(p * p * 5.0 - 9.0), p1 * p * p * pp);
            b[(3, 4)] = e.q(r3 * 2.0, p * pp * r1);
            b[(4, 3)] = e.q(cr(2.0), p * pp);
            b[(4, 4)] = e.q(cr(-2.0), p * pp);
            c[(0, 0)] = e.q(r1, q1);
            c[(1, 0)] = e.q(r1 * 2.0, p1 * p * q1);
            c[(1, 1)] = e.q(p2 * pp * r1, p1 * p * q1);
            c[(2, 0)] = e.q(cr(6.0), p1 * p * q1 * q1);
            c[(2, 1)] = e.q(pp * q3 * 3.0, p1 * p * p * q1);
            c[(2, 2)] = e.q(p1 * pp * q3 * r3, p * p * q1 * q1);
            c[(3, 1)] = e.q(cr(9.0), p * p * q1 * r1);
            c[(3, 2)] = e.q(p1 * r3 * 3.0, p * p * pp * q1);
            c[(3, 3)] = e.q(p1 * (p + 2.0) * r3, p * pp * r1);
            c[(4, 2)] = e.q(cr(6.0), pp * p * q1 * r3);
            c[(4, 3)] = e.q(cr(2.0), p * pp);
            c[(4, 4)] = e.q(p * 2.0 + 5.0, r3);
        }
        _ => return Err(Error::InvalidParameter(format!("no tabulated recursion for ell = {ell}"))),
    }
    if e.pole {
        return Err(Error::PrintedPole(e.p));
    }
    Ok(RecursionTriple { ell, p, a, b, c, fit_residual: None, condition: None, method: FitMethod::Table })
}
