//! Spherical-function families `H_k(t, p)` of type `ell`.
//!
//! A family is fixed by `(ell, k, p)`. After the mirror `(p, k) -> (1-p, ell-k)`
//! we always have `Re(2p) >= 1`. The decoupled coordinates `Hc = U^-1 H` are
//! then Gauss functions of `1-t`, scaled by coefficients `a_i` chosen so that
//! the leading behaviour at `t = 0` is an eigenvector of `L(1-p)`.

use crate::error::{Error, Result};
use crate::repmat::{eigenspace_index, hahn_transform, l_eigenvector, mu_values, structure_matrices, HahnTransform, StructureMatrices};
use crate::specfun::{gauss2f1, gauss2f1_deriv, pochhammer, HyperSeriesResult};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Distance of `2p` to an integer below which `p` is treated as exceptional.
pub const INTEGER_TOL: f64 = 1e-9;
/// Distances in `(INTEGER_TOL, WARN_TOL)` raise a conditioning warning.
pub const WARN_TOL: f64 = 1e-5;
pub const T_MIN: f64 = 1e-6;
pub const T_MAX: f64 = 1.0 - 1e-9;
/// Step of the Richardson limit in `p`.
pub const LIMIT_DELTA: f64 = 1e-4;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPClass {
    Generic,
    IntegerGE1(i64),
    IntegerLE0(i64),
    /// `Re(2p) = 1` with `2p != 1`.
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub ell: usize,
    /// Normalized index and parameter (`Re(2p) >= 1`).
    pub k: usize,
    pub p: Complex64,
    pub lambda: Complex64,
    pub mu: Complex64,
    /// Class of the parameter as given.
    pub two_p_class: TwoPClass,
    pub mirrored: bool,
    pub input_k: usize,
    pub input_p: Complex64,
    /// `2p` is within `WARN_TOL` of an integer without being snapped to it.
    pub near_integer_warning: bool,
}

impl SpectralParams {
    /// `2p` as an integer, when the normalized parameter is exceptional.
    pub fn two_p_integer(&self) -> Option<i64> {
        match self.two_p_class {
            TwoPClass::IntegerGE1(n) => Some(n),
            TwoPClass::IntegerLE0(n) => Some(2 - n),
            _ => None,
        }
    }
}

pub fn lambda_of(p: Complex64) -> Complex64 {
    p * (p - 1.0) * 4.0
}

/// Branch classification and mirror normalization.
pub fn classify(ell: usize, k: usize, p: Complex64) -> Result<SpectralParams> {
    if k > ell {
        return Err(Error::InvalidParameter(format!("k = {k} out of range 0..={ell}")));
    }
    if !(p.re.is_finite() && p.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} is not finite")));
    }
    let tp = p * 2.0;
    let n = tp.re.round();
    let dist = (tp - n).norm();
    let (class, mut q) = if dist < INTEGER_TOL {
        let n = n as i64;
        let class = if n >= 1 { TwoPClass::IntegerGE1(n) } else { TwoPClass::IntegerLE0(n) };
        (class, cr(n as f64 / 2.0))
    } else if (tp.re - 1.0).abs() < INTEGER_TOL {
        (TwoPClass::HalfLine, Complex64::new(0.5, p.im))
    } else {
        (TwoPClass::Generic, p)
    };
    let near_integer_warning = (INTEGER_TOL..WARN_TOL).contains(&dist);
    let mirrored = match class {
        TwoPClass::IntegerLE0(_) => true,
        TwoPClass::IntegerGE1(_) => false,
        TwoPClass::HalfLine => q.im < 0.0,
        TwoPClass::Generic => q.re * 2.0 < 1.0,
    };
    let mut kk = k;
    if mirrored {
        q = cr(1.0) - q;
        kk = ell - k;
    }
    Ok(SpectralParams {
        ell,
        k: kk,
        p: q,
        lambda: lambda_of(q),
        mu: mu_values(ell, q)[kk],
        two_p_class: class,
        mirrored,
        input_k: k,
        input_p: p,
        near_integer_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    GenericHyper,
    IntegerMixed,
}

/// A fully built family.
#[derive(Debug, Clone)]
pub struct FamilyDescriptor {
    pub params: SpectralParams,
    pub alpha: DVector<Complex64>,
    pub a: DVector<Complex64>,
    pub branch: Branch,
    pub omega_eig: Complex64,
    pub omega_bar_eig: Complex64,
    pub vr: (Complex64, i64),
    pub unitarizable: bool,
    pub degenerate_a0: bool,
    /// Index `j` of the eigenvector `v_j(1-p)` that was used.
    pub eigen_index: usize,
    pub hahn: HahnTransform,
    pub structure: StructureMatrices,
}

impl FamilyDescriptor {
    pub fn ell(&self) -> usize {
        self.params.ell
    }

    /// Same function: equal normalized parameters and coefficients.
    pub fn same_family(&self, other: &FamilyDescriptor, tol: f64) -> bool {
        self.params.ell == other.params.ell
            && (self.params.mu - other.params.mu).norm() <= tol * (1.0 + self.params.mu.norm())
            && (self.params.p - other.params.p).norm() <= tol
            && crate::max_abs((&self.a - &other.a).iter()) <= tol * (1.0 + crate::max_abs(self.a.iter()))
    }

    /// `(exponent, A, B, C)` with `hc_i = a_i t^e (1-t)^i 2F1(A, B; C; 1-t)`.
    fn component(&self, i: usize) -> (Complex64, Complex64, Complex64, Complex64) {
        let p = self.params.p;
        let fi = i as f64;
        let use_second = match self.params.two_p_integer() {
            Some(n) => i as i64 >= n - 1,
            None => false,
        };
        if use_second {
            (p, cr(fi + 1.0), p * 2.0 + fi, cr(2.0 * fi + 2.0))
        } else {
            (cr(1.0) - p, cr(fi + 1.0), cr(fi + 2.0) - p * 2.0, cr(2.0 * fi + 2.0))
        }
    }
}

/// Build the family attached to `(ell, k, p)`.
pub fn build_family(ell: usize, k: usize, p: Complex64) -> Result<FamilyDescriptor> {
    let params = classify(ell, k, p)?;
    let q = params.p;
    let qm = cr(1.0) - q;
    // mu_k(p) = mu_{ell-k}(1-p); take the index whose vector spans the eigenspace.
    let j = eigenspace_index(ell, qm, ell - params.k);
    let ev = l_eigenvector(ell, qm, j).map_err(|_| Error::DegenerateEigenvector { ell, k, p })?;
    let hahn = hahn_transform(ell)?;
    let mut alpha = hahn.apply_inv(&ev.v);
    let log_case = params.two_p_integer() == Some(1);
    let mut a = DVector::from_fn(ell + 1, |i, _| {
        let norm = pochhammer(cr(i as f64 + 1.0), i + 1);
        if log_case {
            // hc_i / (sqrt(t) ln t) tends to -a_i Gamma(2i+2)/Gamma(i+1)^2.
            -alpha[i] * pochhammer(cr(1.0), i) / norm
        } else {
            alpha[i] * pochhammer(q * 2.0 - 1.0, i + 1) / norm
        }
    });
    let amax = crate::max_abs(a.iter());
    let degenerate_a0 = a[0].norm() < 1e-12 * amax.max(f64::MIN_POSITIVE);
    if !degenerate_a0 {
        let a0 = a[0];
        a /= a0;
        alpha /= a0;
    }
    let branch = if params.two_p_integer().is_some() { Branch::IntegerMixed } else { Branch::GenericHyper };
    let l = ell as f64;
    Ok(FamilyDescriptor {
        omega_eig: params.lambda / 4.0 + params.mu + l * (l + 2.0),
        omega_bar_eig: params.lambda / 4.0,
        vr: principal_series_params(ell, q, params.k),
        unitarizable: is_unitarizable(ell, q, params.k),
        params,
        alpha,
        a,
        branch,
        degenerate_a0,
        eigen_index: j,
        hahn,
        structure: structure_matrices(ell),
    })
}

/// Decoupled coordinates with their series diagnostics.
#[derive(Debug, Clone)]
pub struct CheckSample {
    pub values: DVector<Complex64>,
    pub diagnostics: Vec<HyperSeriesResult>,
}

fn check_t(t: f64) -> Result<()> {
    if (T_MIN..=T_MAX).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(t))
    }
}

/// `Hc(t) = U^-1 H(t)`.
pub fn eval_check(fam: &FamilyDescriptor, t: f64) -> Result<CheckSample> {
    check_t(t)?;
    let n = fam.ell() + 1;
    let mut values = DVector::from_element(n, cr(0.0));
    let mut diagnostics = Vec::with_capacity(n);
    for i in 0..n {
        let (e, a, b, c) = fam.component(i);
        let f = gauss2f1(a, b, c, 1.0 - t)?;
        values[i] = fam.a[i] * cr(t).powc(e) * (1.0 - t).powi(i as i32) * f.value;
        diagnostics.push(f);
    }
    Ok(CheckSample { values, diagnostics })
}

/// `Hc`, `Hc'`, `Hc''` at `t`.
pub fn eval_check_derivs(fam: &FamilyDescriptor, t: f64) -> Result<[DVector<Complex64>; 3]> {
    check_t(t)?;
    let n = fam.ell() + 1;
    let mut out = [(); 3].map(|_| DVector::from_element(n, cr(0.0)));
    let w = 1.0 - t;
    for i in 0..n {
        let (e, a, b, c) = fam.component(i);
        let g0 = gauss2f1(a, b, c, w)?.value;
        let g1 = gauss2f1_deriv(a, b, c, w, 1)?;
        let g2 = gauss2f1_deriv(a, b, c, w, 2)?;
        let fi = i as f64;
        // u = t^e, v = (1-t)^i, g = G(1-t)
        let u0 = cr(t).powc(e);
        let u1 = e * cr(t).powc(e - 1.0);
        let u2 = e * (e - 1.0) * cr(t).powc(e - 2.0);
        let v0 = w.powi(i as i32);
        let v1 = if i >= 1 { -fi * w.powi(i as i32 - 1) } else { 0.0 };
        let v2 = if i >= 2 { fi * (fi - 1.0) * w.powi(i as i32 - 2) } else { 0.0 };
        let (d0, d1, d2) = (g0, -g1, g2);
        let ai = fam.a[i];
        let [o0, o1, o2] = &mut out;
        o0[i] = ai * u0 * v0 * d0;
        o1[i] = ai * (u1 * v0 * d0 + u0 * v1 * d0 + u0 * v0 * d1);
        o2[i] = ai
            * (u2 * v0 * d0 + u0 * v2 * d0 + u0 * v0 * d2
                + u1 * v1 * d0 * 2.0
                + u1 * v0 * d1 * 2.0
                + u0 * v1 * d1 * 2.0);
    }
    Ok(out)
}

/// One evaluation of `H(t)`.
#[derive(Debug, Clone)]
pub struct VectorSample {
    pub t: f64,
    pub h: DVector<Complex64>,
    pub check_h: DVector<Complex64>,
    pub diagnostics: Vec<HyperSeriesResult>,
}

#[allow(non_snake_case)]
pub fn eval_H(fam: &FamilyDescriptor, t: f64) -> Result<VectorSample> {
    let c = eval_check(fam, t)?;
    Ok(VectorSample { t, h: fam.hahn.apply(&c.values), check_h: c.values, diagnostics: c.diagnostics })
}

/// `H`, `H'`, `H''` at `t`.
pub fn eval_h_derivs(fam: &FamilyDescriptor, t: f64) -> Result<[DVector<Complex64>; 3]> {
    let d = eval_check_derivs(fam, t)?;
    Ok(d.map(|v| fam.hahn.apply(&v)))
}

/// `H(t)` at an exceptional parameter as the Richardson limit of nearby
/// generic families (`p +- delta`, `p +- 2 delta` along the real axis).
pub fn eval_h_limit(ell: usize, k: usize, p: Complex64, t: f64, delta: f64) -> Result<DVector<Complex64>> {
    let mut acc = DVector::from_element(ell + 1, cr(0.0));
    for (off, w) in [(delta, 4.0), (-delta, 4.0), (2.0 * delta, -1.0), (-2.0 * delta, -1.0)] {
        let fam = build_family(ell, k, p + off)?;
        acc += eval_H(&fam, t)?.h * cr(w / 6.0);
    }
    Ok(acc)
}

/// Polynomial coefficients (ascending powers) per component.
#[derive(Debug, Clone)]
pub struct PqDecomposition {
    pub p: Complex64,
    pub pc: Vec<Vec<Complex64>>,
    pub qc: Vec<Vec<Complex64>>,
}

fn poly_eval(c: &[Complex64], t: f64) -> Complex64 {
    c.iter().rev().fold(cr(0.0), |acc, &x| acc * t + x)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![cr(0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn one_minus_t_pow(m: usize) -> Vec<Complex64> {
    (0..m).fold(vec![cr(1.0)], |acc, _| poly_mul(&acc, &[cr(1.0), cr(-1.0)]))
}

fn terminating_poly(a: Complex64, b: Complex64, c: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut term = cr(1.0);
    out.push(term);
    for j in 0..n {
        let jf = j as f64;
        term *= (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0));
        out.push(term);
    }
    out
}

impl PqDecomposition {
    /// `t^p P(t)/(1-t)^(ell+1) + t^(1-p) Q(t)/(1-t)^(ell+1)`.
    pub fn eval(&self, t: f64) -> DVector<Complex64> {
        let n = self.pc.len();
        let den = (1.0 - t).powi(n as i32);
        let tp = cr(t).powc(self.p);
        let tq = cr(t).powc(cr(1.0) - self.p);
        DVector::from_fn(n, |i, _| (tp * poly_eval(&self.pc[i], t) + tq * poly_eval(&self.qc[i], t)) / den)
    }

    pub fn p_at(&self, t: f64) -> DVector<Complex64> {
        DVector::from_fn(self.pc.len(), |i, _| poly_eval(&self.pc[i], t))
    }

    pub fn q_at(&self, t: f64) -> DVector<Complex64> {
        DVector::from_fn(self.qc.len(), |i, _| poly_eval(&self.qc[i], t))
    }
}

/// Split `H` into its `t^p` and `t^(1-p)` parts (non-integer `2p` only).
pub fn pq_decomposition(fam: &FamilyDescriptor) -> Result<PqDecomposition> {
    let p = fam.params.p;
    if fam.params.two_p_integer().is_some() {
        return Err(Error::IntegerTwoP(p * 2.0));
    }
    let ell = fam.ell();
    let n = ell + 1;
    let mut pcheck = Vec::with_capacity(n);
    let mut qcheck = Vec::with_capacity(n);
    for i in 0..n {
        let fi = i as f64;
        let norm = pochhammer(cr(fi + 1.0), i + 1);
        let al = fam.a[i] * norm / pochhammer(cr(1.0) - p * 2.0, i + 1);
        let be = fam.a[i] * norm / pochhammer(p * 2.0 - 1.0, i + 1);
        let base = one_minus_t_pow(ell - i);
        let fp = terminating_poly(cr(-fi), p * 2.0 - fi - 1.0, p * 2.0, i);
        let fq = terminating_poly(cr(-fi), cr(1.0 - fi) - p * 2.0, cr(2.0) - p * 2.0, i);
        pcheck.push(poly_mul(&base, &fp).into_iter().map(|x| x * al).collect::<Vec<_>>());
        qcheck.push(poly_mul(&base, &fq).into_iter().map(|x| x * be).collect::<Vec<_>>());
    }
    let mix = |ch: &Vec<Vec<Complex64>>| -> Vec<Vec<Complex64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|d| (0..n).map(|j| ch[j][d] * fam.hahn.u[(i, j)]).sum())
                    .collect()
            })
            .collect()
    };
    Ok(PqDecomposition { p, pc: mix(&pcheck), qc: mix(&qcheck) })
}

fn real_integer(x: Complex64) -> Option<i64> {
    if x.im.abs() < INTEGER_TOL && (x.re - x.re.round()).abs() < INTEGER_TOL {
        Some(x.re.round() as i64)
    } else {
        None
    }
}

/// Parameters `(p', k')` giving the same spherical function.
pub fn equivalents(ell: usize, p: Complex64, k: usize) -> Vec<(Complex64, usize)> {
    let l = ell as i64;
    let mut out = vec![(p, k), (cr(1.0) - p, ell - k)];
    if let Some(j) = real_integer(cr((l + 1 - k as i64) as f64) - p * 2.0) {
        if (0..=l).contains(&j) {
            out.push((p, j as usize));
        }
    }
    if let Some(j) = real_integer(cr(k as f64 - 1.0) + p * 2.0) {
        if (0..=l).contains(&j) {
            out.push((cr(1.0) - p, j as usize));
        }
    }
    let mut uniq: Vec<(Complex64, usize)> = Vec::new();
    for e in out {
        if !uniq.iter().any(|u| u.1 == e.1 && (u.0 - e.0).norm() < INTEGER_TOL) {
            uniq.push(e);
        }
    }
    uniq
}

pub fn is_unitarizable(ell: usize, p: Complex64, k: usize) -> bool {
    let tol = 1e-9;
    if ell != 2 * k {
        (p.re - ((ell as f64 - 2.0 * k as f64) / 4.0 + 0.5)).abs() < tol
    } else {
        (p.re - 0.5).abs() < tol || p.im.abs() < tol
    }
}

pub fn adjoint_params(ell: usize, p: Complex64, k: usize) -> (Complex64, usize) {
    (cr((ell as f64 - 2.0 * k as f64) / 2.0 + 1.0) - p.conj(), k)
}

pub fn principal_series_params(ell: usize, p: Complex64, k: usize) -> (Complex64, i64) {
    let v = Complex64::i() * (cr(ell as f64 - 2.0 * k as f64 + 2.0) - p * 4.0);
    (v, 2 * k as i64 - ell as i64)
}

/// All families at `(ell, p)`, indexed by `k`.
pub fn phi_families(ell: usize, p: Complex64) -> Result<Vec<FamilyDescriptor>> {
    (0..=ell).map(|k| build_family(ell, k, p)).collect()
}

/// `Phi(t, p)` from prebuilt families: row `k` is `H_k(t)`.
pub fn phi_from_families(fams: &[FamilyDescriptor], t: f64) -> Result<DMatrix<Complex64>> {
    let n = fams.len();
    let mut m = DMatrix::from_element(n, n, cr(0.0));
    for (k, f) in fams.iter().enumerate() {
        let h = eval_H(f, t)?.h;
        for j in 0..n {
            m[(k, j)] = h[j];
        }
    }
    Ok(m)
}

pub fn phi_matrix(ell: usize, p: Complex64, t: f64) -> Result<DMatrix<Complex64>> {
    phi_from_families(&phi_families(ell, p)?, t)
}
