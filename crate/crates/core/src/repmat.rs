//! Representation matrices for the K-type `ell`: the `sl(2)` generators,
//! the structure matrices of the radial operators, the Hahn transform that
//! decouples them, and the leading-coefficient matrix `L(p)`.

use crate::error::{Error, Result};
use crate::specfun::f32_terminating_exact;
use num_traits::ToPrimitive;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Tolerance on the eigenvector denominators `ell + 1 - 2p - 2k - i`.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// `d pi(H1)`, `d pi(X1)`, `d pi(X2)` in the weight basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DPi {
    pub h1: DMatrix<i64>,
    pub x1: DMatrix<i64>,
    pub x2: DMatrix<i64>,
}

pub fn build_dpi(ell: usize) -> DPi {
    let n = ell + 1;
    let l = ell as i64;
    let h1 = DMatrix::from_fn(n, n, |i, j| if i == j { l - 2 * i as i64 } else { 0 });
    let x1 = DMatrix::from_fn(n, n, |i, j| if j == i + 1 { l - j as i64 + 1 } else { 0 });
    let x2 = DMatrix::from_fn(n, n, |i, j| if i == j + 1 { j as i64 + 1 } else { 0 });
    DPi { h1, x1, x2 }
}

/// Integer structure matrices `A0`, `C0`, `C1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrices {
    pub ell: usize,
    pub a0: DMatrix<i64>,
    pub c0: DMatrix<i64>,
    pub c1: DMatrix<i64>,
}

impl StructureMatrices {
    pub fn a0_c(&self) -> DMatrix<Complex64> {
        to_complex(&self.a0)
    }
    pub fn c0_c(&self) -> DMatrix<Complex64> {
        to_complex(&self.c0)
    }
    pub fn c1_c(&self) -> DMatrix<Complex64> {
        to_complex(&self.c1)
    }
    /// `C0 + C1`, the symmetric matrix diagonalized by the Hahn transform.
    pub fn c_sum(&self) -> DMatrix<i64> {
        &self.c0 + &self.c1
    }
}

pub fn to_complex(m: &DMatrix<i64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x as f64, 0.0))
}

pub fn structure_matrices(ell: usize) -> StructureMatrices {
    let n = ell + 1;
    let l = ell as i64;
    let a0 = DMatrix::from_fn(n, n, |i, j| if i == j { l - 2 * i as i64 } else { 0 });
    let c0 = DMatrix::from_fn(n, n, |i, j| {
        let ii = i as i64;
        if j + 1 == i || (i == j && i > 0) {
            let v = ii * (l - ii + 1);
            if i == j { -v } else { v }
        } else {
            0
        }
    });
    let c1 = DMatrix::from_fn(n, n, |i, j| {
        let ii = i as i64;
        if j == i + 1 || (i == j && i < ell) {
            let v = (ii + 1) * (l - ii);
            if i == j { -v } else { v }
        } else {
            0
        }
    });
    StructureMatrices { ell, a0, c0, c1 }
}

/// Hahn matrix `U[i][j] = 3F2(-j, -i, j+1; 1, -ell; 1)` and its inverse.
#[derive(Debug, Clone)]
pub struct HahnTransform {
    pub ell: usize,
    pub u: DMatrix<f64>,
    pub uinv: DMatrix<f64>,
    /// `||U||_inf * ||U^-1||_inf`.
    pub cond_estimate: f64,
}

impl HahnTransform {
    pub fn u_c(&self) -> DMatrix<Complex64> {
        self.u.map(|x| Complex64::new(x, 0.0))
    }
    pub fn uinv_c(&self) -> DMatrix<Complex64> {
        self.uinv.map(|x| Complex64::new(x, 0.0))
    }
    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.u_c() * v
    }
    pub fn apply_inv(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.uinv_c() * v
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn hahn_transform(ell: usize) -> Result<HahnTransform> {
    let n = ell + 1;
    let l = ell as i64;
    let mut u = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (ii, jj) = (i as i64, j as i64);
            let v = f32_terminating_exact(-jj, -ii, jj + 1, 1, -l)?;
            u[(i, j)] = v.to_f64().ok_or(Error::SingularU(ell))?;
        }
    }
    let lu = u.clone().lu();
    let mut uinv = lu.try_inverse().ok_or(Error::SingularU(ell))?;
    // One step of iterative refinement: X <- X + X (I - U X).
    let resid = DMatrix::<f64>::identity(n, n) - &u * &uinv;
    uinv += &uinv * resid;
    let cond_estimate = inf_norm(&u) * inf_norm(&uinv);
    if !cond_estimate.is_finite() {
        return Err(Error::SingularU(ell));
    }
    Ok(HahnTransform { ell, u, uinv, cond_estimate })
}

/// `L(p) = 4 C0 - 4 p A0`.
pub fn l_matrix(ell: usize, p: Complex64) -> DMatrix<Complex64> {
    let s = structure_matrices(ell);
    s.c0_c() * Complex64::new(4.0, 0.0) - s.a0_c() * (p * 4.0)
}

/// Diagonal of `L(p)`: `mu_k = -4p(ell - 2k) - 4k(ell - k + 1)`.
pub fn mu_values(ell: usize, p: Complex64) -> Vec<Complex64> {
    let l = ell as f64;
    (0..=ell)
        .map(|k| {
            let kf = k as f64;
            -p * 4.0 * (l - 2.0 * kf) - 4.0 * kf * (l - kf + 1.0)
        })
        .collect()
}

/// Eigenvector `v_k` of `L(p)`, normalized by `v_{k,k} = 1`.
#[derive(Debug, Clone)]
pub struct LEigenvector {
    pub k: usize,
    pub mu: Complex64,
    pub v: DVector<Complex64>,
    /// Smaller index `k'` sharing the eigenvalue, if any.
    pub degenerate_with: Option<usize>,
}

pub fn l_eigenvector(ell: usize, p: Complex64, k: usize) -> Result<LEigenvector> {
    if k > ell {
        return Err(Error::InvalidParameter(format!("k = {k} > ell = {ell}")));
    }
    let l = ell as f64;
    let kf = k as f64;
    let mut v = DVector::from_element(ell + 1, Complex64::new(0.0, 0.0));
    v[k] = Complex64::new(1.0, 0.0);
    for i in 1..=(ell - k) {
        let fi = i as f64;
        let den = -p * 2.0 + (l + 1.0 - 2.0 * kf - fi);
        if den.norm() < DEGENERACY_TOL {
            return Err(Error::DegenerateDenominator { k, i, p });
        }
        v[k + i] = v[k + i - 1] * ((kf + fi) * (l + 1.0 - fi - kf)) / (den * fi);
    }
    // A smaller index k' shares mu_k when ell + 1 - 2p - 2k' - (k - k') = 0.
    let degenerate_with = (0..k).find(|&kp| {
        let d = -p * 2.0 + (l + 1.0 - 2.0 * kp as f64 - (k - kp) as f64);
        d.norm() < DEGENERACY_TOL
    });
    Ok(LEigenvector { k, mu: mu_values(ell, p)[k], v, degenerate_with })
}

/// Index whose product-formula eigenvector spans the `mu_j` eigenspace:
/// `j` itself, or the larger partner when `mu_j` is a double eigenvalue.
pub fn eigenspace_index(ell: usize, p: Complex64, j: usize) -> usize {
    let l = ell as f64;
    for i in 1..=(ell - j) {
        let d = -p * 2.0 + (l + 1.0 - 2.0 * j as f64 - i as f64);
        if d.norm() < DEGENERACY_TOL {
            return j + i;
        }
    }
    j
}

/// Full eigendata of `L(p)`.
#[derive(Debug, Clone)]
pub struct LEigenData {
    pub p: Complex64,
    pub mu: Vec<Complex64>,
    /// `None` where the product formula degenerates.
    pub vectors: Vec<Option<DVector<Complex64>>>,
    pub degenerate_pairs: Vec<(usize, usize)>,
}

pub fn l_eigendata(ell: usize, p: Complex64) -> LEigenData {
    let mut vectors = Vec::with_capacity(ell + 1);
    let mut degenerate_pairs = Vec::new();
    for k in 0..=ell {
        match l_eigenvector(ell, p, k) {
            Ok(e) => {
                if let Some(kp) = e.degenerate_with {
                    degenerate_pairs.push((k, kp));
                }
                vectors.push(Some(e.v));
            }
            Err(_) => vectors.push(None),
        }
    }
    LEigenData { p, mu: mu_values(ell, p), vectors, degenerate_pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dpi_small_cases() {
        let d = build_dpi(0);
        assert_eq!(d.h1, DMatrix::from_element(1, 1, 0));
        let d = build_dpi(1);
        assert_eq!(d.h1, DMatrix::from_row_slice(2, 2, &[1, 0, 0, -1]));
        assert_eq!(d.x1, DMatrix::from_row_slice(2, 2, &[0, 1, 0, 0]));
        assert_eq!(d.x2, DMatrix::from_row_slice(2, 2, &[0, 0, 1, 0]));
    }

    #[test]
    fn dpi_sl2_relations() {
        for ell in 0..=10 {
            let d = build_dpi(ell);
            assert_eq!(&d.x1 * &d.x2 - &d.x2 * &d.x1, d.h1);
            assert_eq!(&d.h1 * &d.x1 - &d.x1 * &d.h1, &d.x1 * 2);
            assert_eq!(&d.h1 * &d.x2 - &d.x2 * &d.h1, &d.x2 * -2);
        }
    }

    #[test]
    fn structure_small_cases() {
        assert_eq!(structure_matrices(1).c_sum(), DMatrix::from_row_slice(2, 2, &[-1, 1, 1, -1]));
        assert_eq!(
            structure_matrices(2).c_sum(),
            DMatrix::from_row_slice(3, 3, &[-2, 2, 0, 2, -4, 2, 0, 2, -2])
        );
        for ell in 0..12 {
            let s = structure_matrices(ell);
            let ones = DVector::from_element(ell + 1, 1i64);
            assert_eq!(&s.c0 * &ones, DVector::zeros(ell + 1));
            assert_eq!(&s.c1 * &ones, DVector::zeros(ell + 1));
            assert_eq!(s.c_sum(), s.c_sum().transpose());
        }
    }

    #[test]
    fn hahn_small_cases() {
        let h = hahn_transform(1).unwrap();
        assert_eq!(h.u, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        let h = hahn_transform(2).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, -2.0, 1.0, -1.0, 1.0]);
        assert!((&h.u - want).amax() < 1e-15);
    }

    #[test]
    fn hahn_diagonalizes() {
        for ell in 1..=20 {
            let h = hahn_transform(ell).unwrap();
            let cs = structure_matrices(ell).c_sum().map(|x| x as f64);
            let d = DMatrix::from_fn(ell + 1, ell + 1, |i, j| if i == j { -((j * (j + 1)) as f64) } else { 0.0 });
            let scale = h.u.amax();
            assert!((&cs * &h.u - &h.u * d).amax() <= 1e-12 * scale, "ell = {ell}");
            let id = DMatrix::<f64>::identity(ell + 1, ell + 1);
            assert!((&h.u * &h.uinv - id).amax() <= 1e-12, "ell = {ell}");
            assert!((0..=ell).all(|i| h.u[(i, 0)] == 1.0 && h.u[(0, i)] == 1.0));
        }
    }

    #[test]
    fn l_matrix_small_cases() {
        let p = cx(0.3, -1.2);
        let l = l_matrix(1, p);
        assert_eq!(l[(0, 0)], -p * 4.0);
        assert_eq!(l[(0, 1)], cx(0.0, 0.0));
        assert_eq!(l[(1, 0)], cx(4.0, 0.0));
        assert_eq!(l[(1, 1)], p * 4.0 - 4.0);
        assert_eq!(l_matrix(0, p)[(0, 0)], cx(0.0, 0.0));
        let mu = mu_values(5, p);
        for (k, m) in mu.iter().enumerate() {
            assert!((l_matrix(5, p)[(k, k)] - m).norm() < 1e-14);
        }
    }

    #[test]
    fn mu_examples() {
        let p = cx(0.7, 0.2);
        let m = mu_values(5, p);
        let want = [p * -20.0, (p * 3.0 + 5.0) * -4.0, (p + 8.0) * -4.0, (p - 9.0) * 4.0, (p * 3.0 - 8.0) * 4.0, (p - 1.0) * 20.0];
        for k in 0..6 {
            assert!((m[k] - want[k]).norm() < 1e-13);
        }
        for ell in 0..8 {
            let a = mu_values(ell, cx(1.0, 0.0) - p);
            let b = mu_values(ell, p);
            for k in 0..=ell {
                assert!((a[k] - b[ell - k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn eigenvector_examples() {
        let p = cx(0.3, 0.45);
        let e = l_eigenvector(1, p, 0).unwrap();
        assert!((e.v[1] - (cx(1.0, 0.0) - p * 2.0).inv()).norm() < 1e-15);
        let e = l_eigenvector(4, p, 4).unwrap();
        assert_eq!(e.v, DVector::from_fn(5, |i, _| cx(if i == 4 { 1.0 } else { 0.0 }, 0.0)));
        let p = cx(0.3, 0.2);
        let l = l_matrix(3, p);
        for k in 0..=3 {
            let e = l_eigenvector(3, p, k).unwrap();
            assert!(crate::max_abs((&l * &e.v - &e.v * e.mu).iter()) < 1e-10);
        }
    }

    #[test]
    fn eigenvector_degeneracy() {
        // ell = 2, p = 1: mu_0 = mu_1, the k = 0 formula breaks.
        let p = cx(1.0, 0.0);
        assert!(matches!(l_eigenvector(2, p, 0), Err(Error::DegenerateDenominator { .. })));
        let e = l_eigenvector(2, p, 1).unwrap();
        assert_eq!(e.degenerate_with, Some(0));
        assert_eq!(eigenspace_index(2, p, 0), 1);
        let d = l_eigendata(2, p);
        assert_eq!(d.degenerate_pairs, vec![(1, 0)]);
        assert!(d.vectors[0].is_none());
    }
}
