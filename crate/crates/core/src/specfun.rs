//! Special-function kernels with complex parameters.
//!
//! Everything here works in double precision. The Gauss function is summed
//! directly for `z <= 0.9` (`z <= 0.99` when `c - a - b` is within 1e-2 of
//! an integer, where the connection coefficients nearly cancel); closer to 1
//! the classical `1 - z` connection formulas take over (including the
//! logarithmic ones when `c - a - b` is an integer), so that arguments like
//! `z = 1 - 1e-8` stay cheap.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use std::f64::consts::PI;

/// Relative size of a term below which summation stops.
pub const REL_TOL: f64 = 1e-16;
/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 100_000;

const Z_SWITCH: f64 = 0.9;
const Z_SWITCH_NEAR_INT: f64 = 0.99;
const NEAR_INT_WIDE: f64 = 1e-2;
const INT_TOL: f64 = 1e-12;
const NEAR_INT_TOL: f64 = 1e-14;

/// Value of a hypergeometric evaluation together with summation metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperSeriesResult {
    pub value: Complex64,
    pub terms_used: usize,
    /// Magnitude of the last term added.
    pub trunc_estimate: f64,
}

impl HyperSeriesResult {
    fn exact(value: Complex64, terms_used: usize) -> Self {
        HyperSeriesResult { value, terms_used: terms_used.max(1), trunc_estimate: 0.0 }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Rising factorial `(x)_n` as a running product.
pub fn pochhammer(x: Complex64, n: usize) -> Complex64 {
    (0..n).fold(c(1.0), |acc, m| acc * (x + m as f64))
}

/// Returns `Some(n)` when `x = -n` for a non-negative integer `n`.
pub fn nonpositive_integer(x: Complex64) -> Option<usize> {
    let tol = INT_TOL * (1.0 + x.norm());
    if x.im.abs() <= tol && x.re <= tol && (x.re - x.re.round()).abs() <= tol {
        Some((-x.re.round()) as usize)
    } else {
        None
    }
}

fn near_integer(x: Complex64, tol: f64) -> Option<i64> {
    if x.im.abs() <= tol && (x.re - x.re.round()).abs() <= tol {
        Some(x.re.round() as i64)
    } else {
        None
    }
}

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex log-Gamma. The imaginary part is not reduced to the principal
/// branch; only `exp(ln_gamma)` is meaningful.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return c(PI.ln()) - s.ln() - ln_gamma(c(1.0) - z);
    }
    let z = z - 1.0;
    let mut x = c(LANCZOS[0]);
    for (i, &coef) in LANCZOS.iter().enumerate().skip(1) {
        x += coef / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    c(0.5 * (2.0 * PI).ln()) + (z + 0.5) * t.ln() - t + x.ln()
}

/// Complex Gamma function; infinite at the poles.
pub fn gamma(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return c(f64::INFINITY);
    }
    ln_gamma(z).exp()
}

/// `1/Gamma(z)`, exactly zero at the poles of Gamma.
pub fn rgamma(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return c(0.0);
    }
    (-ln_gamma(z)).exp()
}

/// Complex digamma function.
pub fn digamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return digamma(c(1.0) - z) - PI / (z * PI).tan();
    }
    let mut z = z;
    let mut acc = c(0.0);
    while z.re < 10.0 {
        acc -= z.inv();
        z += 1.0;
    }
    let z2 = (z * z).inv();
    // Bernoulli tail up to z^-14.
    let tail = z2
        * (c(1.0 / 12.0)
            - z2 * (c(1.0 / 120.0)
                - z2 * (c(1.0 / 252.0)
                    - z2 * (c(1.0 / 240.0)
                        - z2 * (c(1.0 / 132.0) - z2 * (c(691.0 / 32760.0) - z2 / 12.0))))));
    acc + z.ln() - z.inv() * 0.5 - tail
}

/// `prod Gamma(num) / prod Gamma(den)`, zero if a denominator argument is a pole.
fn gamma_ratio(num: &[Complex64], den: &[Complex64]) -> Complex64 {
    if den.iter().any(|&d| nonpositive_integer(d).is_some()) {
        return c(0.0);
    }
    let mut l = c(0.0);
    for &n in num {
        l += ln_gamma(n);
    }
    for &d in den {
        l -= ln_gamma(d);
    }
    l.exp()
}

fn check_pole(cc: Complex64, stop: Option<usize>) -> Result<()> {
    if let Some(m) = nonpositive_integer(cc) {
        match stop {
            Some(n) if n <= m => {}
            _ => return Err(Error::PoleBeforeTermination { n: m + 1 }),
        }
    }
    Ok(())
}

fn termination(a: Complex64, b: Complex64) -> Option<usize> {
    match (nonpositive_integer(a), nonpositive_integer(b)) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

fn polynomial(a: Complex64, b: Complex64, cc: Complex64, z: f64, n: usize) -> HyperSeriesResult {
    let mut sum = c(1.0);
    let mut term = c(1.0);
    for k in 0..n {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((cc + kf) * (kf + 1.0)) * z;
        sum += term;
    }
    HyperSeriesResult::exact(sum, n + 1)
}

fn direct_series(a: Complex64, b: Complex64, cc: Complex64, z: f64) -> Result<HyperSeriesResult> {
    let mut sum = c(1.0);
    let mut term = c(1.0);
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((cc + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.norm() <= REL_TOL * sum.norm() {
            small += 1;
            if small == 2 {
                return Ok(HyperSeriesResult { value: sum, terms_used: k + 2, trunc_estimate: term.norm() });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NoConvergence { terms: MAX_TERMS, estimate: term.norm() })
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for `z` in `[0, 1)`.
pub fn gauss2f1(a: Complex64, b: Complex64, cc: Complex64, z: f64) -> Result<HyperSeriesResult> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("z = {z} outside [0, 1)")));
    }
    let stop = termination(a, b);
    check_pole(cc, stop)?;
    if let Some(n) = stop {
        return Ok(polynomial(a, b, cc, z, n));
    }
    if z == 0.0 {
        return Ok(HyperSeriesResult::exact(c(1.0), 1));
    }
    let s = cc - a - b;
    let almost_int = near_integer(s, NEAR_INT_WIDE);
    if z <= Z_SWITCH || (almost_int.is_some() && z <= Z_SWITCH_NEAR_INT) {
        return direct_series(a, b, cc, z);
    }
    match almost_int {
        Some(m) if m >= 0 && (s - m as f64).norm() <= NEAR_INT_TOL => near_one_log(a, b, cc, z, m as usize),
        Some(m) if m >= 0 => near_one_interpolated(a, b, cc, z, s - m as f64),
        Some(m) => {
            // Euler: F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z), which flips the sign of m.
            let r = gauss2f1(cc - a, cc - b, cc, z)?;
            Ok(HyperSeriesResult { value: r.value * (1.0 - z).powi(m as i32), ..r })
        }
        None => near_one_generic(a, b, cc, z, s),
    }
}

fn near_one_generic(a: Complex64, b: Complex64, cc: Complex64, z: f64, s: Complex64) -> Result<HyperSeriesResult> {
    let w = 1.0 - z;
    let mut value = c(0.0);
    let mut terms = 0;
    let mut est: f64 = 0.0;
    let g1 = gamma_ratio(&[cc, s], &[cc - a, cc - b]);
    if g1 != c(0.0) {
        let r = gauss2f1(a, b, c(1.0) - s, w)?;
        value += g1 * r.value;
        terms += r.terms_used;
        est = est.max(g1.norm() * r.trunc_estimate);
    }
    let g2 = gamma_ratio(&[cc, -s], &[a, b]);
    if g2 != c(0.0) {
        let r = gauss2f1(cc - a, cc - b, s + 1.0, w)?;
        value += g2 * c(w).powc(s) * r.value;
        terms += r.terms_used;
        est = est.max((g2 * c(w).powc(s)).norm() * r.trunc_estimate);
    }
    Ok(HyperSeriesResult { value, terms_used: terms.max(1), trunc_estimate: est })
}

/// `c - a - b = m + d` with `0 < |d| < NEAR_INT_WIDE`: the generic formula
/// loses about `eps / |d|^2` there, so interpolate in `c` from Chebyshev
/// nodes at distance `~NEAR_INT_WIDE` from the integer.
fn near_one_interpolated(a: Complex64, b: Complex64, cc: Complex64, z: f64, d: Complex64) -> Result<HyperSeriesResult> {
    const N: usize = 12;
    let h = NEAR_INT_WIDE;
    let x = d / h;
    let (mut num, mut den) = (c(0.0), c(0.0));
    let mut terms = 0;
    let mut est: f64 = 0.0;
    for j in 0..N {
        let theta = (2 * j + 1) as f64 * std::f64::consts::PI / (2 * N) as f64;
        let xj = theta.cos();
        let cj = cc - d + h * xj;
        let r = near_one_generic(a, b, cj, z, cj - a - b)?;
        terms += r.terms_used;
        est = est.max(r.trunc_estimate);
        if x == c(xj) {
            return Ok(HyperSeriesResult { terms_used: terms, ..r });
        }
        let w = if j % 2 == 0 { theta.sin() } else { -theta.sin() } / (x - xj);
        num += w * r.value;
        den += w;
    }
    Ok(HyperSeriesResult { value: num / den, terms_used: terms, trunc_estimate: est })
}

// c = a + b + m with m >= 0; a, b not non-positive integers.
fn near_one_log(a: Complex64, b: Complex64, cc: Complex64, z: f64, m: usize) -> Result<HyperSeriesResult> {
    let w = 1.0 - z;
    let mut value = c(0.0);
    if m > 0 {
        let pre = gamma_ratio(&[c(m as f64), cc], &[a + m as f64, b + m as f64]);
        if pre != c(0.0) {
            let mut term = c(1.0);
            let mut sum = c(1.0);
            for n in 0..m - 1 {
                let nf = n as f64;
                term *= (a + nf) * (b + nf) / ((nf + 1.0) * (nf + 1.0 - m as f64)) * w;
                sum += term;
            }
            value += pre * sum;
        }
    }
    let pre = gamma_ratio(&[cc], &[a, b]) * (-w).powi(m as i32);
    if pre == c(0.0) {
        return Ok(HyperSeriesResult::exact(value, m));
    }
    let mf = m as f64;
    let lw = w.ln();
    // psi(n+1), psi(n+m+1), psi(a+n+m), psi(b+n+m), advanced by recurrence.
    let mut psi1 = digamma(c(1.0));
    let mut psim = digamma(c(mf + 1.0));
    let mut psia = digamma(a + mf);
    let mut psib = digamma(b + mf);
    let fact_m: f64 = (1..=m).map(|k| k as f64).product();
    let mut coef = c(1.0 / fact_m);
    let mut sum = c(0.0);
    let mut small = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let term = coef * (lw - psi1 - psim + psia + psib);
        sum += term;
        if term.norm() <= REL_TOL * sum.norm() && n > 0 {
            small += 1;
            if small == 2 {
                value -= pre * sum;
                return Ok(HyperSeriesResult {
                    value,
                    terms_used: n + 1 + m,
                    trunc_estimate: (pre * term).norm(),
                });
            }
        } else {
            small = 0;
        }
        coef *= (a + mf + nf) * (b + mf + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * w;
        psi1 += 1.0 / (nf + 1.0);
        psim += 1.0 / (nf + mf + 1.0);
        psia += (a + mf + nf).inv();
        psib += (b + mf + nf).inv();
    }
    Err(Error::NoConvergence { terms: MAX_TERMS, estimate: sum.norm() * REL_TOL })
}

/// First or second derivative of `2F1(a, b; c; z)` in `z`.
pub fn gauss2f1_deriv(a: Complex64, b: Complex64, cc: Complex64, z: f64, order: u32) -> Result<Complex64> {
    let (num, den, shift) = match order {
        1 => (a * b, cc, 1.0),
        2 => (a * b * (a + 1.0) * (b + 1.0), cc * (cc + 1.0), 2.0),
        _ => return Err(Error::InvalidParameter(format!("derivative order {order}"))),
    };
    if num == c(0.0) {
        // Validate the original call so that errors still surface.
        gauss2f1(a, b, cc, z)?;
        return Ok(c(0.0));
    }
    let r = gauss2f1(a + shift, b + shift, cc + shift, z)?;
    Ok(num / den * r.value)
}

/// Terminating `3F2(a1, a2, a3; b1, b2; 1)` with `a1 = -n <= 0`.
pub fn f32_terminating(a1: i64, a2: Complex64, a3: Complex64, b1: Complex64, b2: Complex64) -> Result<Complex64> {
    if a1 > 0 {
        return Err(Error::InvalidParameter(format!("a1 = {a1} must be <= 0")));
    }
    let a1c = c(a1 as f64);
    let mut sum = c(1.0);
    let mut term = c(1.0);
    for k in 0..(-a1) as usize {
        let kf = k as f64;
        let num = (a1c + kf) * (a2 + kf) * (a3 + kf);
        if num == c(0.0) {
            break;
        }
        let den = (b1 + kf) * (b2 + kf) * (kf + 1.0);
        if den.norm() <= INT_TOL {
            return Err(Error::PoleBeforeTermination { n: k + 1 });
        }
        term *= num / den;
        sum += term;
    }
    Ok(sum)
}

/// Exact terminating `3F2(a1, a2, a3; b1, b2; 1)` for integer parameters,
/// with `a1 = -n <= 0`.
pub fn f32_terminating_exact(a1: i64, a2: i64, a3: i64, b1: i64, b2: i64) -> Result<BigRational> {
    if a1 > 0 {
        return Err(Error::InvalidParameter(format!("a1 = {a1} must be <= 0")));
    }
    let mut sum = BigRational::one();
    let mut term = BigRational::one();
    for k in 0..-a1 {
        let num = (a1 + k) * (a2 + k) * (a3 + k);
        if num == 0 {
            break;
        }
        let den = (b1 + k) * (b2 + k) * (k + 1);
        if den == 0 {
            return Err(Error::PoleBeforeTermination { n: k as usize + 1 });
        }
        term *= BigRational::new(BigInt::from(num), BigInt::from(den));
        sum += &term;
    }
    Ok(sum)
}

/// Gauss summation `Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b))`.
pub fn gauss_sum_at_1(a: Complex64, b: Complex64, cc: Complex64) -> Result<Complex64> {
    let s = cc - a - b;
    if s.re <= 0.0 {
        return Err(Error::DivergentAtOne(s.re));
    }
    if a == c(0.0) || b == c(0.0) {
        return Ok(c(1.0));
    }
    check_pole(cc, termination(a, b))?;
    Ok(gamma_ratio(&[cc, s], &[cc - a, cc - b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(cx(0.3, 2.0), 0), c(1.0));
        assert_eq!(pochhammer(c(3.0), 2), c(12.0));
        assert_eq!(pochhammer(c(-2.0), 4), c(0.0));
    }

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(c(5.0)).re, 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(c(0.5)).re, PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(c(-0.5)).re, -2.0 * PI.sqrt(), max_relative = 1e-14);
        // |Gamma(i)|^2 = pi / sinh(pi)
        assert_relative_eq!(gamma(cx(0.0, 1.0)).norm_sqr(), PI / PI.sinh(), max_relative = 1e-13);
        assert_eq!(rgamma(c(-3.0)), c(0.0));
    }

    #[test]
    fn digamma_known_values() {
        let euler = 0.577_215_664_901_532_9;
        assert_relative_eq!(digamma(c(1.0)).re, -euler, max_relative = 1e-14);
        assert_relative_eq!(digamma(c(0.5)).re, -euler - 2.0 * 2f64.ln(), max_relative = 1e-14);
        // Im psi(1 + i) = -1/2 + (pi/2) coth(pi)
        let im = -0.5 + 0.5 * PI / PI.tanh();
        assert_relative_eq!(digamma(cx(1.0, 1.0)).im, im, max_relative = 1e-13);
    }

    #[test]
    fn gauss2f1_examples() {
        let r = gauss2f1(cx(0.2, 1.0), c(3.0), c(1.5), 0.0).unwrap();
        assert_eq!(r.value, c(1.0));
        let r = gauss2f1(c(1.0), c(1.0), c(2.0), 0.5).unwrap();
        assert_relative_eq!(r.value.re, 2.0 * 2f64.ln(), max_relative = 1e-15);
        let (b, cc, z) = (cx(0.7, -0.2), cx(2.5, 0.1), 0.37);
        let r = gauss2f1(c(-1.0), b, cc, z).unwrap();
        assert!((r.value - (c(1.0) - b / cc * z)).norm() < 1e-15);
        assert_eq!(r.trunc_estimate, 0.0);
    }

    #[test]
    fn pole_before_termination() {
        assert!(matches!(
            gauss2f1(c(0.5), c(1.0), c(-2.0), 0.3),
            Err(Error::PoleBeforeTermination { .. })
        ));
        // Termination at n = 2 before the pole of (-3)_n at n = 4.
        assert!(gauss2f1(c(-2.0), c(1.0), c(-3.0), 0.3).is_ok());
    }

    #[test]
    fn near_one_generic_matches_elementary() {
        // 2F1(1,1;2;z) = -ln(1-z)/z
        for &z in &[0.91, 0.99, 1.0 - 1e-6, 1.0 - 1e-10] {
            let v = gauss2f1(c(1.0), c(1.0), c(2.0), z).unwrap().value;
            assert_relative_eq!(v.re, -(1.0 - z).ln() / z, max_relative = 1e-13);
        }
        // 2F1(a,b;b;z) = (1-z)^(-a) with non-integer c-a-b.
        let a = cx(0.3, 0.4);
        for &z in &[0.95, 0.999] {
            let v = gauss2f1(a, c(1.7), c(1.7), z).unwrap().value;
            let want = c(1.0 - z).powc(-a);
            assert!((v - want).norm() < 1e-13 * want.norm());
        }
    }

    #[test]
    fn near_one_branches_agree_with_direct_sum() {
        // Compare the connection formulas against direct summation at z = 0.95.
        let cases = [
            (cx(1.2, 0.3), cx(0.4, -0.1), cx(2.1, 0.5)),
            (c(2.0), c(3.0), c(4.0)),  // c-a-b = -1
            (c(1.0), c(2.0), c(3.0)),  // c-a-b = 0
            (c(1.0), c(1.5), c(4.5)),  // c-a-b = 2
            (cx(1.0, 0.5), cx(2.0, -0.5), c(3.0)), // c-a-b = 0, complex
        ];
        for (a, b, cc) in cases {
            let z = 0.95;
            let got = gauss2f1(a, b, cc, z).unwrap().value;
            let want = direct_series(a, b, cc, z).unwrap().value;
            assert!((got - want).norm() < 1e-12 * want.norm(), "{a} {b} {cc}: {got} vs {want}");
        }
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(gauss2f1_deriv(c(0.0), c(2.0), c(3.0), 0.4, 1).unwrap(), c(0.0));
        let d = gauss2f1_deriv(c(1.0), c(1.0), c(2.0), 0.5, 1).unwrap();
        let f = |z: f64| -(1.0 - z).ln() / z;
        let h = 1e-6;
        assert_relative_eq!(d.re, (f(0.5 + h) - f(0.5 - h)) / (2.0 * h), max_relative = 1e-8);
        assert_relative_eq!(d.re, 1.227_411_277_760_219, max_relative = 1e-12);
        let (b, cc) = (cx(0.7, -0.2), cx(2.5, 0.1));
        assert!((gauss2f1_deriv(c(-1.0), b, cc, 0.3, 1).unwrap() + b / cc).norm() < 1e-15);
        assert_eq!(gauss2f1_deriv(c(-1.0), b, cc, 0.3, 2).unwrap(), c(0.0));
    }

    #[test]
    fn f32_examples() {
        let z = cx(0.3, 0.1);
        assert_eq!(f32_terminating(0, z, z, z, z).unwrap(), c(1.0));
        assert_eq!(f32_terminating(-1, c(-1.0), c(2.0), c(1.0), c(-1.0)).unwrap(), c(-1.0));
        assert_relative_eq!(
            f32_terminating(-2, c(-2.0), c(3.0), c(1.0), c(-2.0)).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            f32_terminating(-3, c(0.5), c(1.0), c(-1.0), c(2.0)),
            Err(Error::PoleBeforeTermination { .. })
        ));
    }

    #[test]
    fn gauss_sum_examples() {
        assert_relative_eq!(gauss_sum_at_1(c(1.0), c(-1.0), c(2.0)).unwrap().re, 0.5, max_relative = 1e-14);
        assert_eq!(gauss_sum_at_1(cx(0.3, 1.0), c(0.0), c(2.0)).unwrap(), c(1.0));
        let (i, p) = (0.0, 1.5);
        let v = gauss_sum_at_1(c(i + 1.0), c(i + 2.0 - 2.0 * p), c(2.0 * i + 2.0)).unwrap();
        assert_relative_eq!(v.re, 0.5, max_relative = 1e-14);
        assert!(matches!(gauss_sum_at_1(c(1.0), c(1.0), c(2.0)), Err(Error::DivergentAtOne(_))));
    }
}
