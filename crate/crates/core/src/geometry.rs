//! The model `H = SL(2,C)/SU(2)` as pairs `(z, r)` with `r > 0`.

use crate::error::{Error, Result};
use num_complex::Complex64;

const DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub z: Complex64,
    pub r: f64,
}

impl HPoint {
    pub fn new(z: Complex64, r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(HPoint { z, r })
        } else {
            Err(Error::InvalidParameter(format!("r = {r} must be positive")))
        }
    }

    /// The base point `o = (0, 1)`.
    pub fn origin() -> Self {
        HPoint { z: Complex64::new(0.0, 0.0), r: 1.0 }
    }

    pub fn dist(&self, other: &HPoint) -> f64 {
        (self.z - other.z).norm().max((self.r - other.r).abs())
    }
}

/// `[[a, b], [c, d]]` in `SL(2,C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl GroupElement {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        GroupElement { a, b, c, d }
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        GroupElement { a: o, b: z, c: z, d: o }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, h: &GroupElement) -> GroupElement {
        GroupElement {
            a: self.a * h.a + self.b * h.c,
            b: self.a * h.b + self.b * h.d,
            c: self.c * h.a + self.d * h.c,
            d: self.c * h.b + self.d * h.d,
        }
    }

    pub fn adjoint(&self) -> GroupElement {
        GroupElement { a: self.a.conj(), b: self.c.conj(), c: self.b.conj(), d: self.d.conj() }
    }

    fn check(&self) -> Result<()> {
        let e = (self.det() - 1.0).norm();
        if e > DET_TOL {
            Err(Error::NotUnimodular(e))
        } else {
            Ok(())
        }
    }
}

/// Image of `g` in the quotient: `(a c* + b d*, |c|^2 + |d|^2)`.
pub fn project(g: &GroupElement) -> Result<HPoint> {
    g.check()?;
    Ok(HPoint {
        z: g.a * g.c.conj() + g.b * g.d.conj(),
        r: g.c.norm_sqr() + g.d.norm_sqr(),
    })
}

/// Left action of `g` on a point.
pub fn act(g: &GroupElement, pt: &HPoint) -> Result<HPoint> {
    g.check()?;
    let (z, r) = (pt.z, pt.r);
    let zs = (g.a * g.c.conj() + (g.a * z + g.b * r) * (g.c.conj() * z.conj() + g.d.conj() * r)) / r;
    let rs = (g.c.norm_sqr() + (g.c * z + g.d * r).norm_sqr()) / r;
    Ok(HPoint { z: zs, r: rs })
}

/// Write `pt = A . (0, s)` with `A` in `SU(2)` and `0 < s <= 1`.
pub fn orbit_decompose(pt: &HPoint) -> Result<(f64, GroupElement)> {
    let (z, r) = (pt.z, pt.r);
    let z2 = z.norm_sqr();
    if z2 == 0.0 {
        if r > 1.0 {
            return Err(Error::OutOfChart(r));
        }
        return Ok((r, GroupElement::identity()));
    }
    let rad = ((z2 + (r + 1.0).powi(2)) * (z2 + (1.0 - r).powi(2))).sqrt();
    let s = ((1.0 + z2 + r * r - rad) / (2.0 * r)).clamp(f64::MIN_POSITIVE, 1.0);
    let n = ((1.0 - r * s).powi(2) + s * s * z2).sqrt();
    let a = Complex64::new((1.0 - r * s) / n, 0.0);
    let b = z * (s / n);
    Ok((s, GroupElement { a: a.conj(), b: -b, c: b.conj(), d: a }))
}
