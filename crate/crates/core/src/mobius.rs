//! Möbius transformations acting on the boundary of the Poincaré disk.
//!
//! A map is stored as a real matrix `[[p, q], [s, t]]` of determinant one
//! acting on the upper half-plane. Its disk form is obtained with the Cayley
//! transform `w ↦ (w - i)/(w + i)`, which gives the SU(1,1) matrix
//!
//! ```text
//! A = (p + t)/2 + i (q - s)/2,    B = (p - t)/2 - i (q + s)/2,
//! f(z) = (A z + B) / (B̄ z + Ā),   |A|² - |B|² = 1.
//! ```
//!
//! Equivalently `f(z) = e^{iα} (z - a)/(1 - ā z)` with `e^{iα} = A/Ā` and
//! `a = -B/A`, so `f(0) = B/Ā`. The circle coordinate is `x = θ / 2π` with
//! `z = e^{iθ}`; under this chart the real point `w` sits at
//! `x = 1/2 + atan(w)/π`, and `∞` sits at `x = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{sincos_turns, TAU};

/// Parabolic band on `| |trace| - 2 |`.
pub const PARABOLIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct MobiusMap {
    m: [[f64; 2]; 2],
}

impl TryFrom<[[f64; 2]; 2]> for MobiusMap {
    type Error = Error;
    fn try_from(m: [[f64; 2]; 2]) -> Result<Self> {
        MobiusMap::new(m)
    }
}

impl From<MobiusMap> for [[f64; 2]; 2] {
    fn from(m: MobiusMap) -> Self {
        m.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobiusKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusClass {
    pub kind: MobiusKind,
    pub trace: f64,
    /// Zero unless hyperbolic.
    pub translation_length: f64,
    /// `λ ≥ 1` with `λ + 1/λ = |trace|` for hyperbolic maps, 1 otherwise.
    pub multiplier: f64,
    /// Set for the identity (elliptic with angle 0).
    pub trivial: bool,
}

impl MobiusMap {
    /// Builds a map from a matrix with positive determinant, rescaling it to
    /// determinant one.
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("non-finite Möbius matrix entry".into()));
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det <= 0.0 {
            return Err(Error::InvalidMap(format!(
                "Möbius matrix must have positive determinant, got {det}"
            )));
        }
        let k = det.sqrt();
        Ok(Self {
            m: [[m[0][0] / k, m[0][1] / k], [m[1][0] / k, m[1][1] / k]],
        })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Rotation matrix of angle `phi`; acts on the disk as rotation by `-2 phi`.
    pub fn rotation_matrix(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self {
            m: [[c, -s], [s, c]],
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let a = self.m;
        let b = other.m;
        MobiusMap {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        let m = self.m;
        MobiusMap {
            m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]],
        }
    }

    pub fn pow(&self, n: u64) -> MobiusMap {
        let mut acc = MobiusMap::identity();
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// `g m g⁻¹`.
    pub fn conjugate_by(&self, g: &MobiusMap) -> MobiusMap {
        g.compose(self).compose(&g.inverse())
    }

    /// SU(1,1) coefficients `(A, B)`.
    pub fn disk_coefficients(&self) -> (Complex64, Complex64) {
        let [[p, q], [s, t]] = self.m;
        (
            Complex64::new(0.5 * (p + t), 0.5 * (q - s)),
            Complex64::new(0.5 * (p - t), -0.5 * (q + s)),
        )
    }

    /// `(α, a)` of the form `e^{iα}(z - a)/(1 - ā z)`.
    pub fn disk_form(&self) -> (f64, Complex64) {
        let (a_coef, b_coef) = self.disk_coefficients();
        (2.0 * a_coef.arg(), -b_coef / a_coef)
    }

    /// Image of the disk center, `f(0) = B/Ā`.
    pub fn image_of_origin(&self) -> Complex64 {
        let (a, b) = self.disk_coefficients();
        b / a.conj()
    }

    /// Lift of the boundary action in turns:
    /// `F(x) = x + (arg A + arg(1 + (B/A) e^{-2πix})) / π`.
    pub fn lift(&self, x: f64) -> f64 {
        let (a, b) = self.disk_coefficients();
        let ratio = b / a;
        let (s, c) = sincos_turns(x);
        let w = Complex64::new(1.0, 0.0) + ratio * Complex64::new(c, -s);
        x + (a.arg() + w.arg()) / PI
    }

    /// `1 / |B̄ z + Ā|²` at `z = e^{2πix}`.
    pub fn deriv(&self, x: f64) -> f64 {
        1.0 / self.denominator(x).norm_sqr()
    }

    fn denominator(&self, x: f64) -> Complex64 {
        let (a, b) = self.disk_coefficients();
        let (s, c) = sincos_turns(x);
        b.conj() * Complex64::new(c, s) + a.conj()
    }

    /// `D log DF = 4π Im(B̄ z / (B̄ z + Ā))`.
    pub fn affine_deriv(&self, x: f64) -> f64 {
        let (a, b) = self.disk_coefficients();
        let (s, c) = sincos_turns(x);
        let bz = b.conj() * Complex64::new(c, s);
        2.0 * TAU * (bz / (bz + a.conj())).im
    }

    pub fn lift_inverse(&self, y: f64) -> f64 {
        self.inverse().lift(y)
    }

    pub fn classify(&self, tol: f64) -> Result<MobiusClass> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        let trace = self.trace();
        let at = trace.abs();
        let trivial = (self.m[0][1].abs() + self.m[1][0].abs() + (self.m[0][0] - self.m[1][1]).abs())
            < 1e-14
            && (at - 2.0).abs() < 1e-14;
        if trivial {
            return Ok(MobiusClass {
                kind: MobiusKind::Elliptic,
                trace,
                translation_length: 0.0,
                multiplier: 1.0,
                trivial: true,
            });
        }
        let (kind, multiplier) = if (at - 2.0).abs() <= tol {
            (MobiusKind::Parabolic, 1.0)
        } else if at < 2.0 {
            (MobiusKind::Elliptic, 1.0)
        } else {
            (MobiusKind::Hyperbolic, 0.5 * (at + (at * at - 4.0).sqrt()))
        };
        Ok(MobiusClass {
            kind,
            trace,
            translation_length: 2.0 * multiplier.ln(),
            multiplier,
            trivial: false,
        })
    }

    /// Closed-form `var(log Df; S¹) = 4 log((1+r)/(1-r))` with `r = |f(0)|`,
    /// evaluated as `8 log(|A| + |B|)`.
    pub fn var_log_deriv_closed(&self) -> f64 {
        let (a, b) = self.disk_coefficients();
        (8.0 * (a.norm() + b.norm()).ln()).max(0.0)
    }

    pub fn asymptotic_distortion(&self) -> f64 {
        match self.classify(PARABOLIC_TOL) {
            Ok(c) if c.kind == MobiusKind::Hyperbolic => 4.0 * c.translation_length,
            _ => 0.0,
        }
    }

    /// Extremizing angles `(ξ, ξ + π)` of the boundary derivative, where
    /// `a = r e^{iξ}`, in turns. `None` for rotations.
    pub fn extremal_points(&self) -> Option<(f64, f64)> {
        let (_, a) = self.disk_form();
        if a.norm() == 0.0 {
            return None;
        }
        let xi = a.arg() / TAU;
        Some((crate::numeric::frac(xi), crate::numeric::frac(xi + 0.5)))
    }
}

/// Boundary derivative at angle `theta` (radians) for the disk form with
/// `a = r e^{iξ}`: `(1 - r²)/(1 - 2r cos(θ - ξ) + r²)`.
pub fn boundary_deriv_norm(m: &MobiusMap, theta: f64) -> f64 {
    m.deriv(theta / TAU)
}

/// Poincaré-disk distance normalized so that `dist(0, r) = log((1+r)/(1-r))`.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> Result<f64> {
    if !(z.norm() < 1.0) || !(w.norm() < 1.0) {
        return Err(Error::Domain(format!(
            "points must lie in the open unit disk: {z}, {w}"
        )));
    }
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    Ok(2.0 * (num / den).atanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn classification_examples() {
        let e = MobiusMap::rotation_matrix(PI / 5.0).classify(PARABOLIC_TOL).unwrap();
        assert_eq!(e.kind, MobiusKind::Elliptic);
        let p = MobiusMap::new([[1.0, 1.0], [0.0, 1.0]]).unwrap().classify(PARABOLIC_TOL).unwrap();
        assert_eq!(p.kind, MobiusKind::Parabolic);
        let h = MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap().classify(PARABOLIC_TOL).unwrap();
        assert_eq!(h.kind, MobiusKind::Hyperbolic);
        assert!((h.multiplier - 2.0).abs() < 1e-15);
        assert!((h.translation_length - 2.0 * 2f64.ln()).abs() < 1e-15);
        let id = MobiusMap::identity().classify(PARABOLIC_TOL).unwrap();
        assert!(id.trivial && id.kind == MobiusKind::Elliptic);
        assert!(MobiusMap::identity().classify(0.0).is_err());
    }

    #[test]
    fn determinant_is_normalized() {
        let m = MobiusMap::new([[3.0, 1.0], [2.0, 4.0]]).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        assert!(MobiusMap::new([[0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn disk_form_matches_coefficients() {
        let m = MobiusMap::new([[1.3, 0.4], [-0.2, 0.9]]).unwrap();
        let (alpha, a) = m.disk_form();
        for i in 0..20 {
            let th = 0.3 * i as f64;
            let z = Complex64::from_polar(1.0, th);
            let (ca, cb) = m.disk_coefficients();
            let w1 = (ca * z + cb) / (cb.conj() * z + ca.conj());
            let w2 = Complex64::from_polar(1.0, alpha) * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z);
            assert!((w1 - w2).norm() < 1e-13);
            // lift agrees with the boundary action
            let y = m.lift(th / TAU);
            assert!((Complex64::from_polar(1.0, TAU * y) - w1).norm() < 1e-12);
        }
        assert!((m.image_of_origin() + Complex64::from_polar(1.0, alpha) * a).norm() < 1e-14);
    }

    #[test]
    fn boundary_derivative_formula() {
        // r = 0.5, ξ = 0: value 3 at θ = ξ
        let m = mobius_with_origin_image(0.5, 0.0);
        let (_, a) = m.disk_form();
        let xi = a.arg();
        assert!((a.norm() - 0.5).abs() < 1e-14);
        assert!((boundary_deriv_norm(&m, xi) - 3.0).abs() < 1e-12);
        let rotation = MobiusMap::rotation_matrix(0.7);
        for i in 0..10 {
            assert!((boundary_deriv_norm(&rotation, i as f64) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = MobiusMap::new([[1.2, 0.7], [0.1, 0.9]]).unwrap();
        for i in 0..50 {
            let x = 0.02 * i as f64;
            assert!((fd(|t| m.lift(t), x, 1e-6) - m.deriv(x)).abs() < 1e-8);
            assert!((fd(|t| m.deriv(t).ln(), x, 1e-6) - m.affine_deriv(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn closed_variation_examples() {
        assert_eq!(MobiusMap::rotation_matrix(0.3).var_log_deriv_closed(), 0.0);
        let m = mobius_with_origin_image(0.5, 1.1);
        assert!((m.var_log_deriv_closed() - 4.0 * 3f64.ln()).abs() < 1e-12);
        let d = hyperbolic_distance(Complex64::new(0.0, 0.0), m.image_of_origin()).unwrap();
        assert!((m.var_log_deriv_closed() - 4.0 * d).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_distance_basics() {
        let o = Complex64::new(0.0, 0.0);
        assert_eq!(hyperbolic_distance(o, o).unwrap(), 0.0);
        assert!((hyperbolic_distance(o, Complex64::new(0.5, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(hyperbolic_distance(o, Complex64::new(1.0, 0.0)).is_err());
        let z = Complex64::new(0.3, -0.2);
        let w = Complex64::new(-0.5, 0.6);
        assert!((hyperbolic_distance(z, w).unwrap() - hyperbolic_distance(w, z).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_distortion_trichotomy() {
        assert_eq!(MobiusMap::rotation_matrix(PI / 5.0).asymptotic_distortion(), 0.0);
        assert_eq!(MobiusMap::new([[1.0, 1.0], [0.0, 1.0]]).unwrap().asymptotic_distortion(), 0.0);
        let h = MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap();
        assert!((h.asymptotic_distortion() - 8.0 * 2f64.ln()).abs() < 1e-14);
        // iterates of the diagonal map have exactly linear closed-form variation
        let h200 = h.pow(200);
        assert!((h200.var_log_deriv_closed() / 200.0 - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn parabolic_shrinking_identity() {
        let t = 0.7;
        let lambda = 0.35;
        let p = MobiusMap::new([[1.0, t], [0.0, 1.0]]).unwrap();
        let d = MobiusMap::new([[lambda, 0.0], [0.0, 1.0 / lambda]]).unwrap();
        let c = p.conjugate_by(&d).matrix();
        let expected = [[1.0, lambda * lambda * t], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((c[i][j] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    /// Map with `|f(0)| = r`: hyperbolic translation along the real axis
    /// followed by a rotation of angle `phi`.
    fn mobius_with_origin_image(r: f64, phi: f64) -> MobiusMap {
        // diag(k, 1/k) sends 0 to (k² - 1)/(k² + 1) in the disk
        let k = ((1.0 + r) / (1.0 - r)).sqrt();
        let d = MobiusMap::new([[k, 0.0], [0.0, 1.0 / k]]).unwrap();
        MobiusMap::rotation_matrix(phi).compose(&d)
    }
}

