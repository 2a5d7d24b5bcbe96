//! Grid-sampled monotone diffeomorphisms of `[0, 1]`, extended to the line by
//! `h(x + 1) = h(x) + 1`. Values are interpolated with monotone cubic Hermite
//! pieces built from the exact derivative samples; derivatives use Hermite
//! pieces built from `Dh` and `D²h = Dh · ψ`.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::numeric::solve_increasing;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDiffeo {
    values: Vec<f64>,
    dvalues: Vec<f64>,
    /// `D²h / Dh` at the grid points.
    affine: Vec<f64>,
}

/// Normalization slack for `h(1) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

impl SampledDiffeo {
    /// Builds `h` on the uniform grid `i / N` from samples of `log Dh` (up to
    /// an additive constant) and of its derivative `ψ = D log Dh`, normalizing
    /// so that `h(0) = 0` and `h(1) = 1`. Both slices have `N + 1` entries.
    pub fn from_log_derivative(log_d: &[f64], psi: &[f64]) -> Result<Self> {
        let n1 = log_d.len();
        if n1 < 3 || psi.len() != n1 {
            return Err(Error::InvalidMap(format!(
                "need matching sample arrays of length >= 3, got {} and {}",
                n1,
                psi.len()
            )));
        }
        let shift = log_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::InvalidMap("non-finite log-derivative sample".into()));
        }
        let d: Vec<f64> = log_d.iter().map(|v| (v - shift).exp()).collect();
        let h = 1.0 / (n1 - 1) as f64;
        let mut values = Vec::with_capacity(n1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..n1 - 1 {
            let (d0, d1) = (d[i], d[i + 1]);
            let (s0, s1) = (d0 * psi[i], d1 * psi[i + 1]);
            acc += 0.5 * h * (d0 + d1) + h * h / 12.0 * (s0 - s1);
            values.push(acc);
        }
        let z = acc;
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidMap(format!(
                "derivative is not normalizable (integral {z})"
            )));
        }
        for v in values.iter_mut() {
            *v /= z;
        }
        let dvalues = d.into_iter().map(|v| v / z).collect();
        Self::from_parts(values, dvalues, psi.to_vec())
    }

    /// Takes samples as they are, after validation.
    pub fn from_parts(values: Vec<f64>, dvalues: Vec<f64>, affine: Vec<f64>) -> Result<Self> {
        let n1 = values.len();
        if n1 < 3 || dvalues.len() != n1 || affine.len() != n1 {
            return Err(Error::InvalidMap("sample arrays must share a length >= 3".into()));
        }
        if values[0] != 0.0 || (values[n1 - 1] - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMap(format!(
                "expected h(0) = 0 and h(1) = 1, got {} and {}",
                values[0],
                values[n1 - 1]
            )));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMap("values are not strictly increasing".into()));
        }
        if dvalues.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidMap("derivative samples must be positive".into()));
        }
        if affine.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidMap("non-finite affine-derivative sample".into()));
        }
        let mut values = values;
        values[n1 - 1] = 1.0;
        Ok(Self {
            values,
            dvalues,
            affine,
        })
    }

    pub fn identity(n: usize) -> Self {
        let h = 1.0 / n as f64;
        let mut values: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        values[n] = 1.0;
        Self {
            values,
            dvalues: vec![1.0; n + 1],
            affine: vec![0.0; n + 1],
        }
    }

    pub fn grid_len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        i as f64 / self.grid_len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dvalues(&self) -> &[f64] {
        &self.dvalues
    }

    pub fn affine_samples(&self) -> &[f64] {
        &self.affine
    }

    fn locate(&self, x: f64) -> (f64, usize, f64) {
        let n = self.grid_len();
        let k = x.floor();
        let u = (x - k) * n as f64;
        let i = (u.floor() as usize).min(n - 1);
        (k, i, u - i as f64)
    }

    /// Hermite slopes on cell `i` after Fritsch–Carlson limiting.
    fn cell_slopes(&self, i: usize) -> (f64, f64, f64) {
        let h = 1.0 / self.grid_len() as f64;
        let secant = (self.values[i + 1] - self.values[i]) / h;
        let (mut m0, mut m1) = (self.dvalues[i], self.dvalues[i + 1]);
        let (a, b) = (m0 / secant, m1 / secant);
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
        (h, m0, m1)
    }

    fn cubic(&self, i: usize, t: f64) -> (f64, f64) {
        let (h, m0, m1) = self.cell_slopes(i);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let dv = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, dv)
    }

    pub fn lift(&self, x: f64) -> f64 {
        let (k, i, t) = self.locate(x);
        k + self.cubic(i, t).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (_, i, t) = self.locate(x);
        let h = 1.0 / self.grid_len() as f64;
        let (d0, d1) = (self.dvalues[i], self.dvalues[i + 1]);
        let (s0, s1) = (d0 * self.affine[i], d1 * self.affine[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * d0
            + (t3 - 2.0 * t2 + t) * h * s0
            + (-2.0 * t3 + 3.0 * t2) * d1
            + (t3 - t2) * h * s1;
        v.max(f64::MIN_POSITIVE)
    }

    /// Cubic Lagrange interpolation of the stored `ψ` samples.
    pub fn affine_deriv(&self, x: f64) -> f64 {
        let (_, i, t) = self.locate(x);
        let n = self.grid_len();
        let start = i.saturating_sub(1).min(n - 3);
        let u = t + (i - start) as f64;
        let p = &self.affine[start..start + 4];
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        l0 * p[0] + l1 * p[1] + l2 * p[2] + l3 * p[3]
    }

    pub fn lift_inverse(&self, y: f64) -> Result<f64> {
        let k = y.floor();
        let r = y - k;
        let i = self.values.partition_point(|v| *v <= r).clamp(1, self.grid_len()) - 1;
        let h = 1.0 / self.grid_len() as f64;
        let lo = i as f64 * h;
        let x = solve_increasing(
            |x| {
                let t = ((x - lo) / h).clamp(0.0, 1.0);
                Ok(self.cubic(i, t))
            },
            r,
            lo,
            lo + h,
        )?;
        Ok(k + x)
    }

    /// Rows `x, h(x), Dh(x)` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,h,dh")?;
        for i in 0..self.values.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e}",
                self.grid_point(i),
                self.values[i],
                self.dvalues[i]
            )?;
        }
        Ok(())
    }

    /// `∫₀¹ Dh` by the trapezoid rule on the stored samples.
    pub fn derivative_integral(&self) -> f64 {
        let n = self.grid_len();
        let h = 1.0 / n as f64;
        let inner: f64 = self.dvalues[1..n].iter().sum();
        h * (inner + 0.5 * (self.dvalues[0] + self.dvalues[n]))
    }
}
