use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sincos_turns, solve_increasing, TAU};

/// Number of grid points used to certify positivity of the derivative.
pub const POSITIVITY_GRID: usize = 4096;

/// Circle diffeomorphism with trigonometric-polynomial displacement:
/// `F(x) = x + c + Σ_k (a_k cos 2πkx + b_k sin 2πkx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDiffeo {
    pub shift: f64,
    /// `(a_k, b_k)` for `k = 1..=K`.
    pub coefficients: Vec<(f64, f64)>,
}

impl FourierDiffeo {
    pub fn new(shift: f64, coefficients: Vec<(f64, f64)>) -> Result<Self> {
        let f = Self {
            shift,
            coefficients,
        };
        f.validate()?;
        Ok(f)
    }

    /// Pure rotation written as a Fourier map; handy for `h` in tests.
    pub fn rotation(shift: f64) -> Self {
        Self {
            shift,
            coefficients: Vec::new(),
        }
    }

    /// `x + (ε / 2π) sin 2πx`, the lift whose derivative is `1 + ε cos 2πx`.
    pub fn single_mode(shift: f64, eps: f64) -> Result<Self> {
        Self::new(shift, vec![(0.0, eps / TAU)])
    }

    /// Bound on `|DF - 1|`.
    pub fn derivative_deviation_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, (a, b))| TAU * (i + 1) as f64 * (a.abs() + b.abs()))
            .sum()
    }

    fn lipschitz_of_derivative(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let w = TAU * (i + 1) as f64;
                w * w * (a.abs() + b.abs())
            })
            .sum()
    }

    fn validate(&self) -> Result<()> {
        let finite = self.shift.is_finite()
            && self
                .coefficients
                .iter()
                .all(|(a, b)| a.is_finite() && b.is_finite());
        if !finite {
            return Err(Error::InvalidMap("non-finite Fourier coefficient".into()));
        }
        if self.derivative_deviation_bound() < 1.0 {
            return Ok(());
        }
        let h = 1.0 / POSITIVITY_GRID as f64;
        let min = (0..POSITIVITY_GRID)
            .map(|i| self.parts(i as f64 * h).1)
            .fold(f64::INFINITY, f64::min);
        let slack = self.lipschitz_of_derivative() * 0.5 * h;
        if min - slack > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidMap(format!(
                "derivative not certified positive (grid minimum {min:.6e}, slack {slack:.3e})"
            )))
        }
    }

    /// `(F(x), DF(x), D²F(x))`.
    pub(crate) fn parts(&self, x: f64) -> (f64, f64, f64) {
        let (s1, c1) = sincos_turns(x);
        let (mut s, mut c) = (s1, c1);
        let mut disp = self.shift;
        let mut d1 = 1.0;
        let mut d2 = 0.0;
        for (i, (a, b)) in self.coefficients.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            disp += a * c + b * s;
            d1 += w * (b * c - a * s);
            d2 -= w * w * (a * c + b * s);
            let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
            s = sn;
            c = cn;
        }
        (x + disp, d1, d2)
    }

    pub fn lift(&self, x: f64) -> f64 {
        self.parts(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.parts(x).1
    }

    pub fn affine_deriv(&self, x: f64) -> f64 {
        let (_, d1, d2) = self.parts(x);
        d2 / d1
    }

    pub fn lift_inverse(&self, y: f64) -> Result<f64> {
        let spread: f64 = self
            .coefficients
            .iter()
            .map(|(a, b)| a.abs() + b.abs())
            .sum::<f64>()
            + 1e-12;
        let base = y - self.shift;
        solve_increasing(
            |x| {
                let (v, d, _) = self.parts(x);
                Ok((v, d))
            },
            y,
            base - spread,
            base + spread,
        )
    }
}
