//! Circle maps on R/Z: a closed representation for rotations, trigonometric
//! diffeomorphisms, Möbius maps, exact piecewise-affine maps, sampled
//! conjugators and the Cantor-weighted example, together with composition and
//! inversion.
//!
//! Lifts are plain reals. `eval` reduces the lift to `[0, 1)`.

pub mod cantor;
pub mod fourier;
pub mod interval;
pub mod sampled;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mobius::MobiusMap;
use crate::numeric::{frac, solve_increasing};
use crate::pa::PaCircle;

pub use cantor::{cantor_function, CantorDiffeo};
pub use fourier::FourierDiffeo;
pub use interval::{Bump, IntervalMap};
pub use sampled::SampledDiffeo;

/// Canonical representative of a point of R/Z.
pub fn circle_point(x: f64) -> f64 {
    frac(x)
}

#[derive(Debug, Clone)]
pub enum CircleMap {
    Rotation(f64),
    Fourier(FourierDiffeo),
    Mobius(MobiusMap),
    Pa(Arc<PaCircle>),
    Sampled(Arc<SampledDiffeo>),
    Cantor(Arc<CantorDiffeo>),
    /// `Compose(f, g) = f ∘ g`.
    Compose(Arc<CircleMap>, Arc<CircleMap>),
    Inverse(Arc<CircleMap>),
}

/// Value, derivative and affine derivative at a point. Fields beyond the
/// requested order are left at their neutral values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub lift: f64,
    pub deriv: f64,
    pub affine: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    /// Classical derivative; errors at PA breakpoints.
    Deriv,
    /// Right derivative, defined everywhere for PA maps.
    RightDeriv,
    Affine,
}

impl From<FourierDiffeo> for CircleMap {
    fn from(f: FourierDiffeo) -> Self {
        CircleMap::Fourier(f)
    }
}

impl From<MobiusMap> for CircleMap {
    fn from(m: MobiusMap) -> Self {
        CircleMap::Mobius(m)
    }
}

impl From<SampledDiffeo> for CircleMap {
    fn from(s: SampledDiffeo) -> Self {
        CircleMap::Sampled(Arc::new(s))
    }
}

impl From<CantorDiffeo> for CircleMap {
    fn from(c: CantorDiffeo) -> Self {
        CircleMap::Cantor(Arc::new(c))
    }
}

impl From<crate::pa::PaMap> for CircleMap {
    fn from(p: crate::pa::PaMap) -> Self {
        CircleMap::Pa(Arc::new(PaCircle::new(p)))
    }
}

impl CircleMap {
    pub fn identity() -> Self {
        CircleMap::Rotation(0.0)
    }

    pub fn compose(f: CircleMap, g: CircleMap) -> Self {
        CircleMap::Compose(Arc::new(f), Arc::new(g))
    }

    pub fn inverse(f: CircleMap) -> Self {
        CircleMap::Inverse(Arc::new(f))
    }

    /// `h ∘ f ∘ h⁻¹`.
    pub fn conjugate(h: &CircleMap, f: &CircleMap) -> Self {
        let h = Arc::new(h.clone());
        CircleMap::Compose(
            h.clone(),
            Arc::new(CircleMap::Compose(
                Arc::new(f.clone()),
                Arc::new(CircleMap::Inverse(h)),
            )),
        )
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            CircleMap::Rotation(_) => "rotation",
            CircleMap::Fourier(_) => "fourier",
            CircleMap::Mobius(_) => "mobius",
            CircleMap::Pa(_) => "pa",
            CircleMap::Sampled(_) => "sampled",
            CircleMap::Cantor(_) => "cantor",
            CircleMap::Compose(..) => "compose",
            CircleMap::Inverse(_) => "inverse",
        }
    }

    /// True when every leaf has a classical second derivative.
    pub fn is_smooth(&self) -> bool {
        match self {
            CircleMap::Pa(_) | CircleMap::Cantor(_) => false,
            CircleMap::Compose(f, g) => f.is_smooth() && g.is_smooth(),
            CircleMap::Inverse(f) => f.is_smooth(),
            _ => true,
        }
    }

    pub fn jet(&self, x: f64, order: Order) -> Result<Jet> {
        let mut j = Jet {
            lift: x,
            deriv: 1.0,
            affine: 0.0,
        };
        match self {
            CircleMap::Rotation(r) => j.lift = x + r,
            CircleMap::Fourier(f) => {
                let (v, d1, d2) = f.parts(x);
                j.lift = v;
                j.deriv = d1;
                j.affine = d2 / d1;
            }
            CircleMap::Mobius(m) => {
                j.lift = m.lift(x);
                if order != Order::Value {
                    j.deriv = m.deriv(x);
                }
                if order == Order::Affine {
                    j.affine = m.affine_deriv(x);
                }
            }
            CircleMap::Pa(p) => {
                j.lift = p.view.lift(x);
                match order {
                    Order::Value => {}
                    Order::Deriv => j.deriv = p.view.deriv(x)?,
                    Order::RightDeriv => j.deriv = p.view.deriv_right(x),
                    Order::Affine => {
                        return Err(Error::Unsupported {
                            op: "affine_deriv",
                            variant: "pa",
                        })
                    }
                }
            }
            CircleMap::Sampled(s) => {
                j.lift = s.lift(x);
                if order != Order::Value {
                    j.deriv = s.deriv(x);
                }
                if order == Order::Affine {
                    j.affine = s.affine_deriv(x);
                }
            }
            CircleMap::Cantor(c) => {
                if order == Order::Affine {
                    return Err(Error::Unsupported {
                        op: "affine_deriv",
                        variant: "cantor",
                    });
                }
                j.lift = c.lift(x);
                if order != Order::Value {
                    j.deriv = c.deriv(x);
                }
            }
            CircleMap::Compose(f, g) => {
                let jg = g.jet(x, order)?;
                let jf = f.jet(jg.lift, order)?;
                j.lift = jf.lift;
                j.deriv = jf.deriv * jg.deriv;
                j.affine = jf.affine * jg.deriv + jg.affine;
            }
            CircleMap::Inverse(f) => {
                let x0 = f.lift_inverse(x)?;
                j.lift = x0;
                if order != Order::Value {
                    let jf = f.jet(x0, order)?;
                    j.deriv = 1.0 / jf.deriv;
                    j.affine = -jf.affine / jf.deriv;
                }
            }
        }
        Ok(j)
    }

    pub fn lift(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, Order::Value)?.lift)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(frac(self.lift(x)?))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, Order::Deriv)?.deriv)
    }

    pub fn deriv_right(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, Order::RightDeriv)?.deriv)
    }

    pub fn affine_deriv(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, Order::Affine)?.affine)
    }

    /// Inverse of the lift.
    pub fn lift_inverse(&self, y: f64) -> Result<f64> {
        match self {
            CircleMap::Rotation(r) => Ok(y - r),
            CircleMap::Fourier(f) => f.lift_inverse(y),
            CircleMap::Mobius(m) => {
                let x0 = m.lift_inverse(y);
                Ok(x0 + (y - m.lift(x0)).round())
            }
            CircleMap::Pa(p) => Ok(p.view.lift_inverse(y)),
            CircleMap::Sampled(s) => s.lift_inverse(y),
            CircleMap::Cantor(_) => self.generic_inverse(y),
            CircleMap::Compose(f, g) => g.lift_inverse(f.lift_inverse(y)?),
            CircleMap::Inverse(f) => f.lift(y),
        }
    }

    fn generic_inverse(&self, y: f64) -> Result<f64> {
        let d = self.lift(y)? - y;
        solve_increasing(
            |x| {
                let j = self.jet(x, Order::RightDeriv)?;
                Ok((j.lift, j.deriv))
            },
            y,
            y - d - 1.0,
            y - d + 1.0,
        )
    }

    /// Orbit of `x0` of length `n` with log-derivatives accumulated along it.
    /// Right derivatives are used so that PA maps are accepted everywhere.
    pub fn orbit(&self, x0: f64, n: usize) -> Result<OrbitBuffer> {
        if n == 0 {
            return Err(Error::Domain("orbit length must be at least 1".into()));
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut lifts = Vec::with_capacity(n + 1);
        let mut log_deriv = Vec::with_capacity(n + 1);
        let mut x = frac(x0);
        let mut lift = x0;
        let mut acc = 0.0;
        points.push(x);
        lifts.push(lift);
        log_deriv.push(0.0);
        for k in 0..n {
            let j = self.jet(x, Order::RightDeriv).map_err(|e| e.at_step(k))?;
            acc += j.deriv.ln();
            lift += j.lift - x;
            x = frac(j.lift);
            points.push(x);
            lifts.push(lift);
            log_deriv.push(acc);
        }
        Ok(OrbitBuffer {
            x0,
            points,
            lifts,
            log_deriv,
        })
    }

    /// Birkhoff estimate `(F^n(0) - 0)/n` and its bound `1/n`.
    pub fn rotation_number(&self, n: usize) -> Result<(f64, f64)> {
        if n == 0 {
            return Err(Error::Domain("rotation number needs n >= 1".into()));
        }
        let mut x = 0.0;
        let mut disp = 0.0;
        for k in 0..n {
            let y = self.lift(x).map_err(|e| e.at_step(k))?;
            disp += y - x;
            x = frac(y);
        }
        Ok((disp / n as f64, 1.0 / n as f64))
    }
}

/// Forward orbit `f^k(x0)` for `k = 0..=n` with `log Df^k(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBuffer {
    pub x0: f64,
    /// Points reduced to `[0, 1)`.
    pub points: Vec<f64>,
    /// Lift values `F^k(x0)`.
    pub lifts: Vec<f64>,
    pub log_deriv: Vec<f64>,
}

impl OrbitBuffer {
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
