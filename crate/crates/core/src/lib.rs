//! Asymptotic distortion of circle and interval diffeomorphisms, exact
//! piecewise-affine dynamics, Möbius boundary maps, and explicit conjugators
//! towards rotations.

pub mod conjugation;
pub mod distortion;
pub mod error;
pub mod map;
pub mod mobius;
pub mod numeric;
pub mod pa;

pub use distortion::{DistortionSeries, PartitionEstimate, RefinementSchedule, SeriesSource};
pub use error::{Error, Result};
pub use map::{CircleMap, FourierDiffeo, IntervalMap, SampledDiffeo};
pub use mobius::{MobiusKind, MobiusMap};
pub use pa::PaMap;
