//! Regularized Poincaré and Bogovskiĭ homotopy operators on differential
//! forms over star-shaped domains.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the component formulas across several arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod bogovskii;
pub mod chain;
pub mod constants;
pub mod cutoff;
pub mod error;
pub mod exterior;
pub mod field;
pub mod geometry;
pub mod mollifier;
pub mod poincare;
pub mod poly;
pub mod quadrature;
pub mod sweep;
pub mod tabulated;
pub mod verify;

pub use bogovskii::{BogovskiiConfig, BogovskiiField, RayMode, RayOrders};
pub use constants::{BoundReport, ChainConstants, EstimateConfig, OperatorKind};
pub use cutoff::{CutoffDerivative, CutoffForm};
pub use error::{Error, Result};
pub use exterior::{FormValue, IndexTuple, MAX_DIM};
pub use field::{FormField, FormJet, Jet, PolyField};
pub use geometry::{Ball, DomainStats, Shape, StarDomain};
pub use mollifier::{Mollifier, Variant};
pub use poincare::PoincareConfig;
pub use poly::{MultiPoly, PolyForm};
