//! Regularisation of the simultaneous binary collision in the collinear four-body problem.
//!
//! Exact normal forms over the rationals, the local transition analysis and a numerical
//! block map through the collision, with the fits that measure its regularity.

pub mod ad;
pub mod blockmap;
pub mod chart;
pub mod coeff;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod normal_form;
pub mod poly;
pub mod special;
mod tableau;
pub mod transition;
pub mod verify;

pub use blockmap::{BlockMap, BlockMapConfig, BlockMapRow, C0Report, KappaDriftReport, SweepResult};
pub use chart::{HCorrection, NfPoint, NumericChart, PFunction};
pub use coeff::{Coeff, Q};
pub use constants::{derive_constants, DerivedConstants, MassParams, NfConstants};
pub use dynamics::{ChartId, ChartState, FieldKind};
pub use error::{Result, SbcError};
pub use integrator::{Direction, IntegratorConfig, Level, SectionHit, SectionSpec, Trajectory};
pub use normal_form::{NormalFormReport, NormalFormResult, ResonantPolys};
pub use poly::{Poly, PolyField};
pub use transition::{BlockMapPrediction, GridFit, PowerLawFit, TransitionSeries};
