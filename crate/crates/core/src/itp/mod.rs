//! Infinite tensor products over 1-based site indices.
//!
//! Infinite families are represented symbolically: a periodic or analytic
//! tail plus finitely many overridden sites. That is enough to decide
//! product convergence and sector membership exactly, and to evaluate
//! truncated overlaps over millions of sites in O(period + deviations).

mod overlap;
mod sequence;
mod state;

pub use overlap::{
    curve_csv, orthogonalization_curve, same_sector, truncated_overlap, CurvePoint, LogAmp,
    SectorVerdict, SeriesWitness,
};
pub(crate) use overlap::{overlap_with_overrides, validate_n_list};
pub use sequence::{classify_product, ProductClass, SequenceSpec, SequenceTail};
pub use state::{ProductStateSpec, StateTail};
