//! Numerics for quantum contextuality and infinite tensor products.
//!
//! The crate is split by subject:
//!
//! * [`hilbert`]: small dense complex linear algebra (vectors, Hermitian
//!   matrices, Jacobi spectral decomposition, Kronecker products, rays).
//! * [`contextuality`]: contexts, modalities, extravalence, Born-rule
//!   assignments, frame-function checks and Kochen-Specker colorability.
//! * [`itp`]: symbolic infinite sequences and product states, product
//!   classification, sector equivalence and log-domain truncated overlaps.
//! * [`operators`]: completed single-site operators, their generated ring and
//!   inter-sector matrix elements.
//! * [`measurement`]: the measurement-cascade simulator.
//!
//! Numerical thresholds live in one [`Tolerances`] record.

pub mod contextuality;
mod error;
pub mod hilbert;
pub mod itp;
pub mod measurement;
pub mod operators;
pub mod random;
mod tolerances;

pub use contextuality::{
    born_assignment, born_probability, context_from_observable, contexts_containing, extravalent,
    ks_colorability, ks_search, verify_frame_function, BornAssignment, ConstantAssignment, Context,
    FrameReport, KsInstance, KsOutcome, Modality, ProbabilityAssignment, TableAssignment,
    ValueAssignment,
};
pub use error::{Error, Result};
pub use hilbert::{inner, kron, spectral, CMat, CVec, Eigenpair, Kron, Ray, RayMap};
pub use itp::{
    classify_product, curve_csv, orthogonalization_curve, same_sector, truncated_overlap,
    CurvePoint, LogAmp, ProductClass, ProductStateSpec, SectorVerdict, SequenceSpec, SequenceTail,
    StateTail,
};
pub use measurement::{
    cascade_step, coherence_curve, premeasure, sample_outcome, BranchState, CascadeConfig,
    CoherenceReport, Histogram,
};
pub use operators::{
    intersector_decay, matrix_element, sector_block_report, BlockReport, OperatorExpr, SiteOp,
};
pub use tolerances::{tolerances, Tolerances};
