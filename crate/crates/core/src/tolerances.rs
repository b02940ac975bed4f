use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Every numerical threshold used by the crate.
///
/// A process reads its record once, either the defaults or whatever was
/// passed to [`Tolerances::install`] before first use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// |‖v‖ − 1| bound for unit vectors.
    pub unit_norm: f64,
    /// max |M − M†| bound for Hermitian matrices.
    pub hermitian: f64,
    /// ‖P² − P‖ bound for projectors.
    pub projector: f64,
    /// Rays are equal iff |⟨v|w⟩| ≥ 1 − `ray_equality`.
    pub ray_equality: f64,
    /// Pairwise |⟨u_i|u_j⟩| bound inside a context.
    pub orthogonality: f64,
    /// Σ|u_i⟩⟨u_i| = I bound for a context.
    pub completeness: f64,
    /// Minimum eigenvalue gap accepted by the spectral decomposition.
    pub degenerate_gap: f64,
    /// Frame-function sum tolerance.
    pub frame_sum: f64,
    /// Rounding granularity of ray hash keys.
    pub ray_hash_grid: f64,
    /// |z − 1| below which a site factor counts as exactly 1 for sector tests.
    pub unit_factor: f64,
    /// Default cross-sector threshold for block reports.
    pub block_epsilon: f64,
    /// Maximum number of normal-form terms an operator expression may expand to.
    pub term_budget: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unit_norm: 1e-10,
            hermitian: 1e-10,
            projector: 1e-9,
            ray_equality: 1e-10,
            orthogonality: 1e-10,
            completeness: 1e-9,
            degenerate_gap: 1e-8,
            frame_sum: 1e-9,
            ray_hash_grid: 1e-8,
            unit_factor: 1e-9,
            block_epsilon: 1e-6,
            term_budget: 100_000,
        }
    }
}

static ACTIVE: OnceLock<Tolerances> = OnceLock::new();

impl Tolerances {
    /// Makes `self` the process-wide record. Fails if a record is already
    /// active, including the defaults once anything has read them.
    pub fn install(self) -> Result<()> {
        ACTIVE
            .set(self)
            .map_err(|_| Error::InvalidArgument("tolerances already initialised".into()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("tolerances: {e}")))
    }
}

/// The active tolerance record.
pub fn tolerances() -> &'static Tolerances {
    ACTIVE.get_or_init(Tolerances::default)
}
