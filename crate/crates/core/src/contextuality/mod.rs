//! Contexts, modalities, extravalence and Born-rule probability assignments.
//!
//! A [`Context`] is a complete projective measurement: an orthonormal basis
//! whose rank-one projectors sum to the identity. A [`Modality`] is a ray
//! viewed as one outcome of a particular context; two modalities are
//! extravalent when they carry the same ray, whatever their contexts.

mod ks;

use std::sync::Arc;

use serde::Serialize;

use crate::hilbert::{inner_unchecked, spectral, CMat, CVec, Ray, RayMap};
use crate::{random, tolerances, Error, Result};

pub use ks::{ks_colorability, ks_search, KsInstance, KsOutcome, ValueAssignment};

/// An ordered orthonormal basis of a finite-dimensional space.
#[derive(Debug, Clone)]
pub struct Context {
    basis: Vec<CVec>,
    label: Option<String>,
}

impl Context {
    pub fn new(basis: Vec<CVec>) -> Result<Self> {
        let dim = basis.first().map(CVec::dim).unwrap_or(0);
        if dim < 2 {
            return Err(Error::InvalidContext("dim must be >= 2".into()));
        }
        if basis.len() != dim {
            return Err(Error::InvalidContext(format!(
                "{} vectors cannot span dim {dim}",
                basis.len()
            )));
        }
        let tol = tolerances();
        for (i, v) in basis.iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            if !v.is_unit() {
                return Err(Error::InvalidContext(format!(
                    "vector {i} has norm {}",
                    v.norm()
                )));
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let overlap = inner_unchecked(&basis[i], &basis[j]).norm();
                if overlap > tol.orthogonality {
                    return Err(Error::InvalidContext(format!(
                        "vectors {i} and {j} overlap by {overlap:e}"
                    )));
                }
            }
        }
        let sum = basis
            .iter()
            .try_fold(CMat::zeros(dim, dim), |acc, v| acc.add(&CMat::projector(v)))?;
        let defect = sum.sub(&CMat::identity(dim))?.max_abs();
        if defect > tol.completeness {
            return Err(Error::InvalidContext(format!(
                "projectors miss identity by {defect:e}"
            )));
        }
        Ok(Self { basis, label: None })
    }

    /// The standard basis context.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new((0..dim).map(|i| CVec::basis(dim, i)).collect())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn rays(&self) -> Vec<Ray> {
        self.basis
            .iter()
            .map(|v| Ray::new(v).expect("basis vectors are unit"))
            .collect()
    }

    /// Position of the basis element matching `ray`, if any.
    pub fn index_of(&self, ray: &Ray) -> Option<usize> {
        if ray.dim() != self.dim() {
            return None;
        }
        let threshold = 1.0 - tolerances().ray_equality;
        self.basis
            .iter()
            .position(|v| inner_unchecked(v, ray.vector()).norm() >= threshold)
    }

    pub fn contains(&self, ray: &Ray) -> bool {
        self.index_of(ray).is_some()
    }

    /// True when both contexts hold the same set of rays.
    pub fn same_rays(&self, other: &Context) -> bool {
        self.dim() == other.dim() && self.rays().iter().all(|r| other.contains(r))
    }

    pub fn projectors(&self) -> Vec<CMat> {
        self.basis.iter().map(CMat::projector).collect()
    }
}

/// Builds the eigenbasis context of a non-degenerate observable, ordered by
/// ascending eigenvalue.
pub fn context_from_observable(h: &CMat) -> Result<Context> {
    let pairs = spectral(h)?;
    Context::new(pairs.into_iter().map(|p| p.vector).collect())
}

/// A ray considered as an outcome of a specific context.
#[derive(Debug, Clone)]
pub struct Modality {
    ray: Ray,
    context: Arc<Context>,
    index: usize,
}

impl Modality {
    /// Fails unless `ray` is one of the context's basis rays.
    pub fn new(ray: Ray, context: Arc<Context>) -> Result<Self> {
        let index = context.index_of(&ray).ok_or_else(|| {
            Error::InvalidContext(format!("ray {ray} is not an eigenstate of the context"))
        })?;
        Ok(Self {
            ray,
            context,
            index,
        })
    }

    pub fn of(context: Arc<Context>, index: usize) -> Result<Self> {
        let v = context
            .basis()
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("context has no element {index}")))?;
        let ray = Ray::new(v)?;
        Ok(Self {
            ray,
            context,
            index,
        })
    }

    pub fn ray(&self) -> &Ray {
        &self.ray
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.ray.dim()
    }
}

/// Whether two modalities belong to the same extravalence class.
pub fn extravalent(m1: &Modality, m2: &Modality) -> Result<bool> {
    if m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch {
            expected: m1.dim(),
            got: m2.dim(),
        });
    }
    Ok(m1.ray == m2.ray)
}

/// `count` distinct contexts that all contain `ray`, completed from seeded
/// random draws.
pub fn contexts_containing(ray: &Ray, count: usize, seed: u64) -> Result<Vec<Context>> {
    let dim = ray.dim();
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    if dim < 3 && count > 1 {
        return Err(Error::ExtravalenceDim { dim, count });
    }
    let mut rng = random::rng(seed);
    let mut out: Vec<Context> = Vec::with_capacity(count);
    while out.len() < count {
        let basis = random::complete_basis(&mut rng, ray.vector());
        let ctx = Context::new(basis)?;
        if out.iter().all(|c| !c.same_rays(&ctx)) {
            out.push(ctx);
        }
    }
    Ok(out)
}

/// |⟨from|to⟩|², clamped to [0, 1].
pub fn born_probability(from: &Ray, to: &Ray) -> Result<f64> {
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch {
            expected: from.dim(),
            got: to.dim(),
        });
    }
    Ok(inner_unchecked(from.vector(), to.vector())
        .norm_sqr()
        .clamp(0.0, 1.0))
}

/// A map from rays to probabilities. Implementations see only the ray,
/// never a context, so they are non-contextual by construction.
pub trait ProbabilityAssignment {
    fn dim(&self) -> usize;

    /// `None` when the assignment has no value for this ray.
    fn probability(&self, ray: &Ray) -> Option<f64>;
}

/// p(v) = |⟨v|ψ⟩|², evaluated on demand.
#[derive(Debug, Clone)]
pub struct BornAssignment {
    psi: Ray,
}

impl BornAssignment {
    pub fn state(&self) -> &Ray {
        &self.psi
    }
}

pub fn born_assignment(psi: &Ray) -> BornAssignment {
    BornAssignment { psi: psi.clone() }
}

impl ProbabilityAssignment for BornAssignment {
    fn dim(&self) -> usize {
        self.psi.dim()
    }

    fn probability(&self, ray: &Ray) -> Option<f64> {
        born_probability(&self.psi, ray).ok()
    }
}

/// The same value on every ray.
#[derive(Debug, Clone, Copy)]
pub struct ConstantAssignment {
    pub dim: usize,
    pub value: f64,
}

impl ConstantAssignment {
    pub fn uniform(dim: usize) -> Self {
        Self {
            dim,
            value: 1.0 / dim as f64,
        }
    }
}

impl ProbabilityAssignment for ConstantAssignment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn probability(&self, ray: &Ray) -> Option<f64> {
        (ray.dim() == self.dim).then_some(self.value)
    }
}

/// An explicit finite table; rays outside it are unassigned.
#[derive(Debug, Clone)]
pub struct TableAssignment {
    dim: usize,
    table: RayMap<f64>,
}

impl TableAssignment {
    pub fn new(dim: usize, table: RayMap<f64>) -> Self {
        Self { dim, table }
    }
}

impl ProbabilityAssignment for TableAssignment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn probability(&self, ray: &Ray) -> Option<f64> {
        self.table.get(ray).copied()
    }
}

/// Per-context outcome of a frame-function check.
#[derive(Debug, Clone, Serialize)]
pub struct FrameEntry {
    pub context: usize,
    pub label: Option<String>,
    pub probabilities: Vec<Option<f64>>,
    pub sum: f64,
    pub deviation: f64,
    pub unassigned: Vec<usize>,
    pub out_of_range: Vec<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub tolerance: f64,
    pub entries: Vec<FrameEntry>,
    pub passed: bool,
}

impl FrameReport {
    pub fn failures(&self) -> impl Iterator<Item = &FrameEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn max_deviation(&self) -> f64 {
        self.entries.iter().map(|e| e.deviation).fold(0.0, f64::max)
    }
}

/// Checks that `p` sums to one on every context and stays within [0, 1].
pub fn verify_frame_function<P: ProbabilityAssignment + ?Sized>(
    p: &P,
    contexts: &[Context],
) -> Result<FrameReport> {
    let tolerance = tolerances().frame_sum;
    let mut entries = Vec::with_capacity(contexts.len());
    for (ci, ctx) in contexts.iter().enumerate() {
        if ctx.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: ctx.dim(),
            });
        }
        let probabilities: Vec<Option<f64>> = ctx.rays().iter().map(|r| p.probability(r)).collect();
        let unassigned: Vec<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i)
            .collect();
        let out_of_range: Vec<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some_and(|x| !(0.0..=1.0).contains(&x)))
            .map(|(i, _)| i)
            .collect();
        let sum: f64 = probabilities.iter().flatten().sum();
        let deviation = (sum - 1.0).abs();
        let passed = unassigned.is_empty() && out_of_range.is_empty() && deviation <= tolerance;
        entries.push(FrameEntry {
            context: ci,
            label: ctx.label().map(str::to_owned),
            probabilities,
            sum,
            deviation,
            unassigned,
            out_of_range,
            passed,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(FrameReport {
        tolerance,
        entries,
        passed,
    })
}
