//! Measurement cascade: a system entangled with a growing pointer device.
//!
//! After pre-measurement the joint state is Σ_k ψ_k |u_k⟩ ⊗ |D_k⟩ with each
//! pointer D_k a product state over the device sites. Distinct pointers
//! overlap by η at every site, so the reduced-density coherences
//! ρ_jk = ψ_j ψ_k* ⟨D_k|D_j⟩ shrink like η^L as the device size L grows.
//! Outcome sampling applies the Born weights |ψ_k|².

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::hilbert::CVec;
use crate::itp::{truncated_overlap, LogAmp, ProductStateSpec};
use crate::{tolerances, Error, Result};

/// Largest outcome count; pointer states live in a local space of this dim.
pub const MAX_OUTCOMES: usize = 64;

const SAMPLE_BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    /// System amplitudes ψ_k, one per outcome.
    pub amplitudes: Vec<Complex64>,
    /// η: per-site |⟨D_j|D_k⟩| for j ≠ k, in [0, 1).
    pub pointer_overlap: f64,
    /// Device size L₀ at depth 0.
    pub initial_size: u64,
    /// Growth factor g > 1 applied per cascade step.
    pub growth: f64,
    pub max_depth: usize,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.amplitudes.len();
        if m == 0 || m > MAX_OUTCOMES {
            return Err(Error::InvalidConfig(format!(
                "outcome count {m} not in 1..={MAX_OUTCOMES}"
            )));
        }
        let norm_sqr: f64 = self.amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm_sqr - 1.0).abs() > tolerances().unit_norm {
            return Err(Error::InvalidConfig(format!(
                "amplitudes have squared norm {norm_sqr}"
            )));
        }
        if !(0.0..1.0).contains(&self.pointer_overlap) {
            return Err(Error::InvalidConfig(format!(
                "pointer_overlap {} not in [0, 1)",
                self.pointer_overlap
            )));
        }
        if self.initial_size == 0 {
            return Err(Error::InvalidConfig("initial_size must be >= 1".into()));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "growth {} must exceed 1",
                self.growth
            )));
        }
        Ok(())
    }

    pub fn outcomes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// `count` unit vectors in C^count with ⟨v_j|v_k⟩ = η for all j ≠ k:
/// v_k = a·e_k + b·(1, …, 1) with a² = 1 − η and count·b² + 2ab = η.
pub fn pointer_states(count: usize, overlap: f64) -> Result<Vec<CVec>> {
    if count == 0 || count > MAX_OUTCOMES {
        return Err(Error::InvalidConfig(format!(
            "outcome count {count} not in 1..={MAX_OUTCOMES}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidConfig(format!(
            "pointer_overlap {overlap} not in [0, 1)"
        )));
    }
    let m = count as f64;
    let a = (1.0 - overlap).sqrt();
    let b = ((a * a + m * overlap).sqrt() - a) / m;
    Ok((0..count)
        .map(|k| {
            let mut v = CVec::from_real(&vec![b; count]).expect("count >= 1");
            v[k] += a;
            // absorb rounding in the norm; overlaps move by O(ulp)
            v.normalized().expect("nonzero")
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub amplitude: Complex64,
    pub pointer: ProductStateSpec,
}

/// Σ_k ψ_k |u_k⟩ ⊗ |D_k⟩ with the device truncated to `device_size` sites.
#[derive(Debug, Clone)]
pub struct BranchState {
    pub branches: Vec<Branch>,
    pub device_size: u64,
    pub depth: usize,
    pub max_depth: usize,
}

/// One off-diagonal density-matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    pub j: usize,
    pub k: usize,
    pub magnitude: f64,
    pub log2_magnitude: f64,
}

impl BranchState {
    /// ρ_jk = ψ_j ψ_k* ⟨D_k|D_j⟩ from the truncated pointer overlap.
    pub fn rho(&self, j: usize, k: usize) -> Result<LogAmp> {
        let (bj, bk) = (&self.branches[j], &self.branches[k]);
        let pointer = truncated_overlap(&bk.pointer, &bj.pointer, self.device_size)?;
        let weight = LogAmp::from_complex(bj.amplitude * bk.amplitude.conj());
        Ok(weight * pointer)
    }

    /// ρ_kk for every branch.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        (0..self.branches.len())
            .map(|k| self.rho(k, k).map(|a| a.magnitude()))
            .collect()
    }

    pub fn trace(&self) -> Result<f64> {
        Ok(self.diagonal()?.iter().sum())
    }

    /// Coherences between branches that both carry weight.
    pub fn coherences(&self) -> Result<Vec<Coherence>> {
        let live: Vec<usize> = (0..self.branches.len())
            .filter(|&k| self.branches[k].amplitude.norm() > 0.0)
            .collect();
        let mut out = Vec::new();
        for (a, &j) in live.iter().enumerate() {
            for &k in &live[a + 1..] {
                let r = self.rho(j, k)?;
                out.push(Coherence {
                    j,
                    k,
                    magnitude: r.magnitude(),
                    log2_magnitude: r.log2_magnitude(),
                });
            }
        }
        Ok(out)
    }
}

/// Entangles the system with a device of `initial_size` sites.
pub fn premeasure(config: &CascadeConfig) -> Result<BranchState> {
    config.validate()?;
    let states = pointer_states(config.outcomes(), config.pointer_overlap)?;
    let branches = config
        .amplitudes
        .iter()
        .zip(states)
        .map(|(&amplitude, s)| {
            Ok(Branch {
                amplitude,
                pointer: ProductStateSpec::constant(s)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BranchState {
        branches,
        device_size: config.initial_size,
        depth: 0,
        max_depth: config.max_depth,
    })
}

fn grown_size(size: u64, growth: f64) -> Result<u64> {
    let next = (growth * size as f64).ceil();
    if !next.is_finite() || next >= u64::MAX as f64 {
        return Err(Error::InvalidConfig("device size overflow".into()));
    }
    Ok((next as u64).max(size + 1))
}

/// One cascade step: the device grows to ⌈g·L⌉ sites, amplitudes unchanged.
pub fn cascade_step(state: &BranchState, growth: f64) -> Result<BranchState> {
    if !(growth > 1.0 && growth.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "growth {growth} must exceed 1"
        )));
    }
    if state.depth >= state.max_depth {
        return Err(Error::DepthCap {
            cap: state.max_depth,
        });
    }
    Ok(BranchState {
        branches: state.branches.clone(),
        device_size: grown_size(state.device_size, growth)?,
        depth: state.depth + 1,
        max_depth: state.max_depth,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthRow {
    pub depth: usize,
    pub device_size: u64,
    pub diagonal: Vec<f64>,
    pub trace: f64,
    pub coherences: Vec<Coherence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub rows: Vec<DepthRow>,
}

impl CoherenceReport {
    /// CSV with columns `depth,L,j,k,|rho_jk|,log2|rho_jk|`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,L,j,k,|rho_jk|,log2|rho_jk|\n");
        for row in &self.rows {
            for c in &row.coherences {
                writeln!(
                    out,
                    "{},{},{},{},{:e},{}",
                    row.depth, row.device_size, c.j, c.k, c.magnitude, c.log2_magnitude
                )
                .expect("string write");
            }
        }
        out
    }

    pub fn max_coherence(&self, row: usize) -> f64 {
        self.rows[row]
            .coherences
            .iter()
            .map(|c| c.magnitude)
            .fold(0.0, f64::max)
    }
}

/// |ρ_jk|(L) = |ψ_j ψ_k| η^L in closed form at each requested depth.
pub fn coherence_curve(config: &CascadeConfig, depths: &[usize]) -> Result<CoherenceReport> {
    config.validate()?;
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "depths must be strictly ascending".into(),
        ));
    }
    if let Some(&last) = depths.last() {
        if last > config.max_depth {
            return Err(Error::DepthCap {
                cap: config.max_depth,
            });
        }
    }
    let probabilities = config.probabilities();
    let ln_abs: Vec<f64> = config.amplitudes.iter().map(|z| z.norm().ln()).collect();
    let ln_eta = config.pointer_overlap.ln();
    let live: Vec<usize> = (0..config.outcomes())
        .filter(|&k| config.amplitudes[k].norm() > 0.0)
        .collect();

    let mut rows = Vec::with_capacity(depths.len());
    let mut size = config.initial_size;
    let mut depth = 0;
    for &target in depths {
        while depth < target {
            size = grown_size(size, config.growth)?;
            depth += 1;
        }
        let mut coherences = Vec::new();
        for (a, &j) in live.iter().enumerate() {
            for &k in &live[a + 1..] {
                let amp = LogAmp::new(ln_abs[j] + ln_abs[k] + size as f64 * ln_eta, 0.0);
                coherences.push(Coherence {
                    j,
                    k,
                    magnitude: amp.magnitude(),
                    log2_magnitude: amp.log2_magnitude(),
                });
            }
        }
        rows.push(DepthRow {
            depth,
            device_size: size,
            diagonal: probabilities.clone(),
            trace: probabilities.iter().sum(),
            coherences,
        });
    }
    Ok(CoherenceReport { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub seed: u64,
    pub samples: u64,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Draws `samples` outcomes with probabilities |ψ_k|².
///
/// Samples are drawn in fixed-size blocks, block b using ChaCha8 stream b
/// of `seed`, so the histogram does not depend on the thread count.
pub fn sample_outcome(config: &CascadeConfig, samples: u64, seed: u64) -> Result<Histogram> {
    config.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let probabilities = config.probabilities();
    let dist = WeightedIndex::new(&probabilities)
        .map_err(|e| Error::InvalidConfig(format!("weights: {e}")))?;
    let m = probabilities.len();
    let blocks = samples.div_ceil(SAMPLE_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = SAMPLE_BLOCK.min(samples - b * SAMPLE_BLOCK);
            let mut local = vec![0u64; m];
            for _ in 0..len {
                local[dist.sample(&mut rng)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; m],
            |mut acc, x| {
                acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
                acc
            },
        );

    let total = samples as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mut chi_square = 0.0;
    let mut support = 0;
    for (&c, &p) in counts.iter().zip(&probabilities) {
        if p > 0.0 {
            let expected = p * total;
            chi_square += (c as f64 - expected).powi(2) / expected;
            support += 1;
        }
    }
    let degrees_of_freedom = support.max(1) - 1;
    let p_value = if degrees_of_freedom == 0 {
        1.0
    } else {
        ChiSquared::new(degrees_of_freedom as f64)
            .expect("dof > 0")
            .sf(chi_square)
    };
    Ok(Histogram {
        seed,
        samples,
        counts,
        frequencies,
        probabilities,
        chi_square,
        degrees_of_freedom,
        p_value,
    })
}
