use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;
use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::sequence::{classify_product, ProductClass, SequenceSpec, SequenceTail};
use super::state::ProductStateSpec;
use crate::hilbert::inner_unchecked;
use crate::{tolerances, Error, Result};

/// Largest joint period of two tails that will be expanded.
pub const MAX_JOINT_PERIOD: usize = 1 << 20;

/// A complex number stored as (ln|z|, arg z). Zero has ln|z| = −∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAmp {
    ln_magnitude: f64,
    phase: f64,
}

impl Mul for LogAmp {
    type Output = LogAmp;

    fn mul(self, other: LogAmp) -> LogAmp {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::new(
            self.ln_magnitude + other.ln_magnitude,
            self.phase + other.phase,
        )
    }
}

fn wrap_phase(phase: f64) -> f64 {
    let w = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

impl LogAmp {
    pub const ZERO: LogAmp = LogAmp {
        ln_magnitude: f64::NEG_INFINITY,
        phase: 0.0,
    };
    pub const ONE: LogAmp = LogAmp {
        ln_magnitude: 0.0,
        phase: 0.0,
    };

    pub fn new(ln_magnitude: f64, phase: f64) -> Self {
        if ln_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                ln_magnitude,
                phase: wrap_phase(phase),
            }
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.norm() == 0.0 {
            Self::ZERO
        } else {
            Self::new(z.norm().ln(), z.arg())
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_magnitude == f64::NEG_INFINITY
    }

    pub fn ln_magnitude(&self) -> f64 {
        self.ln_magnitude
    }

    pub fn log2_magnitude(&self) -> f64 {
        self.ln_magnitude / LN_2
    }

    /// |z|; underflows to 0 for very small amplitudes.
    pub fn magnitude(&self) -> f64 {
        self.ln_magnitude.exp()
    }

    /// arg z in (−π, π].
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude(), self.phase)
    }

    /// Sum of amplitudes without leaving the log domain.
    pub fn sum(terms: &[LogAmp]) -> LogAmp {
        let live: Vec<&LogAmp> = terms.iter().filter(|t| !t.is_zero()).collect();
        match live.as_slice() {
            [] => Self::ZERO,
            [single] => **single,
            _ => {
                let top = live
                    .iter()
                    .map(|t| t.ln_magnitude)
                    .fold(f64::NEG_INFINITY, f64::max);
                let scaled: Complex64 = live
                    .iter()
                    .map(|t| Complex64::from_polar((t.ln_magnitude - top).exp(), t.phase))
                    .sum();
                let rest = Self::from_complex(scaled);
                if rest.is_zero() {
                    Self::ZERO
                } else {
                    Self::new(top + rest.ln_magnitude, rest.phase)
                }
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn joint_period(a: &ProductStateSpec, b: &ProductStateSpec) -> Result<usize> {
    if a.local_dim() != b.local_dim() {
        return Err(Error::IncomparableTails(format!(
            "local_dim {} vs {}",
            a.local_dim(),
            b.local_dim()
        )));
    }
    let (p, q) = (a.period(), b.period());
    let lcm = p / gcd(p, q) * q;
    if lcm > MAX_JOINT_PERIOD {
        return Err(Error::IncomparableTails(format!(
            "periods {p} and {q} have joint period {lcm} > {MAX_JOINT_PERIOD}"
        )));
    }
    Ok(lcm)
}

/// ⟨a_α|b_α⟩ for each residue of the joint tail period.
/// Tail factors this close to 1 are rounding residue of a unit inner product.
const ROUNDING_SLACK: f64 = 1e-13;

fn tail_factors(a: &ProductStateSpec, b: &ProductStateSpec, period: usize) -> Vec<Complex64> {
    (0..period as u64)
        .map(|r| inner_unchecked(a.tail_state(r + 1), b.tail_state(r + 1)))
        .collect()
}

/// Π_{α ≤ n} f_α with f_α = ⟨a_α|b_α⟩ except at sites listed in
/// `overrides`, where the given factor is used instead.
///
/// Cost is O(period + deviations + overrides) regardless of n.
pub(crate) fn overlap_with_overrides(
    a: &ProductStateSpec,
    b: &ProductStateSpec,
    n: u64,
    overrides: &BTreeMap<u64, Complex64>,
) -> Result<LogAmp> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation n must be >= 1".into()));
    }
    let period = joint_period(a, b)?;
    let factors = tail_factors(a, b, period);
    let p = period as u64;
    let mut counts: Vec<u64> = (0..p).map(|r| n / p + u64::from(r < n % p)).collect();

    let special: BTreeSet<u64> = a
        .deviations()
        .keys()
        .chain(b.deviations().keys())
        .chain(overrides.keys())
        .copied()
        .filter(|&site| site <= n)
        .collect();
    let mut acc = LogAmp::ONE;
    for &site in &special {
        counts[((site - 1) % p) as usize] -= 1;
        let f = overrides
            .get(&site)
            .copied()
            .unwrap_or_else(|| inner_unchecked(a.state(site), b.state(site)));
        acc = acc * LogAmp::from_complex(f);
    }
    if acc.is_zero() {
        return Ok(LogAmp::ZERO);
    }

    let mut ln_magnitude = acc.ln_magnitude;
    let mut phase = acc.phase;
    for (f, &count) in factors.iter().zip(&counts) {
        if count == 0 {
            continue;
        }
        if (f - 1.0).norm() <= ROUNDING_SLACK {
            // ⟨v|v⟩ of a normalized vector; exact 1 keeps long tails flat
            continue;
        }
        let modulus = f.norm();
        if modulus == 0.0 {
            return Ok(LogAmp::ZERO);
        }
        ln_magnitude += count as f64 * modulus.ln();
        phase += wrap_phase(count as f64 * f.arg());
    }
    Ok(LogAmp::new(ln_magnitude, phase))
}

/// ⟨Ψ_n|Φ_n⟩ = Π_{α ≤ n} ⟨a_α|b_α⟩ in log-magnitude and phase.
pub fn truncated_overlap(a: &ProductStateSpec, b: &ProductStateSpec, n: u64) -> Result<LogAmp> {
    overlap_with_overrides(a, b, n, &BTreeMap::new())
}

/// Convergence of Σ_α |⟨a_α|b_α⟩ − 1| over the tail.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesWitness {
    pub period: usize,
    /// Σ |⟨a_α|b_α⟩ − 1| over one tail period.
    pub defect_per_period: f64,
    pub converges: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorVerdict {
    pub same_sector: bool,
    pub witness: SeriesWitness,
    /// Classification of Π ⟨a_α|b_α⟩ itself.
    pub overlap_product: ProductClass,
}

/// Decides whether two product states lie in the same sector.
///
/// The series Σ|⟨a_α|b_α⟩ − 1| has finitely many deviated terms, so it
/// converges exactly when every tail factor equals 1.
pub fn same_sector(a: &ProductStateSpec, b: &ProductStateSpec) -> Result<SectorVerdict> {
    let period = joint_period(a, b)?;
    let factors = tail_factors(a, b, period);
    let unit = tolerances().unit_factor;
    let defect_per_period: f64 = factors.iter().map(|f| (f - 1.0).norm()).sum();
    let converges = factors.iter().all(|f| (f - 1.0).norm() <= unit);

    let deviations: BTreeMap<u64, Complex64> = a
        .deviations()
        .keys()
        .chain(b.deviations().keys())
        .map(|&site| (site, inner_unchecked(a.state(site), b.state(site))))
        .collect();
    let tail = if period == 1 {
        SequenceTail::Constant { value: factors[0] }
    } else {
        SequenceTail::Periodic { values: factors }
    };
    let product = SequenceSpec::new(tail, deviations).expect("sites are 1-based and tail nonempty");

    Ok(SectorVerdict {
        same_sector: converges,
        witness: SeriesWitness {
            period,
            defect_per_period,
            converges,
        },
        overlap_product: classify_product(&product),
    })
}

/// One sample of a truncation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub magnitude: f64,
    pub log2_magnitude: f64,
}

impl CurvePoint {
    pub fn new(n: u64, amp: LogAmp) -> Self {
        Self {
            n,
            magnitude: amp.magnitude(),
            log2_magnitude: amp.log2_magnitude(),
        }
    }
}

pub(crate) fn validate_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.first() == Some(&0) {
        return Err(Error::InvalidArgument("truncations must be >= 1".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n_list must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// |⟨Ψ_n|Φ_n⟩| at each truncation in `n_list`.
pub fn orthogonalization_curve(
    a: &ProductStateSpec,
    b: &ProductStateSpec,
    n_list: &[u64],
) -> Result<Vec<CurvePoint>> {
    validate_n_list(n_list)?;
    joint_period(a, b)?;
    n_list
        .par_iter()
        .map(|&n| truncated_overlap(a, b, n).map(|amp| CurvePoint::new(n, amp)))
        .collect()
}

/// CSV with columns `n,|overlap|,log2|overlap|`.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("n,|overlap|,log2|overlap|\n");
    for p in points {
        writeln!(out, "{},{:e},{}", p.n, p.magnitude, p.log2_magnitude).expect("string write");
    }
    out
}
