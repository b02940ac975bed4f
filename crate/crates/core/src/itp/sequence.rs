use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{tolerances, Error, Result};

/// The repeating or analytic part of an infinite sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceTail {
    Constant {
        value: Complex64,
    },
    /// Site α takes `values[(α - 1) % len]`.
    Periodic {
        values: Vec<Complex64>,
    },
    /// z_α = 1 + c·α^(−p).
    PowerLaw {
        c: Complex64,
        p: f64,
    },
}

/// An infinite family {z_α}, α = 1, 2, ... : a tail with finitely many
/// overridden sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    tail: SequenceTail,
    #[serde(default)]
    deviations: BTreeMap<u64, Complex64>,
}

impl SequenceSpec {
    pub fn new(tail: SequenceTail, deviations: BTreeMap<u64, Complex64>) -> Result<Self> {
        match &tail {
            SequenceTail::Periodic { values } if values.is_empty() => {
                return Err(Error::InvalidSequence(
                    "periodic tail needs at least one value".into(),
                ))
            }
            SequenceTail::PowerLaw { p, .. } if !(*p > 0.0 && p.is_finite()) => {
                return Err(Error::InvalidSequence(format!(
                    "power law needs p > 0, got {p}"
                )))
            }
            _ => {}
        }
        if deviations.contains_key(&0) {
            return Err(Error::InvalidSequence("site indices start at 1".into()));
        }
        Ok(Self { tail, deviations })
    }

    pub fn constant(value: Complex64) -> Self {
        Self {
            tail: SequenceTail::Constant { value },
            deviations: BTreeMap::new(),
        }
    }

    pub fn periodic(values: Vec<Complex64>) -> Result<Self> {
        Self::new(SequenceTail::Periodic { values }, BTreeMap::new())
    }

    pub fn power_law(c: Complex64, p: f64) -> Result<Self> {
        Self::new(SequenceTail::PowerLaw { c, p }, BTreeMap::new())
    }

    pub fn with_deviation(mut self, site: u64, value: Complex64) -> Result<Self> {
        if site == 0 {
            return Err(Error::InvalidSequence("site indices start at 1".into()));
        }
        self.deviations.insert(site, value);
        Ok(self)
    }

    pub fn tail(&self) -> &SequenceTail {
        &self.tail
    }

    pub fn deviations(&self) -> &BTreeMap<u64, Complex64> {
        &self.deviations
    }

    pub fn tail_value(&self, site: u64) -> Complex64 {
        match &self.tail {
            SequenceTail::Constant { value } => *value,
            SequenceTail::Periodic { values } => {
                values[((site - 1) % values.len() as u64) as usize]
            }
            SequenceTail::PowerLaw { c, p } => 1.0 + c * (site as f64).powf(-p),
        }
    }

    /// z_α at a 1-based site.
    pub fn value(&self, site: u64) -> Complex64 {
        assert!(site >= 1, "site indices start at 1");
        self.deviations
            .get(&site)
            .copied()
            .unwrap_or_else(|| self.tail_value(site))
    }
}

/// How an infinite product Π z_α behaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ProductClass {
    /// Σ|z_α − 1| converges (or some factor is exactly 0) and the product
    /// has this limit.
    Converges(Complex64),
    /// Moduli accumulate at 1 while the arguments keep turning.
    QuasiConverges,
    /// Partial products shrink to 0 without any zero factor.
    DivergesToZero,
    /// Everything else, including conditionally convergent power laws.
    Diverges,
}

/// Classifies Π z_α over all sites.
///
/// Power-law tails with p ≤ 1 and Re(c) ≥ 0 are reported as `Diverges` even
/// when a conditional limit exists; only absolute convergence is claimed.
pub fn classify_product(spec: &SequenceSpec) -> ProductClass {
    let zero = Complex64::new(0.0, 0.0);
    if spec.deviations.values().any(|z| *z == zero) {
        return ProductClass::Converges(zero);
    }
    let unit = tolerances().unit_factor;
    let deviation_product: Complex64 = spec.deviations.values().product();
    match &spec.tail {
        SequenceTail::Constant { value } => {
            classify_periodic(std::slice::from_ref(value), deviation_product, unit)
        }
        SequenceTail::Periodic { values } => classify_periodic(values, deviation_product, unit),
        SequenceTail::PowerLaw { c, p } => {
            if power_law_zero_site(spec, *c, *p).is_some() {
                return ProductClass::Converges(zero);
            }
            if *c == zero {
                ProductClass::Converges(deviation_product)
            } else if *p > 1.0 {
                ProductClass::Converges(power_law_product(spec, *c, *p))
            } else if c.re < 0.0 {
                ProductClass::DivergesToZero
            } else {
                ProductClass::Diverges
            }
        }
    }
}

fn classify_periodic(
    values: &[Complex64],
    deviation_product: Complex64,
    unit: f64,
) -> ProductClass {
    // every residue class has infinitely many undeviated sites
    if values.iter().any(|z| z.norm() == 0.0) {
        return ProductClass::Converges(Complex64::new(0.0, 0.0));
    }
    if values.iter().all(|z| (z - 1.0).norm() <= unit) {
        return ProductClass::Converges(deviation_product);
    }
    if values.iter().all(|z| (z.norm() - 1.0).abs() <= unit) {
        return ProductClass::QuasiConverges;
    }
    let log_modulus_per_period: f64 = values.iter().map(|z| z.norm().ln()).sum();
    if values.iter().all(|z| z.norm() <= 1.0 + unit) || log_modulus_per_period < 0.0 {
        ProductClass::DivergesToZero
    } else {
        ProductClass::Diverges
    }
}

/// A non-deviated site where 1 + c·α^(−p) vanishes.
fn power_law_zero_site(spec: &SequenceSpec, c: Complex64, p: f64) -> Option<u64> {
    if c.im != 0.0 || c.re >= 0.0 {
        return None;
    }
    let site = (-c.re).powf(1.0 / p).round();
    if site < 1.0 || site > u64::MAX as f64 {
        return None;
    }
    let site = site as u64;
    let hit = (1.0 + c * (site as f64).powf(-p)).norm() <= 1e-14;
    (hit && !spec.deviations.contains_key(&site)).then_some(site)
}

/// Π (1 + c·α^(−p)) for p > 1: an explicit log-sum up to a cutoff, then the
/// remaining tail as Σ_k (−1)^(k+1) c^k/k · ζ_N(kp) with Euler-Maclaurin
/// tail zetas.
fn power_law_product(spec: &SequenceSpec, c: Complex64, p: f64) -> Complex64 {
    let last_deviation = spec.deviations.keys().next_back().copied().unwrap_or(0);
    let cutoff = ((20.0 * c.norm()).powf(1.0 / p).ceil() as u64)
        .max(1000)
        .max(last_deviation)
        .min(10_000_000);
    let mut log_sum = Complex64::new(0.0, 0.0);
    for site in 1..=cutoff {
        log_sum += spec.value(site).ln();
    }
    for (&site, z) in spec.deviations.range(cutoff + 1..) {
        log_sum += z.ln() - spec.tail_value(site).ln();
    }
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..=200u32 {
        power *= c;
        let zeta = tail_zeta(cutoff as f64, f64::from(k) * p);
        let term = power * zeta / f64::from(k);
        if k % 2 == 1 {
            log_sum += term;
        } else {
            log_sum -= term;
        }
        if term.norm() < 1e-18 * (1.0 + log_sum.norm()) {
            break;
        }
    }
    log_sum.exp()
}

/// Σ_{α > n} α^(−s) for s > 1 by Euler-Maclaurin at α = n.
fn tail_zeta(n: f64, s: f64) -> f64 {
    let ns = n.powf(-s);
    let from_n = n.powf(1.0 - s) / (s - 1.0) + ns / 2.0 + s * ns / n / 12.0
        - s * (s + 1.0) * (s + 2.0) * ns / n.powi(3) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ns / n.powi(5) / 30240.0;
    from_n - ns
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn finite_deviations_converge_to_their_product() {
        let s = SequenceSpec::constant(c(1.0))
            .with_deviation(1, c(2.0))
            .unwrap()
            .with_deviation(2, c(0.5))
            .unwrap();
        assert_eq!(classify_product(&s), ProductClass::Converges(c(1.0)));
        assert_eq!(
            classify_product(&SequenceSpec::constant(c(1.0))),
            ProductClass::Converges(c(1.0))
        );
    }

    #[test]
    fn unimodular_tail_quasi_converges() {
        let s = SequenceSpec::constant(Complex64::from_polar(1.0, PI / 4.0));
        assert_eq!(classify_product(&s), ProductClass::QuasiConverges);
        let alt = SequenceSpec::periodic(vec![Complex64::i(), -Complex64::i()]).unwrap();
        assert_eq!(classify_product(&alt), ProductClass::QuasiConverges);
    }

    #[test]
    fn sub_unit_tail_diverges_to_zero() {
        assert_eq!(
            classify_product(&SequenceSpec::constant(c(0.9))),
            ProductClass::DivergesToZero
        );
        // partial products 0.9^n
        assert!(0.9f64.powi(1000) < 1e-45);
        let mixed = SequenceSpec::periodic(vec![c(1.5), c(0.5)]).unwrap();
        assert_eq!(classify_product(&mixed), ProductClass::DivergesToZero);
        assert_eq!(
            classify_product(&SequenceSpec::constant(c(1.1))),
            ProductClass::Diverges
        );
    }

    #[test]
    fn zero_factors_are_trivial_convergence() {
        let s = SequenceSpec::constant(c(0.9))
            .with_deviation(5, c(0.0))
            .unwrap();
        assert_eq!(classify_product(&s), ProductClass::Converges(c(0.0)));
        let p = SequenceSpec::periodic(vec![c(1.0), c(0.0)]).unwrap();
        assert_eq!(classify_product(&p), ProductClass::Converges(c(0.0)));
        // 1 - 4/α² vanishes at α = 2
        let pl = SequenceSpec::power_law(c(-4.0), 2.0).unwrap();
        assert_eq!(classify_product(&pl), ProductClass::Converges(c(0.0)));
        let patched = pl.with_deviation(2, c(1.0)).unwrap();
        assert!(matches!(classify_product(&patched), ProductClass::Converges(z) if z.norm() > 0.0));
    }

    #[test]
    fn power_law_matches_closed_form() {
        // Π (1 + 1/α²) = sinh(π)/π
        let s = SequenceSpec::power_law(c(1.0), 2.0).unwrap();
        let ProductClass::Converges(z) = classify_product(&s) else {
            panic!()
        };
        assert!((z.re - PI.sinh() / PI).abs() < 1e-12, "{z}");
        assert!(z.im.abs() < 1e-15);
        // Π (1 − 1/(4α²)) = 2/π (Wallis)
        let w = SequenceSpec::power_law(c(-0.25), 2.0).unwrap();
        let ProductClass::Converges(z) = classify_product(&w) else {
            panic!()
        };
        assert!((z.re - 2.0 / PI).abs() < 1e-12, "{z}");
    }

    #[test]
    fn power_law_slow_exponents() {
        assert_eq!(
            classify_product(&SequenceSpec::power_law(c(1.0), 1.0).unwrap()),
            ProductClass::Diverges
        );
        assert_eq!(
            classify_product(&SequenceSpec::power_law(c(-0.5), 0.5).unwrap()),
            ProductClass::DivergesToZero
        );
        assert!(SequenceSpec::power_law(c(1.0), 0.0).is_err());
        assert!(SequenceSpec::periodic(vec![]).is_err());
        assert!(SequenceSpec::constant(c(1.0))
            .with_deviation(0, c(1.0))
            .is_err());
    }

    #[test]
    fn tail_zeta_against_known_zeta_values() {
        let known = [
            (2.0, PI * PI / 6.0),
            (3.0, 1.202_056_903_159_594_3),
            (4.0, PI.powi(4) / 90.0),
        ];
        for (s, zeta) in known {
            for n in [100u64, 1000] {
                let head: f64 = (1..=n).map(|a| (a as f64).powf(-s)).sum();
                assert!(
                    (head + tail_zeta(n as f64, s) - zeta).abs() < 1e-13,
                    "s={s} n={n}"
                );
            }
        }
    }
}
