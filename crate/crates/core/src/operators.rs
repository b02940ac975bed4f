//! Completed single-site operators and the ring they generate.
//!
//! An [`OperatorExpr`] is a finite tree of sums, products and scalings over
//! single-site leaves, each leaf acting as the identity on every other site.
//! Matrix elements between product states are evaluated by expanding the
//! tree into a sum of terms, each a product of per-site matrices on distinct
//! sites. Such a term factorizes into local brackets ⟨ψ_α|M_α|φ_α⟩ times the
//! plain overlap on all untouched sites, so nothing of size local_dim^n is
//! ever built.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::CMat;
use crate::itp::{
    overlap_with_overrides, same_sector, validate_n_list, CurvePoint, LogAmp, ProductStateSpec,
};
use crate::{tolerances, Error, Result};

/// A local operator placed at a 1-based site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteOp {
    pub site: u64,
    pub matrix: CMat,
}

/// Element of the ring generated by completed single-site operators.
///
/// JSON uses an `op` tag: `{"op": "site", "site": 1, "matrix": [[[re, im], ...], ...]}`,
/// `{"op": "sum", "terms": [...]}`, `{"op": "product", "factors": [...]}`,
/// `{"op": "scale", "factor": [re, im], "expr": {...}}` and `{"op": "identity"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorExpr {
    Identity,
    Site(SiteOp),
    Sum {
        terms: Vec<OperatorExpr>,
    },
    /// Operator product, leftmost factor applied last.
    Product {
        factors: Vec<OperatorExpr>,
    },
    Scale {
        factor: Complex64,
        expr: Box<OperatorExpr>,
    },
}

impl OperatorExpr {
    pub fn site(site: u64, matrix: CMat) -> Self {
        Self::Site(SiteOp { site, matrix })
    }

    pub fn sum(terms: Vec<OperatorExpr>) -> Self {
        Self::Sum { terms }
    }

    pub fn product(factors: Vec<OperatorExpr>) -> Self {
        Self::Product { factors }
    }

    pub fn scale(factor: Complex64, expr: OperatorExpr) -> Self {
        Self::Scale {
            factor,
            expr: Box::new(expr),
        }
    }

    /// Σ_{α ∈ sites} M at α.
    pub fn sum_over(sites: impl IntoIterator<Item = u64>, matrix: &CMat) -> Self {
        Self::sum(
            sites
                .into_iter()
                .map(|s| Self::site(s, matrix.clone()))
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("operator: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("expression serializes")
    }

    /// Highest site touched by any leaf.
    pub fn max_site(&self) -> Option<u64> {
        match self {
            Self::Identity => None,
            Self::Site(op) => Some(op.site),
            Self::Sum { terms: children } | Self::Product { factors: children } => {
                children.iter().filter_map(Self::max_site).max()
            }
            Self::Scale { expr, .. } => expr.max_site(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Self::Identity | Self::Site(_) => 1,
            Self::Sum { terms: children } | Self::Product { factors: children } => {
                children.iter().map(Self::leaf_count).sum()
            }
            Self::Scale { expr, .. } => expr.leaf_count(),
        }
    }

    /// Checks every leaf is a square `local_dim` matrix at a site ≥ 1.
    pub fn validate(&self, local_dim: usize) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Site(op) => {
                if op.site == 0 {
                    return Err(Error::InvalidArgument("site indices start at 1".into()));
                }
                if op.matrix.rows() != local_dim || op.matrix.cols() != local_dim {
                    return Err(Error::DimensionMismatch {
                        expected: local_dim,
                        got: op.matrix.rows(),
                    });
                }
                Ok(())
            }
            Self::Sum { terms: children } | Self::Product { factors: children } => {
                children.iter().try_for_each(|c| c.validate(local_dim))
            }
            Self::Scale { expr, .. } => expr.validate(local_dim),
        }
    }

    /// Expands into a sum of coefficient × per-site matrix products.
    pub fn normal_form(&self, budget: usize) -> Result<Vec<Term>> {
        let terms = match self {
            Self::Identity => vec![Term::identity()],
            Self::Site(op) => {
                vec![Term {
                    coeff: Complex64::new(1.0, 0.0),
                    factors: BTreeMap::from([(op.site, op.matrix.clone())]),
                }]
            }
            Self::Scale { factor, expr } => {
                let mut terms = expr.normal_form(budget)?;
                for t in &mut terms {
                    t.coeff *= factor;
                }
                terms
            }
            Self::Sum { terms: children } => {
                let mut out = Vec::new();
                for c in children {
                    out.extend(c.normal_form(budget)?);
                    if out.len() > budget {
                        return Err(Error::TermBudget { budget });
                    }
                }
                out
            }
            Self::Product { factors } => {
                let mut acc = vec![Term::identity()];
                for f in factors {
                    let rhs = f.normal_form(budget)?;
                    if acc.len().saturating_mul(rhs.len()) > budget {
                        return Err(Error::TermBudget { budget });
                    }
                    acc = acc
                        .iter()
                        .flat_map(|l| rhs.iter().map(move |r| l.compose(r)))
                        .collect::<Result<_>>()?;
                }
                acc
            }
        };
        if terms.len() > budget {
            return Err(Error::TermBudget { budget });
        }
        Ok(terms)
    }
}

/// coeff · ⊗_α M_α over the listed sites, identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: BTreeMap<u64, CMat>,
}

impl Term {
    fn identity() -> Self {
        Self {
            coeff: Complex64::new(1.0, 0.0),
            factors: BTreeMap::new(),
        }
    }

    /// self · rhs; same-site factors multiply in order.
    fn compose(&self, rhs: &Term) -> Result<Term> {
        let mut factors = self.factors.clone();
        for (site, m) in &rhs.factors {
            let merged = match factors.get(site) {
                Some(left) => left.matmul(m)?,
                None => m.clone(),
            };
            factors.insert(*site, merged);
        }
        Ok(Term {
            coeff: self.coeff * rhs.coeff,
            factors,
        })
    }
}

fn check_operands(
    expr: &OperatorExpr,
    bra: &ProductStateSpec,
    ket: &ProductStateSpec,
) -> Result<()> {
    if bra.local_dim() != ket.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: bra.local_dim(),
            got: ket.local_dim(),
        });
    }
    expr.validate(bra.local_dim())
}

fn evaluate_terms(
    terms: &[Term],
    bra: &ProductStateSpec,
    ket: &ProductStateSpec,
    n: u64,
) -> Result<LogAmp> {
    let one = Complex64::new(1.0, 0.0);
    let amps = terms
        .par_iter()
        .map(|t| {
            let overrides = t
                .factors
                .iter()
                .map(|(&site, m)| Ok((site, m.bracket(bra.state(site), ket.state(site))?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let amp = overlap_with_overrides(bra, ket, n, &overrides)?;
            Ok(if t.coeff == one {
                amp
            } else {
                amp * LogAmp::from_complex(t.coeff)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LogAmp::sum(&amps))
}

/// ⟨Ψ_n| expr |Φ_n⟩ over sites 1..=n.
pub fn matrix_element(
    expr: &OperatorExpr,
    bra: &ProductStateSpec,
    ket: &ProductStateSpec,
    n: u64,
) -> Result<LogAmp> {
    check_operands(expr, bra, ket)?;
    if let Some(site) = expr.max_site().filter(|&s| s > n) {
        return Err(Error::SiteBeyondTruncation { site, n });
    }
    let terms = expr.normal_form(tolerances().term_budget)?;
    evaluate_terms(&terms, bra, ket, n)
}

/// |⟨Ψ_n| expr |Φ_n⟩| along `n_list` for states in different sectors.
pub fn intersector_decay(
    expr: &OperatorExpr,
    bra: &ProductStateSpec,
    ket: &ProductStateSpec,
    n_list: &[u64],
) -> Result<Vec<CurvePoint>> {
    check_operands(expr, bra, ket)?;
    validate_n_list(n_list)?;
    if same_sector(bra, ket)?.same_sector {
        return Err(Error::SameSector);
    }
    if let (Some(site), Some(&n)) = (expr.max_site(), n_list.first()) {
        if site > n {
            return Err(Error::SiteBeyondTruncation { site, n });
        }
    }
    let terms = expr.normal_form(tolerances().term_budget)?;
    n_list
        .iter()
        .map(|&n| evaluate_terms(&terms, bra, ket, n).map(|amp| CurvePoint::new(n, amp)))
        .collect()
}

/// Matrix of |⟨rep_i| expr |rep_j⟩| with reps labelled by sector.
#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub n: u64,
    pub epsilon: f64,
    /// Sector label per representative, numbered by first appearance.
    pub sectors: Vec<usize>,
    /// Representatives grouped by sector (stable within a sector).
    pub order: Vec<usize>,
    /// Indexed by original representative positions.
    pub magnitudes: Vec<Vec<f64>>,
    pub log2_magnitudes: Vec<Vec<f64>>,
    /// Largest cross-sector magnitude; `None` with a single sector.
    pub cross_sector_max: Option<f64>,
    pub cross_below_epsilon: bool,
}

impl BlockReport {
    pub fn sector_count(&self) -> usize {
        self.sectors.iter().max().map_or(0, |m| m + 1)
    }

    /// CSV rows in grouped order with sector labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,row_sector,col_sector,cross,|element|,log2|element|\n");
        for &i in &self.order {
            for &j in &self.order {
                let (si, sj) = (self.sectors[i], self.sectors[j]);
                writeln!(
                    out,
                    "{i},{j},{si},{sj},{},{:e},{}",
                    si != sj,
                    self.magnitudes[i][j],
                    self.log2_magnitudes[i][j]
                )
                .expect("string write");
            }
        }
        out
    }

    /// Text picture in grouped order: `#` at or above epsilon, `.` below.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for &i in &self.order {
            let row: String = self
                .order
                .iter()
                .map(|&j| {
                    if self.magnitudes[i][j] >= self.epsilon {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect();
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// Evaluates `expr` between every pair of representatives at truncation `n`.
pub fn sector_block_report(
    expr: &OperatorExpr,
    reps: &[ProductStateSpec],
    n: u64,
    epsilon: f64,
) -> Result<BlockReport> {
    if reps.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one representative".into(),
        ));
    }
    let mut heads: Vec<usize> = Vec::new();
    let mut sectors = Vec::with_capacity(reps.len());
    for (i, rep) in reps.iter().enumerate() {
        let mut label = None;
        for (s, &h) in heads.iter().enumerate() {
            if same_sector(&reps[h], rep)?.same_sector {
                label = Some(s);
                break;
            }
        }
        sectors.push(label.unwrap_or_else(|| {
            heads.push(i);
            heads.len() - 1
        }));
    }
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by_key(|&i| (sectors[i], i));

    for rep in reps {
        check_operands(expr, &reps[0], rep)?;
    }
    if let Some(site) = expr.max_site().filter(|&s| s > n) {
        return Err(Error::SiteBeyondTruncation { site, n });
    }
    let terms = expr.normal_form(tolerances().term_budget)?;
    let mut magnitudes = vec![vec![0.0; reps.len()]; reps.len()];
    let mut log2_magnitudes = vec![vec![0.0; reps.len()]; reps.len()];
    let mut cross_sector_max: Option<f64> = None;
    for (i, bra) in reps.iter().enumerate() {
        for (j, ket) in reps.iter().enumerate() {
            let amp = evaluate_terms(&terms, bra, ket, n)?;
            magnitudes[i][j] = amp.magnitude();
            log2_magnitudes[i][j] = amp.log2_magnitude();
            if sectors[i] != sectors[j] {
                cross_sector_max =
                    Some(cross_sector_max.map_or(amp.magnitude(), |m| m.max(amp.magnitude())));
            }
        }
    }
    Ok(BlockReport {
        n,
        epsilon,
        sectors,
        order,
        magnitudes,
        log2_magnitudes,
        cross_below_epsilon: cross_sector_max.is_none_or(|m| m < epsilon),
        cross_sector_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::CVec;
    use crate::itp::truncated_overlap;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn up() -> CVec {
        CVec::basis(2, 0)
    }

    fn down() -> CVec {
        CVec::basis(2, 1)
    }

    fn plus() -> CVec {
        CVec::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
    }

    fn all_up() -> ProductStateSpec {
        ProductStateSpec::constant(up()).unwrap()
    }

    fn odd_plus() -> ProductStateSpec {
        ProductStateSpec::periodic(vec![plus(), up()]).unwrap()
    }

    #[test]
    fn single_site_flip() {
        let n = 10;
        let bra = all_up().with_deviation(1, down()).unwrap();
        let me =
            matrix_element(&OperatorExpr::site(1, CMat::pauli_x()), &bra, &all_up(), n).unwrap();
        assert!((me.to_complex() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_reproduces_overlap_bit_for_bit() {
        let me = matrix_element(&OperatorExpr::Identity, &all_up(), &odd_plus(), 8).unwrap();
        assert!((me.magnitude() - 0.25).abs() < 1e-15);
        for n in [1, 8, 99, 1_000_000] {
            let me = matrix_element(&OperatorExpr::Identity, &all_up(), &odd_plus(), n).unwrap();
            assert_eq!(me, truncated_overlap(&all_up(), &odd_plus(), n).unwrap());
        }
    }

    #[test]
    fn sum_of_sigma_z() {
        for n in [1u64, 5, 64] {
            let expr = OperatorExpr::sum_over(1..=n, &CMat::pauli_z());
            let me = matrix_element(&expr, &all_up(), &all_up(), n).unwrap();
            assert!((me.to_complex() - Complex64::new(n as f64, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn same_site_products_compose_in_order() {
        // σ_x σ_z |up⟩ = σ_x |up⟩ = |down⟩ ; σ_z σ_x |up⟩ = −|down⟩
        let bra = all_up().with_deviation(2, down()).unwrap();
        let xz = OperatorExpr::product(vec![
            OperatorExpr::site(2, CMat::pauli_x()),
            OperatorExpr::site(2, CMat::pauli_z()),
        ]);
        let zx = OperatorExpr::product(vec![
            OperatorExpr::site(2, CMat::pauli_z()),
            OperatorExpr::site(2, CMat::pauli_x()),
        ]);
        let a = matrix_element(&xz, &bra, &all_up(), 3)
            .unwrap()
            .to_complex();
        let b = matrix_element(&zx, &bra, &all_up(), 3)
            .unwrap()
            .to_complex();
        assert!((a - 1.0).norm() < 1e-15);
        assert!((b + 1.0).norm() < 1e-15);
    }

    #[test]
    fn expansion_errors() {
        let e = OperatorExpr::site(5, CMat::pauli_x());
        assert!(matches!(
            matrix_element(&e, &all_up(), &all_up(), 4),
            Err(Error::SiteBeyondTruncation { site: 5, n: 4 })
        ));
        let wide = OperatorExpr::sum_over(1..=400, &CMat::pauli_z());
        let squared = OperatorExpr::product(vec![wide.clone(), wide]);
        assert!(matches!(
            squared.normal_form(100_000),
            Err(Error::TermBudget { .. })
        ));
        assert_eq!(
            OperatorExpr::product(vec![OperatorExpr::sum_over(1..=300, &CMat::pauli_z()); 2])
                .normal_form(100_000)
                .unwrap()
                .len(),
            90_000
        );
        let bad = OperatorExpr::site(1, CMat::identity(3));
        assert!(matrix_element(&bad, &all_up(), &all_up(), 2).is_err());
    }

    #[test]
    fn json_tree() {
        let text = r#"{"op": "sum", "terms": [
            {"op": "scale", "factor": [2, 0], "expr": {"op": "site", "site": 1, "matrix": [[[0,0],[1,0]],[[1,0],[0,0]]]}},
            {"op": "product", "factors": [{"op": "identity"}]}
        ]}"#;
        let e = OperatorExpr::from_json(text).unwrap();
        assert_eq!(e.leaf_count(), 2);
        assert_eq!(e.max_site(), Some(1));
        assert_eq!(OperatorExpr::from_json(&e.to_json()).unwrap(), e);
    }

    #[test]
    fn decay_requires_different_sectors() {
        let e = OperatorExpr::site(1, CMat::pauli_x());
        let near = all_up().with_deviation(2, plus()).unwrap();
        assert!(matches!(
            intersector_decay(&e, &all_up(), &near, &[4, 8]),
            Err(Error::SameSector)
        ));
        let curve = intersector_decay(&OperatorExpr::Identity, &all_up(), &odd_plus(), &[4, 8, 16])
            .unwrap();
        for p in &curve {
            assert!((p.log2_magnitude + p.n as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_report_shapes() {
        let all_plus = ProductStateSpec::constant(plus()).unwrap();
        let reps = vec![
            all_up(),
            all_plus,
            all_up().with_deviation(3, plus()).unwrap(),
        ];
        let r = sector_block_report(&OperatorExpr::Identity, &reps, 64, 1e-6).unwrap();
        assert_eq!(r.sectors, vec![0, 1, 0]);
        assert_eq!(r.order, vec![0, 2, 1]);
        assert!(r.cross_sector_max.unwrap() < 1e-4);
        assert!(r.cross_below_epsilon);
        assert!((r.magnitudes[0][2] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(r.render(), "##.\n##.\n..#\n");
        assert_eq!(r.to_csv().lines().count(), 10);

        let single = sector_block_report(&OperatorExpr::Identity, &reps[..1], 8, 1e-6).unwrap();
        assert_eq!(single.magnitudes.len(), 1);
        assert_eq!(single.cross_sector_max, None);

        let one_sector = vec![reps[0].clone(), reps[2].clone()];
        let r = sector_block_report(&OperatorExpr::Identity, &one_sector, 8, 1e-6).unwrap();
        assert_eq!(r.sector_count(), 1);
        assert!(!r.to_csv().contains(",true,"));
    }
}
