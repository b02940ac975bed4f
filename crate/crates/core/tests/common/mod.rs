//! Dense brute-force oracles and random generators shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use itpq_core::random::{self, SeededRng};
use itpq_core::{CMat, CVec, OperatorExpr, ProductStateSpec, StateTail};
use num_complex::Complex64;
use rand::Rng;

/// Full state vector of the first `n` sites; site 1 is the most significant
/// index.
pub fn dense_state(spec: &ProductStateSpec, n: u64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for site in 1..=n {
        let local = spec.state(site).entries();
        let mut next = Vec::with_capacity(out.len() * local.len());
        for a in &out {
            for b in local {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// `m` acting on `site` of an n-site vector with local dimension `d`.
fn apply_site(m: &CMat, site: u64, n: u64, d: usize, v: &[Complex64]) -> Vec<Complex64> {
    let stride = d.pow((n - site) as u32);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let digit = (idx / stride) % d;
        let base = idx - digit * stride;
        for k in 0..d {
            *slot += m[(digit, k)] * v[base + k * stride];
        }
    }
    out
}

/// expr |v⟩ by direct recursion over the tree.
pub fn dense_apply(expr: &OperatorExpr, n: u64, d: usize, v: &[Complex64]) -> Vec<Complex64> {
    match expr {
        OperatorExpr::Identity => v.to_vec(),
        OperatorExpr::Site(op) => apply_site(&op.matrix, op.site, n, d, v),
        OperatorExpr::Sum { terms } => {
            let mut acc = vec![Complex64::new(0.0, 0.0); v.len()];
            for t in terms {
                for (a, b) in acc.iter_mut().zip(dense_apply(t, n, d, v)) {
                    *a += b;
                }
            }
            acc
        }
        OperatorExpr::Product { factors } => factors
            .iter()
            .rev()
            .fold(v.to_vec(), |w, f| dense_apply(f, n, d, &w)),
        OperatorExpr::Scale { factor, expr } => dense_apply(expr, n, d, v)
            .into_iter()
            .map(|x| factor * x)
            .collect(),
    }
}

/// ⟨bra| expr |ket⟩ on the first `n` sites, computed densely.
pub fn dense_element(
    expr: &OperatorExpr,
    bra: &ProductStateSpec,
    ket: &ProductStateSpec,
    n: u64,
) -> Complex64 {
    let b = dense_state(bra, n);
    let k = dense_apply(expr, n, bra.local_dim(), &dense_state(ket, n));
    b.iter().zip(&k).map(|(x, y)| x.conj() * y).sum()
}

pub fn complex_matrix(rng: &mut SeededRng, d: usize) -> CMat {
    let rows = (0..d)
        .map(|_| (0..d).map(|_| random::gaussian(rng)).collect())
        .collect();
    CMat::from_rows(rows).unwrap()
}

/// A random expression tree of bounded depth over sites 1..=n.
pub fn random_expr(rng: &mut SeededRng, n: u64, d: usize, depth: u32) -> OperatorExpr {
    let choice = if depth == 0 {
        rng.random_range(0..2)
    } else {
        rng.random_range(0..5)
    };
    match choice {
        0 => OperatorExpr::site(rng.random_range(1..=n), complex_matrix(rng, d)),
        1 => {
            if rng.random_bool(0.2) {
                OperatorExpr::Identity
            } else {
                OperatorExpr::site(rng.random_range(1..=n), complex_matrix(rng, d))
            }
        }
        2 => OperatorExpr::sum(
            (0..rng.random_range(1..=3))
                .map(|_| random_expr(rng, n, d, depth - 1))
                .collect(),
        ),
        3 => OperatorExpr::product(
            (0..rng.random_range(1..=3))
                .map(|_| random_expr(rng, n, d, depth - 1))
                .collect(),
        ),
        _ => OperatorExpr::scale(random::gaussian(rng), random_expr(rng, n, d, depth - 1)),
    }
}

/// A product state with a random periodic tail and random deviations at
/// sites up to `max_site`.
pub fn random_product_state(rng: &mut SeededRng, d: usize, max_site: u64) -> ProductStateSpec {
    let period = rng.random_range(1..=3);
    let tail: Vec<CVec> = (0..period).map(|_| random::unit_vector(rng, d)).collect();
    let tail = if period == 1 {
        StateTail::Constant(tail.into_iter().next().unwrap())
    } else {
        StateTail::Periodic(tail)
    };
    let deviations: BTreeMap<u64, CVec> = (0..rng.random_range(0..=3))
        .map(|_| (rng.random_range(1..=max_site), random::unit_vector(rng, d)))
        .collect();
    ProductStateSpec::new(d, tail, deviations).unwrap()
}

/// Unit vector whose overlap with `a` is `overlap` (magnitude and phase).
pub fn with_overlap(rng: &mut SeededRng, a: &CVec, overlap: Complex64) -> CVec {
    let basis = random::complete_basis(rng, a);
    let perp = &basis[1];
    let s = (1.0 - overlap.norm_sqr()).max(0.0).sqrt();
    a.scale(overlap)
        .add(&perp.scale(Complex64::new(s, 0.0)))
        .unwrap()
        .normalized()
        .unwrap()
}

/// Relative-or-absolute closeness for complex values.
pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}
