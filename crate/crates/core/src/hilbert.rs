//! Dense complex linear algebra for small spaces.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{tolerances, Error, Result};

/// Largest matrix handled by [`spectral`].
pub const MAX_SPECTRAL_DIM: usize = 64;
/// Largest vector or matrix side produced by [`kron`].
pub const MAX_KRON_DIM: usize = 1 << 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex column vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct CVec(Vec<Complex64>);

impl CVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("vector must have dim >= 1".into()));
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector must have dim >= 1");
        Self(vec![ZERO; dim])
    }

    /// The `index`-th standard basis vector (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= tolerances().unit_norm
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Fails unless the vector is normalized within the unit tolerance.
    pub fn require_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::NotUnit { norm: self.norm() })
        }
    }
}

impl TryFrom<Vec<Complex64>> for CVec {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CVec> for Vec<Complex64> {
    fn from(v: CVec) -> Self {
        v.0
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// ⟨a|b⟩, conjugate-linear in `a`.
pub fn inner(a: &CVec, b: &CVec) -> Result<Complex64> {
    check_dim(a.dim(), b.dim())?;
    Ok(inner_unchecked(a, b))
}

pub(crate) fn inner_unchecked(a: &CVec, b: &CVec) -> Complex64 {
    a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum()
}

/// A dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Complex64>>", into = "Vec<Vec<Complex64>>")]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::InvalidArgument("matrix must be at least 1x1".into()));
        }
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.len(),
            });
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[CVec]) -> Result<Self> {
        let dim = cols
            .first()
            .map(CVec::dim)
            .ok_or(Error::InvalidArgument("no columns".into()))?;
        let mut m = Self::zeros(dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            check_dim(dim, c.dim())?;
            for i in 0..dim {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    /// |v⟩⟨v|
    pub fn projector(v: &CVec) -> Self {
        let d = v.dim();
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("static shape")
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Self::from_rows(vec![vec![ZERO, -i], vec![i, ZERO]]).expect("static shape")
    }

    pub fn pauli_z() -> Self {
        Self::diag(&[1.0, -1.0])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        check_dim(self.cols, v.dim())?;
        Ok(CVec(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        ))
    }

    /// ⟨a|M|b⟩
    pub fn bracket(&self, a: &CVec, b: &CVec) -> Result<Complex64> {
        inner(a, &self.apply(b)?)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |M − M†|, or infinity for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= tolerances().hermitian
    }

    pub fn is_projector(&self) -> bool {
        self.is_hermitian()
            && self
                .matmul(self)
                .and_then(|sq| sq.sub(self))
                .map(|d| d.max_abs() <= tolerances().projector)
                .unwrap_or(false)
    }

    /// max |U†U − I|; infinity for non-square input.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.dagger().matmul(self).expect("square");
        g.sub(&Self::identity(self.rows))
            .expect("same shape")
            .max_abs()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl TryFrom<Vec<Vec<Complex64>>> for CMat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<CMat> for Vec<Vec<Complex64>> {
    fn from(m: CMat) -> Self {
        m.data.chunks(m.cols).map(<[Complex64]>::to_vec).collect()
    }
}

/// Kronecker (tensor) product.
pub trait Kron<Rhs = Self> {
    type Output;

    fn kron(&self, rhs: &Rhs) -> Result<Self::Output>;
}

impl Kron for CVec {
    type Output = CVec;

    fn kron(&self, rhs: &CVec) -> Result<CVec> {
        let dim = kron_size(self.dim(), rhs.dim())?;
        let mut out = Vec::with_capacity(dim);
        for a in &self.0 {
            out.extend(rhs.0.iter().map(|b| a * b));
        }
        Ok(CVec(out))
    }
}

impl Kron for CMat {
    type Output = CMat;

    fn kron(&self, rhs: &CMat) -> Result<CMat> {
        let rows = kron_size(self.rows, rhs.rows)?;
        let cols = kron_size(self.cols, rhs.cols)?;
        let mut m = CMat::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        m[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Free-function form of [`Kron::kron`].
pub fn kron<T: Kron>(a: &T, b: &T) -> Result<T::Output> {
    a.kron(b)
}

fn kron_size(a: usize, b: usize) -> Result<usize> {
    match a.checked_mul(b) {
        Some(d) if d <= MAX_KRON_DIM => Ok(d),
        _ => Err(Error::TooLarge {
            dim: a.saturating_mul(b),
            max: MAX_KRON_DIM,
        }),
    }
}

/// An eigenvalue with its normalized eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: CVec,
}

/// Spectral decomposition of a non-degenerate Hermitian matrix by cyclic
/// complex Jacobi rotations. Eigenpairs come back in ascending order.
pub fn spectral(h: &CMat) -> Result<Vec<Eigenpair>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows,
            got: h.cols,
        });
    }
    let n = h.rows;
    if n > MAX_SPECTRAL_DIM {
        return Err(Error::TooLarge {
            dim: n,
            max: MAX_SPECTRAL_DIM,
        });
    }
    let deviation = h.hermitian_deviation();
    if deviation > tolerances().hermitian {
        return Err(Error::NotHermitian { deviation });
    }

    let (values, vectors) = jacobi_eigen(h);
    let mut pairs: Vec<Eigenpair> = values
        .into_iter()
        .enumerate()
        .map(|(j, value)| Eigenpair {
            value,
            vector: vectors.column(j),
        })
        .collect();
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));

    let gap = tolerances().degenerate_gap;
    for w in pairs.windows(2) {
        if w[1].value - w[0].value < gap {
            return Err(Error::Degenerate {
                lower: w[0].value,
                upper: w[1].value,
                gap,
            });
        }
    }
    Ok(pairs)
}

/// Returns (eigenvalues, eigenvector columns) in rotation order.
fn jacobi_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    const MAX_SWEEPS: usize = 100;
    let n = h.rows;
    let mut a = h.clone();
    // symmetrize away the sub-tolerance anti-Hermitian part
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMat::identity(n);
    let scale = a
        .data
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // G = diag(1, e^{-i phi}) * real rotation makes the (p,q)
                // element real before the classic symmetric update.
                let phase = Complex64::from_polar(1.0, -apq.arg());
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let g00 = Complex64::new(c, 0.0);
                let g01 = Complex64::new(s, 0.0);
                let g10 = phase * (-s);
                let g11 = phase * c;

                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * g00 + akq * g10;
                    a[(k, q)] = akp * g01 + akq * g11;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
                    a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * g00 + vkq * g10;
                    v[(k, q)] = vkp * g01 + vkq * g11;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// A unit vector up to global phase.
///
/// The stored representative has its first significant entry real and
/// positive, which fixes the gauge for hashing and display.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CVec", into = "CVec")]
pub struct Ray(CVec);

/// Entries below this modulus are skipped when fixing the canonical phase.
const PHASE_PIVOT_FLOOR: f64 = 1e-7;

impl Ray {
    /// Normalizes `v` and fixes its phase.
    pub fn new(v: &CVec) -> Result<Self> {
        let u = v.normalized()?;
        let pivot =
            u.0.iter()
                .find(|z| z.norm() > PHASE_PIVOT_FLOOR)
                .copied()
                .ok_or(Error::ZeroVector)?;
        let phase = Complex64::from_polar(1.0, -pivot.arg());
        Ok(Self(u.scale(phase)))
    }

    /// Like [`Ray::new`] but rejects vectors that are not already unit.
    pub fn from_unit(v: &CVec) -> Result<Self> {
        v.require_unit()?;
        Self::new(v)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self(CVec::basis(dim, index))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn vector(&self) -> &CVec {
        &self.0
    }

    /// |⟨self|other⟩|; panics on dimension mismatch.
    pub fn fidelity_amplitude(&self, other: &Ray) -> f64 {
        assert_eq!(self.dim(), other.dim(), "ray dimension mismatch");
        inner_unchecked(&self.0, &other.0).norm()
    }

    /// Rounded canonical entries; equal rays share a key except when an
    /// entry sits on a rounding boundary.
    pub fn hash_key(&self) -> Vec<(i64, i64)> {
        let grid = tolerances().ray_hash_grid;
        self.0
             .0
            .iter()
            .map(|z| ((z.re / grid).round() as i64, (z.im / grid).round() as i64))
            .collect()
    }
}

impl PartialEq for Ray {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.fidelity_amplitude(other) >= 1.0 - tolerances().ray_equality
    }
}

impl TryFrom<CVec> for Ray {
    type Error = Error;

    fn try_from(v: CVec) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<Ray> for CVec {
    fn from(r: Ray) -> Self {
        r.0
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.0 .0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

/// Map keyed by [`Ray`], hashed on rounded canonical entries with exact ray
/// equality resolving collisions.
#[derive(Debug, Clone)]
pub struct RayMap<V> {
    buckets: HashMap<Vec<(i64, i64)>, Vec<usize>>,
    entries: Vec<(Ray, V)>,
}

impl<V> Default for RayMap<V> {
    fn default() -> Self {
        Self {
            buckets: HashMap::new(),
            entries: Vec::new(),
        }
    }
}

impl<V> RayMap<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn position(&self, ray: &Ray) -> Option<usize> {
        if let Some(ids) = self.buckets.get(&ray.hash_key()) {
            if let Some(&i) = ids.iter().find(|&&i| self.entries[i].0 == *ray) {
                return Some(i);
            }
        }
        // rounding-boundary miss
        self.entries.iter().position(|(r, _)| r == ray)
    }

    /// Inserts or replaces; returns the previous value.
    pub fn insert(&mut self, ray: Ray, value: V) -> Option<V> {
        if let Some(i) = self.position(&ray) {
            return Some(std::mem::replace(&mut self.entries[i].1, value));
        }
        self.buckets
            .entry(ray.hash_key())
            .or_default()
            .push(self.entries.len());
        self.entries.push((ray, value));
        None
    }

    pub fn get(&self, ray: &Ray) -> Option<&V> {
        self.position(ray).map(|i| &self.entries[i].1)
    }

    /// Index of `ray` in insertion order.
    pub fn index_of(&self, ray: &Ray) -> Option<usize> {
        self.position(ray)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ray, &V)> {
        self.entries.iter().map(|(r, v)| (r, v))
    }
}

impl<V> FromIterator<(Ray, V)> for RayMap<V> {
    fn from_iter<I: IntoIterator<Item = (Ray, V)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (r, v) in iter {
            m.insert(r, v);
        }
        m
    }
}
