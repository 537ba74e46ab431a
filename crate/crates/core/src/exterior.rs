//! Finite-dimensional exterior algebra over ℝⁿ.
//!
//! A basis ℓ-covector `e^I` is named by an [`IndexTuple`], a strictly
//! increasing list of 1-based indices. Internally a tuple is a bitmask, which
//! makes the permutation signs below simple popcounts. Coefficient vectors are
//! dense, laid out in lexicographic order of the tuples.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest ambient dimension supported.
pub const MAX_DIM: usize = 6;

/// Strictly increasing tuple of indices in `1..=n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IndexTuple {
    bits: u8,
}

impl IndexTuple {
    /// The empty tuple, naming the basis 0-form `1`.
    pub const EMPTY: IndexTuple = IndexTuple { bits: 0 };

    /// Builds a tuple from 1-based indices, which must be strictly increasing
    /// and lie in `1..=n`.
    pub fn new(indices: &[usize], n: usize) -> Result<Self> {
        check_dim(n)?;
        let mut bits = 0u8;
        let mut prev = 0;
        for &i in indices {
            if i <= prev || i > n {
                return Err(Error::InvalidIndexTuple {
                    indices: indices.to_vec(),
                    n,
                });
            }
            bits |= 1 << (i - 1);
            prev = i;
        }
        Ok(IndexTuple { bits })
    }

    /// Single index `(i)`.
    pub fn single(i: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&i));
        IndexTuple { bits: 1 << (i - 1) }
    }

    pub(crate) fn from_bits(bits: u8) -> Self {
        IndexTuple { bits }
    }

    pub(crate) fn bits(self) -> u8 {
        self.bits
    }

    /// Number of entries ℓ.
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i >= 1 && self.bits & (1 << (i - 1)) != 0
    }

    /// Entries in increasing order, 1-based.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (1..=MAX_DIM).filter(move |&i| self.contains(i))
    }

    /// The `m`-th entry (1-based position).
    pub fn entry(self, m: usize) -> Option<usize> {
        self.indices().nth(m.checked_sub(1)?)
    }

    /// `Î_m`: the tuple with its `m`-th entry removed.
    pub fn suppress(self, m: usize) -> Option<Self> {
        let i = self.entry(m)?;
        Some(IndexTuple {
            bits: self.bits & !(1 << (i - 1)),
        })
    }

    /// `I^c` in `{1, …, n}`.
    pub fn complement(self, n: usize) -> Self {
        IndexTuple {
            bits: !self.bits & full_mask(n),
        }
    }

    /// Parity of the permutation `(I, I^c)` of `(1, …, n)`, as 0 or 1.
    pub fn sigma(self, n: usize) -> u32 {
        merge_inversions(self.bits, self.complement(n).bits) & 1
    }
}

impl fmt::Debug for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

fn full_mask(n: usize) -> u8 {
    ((1u16 << n) - 1) as u8
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// Number of pairs `(i, j)` with `i ∈ a`, `j ∈ b`, `i > j`. Concatenating `a`
/// then `b` and sorting takes exactly this many transpositions.
fn merge_inversions(a: u8, b: u8) -> u32 {
    let mut count = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        count += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    count
}

/// Sign and product mask of `e^a ∧ e^b`, or `None` when the tuples overlap.
pub(crate) fn wedge_basis(a: u8, b: u8) -> Option<(f64, u8)> {
    if a & b != 0 {
        return None;
    }
    let sign = if merge_inversions(a, b).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Some((sign, a | b))
}

struct BasisTable {
    /// `tuples[n][l]`: all ℓ-subsets of `{1..n}` in lexicographic order.
    tuples: Vec<Vec<Vec<IndexTuple>>>,
    /// `rank[n][bits]`: position of the tuple in its degree's list.
    rank: Vec<Vec<usize>>,
}

fn lex_key(t: IndexTuple) -> Vec<usize> {
    t.indices().collect()
}

fn table() -> &'static BasisTable {
    static TABLE: OnceLock<BasisTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut tuples = vec![Vec::new()];
        let mut rank = vec![Vec::new()];
        for n in 1..=MAX_DIM {
            let mut by_degree: Vec<Vec<IndexTuple>> = vec![Vec::new(); n + 1];
            for bits in 0..(1u16 << n) {
                let t = IndexTuple::from_bits(bits as u8);
                by_degree[t.len()].push(t);
            }
            let mut ranks = vec![0; 1 << n];
            for list in &mut by_degree {
                list.sort_by_key(|&t| lex_key(t));
                for (r, t) in list.iter().enumerate() {
                    ranks[t.bits as usize] = r;
                }
            }
            tuples.push(by_degree);
            rank.push(ranks);
        }
        BasisTable { tuples, rank }
    })
}

/// All basis tuples of degree `l` in dimension `n`, lexicographically ordered.
pub fn basis(n: usize, l: usize) -> &'static [IndexTuple] {
    &table().tuples[n][l]
}

pub(crate) fn rank(n: usize, t: IndexTuple) -> usize {
    table().rank[n][t.bits as usize]
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// An element of Λ^ℓ(ℝⁿ) with dense coefficients.
#[derive(Clone, PartialEq)]
pub struct FormValue {
    n: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl FormValue {
    pub fn zero(n: usize, degree: usize) -> Self {
        assert!(
            n <= MAX_DIM && degree <= n,
            "degree {degree} invalid in dimension {n}"
        );
        FormValue {
            n,
            degree,
            coeffs: vec![0.0; binomial(n, degree)],
        }
    }

    /// The scalar `c` viewed as a 0-form.
    pub fn scalar(n: usize, c: f64) -> Self {
        FormValue {
            n,
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// `c · e^I`.
    pub fn basis(n: usize, tuple: IndexTuple, c: f64) -> Self {
        let mut f = FormValue::zero(n, tuple.len());
        f.coeffs[rank(n, tuple)] = c;
        f
    }

    /// Builds a form from `(tuple, coefficient)` pairs; repeated tuples add up.
    pub fn from_terms(n: usize, degree: usize, terms: &[(IndexTuple, f64)]) -> Result<Self> {
        let mut f = FormValue::zero(n, degree);
        for &(t, c) in terms {
            if t.len() != degree || (t.bits() & !full_mask(n)) != 0 {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: t.len(),
                });
            }
            f.coeffs[rank(n, t)] += c;
        }
        Ok(f)
    }

    /// Wraps a coefficient vector laid out in [`basis`] order.
    pub fn from_coeffs(n: usize, degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), binomial(n, degree));
        FormValue { n, degree, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, t: IndexTuple) -> f64 {
        if t.len() != self.degree {
            return 0.0;
        }
        self.coeffs[rank(self.n, t)]
    }

    pub fn set(&mut self, t: IndexTuple, c: f64) {
        assert_eq!(t.len(), self.degree);
        self.coeffs[rank(self.n, t)] = c;
    }

    /// Nonzero `(tuple, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (IndexTuple, f64)> + '_ {
        basis(self.n, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&t, &c)| (t, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &FormValue) {
        assert_eq!((self.n, self.degree), (other.n, other.degree));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn scaled(&self, c: f64) -> FormValue {
        FormValue {
            n: self.n,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// `self ∧ other`.
    pub fn wedge(&self, other: &FormValue) -> Result<FormValue> {
        assert_eq!(self.n, other.n);
        let degree = self.degree + other.degree;
        if degree > self.n {
            return Err(Error::DegreeOverflow { degree, n: self.n });
        }
        let mut out = FormValue::zero(self.n, degree);
        for (ta, ca) in self.terms() {
            for (tb, cb) in other.terms() {
                if let Some((sign, bits)) = wedge_basis(ta.bits(), tb.bits()) {
                    out.coeffs[rank(self.n, IndexTuple::from_bits(bits))] += sign * ca * cb;
                }
            }
        }
        Ok(out)
    }

    /// Hodge star with respect to the Euclidean metric and standard orientation.
    pub fn hodge_star(&self) -> FormValue {
        let n = self.n;
        let mut out = FormValue::zero(n, n - self.degree);
        for (t, c) in self.terms() {
            let sign = if t.sigma(n) == 0 { 1.0 } else { -1.0 };
            out.coeffs[rank(n, t.complement(n))] += sign * c;
        }
        out
    }

    /// Interior product `z ⌟ self`.
    pub fn contract(&self, z: &[f64]) -> Result<FormValue> {
        if self.degree == 0 {
            return Err(Error::ContractScalar);
        }
        let mut out = FormValue::zero(self.n, self.degree - 1);
        self.contract_into(z, 1.0, &mut out);
        Ok(out)
    }

    /// `out += c · (z ⌟ self)` without allocating. Requires `self.degree ≥ 1`.
    pub(crate) fn contract_into(&self, z: &[f64], c: f64, out: &mut FormValue) {
        debug_assert!(self.degree >= 1 && out.degree + 1 == self.degree);
        let n = self.n;
        for (k, &t) in basis(n, self.degree).iter().enumerate() {
            let a = self.coeffs[k];
            if a == 0.0 {
                continue;
            }
            let mut sign = c * a;
            for i in t.indices() {
                let rest = IndexTuple::from_bits(t.bits() & !(1 << (i - 1)));
                out.coeffs[rank(n, rest)] += sign * z[i - 1];
                sign = -sign;
            }
        }
    }

    /// Euclidean inner product in the orthonormal basis `{e^I}`.
    pub fn inner_product(&self, other: &FormValue) -> Result<f64> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for FormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<_> = self.terms().collect();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (t, c)) in terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·e{t:?}")?;
        }
        Ok(())
    }
}

impl Add for &FormValue {
    type Output = FormValue;
    fn add(self, rhs: &FormValue) -> FormValue {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &FormValue {
    type Output = FormValue;
    fn sub(self, rhs: &FormValue) -> FormValue {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl AddAssign<&FormValue> for FormValue {
    fn add_assign(&mut self, rhs: &FormValue) {
        self.axpy(1.0, rhs);
    }
}

impl Neg for &FormValue {
    type Output = FormValue;
    fn neg(self) -> FormValue {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &FormValue {
    type Output = FormValue;
    fn mul(self, c: f64) -> FormValue {
        self.scaled(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, idx: &[usize]) -> FormValue {
        FormValue::basis(n, IndexTuple::new(idx, n).unwrap(), 1.0)
    }

    #[test]
    fn tuple_validation() {
        assert!(IndexTuple::new(&[1, 3], 3).is_ok());
        assert!(IndexTuple::new(&[2, 1], 3).is_err());
        assert!(IndexTuple::new(&[1, 1], 3).is_err());
        assert!(IndexTuple::new(&[4], 3).is_err());
        assert!(IndexTuple::new(&[0], 3).is_err());
        let t = IndexTuple::new(&[1, 3, 4], 4).unwrap();
        assert_eq!(t.suppress(2).unwrap(), IndexTuple::new(&[1, 4], 4).unwrap());
        assert_eq!(t.complement(4), IndexTuple::new(&[2], 4).unwrap());
    }

    #[test]
    fn lexicographic_basis_order() {
        let b: Vec<Vec<usize>> = basis(4, 2).iter().map(|t| t.indices().collect()).collect();
        assert_eq!(
            b,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        for n in 1..=MAX_DIM {
            for l in 0..=n {
                assert_eq!(basis(n, l).len(), binomial(n, l));
            }
        }
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(e(2, &[1]).wedge(&e(2, &[2])).unwrap(), e(2, &[1, 2]));
        assert!(e(2, &[1]).wedge(&e(2, &[1])).unwrap().is_zero());
        let a = &e(2, &[1]) + &e(2, &[2]);
        assert_eq!(a.wedge(&e(2, &[2])).unwrap(), e(2, &[1, 2]));
        assert_eq!(e(3, &[3]).wedge(&e(3, &[1, 2])).unwrap(), e(3, &[1, 2, 3]));
        assert_eq!(
            e(3, &[2]).wedge(&e(3, &[1, 3])).unwrap(),
            -&e(3, &[1, 2, 3])
        );
        assert!(matches!(
            e(2, &[1, 2]).wedge(&e(2, &[1])),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn hodge_examples() {
        assert_eq!(e(3, &[1]).hodge_star(), e(3, &[2, 3]));
        assert_eq!(e(3, &[1, 2]).hodge_star(), e(3, &[3]));
        assert_eq!(e(2, &[2]).hodge_star(), -&e(2, &[1]));
        assert_eq!(e(3, &[2]).hodge_star(), -&e(3, &[1, 3]));
    }

    #[test]
    fn contraction_examples() {
        let c = e(2, &[1, 2]).contract(&[1.0, 2.0]).unwrap();
        assert_eq!(c, &e(2, &[2]) - &e(2, &[1]).scaled(2.0));
        let s = e(3, &[1]).contract(&[3.0, 0.0, 0.0]).unwrap();
        assert_eq!(s, FormValue::scalar(3, 3.0));
        let z = [0.3, -1.7];
        let twice = e(2, &[1, 2]).contract(&z).unwrap().contract(&z).unwrap();
        assert_eq!(twice.max_abs(), 0.0);
        assert!(matches!(
            FormValue::scalar(2, 1.0).contract(&z),
            Err(Error::ContractScalar)
        ));
    }

    #[test]
    fn inner_product_examples() {
        let v = e(3, &[1, 2]);
        assert_eq!(v.inner_product(&v).unwrap(), 1.0);
        assert_eq!(v.inner_product(&e(3, &[1, 3])).unwrap(), 0.0);
        let a = &e(2, &[1]).scaled(2.0) + &e(2, &[2]);
        assert_eq!(a.inner_product(&a).unwrap(), 5.0);
        assert!(v.inner_product(&e(3, &[1])).is_err());
    }

    #[test]
    fn inner_product_matches_wedge_with_star() {
        for n in 1..=MAX_DIM {
            for l in 0..=n {
                for &i in basis(n, l) {
                    for &j in basis(n, l) {
                        let u = FormValue::basis(n, i, 1.0);
                        let v = FormValue::basis(n, j, 1.0);
                        let top = u.wedge(&v.hodge_star()).unwrap();
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert_eq!(top.coeffs()[0], expected);
                    }
                }
            }
        }
    }

    #[test]
    fn double_star_on_basis() {
        for n in 1..=MAX_DIM {
            for l in 0..=n {
                let sign = if (l * (n - l)) % 2 == 0 { 1.0 } else { -1.0 };
                for &t in basis(n, l) {
                    let a = FormValue::basis(n, t, 1.0);
                    assert_eq!(a.hodge_star().hodge_star(), a.scaled(sign));
                }
            }
        }
    }
}
