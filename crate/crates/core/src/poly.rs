//! Multivariate polynomials and differential forms with polynomial
//! coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::{
    basis, binomial, check_dim, rank, wedge_basis, FormValue, IndexTuple, MAX_DIM,
};
use crate::geometry::StarDomain;
use crate::quadrature::NodeSet;

/// Exponent multi-index `α`; entries past the ambient dimension stay zero.
pub type Exponent = [u8; MAX_DIM];

/// Terms with smaller absolute coefficient are dropped on normalization.
pub const DROP_THRESHOLD: f64 = 1e-14;

pub fn exponent_degree(a: &Exponent) -> usize {
    a.iter().map(|&k| k as usize).sum()
}

/// All exponents in `n` variables with total degree at most `max_degree`,
/// graded by degree and lexicographic within a degree.
pub fn monomials(n: usize, max_degree: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut cur = [0u8; MAX_DIM];
        fill_degree(n, 0, d, &mut cur, &mut out);
    }
    out
}

fn fill_degree(n: usize, i: usize, left: usize, cur: &mut Exponent, out: &mut Vec<Exponent>) {
    if i + 1 == n {
        cur[i] = left as u8;
        out.push(*cur);
        cur[i] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[i] = k as u8;
        fill_degree(n, i + 1, left - k, cur, out);
    }
    cur[i] = 0;
}

/// Table of `x_i^k` for `k ≤ max_degree`.
pub(crate) struct Powers {
    n: usize,
    stride: usize,
    table: Vec<f64>,
}

impl Powers {
    pub(crate) fn new(x: &[f64], max_degree: usize) -> Self {
        let stride = max_degree + 1;
        let mut table = vec![1.0; x.len() * stride];
        for (i, &xi) in x.iter().enumerate() {
            for k in 1..stride {
                table[i * stride + k] = table[i * stride + k - 1] * xi;
            }
        }
        Powers {
            n: x.len(),
            stride,
            table,
        }
    }

    #[inline]
    pub(crate) fn monomial(&self, a: &Exponent) -> f64 {
        let mut p = 1.0;
        for (i, &ai) in a.iter().enumerate().take(self.n) {
            if ai != 0 {
                p *= self.table[i * self.stride + ai as usize];
            }
        }
        p
    }
}

/// Polynomial in `n` real variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    n: usize,
    /// Sorted by exponent, no duplicate exponents, no tiny coefficients.
    terms: Vec<(Exponent, f64)>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly {
            n,
            terms: Vec::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, [0; MAX_DIM], c)
    }

    pub fn monomial(n: usize, exponent: Exponent, c: f64) -> Self {
        Self::from_terms(n, [(exponent, c)])
    }

    /// The coordinate function `x_i` (1-based).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut a = [0; MAX_DIM];
        a[i - 1] = 1;
        Self::monomial(n, a, 1.0)
    }

    /// Sums the given terms, merging equal exponents.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Exponent, f64)>) -> Self {
        let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
        for (a, c) in terms {
            debug_assert!(a[n..].iter().all(|&k| k == 0));
            *acc.entry(a).or_insert(0.0) += c;
        }
        Self::from_map(n, acc)
    }

    fn from_map(n: usize, acc: BTreeMap<Exponent, f64>) -> Self {
        MultiPoly {
            n,
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.abs() >= DROP_THRESHOLD)
                .collect(),
        }
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Exponent, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.iter().map(|(a, _)| exponent_degree(a)).max()
    }

    pub fn coeff(&self, a: &Exponent) -> f64 {
        self.terms
            .binary_search_by(|(b, _)| b.cmp(a))
            .map(|k| self.terms[k].1)
            .unwrap_or(0.0)
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.axpy(-1.0, other)
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &MultiPoly) -> MultiPoly {
        Self::from_terms(
            self.n,
            self.terms
                .iter()
                .copied()
                .chain(other.terms.iter().map(|&(a, b)| (a, c * b))),
        )
    }

    pub fn scale(&self, c: f64) -> MultiPoly {
        Self::from_terms(self.n, self.terms.iter().map(|&(a, b)| (a, c * b)))
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut e = [0u8; MAX_DIM];
                for k in 0..MAX_DIM {
                    e[k] = a[k] + b[k];
                }
                *acc.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        Self::from_map(self.n, acc)
    }

    /// `∂/∂x_j` (1-based `j`).
    pub fn derivative(&self, j: usize) -> MultiPoly {
        let k = j - 1;
        Self::from_terms(
            self.n,
            self.terms.iter().filter(|(a, _)| a[k] > 0).map(|&(a, c)| {
                let mut b = a;
                b[k] -= 1;
                (b, c * a[k] as f64)
            }),
        )
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let p = Powers::new(x, self.degree().unwrap_or(0));
        self.eval_with(&p)
    }

    pub(crate) fn eval_with(&self, p: &Powers) -> f64 {
        self.terms.iter().map(|(a, c)| c * p.monomial(a)).sum()
    }
}

/// Differential ℓ-form on ℝⁿ with polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    n: usize,
    degree: usize,
    /// One polynomial per basis tuple, in [`basis`] order.
    comps: Vec<MultiPoly>,
}

impl PolyForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        assert!(n <= MAX_DIM && degree <= n);
        PolyForm {
            n,
            degree,
            comps: vec![MultiPoly::zero(n); binomial(n, degree)],
        }
    }

    /// The 0-form with coefficient `f`.
    pub fn scalar(f: MultiPoly) -> Self {
        PolyForm {
            n: f.vars(),
            degree: 0,
            comps: vec![f],
        }
    }

    /// `f dx_I`.
    pub fn monomial_form(n: usize, tuple: IndexTuple, f: MultiPoly) -> Self {
        let mut u = PolyForm::zero(n, tuple.len());
        u.comps[rank(n, tuple)] = f;
        u
    }

    pub fn from_components(
        n: usize,
        degree: usize,
        comps: Vec<(IndexTuple, MultiPoly)>,
    ) -> Result<Self> {
        let mut u = PolyForm::zero(n, degree);
        for (t, f) in comps {
            if t.len() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: t.len(),
                });
            }
            let k = rank(n, t);
            u.comps[k] = u.comps[k].add(&f);
        }
        Ok(u)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient polynomials in [`basis`] order.
    pub fn components(&self) -> &[MultiPoly] {
        &self.comps
    }

    pub fn component(&self, t: IndexTuple) -> &MultiPoly {
        &self.comps[rank(self.n, t)]
    }

    /// Nonzero components with their tuples.
    pub fn terms(&self) -> impl Iterator<Item = (IndexTuple, &MultiPoly)> {
        basis(self.n, self.degree)
            .iter()
            .copied()
            .zip(&self.comps)
            .filter(|(_, f)| !f.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(MultiPoly::is_zero)
    }

    /// Largest total degree over all coefficients, `None` for the zero form.
    pub fn poly_degree(&self) -> Option<usize> {
        self.comps.iter().filter_map(MultiPoly::degree).max()
    }

    /// Largest absolute coefficient over all terms.
    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|f| f.terms().iter().map(|(_, c)| c.abs()))
            .fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &PolyForm, c: f64) -> PolyForm {
        assert_eq!((self.n, self.degree), (other.n, other.degree));
        PolyForm {
            n: self.n,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.axpy(c, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &PolyForm) -> PolyForm {
        self.zip_with(other, 1.0)
    }

    pub fn sub(&self, other: &PolyForm) -> PolyForm {
        self.zip_with(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> PolyForm {
        self.map(|f| f.scale(c))
    }

    /// Product with a scalar polynomial.
    pub fn mul_poly(&self, f: &MultiPoly) -> PolyForm {
        self.map(|g| g.mul(f))
    }

    /// Componentwise `∂/∂x_j`.
    pub fn partial(&self, j: usize) -> PolyForm {
        self.map(|f| f.derivative(j))
    }

    fn map(&self, f: impl Fn(&MultiPoly) -> MultiPoly) -> PolyForm {
        PolyForm {
            n: self.n,
            degree: self.degree,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        assert_eq!(self.n, other.n);
        let degree = self.degree + other.degree;
        if degree > self.n {
            return Err(Error::DegreeOverflow { degree, n: self.n });
        }
        let mut out = PolyForm::zero(self.n, degree);
        for (ta, fa) in self.terms() {
            for (tb, fb) in other.terms() {
                if let Some((sign, bits)) = wedge_basis(ta.bits(), tb.bits()) {
                    let k = rank(self.n, IndexTuple::from_bits(bits));
                    out.comps[k] = out.comps[k].axpy(sign, &fa.mul(fb));
                }
            }
        }
        Ok(out)
    }

    /// Exact exterior derivative `du = Σ_j ∂_j u_I dx_j ∧ dx_I`.
    pub fn exterior_derivative(&self) -> Result<PolyForm> {
        if self.degree >= self.n {
            return Err(Error::TopDegreeDerivative);
        }
        let n = self.n;
        let mut acc: Vec<BTreeMap<Exponent, f64>> =
            vec![BTreeMap::new(); binomial(n, self.degree + 1)];
        for (t, f) in self.terms() {
            for j in 1..=n {
                let Some((sign, bits)) = wedge_basis(1 << (j - 1), t.bits()) else {
                    continue;
                };
                let slot = &mut acc[rank(n, IndexTuple::from_bits(bits))];
                for (a, c) in f.derivative(j).terms() {
                    *slot.entry(*a).or_insert(0.0) += sign * c;
                }
            }
        }
        Ok(PolyForm {
            n,
            degree: self.degree + 1,
            comps: acc.into_iter().map(|m| MultiPoly::from_map(n, m)).collect(),
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> FormValue {
        let p = Powers::new(x, self.poly_degree().unwrap_or(0));
        self.eval_with(&p)
    }

    pub(crate) fn eval_with(&self, p: &Powers) -> FormValue {
        FormValue::from_coeffs(
            self.n,
            self.degree,
            self.comps.iter().map(|f| f.eval_with(p)).collect(),
        )
    }

    /// Random form whose coefficients are all monomials of degree at most
    /// `poly_degree`, each weighted uniformly in `[-1, 1]`.
    pub fn random(n: usize, degree: usize, poly_degree: usize, seed: u64) -> Result<PolyForm> {
        check_dim(n)?;
        if degree > n {
            return Err(Error::DegreeOverflow { degree, n });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let monos = monomials(n, poly_degree);
        let comps = (0..binomial(n, degree))
            .map(|_| {
                MultiPoly::from_terms(n, monos.iter().map(|&a| (a, rng.random_range(-1.0..=1.0))))
            })
            .collect();
        Ok(PolyForm { n, degree, comps })
    }

    /// The (ℓ-1)-form whose derivative is [`PolyForm::random_closed`] for the
    /// same arguments.
    pub fn random_potential(
        n: usize,
        degree: usize,
        poly_degree: usize,
        seed: u64,
    ) -> Result<PolyForm> {
        if degree == 0 {
            return Err(Error::ZeroDegreeClosedForm);
        }
        PolyForm::random(n, degree - 1, poly_degree + 1, seed)
    }

    /// `d w` for a random (ℓ-1)-form `w` of polynomial degree `poly_degree + 1`.
    pub fn random_closed(
        n: usize,
        degree: usize,
        poly_degree: usize,
        seed: u64,
    ) -> Result<PolyForm> {
        PolyForm::random_potential(n, degree, poly_degree, seed)?.exterior_derivative()
    }

    /// Plain-text dump, one term per line: `ℓ; I=(i1,…); a=(a1,…,an); coeff`,
    /// preceded by a `# n=<n> degree=<ℓ>` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# n={} degree={}\n", self.n, self.degree);
        for (t, f) in self.terms() {
            let idx: Vec<String> = t.indices().map(|i| i.to_string()).collect();
            for (a, c) in f.terms() {
                let exps: Vec<String> = a[..self.n].iter().map(|k| k.to_string()).collect();
                let _ = writeln!(
                    s,
                    "{}; I=({}); a=({}); {:e}",
                    self.degree,
                    idx.join(","),
                    exps.join(","),
                    c
                );
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PolyForm> {
        let parse_err = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let mut n = None;
        let mut degree = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("degree", v)) => degree = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (n, degree) = n
            .zip(degree)
            .ok_or_else(|| parse_err(1, "header needs n and degree"))?;
        check_dim(n)?;
        if degree > n {
            return Err(parse_err(1, "degree exceeds n"));
        }
        let mut terms = Vec::new();
        for (k, line) in lines {
            let no = k + 1;
            let parts: Vec<&str> = line.split(';').map(str::trim).collect();
            let [l, idx, exps, coeff] = parts[..] else {
                return Err(parse_err(no, "expected four ';'-separated fields"));
            };
            if l.parse::<usize>().ok() != Some(degree) {
                return Err(parse_err(no, "term degree disagrees with header"));
            }
            let list = |field: &str, key: &str| -> Result<Vec<usize>> {
                let inner = field
                    .strip_prefix(key)
                    .and_then(|r| r.strip_prefix("=("))
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| parse_err(no, "malformed list"))?;
                if inner.trim().is_empty() {
                    return Ok(Vec::new());
                }
                inner
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| parse_err(no, "bad integer"))
                    })
                    .collect()
            };
            let tuple = IndexTuple::new(&list(idx, "I")?, n)?;
            let e = list(exps, "a")?;
            if e.len() != n || e.iter().any(|&v| v > u8::MAX as usize) {
                return Err(parse_err(no, "exponent length must equal n"));
            }
            let mut a = [0u8; MAX_DIM];
            for (slot, v) in a.iter_mut().zip(e) {
                *slot = v as u8;
            }
            let c: f64 = coeff
                .parse()
                .map_err(|_| parse_err(no, "bad coefficient"))?;
            terms.push((tuple, MultiPoly::monomial(n, a, c)));
        }
        PolyForm::from_components(n, degree, terms)
    }
}

impl PolyForm {
    /// `|u|_{H^k(Ω)}` for `k ≤ 2`: the L² norm of all order-`k` partial
    /// derivatives `∂^β u_I`, `|β| = k`, by grid quadrature at `level`.
    pub fn sobolev_seminorm(&self, k: usize, domain: &StarDomain, level: usize) -> Result<f64> {
        self.sobolev_seminorm_on(k, &domain.quadrature_nodes(level))
    }

    /// [`PolyForm::sobolev_seminorm`] over a given node set.
    pub fn sobolev_seminorm_on(&self, k: usize, nodes: &NodeSet) -> Result<f64> {
        if k > 2 {
            return Err(Error::InvalidParameter(format!(
                "seminorm order {k} is not supported"
            )));
        }
        let mut parts = vec![self.clone()];
        for _ in 0..k {
            parts = parts
                .iter()
                .flat_map(|p| (1..=self.n).map(move |j| (j, p)))
                .map(|(j, p)| p.partial(j))
                .collect();
        }
        // Mixed second derivatives appear twice in the loop above; the
        // multi-index sum counts each ∂^β once.
        if k == 2 {
            let n = self.n;
            parts = (0..n)
                .flat_map(|a| (a..n).map(move |b| (a, b)))
                .map(|(a, b)| parts[a * n + b].clone())
                .collect();
        }
        if nodes.is_empty() {
            return Err(Error::EmptyQuadrature);
        }
        let deg = self.poly_degree().unwrap_or(0);
        Ok(nodes
            .integrate(|x| {
                let p = Powers::new(x, deg);
                parts.iter().map(|f| f.eval_with(&p).norm().powi(2)).sum()
            })
            .sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::variable(n, i)
    }

    fn t(idx: &[usize], n: usize) -> IndexTuple {
        IndexTuple::new(idx, n).unwrap()
    }

    #[test]
    fn monomial_enumeration_counts() {
        for n in 1..=4 {
            for d in 0..5 {
                assert_eq!(monomials(n, d).len(), binomial(n + d, d));
            }
        }
        assert_eq!(
            monomials(2, 1),
            vec![[0; 6], [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]]
        );
    }

    #[test]
    fn derivative_examples() {
        let u = PolyForm::monomial_form(2, t(&[2], 2), x(2, 1));
        let du = u.exterior_derivative().unwrap();
        assert_eq!(
            du,
            PolyForm::monomial_form(2, t(&[1, 2], 2), MultiPoly::constant(2, 1.0))
        );

        let f = PolyForm::scalar(x(2, 1).mul(&x(2, 2)));
        let df = f.exterior_derivative().unwrap();
        assert_eq!(df.component(t(&[1], 2)), &x(2, 2));
        assert_eq!(df.component(t(&[2], 2)), &x(2, 1));

        let g = PolyForm::scalar(x(2, 1).mul(&x(2, 1)).mul(&x(2, 2)));
        let ddg = g
            .exterior_derivative()
            .unwrap()
            .exterior_derivative()
            .unwrap();
        assert!(ddg.is_zero());

        let top = PolyForm::zero(2, 2);
        assert_eq!(top.exterior_derivative(), Err(Error::TopDegreeDerivative));
    }

    #[test]
    fn evaluate_examples() {
        let u = PolyForm::monomial_form(2, t(&[2], 2), x(2, 1));
        assert_eq!(
            u.evaluate(&[3.0, 5.0]),
            FormValue::basis(2, t(&[2], 2), 3.0)
        );
        assert!(PolyForm::zero(3, 1).evaluate(&[1.0, 2.0, 3.0]).is_zero());
        let v = PolyForm::monomial_form(2, t(&[1], 2), x(2, 1).mul(&x(2, 1)));
        assert_eq!(
            v.evaluate(&[2.0, 7.0]),
            FormValue::basis(2, t(&[1], 2), 4.0)
        );
    }

    #[test]
    fn random_closed_forms() {
        for n in 2..=4 {
            for l in 1..n {
                let u = PolyForm::random_closed(n, l, 3, 17).unwrap();
                assert!(u.exterior_derivative().unwrap().is_zero());
                assert_eq!(u, PolyForm::random_closed(n, l, 3, 17).unwrap());
                assert_ne!(u, PolyForm::random_closed(n, l, 3, 18).unwrap());
            }
        }
        assert_eq!(
            PolyForm::random_closed(2, 0, 1, 0),
            Err(Error::ZeroDegreeClosedForm)
        );
    }

    #[test]
    fn random_closed_degree_zero_is_derivative_of_linear_potential() {
        let w = PolyForm::random_potential(2, 1, 0, 5).unwrap();
        assert_eq!(w.degree(), 0);
        assert_eq!(w.poly_degree(), Some(1));
        let u = PolyForm::random_closed(2, 1, 0, 5).unwrap();
        let f = &w.components()[0];
        let a = f.coeff(&[1, 0, 0, 0, 0, 0]);
        let b = f.coeff(&[0, 1, 0, 0, 0, 0]);
        assert_eq!(u.component(t(&[1], 2)), &MultiPoly::constant(2, a));
        assert_eq!(u.component(t(&[2], 2)), &MultiPoly::constant(2, b));
    }

    #[test]
    fn tiny_terms_are_dropped() {
        let f = MultiPoly::constant(2, 1.0).axpy(-1.0, &MultiPoly::constant(2, 1.0 + 1e-16));
        assert!(f.is_zero());
        assert_eq!(f.degree(), None);
    }

    #[test]
    fn seminorm_examples() {
        use std::f64::consts::PI;
        let disk = StarDomain::ball(&[0.0, 0.0], 1.0, 0.5).unwrap();
        let one = PolyForm::scalar(MultiPoly::constant(2, 1.0));
        assert!((one.sobolev_seminorm(0, &disk, 6).unwrap() - PI.sqrt()).abs() < 2e-3);
        assert_eq!(one.sobolev_seminorm(1, &disk, 3).unwrap(), 0.0);
        let u = PolyForm::monomial_form(2, t(&[2], 2), x(2, 1));
        assert!((u.sobolev_seminorm(1, &disk, 6).unwrap() - PI.sqrt()).abs() < 2e-3);
        // x₁x₂: only the mixed derivative survives, counted once.
        let m = PolyForm::scalar(x(2, 1).mul(&x(2, 2)));
        assert!((m.sobolev_seminorm(2, &disk, 6).unwrap() - PI.sqrt()).abs() < 2e-3);
        assert!(u.sobolev_seminorm(3, &disk, 2).is_err());
    }

    #[test]
    fn text_round_trip() {
        let u = PolyForm::random(3, 2, 2, 9).unwrap();
        let back = PolyForm::from_text(&u.to_text()).unwrap();
        assert_eq!(u, back);
        let s = PolyForm::scalar(MultiPoly::constant(2, 0.5));
        assert_eq!(PolyForm::from_text(&s.to_text()).unwrap(), s);
        assert!(PolyForm::from_text("# n=2 degree=1\n1; I=(3); a=(0,0); 1.0\n").is_err());
        assert!(PolyForm::from_text("# n=2 degree=1\n1; I=(1); a=(0); 1.0\n").is_err());
    }
}
