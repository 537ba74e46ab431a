//! The regularized Poincaré operator `𝙿_ℓ` in its nonsingular form
//!
//! `𝙿_ℓ u(x) = ∫ θ(z) ∫₀¹ s^{ℓ−1} (x − z) ⌟ u(sx + (1−s)z) ds dz`
//!
//! and the scalar operators `P_i^k f(x) = ∫₀¹ s^{k−1} ∫ φ_i(z) f(sx + (1−s)z) dz ds`
//! with `φ₁ = θ`, `φ₂ = z_m θ`. On polynomials everything is computed exactly
//! from the mollifier's moment table: expanding `(sx + (1−s)z)^α` binomially
//! leaves Beta integrals in `s` and moments in `z`.

use crate::error::{Error, Result};
use crate::exterior::{FormValue, IndexTuple, MAX_DIM};
use crate::field::FormField;
use crate::mollifier::{Mollifier, Variant};
use crate::poly::{exponent_degree, Exponent, MultiPoly, PolyForm};
use crate::quadrature::{gauss_legendre, NodeSet};

/// Default Gauss order for the `s` integral on the quadrature path.
pub const DEFAULT_S_ORDER: usize = 16;

/// `∫₀¹ s^{p−1}(1−s)^{q−1} ds` for positive integers.
fn beta(p: usize, q: usize) -> f64 {
    // (p−1)!(q−1)!/(p+q−1)!, accumulated as a product of ratios.
    let (small, large) = if p < q { (p, q) } else { (q, p) };
    let mut v = 1.0 / large as f64;
    for i in 1..small {
        v *= i as f64 / (large + i) as f64;
    }
    v
}

/// Calls `visit(a, C(α, a))` for every `a ≤ α` componentwise.
fn for_each_sub_exponent(n: usize, alpha: &Exponent, mut visit: impl FnMut(&Exponent, f64)) {
    let mut a = [0u8; MAX_DIM];
    loop {
        let mut c = 1.0;
        for i in 0..n {
            c *= crate::exterior::binomial(alpha[i] as usize, a[i] as usize) as f64;
        }
        visit(&a, c);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            if a[i] < alpha[i] {
                a[i] += 1;
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

fn unit(m: usize) -> Exponent {
    let mut e = [0u8; MAX_DIM];
    e[m - 1] = 1;
    e
}

fn add_exp(a: &Exponent, b: &Exponent) -> Exponent {
    let mut c = *a;
    for (ci, bi) in c.iter_mut().zip(b) {
        *ci += bi;
    }
    c
}

fn sub_exp(a: &Exponent, b: &Exponent) -> Exponent {
    let mut c = *a;
    for (ci, bi) in c.iter_mut().zip(b) {
        *ci -= bi;
    }
    c
}

/// The Poincaré operator attached to one mollifier.
#[derive(Clone, Debug)]
pub struct PoincareConfig {
    mollifier: Mollifier,
    s_order: usize,
    nodes: NodeSet,
}

impl PoincareConfig {
    pub fn new(mollifier: Mollifier) -> Self {
        let nodes = mollifier.weighted_nodes();
        PoincareConfig {
            mollifier,
            s_order: DEFAULT_S_ORDER,
            nodes,
        }
    }

    /// Gauss order of the `s` integral on the quadrature path.
    pub fn with_s_order(mut self, order: usize) -> Self {
        self.s_order = order.max(1);
        self
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn dim(&self) -> usize {
        self.mollifier.dim()
    }

    pub fn s_order(&self) -> usize {
        self.s_order
    }

    fn moment(&self, alpha: &Exponent) -> f64 {
        self.mollifier
            .moment(alpha)
            .expect("moment degree checked by caller")
    }

    fn require_moments(&self, needed: usize) -> Result<()> {
        let available = self.mollifier.max_degree();
        if needed > available {
            return Err(Error::MomentTableTooSmall { needed, available });
        }
        Ok(())
    }

    fn check_poly(&self, f: &MultiPoly) -> Result<()> {
        if f.vars() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.vars(),
            });
        }
        Ok(())
    }

    /// `∫₀¹ s^{k−1} ∫ θ(z) z^shift f(sx+(1−s)z) dz ds` as a polynomial in `x`.
    fn averaged(
        &self,
        k: usize,
        shift: &Exponent,
        f: &MultiPoly,
        out: &mut Vec<(Exponent, f64)>,
        scale: f64,
    ) {
        let n = self.dim();
        for (alpha, c) in f.terms() {
            let d = exponent_degree(alpha);
            for_each_sub_exponent(n, alpha, |a, binom| {
                let da = exponent_degree(a);
                let s_int = beta(k + da, d - da + 1);
                let z_int = self.moment(&add_exp(&sub_exp(alpha, a), shift));
                out.push((*a, scale * c * binom * s_int * z_int));
            });
        }
    }

    /// `P_i^k f` on the moment-exact path.
    pub fn component_poly(&self, variant: Variant, k: usize, f: &MultiPoly) -> Result<MultiPoly> {
        self.check_poly(f)?;
        if k == 0 {
            return Err(Error::InvalidParameter(
                "component order k must be at least 1".into(),
            ));
        }
        let d = f.degree().unwrap_or(0);
        let shift = match variant {
            Variant::Theta => [0; MAX_DIM],
            Variant::ZTheta(m) => {
                check_index(m, self.dim())?;
                unit(m)
            }
        };
        self.require_moments(d + exponent_degree(&shift))?;
        let mut terms = Vec::new();
        self.averaged(k, &shift, f, &mut terms, 1.0);
        Ok(MultiPoly::from_terms(self.dim(), terms))
    }

    /// The scalar operator `P_ℓ f(x) = ∫ θ(z)(x_m − z_m) ∫₀¹ s^{ℓ−1} f(sx+(1−s)z) ds dz`,
    /// moment-exact.
    pub fn scalar_poly(&self, l: usize, m: usize, f: &MultiPoly) -> Result<MultiPoly> {
        self.check_poly(f)?;
        check_index(m, self.dim())?;
        self.require_moments(f.degree().unwrap_or(0) + 1)?;
        let n = self.dim();
        let em = unit(m);
        let mut lower = Vec::new();
        self.averaged(l, &[0; MAX_DIM], f, &mut lower, 1.0);
        let mut terms: Vec<(Exponent, f64)> = lower
            .into_iter()
            .map(|(a, c)| (add_exp(&a, &em), c))
            .collect();
        self.averaged(l, &em, f, &mut terms, -1.0);
        Ok(MultiPoly::from_terms(n, terms))
    }

    /// `𝙿_ℓ u` for a polynomial ℓ-form, exact up to the moment table.
    pub fn apply_poly(&self, u: &PolyForm) -> Result<PolyForm> {
        let n = self.dim();
        if u.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.dim(),
            });
        }
        let l = u.degree();
        if l == 0 {
            return Err(Error::ContractScalar);
        }
        self.require_moments(u.poly_degree().unwrap_or(0) + 1)?;
        let mut comps: Vec<(IndexTuple, MultiPoly)> = Vec::new();
        for (t, f) in u.terms() {
            let mut sign = 1.0;
            for (pos, i) in t.indices().enumerate() {
                let rest = t.suppress(pos + 1).expect("position within tuple");
                comps.push((rest, self.scalar_poly(l, i, f)?.scale(sign)));
                sign = -sign;
            }
        }
        PolyForm::from_components(n, l - 1, comps)
    }

    /// `P_i^k f(x)` by Gauss quadrature in `s` and the θ-weighted ball nodes.
    pub fn component_quad(
        &self,
        variant: Variant,
        k: usize,
        f: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
    ) -> f64 {
        let n = self.dim();
        let rule = gauss_legendre(self.s_order);
        let mut y = vec![0.0; n];
        let mut total = 0.0;
        for (z, wz) in self.nodes.iter() {
            let phi = match variant {
                Variant::Theta => 1.0,
                Variant::ZTheta(m) => z[m - 1],
            };
            let mut inner = 0.0;
            for (s, ws) in rule.on(0.0, 1.0) {
                for i in 0..n {
                    y[i] = s * x[i] + (1.0 - s) * z[i];
                }
                inner += ws * s.powi(k as i32 - 1) * f(&y);
            }
            total += wz * phi * inner;
        }
        total
    }

    /// `P_ℓ f(x)` by quadrature, with the `(x_m − z_m)` factor inside.
    pub fn scalar_quad(&self, l: usize, m: usize, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
        let n = self.dim();
        let rule = gauss_legendre(self.s_order);
        let mut y = vec![0.0; n];
        let mut total = 0.0;
        for (z, wz) in self.nodes.iter() {
            let mut inner = 0.0;
            for (s, ws) in rule.on(0.0, 1.0) {
                for i in 0..n {
                    y[i] = s * x[i] + (1.0 - s) * z[i];
                }
                inner += ws * s.powi(l as i32 - 1) * f(&y);
            }
            total += wz * (x[m - 1] - z[m - 1]) * inner;
        }
        total
    }

    /// `𝙿_ℓ u(x)` for any evaluable form, by quadrature.
    pub fn apply_quad(&self, u: &dyn FormField, x: &[f64]) -> Result<FormValue> {
        let n = self.dim();
        if u.dim() != n || x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if u.dim() != n { u.dim() } else { x.len() },
            });
        }
        let l = u.degree();
        if l == 0 {
            return Err(Error::ContractScalar);
        }
        let rule = gauss_legendre(self.s_order);
        let mut out = FormValue::zero(n, l - 1);
        let mut val = FormValue::zero(n, l);
        let mut y = vec![0.0; n];
        let mut lever = vec![0.0; n];
        for (z, wz) in self.nodes.iter() {
            for i in 0..n {
                lever[i] = x[i] - z[i];
            }
            for (s, ws) in rule.on(0.0, 1.0) {
                for i in 0..n {
                    y[i] = s * x[i] + (1.0 - s) * z[i];
                }
                u.value_into(&y, &mut val);
                val.contract_into(&lever, wz * ws * s.powi(l as i32 - 1), &mut out);
            }
        }
        Ok(out)
    }

    /// Largest coefficient of `d𝙿_ℓu + 𝙿_{ℓ+1}du − u` (the last operator term
    /// is absent when `ℓ = n`).
    pub fn homotopy_residual(&self, u: &PolyForm) -> Result<f64> {
        let mut lhs = self.apply_poly(u)?.exterior_derivative()?;
        if u.degree() < u.dim() {
            let du = u.exterior_derivative()?;
            if !du.is_zero() {
                lhs = lhs.add(&self.apply_poly(&du)?);
            }
        }
        Ok(lhs.sub(u).max_coeff())
    }

    /// `|∂_j P_ℓ f(x) − [δ_{jm} P₁^ℓ f + x_m ∂_j P₁^ℓ f − ∂_j P₂^ℓ f](x)|`, all
    /// terms from the moment-exact path.
    pub fn gradient_residual(
        &self,
        l: usize,
        m: usize,
        j: usize,
        f: &MultiPoly,
        x: &[f64],
    ) -> Result<f64> {
        check_index(j, self.dim())?;
        let direct = self.scalar_poly(l, m, f)?.derivative(j).evaluate(x);
        let p1 = self.component_poly(Variant::Theta, l, f)?;
        let p2 = self.component_poly(Variant::ZTheta(m), l, f)?;
        let mut formula = x[m - 1] * p1.derivative(j).evaluate(x) - p2.derivative(j).evaluate(x);
        if j == m {
            formula += p1.evaluate(x);
        }
        Ok((direct - formula).abs())
    }

    /// Residual of the second-derivative expansion for `∂_j ∂_a P_ℓ f`:
    ///
    /// `δ_{jm} P₁^{ℓ+1}[∂_a f] + x_m ∂_j P₁^{ℓ+1}[∂_a f] + δ_{am} ∂_j P₁^ℓ f − ∂_j P₂^{ℓ+1}[∂_a f]`.
    pub fn second_derivative_residual(
        &self,
        l: usize,
        m: usize,
        j: usize,
        a: usize,
        f: &MultiPoly,
        x: &[f64],
    ) -> Result<f64> {
        check_index(j, self.dim())?;
        check_index(a, self.dim())?;
        let direct = self
            .scalar_poly(l, m, f)?
            .derivative(a)
            .derivative(j)
            .evaluate(x);
        let fa = f.derivative(a);
        let p1_hi = self.component_poly(Variant::Theta, l + 1, &fa)?;
        let p2_hi = self.component_poly(Variant::ZTheta(m), l + 1, &fa)?;
        let mut formula =
            x[m - 1] * p1_hi.derivative(j).evaluate(x) - p2_hi.derivative(j).evaluate(x);
        if j == m {
            formula += p1_hi.evaluate(x);
        }
        if a == m {
            formula += self
                .component_poly(Variant::Theta, l, f)?
                .derivative(j)
                .evaluate(x);
        }
        Ok((direct - formula).abs())
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::InvalidParameter(format!(
            "coordinate index {i} outside 1..={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PolyField;

    fn cfg(center: &[f64], r: f64) -> PoincareConfig {
        PoincareConfig::new(Mollifier::new(center, r).unwrap())
    }

    #[test]
    fn beta_matches_factorials() {
        assert!((beta(1, 1) - 1.0).abs() < 1e-15);
        assert!((beta(2, 3) - 1.0 / 12.0).abs() < 1e-15);
        assert!((beta(4, 2) - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_dx_gives_x_minus_center() {
        let p = cfg(&[0.3], 0.5);
        let u = PolyForm::monomial_form(1, IndexTuple::single(1), MultiPoly::constant(1, 1.0));
        let v = p.apply_poly(&u).unwrap();
        let expect = MultiPoly::variable(1, 1).sub(&MultiPoly::constant(1, 0.3));
        assert!(v.components()[0]
            .sub(&expect)
            .terms()
            .iter()
            .all(|(_, c)| c.abs() < 1e-12));
        assert!(v.exterior_derivative().unwrap().sub(&u).max_coeff() < 1e-12);
    }

    #[test]
    fn planar_dx1_gives_x1() {
        let p = cfg(&[0.0, 0.0], 0.5);
        let u = PolyForm::monomial_form(2, IndexTuple::single(1), MultiPoly::constant(2, 1.0));
        let v = p.apply_poly(&u).unwrap();
        assert_eq!(v.degree(), 0);
        let diff = v.components()[0].sub(&MultiPoly::variable(2, 1));
        assert!(
            diff.terms().iter().all(|(_, c)| c.abs() < 1e-12),
            "{diff:?}"
        );
    }

    #[test]
    fn closed_forms_are_reproduced() {
        let p = cfg(&[0.1, -0.2, 0.05], 0.4);
        for l in 1..=3 {
            for seed in 0..4 {
                let u = PolyForm::random_closed(3, l, 2, seed).unwrap();
                let v = p.apply_poly(&u).unwrap();
                let err = v.exterior_derivative().unwrap().sub(&u).max_coeff();
                assert!(err < 1e-8, "l={l} seed={seed} err={err}");
            }
        }
    }

    #[test]
    fn homotopy_identity_on_general_forms() {
        let p = cfg(&[0.2, 0.1], 0.5);
        for l in 1..=2 {
            let u = PolyForm::random(2, l, 3, 11 + l as u64).unwrap();
            assert!(p.homotopy_residual(&u).unwrap() < 1e-8);
        }
    }

    #[test]
    fn moment_table_too_small_is_reported() {
        let p = PoincareConfig::new(Mollifier::build(&[0.0, 0.0], 0.5, 3, 64).unwrap());
        let u = PolyForm::random(2, 1, 3, 1).unwrap();
        assert_eq!(
            p.apply_poly(&u).unwrap_err(),
            Error::MomentTableTooSmall {
                needed: 4,
                available: 3
            }
        );
    }

    #[test]
    fn components_of_constants() {
        let p = cfg(&[0.0, 0.0], 0.5);
        let one = MultiPoly::constant(2, 1.0);
        for k in 1..=4 {
            let p1 = p.component_poly(Variant::Theta, k, &one).unwrap();
            assert!((p1.evaluate(&[0.3, 0.4]) - 1.0 / k as f64).abs() < 1e-10);
            let p2 = p.component_poly(Variant::ZTheta(1), k, &one).unwrap();
            assert!(p2.evaluate(&[0.3, 0.4]).abs() < 1e-12);
            let q1 = p.component_quad(Variant::Theta, k, &|_| 1.0, &[0.3, 0.4]);
            assert!((q1 - 1.0 / k as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_path_matches_moment_path() {
        let p = cfg(&[0.1, 0.0], 0.45);
        let u = PolyForm::random_closed(2, 1, 3, 5).unwrap();
        let exact = p.apply_poly(&u).unwrap();
        let field = PolyField::new(u);
        for x in [[0.3, -0.2], [-0.7, 0.5]] {
            let q = p.apply_quad(&field, &x).unwrap();
            let e = exact.evaluate(&x);
            assert!((&q - &e).max_abs() < 1e-6);
        }
    }

    #[test]
    fn derivative_formulas_hold() {
        let p = cfg(&[0.1, -0.1], 0.5);
        let f = PolyForm::random(2, 0, 3, 9).unwrap().components()[0].clone();
        let x = [0.35, -0.6];
        for l in 1..=2 {
            for m in 1..=2 {
                for j in 1..=2 {
                    assert!(p.gradient_residual(l, m, j, &f, &x).unwrap() < 1e-9);
                    for a in 1..=2 {
                        assert!(p.second_derivative_residual(l, m, j, a, &f, &x).unwrap() < 1e-9);
                    }
                }
            }
        }
    }
}
