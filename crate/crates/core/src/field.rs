//! Form-valued functions evaluated pointwise, with first derivatives.
//!
//! Operators whose output is not a polynomial (the Bogovskiĭ operator, the
//! chain gluing) produce [`FormField`]s. A field reports its value and, via a
//! [`FormJet`], its first partial derivatives, from which the exterior
//! derivative and the H¹ seminorm follow.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{basis, rank, wedge_basis, FormValue, IndexTuple, MAX_DIM};
use crate::geometry::{Ball, StarDomain};
use crate::poly::{PolyForm, Powers};
use crate::quadrature::{pairwise_sum, NodeSet};

/// Second-order Taylor data of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub n: usize,
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn zero(n: usize) -> Self {
        Jet {
            n,
            value: 0.0,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Jet {
            value: c,
            ..Jet::zero(n)
        }
    }

    /// The coordinate function `x_m` (1-based) at `x`.
    pub fn coordinate(n: usize, m: usize, x: &[f64]) -> Self {
        let mut j = Jet::constant(n, x[m - 1]);
        j.grad[m - 1] = 1.0;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::zero(self.n);
        r.value = self.value * o.value;
        for a in 0..self.n {
            r.grad[a] = self.grad[a] * o.value + self.value * o.grad[a];
            for b in 0..self.n {
                r.hess[a][b] = self.hess[a][b] * o.value
                    + self.grad[a] * o.grad[b]
                    + self.grad[b] * o.grad[a]
                    + self.value * o.hess[a][b];
            }
        }
        r
    }

    pub fn axpy(&self, c: f64, o: &Jet) -> Jet {
        let mut r = *self;
        r.value += c * o.value;
        for a in 0..self.n {
            r.grad[a] += c * o.grad[a];
            for b in 0..self.n {
                r.hess[a][b] += c * o.hess[a][b];
            }
        }
        r
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet::zero(self.n).axpy(c, self)
    }

    /// `f ∘ self` given `f`, `f'`, `f''` at `self.value`.
    pub fn compose(&self, f: f64, f1: f64, f2: f64) -> Jet {
        let mut r = Jet::zero(self.n);
        r.value = f;
        for a in 0..self.n {
            r.grad[a] = f1 * self.grad[a];
            for b in 0..self.n {
                r.hess[a][b] = f2 * self.grad[a] * self.grad[b] + f1 * self.hess[a][b];
            }
        }
        r
    }

    /// Quotient `self / o`, requiring `o.value ≠ 0`.
    pub fn div(&self, o: &Jet) -> Jet {
        let v = o.value;
        let inv = o.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        self.mul(&inv)
    }

    /// The 1-form `dφ = Σ ∂_jφ e^j` at this point.
    pub fn differential(&self) -> FormValue {
        FormValue::from_coeffs(self.n, 1, self.grad[..self.n].to_vec())
    }

    /// Jet of `∂_j φ` truncated to first order.
    pub fn partial(&self, j: usize) -> (f64, [f64; MAX_DIM]) {
        let mut g = [0.0; MAX_DIM];
        g[..self.n].copy_from_slice(&self.hess[j - 1][..self.n]);
        (self.grad[j - 1], g)
    }
}

/// Value and first partial derivatives of a form at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FormJet {
    pub value: FormValue,
    /// `partials[j]` is `∂_{j+1}` of the value.
    pub partials: Vec<FormValue>,
}

impl FormJet {
    pub fn zero(n: usize, degree: usize) -> Self {
        FormJet {
            value: FormValue::zero(n, degree),
            partials: vec![FormValue::zero(n, degree); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.value.dim()
    }

    pub fn degree(&self) -> usize {
        self.value.degree()
    }

    /// `du = Σ_j e^j ∧ ∂_j u`; zero for top-degree forms.
    pub fn exterior_derivative(&self) -> Option<FormValue> {
        let n = self.dim();
        let l = self.degree();
        if l >= n {
            return None;
        }
        let mut out = FormValue::zero(n, l + 1);
        for (j, p) in self.partials.iter().enumerate() {
            for (t, c) in p.terms() {
                if let Some((sign, bits)) = wedge_basis(1 << j, t.bits()) {
                    let k = rank(n, IndexTuple::from_bits(bits));
                    out.coeffs_mut()[k] += sign * c;
                }
            }
        }
        Some(out)
    }

    /// `Σ_{I,j} (∂_j u_I)²`.
    pub fn gradient_norm2(&self) -> f64 {
        self.partials
            .iter()
            .map(|p| p.coeffs().iter().map(|c| c * c).sum::<f64>())
            .sum()
    }

    pub fn axpy(&mut self, c: f64, o: &FormJet) {
        self.value.axpy(c, &o.value);
        for (a, b) in self.partials.iter_mut().zip(&o.partials) {
            a.axpy(c, b);
        }
    }

    /// Jet of `φ · u`.
    pub fn scalar_mul(&self, phi: &Jet) -> FormJet {
        FormJet {
            value: self.value.scaled(phi.value),
            partials: self
                .partials
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let mut q = p.scaled(phi.value);
                    q.axpy(phi.grad[j], &self.value);
                    q
                })
                .collect(),
        }
    }

    /// Jet of `dφ ∧ u` for a scalar `φ` with second derivatives.
    pub fn dphi_wedge(&self, phi: &Jet) -> Result<FormJet> {
        let n = self.dim();
        let dphi = phi.differential();
        let value = dphi.wedge(&self.value)?;
        let mut partials = Vec::with_capacity(n);
        for j in 1..=n {
            let (_, g) = phi.partial(j);
            let ddphi = FormValue::from_coeffs(n, 1, g[..n].to_vec());
            let mut p = ddphi.wedge(&self.value)?;
            p += &dphi.wedge(&self.partials[j - 1])?;
            partials.push(p);
        }
        Ok(FormJet { value, partials })
    }
}

/// A differential form on (a subset of) ℝⁿ that can be evaluated pointwise.
pub trait FormField: Sync {
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    fn value(&self, x: &[f64]) -> FormValue;
    fn jet(&self, x: &[f64]) -> FormJet;

    /// Writes the value into `out`, which has the right shape.
    fn value_into(&self, x: &[f64], out: &mut FormValue) {
        *out = self.value(x);
    }

    /// A ball outside which the field vanishes, if one is known.
    fn support(&self) -> Option<&Ball> {
        None
    }
}

/// A polynomial form together with its first and second partial derivatives.
#[derive(Clone, Debug)]
pub struct PolyField {
    form: PolyForm,
    partials: Vec<PolyForm>,
    max_degree: usize,
}

impl PolyField {
    pub fn new(form: PolyForm) -> Self {
        let partials = (1..=form.dim()).map(|j| form.partial(j)).collect();
        let max_degree = form.poly_degree().unwrap_or(0);
        PolyField {
            form,
            partials,
            max_degree,
        }
    }

    pub fn form(&self) -> &PolyForm {
        &self.form
    }
}

impl FormField for PolyField {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn degree(&self) -> usize {
        self.form.degree()
    }

    fn value(&self, x: &[f64]) -> FormValue {
        self.form.eval_with(&Powers::new(x, self.max_degree))
    }

    fn value_into(&self, x: &[f64], out: &mut FormValue) {
        let p = Powers::new(x, self.max_degree);
        for (slot, f) in out.coeffs_mut().iter_mut().zip(self.form.components()) {
            *slot = f.eval_with(&p);
        }
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        let p = Powers::new(x, self.max_degree);
        FormJet {
            value: self.form.eval_with(&p),
            partials: self.partials.iter().map(|f| f.eval_with(&p)).collect(),
        }
    }
}

/// Restriction of a field to a domain: zero outside it.
pub struct Masked<'a, F: FormField> {
    pub field: &'a F,
    pub domain: &'a StarDomain,
}

impl<F: FormField> FormField for Masked<'_, F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn degree(&self) -> usize {
        self.field.degree()
    }

    fn value(&self, x: &[f64]) -> FormValue {
        if self.domain.contains(x) {
            self.field.value(x)
        } else {
            FormValue::zero(self.dim(), self.degree())
        }
    }

    fn value_into(&self, x: &[f64], out: &mut FormValue) {
        if self.domain.contains(x) {
            self.field.value_into(x, out);
        } else {
            out.coeffs_mut().fill(0.0);
        }
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        if self.domain.contains(x) {
            self.field.jet(x)
        } else {
            FormJet::zero(self.dim(), self.degree())
        }
    }
}

/// Coefficient of `e^{1…n}` in a top-degree form.
fn top(f: &FormValue) -> f64 {
    f.coeffs()[0]
}

/// Jets of `u` at every node, evaluated once so several functionals can share
/// them.
pub fn node_jets(u: &dyn FormField, nodes: &NodeSet) -> Vec<FormJet> {
    (0..nodes.len())
        .into_par_iter()
        .map(|k| u.jet(nodes.point(k)))
        .collect()
}

/// The weak trace pairing `∫_Ω du∧ψ + (−1)^ℓ ∫_Ω u∧dψ` and the scale
/// `∫|du∧ψ| + ∫|u∧dψ|` against which its size should be judged.
pub fn trace_pairing_scaled(
    u: &dyn FormField,
    psi: &PolyForm,
    nodes: &NodeSet,
) -> Result<(f64, f64)> {
    check_pairing_degrees(u.dim(), u.degree(), psi)?;
    if nodes.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    trace_pairing_from_jets(&node_jets(u, nodes), psi, nodes)
}

fn check_pairing_degrees(n: usize, l: usize, psi: &PolyForm) -> Result<()> {
    if l >= n {
        return Err(Error::DegreeMismatch {
            expected: n.saturating_sub(1),
            found: l,
        });
    }
    if psi.degree() != n - l - 1 {
        return Err(Error::DegreeMismatch {
            expected: n - l - 1,
            found: psi.degree(),
        });
    }
    Ok(())
}

/// [`trace_pairing_scaled`] from jets produced by [`node_jets`].
pub fn trace_pairing_from_jets(
    jets: &[FormJet],
    psi: &PolyForm,
    nodes: &NodeSet,
) -> Result<(f64, f64)> {
    let Some(first) = jets.first() else {
        return Err(Error::EmptyQuadrature);
    };
    let l = first.degree();
    check_pairing_degrees(first.dim(), l, psi)?;
    let dpsi = PolyField::new(psi.exterior_derivative()?);
    let psi = PolyField::new(psi.clone());
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    let terms: Vec<(f64, f64)> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let x = nodes.point(k);
            let w = nodes.weights[k];
            let jet = &jets[k];
            let du = jet.exterior_derivative().expect("degree below n");
            let a = top(&du.wedge(&psi.value(x)).expect("degrees checked"));
            let b = top(&jet.value.wedge(&dpsi.value(x)).expect("degrees checked"));
            (w * a, w * sign * b)
        })
        .collect();
    let (first, second): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    let a = pairwise_sum(&first);
    let b = pairwise_sum(&second);
    let scale = pairwise_sum(&first.iter().map(|v| v.abs()).collect::<Vec<_>>())
        + pairwise_sum(&second.iter().map(|v| v.abs()).collect::<Vec<_>>());
    Ok((a + b, scale))
}

/// A quadrature value computed on a fine grid, with an a posteriori error
/// estimate taken from the same quantity on a grid twice as coarse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refined {
    pub value: f64,
    /// `∫|integrand|` on the fine grid.
    pub scale: f64,
    /// `|fine − coarse|`, which overestimates the fine-grid error once the
    /// rule is in its asymptotic range.
    pub quadrature_error: f64,
}

impl Refined {
    pub fn new(fine: (f64, f64), coarse: f64) -> Self {
        Refined {
            value: fine.0,
            scale: fine.1,
            quadrature_error: (fine.0 - coarse).abs(),
        }
    }

    /// Combined tolerance: the estimated quadrature error plus `op_rel`
    /// times the scale, for a paired field with relative error `op_rel`.
    /// A rounding floor keeps exact zeros from being judged against zero.
    pub fn tolerance(&self, op_rel: f64) -> f64 {
        self.quadrature_error + self.scale * (op_rel + 1e-12)
    }

    /// `|value| / tolerance`, so anything at most one passes.
    pub fn ratio(&self, op_rel: f64) -> f64 {
        let tol = self.tolerance(op_rel);
        if tol > 0.0 {
            self.value.abs() / tol
        } else if self.value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Jets of one field on a fine and a coarse grid.
pub struct JetLevels {
    pub fine: NodeSet,
    pub fine_jets: Vec<FormJet>,
    pub coarse: NodeSet,
    pub coarse_jets: Vec<FormJet>,
}

impl JetLevels {
    pub fn new(u: &dyn FormField, fine: NodeSet, coarse: NodeSet) -> Self {
        let fine_jets = node_jets(u, &fine);
        let coarse_jets = node_jets(u, &coarse);
        JetLevels {
            fine,
            fine_jets,
            coarse,
            coarse_jets,
        }
    }

    /// The trace pairing with `ψ` on both levels.
    pub fn trace_pairing(&self, psi: &PolyForm) -> Result<Refined> {
        let fine = trace_pairing_from_jets(&self.fine_jets, psi, &self.fine)?;
        let (coarse, _) = trace_pairing_from_jets(&self.coarse_jets, psi, &self.coarse)?;
        Ok(Refined::new(fine, coarse))
    }

    /// Worst [`Refined::ratio`] over a battery of test forms.
    pub fn max_trace_ratio(&self, psis: &[PolyForm], op_rel: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for psi in psis {
            worst = worst.max(self.trace_pairing(psi)?.ratio(op_rel));
        }
        Ok(worst)
    }
}

/// `⟨tr_{∂Ω} u, ψ⟩` by volume quadrature at the given grid level.
pub fn trace_pairing(
    u: &dyn FormField,
    psi: &PolyForm,
    domain: &StarDomain,
    level: usize,
) -> Result<f64> {
    trace_pairing_scaled(u, psi, &domain.quadrature_nodes(level)).map(|(v, _)| v)
}

/// `‖u‖_{L²}` over the nodes.
pub fn l2_norm(u: &dyn FormField, nodes: &NodeSet) -> f64 {
    nodes
        .integrate_par(|x| u.value(x).coeffs().iter().map(|c| c * c).sum())
        .sqrt()
}

/// `|u|_{H¹}` over the nodes, from the field's own derivatives.
pub fn h1_seminorm(u: &dyn FormField, nodes: &NodeSet) -> f64 {
    nodes.integrate_par(|x| u.jet(x).gradient_norm2()).sqrt()
}

/// `|u|_{H¹}` from jets produced by [`node_jets`].
pub fn h1_from_jets(jets: &[FormJet], nodes: &NodeSet) -> f64 {
    let vals: Vec<f64> = jets
        .iter()
        .zip(&nodes.weights)
        .map(|(j, w)| w * j.gradient_norm2())
        .collect();
    pairwise_sum(&vals).sqrt()
}

/// `‖u‖_{L²}` from jets produced by [`node_jets`].
pub fn l2_from_jets(jets: &[FormJet], nodes: &NodeSet) -> f64 {
    let vals: Vec<f64> = jets
        .iter()
        .zip(&nodes.weights)
        .map(|(j, w)| w * j.value.norm().powi(2))
        .collect();
    pairwise_sum(&vals).sqrt()
}

/// The basis 1-forms `e^j` as a list, handy for assembling wedges.
pub fn basis_one_forms(n: usize) -> Vec<FormValue> {
    basis(n, 1)
        .iter()
        .map(|&t| FormValue::basis(n, t, 1.0))
        .collect()
}
