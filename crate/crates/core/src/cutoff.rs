//! Smooth forms with compact support: a bump function times a polynomial
//! form, and the exterior derivative of such a product. These are the natural
//! inputs for the Bogovskiĭ operator, whose exactness needs vanishing traces.

use crate::error::Result;
use crate::exterior::FormValue;
use crate::field::{FormField, FormJet, Jet, PolyField};
use crate::geometry::Ball;
use crate::poly::PolyForm;

/// `β(x) = exp(−1/(1 − |x−c|²/r²))` inside the ball, zero outside.
pub fn bump_jet(ball: &Ball, x: &[f64]) -> Jet {
    let n = x.len();
    let r2 = ball.radius * ball.radius;
    let q = crate::geometry::dist2(x, &ball.center) / r2;
    let mut j = Jet::zero(n);
    if q >= 1.0 {
        return j;
    }
    let s = 1.0 - q;
    let g = (-1.0 / s).exp();
    let g1 = -g / (s * s);
    let g2 = g * (2.0 * q - 1.0) / (s * s * s * s);
    let mut dq = [0.0; crate::MAX_DIM];
    for a in 0..n {
        dq[a] = 2.0 * (x[a] - ball.center[a]) / r2;
    }
    j.value = g;
    for a in 0..n {
        j.grad[a] = g1 * dq[a];
        for b in 0..n {
            j.hess[a][b] = g2 * dq[a] * dq[b] + if a == b { g1 * 2.0 / r2 } else { 0.0 };
        }
    }
    j
}

/// `β·p` for a bump `β` on `ball` and a polynomial form `p`.
#[derive(Clone, Debug)]
pub struct CutoffForm {
    ball: Ball,
    poly: PolyField,
}

impl CutoffForm {
    pub fn new(ball: Ball, form: PolyForm) -> Self {
        CutoffForm {
            ball,
            poly: PolyField::new(form),
        }
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn form(&self) -> &PolyForm {
        self.poly.form()
    }

    /// `d(β p) = dβ ∧ p + β dp`.
    pub fn derivative(&self) -> Result<CutoffDerivative> {
        let dp = self.form().exterior_derivative()?;
        Ok(CutoffDerivative {
            ball: self.ball.clone(),
            p: self.poly.clone(),
            dp: PolyField::new(dp),
        })
    }
}

impl FormField for CutoffForm {
    fn dim(&self) -> usize {
        self.poly.dim()
    }

    fn degree(&self) -> usize {
        self.poly.degree()
    }

    fn value(&self, x: &[f64]) -> FormValue {
        let b = bump_jet(&self.ball, x).value;
        if b == 0.0 {
            return FormValue::zero(self.dim(), self.degree());
        }
        self.poly.value(x).scaled(b)
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        let b = bump_jet(&self.ball, x);
        if b.value == 0.0 {
            return FormJet::zero(self.dim(), self.degree());
        }
        self.poly.jet(x).scalar_mul(&b)
    }

    fn support(&self) -> Option<&Ball> {
        Some(&self.ball)
    }
}

/// The exterior derivative of a [`CutoffForm`], closed and compactly
/// supported.
#[derive(Clone, Debug)]
pub struct CutoffDerivative {
    ball: Ball,
    p: PolyField,
    dp: PolyField,
}

impl CutoffDerivative {
    pub fn ball(&self) -> &Ball {
        &self.ball
    }
}

impl FormField for CutoffDerivative {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn degree(&self) -> usize {
        self.p.degree() + 1
    }

    fn value(&self, x: &[f64]) -> FormValue {
        let b = bump_jet(&self.ball, x);
        if b.value == 0.0 {
            return FormValue::zero(self.dim(), self.degree());
        }
        let mut v = b
            .differential()
            .wedge(&self.p.value(x))
            .expect("degree below n");
        v.axpy(b.value, &self.dp.value(x));
        v
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        let n = self.dim();
        let b = bump_jet(&self.ball, x);
        if b.value == 0.0 {
            return FormJet::zero(n, self.degree());
        }
        let p = self.p.jet(x);
        let dp = self.dp.jet(x);
        let db = b.differential();
        let mut value = db.wedge(&p.value).expect("degree below n");
        value.axpy(b.value, &dp.value);
        let partials = (0..n)
            .map(|j| {
                let mut d2b = FormValue::zero(n, 1);
                d2b.coeffs_mut().copy_from_slice(&b.hess[j][..n]);
                let mut t = d2b.wedge(&p.value).expect("degree below n");
                t += &db.wedge(&p.partials[j]).expect("degree below n");
                t.axpy(b.grad[j], &dp.value);
                t.axpy(b.value, &dp.partials[j]);
                t
            })
            .collect();
        FormJet { value, partials }
    }

    fn support(&self) -> Option<&Ball> {
        Some(&self.ball)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;
    use crate::IndexTuple;

    fn sample() -> CutoffForm {
        let p = PolyForm::random(2, 1, 2, 4).unwrap();
        CutoffForm::new(Ball::new(&[0.1, -0.2], 0.6), p)
    }

    #[test]
    fn bump_vanishes_outside_and_peaks_at_centre() {
        let ball = Ball::new(&[0.0, 0.0], 1.0);
        assert_eq!(bump_jet(&ball, &[1.0, 0.0]).value, 0.0);
        assert!((bump_jet(&ball, &[0.0, 0.0]).value - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn derivative_is_closed_and_matches_differences() {
        let w = sample();
        let u = w.derivative().unwrap();
        let x = [0.3, -0.1];
        let h = 1e-5;
        // u = dw, checked on the e^{12} coefficient: ∂₁w₂ − ∂₂w₁.
        let jw = w.jet(&x);
        let du = jw.exterior_derivative().unwrap();
        assert!((&du - &u.value(&x)).max_abs() < 1e-12);
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (&u.value(&xp) - &u.value(&xm)).scaled(0.5 / h);
            assert!((&fd - &u.jet(&x).partials[j]).max_abs() < 1e-6);
        }
    }

    #[test]
    fn zero_outside_support() {
        let w = CutoffForm::new(
            Ball::new(&[0.0, 0.0], 0.5),
            PolyForm::monomial_form(2, IndexTuple::EMPTY, MultiPoly::constant(2, 1.0)),
        );
        assert!(w.value(&[0.6, 0.0]).is_zero());
        assert!(w.derivative().unwrap().value(&[0.0, 0.7]).is_zero());
    }
}
