//! Smooth unit-mass bump supported on a ball, with its monomial moments.
//!
//! The profile is `θ(x) = A·g(|x−c|²/r²)` with `g(q) = exp(−1/(1−q))` for
//! `q < 1`. Because `θ` is radial about `c`, every moment factors into a
//! closed-form sphere integral times a one-dimensional radial integral
//! `∫₀¹ s^k g(s²) ds`; the latter is evaluated by Gauss-Legendre at two orders
//! so that non-convergence is detected.

use crate::error::{Error, Result};
use crate::exterior::{binomial, check_dim, MAX_DIM};
use crate::field::Jet;
use crate::poly::{exponent_degree, monomials, Exponent};
use crate::quadrature::{gauss_legendre, sphere_monomial_integral, sphere_rule, NodeSet};

/// Default largest moment degree kept in the table.
pub const DEFAULT_MOMENT_DEGREE: usize = 12;
/// Default radial Gauss order; the convergence check uses twice this.
pub const DEFAULT_QUAD_ORDER: usize = 64;
/// Tolerated relative change of the mass between the two radial orders.
pub const MASS_CONVERGENCE_TOL: f64 = 1e-10;

#[inline]
fn profile(q: f64) -> f64 {
    if q < 1.0 {
        (-1.0 / (1.0 - q)).exp()
    } else {
        0.0
    }
}

/// `∫₀¹ s^k g(s²) ds` for `k = 0..=kmax`.
fn radial_integrals(kmax: usize, order: usize) -> Vec<f64> {
    let rule = gauss_legendre(order);
    let mut out = vec![0.0; kmax + 1];
    for (s, w) in rule.on(0.0, 1.0) {
        let mut p = w * profile(s * s);
        for slot in out.iter_mut() {
            *slot += p;
            p *= s;
        }
    }
    out
}

/// Which of the two kernel functions `φ₁ = θ`, `φ₂ = z_m θ` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Theta,
    /// `z_m θ(z)` with the 1-based coordinate index `m`.
    ZTheta(usize),
}

#[derive(Clone, Debug)]
pub struct Mollifier {
    n: usize,
    center: Vec<f64>,
    radius: f64,
    norm: f64,
    max_degree: usize,
    quad_order: usize,
    /// Moments in the order of [`monomials`]`(n, max_degree)`.
    moments: Vec<f64>,
}

impl Mollifier {
    /// Builds the bump on the ball `B(center, radius)` and tabulates its
    /// moments up to total degree `max_degree`.
    pub fn build(
        center: &[f64],
        radius: f64,
        max_degree: usize,
        quad_order: usize,
    ) -> Result<Self> {
        let n = center.len();
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mollifier radius must be positive, got {radius}"
            )));
        }
        if quad_order == 0 {
            return Err(Error::InvalidParameter(
                "quadrature order must be positive".into(),
            ));
        }
        let kmax = max_degree + n - 1;
        let coarse = radial_integrals(kmax, quad_order);
        let fine = radial_integrals(kmax, 2 * quad_order);
        let difference = ((coarse[n - 1] - fine[n - 1]) / fine[n - 1]).abs();
        if difference > MASS_CONVERGENCE_TOL {
            return Err(Error::MomentNonConvergence { difference });
        }
        let zero = [0u8; MAX_DIM];
        let mass = sphere_monomial_integral(&zero[..n]) * fine[n - 1];
        let norm = 1.0 / (radius.powi(n as i32) * mass);

        // Centred moments: r^{|β|} S(β) R_{|β|+n-1} / (S(0) R_{n-1}).
        let exps = monomials(n, max_degree);
        let centred: Vec<f64> = exps
            .iter()
            .map(|b| {
                let d = exponent_degree(b);
                radius.powi(d as i32) * sphere_monomial_integral(&b[..n]) * fine[d + n - 1] / mass
            })
            .collect();
        let index = |b: &Exponent| exps.iter().position(|e| e == b).expect("exponent in table");
        // Shift to the actual centre: ∫(c+w)^α θ₀(w) dw = Σ_β C(α,β) c^{α−β} M₀(β).
        let moments = exps
            .iter()
            .map(|a| {
                let mut total = 0.0;
                for b in exps.iter().filter(|b| (0..n).all(|i| b[i] <= a[i])) {
                    let mut coef = centred[index(b)];
                    if coef == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        coef *= binomial(a[i] as usize, b[i] as usize) as f64
                            * center[i].powi((a[i] - b[i]) as i32);
                    }
                    total += coef;
                }
                total
            })
            .collect();
        Ok(Mollifier {
            n,
            center: center.to_vec(),
            radius,
            norm,
            max_degree,
            quad_order,
            moments,
        })
    }

    /// Bump with the default moment degree and quadrature order.
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        Self::build(center, radius, DEFAULT_MOMENT_DEGREE, DEFAULT_QUAD_ORDER)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Normalisation `A`, so `θ(c) = A/e`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `∫ z^α θ(z) dz`, or `None` if `|α|` exceeds the table.
    pub fn moment(&self, alpha: &Exponent) -> Option<f64> {
        if exponent_degree(alpha) > self.max_degree || alpha[self.n..].iter().any(|&a| a != 0) {
            return None;
        }
        Some(self.moments[moment_index(self.n, alpha)])
    }

    /// `(α, ∫ z^α θ)` for the whole table, graded order.
    pub fn moment_table(&self) -> impl Iterator<Item = (Exponent, f64)> + '_ {
        monomials(self.n, self.max_degree)
            .into_iter()
            .zip(self.moments.iter().copied())
    }

    #[inline]
    fn q(&self, x: &[f64]) -> f64 {
        let r2 = self.radius * self.radius;
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / r2
    }

    /// `θ(x)`; exactly zero outside the open ball.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.norm * profile(self.q(x))
    }

    /// Value, gradient and Hessian of `θ` at `x`.
    pub fn jet(&self, x: &[f64]) -> Jet {
        let n = self.n;
        let q = self.q(x);
        let mut j = Jet::zero(n);
        if q >= 1.0 {
            return j;
        }
        let r2 = self.radius * self.radius;
        let g = profile(q);
        let s = 1.0 - q;
        let g1 = -g / (s * s);
        let g2 = g * (2.0 * q - 1.0) / (s * s * s * s);
        j.value = self.norm * g;
        for a in 0..n {
            let da = 2.0 * (x[a] - self.center[a]) / r2;
            j.grad[a] = self.norm * g1 * da;
            for b in 0..n {
                let db = 2.0 * (x[b] - self.center[b]) / r2;
                let mut h = g2 * da * db;
                if a == b {
                    h += g1 * 2.0 / r2;
                }
                j.hess[a][b] = self.norm * h;
            }
        }
        j
    }

    /// `φ` for the given variant, with derivatives.
    pub fn variant_jet(&self, variant: Variant, x: &[f64]) -> Jet {
        let t = self.jet(x);
        match variant {
            Variant::Theta => t,
            Variant::ZTheta(m) => Jet::coordinate(self.n, m, x).mul(&t),
        }
    }

    /// Polar product rule on the support ball with plain (unweighted) volume
    /// weights. `radial` Gauss points in the radius, `angular` controls the
    /// sphere rule.
    pub fn ball_nodes(&self, radial: usize, angular: usize) -> NodeSet {
        let n = self.n;
        let sphere = sphere_rule(n, angular);
        let rule = gauss_legendre(radial);
        let mut set = NodeSet::new(n);
        let mut x = vec![0.0; n];
        for (s, ws) in rule.on(0.0, self.radius) {
            let wr = ws * s.powi(n as i32 - 1);
            for (e, we) in sphere.iter() {
                for i in 0..n {
                    x[i] = self.center[i] + s * e[i];
                }
                set.push(&x, wr * we);
            }
        }
        set
    }

    /// Nodes on the ball carrying the weights `w_k θ(z_k)`, a discrete
    /// probability measure approximating `θ dz`. The sphere rule is exact for
    /// polynomials up to the table degree.
    pub fn weighted_nodes(&self) -> NodeSet {
        let angular = (self.max_degree / 2 + 2).max(8);
        self.weighted_nodes_with(self.quad_order, angular)
    }

    /// θ-weighted nodes with explicit radial and angular orders.
    pub fn weighted_nodes_with(&self, radial: usize, angular: usize) -> NodeSet {
        let mut set = self.ball_nodes(radial, angular);
        for k in 0..set.len() {
            let w = self.eval(set.point(k));
            set.weights[k] *= w;
        }
        set
    }

    /// `‖∂^α φ‖_{L¹}` for `|α| ≤ 2`, by a fine polar rule. `alpha` lists the
    /// 1-based differentiation indices (empty, `[j]` or `[j, k]`).
    pub fn l1_norm(&self, variant: Variant, alpha: &[usize]) -> f64 {
        assert!(alpha.len() <= 2);
        let nodes = self.ball_nodes(4 * self.quad_order, 4 * self.quad_order);
        nodes.integrate(|x| {
            let j = self.variant_jet(variant, x);
            match alpha {
                [] => j.value.abs(),
                [a] => j.grad[a - 1].abs(),
                [a, b] => j.hess[a - 1][b - 1].abs(),
                _ => unreachable!(),
            }
        })
    }

    /// `𝖢(φ, ρ) = ρ⁻¹‖φ‖_{L¹} + ρ‖∂_j²φ‖_{L¹}`.
    pub fn c_phi_constant(&self, variant: Variant, j: usize, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ρ must be positive, got {rho}"
            )));
        }
        if j == 0 || j > self.n {
            return Err(Error::InvalidParameter(format!(
                "derivative index {j} out of range"
            )));
        }
        if let Variant::ZTheta(m) = variant {
            if m == 0 || m > self.n {
                return Err(Error::InvalidParameter(format!(
                    "coordinate index {m} out of range"
                )));
            }
        }
        Ok(self.l1_norm(variant, &[]) / rho + rho * self.l1_norm(variant, &[j, j]))
    }
}

/// Position of `alpha` in [`monomials`]`(n, ·)`, which is graded, so the
/// index does not depend on the table's degree bound.
pub(crate) fn moment_index(n: usize, alpha: &Exponent) -> usize {
    let d = exponent_degree(alpha);
    let below = if d == 0 {
        0
    } else {
        binomial(n + d - 1, d - 1)
    };
    // Rank within degree d in the lexicographically descending order used by
    // `monomials`: count exponents of degree d that precede alpha.
    let mut rank = 0;
    let mut left = d;
    for i in 0..n.saturating_sub(1) {
        let rest_vars = n - i - 1;
        for k in (alpha[i] as usize + 1..=left).rev() {
            rank += binomial(left - k + rest_vars - 1, rest_vars - 1);
        }
        left -= alpha[i] as usize;
    }
    below + rank
}
