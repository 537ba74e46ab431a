//! The Bogovskiĭ-type operator
//!
//! `𝙱_ℓ u(x) = ∫ θ(z) ∫₁^{T(x,z)} t^{ℓ−1} (z − x) ⌟ u(z + t(x − z)) dt dz`,
//!
//! where `T(x, z)` is the exit parameter of the ray from `z` through `x`.
//!
//! The `z` integral has a weak singularity at `z = x`. The default
//! [`RayMode::Polar`] removes it: writing `z = x − ρe` and the ray point as
//! `y = x + re` turns `t^{ℓ−1} dt dz` into `(ρ + r)^{ℓ−1} ρ^{n−ℓ} dr dρ dσ(e)`,
//! a bounded integrand, so plain Gauss rules in `ρ` and `r` and a sphere rule
//! in `e` converge rapidly. [`RayMode::ZNodes`] keeps a fixed rule in `z`,
//! integrates along each ray with `t = 1 + (T−1)τ²`, and covers the excluded
//! ball `|z − x| ≤ δ` with the polar rule.

use crate::error::{Error, Result};
use crate::exterior::FormValue;
use crate::field::{FormField, FormJet};
use crate::geometry::{dist2, norm, Ball, StarDomain};
use crate::mollifier::{Mollifier, Variant};
use crate::quadrature::{gauss_legendre, sphere_rule, NodeSet};

/// How the `z` integral is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayMode {
    Polar,
    ZNodes,
}

/// Quadrature orders for the ray integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RayOrders {
    /// Sphere-rule order for the direction `e` (2·order directions in 2D).
    pub angular: usize,
    /// Gauss points in `ρ = |x − z|` across the mollifier ball.
    pub radial: usize,
    /// Gauss points along the ray.
    pub ray: usize,
}

impl RayOrders {
    pub const PRODUCTION: RayOrders = RayOrders {
        angular: 32,
        radial: 32,
        ray: 32,
    };

    pub fn uniform(order: usize) -> Self {
        RayOrders {
            angular: order,
            radial: order,
            ray: order,
        }
    }
}

/// The Bogovskiĭ operator on one star-shaped domain.
#[derive(Clone, Debug)]
pub struct BogovskiiConfig {
    mollifier: Mollifier,
    domain: StarDomain,
    convex: bool,
    orders: RayOrders,
    mode: RayMode,
    cutoff: f64,
    sphere: NodeSet,
    z_nodes: NodeSet,
}

/// Weight and geometry handed to the integrand at one quadrature node.
struct RayNode<'a> {
    /// Unit direction from `z` to `x`.
    e: &'a [f64],
    z: &'a [f64],
    y: &'a [f64],
    /// Quadrature weight including the kernel factor, excluding `φ(z)`.
    w: f64,
}

impl BogovskiiConfig {
    /// The operator with the mollifier filling the domain's inscribed ball.
    pub fn new(domain: StarDomain) -> Result<Self> {
        let mollifier = Mollifier::new(&domain.ball.center, domain.ball.radius)?;
        Self::with_mollifier(domain, mollifier)
    }

    pub fn with_mollifier(domain: StarDomain, mollifier: Mollifier) -> Result<Self> {
        if mollifier.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: mollifier.dim(),
            });
        }
        let gap = dist2(mollifier.center(), &domain.ball.center).sqrt() + mollifier.radius();
        if gap > domain.ball.radius * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(
                "mollifier support must lie inside the inscribed ball".into(),
            ));
        }
        let convex = domain.shape.is_convex();
        let cutoff = 1e-3 * 2.0 * domain.ball.radius;
        let mut cfg = BogovskiiConfig {
            mollifier,
            domain,
            convex,
            orders: RayOrders::PRODUCTION,
            mode: RayMode::Polar,
            cutoff,
            sphere: NodeSet::default(),
            z_nodes: NodeSet::default(),
        };
        cfg.rebuild();
        Ok(cfg)
    }

    fn rebuild(&mut self) {
        self.sphere = sphere_rule(self.dim(), self.orders.angular);
        self.z_nodes = match self.mode {
            RayMode::Polar => NodeSet::default(),
            RayMode::ZNodes => self
                .mollifier
                .weighted_nodes_with(self.orders.radial, self.orders.angular),
        };
    }

    pub fn with_orders(mut self, orders: RayOrders) -> Self {
        self.orders = orders;
        self.rebuild();
        self
    }

    pub fn with_mode(mut self, mode: RayMode) -> Self {
        self.mode = mode;
        self.rebuild();
        self
    }

    /// Exclusion radius `δ` around `x` used by [`RayMode::ZNodes`].
    pub fn with_cutoff(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be positive, got {delta}"
            )));
        }
        self.cutoff = delta;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn orders(&self) -> RayOrders {
        self.orders
    }

    pub fn mode(&self) -> RayMode {
        self.mode
    }

    /// Distance along `e` from `z ∈ B` to `∂Ω`.
    fn exit_from(&self, z: &[f64], e: &[f64]) -> f64 {
        self.domain.exit_distance(z, e)
    }

    /// Polar sweep about `x`: visits every node `(e, ρ, r)` with
    /// `z = x − ρe ∈ B`, `ρ < rho_max` and `y = x + re` on the part of the ray
    /// inside `Ω` (and inside `support`, when given). The weight carries the
    /// kernel `(ρ + r)^a ρ^b`.
    fn polar_sweep(
        &self,
        x: &[f64],
        a: i32,
        b: i32,
        rho_max: f64,
        support: Option<&Ball>,
        visit: &mut dyn FnMut(&RayNode),
    ) {
        let n = self.dim();
        if self.convex && !self.domain.contains(x) {
            return;
        }
        let ball = Ball::new(self.mollifier.center(), self.mollifier.radius());
        let rho_rule = gauss_legendre(self.orders.radial);
        let ray_rule = gauss_legendre(self.orders.ray);
        let mut back = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut y = vec![0.0; n];
        for (e, we) in self.sphere.iter() {
            for i in 0..n {
                back[i] = -e[i];
            }
            let Some((r0, r1)) = ball.chord(x, &back) else {
                continue;
            };
            let (rho_lo, rho_hi) = (r0.max(0.0), r1.min(rho_max));
            if rho_hi <= rho_lo {
                continue;
            }
            let (s_lo, s_hi) = match support {
                Some(s) => match s.chord(x, e) {
                    Some((lo, hi)) => (lo.max(0.0), hi),
                    None => continue,
                },
                None => (0.0, f64::INFINITY),
            };
            if s_hi <= s_lo {
                continue;
            }
            let convex_len = if self.convex {
                Some(self.exit_from(x, e))
            } else {
                None
            };
            for (rho, wr) in rho_rule.on(rho_lo, rho_hi) {
                for i in 0..n {
                    z[i] = x[i] - rho * e[i];
                }
                let len = match convex_len {
                    Some(l) => l,
                    None => self.exit_from(&z, e) - rho,
                };
                let (lo, hi) = (s_lo, len.min(s_hi));
                if hi <= lo {
                    continue;
                }
                let radial = rho.powi(b);
                for (tau, wt) in ray_rule.on(0.0, 1.0) {
                    let r = lo + (hi - lo) * tau * tau;
                    let dr = 2.0 * (hi - lo) * tau * wt;
                    for i in 0..n {
                        y[i] = x[i] + r * e[i];
                    }
                    let w = we * wr * dr * (rho + r).powi(a) * radial;
                    visit(&RayNode { e, z: &z, y: &y, w });
                }
            }
        }
    }

    /// Ray sweep over the θ-weighted `z` rule, skipping `|z − x| ≤ δ`. The
    /// polar kernel `(ρ+r)^a ρ^b dr dρ dσ` equals `t^a ρ^{a+b+1−n} ds dz` with
    /// `y = z + s e`, `t = s/ρ`, which is what each node receives.
    fn node_sweep(
        &self,
        x: &[f64],
        a: i32,
        b: i32,
        support: Option<&Ball>,
        visit: &mut dyn FnMut(&RayNode),
    ) {
        let n = self.dim();
        let ray_rule = gauss_legendre(self.orders.ray);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        if self.convex && !self.domain.contains(x) {
            return;
        }
        for (z, wz) in self.z_nodes.iter() {
            let rho = dist2(x, z).sqrt();
            if rho <= self.cutoff {
                continue;
            }
            for i in 0..n {
                e[i] = (x[i] - z[i]) / rho;
            }
            // Ray from z: y = z + s e with s = tρ; the domain part is s < exit.
            let exit = self.exit_from(z, &e);
            let (mut lo, mut hi) = (rho, exit);
            if let Some(s) = support {
                match s.chord(z, &e) {
                    Some((a0, a1)) => {
                        lo = lo.max(a0);
                        hi = hi.min(a1);
                    }
                    None => continue,
                }
            }
            if hi <= lo {
                continue;
            }
            for (tau, wt) in ray_rule.on(0.0, 1.0) {
                let s = lo + (hi - lo) * tau * tau;
                let ds = 2.0 * (hi - lo) * tau * wt;
                for i in 0..n {
                    y[i] = z[i] + s * e[i];
                }
                let w = wz * (s / rho).powi(a) * rho.powi(a + b + 1 - n as i32) * ds;
                visit(&RayNode { e: &e, z, y: &y, w });
            }
        }
    }

    /// Runs the configured sweep; `φ(z)` is applied by the caller.
    fn sweep(
        &self,
        x: &[f64],
        a: i32,
        b: i32,
        support: Option<&Ball>,
        visit: &mut dyn FnMut(&RayNode, bool),
    ) {
        match self.mode {
            RayMode::Polar => self.polar_sweep(x, a, b, f64::INFINITY, support, &mut |node| {
                visit(node, false)
            }),
            RayMode::ZNodes => {
                self.node_sweep(x, a, b, support, &mut |node| visit(node, true));
                self.polar_sweep(x, a, b, self.cutoff, support, &mut |node| {
                    visit(node, false)
                });
            }
        }
    }

    fn check_input(&self, u: &dyn FormField, x: &[f64]) -> Result<usize> {
        let n = self.dim();
        if u.dim() != n || x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if u.dim() != n { u.dim() } else { x.len() },
            });
        }
        if u.degree() == 0 {
            return Err(Error::ContractScalar);
        }
        Ok(u.degree())
    }

    /// `𝙱_ℓ u(x)`. Values of `u` outside `Ω` are never sampled.
    pub fn apply(&self, u: &dyn FormField, x: &[f64]) -> Result<FormValue> {
        let l = self.check_input(u, x)?;
        let n = self.dim();
        let (a, b) = (l as i32 - 1, (n - l) as i32);
        let mut out = FormValue::zero(n, l - 1);
        let mut val = FormValue::zero(n, l);
        self.sweep(x, a, b, u.support(), &mut |node, weighted| {
            let theta = if weighted {
                1.0
            } else {
                self.mollifier.eval(node.z)
            };
            if theta == 0.0 {
                return;
            }
            u.value_into(node.y, &mut val);
            val.contract_into(node.e, -theta * node.w, &mut out);
        });
        Ok(out)
    }

    /// `𝙱_ℓ u` and its first partials at `x`, differentiating under the
    /// integral. Valid for inputs that vanish near `∂Ω`, which is what
    /// [`FormField::support`] must certify.
    pub fn apply_jet(&self, u: &dyn FormField, x: &[f64]) -> Result<FormJet> {
        let l = self.check_input(u, x)?;
        let Some(support) = u.support() else {
            return Err(Error::InvalidParameter(
                "differentiating under the integral needs a compactly supported input".into(),
            ));
        };
        if self.mode != RayMode::Polar {
            return Err(Error::InvalidParameter(
                "analytic derivatives need the polar mode".into(),
            ));
        }
        let n = self.dim();
        let (a, b) = (l as i32 - 1, (n - l) as i32);
        let mut out = FormJet::zero(n, l - 1);
        self.polar_sweep(x, a, b, f64::INFINITY, Some(support), &mut |node| {
            let theta = self.mollifier.jet(node.z);
            if theta.value == 0.0 {
                return;
            }
            let uj = u.jet(node.y);
            // z = x − ρe moves with x at fixed (ρ, e), as does y = x + re.
            uj.value
                .contract_into(node.e, -theta.value * node.w, &mut out.value);
            for j in 0..n {
                uj.value
                    .contract_into(node.e, -theta.grad[j] * node.w, &mut out.partials[j]);
                uj.partials[j].contract_into(node.e, -theta.value * node.w, &mut out.partials[j]);
            }
        });
        Ok(out)
    }

    /// The scalar operator `Q_ℓ f(x) = −∫ θ(ρ+r)^{ℓ−1} ρ^{n−ℓ} e_m f(x+re)`,
    /// i.e. the `e^m`-slot of `𝙱_ℓ` applied to `f`.
    pub fn scalar_q(&self, l: usize, m: usize, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        self.sweep(
            x,
            l as i32 - 1,
            (n - l) as i32,
            None,
            &mut |node, weighted| {
                let theta = if weighted {
                    1.0
                } else {
                    self.mollifier.eval(node.z)
                };
                total -= theta * node.w * node.e[m - 1] * f(node.y);
            },
        );
        total
    }

    /// `Q_i^ℓ v(x) = ∫₀¹ (1−s)^{n−ℓ} ∫ φ_i(y + (x−y)/s) v(y) dy ds/sⁿ`, whose
    /// polar kernel is `(ρ + r)^{ℓ−2} ρ^{n−ℓ}`.
    pub fn component_q(
        &self,
        variant: Variant,
        l: usize,
        v: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
    ) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        self.sweep(
            x,
            l as i32 - 2,
            (n - l) as i32,
            None,
            &mut |node, weighted| {
                let theta = if weighted {
                    1.0
                } else {
                    self.mollifier.eval(node.z)
                };
                let phi = match variant {
                    Variant::Theta => theta,
                    Variant::ZTheta(m) => theta * node.z[m - 1],
                };
                total += phi * node.w * v(node.y);
            },
        );
        total
    }

    /// `𝙱_ℓ u(x)` from the `s`-parametrised rewrite
    /// `∫₀¹ (1−s)^{n−ℓ} ∫ θ(y + (x−y)/s) ((x−y)/s) ⌟ u(y) dy ds/sⁿ`, with `y`
    /// reached from the mollifier ball through `y = (x − sz)/(1−s)` at each
    /// fixed `s`. Only meant for `x` away from the ball, where the `s` range is
    /// bounded away from 1 and no singularity is present.
    pub fn apply_rewrite(&self, u: &dyn FormField, x: &[f64], s_order: usize) -> Result<FormValue> {
        let l = self.check_input(u, x)?;
        let n = self.dim();
        let nodes = self.mollifier.weighted_nodes();
        let rule = gauss_legendre(s_order);
        let mut out = FormValue::zero(n, l - 1);
        let mut val = FormValue::zero(n, l);
        let mut y = vec![0.0; n];
        let mut lever = vec![0.0; n];
        for (z, wz) in nodes.iter() {
            if dist2(x, z) == 0.0 {
                return Err(Error::DegenerateRay);
            }
            let t_max = match self.domain.ray_exit(z, x) {
                Ok(t) => t,
                Err(Error::PointOutsideDomain) => continue,
                Err(e) => return Err(e),
            };
            let s_max = 1.0 - 1.0 / t_max;
            for i in 0..n {
                lever[i] = z[i] - x[i];
            }
            for (s, ws) in rule.on(0.0, s_max) {
                for i in 0..n {
                    y[i] = (x[i] - s * z[i]) / (1.0 - s);
                }
                // (x−y)/s = (z−x)/(1−s), and dy/sⁿ = dz/(1−s)ⁿ.
                u.value_into(&y, &mut val);
                val.contract_into(&lever, wz * ws * (1.0 - s).powi(-(l as i32) - 1), &mut out);
            }
        }
        Ok(out)
    }

    /// `d(𝙱_ℓ u)(x)` by central differences with one Richardson step.
    pub fn fd_derivative(&self, u: &dyn FormField, x: &[f64], h: f64) -> Result<FormJet> {
        let n = self.dim();
        let max = 0.01 * self.domain.diameter();
        if !(h > 0.0) || h > max {
            return Err(Error::StepTooLarge { h, max });
        }
        let value = self.apply(u, x)?;
        let mut partials = Vec::with_capacity(n);
        let mut xs = x.to_vec();
        for j in 0..n {
            let mut central = |step: f64| -> Result<FormValue> {
                xs[j] = x[j] + step;
                let plus = self.apply(u, &xs)?;
                xs[j] = x[j] - step;
                let minus = self.apply(u, &xs)?;
                xs[j] = x[j];
                Ok((&plus - &minus).scaled(0.5 / step))
            };
            let coarse = central(h)?;
            let fine = central(0.5 * h)?;
            partials.push(&fine.scaled(4.0 / 3.0) - &coarse.scaled(1.0 / 3.0));
        }
        Ok(FormJet { value, partials })
    }

    /// `max_x |d𝙱_ℓ u(x) − u(x)| / max_x |u(x)|` over the sample points, with
    /// `d𝙱_ℓ u` from [`BogovskiiConfig::fd_derivative`].
    pub fn exactness_residual(
        &self,
        u: &dyn FormField,
        points: &[Vec<f64>],
        h: f64,
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for x in points {
            let jet = self.fd_derivative(u, x, h)?;
            let d = jet
                .exterior_derivative()
                .ok_or(Error::TopDegreeDerivative)?;
            let target = u.value(x);
            worst = worst.max((&d - &target).max_abs());
            scale = scale.max(target.max_abs());
        }
        Ok(if scale == 0.0 { worst } else { worst / scale })
    }
}

/// `𝙱_ℓ u` as a field. Derivatives come from differentiating under the
/// integral when the input is compactly supported, otherwise from central
/// differences with step `fd_step`.
pub struct BogovskiiField<'a> {
    pub cfg: &'a BogovskiiConfig,
    pub input: &'a dyn FormField,
    pub fd_step: f64,
}

impl<'a> BogovskiiField<'a> {
    pub fn new(cfg: &'a BogovskiiConfig, input: &'a dyn FormField) -> Self {
        BogovskiiField {
            cfg,
            input,
            fd_step: 1e-4 * cfg.domain.diameter(),
        }
    }
}

impl FormField for BogovskiiField<'_> {
    fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn degree(&self) -> usize {
        self.input.degree() - 1
    }

    fn value(&self, x: &[f64]) -> FormValue {
        self.cfg
            .apply(self.input, x)
            .expect("input checked at construction")
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        if self.input.support().is_some() && self.cfg.mode == RayMode::Polar {
            return self.cfg.apply_jet(self.input, x).expect("compact input");
        }
        let n = self.dim();
        let h = self.fd_step;
        let mut xs = x.to_vec();
        let partials = (0..n)
            .map(|j| {
                xs[j] = x[j] + h;
                let plus = self.value(&xs);
                xs[j] = x[j] - h;
                let minus = self.value(&xs);
                xs[j] = x[j];
                (&plus - &minus).scaled(0.5 / h)
            })
            .collect();
        FormJet {
            value: self.value(x),
            partials,
        }
    }
}

/// Distance from `x` to the convex hull of two balls; zero inside.
pub fn hull_distance(x: &[f64], a: &Ball, b: &Ball) -> f64 {
    // The hull is the union of the balls B((1−λ)c_a + λc_b, (1−λ)r_a + λr_b),
    // and the signed gap is convex in λ.
    let gap = |lam: f64| {
        let c: Vec<f64> = a
            .center
            .iter()
            .zip(&b.center)
            .map(|(p, q)| (1.0 - lam) * p + lam * q)
            .collect();
        let r = (1.0 - lam) * a.radius + lam * b.radius;
        norm(&x.iter().zip(&c).map(|(p, q)| p - q).collect::<Vec<_>>()) - r
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if gap(m1) < gap(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    gap(0.5 * (lo + hi)).min(gap(0.0)).min(gap(1.0)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffForm;
    use crate::exterior::IndexTuple;
    use crate::field::PolyField;
    use crate::poly::{MultiPoly, PolyForm};

    fn disk() -> StarDomain {
        StarDomain::ball(&[0.0, 0.0], 1.0, 0.5).unwrap()
    }

    fn bump_pair(seed: u64) -> CutoffForm {
        let p = PolyForm::random(2, 0, 2, seed).unwrap();
        CutoffForm::new(Ball::new(&[0.2, 0.1], 0.6), p)
    }

    #[test]
    fn one_dimensional_oracle() {
        let dom = StarDomain::ball(&[0.5], 0.5, 0.3).unwrap();
        let cfg = BogovskiiConfig::new(dom)
            .unwrap()
            .with_orders(RayOrders::uniform(48));
        let u = PolyField::new(PolyForm::monomial_form(
            1,
            IndexTuple::single(1),
            MultiPoly::from_terms(1, [([1, 0, 0, 0, 0, 0], 2.0), ([0; 6], -1.0)]),
        ));
        for x in [0.1, 0.25, 0.5, 0.8, 0.95] {
            let v = cfg.apply(&u, &[x]).unwrap().coeffs()[0];
            assert!((v - (x * x - x)).abs() < 1e-3, "x={x}: {v}");
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let cfg = BogovskiiConfig::new(disk())
            .unwrap()
            .with_orders(RayOrders::uniform(8));
        let u = PolyField::new(PolyForm::zero(2, 1));
        assert!(cfg.apply(&u, &[0.3, 0.2]).unwrap().is_zero());
    }

    #[test]
    fn linear_in_the_input() {
        let cfg = BogovskiiConfig::new(disk())
            .unwrap()
            .with_orders(RayOrders::uniform(12));
        let u = PolyForm::random(2, 1, 2, 3).unwrap();
        let a = cfg.apply(&PolyField::new(u.clone()), &[0.1, -0.4]).unwrap();
        let b = cfg
            .apply(&PolyField::new(u.scale(-2.5)), &[0.1, -0.4])
            .unwrap();
        assert!((&b - &a.scaled(-2.5)).max_abs() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn exact_on_compactly_supported_closed_forms() {
        let cfg = BogovskiiConfig::new(disk()).unwrap();
        let w = bump_pair(1);
        let u = w.derivative().unwrap();
        let pts = vec![vec![0.2, 0.1], vec![0.5, -0.2], vec![-0.3, 0.4]];
        let res = cfg.exactness_residual(&u, &pts, 0.01).unwrap();
        assert!(res < 5e-3, "residual {res}");
    }

    #[test]
    fn analytic_jet_matches_differences() {
        // For ℓ = 1 the gradient of 𝙱u is u itself, which both must reproduce.
        let cfg = BogovskiiConfig::new(disk())
            .unwrap()
            .with_orders(RayOrders::uniform(24));
        let u = bump_pair(2).derivative().unwrap();
        let x = [0.25, -0.3];
        let jet = cfg.apply_jet(&u, &x).unwrap();
        let fd = cfg.fd_derivative(&u, &x, 0.005).unwrap();
        let target = u.value(&x);
        for d in [&jet, &fd] {
            let du = d.exterior_derivative().unwrap();
            assert!((&du - &target).max_abs() < 1e-4 * target.max_abs());
        }
        assert!((&jet.value - &fd.value).max_abs() < 1e-14);
    }

    #[test]
    fn node_mode_agrees_with_polar_mode() {
        let cfg = BogovskiiConfig::new(disk())
            .unwrap()
            .with_orders(RayOrders::uniform(32));
        let nodes = cfg.clone().with_mode(RayMode::ZNodes);
        let u = bump_pair(5).derivative().unwrap();
        for x in [[0.8, 0.1], [0.1, 0.2]] {
            let a = cfg.apply(&u, &x).unwrap();
            let b = nodes.apply(&u, &x).unwrap();
            assert!(
                (&a - &b).max_abs() < 1e-3 * a.max_abs().max(1e-3),
                "{a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn rewrite_agrees_away_from_the_ball() {
        let cfg = BogovskiiConfig::new(disk()).unwrap();
        let u = bump_pair(6).derivative().unwrap();
        let x = [0.75, 0.2];
        let a = cfg.apply(&u, &x).unwrap();
        let b = cfg.apply_rewrite(&u, &x, 64).unwrap();
        assert!((&a - &b).max_abs() < 1e-4 * a.max_abs(), "{a:?} vs {b:?}");
    }

    #[test]
    fn component_identity() {
        let cfg = BogovskiiConfig::new(disk())
            .unwrap()
            .with_orders(RayOrders::uniform(24));
        let f = |y: &[f64]| 1.0 + y[0] - 0.5 * y[1] * y[1];
        let x = [0.3, 0.55];
        for l in 1..=2 {
            for m in 1..=2 {
                let q = cfg.scalar_q(l, m, &f, &x);
                let g = |y: &[f64]| y[m - 1] * f(y);
                let rhs = -cfg.component_q(Variant::Theta, l, &g, &x)
                    + cfg.component_q(Variant::ZTheta(m), l, &f, &x);
                assert!(
                    (q - rhs).abs() <= 2e-3 * q.abs().max(1e-12),
                    "l={l} m={m}: {q} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn hull_distance_of_two_balls() {
        let a = Ball::new(&[0.0, 0.0], 0.5);
        let b = Ball::new(&[2.0, 0.0], 0.5);
        assert_eq!(hull_distance(&[1.0, 0.3], &a, &b), 0.0);
        assert!((hull_distance(&[1.0, 1.5], &a, &b) - 1.0).abs() < 1e-9);
        assert!((hull_distance(&[-1.0, 0.0], &a, &b) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn step_limit_enforced() {
        let cfg = BogovskiiConfig::new(disk()).unwrap();
        let u = bump_pair(1).derivative().unwrap();
        assert!(matches!(
            cfg.fd_derivative(&u, &[0.0, 0.0], 0.05),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
