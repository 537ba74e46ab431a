//! Gauss-Legendre rules, rules on the unit sphere, and weighted node sets.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `(node, weight)` pairs mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Cached `order`-point Gauss-Legendre rule.
pub fn gauss_legendre(order: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("nonzero"));
            let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(GaussRule {
                nodes: pairs.iter().map(|p| p.0).collect(),
                weights: pairs.iter().map(|p| p.1).collect(),
            })
        })
        .clone()
}

/// Points in ℝⁿ with weights, stored flat.
#[derive(Clone, Debug, Default)]
pub struct NodeSet {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn new(dim: usize) -> Self {
        NodeSet {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.points.extend_from_slice(x);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_k f(x_k)` with a pairwise reduction, so the result does not
    /// depend on how the work was split.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let vals: Vec<f64> = self.iter().map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&vals)
    }

    /// [`NodeSet::integrate`] with the integrand evaluated in parallel; the
    /// reduction order is the same, so the result is identical.
    pub fn integrate_par(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let vals: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|k| self.weights[k] * f(self.point(k)))
            .collect();
        pairwise_sum(&vals)
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Quadrature on the unit sphere S^{n-1} with weights summing to its area.
///
/// `order` controls resolution: the azimuthal angle uses `2·order` equispaced
/// points and each further polar angle `order` Gauss points, so monomials of
/// degree below `2·order` are integrated exactly.
pub fn sphere_rule(n: usize, order: usize) -> NodeSet {
    let mut set = NodeSet::new(n);
    match n {
        1 => {
            set.push(&[1.0], 1.0);
            set.push(&[-1.0], 1.0);
        }
        2 => {
            let m = 2 * order;
            for k in 0..m {
                let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                set.push(&[phi.cos(), phi.sin()], 2.0 * PI / m as f64);
            }
        }
        3 => {
            // Gauss in cos(polar angle) is exact for polynomials in z.
            let gl = gauss_legendre(order);
            let circle = sphere_rule(2, order);
            for (t, wt) in gl.on(-1.0, 1.0) {
                let s = (1.0 - t * t).sqrt();
                for (e, we) in circle.iter() {
                    set.push(&[s * e[0], s * e[1], t], wt * we);
                }
            }
        }
        _ => {
            // S^{n-1} ∋ (t, √(1−t²) ω) with dσ = (1−t²)^{(n−3)/2} dt dσ'(ω);
            // Gauss-Jacobi absorbs the weight exactly.
            let a = FiniteAboveNegOneF64::new((n as f64 - 3.0) / 2.0).expect("exponent above -1");
            let rule = GaussJacobi::new(NonZeroUsize::new(order.max(1)).expect("nonzero"), a, a);
            let lower = sphere_rule(n - 1, order);
            let mut x = vec![0.0; n];
            for &(t, wt) in rule.as_node_weight_pairs() {
                let s = (1.0 - t * t).sqrt();
                for (e, we) in lower.iter() {
                    x[0] = t;
                    for (xi, ei) in x[1..].iter_mut().zip(e) {
                        *xi = s * ei;
                    }
                    set.push(&x, wt * we);
                }
            }
        }
    }
    set
}

/// Area of the unit sphere S^{n-1}.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume of the unit ball in ℝⁿ.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// `Γ(k/2)` for a positive integer `k`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let mut g = if k.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut m = if k.is_multiple_of(2) { 2 } else { 1 };
    while m < k {
        g *= m as f64 / 2.0;
        m += 2;
    }
    g
}

/// `∫_{S^{n-1}} ω^α dσ(ω)`, zero unless every exponent is even.
pub fn sphere_monomial_integral(alpha: &[u8]) -> f64 {
    if alpha.iter().any(|&a| a % 2 == 1) {
        return 0.0;
    }
    let n = alpha.len();
    let total: usize = alpha.iter().map(|&a| a as usize).sum();
    let num: f64 = alpha.iter().map(|&a| gamma_half(a as usize + 1)).product();
    2.0 * num / gamma_half(total + n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let g = gauss_legendre(5);
        let s: f64 = g.on(0.0, 2.0).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-11);
        assert_eq!(g.len(), 5);
        assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn sphere_areas_and_ball_volumes() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(sphere_area(1), 2.0);
    }

    #[test]
    fn sphere_rules_match_closed_form_moments() {
        for n in 1..=5 {
            let rule = sphere_rule(n, 10);
            assert!((rule.total_weight() - sphere_area(n)).abs() < 1e-12 * sphere_area(n));
            for alpha in crate::poly::monomials(n, 6) {
                let exact = sphere_monomial_integral(&alpha[..n]);
                let q = rule.integrate(|x| {
                    x.iter()
                        .zip(&alpha)
                        .map(|(xi, &a)| xi.powi(a as i32))
                        .product()
                });
                assert!(
                    (q - exact).abs() < 1e-12,
                    "n={n} alpha={alpha:?}: {q} vs {exact}"
                );
            }
        }
    }
}
