//! Chains of overlapping stadium links along the `x₁`-axis, a partition of
//! unity subordinate to them, and the two constructions that glue local
//! primitives into a global one.
//!
//! Links are stadiums (cigars) whose straight parts overlap, so every overlap
//! is again a stadium and the union is one long stadium. The partition of
//! unity varies only in `x₁`: complementary quintic ramps across each
//! straight overlap slab, inset from its ends so that `φ_i` vanishes near
//! the part of `∂Ω_i` that lies inside `Ω`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bogovskii::{BogovskiiConfig, RayOrders};
use crate::constants::{
    chain_bound, estimate_empirical_ratio, h1_bound, measured_kp, member_seed, ChainConstants,
    EstimateConfig, OperatorKind,
};
use crate::error::{Error, Result};
use crate::exterior::FormValue;
use crate::field::{
    h1_from_jets, l2_from_jets, l2_norm, node_jets, FormField, FormJet, Jet, JetLevels, PolyField,
    Refined,
};
use crate::geometry::{Ball, StarDomain};
use crate::mollifier::{Mollifier, DEFAULT_QUAD_ORDER};
use crate::poincare::PoincareConfig;
use crate::poly::PolyForm;
use crate::quadrature::{pairwise_sum, NodeSet};
use crate::tabulated::TabulatedField;

/// Geometry of a chain of congruent stadium links.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub n: usize,
    pub links: usize,
    /// Tube radius of every link.
    pub radius: f64,
    /// Half the length of a link's straight part.
    pub half_length: f64,
    /// Width of the straight overlap as a fraction of the straight part.
    pub overlap: f64,
    /// Radius of each link's inscribed ball relative to the tube radius.
    pub ball_fraction: f64,
    /// Ramp inset at each end of an overlap slab, relative to its width.
    pub inset: f64,
    /// Random points used by the sampled invariant checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            n: 2,
            links: 2,
            radius: 1.0,
            half_length: 2.0,
            overlap: 0.2,
            ball_fraction: 0.9,
            inset: 0.02,
            samples: 4000,
            seed: 7,
        }
    }
}

/// `S(t) = 6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`, with two derivatives.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let s1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let s2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (s, s1, s2)
    }
}

/// Partition of unity built from 1-D ramps along `x₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOfUnity {
    n: usize,
    /// `[a_k, b_k]` over which the weight moves from link `k` to link `k+1`.
    ramps: Vec<(f64, f64)>,
}

impl PartitionOfUnity {
    pub fn new(n: usize, ramps: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(a, b)) in ramps.iter().enumerate() {
            if !(a < b) {
                return Err(Error::ChainInvariant(format!(
                    "ramp {k} is empty: [{a}, {b}]"
                )));
            }
            if k > 0 && ramps[k - 1].1 > a {
                return Err(Error::ChainInvariant(format!(
                    "ramps {} and {k} overlap or are out of order",
                    k - 1
                )));
            }
        }
        Ok(PartitionOfUnity { n, ramps })
    }

    /// Number of functions.
    pub fn len(&self) -> usize {
        self.ramps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ramps(&self) -> &[(f64, f64)] {
        &self.ramps
    }

    fn ramp_jet(&self, k: usize, x: &[f64], flip: bool) -> Jet {
        let (a, b) = self.ramps[k];
        let w = b - a;
        let (s, s1, s2) = smoothstep((x[0] - a) / w);
        let mut j = Jet::zero(self.n);
        let sign = if flip { -1.0 } else { 1.0 };
        j.value = if flip { 1.0 - s } else { s };
        j.grad[0] = sign * s1 / w;
        j.hess[0][0] = sign * s2 / (w * w);
        j
    }

    /// `φ_i` with its gradient and Hessian (0-based `i`).
    pub fn phi(&self, i: usize, x: &[f64]) -> Jet {
        let mut j = Jet::constant(self.n, 1.0);
        if i > 0 {
            j = j.mul(&self.ramp_jet(i - 1, x, false));
        }
        if i < self.ramps.len() {
            j = j.mul(&self.ramp_jet(i, x, true));
        }
        j
    }
}

/// A validated chain `Ω = Ω₁ ∪ … ∪ Ω_N`.
#[derive(Clone, Debug)]
pub struct ChainDecomposition {
    spec: ChainSpec,
    centers: Vec<f64>,
    links: Vec<StarDomain>,
    overlaps: Vec<StarDomain>,
    union: StarDomain,
    pou: PartitionOfUnity,
    /// `d_i = min(diam Ω_{i−1/2}, diam Ω_{i+1/2})`.
    d: Vec<f64>,
    c_s: f64,
}

fn axis_point(n: usize, x1: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[0] = x1;
    p
}

fn stadium(n: usize, from: f64, to: f64, radius: f64, ball: f64) -> Result<StarDomain> {
    StarDomain::cigar(&axis_point(n, from), &axis_point(n, to), radius, ball)
}

/// Builds the chain described by `spec` and checks every assumption on it by
/// sampling.
pub fn build_chain(spec: &ChainSpec) -> Result<ChainDecomposition> {
    let n = spec.n;
    crate::exterior::check_dim(n)?;
    if n < 2 {
        return Err(Error::InvalidParameter(
            "chains need at least two dimensions".into(),
        ));
    }
    if spec.links < 2 {
        return Err(Error::InvalidParameter(format!(
            "a chain needs at least two links, got {}",
            spec.links
        )));
    }
    if !(spec.overlap > 0.0 && spec.overlap < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction {} outside (0, 1/2)",
            spec.overlap
        )));
    }
    if !(spec.radius > 0.0) || !(spec.ball_fraction > 0.0 && spec.ball_fraction <= 1.0) {
        return Err(Error::InvalidParameter(
            "link radius and ball fraction must be positive".into(),
        ));
    }
    if !(spec.inset >= 0.0 && spec.inset < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "ramp inset {} outside [0, 1/2)",
            spec.inset
        )));
    }
    let (r, l) = (spec.radius, spec.half_length);
    if !(l > 0.0) {
        return Err(Error::ChainInvariant(
            "links without a straight part cannot carry the partition of unity: \
             the overlap boundaries cross the outer boundary transversally"
                .into(),
        ));
    }
    let width = 2.0 * l * spec.overlap;
    let spacing = 2.0 * l - width;
    let centers: Vec<f64> = (0..spec.links).map(|i| i as f64 * spacing).collect();
    if spec.links > 2 && 2.0 * spacing <= 2.0 * (l + r) {
        let x1 = 0.5 * (centers[0] + centers[2]);
        return Err(Error::ChainInvariant(format!(
            "links 1 and 3 intersect, e.g. at {:?}",
            axis_point(n, x1)
        )));
    }
    let links: Vec<StarDomain> = centers
        .iter()
        .map(|&c| stadium(n, c - l, c + l, r, spec.ball_fraction * r))
        .collect::<Result<_>>()?;
    // The intersection of two collinear stadiums is the stadium over the
    // intersection of their segments.
    let overlaps: Vec<StarDomain> = centers
        .windows(2)
        .map(|p| stadium(n, p[1] - l, p[0] + l, r, spec.ball_fraction * r))
        .collect::<Result<_>>()?;
    let union = stadium(
        n,
        centers[0] - l,
        centers[spec.links - 1] + l,
        r,
        spec.ball_fraction * r,
    )?;
    let inset = spec.inset * width;
    let ramps = centers
        .windows(2)
        .map(|p| (p[1] - l + inset, p[0] + l - inset))
        .collect();
    let pou = PartitionOfUnity::new(n, ramps)?;
    let overlap_diam: Vec<f64> = overlaps.iter().map(|o| o.diameter()).collect();
    let d = (0..spec.links)
        .map(|i| {
            let left = if i > 0 {
                overlap_diam[i - 1]
            } else {
                f64::INFINITY
            };
            let right = overlap_diam.get(i).copied().unwrap_or(f64::INFINITY);
            left.min(right)
        })
        .collect();
    let mut chain = ChainDecomposition {
        spec: spec.clone(),
        centers,
        links,
        overlaps,
        union,
        pou,
        d,
        c_s: 0.0,
    };
    chain.verify()?;
    chain.c_s = chain.measure_c_s();
    Ok(chain)
}

impl ChainDecomposition {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self) -> &[StarDomain] {
        &self.links
    }

    pub fn overlaps(&self) -> &[StarDomain] {
        &self.overlaps
    }

    /// The whole domain, itself a stadium.
    pub fn union(&self) -> &StarDomain {
        &self.union
    }

    pub fn partition(&self) -> &PartitionOfUnity {
        &self.pou
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Measured `max_{i, |α| ≤ 2} sup |∂^α φ_i| d_i^{|α|}`.
    pub fn c_s(&self) -> f64 {
        self.c_s
    }

    /// Links, then overlaps: every piece `Ω_t`.
    pub fn pieces(&self) -> impl Iterator<Item = &StarDomain> {
        self.links.iter().chain(&self.overlaps)
    }

    /// The first link and the first overlap. All links are translates of
    /// one another, as are all overlaps, so per-piece constants measured on
    /// these two hold for every piece and do not depend on `N`.
    pub fn representatives(&self) -> [&StarDomain; 2] {
        [&self.links[0], &self.overlaps[0]]
    }

    fn containing(&self, x: &[f64]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.links[i].contains(x))
            .collect()
    }

    fn verify(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        for _ in 0..self.spec.samples {
            let x = self.union.sample_point(&mut rng);
            let owners = self.containing(&x);
            if owners.is_empty() {
                return Err(Error::ChainInvariant(format!(
                    "{x:?} lies in Ω but in no link"
                )));
            }
            if owners.len() > 2 || owners.windows(2).any(|p| p[1] - p[0] > 1) {
                return Err(Error::ChainInvariant(format!(
                    "links {owners:?} meet at {x:?}, but only neighbours may overlap"
                )));
            }
            for (k, o) in self.overlaps.iter().enumerate() {
                let both = self.links[k].contains(&x) && self.links[k + 1].contains(&x);
                if o.contains(&x) != both {
                    return Err(Error::ChainInvariant(format!(
                        "overlap {} disagrees with Ω_{} ∩ Ω_{} at {x:?}",
                        k + 1,
                        k + 1,
                        k + 2
                    )));
                }
            }
            let mut sum = 0.0;
            for i in 0..self.len() {
                let p = self.pou.phi(i, &x).value;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ChainInvariant(format!("φ_{} = {p} at {x:?}", i + 1)));
                }
                if p != 0.0 && !owners.contains(&i) {
                    return Err(Error::ChainInvariant(format!(
                        "φ_{} = {p} at {x:?}, outside Ω_{}",
                        i + 1,
                        i + 1
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::ChainInvariant(format!(
                    "partition sums to {sum} at {x:?}"
                )));
            }
        }
        let checks = (self.spec.samples / 10).max(50);
        for (t, piece) in self.pieces().enumerate() {
            if !piece
                .verify_star_shape(checks, self.spec.seed.wrapping_add(t as u64))
                .star_shaped
            {
                return Err(Error::ChainInvariant(format!(
                    "piece {t} is not star-shaped w.r.t. its ball"
                )));
            }
        }
        Ok(())
    }

    fn measure_c_s(&self) -> f64 {
        // φ_i depends on x₁ only, so a fine scan of Ω_i's extent along the
        // axis sees every value. The scan is fixed relative to the link
        // centre, which keeps the result independent of the chain length.
        let reach = self.spec.half_length + self.spec.radius;
        let steps = 8_000;
        let n = self.dim();
        let mut best: f64 = 0.0;
        for i in 0..self.len() {
            let d = self.d[i];
            for k in 0..=steps {
                let offset = -reach + 2.0 * reach * k as f64 / steps as f64;
                let j = self.pou.phi(i, &axis_point(n, self.centers[i] + offset));
                let grad = (0..n).map(|a| j.grad[a].abs()).fold(0.0, f64::max);
                let hess = (0..n)
                    .flat_map(|a| (0..n).map(move |b| (a, b)))
                    .map(|(a, b)| j.hess[a][b].abs())
                    .fold(0.0, f64::max);
                best = best.max(j.value.abs()).max(grad * d).max(hess * d * d);
            }
        }
        best
    }

    fn sample_in(&self, domain: &StarDomain, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| domain.sample_point(&mut rng)).collect()
    }

    /// Points of `∂Ω_i` that lie inside `Ω`, pulled inward by a relative
    /// `1e-9`: the far ends of the caps facing the neighbours.
    fn inner_boundary_points(&self, i: usize, per_cap: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let (r, l) = (self.spec.radius, self.spec.half_length);
        let c = self.centers[i];
        let mut pts = Vec::new();
        for (side, present) in [(1.0, i + 1 < self.len()), (-1.0, i > 0)] {
            if !present {
                continue;
            }
            for k in 0..per_cap {
                let angle = std::f64::consts::PI * ((k as f64 + 0.5) / per_cap as f64 - 0.5);
                let mut p = vec![0.0; n];
                p[0] = c + side * (l + r * (1.0 - 1e-9) * angle.cos());
                p[1] = r * (1.0 - 1e-9) * angle.sin();
                pts.push(p);
            }
        }
        pts
    }
}

/// Settings shared by both gluing constructions.
#[derive(Clone, Debug, PartialEq)]
pub struct GlueConfig {
    /// Random check points for `dv = u` and the interface comparison.
    pub samples: usize,
    /// Grid spacing for norms, relative to the tube diameter.
    pub cell: f64,
    pub seed: u64,
    /// Ensemble used to calibrate and measure the piece constants.
    pub ensemble: usize,
    pub poly_degree: usize,
    pub safety: f64,
    pub estimate: EstimateConfig,
    /// Ray quadrature of the Bogovskiĭ operators in the boundary mode.
    pub orders: RayOrders,
    /// Spacing of the grid caching the overlap corrections, relative to the
    /// tube diameter.
    pub correction_cell: f64,
    /// Random test forms for the trace checks.
    pub battery: usize,
    /// Finite-difference step relative to the tube diameter.
    pub fd_step: f64,
}

impl Default for GlueConfig {
    fn default() -> Self {
        GlueConfig {
            samples: 400,
            cell: 0.05,
            seed: 11,
            ensemble: 16,
            poly_degree: 3,
            safety: 2.0,
            estimate: EstimateConfig::default(),
            orders: RayOrders::PRODUCTION,
            correction_cell: 0.025,
            battery: 8,
            fd_step: 1e-4,
        }
    }
}

/// Outcome of a gluing run.
#[derive(Clone, Debug, PartialEq)]
pub struct GlueReport {
    pub links: usize,
    pub l: usize,
    pub bc: bool,
    /// `max |dv − u|`, absolute in the polynomial mode and relative to
    /// `max |u|` in the boundary mode.
    pub max_dv_residual: f64,
    /// Polynomial mode: `max |v_{i+1} − v_i|` on overlaps. Boundary mode:
    /// `max |v_i|` on the parts of `∂Ω_i` inside `Ω`.
    pub max_interface_jump: f64,
    /// Largest sample standard deviation of `η_i − η_{i+1}` on an overlap
    /// (`ℓ = 1` only, otherwise zero).
    pub constancy_std: f64,
    pub v_h1: f64,
    pub u_l2: f64,
    pub constants: ChainConstants,
    pub chain_bound: f64,
    /// Largest `|pairing|/tolerance` over the checks of the boundary mode:
    /// the input trace, the overlap corrections and the trace of `v`.
    pub input_trace: f64,
    pub overlap_trace: f64,
    pub output_trace: f64,
    pub seed: u64,
}

impl GlueReport {
    pub fn ratio(&self) -> f64 {
        self.v_h1 / self.u_l2
    }

    pub fn mode(&self) -> &'static str {
        if self.bc {
            "bc"
        } else {
            "no-bc"
        }
    }
}

/// `C_T`, `C_P`, `C_S` and the diameters of a chain for degree `ℓ`.
///
/// `C_T` takes the operator scale fitted (with the safety factor) on the
/// first link, applies it to every piece and every degree the construction
/// uses, and is never below 1. `C_P` is measured on the first link and
/// overlap, which stand in for all their translates.
pub fn chain_constants(
    chain: &ChainDecomposition,
    bc: bool,
    l: usize,
    dim_const: f64,
    cfg: &GlueConfig,
) -> Result<ChainConstants> {
    let n = chain.dim();
    let (kind, degrees) = if bc {
        (OperatorKind::Bogovskii, vec![l, l + 1])
    } else {
        (
            OperatorKind::Poincare,
            if l >= 2 { vec![l, l - 1] } else { vec![l] },
        )
    };
    let mut c_t: f64 = 1.0;
    for &deg in &degrees {
        let probe = estimate_empirical_ratio(
            kind,
            deg,
            &chain.links[0],
            &cfg.estimate,
            cfg.ensemble,
            cfg.poly_degree,
            cfg.seed,
        )?;
        let scale = probe.calibrated_scale(cfg.safety);
        for piece in chain.representatives() {
            c_t = c_t.max(h1_bound(kind, n, deg, &piece.stats(), scale)?);
        }
    }
    let mut c_p: f64 = 0.0;
    let mut big_d: f64 = 0.0;
    let mut small_d = f64::INFINITY;
    for piece in chain.representatives() {
        c_p = c_p.max(measured_kp(
            piece,
            cfg.estimate.cell,
            cfg.ensemble,
            cfg.poly_degree,
            cfg.seed,
        )?);
        let d = piece.diameter();
        big_d = big_d.max(d);
        small_d = small_d.min(d);
    }
    Ok(ChainConstants {
        c_t,
        c_p,
        c_s: chain.c_s(),
        big_d,
        small_d,
        dim_const,
    })
}

fn check_closed_poly(u: &PolyForm) -> Result<()> {
    if u.degree() < u.dim() {
        let du = u.exterior_derivative()?;
        if !du.is_zero() {
            return Err(Error::NotClosed(du.max_coeff()));
        }
    }
    Ok(())
}

/// `d(φ w)` as a jet, from the jets of `w` and `dw`.
fn d_product(phi: &Jet, w: &PolyField, dw: &PolyField, x: &[f64]) -> FormJet {
    let mut out = w.jet(x).dphi_wedge(phi).expect("degree below n");
    out.axpy(1.0, &dw.jet(x).scalar_mul(phi));
    out
}

/// The primitive built without boundary conditions: on `Ω_i`,
/// `v_i = η_i + d(φ_{i−1} w_{i−1/2} − φ_{i+1} w_{i+1/2})` for `ℓ ≥ 2` and
/// `v_i = η_i + c_i` for `ℓ = 1`.
#[derive(Clone, Debug)]
pub struct NoBcPrimitive {
    chain: ChainDecomposition,
    l: usize,
    eta: Vec<PolyField>,
    /// `(w_{i+1/2}, dw_{i+1/2})` per overlap, `ℓ ≥ 2`.
    corrections: Vec<(PolyField, PolyField)>,
    /// `c_i` per link, `ℓ = 1`.
    constants: Vec<f64>,
    /// Sample standard deviation of `η_i − η_{i+1}` per overlap, `ℓ = 1`.
    constancy_std: Vec<f64>,
}

fn poincare_on(domain: &StarDomain, degree: usize) -> Result<PoincareConfig> {
    let b = &domain.ball;
    Ok(PoincareConfig::new(Mollifier::build(
        &b.center,
        b.radius,
        degree,
        DEFAULT_QUAD_ORDER,
    )?))
}

/// Glues the link primitives `η_i = 𝙿 u` computed on the moment-exact path.
pub fn glue_no_bc(
    chain: &ChainDecomposition,
    u: &PolyForm,
    cfg: &GlueConfig,
) -> Result<NoBcPrimitive> {
    let n = chain.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.dim(),
        });
    }
    let l = u.degree();
    if l == 0 {
        return Err(Error::InvalidParameter("0-forms have no primitive".into()));
    }
    check_closed_poly(u)?;
    // η has one polynomial degree more than u, and w one more again.
    let degree = u.poly_degree().unwrap_or(0) + 3;
    let eta: Vec<PolyForm> = chain
        .links
        .iter()
        .map(|d| poincare_on(d, degree)?.apply_poly(u))
        .collect::<Result<_>>()?;
    let mut corrections = Vec::new();
    let mut constants = vec![0.0; chain.len()];
    let mut constancy_std = Vec::new();
    if l == 1 {
        for (k, o) in chain.overlaps.iter().enumerate() {
            let diff = eta[k].sub(&eta[k + 1]);
            let vals: Vec<f64> = chain
                .sample_in(o, cfg.samples.max(2), member_seed(cfg.seed, k))
                .iter()
                .map(|x| diff.evaluate(x).coeffs()[0])
                .collect();
            let mean = pairwise_sum(&vals) / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            constancy_std.push(var.sqrt());
            // v_{k+1} − v_k = c_{k+1} − c_k − b_k vanishes on the overlap.
            constants[k + 1] = constants[k] + mean;
        }
    } else {
        for (k, o) in chain.overlaps.iter().enumerate() {
            let w = poincare_on(o, degree)?.apply_poly(&eta[k].sub(&eta[k + 1]))?;
            let dw = w.exterior_derivative()?;
            corrections.push((PolyField::new(w), PolyField::new(dw)));
        }
    }
    Ok(NoBcPrimitive {
        chain: chain.clone(),
        l,
        eta: eta.into_iter().map(PolyField::new).collect(),
        corrections,
        constants,
        constancy_std,
    })
}

impl NoBcPrimitive {
    /// Jet of `v_i` at `x` (0-based `i`), meaningful for `x ∈ Ω_i`.
    pub fn link_jet(&self, i: usize, x: &[f64]) -> FormJet {
        let mut jet = self.eta[i].jet(x);
        if self.l == 1 {
            jet.value.coeffs_mut()[0] += self.constants[i];
            return jet;
        }
        let pou = &self.chain.pou;
        if i > 0 {
            let (w, dw) = &self.corrections[i - 1];
            jet.axpy(1.0, &d_product(&pou.phi(i - 1, x), w, dw, x));
        }
        if i + 1 < self.chain.len() {
            let (w, dw) = &self.corrections[i];
            jet.axpy(-1.0, &d_product(&pou.phi(i + 1, x), w, dw, x));
        }
        jet
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn constancy_std(&self) -> &[f64] {
        &self.constancy_std
    }

    /// Residuals, norms and the chain bound.
    pub fn report(&self, u: &PolyForm, cfg: &GlueConfig) -> Result<GlueReport> {
        let chain = &self.chain;
        let ufield = PolyField::new(u.clone());
        let mut dv: f64 = 0.0;
        for x in chain.sample_in(&chain.union, cfg.samples, cfg.seed) {
            for i in chain.containing(&x) {
                let d = self
                    .link_jet(i, &x)
                    .exterior_derivative()
                    .expect("degree below n");
                dv = dv.max((&d - &ufield.value(&x)).max_abs());
            }
        }
        let mut jump: f64 = 0.0;
        for (k, o) in chain.overlaps.iter().enumerate() {
            for x in chain.sample_in(o, cfg.samples, cfg.seed.wrapping_add(k as u64 + 1)) {
                jump = jump
                    .max((&self.link_jet(k + 1, &x).value - &self.link_jet(k, &x).value).max_abs());
            }
        }
        let nodes = chain.union.grid_nodes(cfg.cell * 2.0 * chain.spec.radius);
        let v_h1 = crate::field::h1_seminorm(self, &nodes);
        let u_l2 = l2_norm(&ufield, &nodes);
        let constants = chain_constants(chain, false, self.l, 0.0, cfg)?;
        Ok(GlueReport {
            links: chain.len(),
            l: self.l,
            bc: false,
            max_dv_residual: dv,
            max_interface_jump: jump,
            constancy_std: self.constancy_std.iter().copied().fold(0.0, f64::max),
            v_h1,
            u_l2,
            chain_bound: chain_bound(false, chain.dim(), self.l, &constants)?,
            constants,
            input_trace: 0.0,
            overlap_trace: 0.0,
            output_trace: 0.0,
            seed: cfg.seed,
        })
    }
}

impl FormField for NoBcPrimitive {
    fn dim(&self) -> usize {
        self.chain.dim()
    }

    fn degree(&self) -> usize {
        self.l - 1
    }

    fn value(&self, x: &[f64]) -> FormValue {
        self.jet(x).value
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        match self.chain.containing(x).first() {
            Some(&i) => self.link_jet(i, x),
            None => FormJet::zero(self.dim(), self.degree()),
        }
    }
}

/// `d(φ_i u) = dφ_i ∧ u` for closed `u`.
struct PartitionWedge<'a> {
    pou: &'a PartitionOfUnity,
    i: usize,
    u: &'a dyn FormField,
}

impl FormField for PartitionWedge<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn degree(&self) -> usize {
        self.u.degree() + 1
    }

    fn value(&self, x: &[f64]) -> FormValue {
        let phi = self.pou.phi(self.i, x);
        if phi.grad.iter().all(|g| *g == 0.0) {
            return FormValue::zero(self.dim(), self.degree());
        }
        phi.differential()
            .wedge(&self.u.value(x))
            .expect("degree below n")
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        self.u
            .jet(x)
            .dphi_wedge(&self.pou.phi(self.i, x))
            .expect("degree below n")
    }

    fn support(&self) -> Option<&Ball> {
        self.u.support()
    }
}

/// `φ_i u`, supported where `u` is.
struct PartitionProduct<'a> {
    pou: &'a PartitionOfUnity,
    i: usize,
    u: &'a dyn FormField,
}

impl FormField for PartitionProduct<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn degree(&self) -> usize {
        self.u.degree()
    }

    fn value(&self, x: &[f64]) -> FormValue {
        let phi = self.pou.phi(self.i, x).value;
        if phi == 0.0 {
            return FormValue::zero(self.dim(), self.degree());
        }
        self.u.value(x).scaled(phi)
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        self.u.jet(x).scalar_mul(&self.pou.phi(self.i, x))
    }

    fn support(&self) -> Option<&Ball> {
        self.u.support()
    }
}

/// A tabulated overlap correction together with a ball around its overlap.
struct Correction {
    field: Arc<TabulatedField>,
    ball: Option<Ball>,
}

impl FormField for Correction {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn degree(&self) -> usize {
        self.field.degree()
    }

    fn value(&self, x: &[f64]) -> FormValue {
        self.field.value(x)
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        self.field.jet(x)
    }

    fn support(&self) -> Option<&Ball> {
        self.ball.as_ref()
    }
}

/// `g_i = φ_i u + w_{i+1/2} − w_{i−1/2}`, the right-hand side on link `i`,
/// kept as separate terms so each ray integral only crosses the support of
/// one smooth piece.
struct LinkSource<'a> {
    main: PartitionProduct<'a>,
    prev: Option<Correction>,
    next: Option<Correction>,
}

impl LinkSource<'_> {
    fn compact(&self) -> bool {
        self.main.support().is_some()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, &dyn FormField)> {
        let main = std::iter::once((1.0, &self.main as &dyn FormField));
        let next = self.next.iter().map(|w| (1.0, w as &dyn FormField));
        let prev = self.prev.iter().map(|w| (-1.0, w as &dyn FormField));
        main.chain(next).chain(prev)
    }
}

/// The primitive built with boundary conditions, `v = Σ_i 𝙱^{(i)} g_i` with
/// `g_i = φ_i u + w_{i+1/2} − w_{i−1/2}` and `w_{i+1/2} = 𝙱^{(i+1/2)} d(φ_{i+1} u)`.
///
/// The corrections are cached on a grid and read back by cubic
/// interpolation; the same cache enters both neighbouring links, so the
/// corrections still telescope exactly in `Σ g_i = u`.
pub struct BcPrimitive<'a> {
    chain: &'a ChainDecomposition,
    u: &'a dyn FormField,
    l: usize,
    corrections: Vec<Arc<TabulatedField>>,
    link_ops: Vec<BogovskiiConfig>,
    sources: Vec<LinkSource<'a>>,
    fd_step: f64,
    /// Largest `|∫ d(φ_{i+1}u)|/tolerance` or overlap trace ratio.
    overlap_trace: f64,
    input_trace: f64,
}

/// Random test forms of degree `k` with quadratic coefficients.
fn battery(n: usize, k: usize, count: usize, seed: u64) -> Result<Vec<PolyForm>> {
    (0..count)
        .map(|j| PolyForm::random(n, k, 2, member_seed(seed, j)))
        .collect()
}

/// Builds the boundary-condition primitive for a closed `u` with vanishing
/// trace on `∂Ω`.
pub fn glue_bc<'a>(
    chain: &'a ChainDecomposition,
    u: &'a dyn FormField,
    cfg: &GlueConfig,
) -> Result<BcPrimitive<'a>> {
    let n = chain.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.dim(),
        });
    }
    let l = u.degree();
    if l == n {
        return Err(Error::TopDegreeWithBoundary);
    }
    if l == 0 {
        return Err(Error::InvalidParameter("0-forms have no primitive".into()));
    }
    let tube = 2.0 * chain.spec.radius;
    let cell = cfg.cell * tube;
    let nodes = chain.union.grid_nodes(cell);
    let jets = node_jets(u, &nodes);

    let slope = jets
        .iter()
        .flat_map(|j| &j.partials)
        .map(|p| p.max_abs())
        .fold(0.0, f64::max);
    let curl = jets
        .iter()
        .map(|j| j.exterior_derivative().expect("degree below n").max_abs())
        .fold(0.0, f64::max);
    if curl > 1e-8 * slope.max(1.0) {
        return Err(Error::NotClosed(curl));
    }

    let coarse = chain.union.grid_nodes(2.0 * cell);
    let coarse_jets = node_jets(u, &coarse);
    let levels = JetLevels {
        fine: nodes,
        fine_jets: jets,
        coarse,
        coarse_jets,
    };
    let psis = battery(n, n - l - 1, cfg.battery, cfg.seed)?;
    let mut input_trace: f64 = 0.0;
    for psi in &psis {
        let p = levels.trace_pairing(psi)?;
        if p.ratio(0.0) > 1.0 {
            return Err(Error::NonvanishingTrace(p.value));
        }
        input_trace = input_trace.max(p.ratio(0.0));
    }

    let mut overlap_trace: f64 = 0.0;
    let mut corrections = Vec::new();
    for (k, o) in chain.overlaps.iter().enumerate() {
        let f = PartitionWedge {
            pou: &chain.pou,
            i: k + 1,
            u,
        };
        let (fine, coarse) = (o.grid_nodes(cell), o.grid_nodes(2.0 * cell));
        if l + 1 == n {
            // Traces of top-degree forms vanish trivially; what the overlap
            // solve needs is a vanishing integral.
            let integral = |nodes: &NodeSet| {
                let vals: Vec<f64> = nodes
                    .iter()
                    .map(|(x, w)| w * f.value(x).coeffs()[0])
                    .collect();
                let scale = pairwise_sum(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>());
                (pairwise_sum(&vals), scale)
            };
            let total = Refined::new(integral(&fine), integral(&coarse).0);
            overlap_trace = overlap_trace.max(total.ratio(0.0));
        } else {
            let levels = JetLevels::new(&f, fine, coarse);
            let opsis = battery(
                n,
                n - l - 2,
                cfg.battery,
                cfg.seed.wrapping_add(k as u64 + 1),
            )?;
            overlap_trace = overlap_trace.max(levels.max_trace_ratio(&opsis, 0.0)?);
        }
        let op = BogovskiiConfig::new(o.clone())?.with_orders(cfg.orders);
        let h = cfg.correction_cell * tube;
        let (mut lo, mut hi) = o.shape.bounding_box();
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            *a -= 2.0 * h;
            *b += 2.0 * h;
        }
        // With a compactly supported input the partials come from
        // differentiating under the integral and are tabulated as well.
        let tab = if f.support().is_some() {
            TabulatedField::sample_jets(n, l, &lo, &hi, h, |x| {
                if o.contains(x) {
                    op.apply_jet(&f, x).expect("point inside the overlap")
                } else {
                    FormJet::zero(n, l)
                }
            })?
        } else {
            TabulatedField::sample(n, l, &lo, &hi, h, |x| {
                if o.contains(x) {
                    op.apply(&f, x).expect("point inside the overlap")
                } else {
                    FormValue::zero(n, l)
                }
            })?
        };
        corrections.push(Arc::new(tab));
    }

    let link_ops: Vec<BogovskiiConfig> = chain
        .links
        .iter()
        .map(|d| Ok(BogovskiiConfig::new(d.clone())?.with_orders(cfg.orders)))
        .collect::<Result<_>>()?;
    let correction = |k: usize| Correction {
        field: corrections[k].clone(),
        ball: u.support().map(|_| {
            let o = &chain.overlaps[k];
            let (lo, hi) = o.shape.bounding_box();
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(p, q)| 0.5 * (p + q)).collect();
            Ball::new(&mid, 0.5 * o.diameter())
        }),
    };
    let sources = (0..chain.len())
        .map(|i| LinkSource {
            main: PartitionProduct {
                pou: &chain.pou,
                i,
                u,
            },
            prev: if i > 0 { Some(correction(i - 1)) } else { None },
            next: (i < corrections.len()).then(|| correction(i)),
        })
        .collect();
    Ok(BcPrimitive {
        chain,
        u,
        l,
        corrections,
        link_ops,
        sources,
        fd_step: cfg.fd_step * tube,
        overlap_trace,
        input_trace,
    })
}

impl BcPrimitive<'_> {
    /// `v_i(x)`, zero outside `Ω_i`.
    pub fn link_value(&self, i: usize, x: &[f64]) -> FormValue {
        if !self.chain.links[i].contains(x) {
            return FormValue::zero(self.dim(), self.degree());
        }
        let mut v = FormValue::zero(self.dim(), self.degree());
        for (sign, g) in self.sources[i].terms() {
            v.axpy(
                sign,
                &self.link_ops[i].apply(g, x).expect("point inside the link"),
            );
        }
        v
    }

    pub fn corrections(&self) -> &[Arc<TabulatedField>] {
        &self.corrections
    }

    /// Residuals, trace checks, norms and the chain bound.
    pub fn report(&self, cfg: &GlueConfig) -> Result<GlueReport> {
        let chain = self.chain;
        let n = chain.dim();
        let tube = 2.0 * chain.spec.radius;
        let cell = cfg.cell * tube;
        let unodes = chain.union.grid_nodes(cell);
        let u_max = unodes
            .iter()
            .map(|(x, _)| self.u.value(x).max_abs())
            .fold(0.0, f64::max);
        let u_l2 = l2_norm(self.u, &unodes);

        let points = chain.sample_in(&chain.union, cfg.samples, cfg.seed);
        let residuals: Vec<f64> = points
            .iter()
            .map(|x| {
                let dv = self.jet(x).exterior_derivative().expect("degree below n");
                (&dv - &self.u.value(x)).max_abs()
            })
            .collect();
        let dv_rel = residuals.iter().copied().fold(0.0, f64::max) / u_max;

        let mut jump: f64 = 0.0;
        for i in 0..chain.len() {
            for x in chain.inner_boundary_points(i, 16) {
                jump = jump.max(self.link_value(i, &x).max_abs());
            }
        }

        // Norms and the output trace use a coarser grid: every node costs a
        // full set of ray integrals per link.
        let levels = JetLevels::new(
            self,
            chain.union.grid_nodes(2.0 * cell),
            chain.union.grid_nodes(4.0 * cell),
        );
        let v_h1 = h1_from_jets(&levels.fine_jets, &levels.fine);
        let psis = battery(n, n - self.l, cfg.battery, cfg.seed.wrapping_add(99))?;
        let output_trace = levels.max_trace_ratio(&psis, dv_rel)?;

        // Poincaré inequality for the vanishing-trace corrections.
        let mut dim_const: f64 = 0.0;
        for (w, o) in self.corrections.iter().zip(&chain.overlaps) {
            let onodes = o.grid_nodes(cell);
            let wj = node_jets(w.as_ref(), &onodes);
            let h1 = h1_from_jets(&wj, &onodes);
            if h1 > 0.0 {
                dim_const = dim_const.max(l2_from_jets(&wj, &onodes) / (o.diameter() * h1));
            }
        }
        let constants = chain_constants(chain, true, self.l, dim_const, cfg)?;
        Ok(GlueReport {
            links: chain.len(),
            l: self.l,
            bc: true,
            max_dv_residual: dv_rel,
            max_interface_jump: jump,
            constancy_std: 0.0,
            v_h1,
            u_l2,
            chain_bound: chain_bound(true, n, self.l, &constants)?,
            constants,
            input_trace: self.input_trace,
            overlap_trace: self.overlap_trace,
            output_trace,
            seed: cfg.seed,
        })
    }
}

impl FormField for BcPrimitive<'_> {
    fn dim(&self) -> usize {
        self.chain.dim()
    }

    fn degree(&self) -> usize {
        self.l - 1
    }

    fn value(&self, x: &[f64]) -> FormValue {
        let mut v = FormValue::zero(self.dim(), self.degree());
        for i in self.chain.containing(x) {
            v.axpy(1.0, &self.link_value(i, x));
        }
        v
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        if self.sources.iter().all(LinkSource::compact) {
            // Every term of g_i vanishes near ∂Ω_i, so 𝙱^{(i)} g_i can be
            // differentiated under the integral.
            let mut out = FormJet::zero(self.dim(), self.degree());
            for i in self.chain.containing(x) {
                for (sign, g) in self.sources[i].terms() {
                    out.axpy(
                        sign,
                        &self.link_ops[i]
                            .apply_jet(g, x)
                            .expect("point inside the link"),
                    );
                }
            }
            return out;
        }
        let h = self.fd_step;
        let mut xs = x.to_vec();
        let partials = (0..self.dim())
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffForm;
    use crate::geometry::Ball;
    use crate::poly::MultiPoly;

    fn chain(links: usize) -> ChainDecomposition {
        build_chain(&ChainSpec {
            links,
            samples: 1000,
            ..ChainSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn smoothstep_matches_its_derivatives() {
        let h = 1e-6;
        for t in [0.1, 0.37, 0.5, 0.81] {
            let (_, s1, s2) = smoothstep(t);
            assert!(((smoothstep(t + h).0 - smoothstep(t - h).0) / (2.0 * h) - s1).abs() < 1e-8);
            assert!(((smoothstep(t + h).1 - smoothstep(t - h).1) / (2.0 * h) - s2).abs() < 1e-7);
        }
        assert_eq!(smoothstep(0.5).0, 0.5);
    }

    #[test]
    fn partition_is_one_in_cores_and_half_mid_slab() {
        let c = chain(3);
        let pou = c.partition();
        let core = axis_point(2, c.centers()[1]);
        assert_eq!(pou.phi(1, &core).value, 1.0);
        assert_eq!(pou.phi(0, &core).value, 0.0);
        let (a, b) = pou.ramps()[0];
        let mid = axis_point(2, 0.5 * (a + b));
        assert!((pou.phi(0, &mid).value - 0.5).abs() < 1e-15);
        assert!((pou.phi(1, &mid).value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn misordered_ramps_are_rejected() {
        assert!(PartitionOfUnity::new(2, vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(PartitionOfUnity::new(2, vec![(1.0, 1.0)]).is_err());
    }

    #[test]
    fn invalid_geometries_are_rejected() {
        let base = ChainSpec::default();
        let disks = ChainSpec {
            half_length: 0.0,
            ..base.clone()
        };
        assert!(matches!(build_chain(&disks), Err(Error::ChainInvariant(_))));
        let crowded = ChainSpec {
            links: 3,
            radius: 1.5,
            ..base.clone()
        };
        assert!(build_chain(&ChainSpec {
            links: 2,
            ..crowded.clone()
        })
        .is_ok());
        assert!(matches!(
            build_chain(&crowded),
            Err(Error::ChainInvariant(_))
        ));
        assert!(build_chain(&ChainSpec {
            overlap: 0.5,
            ..base.clone()
        })
        .is_err());
        assert!(build_chain(&ChainSpec { links: 1, ..base }).is_err());
    }

    #[test]
    fn smaller_overlaps_raise_c_s() {
        let wide = build_chain(&ChainSpec {
            overlap: 0.3,
            samples: 500,
            ..ChainSpec::default()
        })
        .unwrap();
        let narrow = build_chain(&ChainSpec {
            overlap: 0.05,
            samples: 500,
            ..ChainSpec::default()
        })
        .unwrap();
        assert!(narrow.c_s() > wide.c_s());
        assert!(wide.c_s() >= 1.0);
    }

    fn quick() -> GlueConfig {
        GlueConfig {
            samples: 60,
            cell: 0.1,
            ensemble: 4,
            orders: RayOrders::uniform(12),
            estimate: EstimateConfig {
                cell: 0.25,
                orders: RayOrders::uniform(8),
                ..EstimateConfig::default()
            },
            correction_cell: 0.1,
            battery: 3,
            ..GlueConfig::default()
        }
    }

    #[test]
    fn no_bc_exact_one_form() {
        let c = chain(2);
        let u =
            PolyForm::monomial_form(2, crate::IndexTuple::single(1), MultiPoly::constant(2, 1.0));
        let v = glue_no_bc(&c, &u, &quick()).unwrap();
        let r = v.report(&u, &quick()).unwrap();
        assert!(r.max_dv_residual < 1e-10);
        assert!(r.max_interface_jump < 1e-10);
        // v = x₁ + const on both links.
        let x = [c.centers()[1], 0.1];
        let y = [c.centers()[1] + 0.3, -0.2];
        assert!((v.value(&y).coeffs()[0] - v.value(&x).coeffs()[0] - 0.3).abs() < 1e-12);
        assert!((r.chain_bound - 2.0 * r.constants.c_t).abs() < 1e-12);
    }

    #[test]
    fn no_bc_top_degree() {
        let c = chain(3);
        let u = PolyForm::random(2, 2, 3, 5).unwrap();
        let v = glue_no_bc(&c, &u, &quick()).unwrap();
        let r = v.report(&u, &quick()).unwrap();
        assert!(r.max_dv_residual < 1e-7, "{}", r.max_dv_residual);
        assert!(r.max_interface_jump < 1e-8, "{}", r.max_interface_jump);
        assert!(r.v_h1 <= r.chain_bound * r.u_l2);
    }

    #[test]
    fn no_bc_rejects_non_closed_input() {
        let c = chain(2);
        let u = PolyForm::monomial_form(2, crate::IndexTuple::single(1), MultiPoly::variable(2, 2));
        assert!(matches!(
            glue_no_bc(&c, &u, &quick()),
            Err(Error::NotClosed(_))
        ));
    }

    fn interior_bump(c: &ChainDecomposition) -> CutoffForm {
        let (a, b) = c.partition().ramps()[0];
        let centre = 0.5 * (a + b);
        CutoffForm::new(
            Ball::new(&[centre, 0.0], 0.9),
            PolyForm::scalar(MultiPoly::variable(2, 1).add(&MultiPoly::constant(2, 0.5))),
        )
    }

    #[test]
    fn bc_rejects_top_degree_and_open_traces() {
        let c = chain(2);
        let top = PolyField::new(PolyForm::random(2, 2, 1, 1).unwrap());
        assert!(matches!(
            glue_bc(&c, &top, &quick()),
            Err(Error::TopDegreeWithBoundary)
        ));
        let open = PolyField::new(PolyForm::monomial_form(
            2,
            crate::IndexTuple::single(1),
            MultiPoly::constant(2, 1.0),
        ));
        assert!(matches!(
            glue_bc(&c, &open, &quick()),
            Err(Error::NonvanishingTrace(_))
        ));
    }

    #[test]
    fn bc_glue_reproduces_a_bump_derivative() {
        let c = chain(2);
        let w = interior_bump(&c);
        let u = w.derivative().unwrap();
        let cfg = GlueConfig {
            cell: 0.025,
            orders: RayOrders::uniform(16),
            ..quick()
        };
        let v = glue_bc(&c, &u, &cfg).unwrap();
        let r = v.report(&cfg).unwrap();
        assert!(r.max_dv_residual < 0.1, "{}", r.max_dv_residual);
        assert!(r.overlap_trace <= 1.0, "{}", r.overlap_trace);
        assert!(r.max_interface_jump < 1e-6, "{}", r.max_interface_jump);
    }
}
