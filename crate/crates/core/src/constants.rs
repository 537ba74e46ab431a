//! Closed-form continuity constants and their empirical counterparts.
//!
//! The dimensional factors `C(n, ℓ)` and `𝖢(n)` are not known numerically, so
//! every bound carries an explicit `scale`. The usual protocol is to fit the
//! scale on the most symmetric member of a domain family and then keep it
//! fixed for the rest.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bogovskii::{BogovskiiConfig, BogovskiiField, RayOrders};
use crate::error::{Error, Result};
use crate::exterior::check_dim;
use crate::field::{h1_seminorm, l2_norm, PolyField};
use crate::geometry::{DomainStats, StarDomain};
use crate::mollifier::{Mollifier, DEFAULT_QUAD_ORDER};
use crate::poincare::PoincareConfig;
use crate::poly::{MultiPoly, PolyForm};
use crate::quadrature::NodeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    Poincare,
    Bogovskii,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Poincare => "poincare",
            OperatorKind::Bogovskii => "bogovskii",
        }
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poincare" => Ok(OperatorKind::Poincare),
            "bogovskii" => Ok(OperatorKind::Bogovskii),
            other => Err(Error::InvalidParameter(format!(
                "unknown operator kind {other:?}"
            ))),
        }
    }
}

/// Which formula branch of `κ` applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaBranch {
    /// `κ = 1`.
    Unit,
    /// Poincaré with `2ℓ ∈ {n−1, n}`.
    Critical,
    /// Poincaré with `2ℓ ≤ n−2`.
    Low,
    /// Bogovskiĭ with `ℓ ≥ n/2 + 1`.
    High,
}

fn check_degree(n: usize, l: usize) -> Result<()> {
    check_dim(n)?;
    if l == 0 || l > n {
        return Err(Error::InvalidParameter(format!(
            "form degree {l} outside 1..={n}"
        )));
    }
    Ok(())
}

fn check_ratio(v: f64) -> Result<()> {
    if !(v > 1.0) || !v.is_finite() {
        return Err(Error::VolumeRatioTooSmall(v));
    }
    Ok(())
}

pub fn kappa_branch(kind: OperatorKind, n: usize, l: usize) -> Result<KappaBranch> {
    check_degree(n, l)?;
    Ok(match kind {
        OperatorKind::Poincare => {
            if 2 * l > n {
                KappaBranch::Unit
            } else if 2 * l + 1 >= n {
                KappaBranch::Critical
            } else {
                KappaBranch::Low
            }
        }
        // ℓ < n/2 + 1 ⇔ 2ℓ < n + 2.
        OperatorKind::Bogovskii => {
            if 2 * l < n + 2 {
                KappaBranch::Unit
            } else {
                KappaBranch::High
            }
        }
    })
}

/// `κ` for the Poincaré operator as a function of `V = |Ω|/|B|`.
pub fn kappa_poincare_ratio(n: usize, l: usize, v: f64) -> Result<f64> {
    check_ratio(v)?;
    let (nf, lf) = (n as f64, l as f64);
    let power = (nf - 2.0 * lf) / (2.0 * (nf - lf));
    Ok(match kappa_branch(OperatorKind::Poincare, n, l)? {
        KappaBranch::Unit => 1.0,
        KappaBranch::Critical => v.powf(power) * v.ln().powf(nf / (2.0 * (nf - lf))),
        // The log exponent uses n − ℓ − 1 here, unlike the critical case.
        _ => v.powf(power) * v.ln().powf(nf / (2.0 * (nf - lf - 1.0))),
    })
}

/// `κ` for the Bogovskiĭ operator as a function of `V = |Ω|/|B|`.
pub fn kappa_bogovskii_ratio(n: usize, l: usize, v: f64) -> Result<f64> {
    check_ratio(v)?;
    let (nf, k) = (n as f64, l as f64 - 1.0);
    Ok(match kappa_branch(OperatorKind::Bogovskii, n, l)? {
        KappaBranch::Unit => 1.0,
        _ => 1.0 + v.ln().powf(nf / (2.0 * k)) * v.powf((2.0 * k - nf) / (2.0 * k)),
    })
}

pub fn kappa_poincare(n: usize, l: usize, stats: &DomainStats) -> Result<f64> {
    kappa_poincare_ratio(n, l, stats.ratio_vol)
}

pub fn kappa_bogovskii(n: usize, l: usize, stats: &DomainStats) -> Result<f64> {
    kappa_bogovskii_ratio(n, l, stats.ratio_vol)
}

pub fn kappa(kind: OperatorKind, n: usize, l: usize, stats: &DomainStats) -> Result<f64> {
    match kind {
        OperatorKind::Poincare => kappa_poincare(n, l, stats),
        OperatorKind::Bogovskii => kappa_bogovskii(n, l, stats),
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be a nonnegative number, got {scale}"
        )));
    }
    Ok(())
}

/// `scale · (R/ρ) · κ`, the H¹ continuity bound of either operator.
pub fn h1_bound(
    kind: OperatorKind,
    n: usize,
    l: usize,
    stats: &DomainStats,
    scale: f64,
) -> Result<f64> {
    check_scale(scale)?;
    Ok(scale * stats.ratio_diam * kappa(kind, n, l, stats)?)
}

/// `scale / ρ`, the H² bound for the Poincaré operator, available for
/// `2ℓ > n` only.
pub fn h2_bound_poincare(n: usize, l: usize, rho: f64, scale: f64) -> Result<f64> {
    check_degree(n, l)?;
    check_scale(scale)?;
    if 2 * l <= n {
        return Err(Error::NoEstimate(format!(
            "the H² bound with 2ℓ ≤ n (n = {n}, ℓ = {l})"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball diameter must be positive, got {rho}"
        )));
    }
    Ok(scale / rho)
}

/// Bound on the constant `K_P` of the mean-zero Poincaré inequality.
pub fn poincare_constant_kp(n: usize, stats: &DomainStats, scale: f64) -> Result<f64> {
    check_dim(n)?;
    check_scale(scale)?;
    let v = stats.ratio_vol;
    check_ratio(v)?;
    if n == 1 {
        // Both exponents degenerate; the bracket is 1 + 1.
        return Ok(scale * stats.ratio_diam * 2.0);
    }
    let nf = n as f64;
    let bracket =
        1.0 + v.ln().powf(nf / (2.0 * (nf - 1.0))) * v.powf((nf - 2.0) / (2.0 * (nf - 1.0)));
    Ok(scale * stats.ratio_diam * bracket)
}

/// Geometric constants of a chain decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConstants {
    /// Largest operator constant over links and overlaps.
    pub c_t: f64,
    /// Largest mean-zero Poincaré constant over links and overlaps.
    pub c_p: f64,
    /// Partition-of-unity derivative constant.
    pub c_s: f64,
    /// Largest piece diameter.
    pub big_d: f64,
    /// Smallest piece diameter.
    pub small_d: f64,
    /// Dimensional constant of the Poincaré inequality for vanishing traces.
    pub dim_const: f64,
}

/// Upper bound for `|v|_{H¹}/‖u‖_{L²}` of the glued primitive.
pub fn chain_bound(bc: bool, n: usize, l: usize, k: &ChainConstants) -> Result<f64> {
    check_degree(n, l)?;
    let all = [k.c_t, k.c_p, k.c_s, k.big_d, k.small_d, k.dim_const];
    if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !(k.small_d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chain constants must be nonnegative: {k:?}"
        )));
    }
    let ratio = k.big_d / k.small_d;
    if bc {
        if l == n {
            return Err(Error::TopDegreeWithBoundary);
        }
        let coupling = k.c_s * k.dim_const * ratio * k.c_t;
        return Ok(4.0 * k.c_t * (2.0 + coupling * coupling).sqrt());
    }
    if l == 1 {
        return Ok(2.0 * k.c_t);
    }
    let inner = k.c_t * k.c_p * ratio + 1.0;
    Ok(2.0 * k.c_t * (1.0 + 32.0 * k.c_s * k.c_s * inner.powi(4)).sqrt())
}

/// Settings for [`estimate_empirical_ratio`].
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateConfig {
    pub scale: f64,
    /// Grid spacing of the midpoint rule, relative to the inscribed ball
    /// diameter, so resolution is the same across a domain family.
    pub cell: f64,
    /// Ray quadrature of the Bogovskiĭ operator.
    pub orders: RayOrders,
    /// Finite-difference step for Bogovskiĭ derivatives, relative to the
    /// domain diameter.
    pub fd_step: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            scale: 1.0,
            cell: 0.125,
            orders: RayOrders::uniform(12),
            fd_step: 1e-4,
        }
    }
}

/// Theoretical bound next to a measured operator ratio on one domain.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub kind: OperatorKind,
    pub n: usize,
    pub l: usize,
    pub stats: DomainStats,
    pub kappa: f64,
    pub scale: f64,
    pub bound_value: f64,
    /// Largest `|op u|_{H¹}/‖u‖_{L²}` over the ensemble.
    pub empirical_ratio: f64,
    pub samples: Vec<f64>,
    pub ensemble: usize,
    pub seed: u64,
    pub degree: usize,
}

impl BoundReport {
    /// The same report with a different scale.
    pub fn rescaled(&self, scale: f64) -> BoundReport {
        BoundReport {
            scale,
            bound_value: scale * self.stats.ratio_diam * self.kappa,
            ..self.clone()
        }
    }

    /// Scale that puts the bound at `safety` times the measured ratio.
    pub fn calibrated_scale(&self, safety: f64) -> f64 {
        safety * self.empirical_ratio / (self.stats.ratio_diam * self.kappa)
    }
}

/// Seed of the `k`-th ensemble member.
pub fn member_seed(seed: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    rng.random()
}

/// Random closed `ℓ`-forms with polynomial coefficients of degree
/// `≤ degree`; top-degree forms are just random.
pub fn random_closed_ensemble(
    n: usize,
    l: usize,
    degree: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<PolyForm>> {
    (0..count)
        .map(|k| {
            let s = member_seed(seed, k);
            if l == n {
                PolyForm::random(n, l, degree, s)
            } else {
                PolyForm::random_closed(n, l, degree, s)
            }
        })
        .collect()
}

/// `|op u|_{H¹}/‖u‖_{L²}` for one input.
fn ratio_of(
    kind: OperatorKind,
    u: &PolyForm,
    nodes: &NodeSet,
    poincare: &PoincareConfig,
    bogovskii: Option<&BogovskiiConfig>,
    fd_step: f64,
) -> Result<f64> {
    let field = PolyField::new(u.clone());
    let denom = l2_norm(&field, nodes);
    if denom == 0.0 {
        return Ok(0.0);
    }
    let num = match kind {
        OperatorKind::Poincare => poincare.apply_poly(u)?.sobolev_seminorm_on(1, nodes)?,
        OperatorKind::Bogovskii => {
            let cfg = bogovskii.expect("configured for the Bogovskiĭ operator");
            let mut out = BogovskiiField::new(cfg, &field);
            out.fd_step = fd_step;
            h1_seminorm(&out, nodes)
        }
    };
    Ok(num / denom)
}

/// `|op u|_{H¹}/‖u‖_{L²}` for a single input on `domain`, with the same
/// quadrature as [`estimate_empirical_ratio`].
pub fn operator_ratio(
    kind: OperatorKind,
    u: &PolyForm,
    domain: &StarDomain,
    cfg: &EstimateConfig,
) -> Result<f64> {
    check_degree(domain.dim(), u.degree())?;
    let stats = domain.stats();
    let nodes = domain.grid_nodes(cfg.cell * stats.ball_diameter);
    if nodes.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    let ball = &domain.ball;
    let degree = u.poly_degree().unwrap_or(0);
    let poincare = PoincareConfig::new(Mollifier::build(
        &ball.center,
        ball.radius,
        degree + 2,
        DEFAULT_QUAD_ORDER,
    )?);
    let bogovskii = match kind {
        OperatorKind::Bogovskii => {
            Some(BogovskiiConfig::new(domain.clone())?.with_orders(cfg.orders))
        }
        OperatorKind::Poincare => None,
    };
    ratio_of(
        kind,
        u,
        &nodes,
        &poincare,
        bogovskii.as_ref(),
        cfg.fd_step * stats.diameter,
    )
}

/// Measures the largest H¹/L² ratio of `kind` on `domain` over an ensemble of
/// random closed polynomial forms and pairs it with the closed-form bound.
pub fn estimate_empirical_ratio(
    kind: OperatorKind,
    l: usize,
    domain: &StarDomain,
    cfg: &EstimateConfig,
    ensemble_size: usize,
    degree: usize,
    seed: u64,
) -> Result<BoundReport> {
    let n = domain.dim();
    check_degree(n, l)?;
    if ensemble_size == 0 {
        return Err(Error::InvalidParameter(
            "ensemble must hold at least one form".into(),
        ));
    }
    if !(cfg.cell > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cell size must be positive, got {}",
            cfg.cell
        )));
    }
    let stats = domain.stats();
    let kappa = kappa(kind, n, l, &stats)?;
    let nodes = domain.grid_nodes(cfg.cell * stats.ball_diameter);
    if nodes.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    let ball = &domain.ball;
    let poincare = PoincareConfig::new(Mollifier::build(
        &ball.center,
        ball.radius,
        degree + 2,
        DEFAULT_QUAD_ORDER,
    )?);
    let bogovskii = match kind {
        OperatorKind::Bogovskii => {
            Some(BogovskiiConfig::new(domain.clone())?.with_orders(cfg.orders))
        }
        OperatorKind::Poincare => None,
    };
    let fd_step = cfg.fd_step * stats.diameter;
    let inputs = random_closed_ensemble(n, l, degree, ensemble_size, seed)?;
    // Bogovskiĭ evaluations already fan out over nodes, the cheap symbolic
    // path over ensemble members.
    let samples: Vec<f64> = match kind {
        OperatorKind::Poincare => inputs
            .par_iter()
            .map(|u| ratio_of(kind, u, &nodes, &poincare, None, fd_step))
            .collect::<Result<_>>()?,
        OperatorKind::Bogovskii => inputs
            .iter()
            .map(|u| ratio_of(kind, u, &nodes, &poincare, bogovskii.as_ref(), fd_step))
            .collect::<Result<_>>()?,
    };
    let empirical_ratio = samples.iter().copied().fold(0.0, f64::max);
    Ok(BoundReport {
        kind,
        n,
        l,
        stats,
        kappa,
        scale: cfg.scale,
        bound_value: cfg.scale * stats.ratio_diam * kappa,
        empirical_ratio,
        samples,
        ensemble: ensemble_size,
        seed,
        degree,
    })
}

/// Measured mean-zero Poincaré constant `‖f − f̄‖/(diam |f|_{H¹})`, maximised
/// over random scalar polynomials of degree `≤ degree`.
pub fn measured_kp(
    domain: &StarDomain,
    cell: f64,
    ensemble_size: usize,
    degree: usize,
    seed: u64,
) -> Result<f64> {
    let n = domain.dim();
    let stats = domain.stats();
    let nodes = domain.grid_nodes(cell * stats.ball_diameter);
    if nodes.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    let volume = nodes.total_weight();
    let mut best: f64 = 0.0;
    for k in 0..ensemble_size {
        let f = PolyForm::random(n, 0, degree, member_seed(seed, k))?;
        let p: &MultiPoly = &f.components()[0];
        let mean = nodes.integrate(|x| p.evaluate(x)) / volume;
        let centred = PolyForm::scalar(p.add(&MultiPoly::constant(n, -mean)));
        let l2 = centred.sobolev_seminorm_on(0, &nodes)?;
        let h1 = centred.sobolev_seminorm_on(1, &nodes)?;
        if h1 > 0.0 {
            best = best.max(l2 / (stats.diameter * h1));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn stats(ratio_vol: f64, ratio_diam: f64) -> DomainStats {
        DomainStats {
            diameter: ratio_diam,
            ball_diameter: 1.0,
            volume: ratio_vol,
            ball_volume: 1.0,
            ratio_diam,
            ratio_vol,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn poincare_kappa_cases() {
        assert_eq!(kappa_poincare(2, 2, &stats(5.0, 2.0)).unwrap(), 1.0);
        assert!(close(kappa_poincare(2, 1, &stats(E, 2.0)).unwrap(), 1.0));
        assert!(close(
            kappa_poincare(4, 1, &stats(E, 2.0)).unwrap(),
            E.powf(1.0 / 3.0)
        ));
    }

    #[test]
    fn bogovskii_kappa_cases() {
        assert_eq!(kappa_bogovskii(3, 1, &stats(7.0, 2.0)).unwrap(), 1.0);
        assert!(close(kappa_bogovskii(2, 2, &stats(E, 2.0)).unwrap(), 2.0));
        assert!(close(
            kappa_bogovskii(2, 2, &stats(E * E, 2.0)).unwrap(),
            3.0
        ));
    }

    #[test]
    fn degenerate_volume_ratio_is_rejected() {
        for v in [1.0, 0.5, f64::NAN] {
            assert!(matches!(
                kappa_poincare_ratio(2, 2, v),
                Err(Error::VolumeRatioTooSmall(_))
            ));
            assert!(matches!(
                kappa_bogovskii_ratio(2, 1, v),
                Err(Error::VolumeRatioTooSmall(_))
            ));
            assert!(poincare_constant_kp(2, &stats(v, 2.0), 1.0).is_err());
        }
    }

    #[test]
    fn h1_bound_examples() {
        assert!(close(
            h1_bound(OperatorKind::Poincare, 2, 2, &stats(3.0, 4.0), 1.0).unwrap(),
            4.0
        ));
        assert!(close(
            h1_bound(OperatorKind::Bogovskii, 2, 2, &stats(E, 3.0), 1.0).unwrap(),
            6.0
        ));
        let a = h1_bound(OperatorKind::Bogovskii, 3, 1, &stats(3.0, 2.0), 1.5).unwrap();
        let b = h1_bound(OperatorKind::Bogovskii, 3, 1, &stats(3.0, 4.0), 1.5).unwrap();
        assert!(close(b, 2.0 * a));
        assert!(h1_bound(OperatorKind::Poincare, 2, 1, &stats(3.0, 2.0), -1.0).is_err());
    }

    #[test]
    fn h2_bound_examples() {
        assert!(close(h2_bound_poincare(3, 2, 2.0, 1.0).unwrap(), 0.5));
        assert!(close(h2_bound_poincare(3, 2, 1.0, 1.0).unwrap(), 1.0));
        assert!(matches!(
            h2_bound_poincare(3, 1, 1.0, 1.0),
            Err(Error::NoEstimate(_))
        ));
    }

    #[test]
    fn kp_examples() {
        assert!(close(
            poincare_constant_kp(2, &stats(E, 2.0), 1.0).unwrap(),
            4.0
        ));
        assert_eq!(poincare_constant_kp(2, &stats(E, 2.0), 0.0).unwrap(), 0.0);
        let lo = poincare_constant_kp(3, &stats(2.0, 2.0), 1.0).unwrap();
        let hi = poincare_constant_kp(3, &stats(20.0, 2.0), 1.0).unwrap();
        assert!(hi > lo);
    }

    fn consts(c_t: f64, c_s: f64) -> ChainConstants {
        ChainConstants {
            c_t,
            c_p: 0.7,
            c_s,
            big_d: 3.0,
            small_d: 1.5,
            dim_const: 0.4,
        }
    }

    #[test]
    fn chain_bound_examples() {
        assert!(close(
            chain_bound(false, 2, 1, &consts(3.0, 2.0)).unwrap(),
            6.0
        ));
        assert!(close(
            chain_bound(false, 3, 2, &consts(3.0, 0.0)).unwrap(),
            6.0
        ));
        assert!(close(
            chain_bound(true, 2, 1, &consts(1.0, 0.0)).unwrap(),
            4.0 * 2f64.sqrt()
        ));
        assert!(matches!(
            chain_bound(true, 2, 2, &consts(1.0, 1.0)),
            Err(Error::TopDegreeWithBoundary)
        ));
        // 2·√(1 + 32·(1·0.7·2 + 1)⁴) with C_T = 1, C_S = 1.
        let expected = 2.0 * (1.0 + 32.0 * 2.4f64.powi(4)).sqrt();
        assert!(close(
            chain_bound(false, 2, 2, &consts(1.0, 1.0)).unwrap(),
            expected
        ));
    }

    #[test]
    fn branch_dispatch_is_total() {
        for n in 1..=6 {
            for l in 1..=n {
                for kind in [OperatorKind::Poincare, OperatorKind::Bogovskii] {
                    let b = kappa_branch(kind, n, l).unwrap();
                    let v = kappa(kind, n, l, &stats(E * 1.5, 2.0)).unwrap();
                    assert!(
                        v >= 1.0 && v.is_finite(),
                        "{kind:?} n={n} l={l} branch {b:?}"
                    );
                }
            }
            assert!(kappa_branch(OperatorKind::Poincare, n, 0).is_err());
            assert!(kappa_branch(OperatorKind::Poincare, n, n + 1).is_err());
        }
    }

    #[test]
    fn empirical_ratio_is_deterministic() {
        let disk = StarDomain::ball(&[0.0, 0.0], 1.0, 0.45).unwrap();
        let cfg = EstimateConfig::default();
        let a = estimate_empirical_ratio(OperatorKind::Poincare, 1, &disk, &cfg, 4, 2, 9).unwrap();
        let b = estimate_empirical_ratio(OperatorKind::Poincare, 1, &disk, &cfg, 4, 2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.empirical_ratio > 0.0);
        assert_eq!(a.samples.len(), 4);
        let c = a.rescaled(a.calibrated_scale(2.0));
        assert!(close(c.bound_value, 2.0 * a.empirical_ratio));
    }

    #[test]
    fn bogovskii_ratio_is_positive() {
        let disk = StarDomain::ball(&[0.0, 0.0], 1.0, 0.45).unwrap();
        let cfg = EstimateConfig {
            cell: 0.25,
            orders: RayOrders::uniform(8),
            ..EstimateConfig::default()
        };
        let r = estimate_empirical_ratio(OperatorKind::Bogovskii, 2, &disk, &cfg, 2, 1, 3).unwrap();
        assert!(r.empirical_ratio > 0.0);
        assert!(close(r.kappa, 1.0 + (1.0 / 0.2025f64).ln()));
    }

    #[test]
    fn measured_kp_is_finite() {
        let disk = StarDomain::ball(&[0.0, 0.0], 1.0, 0.5).unwrap();
        let k = measured_kp(&disk, 0.1, 6, 3, 1).unwrap();
        // The unit disk's sharp constant is 1/(2·1.8412) ≈ 0.27.
        assert!(k > 0.05 && k < 0.3, "{k}");
    }
}
