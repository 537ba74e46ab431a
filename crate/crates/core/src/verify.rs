//! Property suites with a measured residual and a tolerance for every
//! invariant: exterior algebra, the Poincaré null-homotopy, Bogovskiĭ
//! exactness and locality, traces, and chain gluing.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bogovskii::{hull_distance, BogovskiiConfig, BogovskiiField, RayOrders};
use crate::chain::{build_chain, glue_bc, glue_no_bc, ChainSpec, GlueConfig, GlueReport};
use crate::constants::member_seed;
use crate::cutoff::CutoffForm;
use crate::error::{Error, Result};
use crate::exterior::{FormValue, IndexTuple};
use crate::field::{FormField, JetLevels, PolyField};
use crate::geometry::{Ball, StarDomain};
use crate::mollifier::{Mollifier, DEFAULT_QUAD_ORDER};
use crate::poincare::PoincareConfig;
use crate::poly::{MultiPoly, PolyForm};

/// One invariant with its measured residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            residual,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }

    /// `suite.name`, the key used for tolerance overrides.
    pub fn key(&self) -> String {
        format!("{}.{}", self.suite, self.name)
    }
}

/// Tolerances that are configured rather than derived from a measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub algebra: f64,
    pub homotopy: f64,
    pub derivative: f64,
    pub bogovskii: f64,
    pub oracle: f64,
    pub glue_dv: f64,
    pub glue_jump: f64,
    pub glue_constancy: f64,
    pub glue_bc_dv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebra: 1e-12,
            homotopy: 1e-8,
            derivative: 1e-9,
            bogovskii: 5e-3,
            oracle: 1e-3,
            glue_dv: 1e-7,
            glue_jump: 1e-8,
            glue_constancy: 1e-8,
            glue_bc_dv: 1e-2,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 9] = [
        "algebra",
        "homotopy",
        "derivative",
        "bogovskii",
        "oracle",
        "glue_dv",
        "glue_jump",
        "glue_constancy",
        "glue_bc_dv",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {name} must be nonnegative, got {value}"
            )));
        }
        let slot = match name {
            "algebra" => &mut self.algebra,
            "homotopy" => &mut self.homotopy,
            "derivative" => &mut self.derivative,
            "bogovskii" => &mut self.bogovskii,
            "oracle" => &mut self.oracle,
            "glue_dv" => &mut self.glue_dv,
            "glue_jump" => &mut self.glue_jump,
            "glue_constancy" => &mut self.glue_constancy,
            "glue_bc_dv" => &mut self.glue_bc_dv,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown tolerance {name:?}"
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub algebra_dims: Vec<usize>,
    pub algebra_samples: usize,
    pub homotopy_dims: Vec<usize>,
    pub homotopy_samples: usize,
    pub poly_degree: usize,
    pub derivative_samples: usize,
    pub bogovskii_pairs: usize,
    pub bogovskii_points: usize,
    /// Increasing ray orders; the last one is the production setting.
    pub bogovskii_levels: Vec<RayOrders>,
    pub locality_points: usize,
    pub trace_forms: usize,
    /// Grid spacing for trace pairings on the unit disk.
    pub trace_cell: f64,
    pub chain_links: Vec<usize>,
    pub chain_degrees: Vec<usize>,
    pub chain: ChainSpec,
    pub glue: GlueConfig,
    /// Run the boundary-condition gluing (the slowest check).
    pub chain_bc: bool,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 1,
            algebra_dims: (2..=6).collect(),
            algebra_samples: 1000,
            homotopy_dims: vec![2, 3],
            homotopy_samples: 50,
            poly_degree: 3,
            derivative_samples: 100,
            bogovskii_pairs: 10,
            bogovskii_points: 12,
            bogovskii_levels: vec![
                RayOrders::uniform(8),
                RayOrders::uniform(16),
                RayOrders::PRODUCTION,
            ],
            locality_points: 200,
            trace_forms: 20,
            trace_cell: 0.05,
            chain_links: vec![2, 4, 8],
            chain_degrees: vec![1, 2],
            chain: ChainSpec::default(),
            glue: GlueConfig::default(),
            chain_bc: true,
            tolerances: Tolerances::default(),
        }
    }
}

/// The report of [`run_verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Runs every suite in order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = algebra_suite(cfg)?;
    checks.extend(homotopy_suite(cfg)?);
    checks.extend(locality_suite(cfg)?);
    checks.extend(trace_suite(cfg)?);
    checks.extend(gluing_suite(cfg)?);
    Ok(VerifyReport { checks })
}

fn random_value(n: usize, l: usize, seed: u64) -> Result<FormValue> {
    Ok(PolyForm::random(n, l, 0, seed)?.evaluate(&vec![0.0; n]))
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Anticommutativity, `⋆⋆ = (−1)^{ℓ(n−ℓ)}`, the antiderivation rule for
/// contraction, and `d² = 0` on random inputs.
pub fn algebra_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.algebra;
    let mut anti: f64 = 0.0;
    let mut star: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for &n in &cfg.algebra_dims {
        let mut rng = ChaCha8Rng::seed_from_u64(member_seed(cfg.seed, n));
        for k in 0..cfg.algebra_samples {
            let seed = member_seed(cfg.seed ^ 0xa1, n * 100_000 + k);
            let p = rng.random_range(1..n);
            let q = rng.random_range(1..=n - p);
            let a = random_value(n, p, seed)?;
            let b = random_value(n, q, seed.wrapping_add(1))?;
            let ab = a.wedge(&b)?;
            let ba = b.wedge(&a)?;
            let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
            anti = anti.max((&ab - &ba.scaled(sign)).max_abs());

            let l = rng.random_range(0..=n);
            let c = random_value(n, l, seed.wrapping_add(2))?;
            let s = if (l * (n - l)) % 2 == 0 { 1.0 } else { -1.0 };
            star = star.max((&c.hodge_star().hodge_star() - &c.scaled(s)).max_abs());

            let z = random_vector(n, &mut rng);
            let lhs = ab.contract(&z)?;
            let mut rhs = a.contract(&z)?.wedge(&b)?;
            let sp = if p % 2 == 0 { 1.0 } else { -1.0 };
            rhs.axpy(sp, &a.wedge(&b.contract(&z)?)?);
            contraction = contraction.max((&lhs - &rhs).max_abs());

            if k % 10 == 0 {
                let l = rng.random_range(0..=n.saturating_sub(2));
                let u = PolyForm::random(n, l, cfg.poly_degree, seed.wrapping_add(3))?;
                d2 = d2.max(u.exterior_derivative()?.exterior_derivative()?.max_coeff());
            }
        }
    }
    Ok(vec![
        Check::new("algebra", "anticommutativity", anti, tol),
        Check::new("algebra", "hodge_involution", star, tol),
        Check::new("algebra", "contraction_antiderivation", contraction, tol),
        Check::new("algebra", "d_squared", d2, tol),
    ])
}

/// The two domains of the homotopy suite in dimension `n`: the unit ball and
/// an ellipsoid with axis ratio 4.
pub fn homotopy_domains(n: usize) -> Result<Vec<(&'static str, StarDomain)>> {
    let origin = vec![0.0; n];
    let mut axes = vec![0.5; n];
    axes[0] = 2.0;
    Ok(vec![
        ("ball", StarDomain::ball(&origin, 1.0, 0.5)?),
        ("ellipsoid", StarDomain::ellipsoid(&origin, &axes, 0.45)?),
    ])
}

fn poincare_for(domain: &StarDomain, degree: usize) -> Result<PoincareConfig> {
    let b = &domain.ball;
    Ok(PoincareConfig::new(Mollifier::build(
        &b.center,
        b.radius,
        degree + 2,
        DEFAULT_QUAD_ORDER,
    )?))
}

/// Largest coefficient of `d𝙿u − u` over random closed forms of every
/// degree, on both domains.
pub fn null_homotopy_residual(cfg: &VerifyConfig, n: usize, domain: &StarDomain) -> Result<f64> {
    let p = poincare_for(domain, cfg.poly_degree)?;
    let mut worst: f64 = 0.0;
    for l in 1..=n {
        for k in 0..cfg.homotopy_samples {
            let seed = member_seed(cfg.seed ^ 0xb2, (n * 10 + l) * 10_000 + k);
            let u = if l == n {
                PolyForm::random(n, l, cfg.poly_degree, seed)?
            } else {
                PolyForm::random_closed(n, l, cfg.poly_degree, seed)?
            };
            let du = p.apply_poly(&u)?.exterior_derivative()?;
            worst = worst.max(du.sub(&u).max_coeff());
        }
    }
    Ok(worst)
}

/// Worst residuals of the first- and second-derivative expansions of the
/// scalar operators against direct symbolic differentiation.
pub fn derivative_formula_residuals(cfg: &VerifyConfig) -> Result<(f64, f64)> {
    let n = 2;
    let dom = StarDomain::ball(&[0.0, 0.0], 1.0, 0.5)?;
    let p = poincare_for(&dom, cfg.poly_degree + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc3);
    let (mut first, mut second): (f64, f64) = (0.0, 0.0);
    for k in 0..cfg.derivative_samples {
        let f = PolyForm::random(n, 0, cfg.poly_degree, member_seed(cfg.seed ^ 0xc4, k))?
            .components()[0]
            .clone();
        let x = dom.sample_point(&mut rng);
        let l = rng.random_range(1..=n);
        let m = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        let a = rng.random_range(1..=n);
        first = first.max(p.gradient_residual(l, m, j, &f, &x)?);
        if l < n {
            second = second.max(p.second_derivative_residual(l, m, j, a, &f, &x)?);
        }
    }
    Ok((first, second))
}

pub fn homotopy_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &n in &cfg.homotopy_dims {
        for (name, dom) in homotopy_domains(n)? {
            let r = null_homotopy_residual(cfg, n, &dom)?;
            out.push(Check::new(
                "homotopy",
                format!("null_homotopy_{name}_n{n}"),
                r,
                cfg.tolerances.homotopy,
            ));
        }
    }
    let (first, second) = derivative_formula_residuals(cfg)?;
    out.push(Check::new(
        "homotopy",
        "first_derivative_formula",
        first,
        cfg.tolerances.derivative,
    ));
    out.push(Check::new(
        "homotopy",
        "second_derivative_formula",
        second,
        cfg.tolerances.derivative,
    ));
    Ok(out)
}

/// The unit disk with the ball of radius 1/2 used by the Bogovskiĭ suites.
pub fn unit_disk() -> Result<StarDomain> {
    StarDomain::ball(&[0.0, 0.0], 1.0, 0.5)
}

/// `w = β·p` for a bump inside the unit disk and a random quadratic `p`.
pub fn bump_potential(seed: u64) -> Result<CutoffForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = rng.random_range(0.35..0.6);
    let reach = 0.95 - radius;
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let dist = rng.random_range(0.0..reach);
    let center = [dist * angle.cos(), dist * angle.sin()];
    Ok(CutoffForm::new(
        Ball::new(&center, radius),
        PolyForm::random(2, 0, 2, seed)?,
    ))
}

/// `max |d𝙱u − u| / max |u|` at random points of the bump support, with
/// `d𝙱u` from differentiating under the integral.
pub fn bogovskii_exactness(
    op: &BogovskiiConfig,
    u: &dyn FormField,
    points: &[Vec<f64>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for x in points {
        let d = op
            .apply_jet(u, x)?
            .exterior_derivative()
            .ok_or(Error::TopDegreeDerivative)?;
        let target = u.value(x);
        worst = worst.max((&d - &target).max_abs());
        scale = scale.max(target.max_abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

fn points_in_ball(ball: &Ball, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dom = StarDomain::ball(&ball.center, ball.radius, 0.5 * ball.radius).expect("valid ball");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| dom.sample_point(&mut rng)).collect()
}

/// Exactness residual of every bump pair at each ray order.
pub fn bogovskii_levels(cfg: &VerifyConfig) -> Result<Vec<Vec<f64>>> {
    let dom = unit_disk()?;
    let mut out = Vec::new();
    for &orders in &cfg.bogovskii_levels {
        let op = BogovskiiConfig::new(dom.clone())?.with_orders(orders);
        let mut row = Vec::new();
        for k in 0..cfg.bogovskii_pairs {
            let w = bump_potential(member_seed(cfg.seed ^ 0xd5, k))?;
            let u = w.derivative()?;
            // Sample where u is large: inside 70% of the bump radius.
            let inner = Ball::new(&w.ball().center, 0.7 * w.ball().radius);
            let pts = points_in_ball(
                &inner,
                cfg.bogovskii_points,
                member_seed(cfg.seed ^ 0xd6, k),
            );
            row.push(bogovskii_exactness(&op, &u, &pts)?);
        }
        out.push(row);
    }
    Ok(out)
}

/// Worst `|𝙱u(x) − (x² − x)|` for `u = (2x − 1) dx` on `(0, 1)`.
pub fn one_dimensional_oracle() -> Result<f64> {
    let dom = StarDomain::ball(&[0.5], 0.5, 0.3)?;
    let op = BogovskiiConfig::new(dom)?.with_orders(RayOrders::uniform(48));
    let u = PolyField::new(PolyForm::monomial_form(
        1,
        IndexTuple::single(1),
        MultiPoly::from_terms(1, [([1, 0, 0, 0, 0, 0], 2.0), ([0; 6], -1.0)]),
    ));
    let mut worst: f64 = 0.0;
    for k in 1..20 {
        let x = k as f64 / 20.0;
        worst = worst.max((op.apply(&u, &[x])?.coeffs()[0] - (x * x - x)).abs());
    }
    Ok(worst)
}

/// `max |𝙱u|` at points of the disk outside `hull(B ∪ supp u)`, and the
/// quadrature error estimated there as the change from the previous level
/// to the production level.
pub fn locality_residual(cfg: &VerifyConfig) -> Result<(f64, f64)> {
    let dom = unit_disk()?;
    let levels = &cfg.bogovskii_levels;
    let fine =
        BogovskiiConfig::new(dom.clone())?.with_orders(*levels.last().expect("at least one level"));
    let coarse =
        BogovskiiConfig::new(dom.clone())?.with_orders(levels[levels.len().saturating_sub(2)]);
    let w = CutoffForm::new(
        Ball::new(&[0.45, 0.3], 0.3),
        PolyForm::random(2, 0, 2, cfg.seed)?,
    );
    let u = w.derivative()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe7);
    let (mut value, mut error): (f64, f64) = (0.0, 0.0);
    let mut found = 0;
    while found < cfg.locality_points {
        let x = dom.sample_point(&mut rng);
        if hull_distance(&x, &dom.ball, w.ball()) <= 0.0 {
            continue;
        }
        found += 1;
        let a = fine.apply(&u, &x)?;
        let b = coarse.apply(&u, &x)?;
        value = value.max(a.max_abs());
        error = error.max((&a - &b).max_abs());
    }
    Ok((value, error))
}

pub fn locality_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let levels = bogovskii_levels(cfg)?;
    let worst: Vec<f64> = levels
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();
    let production = *worst.last().unwrap_or(&f64::INFINITY);
    // Largest ratio between consecutive levels: below 1 means every
    // refinement improved the worst pair.
    let improvement = worst.windows(2).map(|p| p[1] / p[0]).fold(0.0, f64::max);
    let (outside, qerr) = locality_residual(cfg)?;
    Ok(vec![
        Check::new(
            "locality",
            "bogovskii_exactness",
            production,
            cfg.tolerances.bogovskii,
        ),
        Check::new("locality", "refinement_improves", improvement, 1.0),
        Check::new(
            "locality",
            "one_dimensional_oracle",
            one_dimensional_oracle()?,
            cfg.tolerances.oracle,
        ),
        Check::new("locality", "vanishes_outside_hull", outside, qerr),
    ])
}

/// Largest `|⟨tr 𝙱u, ψ⟩| / tolerance` over random `ψ`, for one bump pair
/// on the unit disk.
pub fn bogovskii_trace_ratio(cfg: &VerifyConfig) -> Result<f64> {
    let dom = unit_disk()?;
    let orders = *cfg.bogovskii_levels.last().expect("at least one level");
    let op = BogovskiiConfig::new(dom.clone())?.with_orders(orders);
    let w = bump_potential(member_seed(cfg.seed ^ 0xd5, 0))?;
    let u = w.derivative()?;
    let inner = Ball::new(&w.ball().center, 0.7 * w.ball().radius);
    let op_rel = bogovskii_exactness(
        &op,
        &u,
        &points_in_ball(&inner, cfg.bogovskii_points, cfg.seed),
    )?;
    let v = BogovskiiField::new(&op, &u);
    let levels = JetLevels::new(
        &v,
        dom.grid_nodes(cfg.trace_cell),
        dom.grid_nodes(2.0 * cfg.trace_cell),
    );
    let psis: Vec<PolyForm> = (0..cfg.trace_forms)
        .map(|k| PolyForm::random(2, 1, 2, member_seed(cfg.seed ^ 0xf8, k)))
        .collect::<Result<_>>()?;
    levels.max_trace_ratio(&psis, op_rel)
}

pub fn trace_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    Ok(vec![Check::new(
        "trace",
        "bogovskii_output_trace",
        bogovskii_trace_ratio(cfg)?,
        1.0,
    )])
}

/// A closed polynomial input of degree `l` in dimension `n`.
pub fn glue_input(n: usize, l: usize, degree: usize, seed: u64) -> Result<PolyForm> {
    if l == n {
        PolyForm::random(n, l, degree, seed)
    } else {
        PolyForm::random_closed(n, l, degree, seed)
    }
}

/// The compactly supported closed input of the boundary-condition gluing: the
/// derivative of a bump centred on the first overlap.
pub fn bc_input(
    chain: &crate::chain::ChainDecomposition,
    seed: u64,
) -> Result<crate::cutoff::CutoffDerivative> {
    let (a, b) = chain.partition().ramps()[0];
    let n = chain.dim();
    let mut center = vec![0.0; n];
    center[0] = 0.5 * (a + b);
    let radius = 0.9 * chain.spec().radius;
    CutoffForm::new(Ball::new(&center, radius), PolyForm::random(n, 0, 1, seed)?).derivative()
}

/// One chain experiment: `links` copies of the link in `spec`, glued in the
/// boundary mode when `bc` holds (with [`bc_input`]) and otherwise in the
/// polynomial mode (with [`glue_input`] of the given degree).
pub fn run_chain_case(
    spec: &ChainSpec,
    links: usize,
    l: usize,
    bc: bool,
    glue: &GlueConfig,
    poly_degree: usize,
    seed: u64,
) -> Result<GlueReport> {
    let chain = build_chain(&ChainSpec {
        links,
        ..spec.clone()
    })?;
    if bc {
        if l != 1 {
            return Err(Error::InvalidParameter(format!(
                "the boundary-mode input is a 1-form, not a {l}-form"
            )));
        }
        let u = bc_input(&chain, seed)?;
        glue_bc(&chain, &u, glue)?.report(glue)
    } else {
        let u = glue_input(
            chain.dim(),
            l,
            poly_degree,
            member_seed(seed, links * 10 + l),
        )?;
        glue_no_bc(&chain, &u, glue)?.report(&u, glue)
    }
}

pub fn gluing_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    for &l in &cfg.chain_degrees {
        let mut bounds = Vec::new();
        for &links in &cfg.chain_links {
            let r = run_chain_case(
                &cfg.chain,
                links,
                l,
                false,
                &cfg.glue,
                cfg.poly_degree,
                cfg.seed,
            )?;
            let tag = format!("no_bc_N{links}_l{l}");
            out.push(Check::new(
                "gluing",
                format!("{tag}_dv"),
                r.max_dv_residual,
                tol.glue_dv,
            ));
            out.push(Check::new(
                "gluing",
                format!("{tag}_interface_jump"),
                r.max_interface_jump,
                tol.glue_jump,
            ));
            if l == 1 {
                out.push(Check::new(
                    "gluing",
                    format!("{tag}_constancy_std"),
                    r.constancy_std,
                    tol.glue_constancy,
                ));
            }
            out.push(Check::new(
                "gluing",
                format!("{tag}_h1_over_bound"),
                r.ratio(),
                r.chain_bound,
            ));
            bounds.push(r.chain_bound);
        }
        if let Some(&first) = bounds.first() {
            let spread = bounds
                .iter()
                .map(|b| (b - first).abs() / first)
                .fold(0.0, f64::max);
            out.push(Check::new(
                "gluing",
                format!("no_bc_l{l}_bound_independent_of_N"),
                spread,
                1e-12,
            ));
        }
    }
    if cfg.chain_bc {
        let r = run_chain_case(&cfg.chain, 2, 1, true, &cfg.glue, cfg.poly_degree, cfg.seed)?;
        let chain = build_chain(&ChainSpec {
            links: 2,
            ..cfg.chain.clone()
        })?;
        out.push(Check::new(
            "gluing",
            "bc_N2_l1_dv_relative",
            r.max_dv_residual,
            tol.glue_bc_dv,
        ));
        out.push(Check::new(
            "gluing",
            "bc_N2_l1_overlap_trace",
            r.overlap_trace,
            1.0,
        ));
        out.push(Check::new(
            "gluing",
            "bc_N2_l1_output_trace",
            r.output_trace,
            1.0,
        ));
        out.push(Check::new(
            "gluing",
            "bc_N2_l1_h1_over_bound",
            r.ratio(),
            r.chain_bound,
        ));
        let top = PolyField::new(PolyForm::random(chain.dim(), chain.dim(), 1, cfg.seed)?);
        let rejected = matches!(
            glue_bc(&chain, &top, &cfg.glue),
            Err(Error::TopDegreeWithBoundary)
        );
        out.push(Check::new(
            "gluing",
            "bc_rejects_top_degree",
            if rejected { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    Ok(out)
}
