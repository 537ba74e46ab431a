//! The TOML run configuration.
//!
//! Every numeric setting is spelled out in the file: there are no serde
//! defaults, so a config that parses fully determines the output. Each
//! command only requires the sections it reads.

use std::path::Path;

use serde::Deserialize;
use starforms::chain::{ChainSpec, GlueConfig};
use starforms::sweep::SweepConfig;
use starforms::verify::{Tolerances, VerifyConfig};
use starforms::{EstimateConfig, OperatorKind, RayOrders, MAX_DIM};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub verify: Option<VerifySection>,
    pub sweep: Option<SweepSection>,
    pub chain: Option<ChainSection>,
    pub moments: Option<MomentsSection>,
    pub geometry: Option<GeometrySection>,
    pub glue: Option<GlueSection>,
    pub tolerances: Option<ToleranceSection>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    pub angular: usize,
    pub radial: usize,
    pub ray: usize,
}

impl From<Orders> for RayOrders {
    fn from(o: Orders) -> Self {
        RayOrders {
            angular: o.angular,
            radial: o.radial,
            ray: o.ray,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub scale: f64,
    pub cell: f64,
    pub orders: Orders,
    pub fd_step: f64,
}

impl From<&EstimateSection> for EstimateConfig {
    fn from(e: &EstimateSection) -> Self {
        EstimateConfig {
            scale: e.scale,
            cell: e.cell,
            orders: e.orders.into(),
            fd_step: e.fd_step,
        }
    }
}

/// Shape of one chain link; the number of links comes from the command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n: usize,
    pub radius: f64,
    pub half_length: f64,
    pub overlap: f64,
    pub ball_fraction: f64,
    pub inset: f64,
    pub samples: usize,
    pub seed: u64,
}

impl GeometrySection {
    fn spec(&self) -> ChainSpec {
        ChainSpec {
            n: self.n,
            links: 2,
            radius: self.radius,
            half_length: self.half_length,
            overlap: self.overlap,
            ball_fraction: self.ball_fraction,
            inset: self.inset,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueSection {
    pub samples: usize,
    pub cell: f64,
    pub seed: u64,
    pub ensemble: usize,
    pub poly_degree: usize,
    pub safety: f64,
    pub orders: Orders,
    pub correction_cell: f64,
    pub battery: usize,
    pub fd_step: f64,
    pub estimate: EstimateSection,
}

impl From<&GlueSection> for GlueConfig {
    fn from(g: &GlueSection) -> Self {
        GlueConfig {
            samples: g.samples,
            cell: g.cell,
            seed: g.seed,
            ensemble: g.ensemble,
            poly_degree: g.poly_degree,
            safety: g.safety,
            estimate: (&g.estimate).into(),
            orders: g.orders.into(),
            correction_cell: g.correction_cell,
            battery: g.battery,
            fd_step: g.fd_step,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
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

impl ToleranceSection {
    fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut t = Tolerances::default();
        let values = [
            self.algebra,
            self.homotopy,
            self.derivative,
            self.bogovskii,
            self.oracle,
            self.glue_dv,
            self.glue_jump,
            self.glue_constancy,
            self.glue_bc_dv,
        ];
        for (name, value) in Tolerances::NAMES.iter().zip(values) {
            t.set(name, value)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub algebra_dims: Vec<usize>,
    pub algebra_samples: usize,
    pub homotopy_dims: Vec<usize>,
    pub homotopy_samples: usize,
    pub poly_degree: usize,
    pub derivative_samples: usize,
    pub bogovskii_pairs: usize,
    pub bogovskii_points: usize,
    pub bogovskii_levels: Vec<Orders>,
    pub locality_points: usize,
    pub trace_forms: usize,
    pub trace_cell: f64,
    pub chain_links: Vec<usize>,
    pub chain_degrees: Vec<usize>,
    pub chain_bc: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n: usize,
    pub eccentricities: Vec<f64>,
    pub tube_radius: f64,
    pub ball_radius: f64,
    pub kinds: Vec<String>,
    pub degrees: Vec<usize>,
    pub ensemble: usize,
    pub poly_degree: usize,
    pub seed: u64,
    pub safety: f64,
    pub estimate: EstimateSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    /// Link counts and degrees of the polynomial-mode runs.
    pub links: Vec<usize>,
    pub degrees: Vec<usize>,
    /// Link counts of the boundary-mode runs, always with 1-forms.
    pub bc_links: Vec<usize>,
    pub poly_degree: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub center: Vec<f64>,
    pub radius: f64,
    pub max_degree: usize,
    pub quad_order: usize,
}

/// A chain command fully resolved against the library types.
pub struct ChainPlan {
    pub spec: ChainSpec,
    pub glue: GlueConfig,
    pub tolerances: Tolerances,
    pub section: ChainSection,
}

fn check_dim(what: &str, n: usize) -> Result<(), CliError> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what}: dimension {n} is outside 1..={MAX_DIM}"
        )))
    }
}

fn check_degrees(what: &str, n: usize, degrees: &[usize], lo: usize) -> Result<(), CliError> {
    match degrees.iter().find(|&&l| l < lo || l > n) {
        Some(l) => Err(CliError::Config(format!(
            "{what}: degree {l} is outside {lo}..={n}"
        ))),
        None => Ok(()),
    }
}

fn required<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn chain_parts(&self) -> Result<(ChainSpec, GlueConfig, Tolerances), CliError> {
        let geometry = required(&self.geometry, "geometry")?;
        check_dim("geometry", geometry.n)?;
        let glue = required(&self.glue, "glue")?;
        let tolerances = required(&self.tolerances, "tolerances")?.tolerances()?;
        Ok((geometry.spec(), glue.into(), tolerances))
    }

    pub fn verify(&self) -> Result<VerifyConfig, CliError> {
        let v = required(&self.verify, "verify")?;
        for &n in v.algebra_dims.iter().chain(&v.homotopy_dims) {
            check_dim("verify", n)?;
        }
        if v.bogovskii_levels.is_empty() {
            return Err(CliError::Config("verify: bogovskii_levels is empty".into()));
        }
        let (chain, glue, tolerances) = self.chain_parts()?;
        check_degrees("verify.chain_degrees", chain.n, &v.chain_degrees, 1)?;
        Ok(VerifyConfig {
            seed: v.seed,
            algebra_dims: v.algebra_dims.clone(),
            algebra_samples: v.algebra_samples,
            homotopy_dims: v.homotopy_dims.clone(),
            homotopy_samples: v.homotopy_samples,
            poly_degree: v.poly_degree,
            derivative_samples: v.derivative_samples,
            bogovskii_pairs: v.bogovskii_pairs,
            bogovskii_points: v.bogovskii_points,
            bogovskii_levels: v.bogovskii_levels.iter().map(|&o| o.into()).collect(),
            locality_points: v.locality_points,
            trace_forms: v.trace_forms,
            trace_cell: v.trace_cell,
            chain_links: v.chain_links.clone(),
            chain_degrees: v.chain_degrees.clone(),
            chain,
            glue,
            chain_bc: v.chain_bc,
            tolerances,
        })
    }

    pub fn sweep(&self) -> Result<SweepConfig, CliError> {
        let s = required(&self.sweep, "sweep")?;
        check_dim("sweep", s.n)?;
        check_degrees("sweep.degrees", s.n, &s.degrees, 1)?;
        let kinds = s
            .kinds
            .iter()
            .map(|k| {
                k.parse::<OperatorKind>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(SweepConfig {
            n: s.n,
            eccentricities: s.eccentricities.clone(),
            tube_radius: s.tube_radius,
            ball_radius: s.ball_radius,
            kinds,
            degrees: s.degrees.clone(),
            ensemble: s.ensemble,
            poly_degree: s.poly_degree,
            seed: s.seed,
            safety: s.safety,
            estimate: (&s.estimate).into(),
        })
    }

    pub fn chain(&self) -> Result<ChainPlan, CliError> {
        let section = required(&self.chain, "chain")?.clone();
        let (spec, glue, tolerances) = self.chain_parts()?;
        check_degrees("chain.degrees", spec.n, &section.degrees, 1)?;
        if !section.bc_links.is_empty() && spec.n < 2 {
            return Err(CliError::Config(
                "chain.bc_links: boundary-mode 1-forms need n ≥ 2".into(),
            ));
        }
        Ok(ChainPlan {
            spec,
            glue,
            tolerances,
            section,
        })
    }

    pub fn moments(&self) -> Result<&MomentsSection, CliError> {
        let m = required(&self.moments, "moments")?;
        check_dim("moments", m.center.len())?;
        Ok(m)
    }
}
