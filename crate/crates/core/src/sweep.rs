//! Bound-shape sweeps over a family of cigars that share one inscribed ball.

use crate::constants::{estimate_empirical_ratio, BoundReport, EstimateConfig, OperatorKind};
use crate::error::{Error, Result};
use crate::geometry::StarDomain;

/// Cigar of tube radius `tube` whose diameter is `2·tube·e`, centred at the
/// origin along `x₁`, with a centred inscribed ball of radius `ball`.
pub fn cigar_member(n: usize, e: f64, tube: f64, ball: f64) -> Result<StarDomain> {
    if !(e >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eccentricity must be at least 1, got {e}"
        )));
    }
    let half = (e - 1.0) * tube;
    let mut start = vec![0.0; n];
    let mut end = vec![0.0; n];
    start[0] = -half;
    end[0] = half;
    StarDomain::cigar(&start, &end, tube, ball)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub eccentricities: Vec<f64>,
    pub tube_radius: f64,
    pub ball_radius: f64,
    pub kinds: Vec<OperatorKind>,
    /// Form degrees; empty means all of `1..=n`.
    pub degrees: Vec<usize>,
    pub ensemble: usize,
    pub poly_degree: usize,
    pub seed: u64,
    /// Calibrated bounds sit at this multiple of the first member's ratio.
    pub safety: f64,
    pub estimate: EstimateConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 2,
            eccentricities: vec![1.0, 2.0, 4.0, 8.0],
            tube_radius: 1.0,
            ball_radius: 0.45,
            kinds: vec![OperatorKind::Poincare, OperatorKind::Bogovskii],
            degrees: Vec::new(),
            ensemble: 16,
            poly_degree: 3,
            seed: 20240611,
            safety: 2.0,
            estimate: EstimateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eccentricity: f64,
    pub report: BoundReport,
}

/// Rows of one `(kind, ℓ)` series with its calibration and checks.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSeries {
    pub kind: OperatorKind,
    pub l: usize,
    pub scale: f64,
    pub rows: Vec<SweepRow>,
    /// Members, after the first, whose measured ratio exceeds the bound.
    pub violations: Vec<f64>,
    pub empirical_monotone: bool,
    pub bound_monotone: bool,
}

impl SweepSeries {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.empirical_monotone && self.bound_monotone
    }
}

/// Nondecreasing up to rounding: both norms are computed independently, so
/// equal ratios can differ in the last few bits.
fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] >= p[0] - 1e-9 * p[0].abs())
}

/// Runs every `(kind, ℓ)` series: measures each member, fits the scale on the
/// first one and checks the rest against the fitted bound.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepSeries>> {
    if cfg.eccentricities.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one eccentricity".into(),
        ));
    }
    if !nondecreasing(&cfg.eccentricities) {
        return Err(Error::InvalidParameter(
            "eccentricities must be sorted".into(),
        ));
    }
    let domains: Vec<StarDomain> = cfg
        .eccentricities
        .iter()
        .map(|&e| cigar_member(cfg.n, e, cfg.tube_radius, cfg.ball_radius))
        .collect::<Result<_>>()?;
    let degrees: Vec<usize> = if cfg.degrees.is_empty() {
        (1..=cfg.n).collect()
    } else {
        cfg.degrees.clone()
    };
    let mut out = Vec::new();
    for &kind in &cfg.kinds {
        for &l in &degrees {
            let mut rows = Vec::with_capacity(domains.len());
            for (d, &e) in domains.iter().zip(&cfg.eccentricities) {
                let report = estimate_empirical_ratio(
                    kind,
                    l,
                    d,
                    &cfg.estimate,
                    cfg.ensemble,
                    cfg.poly_degree,
                    cfg.seed,
                )?;
                rows.push(SweepRow {
                    eccentricity: e,
                    report,
                });
            }
            let scale = rows[0].report.calibrated_scale(cfg.safety);
            for row in &mut rows {
                row.report = row.report.rescaled(scale);
            }
            let violations = rows[1..]
                .iter()
                .filter(|r| r.report.empirical_ratio > r.report.bound_value)
                .map(|r| r.eccentricity)
                .collect();
            let emp: Vec<f64> = rows.iter().map(|r| r.report.empirical_ratio).collect();
            let bound: Vec<f64> = rows.iter().map(|r| r.report.bound_value).collect();
            out.push(SweepSeries {
                kind,
                l,
                scale,
                violations,
                empirical_monotone: nondecreasing(&emp),
                bound_monotone: nondecreasing(&bound),
                rows,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_have_the_requested_eccentricity() {
        for e in [1.0, 2.0, 4.0, 8.0] {
            let d = cigar_member(2, e, 1.0, 0.45).unwrap();
            let s = d.stats();
            assert!((s.diameter - 2.0 * e).abs() < 1e-12);
            assert!(s.ratio_vol > 1.0);
        }
        assert!(cigar_member(2, 0.5, 1.0, 0.45).is_err());
    }

    #[test]
    fn small_poincare_sweep() {
        let cfg = SweepConfig {
            eccentricities: vec![1.0, 2.0],
            kinds: vec![OperatorKind::Poincare],
            degrees: vec![1],
            ensemble: 3,
            ..SweepConfig::default()
        };
        let series = run_sweep(&cfg).unwrap();
        assert_eq!(series.len(), 1);
        let s = &series[0];
        assert_eq!(s.rows.len(), 2);
        let first = &s.rows[0].report;
        assert!(
            (first.bound_value - 2.0 * first.empirical_ratio).abs() < 1e-12 * first.bound_value
        );
        assert!(s.bound_monotone);
    }
}
