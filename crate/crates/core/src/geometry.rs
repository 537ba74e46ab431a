//! Star-shaped domains with an inscribed ball.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::check_dim;
use crate::quadrature::{ball_volume, sphere_rule, NodeSet};

/// Open Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(x, &self.center) < self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }

    fn line_coefficients(&self, p: &[f64], d: &[f64]) -> (f64, f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut c = -self.radius * self.radius;
        for i in 0..p.len() {
            let q = p[i] - self.center[i];
            a += d[i] * d[i];
            b += q * d[i];
            c += q * q;
        }
        (a, b, c)
    }

    /// Larger root `t` of `|p + t d − c| = r`, if the line meets the sphere.
    fn far_root(&self, p: &[f64], d: &[f64]) -> Option<f64> {
        let (a, b, c) = self.line_coefficients(p, d);
        quadratic_far_root(a, b, c)
    }

    /// Parameters `t₀ < t₁` where the line `p + t d` crosses the sphere.
    pub fn chord(&self, p: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let (a, b, c) = self.line_coefficients(p, d);
        let far = quadratic_far_root(a, b, c)?;
        let near = if far != 0.0 {
            c / (a * far)
        } else {
            -2.0 * b / a
        };
        (near < far).then_some((near, far))
    }
}

/// Larger root of `a t² + 2 b t + c = 0`.
fn quadratic_far_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = b * b - a * c;
    if a <= 0.0 || disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Stable form of (−b + s)/a.
    Some(if b <= 0.0 { (s - b) / a } else { -c / (b + s) })
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Distance from `x` to the segment `[a, b]`.
fn segment_distance2(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut proj = 0.0;
    for i in 0..x.len() {
        let d = b[i] - a[i];
        ab2 += d * d;
        proj += (x[i] - a[i]) * d;
    }
    let t = if ab2 > 0.0 {
        (proj / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    x.iter()
        .enumerate()
        .map(|(i, xi)| {
            let p = a[i] + t * (b[i] - a[i]);
            (xi - p) * (xi - p)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball(Ball),
    /// `{x : Σ (Q(x−c))_i² / a_i² < 1}` for an orthogonal `Q` given row-major
    /// (identity when `rotation` is `None`).
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        rotation: Option<Vec<f64>>,
    },
    /// Points within `radius` of the segment `[start, end]`.
    Cigar {
        start: Vec<f64>,
        end: Vec<f64>,
        radius: f64,
    },
    /// Planar domain `{c + s(cos φ, sin φ) : s < r(φ)}` with
    /// `r(φ) = a₀ + Σ_k (a_k cos kφ + b_k sin kφ)`.
    RadialStar2D {
        center: [f64; 2],
        a0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Intersection(Vec<Shape>),
    /// Points of the first shape not in the second.
    Difference(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball(b) => b.center.len(),
            Shape::Ellipsoid { center, .. } => center.len(),
            Shape::Cigar { start, .. } => start.len(),
            Shape::RadialStar2D { .. } => 2,
            Shape::Intersection(parts) => parts[0].dim(),
            Shape::Difference(a, _) => a.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball(b) => b.contains(x),
            Shape::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let y = ellipsoid_frame(x, center, rotation.as_deref());
                y.iter()
                    .zip(semi_axes)
                    .map(|(v, a)| (v / a) * (v / a))
                    .sum::<f64>()
                    < 1.0
            }
            Shape::Cigar { start, end, radius } => {
                segment_distance2(x, start, end) < radius * radius
            }
            Shape::RadialStar2D { center, .. } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                dx.hypot(dy) < self.radial_profile(dy.atan2(dx))
            }
            Shape::Intersection(parts) => parts.iter().all(|p| p.contains(x)),
            Shape::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    fn radial_profile(&self, phi: f64) -> f64 {
        match self {
            Shape::RadialStar2D { a0, cos, sin, .. } => {
                let mut r = *a0;
                for (k, c) in cos.iter().enumerate() {
                    r += c * ((k + 1) as f64 * phi).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    r += s * ((k + 1) as f64 * phi).sin();
                }
                r
            }
            _ => unreachable!(),
        }
    }

    /// Axis-aligned box `(lo, hi)` containing the shape.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball(b) => (
                b.center.iter().map(|c| c - b.radius).collect(),
                b.center.iter().map(|c| c + b.radius).collect(),
            ),
            Shape::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let n = center.len();
                // Half-width along axis i is sqrt(Σ_k Q_ki² a_k²).
                let half: Vec<f64> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|k| {
                                let q = rotation
                                    .as_ref()
                                    .map_or(if i == k { 1.0 } else { 0.0 }, |r| r[k * n + i]);
                                q * q * semi_axes[k] * semi_axes[k]
                            })
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect();
                (
                    center.iter().zip(&half).map(|(c, h)| c - h).collect(),
                    center.iter().zip(&half).map(|(c, h)| c + h).collect(),
                )
            }
            Shape::Cigar { start, end, radius } => (
                start
                    .iter()
                    .zip(end)
                    .map(|(a, b)| a.min(*b) - radius)
                    .collect(),
                start
                    .iter()
                    .zip(end)
                    .map(|(a, b)| a.max(*b) + radius)
                    .collect(),
            ),
            Shape::RadialStar2D {
                center,
                a0,
                cos,
                sin,
            } => {
                let bound = a0.abs() + cos.iter().chain(sin).map(|v| v.abs()).sum::<f64>();
                (
                    vec![center[0] - bound, center[1] - bound],
                    vec![center[0] + bound, center[1] + bound],
                )
            }
            Shape::Intersection(parts) => {
                let boxes: Vec<_> = parts.iter().map(Shape::bounding_box).collect();
                let n = self.dim();
                (
                    (0..n)
                        .map(|i| boxes.iter().map(|b| b.0[i]).fold(f64::MIN, f64::max))
                        .collect(),
                    (0..n)
                        .map(|i| boxes.iter().map(|b| b.1[i]).fold(f64::MAX, f64::min))
                        .collect(),
                )
            }
            Shape::Difference(a, _) => a.bounding_box(),
        }
    }

    /// Whether the shape is known to be convex, so that every interior point
    /// sees the boundary exactly once along each ray.
    pub fn is_convex(&self) -> bool {
        match self {
            Shape::Ball(_) | Shape::Ellipsoid { .. } | Shape::Cigar { .. } => true,
            Shape::Intersection(parts) => parts.iter().all(Shape::is_convex),
            Shape::RadialStar2D { .. } | Shape::Difference(..) => false,
        }
    }

    /// Exact diameter where a closed form exists.
    fn analytic_diameter(&self) -> Option<f64> {
        match self {
            Shape::Ball(b) => Some(2.0 * b.radius),
            Shape::Ellipsoid { semi_axes, .. } => {
                Some(2.0 * semi_axes.iter().fold(0.0f64, |m, a| m.max(*a)))
            }
            Shape::Cigar { start, end, radius } => Some(dist2(start, end).sqrt() + 2.0 * radius),
            _ => None,
        }
    }

    /// Exact volume where a closed form exists.
    fn analytic_volume(&self) -> Option<f64> {
        let n = self.dim();
        match self {
            Shape::Ball(b) => Some(b.volume()),
            Shape::Ellipsoid { semi_axes, .. } => {
                Some(ball_volume(n) * semi_axes.iter().product::<f64>())
            }
            Shape::Cigar { start, end, radius } => {
                let len = dist2(start, end).sqrt();
                let tube = if n == 1 {
                    1.0
                } else {
                    ball_volume(n - 1) * radius.powi(n as i32 - 1)
                };
                Some(ball_volume(n) * radius.powi(n as i32) + tube * len)
            }
            Shape::RadialStar2D { a0, cos, sin, .. } => {
                let ripple: f64 = cos.iter().chain(sin).map(|v| v * v).sum();
                Some(PI * a0 * a0 + 0.5 * PI * ripple)
            }
            _ => None,
        }
    }

    /// Exit parameter along `p + t d` for shapes with a quadratic boundary.
    fn analytic_exit(&self, p: &[f64], d: &[f64]) -> Option<f64> {
        match self {
            Shape::Ball(b) => b.far_root(p, d),
            Shape::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let q = ellipsoid_frame(p, center, rotation.as_deref());
                let zero = vec![0.0; d.len()];
                let e = ellipsoid_frame(d, &zero, rotation.as_deref());
                let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
                for i in 0..q.len() {
                    let s = 1.0 / (semi_axes[i] * semi_axes[i]);
                    a += e[i] * e[i] * s;
                    b += q[i] * e[i] * s;
                    c += q[i] * q[i] * s;
                }
                quadratic_far_root(a, b, c)
            }
            _ => None,
        }
    }
}

fn ellipsoid_frame(x: &[f64], center: &[f64], rotation: Option<&[f64]>) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    match rotation {
        None => d,
        Some(q) => (0..n)
            .map(|i| (0..n).map(|k| q[i * n + k] * d[k]).sum())
            .collect(),
    }
}

/// A domain together with a ball it is star-shaped with respect to.
#[derive(Clone, Debug, PartialEq)]
pub struct StarDomain {
    pub shape: Shape,
    pub ball: Ball,
}

/// Geometric data entering the continuity constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainStats {
    /// Diameter of the domain.
    pub diameter: f64,
    /// Diameter of the inscribed ball.
    pub ball_diameter: f64,
    pub volume: f64,
    pub ball_volume: f64,
    pub ratio_diam: f64,
    pub ratio_vol: f64,
}

/// Quadrature level used when a volume has no closed form.
const VOLUME_LEVEL: usize = 6;
/// Directions used to sample the boundary for numerical diameters.
const DIAMETER_DIRECTIONS: usize = 512;

impl StarDomain {
    pub fn new(shape: Shape, ball: Ball) -> Result<Self> {
        let n = shape.dim();
        check_dim(n)?;
        if ball.center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ball.center.len(),
            });
        }
        if !(ball.radius > 0.0) {
            return Err(Error::InvalidParameter(
                "inscribed ball radius must be positive".into(),
            ));
        }
        if !shape.contains(&ball.center) {
            return Err(Error::InvalidParameter(
                "inscribed ball centre lies outside the shape".into(),
            ));
        }
        Ok(StarDomain { shape, ball })
    }

    /// Ball `B(center, radius)` with the concentric ball of radius
    /// `inner` as its inscribed ball.
    pub fn ball(center: &[f64], radius: f64, inner: f64) -> Result<Self> {
        Self::new(
            Shape::Ball(Ball::new(center, radius)),
            Ball::new(center, inner),
        )
    }

    /// Axis-aligned ellipsoid with a centred inscribed ball.
    pub fn ellipsoid(center: &[f64], semi_axes: &[f64], inner: f64) -> Result<Self> {
        Self::new(
            Shape::Ellipsoid {
                center: center.to_vec(),
                semi_axes: semi_axes.to_vec(),
                rotation: None,
            },
            Ball::new(center, inner),
        )
    }

    /// Cigar around `[start, end]` with the inscribed ball at the midpoint.
    pub fn cigar(start: &[f64], end: &[f64], radius: f64, inner: f64) -> Result<Self> {
        let mid: Vec<f64> = start.iter().zip(end).map(|(a, b)| 0.5 * (a + b)).collect();
        Self::new(
            Shape::Cigar {
                start: start.to_vec(),
                end: end.to_vec(),
                radius,
            },
            Ball::new(&mid, inner),
        )
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape.contains(x)
    }

    /// Largest `s ≥ 0` with `x + s e ∈ Ω` along the whole segment, for a
    /// point `x ∈ Ω` and a direction `e` (not necessarily unit).
    pub fn exit_distance(&self, x: &[f64], e: &[f64]) -> f64 {
        if let Some(t) = self.shape.analytic_exit(x, e) {
            return t.max(0.0);
        }
        // Bisection on membership; star-shapedness makes the exit unique for
        // rays leaving the inscribed ball.
        let (lo_box, hi_box) = self.shape.bounding_box();
        let span = norm(
            &lo_box
                .iter()
                .zip(&hi_box)
                .map(|(a, b)| b - a)
                .collect::<Vec<_>>(),
        );
        let speed = norm(e);
        let mut lo = 0.0;
        let mut hi = span / speed;
        let mut y = vec![0.0; x.len()];
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            for i in 0..x.len() {
                y[i] = x[i] + mid * e[i];
            }
            if self.contains(&y) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `T = sup{t ≥ 1 : z + t(x − z) ∈ Ω}` for `x ∈ Ω`.
    pub fn ray_exit(&self, z: &[f64], x: &[f64]) -> Result<f64> {
        let d: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
        if d.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateRay);
        }
        if !self.contains(x) {
            return Err(Error::PointOutsideDomain);
        }
        Ok(1.0 + self.exit_distance(x, &d))
    }

    /// Points on the boundary reached from the ball centre in `m`-ish
    /// directions.
    fn boundary_samples(&self, order: usize) -> Vec<Vec<f64>> {
        let c = &self.ball.center;
        sphere_rule(self.dim(), order)
            .iter()
            .map(|(e, _)| {
                let s = self.exit_distance(c, e);
                c.iter().zip(e).map(|(ci, ei)| ci + s * ei).collect()
            })
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        if let Some(d) = self.shape.analytic_diameter() {
            return d;
        }
        let order = match self.dim() {
            1 => 1,
            2 => DIAMETER_DIRECTIONS,
            _ => 48,
        };
        let pts = self.boundary_samples(order);
        let mut best: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.max(dist2(p, q));
            }
        }
        best.sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.shape
            .analytic_volume()
            .unwrap_or_else(|| self.quadrature_nodes(VOLUME_LEVEL).total_weight())
    }

    pub fn stats(&self) -> DomainStats {
        let diameter = self.diameter();
        let ball_diameter = 2.0 * self.ball.radius;
        let volume = self.volume();
        let ball_volume = self.ball.volume();
        DomainStats {
            diameter,
            ball_diameter,
            volume,
            ball_volume,
            ratio_diam: diameter / ball_diameter,
            ratio_vol: volume / ball_volume,
        }
    }

    /// Cells along the longest side of the bounding box at `level`.
    pub fn cells_per_side(level: usize) -> usize {
        8 << level
    }

    /// Midpoints of a uniform cubic grid on the bounding box that fall inside
    /// the domain, each weighted by the cell volume.
    pub fn quadrature_nodes(&self, level: usize) -> NodeSet {
        let (lo, hi) = self.shape.bounding_box();
        let longest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        self.grid_nodes(longest / Self::cells_per_side(level.max(1)) as f64)
    }

    /// Midpoint rule on a cubic grid of spacing `h`, independent of the
    /// domain's size.
    pub fn grid_nodes(&self, h: f64) -> NodeSet {
        let (lo, hi) = self.shape.bounding_box();
        let n = lo.len();
        let counts: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (((b - a) / h).ceil() as usize).max(1))
            .collect();
        // Centre the grid on the box.
        let origin: Vec<f64> = (0..n)
            .map(|i| 0.5 * (lo[i] + hi[i]) - 0.5 * counts[i] as f64 * h)
            .collect();
        let cell = h.powi(n as i32);
        let mut set = NodeSet::new(n);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        'outer: loop {
            for i in 0..n {
                x[i] = origin[i] + (idx[i] as f64 + 0.5) * h;
            }
            if self.contains(&x) {
                set.push(&x, cell);
            }
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
        set
    }

    /// Uniform random point in the domain by rejection from the bounding box.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (lo, hi) = self.shape.bounding_box();
        loop {
            let x: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| rng.random_range(*a..*b))
                .collect();
            if self.contains(&x) {
                return x;
            }
        }
    }

    /// Uniform random point in the inscribed ball.
    pub fn sample_ball_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let b = &self.ball;
        loop {
            let x: Vec<f64> = b
                .center
                .iter()
                .map(|c| c + b.radius * rng.random_range(-1.0..1.0))
                .collect();
            if b.contains(&x) {
                return x;
            }
        }
    }

    /// Monte Carlo check that segments from the inscribed ball to the domain
    /// stay inside, and that the ball itself is inside. Returns the first
    /// offending `(b, y)` pair found.
    pub fn verify_star_shape(&self, samples: usize, seed: u64) -> StarCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = 64;
        for _ in 0..samples.max(1) {
            let b = self.sample_ball_point(&mut rng);
            if !self.contains(&b) {
                return StarCheck {
                    star_shaped: false,
                    witness: Some((b.clone(), b)),
                };
            }
            let y = self.sample_point(&mut rng);
            for k in 1..steps {
                let s = k as f64 / steps as f64;
                let p: Vec<f64> = b
                    .iter()
                    .zip(&y)
                    .map(|(bi, yi)| bi + s * (yi - bi))
                    .collect();
                if !self.contains(&p) {
                    return StarCheck {
                        star_shaped: false,
                        witness: Some((b, y)),
                    };
                }
            }
        }
        StarCheck {
            star_shaped: true,
            witness: None,
        }
    }
}

/// Outcome of [`StarDomain::verify_star_shape`].
#[derive(Clone, Debug, PartialEq)]
pub struct StarCheck {
    pub star_shaped: bool,
    /// A ball point and a domain point whose segment leaves the domain.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> StarDomain {
        StarDomain::ball(&[0.0, 0.0], 1.0, 0.5).unwrap()
    }

    #[test]
    fn membership() {
        let d = unit_disk();
        assert!(d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[2.0, 0.0]));
        let e = StarDomain::ellipsoid(&[0.0, 0.0], &[2.0, 1.0], 0.5).unwrap();
        assert!(e.contains(&[1.5, 0.0]));
        assert!(!e.contains(&[0.0, 1.01]));
        let c = StarDomain::cigar(&[0.0, 0.0], &[2.0, 0.0], 1.0, 0.9).unwrap();
        assert!(c.contains(&[2.9, 0.0]));
        assert!(!c.contains(&[2.9, 0.5]));
    }

    #[test]
    fn ray_exit_examples() {
        let d = unit_disk();
        assert!((d.ray_exit(&[0.0, 0.0], &[0.5, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((d.ray_exit(&[0.0, 0.0], &[0.9, 0.0]).unwrap() - 1.0 / 0.9).abs() < 1e-14);
        for a in [1.5, 3.0] {
            let e = StarDomain::ellipsoid(&[0.0, 0.0], &[a, 1.0], 0.5).unwrap();
            assert!((e.ray_exit(&[0.0, 0.0], &[a / 2.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        }
        assert_eq!(
            d.ray_exit(&[0.1, 0.1], &[0.1, 0.1]),
            Err(Error::DegenerateRay)
        );
        assert_eq!(
            d.ray_exit(&[0.0, 0.0], &[1.5, 0.0]),
            Err(Error::PointOutsideDomain)
        );
    }

    #[test]
    fn bisection_exit_lands_on_boundary() {
        let c = StarDomain::cigar(&[0.0, 0.0], &[3.0, 0.0], 1.0, 0.8).unwrap();
        let z = [1.4, 0.2];
        let x = [2.5, 0.6];
        let t = c.ray_exit(&z, &x).unwrap();
        let p: Vec<f64> = (0..2).map(|i| z[i] + t * (x[i] - z[i])).collect();
        let dist = segment_distance2(&p, &[0.0, 0.0], &[3.0, 0.0]).sqrt();
        assert!((dist - 1.0).abs() < 1e-10 * c.diameter());
    }

    #[test]
    fn stats_examples() {
        let s = StarDomain::ball(&[0.0, 0.0], 1.0, 0.5).unwrap().stats();
        assert_eq!(s.diameter, 2.0);
        assert!((s.volume - PI).abs() < 1e-14);
        assert!((s.ratio_diam - 2.0).abs() < 1e-14);
        assert!((s.ratio_vol - 4.0).abs() < 1e-12);
        let a = 2.5;
        let e = StarDomain::ellipsoid(&[0.0, 0.0], &[a, 1.0], 0.5)
            .unwrap()
            .stats();
        assert_eq!(e.diameter, 2.0 * a);
        assert!((e.volume - PI * a).abs() < 1e-13);
    }

    #[test]
    fn quadrature_volume_and_refinement() {
        let c = StarDomain::cigar(&[0.0, 0.0], &[2.0, 0.0], 1.0, 0.9).unwrap();
        let nodes = c.quadrature_nodes(4);
        assert!((nodes.total_weight() - c.volume()).abs() < 0.01 * c.volume());
        assert!(nodes.iter().all(|(x, _)| c.contains(x)));
        assert!(c.quadrature_nodes(5).len() > nodes.len());
    }

    #[test]
    fn radial_star_volume_matches_quadrature() {
        let d = StarDomain::new(
            Shape::RadialStar2D {
                center: [0.0, 0.0],
                a0: 1.0,
                cos: vec![0.0, 0.0, 0.2],
                sin: vec![0.1],
            },
            Ball::new(&[0.0, 0.0], 0.4),
        )
        .unwrap();
        let q = d.quadrature_nodes(6).total_weight();
        assert!((q - d.volume()).abs() < 2e-3 * d.volume());
        assert!(d.verify_star_shape(500, 1).star_shaped);
    }

    #[test]
    fn star_shape_checks() {
        assert!(unit_disk().verify_star_shape(500, 3).star_shaped);
        let e = StarDomain::ellipsoid(&[0.0, 0.0, 0.0], &[3.0, 1.0, 2.0], 0.8).unwrap();
        assert!(e.verify_star_shape(300, 3).star_shaped);
        let crescent = StarDomain::new(
            Shape::Difference(
                Box::new(Shape::Ball(Ball::new(&[0.0, 0.0], 1.0))),
                Box::new(Shape::Ball(Ball::new(&[0.4, 0.0], 0.7))),
            ),
            Ball::new(&[-0.8, 0.0], 0.15),
        )
        .unwrap();
        let check = crescent.verify_star_shape(2000, 3);
        assert!(!check.star_shaped);
        let (b, y) = check.witness.unwrap();
        assert!(crescent.ball.contains(&b) && crescent.contains(&y));
    }
}
