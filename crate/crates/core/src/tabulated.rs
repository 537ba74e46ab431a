//! A form sampled on a uniform grid and read back through tensor-product
//! cubic interpolation. Used to cache expensive operator outputs that feed
//! into a second operator.
//!
//! When the sampled function also supplies its first partials, those are
//! tabulated and interpolated in their own right, which is one order more
//! accurate than differentiating the interpolated values.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{binomial, FormValue, MAX_DIM};
use crate::field::{FormField, FormJet};

/// Per-axis stencil start, value weights and derivative weights.
type Stencil = ([usize; MAX_DIM], [[f64; 4]; MAX_DIM], [[f64; 4]; MAX_DIM]);

#[derive(Clone, Debug)]
pub struct TabulatedField {
    n: usize,
    degree: usize,
    lo: Vec<f64>,
    h: f64,
    counts: Vec<usize>,
    /// Whether the partials are tabulated after each point's value.
    with_partials: bool,
    /// Coefficients, point-major.
    values: Vec<f64>,
}

/// Four-point Lagrange weights and their derivatives at offset `t ∈ [0, 3]`
/// from the first stencil node.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for k in 0..4 {
        let mut denom = 1.0;
        for m in 0..4 {
            if m != k {
                denom *= nodes[k] - nodes[m];
            }
        }
        let mut p = 1.0;
        for m in 0..4 {
            if m != k {
                p *= t - nodes[m];
            }
        }
        let mut dp = 0.0;
        for skip in 0..4 {
            if skip == k {
                continue;
            }
            let mut q = 1.0;
            for m in 0..4 {
                if m != k && m != skip {
                    q *= t - nodes[m];
                }
            }
            dp += q;
        }
        w[k] = p / denom;
        dw[k] = dp / denom;
    }
    (w, dw)
}

impl TabulatedField {
    /// Samples `f` on the grid of spacing `h` covering `[lo, hi]`.
    pub fn sample(
        n: usize,
        degree: usize,
        lo: &[f64],
        hi: &[f64],
        h: f64,
        f: impl Fn(&[f64]) -> FormValue + Sync,
    ) -> Result<Self> {
        Self::build(n, degree, lo, hi, h, false, |x| f(x).coeffs().to_vec())
    }

    /// Samples the jets `f` on the grid of spacing `h` covering `[lo, hi]`.
    pub fn sample_jets(
        n: usize,
        degree: usize,
        lo: &[f64],
        hi: &[f64],
        h: f64,
        f: impl Fn(&[f64]) -> FormJet + Sync,
    ) -> Result<Self> {
        Self::build(n, degree, lo, hi, h, true, |x| {
            let j = f(x);
            let mut out = j.value.coeffs().to_vec();
            for p in &j.partials {
                out.extend_from_slice(p.coeffs());
            }
            out
        })
    }

    fn build(
        n: usize,
        degree: usize,
        lo: &[f64],
        hi: &[f64],
        h: f64,
        with_partials: bool,
        f: impl Fn(&[f64]) -> Vec<f64> + Sync,
    ) -> Result<Self> {
        if !(h > 0.0) || lo.len() != n || hi.len() != n {
            return Err(Error::InvalidParameter(
                "grid needs a positive spacing and an n-dimensional box".into(),
            ));
        }
        let counts: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| (((b - a) / h).ceil() as usize + 1).max(4))
            .collect();
        let total: usize = counts.iter().product();
        let point = |mut k: usize| {
            let mut x = vec![0.0; n];
            for i in 0..n {
                x[i] = lo[i] + (k % counts[i]) as f64 * h;
                k /= counts[i];
            }
            x
        };
        let values: Vec<f64> = (0..total)
            .into_par_iter()
            .flat_map_iter(|k| f(&point(k)))
            .collect();
        let field = TabulatedField {
            n,
            degree,
            lo: lo.to_vec(),
            h,
            counts,
            with_partials,
            values,
        };
        debug_assert_eq!(field.values.len(), total * field.stride());
        Ok(field)
    }

    fn stride(&self) -> usize {
        let width = binomial(self.n, self.degree);
        if self.with_partials {
            width * (self.n + 1)
        } else {
            width
        }
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Stencil start and weights along each axis, or `None` outside the grid.
    fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        let mut start = [0usize; MAX_DIM];
        let mut w = [[0.0; 4]; MAX_DIM];
        let mut dw = [[0.0; 4]; MAX_DIM];
        for i in 0..self.n {
            let t = (x[i] - self.lo[i]) / self.h;
            let last = (self.counts[i] - 1) as f64;
            if !(t >= 0.0 && t <= last) {
                return None;
            }
            let s = ((t.floor() as isize) - 1).clamp(0, self.counts[i] as isize - 4) as usize;
            let (a, b) = cubic_weights(t - s as f64);
            start[i] = s;
            w[i] = a;
            dw[i] = b.map(|v| v / self.h);
        }
        Some((start, w, dw))
    }

    fn interpolate(&self, x: &[f64], with_partials: bool) -> FormJet {
        let n = self.n;
        let width = binomial(n, self.degree);
        let mut jet = FormJet::zero(n, self.degree);
        let Some((start, w, dw)) = self.stencil(x) else {
            return jet;
        };
        let stencil_size = 4usize.pow(n as u32);
        for s in 0..stencil_size {
            let mut flat = 0;
            let mut stride = 1;
            let mut offs = [0usize; MAX_DIM];
            let mut rest = s;
            for i in 0..n {
                offs[i] = rest % 4;
                rest /= 4;
                flat += (start[i] + offs[i]) * stride;
                stride *= self.counts[i];
            }
            let stride = self.stride();
            let block = &self.values[flat * stride..(flat + 1) * stride];
            let coeffs = &block[..width];
            let weight: f64 = (0..n).map(|i| w[i][offs[i]]).product();
            for (slot, c) in jet.value.coeffs_mut().iter_mut().zip(coeffs) {
                *slot += weight * c;
            }
            if with_partials && self.with_partials {
                for j in 0..n {
                    let pj = &block[(j + 1) * width..(j + 2) * width];
                    for (slot, c) in jet.partials[j].coeffs_mut().iter_mut().zip(pj) {
                        *slot += weight * c;
                    }
                }
            } else if with_partials {
                for j in 0..n {
                    let dj: f64 = (0..n)
                        .map(|i| {
                            if i == j {
                                dw[i][offs[i]]
                            } else {
                                w[i][offs[i]]
                            }
                        })
                        .product();
                    for (slot, c) in jet.partials[j].coeffs_mut().iter_mut().zip(coeffs) {
                        *slot += dj * c;
                    }
                }
            }
        }
        jet
    }
}

impl FormField for TabulatedField {
    fn dim(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn value(&self, x: &[f64]) -> FormValue {
        self.interpolate(x, false).value
    }

    fn jet(&self, x: &[f64]) -> FormJet {
        self.interpolate(x, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubics_are_reproduced() {
        let f =
            |x: &[f64]| FormValue::from_coeffs(2, 1, vec![x[0].powi(3) - x[1], x[0] * x[1] * x[1]]);
        let t = TabulatedField::sample(2, 1, &[-1.0, -1.0], &[1.0, 1.0], 0.1, f).unwrap();
        let x = [0.337, -0.52];
        assert!((&t.value(&x) - &f(&x)).max_abs() < 1e-12);
        let j = t.jet(&x);
        assert!((j.partials[0].coeffs()[0] - 3.0 * x[0] * x[0]).abs() < 1e-11);
        assert!((j.partials[1].coeffs()[1] - 2.0 * x[0] * x[1]).abs() < 1e-11);
        assert!(t.value(&[1.5, 0.0]).is_zero());
    }

    #[test]
    fn smooth_functions_converge_at_fourth_order() {
        let f = |x: &[f64]| FormValue::scalar(1, (3.0 * x[0]).sin());
        let err = |h: f64| {
            let t = TabulatedField::sample(1, 0, &[0.0], &[1.0], h, f).unwrap();
            (0..97)
                .map(|k| k as f64 / 100.0 + 0.004)
                .map(|x| (t.value(&[x]).coeffs()[0] - (3.0 * x).sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio > 12.0, "{ratio}");
    }

    #[test]
    fn tabulated_partials_beat_differentiated_values() {
        let v = |x: &[f64]| FormValue::scalar(1, (3.0 * x[0]).sin());
        let j = |x: &[f64]| FormJet {
            value: v(x),
            partials: vec![FormValue::scalar(1, 3.0 * (3.0 * x[0]).cos())],
        };
        let plain = TabulatedField::sample(1, 0, &[0.0], &[1.0], 0.05, v).unwrap();
        let jets = TabulatedField::sample_jets(1, 0, &[0.0], &[1.0], 0.05, j).unwrap();
        let err = |t: &TabulatedField| {
            (0..97)
                .map(|k| k as f64 / 100.0 + 0.004)
                .map(|x| (t.jet(&[x]).partials[0].coeffs()[0] - 3.0 * (3.0 * x).cos()).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(&jets) < 0.1 * err(&plain));
        assert!((&jets.value(&[0.33]) - &plain.value(&[0.33])).max_abs() < 1e-15);
    }
}
