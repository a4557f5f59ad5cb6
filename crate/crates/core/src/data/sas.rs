//! Synthetic small-angle-scattering stand-in images.
//!
//! This is not a physics simulator. Each image is a closed-form radially
//! decaying intensity field around a fixed beam centre, optionally with a
//! diffraction-like ring or an elliptical anisotropy, plus a constant floor and
//! shot-like noise, then clipped at zero and peak-normalised to 1.
//!
//! With `q` the distance from the beam centre divided by half the detector
//! side, the base profile is the Lorentzian-power decay
//! `(1 + (q / radial_scale)²)^(-decay_exponent / 2)`. Parameter ranges are in
//! [`SasRanges::default`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternFamily {
    IsotropicDecay,
    Ring,
    AnisotropicEllipse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SasPatternParams {
    pub family: PatternFamily,
    /// Decay length of the base profile, in units of the detector half-width.
    pub radial_scale: f64,
    pub decay_exponent: f64,
    /// Ring centre and Gaussian width in the same `q` units (Ring only).
    pub ring_radius: f64,
    pub ring_width: f64,
    pub ring_amplitude: f64,
    /// Axis ratio of the elliptical contours (AnisotropicEllipse only; 1 otherwise).
    pub anisotropy: f64,
    /// Orientation of the long axis in radians.
    pub angle: f64,
    /// Constant background relative to the centre intensity.
    pub floor: f64,
    /// Standard deviation of the noise relative to `sqrt(intensity)`.
    pub noise: f64,
    pub seed: u64,
}

/// Closed sampling intervals `[lo, hi]` for each parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SasRanges {
    pub radial_scale: (f64, f64),
    pub decay_exponent: (f64, f64),
    pub ring_radius: (f64, f64),
    pub ring_width: (f64, f64),
    pub ring_amplitude: (f64, f64),
    pub anisotropy: (f64, f64),
    pub floor: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for SasRanges {
    fn default() -> Self {
        SasRanges {
            radial_scale: (0.04, 0.3),
            decay_exponent: (2.0, 4.0),
            ring_radius: (0.2, 0.7),
            ring_width: (0.02, 0.08),
            ring_amplitude: (0.05, 0.5),
            anisotropy: (1.2, 3.0),
            floor: (0.0, 0.02),
            noise: (0.0, 0.005),
        }
    }
}

fn draw<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

impl SasPatternParams {
    pub fn sample<R: Rng>(rng: &mut R, ranges: &SasRanges) -> Self {
        let family = match rng.random_range(0..3u8) {
            0 => PatternFamily::IsotropicDecay,
            1 => PatternFamily::Ring,
            _ => PatternFamily::AnisotropicEllipse,
        };
        // every field is drawn regardless of family so the stream layout is fixed
        let radial_scale = draw(rng, ranges.radial_scale);
        let decay_exponent = draw(rng, ranges.decay_exponent);
        let ring_radius = draw(rng, ranges.ring_radius);
        let ring_width = draw(rng, ranges.ring_width);
        let ring_amplitude = draw(rng, ranges.ring_amplitude);
        let anisotropy = draw(rng, ranges.anisotropy);
        let angle = rng.random_range(0.0..PI);
        let floor = draw(rng, ranges.floor);
        let noise = draw(rng, ranges.noise);
        let seed = rng.random();
        SasPatternParams {
            family,
            radial_scale,
            decay_exponent,
            ring_radius,
            ring_width,
            ring_amplitude: if family == PatternFamily::Ring {
                ring_amplitude
            } else {
                0.0
            },
            anisotropy: if family == PatternFamily::AnisotropicEllipse {
                anisotropy
            } else {
                1.0
            },
            angle,
            floor,
            noise,
            seed,
        }
    }
}

/// Renders one `side x side` image (row-major), peak-normalised to 1.
pub fn sas_image(p: &SasPatternParams, side: usize) -> Vec<f64> {
    let centre = (side as f64 - 1.0) / 2.0;
    let half = side as f64 / 2.0;
    let (sin, cos) = p.angle.sin_cos();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut img = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let x = (c as f64 - centre) / half;
            let y = (r as f64 - centre) / half;
            let (u, v) = (cos * x + sin * y, -sin * x + cos * y);
            let q_radial = (x * x + y * y).sqrt();
            let q_shape = ((u / p.anisotropy).powi(2) + (v * p.anisotropy).powi(2)).sqrt();
            let base = (1.0 + (q_shape / p.radial_scale).powi(2)).powf(-p.decay_exponent / 2.0);
            let ring =
                p.ring_amplitude * (-(q_radial - p.ring_radius).powi(2) / (2.0 * p.ring_width * p.ring_width)).exp();
            let intensity = base + ring + p.floor;
            let eps: f64 = StandardNormal.sample(&mut noise_rng);
            img.push((intensity + p.noise * intensity.sqrt() * eps).max(0.0));
        }
    }
    let peak = img.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        img.iter_mut().for_each(|v| *v = (*v / peak).min(1.0));
    }
    img
}

/// `count` stand-in images on a `side x side` grid. Image `i` is drawn from
/// ChaCha8 stream `i` of `seed`, so datasets are reproducible and prefixes of
/// larger datasets with the same seed.
pub fn gen_sas(count: usize, side: usize, seed: u64) -> Result<Dataset> {
    if count == 0 || side < 8 {
        return Err(Error::InvalidArgument(format!(
            "need count >= 1 and side >= 8, got count={count}, side={side}"
        )));
    }
    let ranges = SasRanges::default();
    let n = side * side;
    let mut data = Vec::with_capacity(count * n);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let params = SasPatternParams::sample(&mut rng, &ranges);
        data.extend(sas_image(&params, side));
    }
    Dataset::new(Matrix::from_vec(count, n, data)?, None, "synthetic SAS stand-in")?.with_shape(side, side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalised_and_deterministic() {
        let a = gen_sas(12, 16, 5).unwrap();
        let b = gen_sas(12, 16, 5).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            let s = a.sample(i);
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(s.iter().cloned().fold(0.0, f64::max), 1.0);
        }
        assert_ne!(a, gen_sas(12, 16, 6).unwrap());
        assert_eq!(a.shape(), Some((16, 16)));
    }

    #[test]
    fn prefix_stable() {
        let small = gen_sas(3, 8, 1).unwrap();
        let big = gen_sas(7, 8, 1).unwrap();
        assert_eq!(small, big.head(3));
    }

    #[test]
    fn full_corpus_shape() {
        // shape bookkeeping only: one image of the 64x64 grid
        let d = gen_sas(1, 64, 0).unwrap();
        assert_eq!(d.dim(), 4096);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(gen_sas(1, 7, 0).is_err());
        assert!(gen_sas(0, 8, 0).is_err());
    }

    #[test]
    fn brightest_pixel_is_near_the_centre_without_rings() {
        let p = SasPatternParams {
            family: PatternFamily::IsotropicDecay,
            radial_scale: 0.1,
            decay_exponent: 3.0,
            ring_radius: 0.0,
            ring_width: 1.0,
            ring_amplitude: 0.0,
            anisotropy: 1.0,
            angle: 0.0,
            floor: 0.0,
            noise: 0.0,
            seed: 0,
        };
        let img = sas_image(&p, 16);
        let argmax = img
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let (r, c) = (argmax / 16, argmax % 16);
        assert!((7..=8).contains(&r) && (7..=8).contains(&c));
    }
}
