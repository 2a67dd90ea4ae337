//! Seeded generators for the five synthetic 2-D benchmark families.
//!
//! The generators reproduce the benchmark geometries at any size: two
//! interleaved half-annuli, a smiling face, three concentric circles, two
//! circles around a grid of Gaussian blobs, and a flower of petals around a
//! disk. Points are split as evenly as possible across the classes and every
//! family is nonlinearly separable at its default noise level.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    TwoBananas,
    SmilingFace,
    ConcentricCircles,
    CirclesGaussians,
    Flower,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::TwoBananas,
        Family::SmilingFace,
        Family::ConcentricCircles,
        Family::CirclesGaussians,
        Family::Flower,
    ];

    /// Fixed class count of the family.
    pub fn class_count(self) -> usize {
        match self {
            Family::TwoBananas => 2,
            Family::SmilingFace => 4,
            Family::ConcentricCircles => 3,
            Family::CirclesGaussians => 11,
            Family::Flower => 13,
        }
    }

    /// Noise level used when the spec does not override it.
    pub fn default_noise(self) -> f64 {
        match self {
            Family::TwoBananas => 0.08,
            Family::SmilingFace => 0.10,
            Family::ConcentricCircles => 0.10,
            Family::CirclesGaussians => 0.15,
            Family::Flower => 0.20,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::TwoBananas => "two_bananas",
            Family::SmilingFace => "smiling_face",
            Family::ConcentricCircles => "concentric_circles",
            Family::CirclesGaussians => "circles_gaussians",
            Family::Flower => "flower",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Value(format!("unknown dataset family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub family: Family,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            noise: family.default_noise(),
            seed,
        }
    }
}

/// Generates a labeled 2-D dataset. Deterministic given the spec; points are
/// emitted class by class with counts as even as possible.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Labeling)> {
    let classes = spec.family.class_count();
    if spec.n < classes {
        return Err(Error::Value(format!(
            "{} needs at least {classes} points, got {}",
            spec.family.name(),
            spec.n
        )));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Value("noise must be a finite nonnegative value".into()));
    }

    let mut rng = rng_from_seed(spec.seed);
    let mut values = Vec::with_capacity(spec.n * 2);
    let mut labels = Vec::with_capacity(spec.n);
    for class in 0..classes {
        let count = spec.n / classes + usize::from(class < spec.n % classes);
        for _ in 0..count {
            let (x, y) = sample_point(spec.family, class, spec.noise, &mut rng);
            values.push(x);
            values.push(y);
            labels.push(class);
        }
    }
    Ok((
        Dataset::new(spec.n, 2, values)?,
        Labeling::new(labels, classes)?,
    ))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sample_point(family: Family, class: usize, noise: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match family {
        Family::TwoBananas => {
            // Two interleaved half-annuli of radius 1, arc pi, offset 0.4.
            let t = rng.gen_range(0.0..PI);
            let (x, y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.4 - t.sin())
            };
            (x + noise * gauss(rng), y + noise * gauss(rng))
        }
        Family::SmilingFace => {
            let (x, y) = match class {
                0 => {
                    // Face boundary.
                    let t = rng.gen_range(0.0..2.0 * PI);
                    (3.0 * t.cos(), 3.0 * t.sin())
                }
                1 => (-1.1, 1.0), // left eye
                2 => (1.1, 1.0),  // right eye
                _ => {
                    // Mouth: lower arc.
                    let t = rng.gen_range(1.15 * PI..1.85 * PI);
                    (1.8 * t.cos(), 1.8 * t.sin())
                }
            };
            (x + noise * gauss(rng), y + noise * gauss(rng))
        }
        Family::ConcentricCircles => {
            // Three circles of radii 1, 2, 3 with radial noise.
            let radius = (class + 1) as f64 + noise * gauss(rng);
            let t = rng.gen_range(0.0..2.0 * PI);
            (radius * t.cos(), radius * t.sin())
        }
        Family::CirclesGaussians => {
            let (x, y) = if class < 2 {
                // Two enclosing circles.
                let radius = if class == 0 { 5.0 } else { 6.5 };
                let t = rng.gen_range(0.0..2.0 * PI);
                (radius * t.cos(), radius * t.sin())
            } else {
                // 3x3 grid of blobs, spacing 2.2.
                let cell = class - 2;
                let cx = ((cell % 3) as f64 - 1.0) * 2.2;
                let cy = ((cell / 3) as f64 - 1.0) * 2.2;
                (cx, cy)
            };
            (x + noise * gauss(rng), y + noise * gauss(rng))
        }
        Family::Flower => {
            let (x, y) = if class == 0 {
                // Central disk of radius 1, area-uniform.
                let r = rng.gen_range(0.0f64..1.0).sqrt();
                let t = rng.gen_range(0.0..2.0 * PI);
                (r * t.cos(), r * t.sin())
            } else {
                // 12 petals on a circle of radius 3.
                let angle = 2.0 * PI * (class - 1) as f64 / 12.0;
                (3.0 * angle.cos(), 3.0 * angle.sin())
            };
            (x + noise * gauss(rng), y + noise * gauss(rng))
        }
    }
}

/// Distance from a point to the ideal (noise-free) structure of a class;
/// used by the separability checks.
pub fn structure_distance(family: Family, class: usize, x: f64, y: f64) -> f64 {
    let r = (x * x + y * y).sqrt();
    match family {
        Family::TwoBananas => {
            if class == 0 {
                // Upper half-annulus around the origin.
                if y >= 0.0 {
                    (r - 1.0).abs()
                } else {
                    let dx = x.abs() - 1.0;
                    (dx * dx + y * y).sqrt().min((r - 1.0).hypot(y))
                }
            } else {
                let (ux, uy) = (x - 1.0, 0.4 - y);
                let ur = (ux * ux + uy * uy).sqrt();
                if uy >= 0.0 {
                    (ur - 1.0).abs()
                } else {
                    let dx = ux.abs() - 1.0;
                    (dx * dx + uy * uy).sqrt().min((ur - 1.0).hypot(uy))
                }
            }
        }
        Family::SmilingFace => match class {
            0 => (r - 3.0).abs(),
            1 => ((x + 1.1).powi(2) + (y - 1.0).powi(2)).sqrt(),
            2 => ((x - 1.1).powi(2) + (y - 1.0).powi(2)).sqrt(),
            _ => {
                let t = y.atan2(x).rem_euclid(2.0 * PI);
                if (1.15 * PI..=1.85 * PI).contains(&t) {
                    (r - 1.8).abs()
                } else {
                    let clamp_t = if t < 1.15 * PI && t > 0.5 * PI { 1.15 * PI } else { 1.85 * PI };
                    let (ex, ey) = (1.8 * clamp_t.cos(), 1.8 * clamp_t.sin());
                    ((x - ex).powi(2) + (y - ey).powi(2)).sqrt()
                }
            }
        },
        Family::ConcentricCircles => (r - (class + 1) as f64).abs(),
        Family::CirclesGaussians => {
            if class < 2 {
                let radius = if class == 0 { 5.0 } else { 6.5 };
                (r - radius).abs()
            } else {
                let cell = class - 2;
                let cx = ((cell % 3) as f64 - 1.0) * 2.2;
                let cy = ((cell / 3) as f64 - 1.0) * 2.2;
                ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
            }
        }
        Family::Flower => {
            if class == 0 {
                (r - 1.0).max(0.0)
            } else {
                let angle = 2.0 * PI * (class - 1) as f64 / 12.0;
                let (cx, cy) = (3.0 * angle.cos(), 3.0 * angle.sin());
                ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
            }
        }
    }
}
