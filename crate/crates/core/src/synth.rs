//! Deterministic synthetic cloud pairs with a known aligning transform.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::liegroup::{Isometry3, Rotation};
use crate::rkhs::LabeledCloud3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub points: usize,
    /// Rotation magnitude in degrees.
    pub rotation_deg: f64,
    /// Translation magnitude in meters.
    pub translation: f64,
    /// Edge length of the cube the points are drawn from (m).
    pub extent: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { seed: 1, points: 500, rotation_deg: 5.0, translation: 0.05, extent: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    /// The fixed cloud `X`.
    pub target: LabeledCloud3,
    /// `Z = truth · X`, so that `h⁻¹ Z = X` exactly at `h = truth`.
    pub source: LabeledCloud3,
    pub truth: Isometry3,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Uniform points in a cube centered at the origin with uniform random
/// colors; the perturbation axis and direction are drawn from the same seed.
pub fn generate(spec: &SynthSpec) -> SyntheticPair {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = 0.5 * spec.extent;
    let points: Vec<Vector3<f64>> = (0..spec.points)
        .map(|_| Vector3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half)))
        .collect();
    let labels: Vec<Vec<f64>> = (0..spec.points).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
    let axis = unit_vector(&mut rng);
    let direction = unit_vector(&mut rng);
    let truth = Isometry3::new(
        Rotation::from_axis_angle(&axis, spec.rotation_deg.to_radians()),
        direction * spec.translation,
    );
    let target = LabeledCloud3::new(points, labels).expect("generated cloud is well formed");
    let source = target.transformed(&truth);
    SyntheticPair { target, source, truth }
}
