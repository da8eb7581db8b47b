use rayon::prelude::*;

use crate::belief::ParticleSet;
use crate::geometry::{Pose, Shape, Vec3};
use crate::semantics::SensorModel;

/// Probability floor applied before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Negative log likelihood that the true surface, given as object-frame
/// samples, is observed as SURFACE under the belief.
pub fn nll(particles: &ParticleSet, shape: &Shape<f64>, truth: &Pose<f64>, samples: &[Vec3<f64>], sensor: &SensorModel<f64>) -> f64 {
    let to_world = truth.inverse();
    let terms: Vec<f64> = samples
        .par_iter()
        .map(|&p| {
            let x = to_world.transform_point(p);
            let mut prob = 0.0;
            for (pose, w) in particles.iter() {
                prob += w * sensor.probabilities(shape.sdf(pose.transform_point(x))).surface;
            }
            -prob.max(PROBABILITY_FLOOR).ln()
        })
        .collect();
    terms.iter().sum::<f64>().max(0.0)
}

/// Mean absolute sdf of every particle's surface samples under every other
/// particle: `1/(N²|P|) Σ_i Σ_j Σ_p |sdf(T_i T_j⁻¹ p)|`.
pub fn pairwise_chamfer(particles: &[Pose<f64>], shape: &Shape<f64>, samples: &[Vec3<f64>]) -> f64 {
    let n = particles.len();
    if n == 0 || samples.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for ti in particles {
        for tj in particles {
            let rel = ti.compose(&tj.inverse());
            for &p in samples {
                sum += shape.sdf(rel.transform_point(p)).abs();
            }
        }
    }
    sum / (n * n * samples.len()) as f64
}

/// Whether the belief has collapsed enough to stop: `C̄ < τ·l`.
pub fn converged(chamfer: f64, shape: &Shape<f64>, tau: f64) -> bool {
    chamfer < tau * shape.characteristic_length()
}

/// NLL of a single-particle belief displaced from the truth by `offset` in
/// world x and `yaw` about the object origin.
pub fn success_threshold(
    shape: &Shape<f64>,
    truth: &Pose<f64>,
    samples: &[Vec3<f64>],
    sensor: &SensorModel<f64>,
    offset: f64,
    yaw: f64,
) -> f64 {
    let center = truth.object_origin_in_world();
    let moved = super::world::planar_motion(center, yaw, Vec3::new(offset, 0.0, 0.0));
    let particle = truth.compose(&moved.inverse());
    nll(&ParticleSet::uniform(vec![particle]), shape, truth, samples, sensor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sensor() -> SensorModel<f64> {
        SensorModel::default()
    }

    fn samples(shape: &Shape<f64>, n: usize) -> Vec<Vec3<f64>> {
        shape.sample_surface(n, Some(0.0), &mut ChaCha8Rng::seed_from_u64(5))
    }

    #[test]
    fn exact_belief_has_zero_nll() {
        let shape = Shape::default_mug();
        let truth = Pose::from_object_placement(Vec3::new(0.5, 0.1, 0.0), 0.7);
        let s = samples(&shape, 500);
        let v = nll(&ParticleSet::uniform(vec![truth]), &shape, &truth, &s, &sensor());
        assert!(v < 1e-6, "{v}");
    }

    #[test]
    fn nll_grows_with_translation() {
        let shape = Shape::sphere(0.05);
        let truth = Pose::from_object_placement(Vec3::new(0.5, 0.0, 0.0), 0.0);
        let s = samples(&shape, 500);
        let mut prev = 0.0;
        for k in 1..=6 {
            let p = Pose::from_object_placement(Vec3::new(0.5 + 0.005 * k as f64, 0.0, 0.0), 0.0);
            let v = nll(&ParticleSet::uniform(vec![p]), &shape, &truth, &s, &sensor());
            assert!(v > prev, "step {k}: {v} <= {prev}");
            prev = v;
        }
    }

    #[test]
    fn nll_is_floored() {
        let shape = Shape::sphere(0.05);
        let truth = Pose::from_object_placement(Vec3::new(0.5, 0.0, 0.0), 0.0);
        let far = Pose::from_object_placement(Vec3::new(5.0, 0.0, 0.0), 0.0);
        let s = samples(&shape, 10);
        let v = nll(&ParticleSet::uniform(vec![far]), &shape, &truth, &s, &sensor());
        assert!(v.is_finite());
        assert!((v - 10.0 * -PROBABILITY_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn opposed_yaw_ambiguity_costs_more_than_small_yaw_error() {
        let shape = Shape::default_mug();
        let center = Vec3::new(0.6, 0.0, 0.0);
        let truth = Pose::from_object_placement(center, 0.0);
        let s = samples(&shape, 500);
        let ambiguous = ParticleSet::uniform(vec![truth, Pose::from_object_placement(center, std::f64::consts::PI)]);
        let v = nll(&ambiguous, &shape, &truth, &s, &sensor());
        let yaw_only = success_threshold(&shape, &truth, &s, &sensor(), 0.0, 5f64.to_radians());
        assert!(v > yaw_only && yaw_only > 0.0, "{v} <= {yaw_only}");
    }

    fn brute(particles: &[Pose<f64>], shape: &Shape<f64>, pts: &[Vec3<f64>]) -> f64 {
        let mut acc = 0.0;
        for i in 0..particles.len() {
            for j in 0..particles.len() {
                for p in pts {
                    let world = particles[j].inverse().transform_point(*p);
                    acc += shape.sdf(particles[i].transform_point(world)).abs();
                }
            }
        }
        acc / (particles.len() * particles.len() * pts.len()) as f64
    }

    #[test]
    fn chamfer_of_identical_particles_is_zero() {
        let shape = Shape::sphere(0.05);
        let p = Pose::from_object_placement(Vec3::new(0.3, 0.2, 0.0), 1.0);
        let s = samples(&shape, 100);
        assert!(pairwise_chamfer(&[p, p, p], &shape, &s) < 1e-12);
    }

    #[test]
    fn chamfer_offset_spheres() {
        let shape = Shape::sphere(0.05);
        let a = Pose::from_object_placement(Vec3::new(0.5, 0.0, 0.0), 0.0);
        let b = Pose::from_object_placement(Vec3::new(0.51, 0.0, 0.0), 0.0);
        let s = shape.sample_surface(500, None, &mut ChaCha8Rng::seed_from_u64(1));
        let got = pairwise_chamfer(&[a, b], &shape, &s);
        let oracle = brute(&[a, b], &shape, &s);
        assert!((got - oracle).abs() < 1e-15);
        // closed form for a pure offset δ: |‖p ± δ‖ - r| averages to about δ/2 over the sphere, on two of four pairs
        assert!(got > 0.0015 && got < 0.0035, "{got}");
    }

    #[test]
    fn chamfer_symmetric_under_relabeling() {
        let shape = Shape::default_mug();
        let s = samples(&shape, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ps: Vec<_> = (0..5)
            .map(|_| {
                use rand::Rng;
                Pose::from_object_placement(
                    Vec3::new(rng.random_range(0.4..0.6), rng.random_range(-0.1..0.1), 0.0),
                    rng.random_range(-3.0..3.0),
                )
            })
            .collect();
        let mut rev = ps.clone();
        rev.reverse();
        let a = pairwise_chamfer(&ps, &shape, &s);
        let b = pairwise_chamfer(&rev, &shape, &s);
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn perturbed_single_particle_threshold_is_positive() {
        let shape = Shape::default_mug();
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.3);
        let s = samples(&shape, 500);
        assert!(success_threshold(&shape, &truth, &s, &sensor(), 0.005, 5f64.to_radians()) > 0.0);
    }
}
