//! Semantic discrepancy between observed points and a pose hypothesis.
//!
//! FREE points penalize penetration into the object, OCCUPIED points penalize
//! lying outside it, and SURFACE points penalize any distance from the zero
//! level set. The cost is a plain sum over points, so it is additive in the
//! observation set.
//!
//! Descent directions use the normalized SDF gradient and are therefore not the
//! exact gradient of the cost; they are validated as descent directions.

use rayon::prelude::*;

use crate::geometry::{Mat3, Pose, PoseSpace, Shape, Vec3};
use crate::scalar::Real;
use crate::semantics::{SemanticCloud, Semantics};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscrepancyParams<S> {
    /// Scale applied to FREE and OCCUPIED violations.
    pub sigma_f: S,
    /// Tolerated interior violation, meters.
    pub epsilon: S,
}

impl<S: Real> Default for DiscrepancyParams<S> {
    fn default() -> Self {
        Self { sigma_f: S::lit(10.0), epsilon: S::zero() }
    }
}

#[inline]
fn cost_from_sdf<S: Real>(params: &DiscrepancyParams<S>, d: S, s: Semantics) -> S {
    match s {
        Semantics::Free => params.sigma_f * (params.epsilon - d).max(S::zero()),
        Semantics::Occupied => params.sigma_f * (params.epsilon + d).max(S::zero()),
        Semantics::Surface => d.abs(),
    }
}

/// Cost of one observed point already expressed in the object frame.
#[inline]
pub fn point_cost<S: Real>(params: &DiscrepancyParams<S>, shape: &Shape<S>, x_obj: Vec3<S>, s: Semantics) -> S {
    cost_from_sdf(params, shape.sdf(x_obj), s)
}

/// Cost of observing semantics `s` at a position with signed distance `d`.
#[inline]
pub fn cost_for_sdf<S: Real>(params: &DiscrepancyParams<S>, d: S, s: Semantics) -> S {
    cost_from_sdf(params, d, s)
}

/// Descent direction for one object-frame point; moving the point along the
/// negative of this vector reduces its cost. Zero exactly when the cost is zero.
pub fn point_cost_descent<S: Real>(params: &DiscrepancyParams<S>, shape: &Shape<S>, x_obj: Vec3<S>, s: Semantics) -> Vec3<S> {
    let (d, g) = shape.sdf_and_gradient(x_obj);
    descent_from(params, d, g, s)
}

#[inline]
fn descent_from<S: Real>(params: &DiscrepancyParams<S>, d: S, g: Vec3<S>, s: Semantics) -> Vec3<S> {
    match s {
        Semantics::Free => -g * (params.sigma_f * (params.epsilon - d).max(S::zero())),
        Semantics::Occupied => g * (params.sigma_f * (params.epsilon + d).max(S::zero())),
        Semantics::Surface => g * d,
    }
}

/// Total discrepancy of `cloud` under pose `pose`. Points are summed FREE first,
/// then OCCUPIED, then SURFACE.
pub fn total_discrepancy<S: Real>(params: &DiscrepancyParams<S>, shape: &Shape<S>, cloud: &SemanticCloud<S>, pose: &Pose<S>) -> S {
    let mut total = S::zero();
    for s in Semantics::ALL {
        for &x in cloud.class(s) {
            total = total + point_cost(params, shape, pose.transform_point(x), s);
        }
    }
    total
}

/// Discrepancy of every pose against the same cloud; evaluated in parallel.
pub fn discrepancies<S: Real>(params: &DiscrepancyParams<S>, shape: &Shape<S>, cloud: &SemanticCloud<S>, poses: &[Pose<S>]) -> Vec<S> {
    poses.par_iter().map(|t| total_discrepancy(params, shape, cloud, t)).collect()
}

/// Maximum step lengths for one pose update. Translation in meters, rotation in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes<S> {
    pub translation: S,
    pub rotation: S,
}

impl<S: Real> Default for StepSizes<S> {
    fn default() -> Self {
        Self { translation: S::lit(1e-2), rotation: S::lit(1e-1) }
    }
}

impl<S: Real> StepSizes<S> {
    pub fn decayed(&self, factor: S) -> Self {
        Self { translation: self.translation * factor, rotation: self.rotation * factor }
    }
}

/// Aggregated descent direction for a pose, in object-frame twist coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseDescent<S> {
    /// Mean per-point descent direction.
    pub translation: Vec3<S>,
    /// Mean of lever arm × direction, divided by the mean squared lever arm.
    pub rotation: Vec3<S>,
    pub active_points: usize,
}

/// Collects per-point descent directions over the points with nonzero cost.
pub fn pose_descent_direction<S: Real>(
    params: &DiscrepancyParams<S>,
    shape: &Shape<S>,
    cloud: &SemanticCloud<S>,
    pose: &Pose<S>,
) -> PoseDescent<S> {
    let mut sum_t = Vec3::zeros();
    let mut sum_r = Vec3::zeros();
    let mut sum_lever = S::zero();
    let mut n = 0usize;
    for s in Semantics::ALL {
        for &x in cloud.class(s) {
            let xo = pose.transform_point(x);
            let (d, g) = shape.sdf_and_gradient(xo);
            let dir = descent_from(params, d, g, s);
            if dir == Vec3::zeros() {
                continue;
            }
            sum_t += dir;
            sum_r += xo.cross(dir);
            sum_lever = sum_lever + xo.norm_squared();
            n += 1;
        }
    }
    if n == 0 {
        return PoseDescent { translation: Vec3::zeros(), rotation: Vec3::zeros(), active_points: 0 };
    }
    let count = S::lit(n as f64);
    let lever = (sum_lever / count).max(S::lit(1e-6));
    PoseDescent { translation: sum_t / count, rotation: sum_r / count / lever, active_points: n }
}

fn clamp_length<S: Real>(v: Vec3<S>, max_len: S) -> Vec3<S> {
    let n = v.norm();
    if n > max_len && n > S::zero() {
        v * (max_len / n)
    } else {
        v
    }
}

/// Object-frame rigid motion `x ↦ exp(-ω) x - t` applied after `pose`.
fn apply_descent<S: Real>(pose: &Pose<S>, dir: &PoseDescent<S>, steps: &StepSizes<S>, space: PoseSpace) -> Pose<S> {
    let mut t = clamp_length(dir.translation, steps.translation);
    let mut w = clamp_length(dir.rotation, steps.rotation);
    if space == PoseSpace::Planar {
        t.z = S::zero();
        w = Vec3::new(S::zero(), S::zero(), w.z.max(-steps.rotation).min(steps.rotation));
    }
    let delta = Pose::new(Mat3::from_rotation_vector(-w), -t);
    delta.compose(pose).projected(space)
}

/// One descent update of `pose` against `cloud`.
///
/// The mean per-point descent direction becomes a translation step and the
/// lever-arm-normalized mean moment becomes a rotation step, each clipped to
/// the given maximum length. Planar poses only update yaw and xy translation.
pub fn pose_descent_step<S: Real>(
    params: &DiscrepancyParams<S>,
    shape: &Shape<S>,
    cloud: &SemanticCloud<S>,
    pose: &Pose<S>,
    steps: &StepSizes<S>,
    space: PoseSpace,
) -> Pose<S> {
    let dir = pose_descent_direction(params, shape, cloud, pose);
    if dir.active_points == 0 {
        return *pose;
    }
    apply_descent(pose, &dir, steps, space)
}

/// Runs `iterations` descent steps with step decay and returns the lowest-cost
/// iterate seen (including the starting pose) and its cost.
#[allow(clippy::too_many_arguments)]
pub fn refine_pose<S: Real>(
    params: &DiscrepancyParams<S>,
    shape: &Shape<S>,
    cloud: &SemanticCloud<S>,
    pose: &Pose<S>,
    steps: &StepSizes<S>,
    decay: S,
    iterations: usize,
    space: PoseSpace,
) -> (Pose<S>, S) {
    let mut best = (*pose, total_discrepancy(params, shape, cloud, pose));
    let mut current = *pose;
    let mut step = *steps;
    for _ in 0..iterations {
        if best.1 == S::zero() {
            break;
        }
        current = pose_descent_step(params, shape, cloud, &current, &step, space);
        let c = total_discrepancy(params, shape, cloud, &current);
        if c < best.1 {
            best = (current, c);
        }
        step = step.decayed(decay);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::SemanticPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> DiscrepancyParams<f64> {
        DiscrepancyParams { sigma_f: 10.0, epsilon: 0.0 }
    }

    #[test]
    fn point_cost_examples() {
        let sphere = Shape::sphere(0.05);
        // sdf = 0.05
        assert_eq!(point_cost(&params(), &sphere, Vec3::new(0.1, 0.0, 0.0), Semantics::Free), 0.0);
        // sdf = -0.02 -> 10 * 0.02
        assert!((point_cost(&params(), &sphere, Vec3::new(0.03, 0.0, 0.0), Semantics::Free) - 0.2).abs() < 1e-12);
        assert!((point_cost(&params(), &sphere, Vec3::new(0.1, 0.0, 0.0), Semantics::Surface) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empty_cloud_costs_nothing() {
        let sphere = Shape::sphere(0.05);
        assert_eq!(total_discrepancy(&params(), &sphere, &SemanticCloud::new(), &Pose::identity()), 0.0);
    }

    #[test]
    fn duplicated_point_doubles_cost() {
        let sphere = Shape::sphere(0.05);
        let p = SemanticPoint::new(Vec3::new(0.07, 0.01, 0.0), Semantics::Surface);
        let one = total_discrepancy(&params(), &sphere, &SemanticCloud::from_points([p]), &Pose::identity());
        let two = total_discrepancy(&params(), &sphere, &SemanticCloud::from_points([p, p]), &Pose::identity());
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn inactive_free_point_has_zero_direction() {
        let sphere = Shape::sphere(0.05);
        assert_eq!(point_cost_descent(&params(), &sphere, Vec3::new(0.2, 0.0, 0.0), Semantics::Free), Vec3::zeros());
    }

    #[test]
    fn surface_direction_is_radial_with_sdf_magnitude() {
        let sphere = Shape::sphere(0.05);
        let x = Vec3::new(0.06, 0.08, 0.0);
        let d = point_cost_descent(&params(), &sphere, x, Semantics::Surface);
        let expected = x / x.norm() * (x.norm() - 0.05);
        assert!((d - expected).norm() < 1e-15);
    }

    #[test]
    fn descent_zero_iff_cost_zero() {
        let mug = Shape::<f64>::default_mug();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let x = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), 0.0);
            for s in Semantics::ALL {
                let c = point_cost(&params(), &mug, x, s);
                let d = point_cost_descent(&params(), &mug, x, s);
                assert_eq!(c == 0.0, d == Vec3::zeros());
            }
        }
    }

    #[test]
    fn zero_cost_cloud_leaves_pose() {
        let sphere = Shape::sphere(0.05);
        let cloud = SemanticCloud::from_points([SemanticPoint::new(Vec3::new(0.5, 0.0, 0.0), Semantics::Free)]);
        let t = Pose::from_object_placement(Vec3::new(0.1, 0.0, 0.0), 0.3);
        let out = pose_descent_step(&params(), &sphere, &cloud, &t, &StepSizes::default(), PoseSpace::Planar);
        assert_eq!(out, t);
    }

    #[test]
    fn single_offset_surface_point_is_pulled_in() {
        let sphere = Shape::sphere(0.05);
        let cloud = SemanticCloud::from_points([SemanticPoint::new(Vec3::new(0.055, 0.0, 0.0), Semantics::Surface)]);
        let t = Pose::identity();
        let before = total_discrepancy(&params(), &sphere, &cloud, &t);
        let after_pose = pose_descent_step(&params(), &sphere, &cloud, &t, &StepSizes::default(), PoseSpace::Planar);
        let after = total_discrepancy(&params(), &sphere, &cloud, &after_pose);
        assert!(after < before, "{after} !< {before}");
    }

    fn mug_cloud(truth: &Pose<f64>, rng: &mut ChaCha8Rng) -> SemanticCloud<f64> {
        let mug = Shape::default_mug();
        let inv = truth.inverse();
        let mut cloud = SemanticCloud::new();
        for p in mug.sample_surface(80, Some(0.0), rng) {
            cloud.surface.push(inv.transform_point(p));
        }
        cloud
    }

    #[test]
    fn refinement_from_nearby_pose_halves_cost() {
        let mug = Shape::<f64>::default_mug();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = Pose::from_object_placement(Vec3::new(0.5, 0.1, 0.0), 0.4);
        let cloud = mug_cloud(&truth, &mut rng);
        assert!(total_discrepancy(&params(), &mug, &cloud, &truth) < 1e-9);
        let start = Pose::from_object_placement(Vec3::new(0.504, 0.097, 0.0), 0.4 + 5f64.to_radians());
        let c0 = total_discrepancy(&params(), &mug, &cloud, &start);
        let (_, c1) = refine_pose(&params(), &mug, &cloud, &start, &StepSizes::default(), 0.9, 10, PoseSpace::Planar);
        assert!(c1 < c0 / 2.0, "{c1} vs {c0}");
    }

    #[test]
    fn planar_step_stays_planar() {
        let mug = Shape::<f64>::default_mug();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let truth = Pose::from_object_placement(Vec3::new(0.5, 0.0, 0.0), 0.0);
        let cloud = mug_cloud(&truth, &mut rng);
        let start = Pose::from_object_placement(Vec3::new(0.51, 0.01, 0.0), 0.2);
        let out = pose_descent_step(&params(), &mug, &cloud, &start, &StepSizes::default(), PoseSpace::Planar);
        assert_eq!(out.translation.z, 0.0);
        assert!(out.rotation.rows[2][2] == 1.0 && out.rotation.rows[0][2] == 0.0);
    }
}
