//! Particle-filter pose posterior.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use rayon::prelude::*;

use crate::discrepancy::{discrepancies, refine_pose, total_discrepancy, DiscrepancyParams, StepSizes};
use crate::geometry::{Mat3, Pose, PoseSpace, Shape, Vec3};
use crate::semantics::{merge_observations, SemanticCloud};

/// Weighted pose hypotheses. Weights always sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub poses: Vec<Pose<f64>>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn uniform(poses: Vec<Pose<f64>>) -> Self {
        let n = poses.len();
        Self { poses, weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pose<f64>, f64)> {
        self.poses.iter().zip(self.weights.iter().copied())
    }

    /// Weighted mean of the object origins in the world.
    pub fn mean_object_position(&self) -> Vec3<f64> {
        self.iter().fold(Vec3::zeros(), |acc, (t, w)| acc + t.object_origin_in_world() * w)
    }

    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// When to resample: compare the maximum discrepancy, or a percentile of the
/// discrepancies, against `eta`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleTrigger {
    Max,
    Percentile(f64),
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefParams {
    pub num_particles: usize,
    /// Posterior peakiness.
    pub gamma: f64,
    /// Resample discrepancy threshold.
    pub eta: f64,
    /// Translation process noise standard deviation, meters.
    pub sigma_t: f64,
    /// Rotation process noise standard deviation, radians.
    pub sigma_r: f64,
    pub optimization_steps: usize,
    pub step_translation: f64,
    pub step_rotation: f64,
    pub step_decay: f64,
    pub sigma_f: f64,
    pub epsilon: f64,
    pub r_free: f64,
    pub r_surf: f64,
    pub yaw_bins: usize,
    pub trigger: ResampleTrigger,
    pub space: PoseSpace,
}

impl Default for BeliefParams {
    fn default() -> Self {
        Self {
            num_particles: 100,
            gamma: 2.0,
            eta: 5.0,
            sigma_t: 0.01,
            sigma_r: 0.0,
            optimization_steps: 10,
            step_translation: 1e-2,
            step_rotation: 1e-1,
            step_decay: 0.9,
            sigma_f: 10.0,
            epsilon: 0.0,
            r_free: 0.01,
            r_surf: 0.002,
            yaw_bins: 36,
            trigger: ResampleTrigger::Max,
            space: PoseSpace::Planar,
        }
    }
}

impl BeliefParams {
    pub fn discrepancy(&self) -> DiscrepancyParams<f64> {
        DiscrepancyParams { sigma_f: self.sigma_f, epsilon: self.epsilon }
    }

    pub fn steps(&self) -> StepSizes<f64> {
        StepSizes { translation: self.step_translation, rotation: self.step_rotation }
    }

    fn refine(&self, shape: &Shape<f64>, cloud: &SemanticCloud<f64>, pose: &Pose<f64>) -> (Pose<f64>, f64) {
        refine_pose(&self.discrepancy(), shape, cloud, pose, &self.steps(), self.step_decay, self.optimization_steps, self.space)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        if self.num_particles == 0 {
            return bad("num_particles must be at least 1");
        }
        if !(self.gamma > 0.0) || !(self.eta > 0.0) {
            return bad("gamma and eta must be positive");
        }
        if !(self.sigma_t >= 0.0) || !(self.sigma_r >= 0.0) {
            return bad("process noise must be nonnegative");
        }
        if !(self.r_free > 0.0) || !(self.r_surf > 0.0) {
            return bad("downsample resolutions must be positive");
        }
        if !(self.sigma_f > 0.0) || !(self.epsilon >= 0.0) {
            return bad("sigma_f must be positive and epsilon nonnegative");
        }
        if self.yaw_bins == 0 {
            return bad("yaw_bins must be at least 1");
        }
        if let ResampleTrigger::Percentile(p) = self.trigger {
            if !(0.0..=100.0).contains(&p) {
                return bad("resample percentile must lie in [0, 100]");
            }
        }
        Ok(())
    }
}

/// Boltzmann weights `e^{-γ d}`, normalized. The minimum discrepancy is
/// subtracted first so the best particle always has unnormalized weight one.
pub fn weights_from_discrepancies(d: &[f64], gamma: f64) -> Vec<f64> {
    let n = d.len();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = d.iter().map(|&di| (-gamma * (di - min)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return vec![1.0 / n as f64; n];
    }
    raw.into_iter().map(|w| w / sum).collect()
}

/// Reweighs particles by their discrepancy against `cloud`.
pub fn weigh(particles: &ParticleSet, shape: &Shape<f64>, cloud: &SemanticCloud<f64>, params: &BeliefParams) -> ParticleSet {
    let d = discrepancies(&params.discrepancy(), shape, cloud, &particles.poses);
    ParticleSet { poses: particles.poses.clone(), weights: weights_from_discrepancies(&d, params.gamma) }
}

/// Uniformly distributed unit axis.
pub fn sample_axis<R: Rng + ?Sized>(rng: &mut R) -> Vec3<f64> {
    let a: [f64; 3] = UnitSphere.sample(rng);
    let v = Vec3::from_array(a);
    v / v.norm()
}

/// Random rigid perturbation: Gaussian translation and a Gaussian angle about a
/// uniform axis. Planar perturbations keep z fixed and rotate about z.
pub fn perturb<R: Rng + ?Sized>(rng: &mut R, sigma_t: f64, sigma_r: f64, space: PoseSpace) -> Pose<f64> {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    match space {
        PoseSpace::Planar => {
            let t = Vec3::new(g() * sigma_t, g() * sigma_t, 0.0);
            let angle = g() * sigma_r;
            Pose::new(Mat3::rot_z(angle), t)
        }
        PoseSpace::Full => {
            let t = Vec3::new(g() * sigma_t, g() * sigma_t, g() * sigma_t);
            let angle = g() * sigma_r;
            let axis = sample_axis(rng);
            Pose::new(Mat3::from_axis_angle(axis, angle), t)
        }
    }
}

/// Systematic resampling: one uniform offset, `n` evenly spaced pointers.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 / n as f64;
        while u > cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

/// Sampling importance resampling followed by perturbation and descent
/// refinement against `cloud`. The result carries uniform weights.
pub fn resample<R: Rng + ?Sized>(
    particles: &ParticleSet,
    shape: &Shape<f64>,
    cloud: &SemanticCloud<f64>,
    params: &BeliefParams,
    rng: &mut R,
) -> ParticleSet {
    let idx = systematic_indices(&particles.weights, particles.len(), rng);
    let perturbed: Vec<Pose<f64>> = idx
        .into_iter()
        .map(|i| perturb(rng, params.sigma_t, params.sigma_r, params.space).compose(&particles.poses[i]).projected(params.space))
        .collect();
    let refined = perturbed.par_iter().map(|t| params.refine(shape, cloud, t).0).collect();
    ParticleSet::uniform(refined)
}

/// Object-frame form `dT` of a world-frame object motion `m` for a particle
/// `t`: `(dT·t)` is the particle after the object moved by `m`.
pub fn object_delta(t: &Pose<f64>, world_motion: &Pose<f64>) -> Pose<f64> {
    t.compose(&world_motion.inverse()).compose(&t.inverse())
}

/// World-frame point motion corresponding to an object-frame update `dT` of
/// particle `t`, satisfying `sdf((dT·t)·(dT_w·x)) = sdf(t·x)`.
pub fn world_motion(t: &Pose<f64>, dt: &Pose<f64>) -> Pose<f64> {
    t.inverse().compose(&dt.inverse()).compose(t)
}

/// Estimates how the object moved, starting from the sticking-contact prior
/// `robot_motion` (world frame) and refining against `new_cloud` on the
/// lowest-discrepancy particle. Returns `(dT, dT_w)`.
pub fn estimate_movement(
    prev_cloud: &SemanticCloud<f64>,
    new_cloud: &SemanticCloud<f64>,
    particles: &ParticleSet,
    shape: &Shape<f64>,
    robot_motion: &Pose<f64>,
    params: &BeliefParams,
) -> (Pose<f64>, Pose<f64>) {
    if new_cloud.surface.is_empty() {
        return (Pose::identity(), Pose::identity());
    }
    let d = discrepancies(&params.discrepancy(), shape, prev_cloud, &particles.poses);
    let i = argmin(&d);
    let ti = particles.poses[i];
    let start = object_delta(&ti, robot_motion).compose(&ti).projected(params.space);
    let (best, _) = params.refine(shape, new_cloud, &start);
    let dt = best.compose(&ti.inverse());
    (dt, world_motion(&ti, &dt))
}

fn argmin(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in d.iter().enumerate() {
        if v < d[best] {
            best = i;
        }
    }
    best
}

/// How the object is believed to have moved since the last update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Movement {
    /// Object motion is measured directly (world frame).
    Observed(Pose<f64>),
    /// Only the end-effector motion while in contact is known (world frame);
    /// the object motion is estimated from the new observation.
    Estimate(Pose<f64>),
}

/// Particle belief together with the accumulated observation cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    pub particles: ParticleSet,
    pub cloud: SemanticCloud<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateReport {
    pub moved: bool,
    pub resampled: bool,
    pub discrepancies: Vec<f64>,
}

/// True when a pose differs from the identity by more than 1e-6 m or 1e-6 rad.
pub fn is_motion(t: &Pose<f64>) -> bool {
    !t.is_identity(1e-6, 1e-6)
}

fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

/// One posterior update: movement estimate, prediction, observation merge,
/// then reweighing or resampling.
pub fn update_step<R: Rng + ?Sized>(
    state: &mut BeliefState,
    shape: &Shape<f64>,
    new_cloud: &SemanticCloud<f64>,
    movement: Movement,
    params: &BeliefParams,
    rng: &mut R,
) -> UpdateReport {
    let motion = match movement {
        Movement::Observed(m) => m,
        Movement::Estimate(robot) => estimate_movement(&state.cloud, new_cloud, &state.particles, shape, &robot, params).1,
    };
    let moved = is_motion(&motion);
    if moved {
        let inv = motion.inverse();
        for t in state.particles.poses.iter_mut() {
            let noise = perturb(rng, params.sigma_t, params.sigma_r, params.space);
            *t = noise.compose(&t.compose(&inv)).projected(params.space);
        }
    }
    state.cloud = merge_observations(&state.cloud, new_cloud, &state.particles.poses, shape, &motion, params.r_free, params.r_surf);
    let d = discrepancies(&params.discrepancy(), shape, &state.cloud, &state.particles.poses);
    let level = match params.trigger {
        ResampleTrigger::Max => d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ResampleTrigger::Percentile(p) => percentile(&d, p),
    };
    let weights = weights_from_discrepancies(&d, params.gamma);
    let resampled = level > params.eta;
    if resampled {
        let current = ParticleSet { poses: state.particles.poses.clone(), weights };
        state.particles = resample(&current, shape, &state.cloud, params, rng);
    } else {
        state.particles.weights = weights;
    }
    UpdateReport { moved, resampled, discrepancies: d }
}

/// Quality-diversity style initialization.
///
/// Every prior is refined against `cloud`, the results are binned by object
/// yaw keeping the best pose per bin, bins whose best pose is inconsistent
/// (discrepancy at or above `eta`) are dropped when any consistent bin exists,
/// and the particle set is filled by drawing bins.
pub fn initialize_particles<R: Rng + ?Sized>(
    priors: &[Pose<f64>],
    shape: &Shape<f64>,
    cloud: &SemanticCloud<f64>,
    params: &BeliefParams,
    rng: &mut R,
) -> crate::Result<ParticleSet> {
    let n = params.num_particles;
    if priors.is_empty() {
        return Err(crate::Error::Config("at least one prior pose is required".into()));
    }
    if cloud.is_empty() {
        let poses = (0..n).map(|i| priors[i % priors.len()]).collect();
        return Ok(ParticleSet::uniform(poses));
    }
    let refined: Vec<(Pose<f64>, f64)> = priors.par_iter().map(|t| params.refine(shape, cloud, t)).collect();
    let bins = params.yaw_bins;
    let mut best: Vec<Option<(Pose<f64>, f64)>> = vec![None; bins];
    for (t, c) in refined {
        let yaw = t.object_yaw().rem_euclid(std::f64::consts::TAU);
        let b = ((yaw / std::f64::consts::TAU * bins as f64) as usize).min(bins - 1);
        if best[b].is_none_or(|(_, bc)| c < bc) {
            best[b] = Some((t, c));
        }
    }
    let mut kept: Vec<Pose<f64>> = Vec::new();
    let any_consistent = best.iter().flatten().any(|&(_, c)| c < params.eta);
    for &(t, c) in best.iter().flatten() {
        if !any_consistent || c < params.eta {
            kept.push(t);
        }
    }
    let mut poses = Vec::with_capacity(n);
    if kept.len() >= n {
        let chosen = rand::seq::index::sample(rng, kept.len(), n);
        let mut chosen: Vec<usize> = chosen.into_iter().collect();
        chosen.sort_unstable();
        poses.extend(chosen.into_iter().map(|i| kept[i]));
    } else {
        poses.extend(kept.iter().copied());
        while poses.len() < n {
            poses.push(kept[rng.random_range(0..kept.len())]);
        }
    }
    Ok(weigh(&ParticleSet::uniform(poses), shape, cloud, params))
}

/// Discrepancy of every particle of `particles` against `cloud`.
pub fn particle_discrepancies(particles: &ParticleSet, shape: &Shape<f64>, cloud: &SemanticCloud<f64>, params: &BeliefParams) -> Vec<f64> {
    particles.poses.iter().map(|t| total_discrepancy(&params.discrepancy(), shape, cloud, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{SemanticPoint, Semantics};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mug() -> Shape<f64> {
        Shape::default_mug()
    }

    fn surface_cloud(truth: &Pose<f64>, n: usize, seed: u64) -> SemanticCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = truth.inverse();
        let mut c = SemanticCloud::new();
        c.surface = mug().sample_surface(n, Some(0.0), &mut rng).into_iter().map(|p| inv.transform_point(p)).collect();
        c
    }

    #[test]
    fn equal_discrepancies_give_uniform_weights() {
        assert_eq!(weights_from_discrepancies(&[3.0; 4], 2.0), vec![0.25; 4]);
    }

    #[test]
    fn two_to_one_weights() {
        let w = weights_from_discrepancies(&[0.0, 2f64.ln() / 2.0], 2.0);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12 && (w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_are_shift_invariant() {
        let d = [0.25, 1.75, 0.0, 4.5];
        let shifted: Vec<f64> = d.iter().map(|x| x + 12.5).collect();
        assert_eq!(weights_from_discrepancies(&d, 2.0), weights_from_discrepancies(&shifted, 2.0));
    }

    #[test]
    fn nonfinite_discrepancies_fall_back_to_uniform() {
        assert_eq!(weights_from_discrepancies(&[f64::NAN, 1.0], 2.0), vec![0.5, 0.5]);
    }

    #[test]
    fn zero_noise_perturbation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for space in [PoseSpace::Planar, PoseSpace::Full] {
            let t = perturb(&mut rng, 0.0, 0.0, space);
            assert!(t.translation == Vec3::zeros() && t.rotation_angle() == 0.0);
        }
    }

    #[test]
    fn perturbation_mean_within_clt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let sigma = 0.01;
        let mut sum = Vec3::zeros();
        for _ in 0..n {
            sum += perturb(&mut rng, sigma, 0.0, PoseSpace::Full).translation;
        }
        let mean = sum / n as f64;
        let bound = 3.0 * sigma / (n as f64).sqrt();
        assert!(mean.abs().max_elem() < bound, "{mean:?}");
    }

    #[test]
    fn sampled_axes_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            assert!((sample_axis(&mut rng).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn systematic_resampling_with_uniform_weights_keeps_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = vec![0.1; 10];
        assert_eq!(systematic_indices(&w, 10, &mut rng), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_weights_copy_one_particle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let poses: Vec<_> = (0..5).map(|i| Pose::from_object_placement(Vec3::new(0.1 * i as f64, 0.0, 0.0), 0.0)).collect();
        let mut set = ParticleSet::uniform(poses);
        set.weights = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let params = BeliefParams { sigma_t: 0.0, optimization_steps: 0, ..Default::default() };
        let out = resample(&set, &mug(), &SemanticCloud::new(), &params, &mut rng);
        assert!(out.poses.iter().all(|t| *t == set.poses[2]));
        assert_eq!(out.weights, vec![0.2; 5]);
    }

    #[test]
    fn uniform_noiseless_resample_preserves_poses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let poses: Vec<_> = (0..7).map(|i| Pose::from_object_placement(Vec3::new(0.5, 0.01 * i as f64, 0.0), 0.3 * i as f64)).collect();
        let set = ParticleSet::uniform(poses.clone());
        let params = BeliefParams { sigma_t: 0.0, optimization_steps: 0, ..Default::default() };
        let out = resample(&set, &mug(), &SemanticCloud::new(), &params, &mut rng);
        assert_eq!(out.poses, poses);
    }

    #[test]
    fn refinement_does_not_raise_max_discrepancy() {
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.5);
        let cloud = surface_cloud(&truth, 60, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let poses: Vec<_> = (0..10).map(|_| perturb(&mut rng, 0.005, 0.05, PoseSpace::Planar).compose(&truth)).collect();
        let params = BeliefParams { sigma_t: 0.0, ..Default::default() };
        let set = ParticleSet::uniform(poses);
        let before = particle_discrepancies(&set, &mug(), &cloud, &params).into_iter().fold(0.0, f64::max);
        let out = resample(&set, &mug(), &cloud, &params, &mut rng);
        let after = particle_discrepancies(&out, &mug(), &cloud, &params).into_iter().fold(0.0, f64::max);
        assert!(after <= before, "{after} > {before}");
    }

    #[test]
    fn prediction_is_consistent_with_world_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = perturb(&mut rng, 0.3, 1.0, PoseSpace::Full);
            let dt = perturb(&mut rng, 0.05, 0.5, PoseSpace::Full);
            let dtw = world_motion(&t, &dt);
            let x = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let moved = dt.compose(&t);
            let a = mug().sdf(moved.transform_point(dtw.transform_point(x)));
            let b = mug().sdf(t.transform_point(x));
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn object_delta_inverts_world_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = perturb(&mut rng, 0.3, 1.0, PoseSpace::Full);
        let m = perturb(&mut rng, 0.05, 0.5, PoseSpace::Full);
        let back = world_motion(&t, &object_delta(&t, &m));
        assert!((back.translation - m.translation).norm() < 1e-12);
        assert!(back.rotation.transpose().mul_mat(&m.rotation).rotation_angle() < 1e-7);
    }

    #[test]
    fn movement_is_identity_without_surface_points() {
        let set = ParticleSet::uniform(vec![Pose::identity()]);
        let mut c = SemanticCloud::new();
        c.free.push(Vec3::new(1.0, 0.0, 0.0));
        let m = Pose::from_translation(Vec3::new(0.1, 0.0, 0.0));
        let (dt, dtw) = estimate_movement(&c, &c, &set, &mug(), &m, &BeliefParams::default());
        assert_eq!((dt, dtw), (Pose::identity(), Pose::identity()));
    }

    #[test]
    fn consistent_observation_estimates_no_movement() {
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.5);
        let cloud = surface_cloud(&truth, 40, 7);
        let set = ParticleSet::uniform(vec![truth]);
        let (dt, _) = estimate_movement(&cloud, &cloud, &set, &mug(), &Pose::identity(), &BeliefParams::default());
        assert!(dt.translation.norm() < 1e-3);
    }

    #[test]
    fn recovers_synthetic_translation() {
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.5);
        let moved_truth = Pose::from_object_placement(Vec3::new(0.65, 0.0, 0.0), 0.5);
        let prev = surface_cloud(&truth, 40, 8);
        let new = surface_cloud(&moved_truth, 40, 9);
        let set = ParticleSet::uniform(vec![truth]);
        let prior = Pose::from_translation(Vec3::new(0.04, 0.005, 0.0));
        let (_, dtw) = estimate_movement(&prev, &new, &set, &mug(), &prior, &BeliefParams::default());
        let center = Vec3::new(0.6, 0.0, 0.0);
        let err = (dtw.transform_point(center) - center - Vec3::new(0.05, 0.0, 0.0)).norm();
        assert!(err < 5e-3, "error {err}");
    }

    fn state_with(poses: Vec<Pose<f64>>, cloud: SemanticCloud<f64>) -> BeliefState {
        BeliefState { particles: ParticleSet::uniform(poses), cloud }
    }

    #[test]
    fn empty_update_only_renormalizes() {
        let poses: Vec<_> = (0..4).map(|i| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), i as f64)).collect();
        let mut state = state_with(poses.clone(), SemanticCloud::new());
        state.particles.weights = vec![0.1, 0.2, 0.3, 0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = update_step(
            &mut state,
            &mug(),
            &SemanticCloud::new(),
            Movement::Observed(Pose::identity()),
            &BeliefParams::default(),
            &mut rng,
        );
        assert!(!r.moved && !r.resampled);
        assert_eq!(state.particles.poses, poses);
        assert_eq!(state.particles.weights, vec![0.25; 4]);
    }

    #[test]
    fn consistent_free_points_keep_poses() {
        let poses: Vec<_> = (0..4).map(|i| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), i as f64)).collect();
        let mut state = state_with(poses.clone(), SemanticCloud::new());
        let mut new = SemanticCloud::new();
        new.free.extend([Vec3::new(0.3, 0.0, 0.0), Vec3::new(0.3, 0.1, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = update_step(&mut state, &mug(), &new, Movement::Estimate(Pose::identity()), &BeliefParams::default(), &mut rng);
        assert!(!r.resampled);
        assert_eq!(state.particles.poses, poses);
        assert!((state.particles.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradicting_surface_point_triggers_resample() {
        let poses: Vec<_> = (0..4).map(|i| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), i as f64)).collect();
        let mut state = state_with(poses, SemanticCloud::new());
        let mut new = SemanticCloud::new();
        new.surface.push(Vec3::new(0.0, 0.5, 0.0));
        new.surface.push(Vec3::new(0.0, -0.5, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = update_step(&mut state, &mug(), &new, Movement::Observed(Pose::identity()), &BeliefParams::default(), &mut rng);
        assert!(r.discrepancies.iter().all(|&d| d > 0.5));
        let params = BeliefParams { eta: 0.5, ..Default::default() };
        let mut state2 = state_with(state.particles.poses.clone(), SemanticCloud::new());
        let r2 = update_step(&mut state2, &mug(), &new, Movement::Observed(Pose::identity()), &params, &mut rng);
        assert!(r2.resampled);
    }

    #[test]
    fn update_is_reproducible() {
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.5);
        let new = surface_cloud(&truth, 30, 10);
        let run = || {
            let poses: Vec<_> = (0..20).map(|i| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.3 * i as f64)).collect();
            let mut state = state_with(poses, SemanticCloud::new());
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let m = Pose::from_translation(Vec3::new(0.01, 0.0, 0.0));
            update_step(&mut state, &mug(), &new, Movement::Estimate(m), &BeliefParams::default(), &mut rng);
            state
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn identical_priors_fill_one_bin() {
        let t = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.5);
        let cloud = surface_cloud(&t, 30, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = BeliefParams { num_particles: 10, ..Default::default() };
        let set = initialize_particles(&vec![t; 5], &mug(), &cloud, &params, &mut rng).unwrap();
        assert_eq!(set.len(), 10);
        assert!(set.poses.iter().all(|p| *p == set.poses[0]));
    }

    #[test]
    fn empty_cloud_initialization_keeps_priors() {
        let priors: Vec<_> = (0..12).map(|i| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.1 * i as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = BeliefParams { num_particles: 10, ..Default::default() };
        let set = initialize_particles(&priors, &mug(), &SemanticCloud::new(), &params, &mut rng).unwrap();
        assert_eq!(set.poses, priors[..10].to_vec());
        assert_eq!(set.weights, vec![0.1; 10]);
    }

    #[test]
    fn one_sided_view_keeps_only_consistent_yaws() {
        // surface seen only from the -x side; handle points +x in the truth
        let truth = Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), 0.0);
        let inv = truth.inverse();
        let mut cloud = SemanticCloud::new();
        for k in 0..15 {
            let a = std::f64::consts::PI * (0.7 + 0.6 * k as f64 / 14.0);
            cloud.push(SemanticPoint::new(inv.transform_point(Vec3::new(0.05 * a.cos(), 0.05 * a.sin(), 0.0)), Semantics::Surface));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let priors: Vec<_> =
            (0..200).map(|_| Pose::from_object_placement(Vec3::new(0.6, 0.0, 0.0), rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let params = BeliefParams::default();
        let set = initialize_particles(&priors, &mug(), &cloud, &params, &mut rng).unwrap();
        for d in particle_discrepancies(&set, &mug(), &cloud, &params) {
            assert!(d < params.eta);
        }
    }
}
