use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::belief::{initialize_particles, update_step, BeliefState, Movement, ParticleSet};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Shape, Vec3};
use crate::infogain::build_reachability;
use crate::planner::{expected_normal, trajectory_cost, Action, CostWeights, Kmppi, PlanningFields, TrajectoryModel};
use crate::semantics::{downsample_cloud, SemanticCloud};

use super::metrics::{converged, nll, pairwise_chamfer, success_threshold};
use super::policy::{slide_policy, SlideDirection, SlideState};
use super::scenario::{MovementSource, PriorSpec, Scenario};
use super::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Rumi,
    InfoOnly,
    ReachOnly,
    Slide,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rumi, Method::InfoOnly, Method::ReachOnly, Method::Slide];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rumi => "rumi",
            Method::InfoOnly => "info-only",
            Method::ReachOnly => "reach-only",
            Method::Slide => "slide",
        }
    }

    /// Cost weights with the ablated term zeroed.
    pub fn weights(self, base: CostWeights) -> CostWeights {
        match self {
            Method::InfoOnly => CostWeights { reach: 0.0, ..base },
            Method::ReachOnly => CostWeights { info: 0.0, ..base },
            _ => base,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected rumi, info-only, reach-only or slide)")))
    }
}

/// One row of the per-step log. Row 0 is the initial belief.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub nll: f64,
    pub chamfer: f64,
    pub contact: bool,
    pub action: Action,
    /// True object placement after the step: x, y, yaw.
    pub object: [f64; 3],
    pub reachability: f64,
    /// False for rows carried forward after termination.
    pub executed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub steps: Vec<StepRecord>,
    pub success_threshold: f64,
    pub terminated_at: Option<usize>,
    pub failure: Option<String>,
}

impl Metrics {
    pub fn initial_nll(&self) -> f64 {
        self.steps[0].nll
    }

    pub fn final_nll(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.nll)
    }

    pub fn cumulative_nll(&self) -> f64 {
        self.steps.iter().map(|s| s.nll).sum()
    }

    pub fn success(&self) -> bool {
        self.failure.is_none() && self.final_nll() < self.success_threshold
    }

    /// Whether the true object ever left the region the robot can gather information in.
    pub fn left_reach(&self) -> bool {
        self.steps.iter().any(|s| s.reachability <= 0.0)
    }
}

/// State handed to the per-step hook after each belief update.
pub struct StepView<'a> {
    pub step: usize,
    pub world: &'a World,
    pub belief: &'a BeliefState,
    /// Planned action sequence the executed action was taken from.
    pub plan: Option<&'a [Action]>,
}

/// Optional per-step hook, e.g. for snapshots.
pub type Observer<'a> = &'a mut dyn FnMut(&StepView);

struct Context<'a> {
    scenario: &'a Scenario,
    shape: Shape<f64>,
    samples: Vec<Vec3<f64>>,
}

impl Context<'_> {
    fn record(&self, step: usize, world: &World, belief: &BeliefState, contact: bool, action: Action) -> StepRecord {
        let truth = world.truth;
        let center = truth.object_origin_in_world();
        StepRecord {
            step,
            nll: nll(&belief.particles, &self.shape, &truth, &self.samples, &self.scenario.sensor),
            chamfer: pairwise_chamfer(&belief.particles.poses, &self.shape, &self.samples),
            contact,
            action,
            object: [center.x, center.y, truth.object_yaw()],
            reachability: self.scenario.reach.reachability(center),
            executed: true,
        }
    }
}

fn priors(scenario: &Scenario, shape: &Shape<f64>, cloud: &SemanticCloud<f64>, rng: &mut ChaCha8Rng) -> Result<Vec<Pose<f64>>> {
    let tau = std::f64::consts::TAU;
    let z = scenario.workspace.z;
    match scenario.prior {
        PriorSpec::SurfaceCentroid { count } => {
            if cloud.surface.is_empty() {
                return Err(Error::Config("surface-centroid prior needs the camera to see the object".into()));
            }
            // the visible surface lies in front of the center; starting the
            // refinement behind the object keeps it off the far side's walls
            let sum = cloud.surface.iter().fold(Vec3::zeros(), |a, &p| a + p);
            let c = sum / cloud.surface.len() as f64;
            let view = c - Vec3::from_array(scenario.camera.position);
            let view = Vec3::new(view.x, view.y, 0.0).try_normalize().unwrap_or(Vec3::zeros());
            let b = shape.bounds();
            let depth = 0.25 * ((b.max.x - b.min.x) + (b.max.y - b.min.y));
            let c = c + view * depth;
            Ok((0..count).map(|_| Pose::from_object_placement(Vec3::new(c.x, c.y, z), rng.random_range(0.0..tau))).collect())
        }
        PriorSpec::Gaussian { mean, std, count } => {
            use rand_distr::{Distribution, Normal};
            let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
            Ok((0..count)
                .map(|_| {
                    let x = mean[0] + normal.sample(rng);
                    let y = mean[1] + normal.sample(rng);
                    Pose::from_object_placement(Vec3::new(x, y, z), rng.random_range(0.0..tau))
                })
                .collect())
        }
    }
}

/// Runs one seeded episode.
pub fn run_episode(scenario: &Scenario, method: Method, seed: u64) -> Result<Metrics> {
    run_episode_observed(scenario, method, seed, &mut |_| {})
}

pub fn run_episode_observed(scenario: &Scenario, method: Method, seed: u64, observer: Observer) -> Result<Metrics> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = scenario.shape.build()?;
    let workspace = scenario.build_workspace()?;
    let mut world = scenario.build_world()?;
    let ep = &scenario.episode;

    let samples = shape.sample_surface(ep.metric_samples, Some(scenario.workspace.z), &mut rng);
    let threshold = success_threshold(&shape, &world.truth, &samples, &scenario.sensor, ep.success_offset, ep.success_yaw);
    let ctx = Context { scenario, shape: shape.clone(), samples };

    let params = &scenario.belief;
    let first = downsample_cloud(&world.camera_observe(), params.r_free, params.r_surf);
    let priors = priors(scenario, &shape, &first, &mut rng)?;
    let particles = initialize_particles(&priors, &shape, &first, params, &mut rng)?;
    let mut belief = BeliefState { particles, cloud: first };
    observer(&StepView { step: 0, world: &world, belief: &belief, plan: None });

    let mut metrics = Metrics {
        steps: vec![ctx.record(0, &world, &belief, false, [0.0; 3])],
        success_threshold: threshold,
        terminated_at: None,
        failure: None,
    };
    if ep.steps == 0 {
        return Ok(metrics);
    }

    let reach = build_reachability(&workspace, &scenario.reach);
    let info_model = scenario.info_model();
    let weights = method.weights(scenario.costs);
    let fields_for = |p: &ParticleSet| PlanningFields::build(p, &shape, &workspace, &info_model, reach.clone());
    let slide_direction = if rng.random_bool(0.5) { SlideDirection::CounterClockwise } else { SlideDirection::Clockwise };

    let mut planner = match method {
        Method::Slide => None,
        _ => {
            let mut k = Kmppi::<3>::new(scenario.planner, &mut rng)?;
            let fields = fields_for(&belief.particles);
            let model = model(&fields, scenario, weights);
            let q = world.q;
            k.warm_start(|u, r| trajectory_cost(&q, u, &model, r), &mut rng);
            Some(k)
        }
    };

    let mut since_plan = usize::MAX;
    let mut contact = false;
    let mut plan: Vec<Action> = Vec::new();
    for t in 1..=ep.steps {
        plan.clear();
        let u = match planner.as_mut() {
            Some(k) => {
                if contact || since_plan >= scenario.planner.replan_interval {
                    let fields = fields_for(&belief.particles);
                    let model = model(&fields, scenario, weights);
                    let q = world.q;
                    for _ in 0..ep.iterations_per_replan.max(1) {
                        k.iterate(|u, r| trajectory_cost(&q, u, &model, r), &mut rng);
                    }
                    since_plan = 0;
                }
                since_plan += 1;
                plan = k.actions();
                k.advance()
            }
            None => {
                let touching = world.tactile_observe().surface;
                let contact_normal = (!touching.is_empty()).then(|| {
                    let c = touching.iter().fold(Vec3::zeros(), |a, &p| a + p) / touching.len() as f64;
                    expected_normal(&belief.particles, &shape, c)
                });
                slide_policy(&SlideState {
                    q: world.q,
                    center: belief.particles.mean_object_position(),
                    contact_normal,
                    direction: slide_direction,
                    translation_scale: scenario.robot.translation_scale,
                })
            }
        };
        let out = world.step(u);
        contact = out.contact;
        let obs = world.tactile_observe();
        let movement = match ep.movement {
            MovementSource::True => Movement::Observed(out.object_motion),
            MovementSource::Robot if out.contact => Movement::Estimate(out.robot_motion),
            MovementSource::Robot => Movement::Observed(Pose::identity()),
        };
        update_step(&mut belief, &shape, &obs, movement, params, &mut rng);
        observer(&StepView { step: t, world: &world, belief: &belief, plan: planner.is_some().then_some(plan.as_slice()) });
        let row = ctx.record(t, &world, &belief, out.contact, u);
        metrics.steps.push(row);
        if converged(row.chamfer, &shape, ep.tau) {
            metrics.terminated_at = Some(t);
            for s in t + 1..=ep.steps {
                metrics.steps.push(StepRecord { step: s, contact: false, action: [0.0; 3], executed: false, ..row });
            }
            break;
        }
    }
    Ok(metrics)
}

fn model<'a>(fields: &'a PlanningFields, scenario: &'a Scenario, weights: CostWeights) -> TrajectoryModel<'a> {
    TrajectoryModel {
        fields,
        robot: &scenario.robot,
        dynamics: scenario.dynamics,
        weights,
        r_ds: scenario.r_ds(),
        rollouts: scenario.planner.rollouts,
    }
}
