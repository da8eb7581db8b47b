use rand::Rng;

use crate::geometry::Vec3;

use super::cost::{info_cost, reach_cost, total_cost, CostWeights, PlanningFields};
use super::dynamics::{dynamics_step, DynamicsParams};
use super::robot::{Action, Config, PlanarGripper};

/// Everything needed to score a candidate action sequence.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryModel<'a> {
    pub fields: &'a PlanningFields,
    pub robot: &'a PlanarGripper,
    pub dynamics: DynamicsParams,
    pub weights: CostWeights,
    /// Downsample resolution for the info cost.
    pub r_ds: f64,
    pub rollouts: usize,
}

/// Predicted configurations and displacements of one stochastic rollout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rollout {
    /// One entry per mini-step.
    pub trace: Vec<(Config, Vec3<f64>)>,
    /// Displacement after each action.
    pub displacements: Vec<Vec3<f64>>,
}

pub fn rollout<R: Rng + ?Sized>(q0: &Config, actions: &[Action], model: &TrajectoryModel, rng: &mut R) -> Rollout {
    let mut out = Rollout::default();
    let (mut q, mut d) = (*q0, Vec3::zeros());
    for &u in actions {
        (q, d) = dynamics_step(&q, d, u, model.fields, model.robot, &model.dynamics, rng, &mut out.trace);
        out.displacements.push(d);
    }
    out
}

pub fn rollout_cost(r: &Rollout, model: &TrajectoryModel) -> f64 {
    let info = if model.weights.info != 0.0 { info_cost(&r.trace, &model.fields.info.info, model.robot, model.r_ds) } else { 0.0 };
    let reach = if model.weights.reach != 0.0 { reach_cost(&r.displacements, model.fields) } else { 0.0 };
    total_cost(info, reach, &model.weights)
}

/// Mean total cost over the configured number of stochastic rollouts.
pub fn trajectory_cost<R: Rng + ?Sized>(q0: &Config, actions: &[Action], model: &TrajectoryModel, rng: &mut R) -> f64 {
    let n = model.rollouts.max(1);
    (0..n).map(|_| rollout_cost(&rollout(q0, actions, model, rng), model)).sum::<f64>() / n as f64
}
