//! Kernel-interpolated MPPI over a stochastic contact dynamics model.

mod cost;
mod dynamics;
mod kernel;
mod mppi;
mod robot;
mod rollout;

pub use cost::{build_normal_fields, expected_normal, info_cost, reach_cost, reach_cost_direct, total_cost, CostWeights, PlanningFields};
pub use dynamics::{dynamics_step, mini_step, sample_semantics, DynamicsParams, StepKind};
pub use kernel::{control_times, Kernel, KernelInterpolator};
pub use mppi::{roughness, softmax_weights, IterationTrace, Kmppi, MppiParams};
pub use robot::{clamp_action, Action, Config, PlanarGripper};
pub use rollout::{rollout, rollout_cost, trajectory_cost, Rollout, TrajectoryModel};
