//! Ground-truth simulator, evaluation metrics and the experiment loop.

mod episode;
mod metrics;
mod policy;
mod scenario;
mod world;

pub use episode::{run_episode, run_episode_observed, Method, Metrics, Observer, StepRecord, StepView};
pub use metrics::{converged, nll, pairwise_chamfer, success_threshold, PROBABILITY_FLOOR};
pub use policy::{slide_policy, SlideDirection, SlideState};
pub use scenario::{EpisodeParams, MovementSource, Placement, PriorSpec, Scenario, ShapeSpec, WorkspaceSpec};
pub use world::{planar_motion, Camera, Occluder, PhysicsParams, StepOutcome, World};
