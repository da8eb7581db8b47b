use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefParams;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Shape, Vec3, Workspace};
use crate::infogain::{InfoModel, ReachModel};
use crate::planner::{Config, CostWeights, DynamicsParams, MppiParams, PlanarGripper};
use crate::semantics::SensorModel;

use super::world::{Camera, Occluder, PhysicsParams, World};

/// Object geometry, in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Sphere {
        radius: f64,
    },
    Cuboid {
        half_extents: [f64; 3],
    },
    /// Annular wall with a box handle on +x; `handle` is the handle's full size.
    Mug {
        outer_radius: f64,
        inner_radius: f64,
        height: f64,
        handle: [f64; 3],
    },
}

impl Default for ShapeSpec {
    fn default() -> Self {
        Self::Mug { outer_radius: 0.05, inner_radius: 0.042, height: 0.08, handle: [0.02, 0.015, 0.05] }
    }
}

impl ShapeSpec {
    pub fn build(&self) -> Result<Shape<f64>> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            Self::Sphere { radius } if positive(radius) => Ok(Shape::sphere(radius)),
            Self::Cuboid { half_extents } if half_extents.iter().all(|&h| positive(h)) => Ok(Shape::cuboid(Vec3::from_array(half_extents))),
            Self::Mug { outer_radius, inner_radius, height, handle }
                if positive(outer_radius)
                    && positive(inner_radius)
                    && inner_radius < outer_radius
                    && positive(height)
                    && handle.iter().all(|&h| positive(h)) =>
            {
                Ok(Shape::mug(outer_radius, inner_radius, height, Vec3::from_array(handle)))
            }
            _ => Err(Error::Config(format!("invalid shape dimensions: {self:?}"))),
        }
    }
}

/// Planar placement `(x, y, z)` plus yaw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default)]
    pub z: f64,
    pub resolution: f64,
}

impl Default for WorkspaceSpec {
    fn default() -> Self {
        Self { x: [0.0, 0.8], y: [-0.4, 0.4], z: 0.0, resolution: 0.01 }
    }
}

/// How the prior poses for initialization are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Centroid of the first SURFACE observation with uniform yaw.
    SurfaceCentroid { count: usize },
    /// Gaussian planar position around `mean` with uniform yaw.
    Gaussian { mean: [f64; 2], std: f64, count: usize },
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::SurfaceCentroid { count: 200 }
    }
}

/// Where the object motion fed to the belief update comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementSource {
    /// End-effector motion while in contact, refined against the observation.
    #[default]
    Robot,
    /// The simulator's true object motion.
    True,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeParams {
    pub steps: usize,
    /// Termination ratio of pairwise Chamfer to the shape's bounding diagonal.
    pub tau: f64,
    /// Object-frame surface samples for the metrics.
    pub metric_samples: usize,
    /// Success threshold offset: translation in meters and yaw in radians.
    pub success_offset: f64,
    pub success_yaw: f64,
    pub movement: MovementSource,
    /// Downsample resolution of the info cost; defaults to the workspace resolution.
    pub r_ds: Option<f64>,
    /// MPPI updates run at every replan.
    pub iterations_per_replan: usize,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            steps: 40,
            tau: 0.03,
            metric_samples: 500,
            success_offset: 0.005,
            success_yaw: 5f64.to_radians(),
            movement: MovementSource::Robot,
            r_ds: None,
            iterations_per_replan: 1,
        }
    }
}

/// Complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub shape: ShapeSpec,
    pub truth: Placement,
    pub start: Placement,
    pub workspace: WorkspaceSpec,
    pub camera: Camera,
    pub occluders: Vec<Occluder>,
    pub prior: PriorSpec,
    pub robot: PlanarGripper,
    pub physics: PhysicsParams,
    pub sensor: SensorModel<f64>,
    pub belief: BeliefParams,
    pub planner: MppiParams,
    pub dynamics: DynamicsParams,
    pub costs: CostWeights,
    pub reach: ReachModel,
    pub episode: EpisodeParams,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            shape: ShapeSpec::default(),
            truth: Placement { position: [0.6, 0.0, 0.0], yaw: 0.0 },
            start: Placement { position: [0.42, 0.0, 0.0], yaw: 0.0 },
            workspace: WorkspaceSpec::default(),
            camera: Camera::default(),
            occluders: Vec::new(),
            prior: PriorSpec::default(),
            robot: PlanarGripper::default(),
            physics: PhysicsParams::default(),
            sensor: SensorModel::default(),
            belief: BeliefParams::default(),
            planner: MppiParams::default(),
            dynamics: DynamicsParams::default(),
            costs: CostWeights::default(),
            reach: ReachModel::default(),
            episode: EpisodeParams::default(),
        }
    }
}

impl Scenario {
    /// Desk-scale mug seen from the robot's side with the handle facing away,
    /// well inside the reachable band.
    pub fn desk_mug() -> Self {
        let base = Self::default();
        Self {
            name: "desk_mug".into(),
            truth: Placement { position: [0.6, 0.0, 0.0], yaw: 0.0 },
            start: Placement { position: [0.42, 0.0, 0.0], yaw: 0.0 },
            belief: BeliefParams { gamma: 20.0, eta: 1.0, ..base.belief },
            episode: EpisodeParams { tau: 0.005, movement: MovementSource::True, iterations_per_replan: 2, ..base.episode },
            ..base
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Self = toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.build()?;
        self.build_workspace()?;
        self.belief.validate()?;
        self.planner.validate()?;
        self.robot.validate()?;
        self.reach.validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.sensor.alpha > 0.0) || !(self.sensor.zeta >= 0.0) {
            return bad("sensor needs alpha > 0 and zeta >= 0");
        }
        if self.episode.metric_samples == 0 || !(self.episode.tau > 0.0) {
            return bad("episode needs metric_samples >= 1 and tau > 0");
        }
        if self.episode.r_ds.is_some_and(|r| !(r > 0.0)) {
            return bad("r_ds must be positive");
        }
        if !(self.physics.substep > 0.0) || !(self.physics.pressure_radius > 0.0) {
            return bad("physics needs positive substep and pressure radius");
        }
        match self.prior {
            PriorSpec::SurfaceCentroid { count } | PriorSpec::Gaussian { count, .. } if count == 0 => {
                return bad("prior count must be at least 1");
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_workspace(&self) -> Result<Workspace<f64>> {
        let w = &self.workspace;
        Workspace::planar(w.x, w.y, w.z, w.resolution)
    }

    pub fn truth_pose(&self) -> Pose<f64> {
        Pose::from_object_placement(Vec3::from_array(self.truth.position), self.truth.yaw)
    }

    pub fn info_model(&self) -> InfoModel {
        InfoModel { sensor: self.sensor, discrepancy: self.belief.discrepancy(), gamma: self.belief.gamma }
    }

    pub fn r_ds(&self) -> f64 {
        self.episode.r_ds.unwrap_or(self.workspace.resolution)
    }

    pub fn build_world(&self) -> Result<World> {
        Ok(World {
            shape: self.shape.build()?,
            truth: self.truth_pose(),
            robot: self.robot.clone(),
            q: Config::new(self.start.position[0], self.start.position[1], self.start.position[2], self.start.yaw),
            camera: self.camera.clone(),
            occluders: self.occluders.clone(),
            workspace: self.build_workspace()?,
            physics: self.physics,
        })
    }
}
