//! Semantics-probability, information-gain and reachability fields.

use rayon::prelude::*;

use crate::belief::ParticleSet;
use crate::discrepancy::{cost_for_sdf, DiscrepancyParams};
use crate::geometry::{ScalarField, Shape, Vec3, Workspace};
use crate::semantics::{ClassProbabilities, Semantics, SensorModel};

/// Belief-derived quantities at one query position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeEstimate {
    pub probabilities: ClassProbabilities<f64>,
    /// Weighted expected cost of observing each class, indexed FREE, OCCUPIED, SURFACE.
    pub expected_cost: [f64; 3],
}

impl NodeEstimate {
    pub fn info(&self, gamma: f64) -> f64 {
        let p = &self.probabilities;
        gamma * (p.free * self.expected_cost[0] + p.occupied * self.expected_cost[1] + p.surface * self.expected_cost[2])
    }
}

/// Model constants shared by all field computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoModel {
    pub sensor: SensorModel<f64>,
    pub discrepancy: DiscrepancyParams<f64>,
    pub gamma: f64,
}

impl Default for InfoModel {
    fn default() -> Self {
        Self { sensor: SensorModel::default(), discrepancy: DiscrepancyParams::default(), gamma: 2.0 }
    }
}

pub fn estimate_at(particles: &ParticleSet, shape: &Shape<f64>, model: &InfoModel, x: Vec3<f64>) -> NodeEstimate {
    let mut p = ClassProbabilities { free: 0.0, occupied: 0.0, surface: 0.0 };
    let mut cost = [0.0; 3];
    for (t, w) in particles.iter() {
        let v = shape.sdf(t.transform_point(x));
        let pi = model.sensor.probabilities(v);
        p.free += w * pi.free;
        p.occupied += w * pi.occupied;
        p.surface += w * pi.surface;
        for (k, s) in Semantics::ALL.into_iter().enumerate() {
            cost[k] += w * cost_for_sdf(&model.discrepancy, v, s);
        }
    }
    NodeEstimate { probabilities: p, expected_cost: cost }
}

/// Probability of observing each semantics label at `x` under the belief.
pub fn semantics_probability(
    particles: &ParticleSet,
    shape: &Shape<f64>,
    sensor: &SensorModel<f64>,
    x: Vec3<f64>,
) -> ClassProbabilities<f64> {
    let model = InfoModel { sensor: *sensor, ..Default::default() };
    estimate_at(particles, shape, &model, x).probabilities
}

/// Expected information gain of observing the semantics at `x`.
pub fn info_gain(particles: &ParticleSet, shape: &Shape<f64>, model: &InfoModel, x: Vec3<f64>) -> f64 {
    estimate_at(particles, shape, model, x).info(model.gamma)
}

/// Information gain and class probabilities cached over a workspace grid.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoFields {
    pub info: ScalarField<f64>,
    pub p_free: ScalarField<f64>,
    pub p_occ: ScalarField<f64>,
    pub p_surf: ScalarField<f64>,
}

impl InfoFields {
    /// Interpolated class probabilities at `x`; beyond the grid everything is FREE.
    pub fn probabilities(&self, x: Vec3<f64>) -> ClassProbabilities<f64> {
        ClassProbabilities { free: self.p_free.query(x), occupied: self.p_occ.query(x), surface: self.p_surf.query(x) }
    }
}

pub fn build_info_fields(particles: &ParticleSet, shape: &Shape<f64>, workspace: &Workspace<f64>, model: &InfoModel) -> InfoFields {
    let nodes = workspace.enumerate();
    let estimates: Vec<NodeEstimate> = nodes.par_iter().map(|&x| estimate_at(particles, shape, model, x)).collect();
    let mut info = workspace.field(0.0, 0.0);
    let mut p_free = workspace.field(0.0, 1.0);
    let mut p_occ = workspace.field(0.0, 0.0);
    let mut p_surf = workspace.field(0.0, 0.0);
    for (k, e) in estimates.iter().enumerate() {
        info.values[k] = e.info(model.gamma);
        p_free.values[k] = e.probabilities.free;
        p_occ.values[k] = e.probabilities.occupied;
        p_surf.values[k] = e.probabilities.surface;
    }
    InfoFields { info, p_free, p_occ, p_surf }
}

/// Synthetic reachability: full inside an annulus around the robot base,
/// falling off linearly with the radial distance outside it.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachModel {
    pub base: [f64; 3],
    pub r_mid: f64,
    pub r_half: f64,
    /// Error per meter of radial distance outside the annulus.
    pub slope: f64,
    /// Error at which reachability reaches zero.
    pub psi: f64,
}

impl Default for ReachModel {
    fn default() -> Self {
        Self { base: [0.0; 3], r_mid: 0.4, r_half: 0.25, slope: 4.0, psi: 0.4 }
    }
}

impl ReachModel {
    pub fn error(&self, x: Vec3<f64>) -> f64 {
        let r = (x - Vec3::from_array(self.base)).norm();
        ((r - self.r_mid).abs() - self.r_half).max(0.0) * self.slope
    }

    pub fn reachability(&self, x: Vec3<f64>) -> f64 {
        (self.psi - self.error(x)).max(0.0) / self.psi
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.psi > 0.0) || !(self.slope >= 0.0) || !(self.r_half >= 0.0) {
            return Err(crate::Error::Config("reach model needs psi > 0, slope >= 0, r_half >= 0".into()));
        }
        Ok(())
    }
}

pub fn build_reachability(workspace: &Workspace<f64>, model: &ReachModel) -> ScalarField<f64> {
    let mut f = workspace.field(0.0, 0.0);
    for (k, x) in workspace.enumerate().into_iter().enumerate() {
        f.values[k] = model.reachability(x);
    }
    f
}
