use std::sync::OnceLock;

use rayon::prelude::*;

use crate::belief::ParticleSet;
use crate::geometry::{ScalarField, Shape, Vec3, Workspace};
use crate::infogain::{build_info_fields, InfoFields, InfoModel};
use crate::semantics::ClassProbabilities;

use super::robot::{Config, PlanarGripper};

/// Everything the planner reads from the belief, cached on the workspace grid
/// at planning time.
#[derive(Debug)]
pub struct PlanningFields {
    pub info: InfoFields,
    pub reach: ScalarField<f64>,
    /// Weighted world-frame SDF gradient, one field per axis.
    pub normal: [ScalarField<f64>; 3],
    total_info: f64,
    reach_table: OnceLock<Option<ReachTable>>,
}

impl PlanningFields {
    pub fn new(info: InfoFields, reach: ScalarField<f64>, normal: [ScalarField<f64>; 3]) -> Self {
        let total_info = info.info.sum();
        Self { info, reach, normal, total_info, reach_table: OnceLock::new() }
    }

    pub fn build(
        particles: &ParticleSet,
        shape: &Shape<f64>,
        workspace: &Workspace<f64>,
        model: &InfoModel,
        reach: ScalarField<f64>,
    ) -> Self {
        let info = build_info_fields(particles, shape, workspace, model);
        let normal = build_normal_fields(particles, shape, workspace);
        Self::new(info, reach, normal)
    }

    pub fn probabilities(&self, x: Vec3<f64>) -> ClassProbabilities<f64> {
        self.info.probabilities(x)
    }

    pub fn p_free(&self, x: Vec3<f64>) -> f64 {
        self.info.p_free.query(x)
    }

    pub fn normal_at(&self, x: Vec3<f64>) -> Vec3<f64> {
        Vec3::new(self.normal[0].query(x), self.normal[1].query(x), self.normal[2].query(x))
    }

    pub fn total_info(&self) -> f64 {
        self.total_info
    }

    fn reach_table(&self) -> Option<&ReachTable> {
        self.reach_table.get_or_init(|| ReachTable::build(&self.info.info, &self.reach)).as_ref()
    }
}

/// `Σ_j w_j R_jᵀ ∇sdf(T_j x)` at every workspace node.
pub fn build_normal_fields(particles: &ParticleSet, shape: &Shape<f64>, workspace: &Workspace<f64>) -> [ScalarField<f64>; 3] {
    let nodes = workspace.enumerate();
    let normals: Vec<Vec3<f64>> = nodes.par_iter().map(|&x| expected_normal(particles, shape, x)).collect();
    let mut out = [workspace.field(0.0, 0.0), workspace.field(0.0, 0.0), workspace.field(0.0, 0.0)];
    for (k, n) in normals.iter().enumerate() {
        for a in 0..3 {
            out[a].values[k] = n[a];
        }
    }
    out
}

/// Weighted world-frame surface normal estimate at `x`.
pub fn expected_normal(particles: &ParticleSet, shape: &Shape<f64>, x: Vec3<f64>) -> Vec3<f64> {
    particles.iter().fold(Vec3::zeros(), |acc, (t, w)| acc + t.rotation.transpose_mul_vec(shape.gradient(t.transform_point(x))) * w)
}

/// Negated total information gain over the sensing points of every
/// configuration, after shifting into the displaced object frame and
/// collapsing points that share a voxel of side `r_ds`.
pub fn info_cost(trace: &[(Config, Vec3<f64>)], info: &ScalarField<f64>, robot: &PlanarGripper, r_ds: f64) -> f64 {
    let mut keys: Vec<[i64; 3]> = Vec::with_capacity(trace.len() * robot.info_count());
    let mut pts = Vec::new();
    for (q, d) in trace {
        robot.points_into(q, &mut pts);
        for &p in &pts[..robot.info_count()] {
            let rel = (p - *d - info.origin) / r_ds;
            keys.push([rel.x.round() as i64, rel.y.round() as i64, rel.z.round() as i64]);
        }
    }
    keys.sort_unstable();
    keys.dedup();
    let o = info.origin;
    -keys.iter().map(|k| info.query(Vec3::new(o.x + k[0] as f64 * r_ds, o.y + k[1] as f64 * r_ds, o.z + k[2] as f64 * r_ds))).sum::<f64>()
}

/// `G(i, j) = Σ_x R(x) Î(x − (i, j)·res)` over integer lattice displacements of a
/// planar grid.
/// Lazily filled cross-correlation of the info and reach fields over
/// lattice displacements.
#[derive(Debug)]
struct ReachTable {
    nx: usize,
    ny: usize,
    resolution: f64,
    hot: Vec<(usize, usize, f64)>,
    reach: Vec<f64>,
    values: Vec<OnceLock<f64>>,
}

impl ReachTable {
    fn build(info: &ScalarField<f64>, reach: &ScalarField<f64>) -> Option<Self> {
        if !info.is_planar() || info.dims != reach.dims {
            return None;
        }
        let [nx, ny, _] = info.dims;
        let hot = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = info.node_value([i, j, 0]);
                (v != 0.0).then_some((i, j, v))
            })
            .collect();
        let reach = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).map(|(i, j)| reach.node_value([i, j, 0])).collect();
        let cells = (2 * nx - 1) * (2 * ny - 1);
        Some(Self { nx, ny, resolution: info.resolution, hot, reach, values: (0..cells).map(|_| OnceLock::new()).collect() })
    }

    fn correlate(&self, di: isize, dj: isize) -> f64 {
        let mut g = 0.0;
        for &(i, j, v) in &self.hot {
            let xi = i as isize + di;
            let xj = j as isize + dj;
            if xi >= 0 && xj >= 0 && (xi as usize) < self.nx && (xj as usize) < self.ny {
                g += v * self.reach[xi as usize * self.ny + xj as usize];
            }
        }
        g
    }

    fn lattice(&self, i: isize, j: isize) -> f64 {
        let ci = i + self.nx as isize - 1;
        let cj = j + self.ny as isize - 1;
        let h = 2 * self.ny - 1;
        if ci < 0 || cj < 0 || ci as usize >= 2 * self.nx - 1 || cj as usize >= h {
            return 0.0;
        }
        *self.values[ci as usize * h + cj as usize].get_or_init(|| self.correlate(i, j))
    }

    fn at(&self, d: Vec3<f64>) -> f64 {
        let a = d.x / self.resolution;
        let b = d.y / self.resolution;
        let (i0, j0) = (a.floor(), b.floor());
        let (fa, fb) = (a - i0, b - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let g00 = self.lattice(i0, j0);
        let g10 = self.lattice(i0 + 1, j0);
        let g01 = self.lattice(i0, j0 + 1);
        let g11 = self.lattice(i0 + 1, j0 + 1);
        (1.0 - fa) * ((1.0 - fb) * g00 + fb * g01) + fa * ((1.0 - fb) * g10 + fb * g11)
    }
}

/// Reachable fraction of the information after the object is displaced by each
/// `d_t`, negated: `−Σ_x R(x) mean_t Î(x − d_t) / Σ_x Î(x)`.
///
/// Planar grids use a displacement table that interpolates bilinearly between
/// whole-cell displacements; it matches [`reach_cost_direct`] exactly at
/// whole-cell displacements and away from the grid border.
pub fn reach_cost(displacements: &[Vec3<f64>], fields: &PlanningFields) -> f64 {
    let total = fields.total_info();
    if total == 0.0 || displacements.is_empty() {
        return 0.0;
    }
    match fields.reach_table() {
        Some(table) => {
            let mean = displacements.iter().map(|&d| table.at(d)).sum::<f64>() / displacements.len() as f64;
            -(mean / total).clamp(0.0, 1.0)
        }
        None => reach_cost_direct(displacements, &fields.info.info, &fields.reach),
    }
}

/// Reference evaluation of [`reach_cost`] by querying the displaced info field
/// at every workspace node.
pub fn reach_cost_direct(displacements: &[Vec3<f64>], info: &ScalarField<f64>, reach: &ScalarField<f64>) -> f64 {
    let total = info.sum();
    if total == 0.0 || displacements.is_empty() {
        return 0.0;
    }
    let n = displacements.len() as f64;
    let mut reachable = 0.0;
    for k in 0..info.values.len() {
        let x = info.node_position(info.unravel(k));
        let mean = displacements.iter().map(|&d| info.query(x - d)).sum::<f64>() / n;
        reachable += mean * reach.values[k];
    }
    -(reachable / total).clamp(0.0, 1.0)
}

/// Scales of the two trajectory cost terms.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub info: f64,
    pub reach: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { info: 1.0, reach: 200.0 }
    }
}

pub fn total_cost(info: f64, reach: f64, weights: &CostWeights) -> f64 {
    weights.info * info + weights.reach * reach
}
