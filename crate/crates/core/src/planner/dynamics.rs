use rand::Rng;

use crate::geometry::Vec3;
use crate::semantics::Semantics;

use super::cost::PlanningFields;
use super::robot::{Action, Config, PlanarGripper};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    /// Sub-steps each action is split into.
    pub mini_steps: usize,
    /// Maximum angle between the contact normal and the reversed push
    /// direction for contact to count as pushing, radians.
    pub push_angle: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self { mini_steps: 4, push_angle: 45f64.to_radians() }
    }
}

/// Outcome of a single predicted mini-step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Free,
    Push,
    Blocked,
}

/// Samples which semantics a point observes.
pub fn sample_semantics<R: Rng + ?Sized>(p_free: f64, p_occ: f64, rng: &mut R) -> Semantics {
    let r: f64 = rng.random();
    if r < p_free {
        Semantics::Free
    } else if r < p_free + p_occ {
        Semantics::Occupied
    } else {
        Semantics::Surface
    }
}

/// Predicts one mini-step from `q` with object displacement `d` under action `u`.
#[allow(clippy::too_many_arguments)]
pub fn mini_step<R: Rng + ?Sized>(
    q: &Config,
    d: Vec3<f64>,
    u: Action,
    fields: &PlanningFields,
    robot: &PlanarGripper,
    params: &DynamicsParams,
    rng: &mut R,
    scratch: &mut (Vec<Vec3<f64>>, Vec<Vec3<f64>>),
) -> (Config, Vec3<f64>, StepKind) {
    let candidate = robot.free_step(q, u);
    robot.points_into(&candidate, &mut scratch.0);
    let mut best = 0;
    let mut best_p = f64::INFINITY;
    for (i, &x) in scratch.0.iter().enumerate() {
        let p = fields.p_free(x - d);
        if p < best_p {
            best_p = p;
            best = i;
        }
    }
    let x = scratch.0[best] - d;
    let probs = fields.probabilities(x);
    if sample_semantics(probs.free, probs.occupied, rng) == Semantics::Free {
        return (candidate, d, StepKind::Free);
    }
    robot.points_into(q, &mut scratch.1);
    let push = scratch.0[best] - scratch.1[best];
    let n = fields.normal_at(x);
    match n.angle_to(-push) {
        Some(angle) if angle < params.push_angle => (candidate, d + push, StepKind::Push),
        _ => (*q, d, StepKind::Blocked),
    }
}

/// Predicts one action, split into mini-steps. Every mini-step's configuration
/// and displacement is appended to `trace`.
#[allow(clippy::too_many_arguments)]
pub fn dynamics_step<R: Rng + ?Sized>(
    q: &Config,
    d: Vec3<f64>,
    u: Action,
    fields: &PlanningFields,
    robot: &PlanarGripper,
    params: &DynamicsParams,
    rng: &mut R,
    trace: &mut Vec<(Config, Vec3<f64>)>,
) -> (Config, Vec3<f64>) {
    let n = params.mini_steps.max(1);
    let part = u.map(|v| v.clamp(-1.0, 1.0) / n as f64);
    let mut scratch = (Vec::new(), Vec::new());
    let (mut q, mut d) = (*q, d);
    for _ in 0..n {
        let (nq, nd, _) = mini_step(&q, d, part, fields, robot, params, rng, &mut scratch);
        q = nq;
        d = nd;
        trace.push((q, d));
    }
    (q, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Workspace;
    use crate::infogain::InfoFields;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ws() -> Workspace<f64> {
        Workspace::planar([0.0, 0.4], [-0.2, 0.2], 0.0, 0.01).unwrap()
    }

    /// Free everywhere except certainly-surface for x >= wall, with a constant normal.
    fn wall_fields(wall: f64, normal: Vec3<f64>) -> PlanningFields {
        let w = ws();
        let mut p_free = w.field(1.0, 1.0);
        let mut p_surf = w.field(0.0, 0.0);
        for (k, x) in w.enumerate().into_iter().enumerate() {
            if x.x >= wall - 1e-9 {
                p_free.values[k] = 0.0;
                p_surf.values[k] = 1.0;
            }
        }
        let info = InfoFields { info: w.field(0.0, 0.0), p_free, p_occ: w.field(0.0, 0.0), p_surf };
        PlanningFields::new(info, w.field(1.0, 0.0), [w.field(normal.x, 0.0), w.field(normal.y, 0.0), w.field(normal.z, 0.0)])
    }

    #[test]
    fn free_space_moves_without_displacement() {
        let f = wall_fields(10.0, Vec3::unit_x());
        let g = PlanarGripper::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q0 = Config::new(0.1, 0.0, 0.0, 0.0);
        let mut trace = Vec::new();
        let (q, d) = dynamics_step(&q0, Vec3::zeros(), [0.5, 0.2, 0.0], &f, &g, &DynamicsParams::default(), &mut rng, &mut trace);
        assert_eq!(
            q,
            g.free_step(
                &g.free_step(&g.free_step(&g.free_step(&q0, [0.125, 0.05, 0.0]), [0.125, 0.05, 0.0]), [0.125, 0.05, 0.0]),
                [0.125, 0.05, 0.0]
            )
        );
        assert_eq!(d, Vec3::zeros());
        assert_eq!(trace.len(), 4);
    }

    #[test]
    fn head_on_push_accumulates_displacement() {
        // moving +x into a wall whose outward normal is -x
        let f = wall_fields(0.2, -Vec3::unit_x());
        let g = PlanarGripper::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q0 = Config::new(0.19, 0.0, 0.0, 0.0);
        let mut trace = Vec::new();
        let (q, d) = dynamics_step(&q0, Vec3::zeros(), [1.0, 0.0, 0.0], &f, &g, &DynamicsParams::default(), &mut rng, &mut trace);
        assert!((q.position.x - 0.27).abs() < 1e-12);
        // the first mini-step starts in free space; every later one pushes
        assert!(d.x > 0.039 && d.x <= 0.08 + 1e-12, "{d:?}");
        assert!(d.y.abs() < 1e-12);
    }

    #[test]
    fn glancing_contact_blocks() {
        // normal at 80 degrees from the reversed motion direction
        let a = 80f64.to_radians();
        let n = Vec3::new(-a.cos(), a.sin(), 0.0);
        let f = wall_fields(0.2, n);
        let g = PlanarGripper::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q0 = Config::new(0.21, 0.0, 0.0, 0.0);
        let mut trace = Vec::new();
        let (q, d) = dynamics_step(&q0, Vec3::zeros(), [1.0, 0.0, 0.0], &f, &g, &DynamicsParams::default(), &mut rng, &mut trace);
        assert_eq!(q, q0);
        assert_eq!(d, Vec3::zeros());
    }

    #[test]
    fn displacement_requires_non_free_sample() {
        let f = wall_fields(10.0, -Vec3::unit_x());
        let g = PlanarGripper::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut scratch = (Vec::new(), Vec::new());
        for _ in 0..100 {
            let (_, d, kind) = mini_step(
                &Config::new(0.1, 0.0, 0.0, 0.0),
                Vec3::zeros(),
                [1.0, 0.0, 0.0],
                &f,
                &g,
                &DynamicsParams::default(),
                &mut rng,
                &mut scratch,
            );
            assert_eq!(kind, StepKind::Free);
            assert_eq!(d, Vec3::zeros());
        }
    }
}
