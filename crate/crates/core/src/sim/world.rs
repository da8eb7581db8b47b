use crate::geometry::{Mat3, Pose, Shape, Vec3, Workspace};
use crate::planner::{clamp_action, Action, Config, PlanarGripper};
use crate::semantics::SemanticCloud;

/// Fan of rays in the horizontal plane through `position`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Camera {
    pub position: [f64; 3],
    /// Viewing direction about z, radians.
    pub yaw: f64,
    /// Full field of view, radians.
    pub fov: f64,
    pub rays: usize,
    pub range: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self { position: [0.2, 0.0, 0.0], yaw: 0.0, fov: 0.6, rays: 120, range: 1.0 }
    }
}

/// Static axis-aligned box that blocks camera rays but not the robot.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Occluder {
    pub fn sdf(&self, p: Vec3<f64>) -> f64 {
        let c = (Vec3::from_array(self.min) + Vec3::from_array(self.max)) * 0.5;
        let h = (Vec3::from_array(self.max) - Vec3::from_array(self.min)) * 0.5;
        let q = (p - c).abs() - h;
        q.component_max(Vec3::zeros()).norm() + q.max_elem().min(0.0)
    }
}

/// Ground-truth contact and pushing constants.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsParams {
    /// Friction cone half-angle, radians.
    pub push_angle: f64,
    /// Maximum robot travel per substep, meters.
    pub substep: f64,
    /// Radius of gyration of the support pressure distribution, meters.
    pub pressure_radius: f64,
    /// Distance to the surface below which a sensing point reports contact, meters.
    pub contact_threshold: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { push_angle: 45f64.to_radians(), substep: 0.001, pressure_radius: 0.03, contact_threshold: 0.003 }
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub shape: Shape<f64>,
    /// True world→object transform.
    pub truth: Pose<f64>,
    pub robot: PlanarGripper,
    pub q: Config,
    pub camera: Camera,
    pub occluders: Vec<Occluder>,
    pub workspace: Workspace<f64>,
    pub physics: PhysicsParams,
}

/// Result of executing one action in the world.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// World-frame object motion: maps old world positions of object points to new ones.
    pub object_motion: Pose<f64>,
    /// World-frame end-effector motion.
    pub robot_motion: Pose<f64>,
    pub contact: bool,
}

/// Rigid motion rotating by `angle` about the vertical axis through `center`, then translating by `t`.
pub fn planar_motion(center: Vec3<f64>, angle: f64, t: Vec3<f64>) -> Pose<f64> {
    let r = Mat3::rot_z(angle);
    Pose::new(r, center + t - r.mul_vec(center))
}

impl World {
    pub fn sdf(&self, x: Vec3<f64>) -> f64 {
        self.shape.sdf(self.truth.transform_point(x))
    }

    pub fn object_center(&self) -> Vec3<f64> {
        self.truth.object_origin_in_world()
    }

    fn world_normal(&self, x: Vec3<f64>) -> Vec3<f64> {
        self.truth.rotation.transpose_mul_vec(self.shape.gradient(self.truth.transform_point(x)))
    }

    /// Index and signed distance of the robot point deepest inside the object.
    fn deepest(&self, pts: &[Vec3<f64>]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in pts.iter().enumerate() {
            let d = self.sdf(p);
            if d < 0.0 && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    fn move_object(&mut self, m: &Pose<f64>) {
        self.truth = self.truth.compose(&m.inverse()).projected(crate::geometry::PoseSpace::Planar);
    }

    /// Sticking push at contact point `c` moving by `v`: solve the ellipsoidal
    /// limit surface for the object twist that carries `c` along with the pusher.
    fn push_object(&mut self, c: Vec3<f64>, v: Vec3<f64>) {
        let o = self.object_center();
        let (rx, ry) = (c.x - o.x, c.y - o.y);
        let k = 1.0 / (self.physics.pressure_radius * self.physics.pressure_radius);
        let a = [[1.0 + k * ry * ry, -k * rx * ry], [-k * rx * ry, 1.0 + k * rx * rx]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let fx = (a[1][1] * v.x - a[0][1] * v.y) / det;
        let fy = (a[0][0] * v.y - a[1][0] * v.x) / det;
        let omega = k * (rx * fy - ry * fx);
        self.move_object(&planar_motion(o, omega, Vec3::new(fx, fy, 0.0)));
    }

    /// Translates the object out of any remaining robot penetration.
    fn resolve_penetration(&mut self, pts: &[Vec3<f64>]) {
        for _ in 0..20 {
            let Some((i, d)) = self.deepest(pts) else { return };
            let n = self.world_normal(pts[i]);
            let n = Vec3::new(n.x, n.y, 0.0).try_normalize().unwrap_or(Vec3::unit_x());
            self.move_object(&Pose::from_translation(n * (d - 1e-5)));
        }
    }

    /// Executes an action: the robot moves in small substeps; penetrating
    /// contact inside the friction cone pushes the object, contact outside it
    /// stops the robot.
    pub fn step(&mut self, u: Action) -> StepOutcome {
        let u = clamp_action(u);
        let start_truth = self.truth;
        let start_q = self.q;
        let target = self.robot.free_step(&self.q, u);
        let dp = target.position - self.q.position;
        let dyaw = target.yaw - self.q.yaw;
        let lever = self.robot.width * 0.5;
        let travel = dp.norm().max(dyaw.abs() * lever);
        let n = ((travel / self.physics.substep).ceil() as usize).max(1);
        let mut contact = false;
        let mut prev_pts = self.robot.points(&self.q);
        for k in 1..=n {
            let f = k as f64 / n as f64;
            let cand = Config { position: start_q.position + dp * f, yaw: start_q.yaw + dyaw * f };
            let pts = self.robot.points(&cand);
            if let Some((i, _)) = self.deepest(&pts) {
                contact = true;
                let v = pts[i] - prev_pts[i];
                let normal = self.world_normal(pts[i]);
                let pushing = normal.angle_to(-v).is_some_and(|a| a < self.physics.push_angle);
                if !pushing {
                    break;
                }
                self.push_object(pts[i], v);
                self.resolve_penetration(&pts);
            }
            self.q = cand;
            prev_pts = pts;
        }
        if !contact {
            contact = !self.tactile_observe().surface.is_empty();
        }
        let object_motion = self.truth.inverse().compose(&start_truth);
        let robot_motion = planar_motion(start_q.position, self.q.yaw - start_q.yaw, self.q.position - start_q.position);
        StepOutcome { object_motion, robot_motion, contact }
    }

    /// Contact sensing: sensing-face points within the contact threshold of the
    /// surface are SURFACE; robot points clear of the object by more than the
    /// threshold are FREE.
    pub fn tactile_observe(&self) -> SemanticCloud<f64> {
        let thr = self.physics.contact_threshold;
        let pts = self.robot.points(&self.q);
        let info = self.robot.info_count();
        let mut cloud = SemanticCloud::new();
        for (i, &p) in pts.iter().enumerate() {
            let d = self.sdf(p);
            if i < info && d.abs() < thr {
                cloud.surface.push(p);
            } else if d > thr {
                cloud.free.push(p);
            }
        }
        cloud
    }

    fn scene_sdf(&self, p: Vec3<f64>) -> (f64, bool) {
        let obj = self.sdf(p);
        let occ = self.occluders.iter().map(|o| o.sdf(p)).fold(f64::INFINITY, f64::min);
        if obj <= occ {
            (obj, true)
        } else {
            (occ, false)
        }
    }

    /// Depth camera: sphere-traces each ray, reports the object hit as SURFACE
    /// and FREE points along the ray up to 95% of the hit depth.
    pub fn camera_observe(&self) -> SemanticCloud<f64> {
        let cam = &self.camera;
        let origin = Vec3::from_array(cam.position);
        let spacing = self.workspace.resolution;
        let mut cloud = SemanticCloud::new();
        for k in 0..cam.rays {
            let a = if cam.rays == 1 { cam.yaw } else { cam.yaw - cam.fov / 2.0 + cam.fov * k as f64 / (cam.rays - 1) as f64 };
            let dir = Vec3::new(a.cos(), a.sin(), 0.0);
            let mut t = 0.0;
            let mut hit: Option<(f64, bool)> = None;
            for _ in 0..512 {
                let (d, is_obj) = self.scene_sdf(origin + dir * t);
                if d < 1e-6 {
                    hit = Some((t, is_obj));
                    break;
                }
                t += d;
                if t > cam.range {
                    break;
                }
            }
            let free_until = match hit {
                Some((t, is_obj)) => {
                    if is_obj {
                        let p = origin + dir * t;
                        if self.workspace.contains(p) {
                            cloud.surface.push(p);
                        }
                    }
                    0.95 * t
                }
                None => cam.range,
            };
            let mut s = spacing;
            while s <= free_until {
                let p = origin + dir * s;
                if self.workspace.contains(p) {
                    cloud.free.push(p);
                }
                s += spacing;
            }
        }
        cloud
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(center: Vec3<f64>, q: Config) -> World {
        World {
            shape: Shape::sphere(0.05),
            truth: Pose::from_object_placement(center, 0.0),
            robot: PlanarGripper::default(),
            q,
            camera: Camera::default(),
            occluders: Vec::new(),
            workspace: Workspace::planar([0.0, 0.8], [-0.4, 0.4], 0.0, 0.01).unwrap(),
            physics: PhysicsParams::default(),
        }
    }

    #[test]
    fn free_space_action_leaves_object() {
        let mut w = world(Vec3::new(0.6, 0.0, 0.0), Config::new(0.2, 0.0, 0.0, 0.0));
        let before = w.truth;
        let out = w.step([0.5, 0.5, 0.0]);
        assert!(!out.contact);
        assert_eq!(w.truth, before);
        assert!(out.object_motion.is_identity(1e-15, 1e-15));
    }

    #[test]
    fn head_on_push_moves_object_by_overlap() {
        // front face 5 mm short of the sphere, then a 20 mm push
        let mut w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.445, 0.0, 0.0, 0.0));
        let out = w.step([0.25, 0.0, 0.0]);
        assert!(out.contact);
        let moved = w.object_center().x - 0.5;
        assert!((moved - 0.015).abs() < 1e-3, "moved {moved}");
        assert!(w.object_center().y.abs() < 1e-3);
    }

    #[test]
    fn graze_outside_friction_cone_blocks() {
        // sideways motion while the front face rests against the sphere
        let mut w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.4505, 0.02, 0.0, 0.0));
        let before = w.truth;
        let q0 = w.q;
        w.step([0.0, -0.5, 0.0]);
        assert_eq!(w.truth, before);
        assert!((w.q.position - q0.position).norm() < 0.04);
    }

    #[test]
    fn pushing_never_leaves_deep_penetration() {
        let mut w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.44, 0.01, 0.0, 0.0));
        for u in [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [1.0, -0.2, 0.3]] {
            w.step(u);
            for p in w.robot.points(&w.q) {
                assert!(w.sdf(p) > -w.physics.substep * 1.5);
            }
        }
    }

    #[test]
    fn tactile_labels() {
        let w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.2, 0.0, 0.0, 0.0));
        let c = w.tactile_observe();
        assert_eq!(c.free.len(), w.robot.points(&w.q).len());
        assert!(c.surface.is_empty());
        let w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.451, 0.0, 0.0, 0.0));
        let c = w.tactile_observe();
        assert!(!c.surface.is_empty());
        for p in &c.surface {
            assert!(w.sdf(*p).abs() < 0.003);
        }
    }

    #[test]
    fn tactile_threshold_is_strict() {
        // dyadic sizes so the front row center sits exactly on the threshold
        let mut w = world(Vec3::new(0.5, 0.0, 0.0), Config::new(0.43359375, 0.0, 0.0, 0.0));
        w.shape = Shape::sphere(0.0625);
        w.physics.contact_threshold = 0.00390625;
        let c = w.tactile_observe();
        let center = w.robot.info_points(&w.q)[4];
        assert_eq!(w.sdf(center), 0.00390625);
        assert!(!c.surface.contains(&center));
    }

    #[test]
    fn camera_sees_front_face() {
        let mut w = world(Vec3::new(0.6, 0.0, 0.0), Config::new(0.05, 0.3, 0.0, 0.0));
        w.camera = Camera { position: [0.2, 0.0, 0.0], yaw: 0.0, fov: 0.3, rays: 31, range: 1.0 };
        let c = w.camera_observe();
        assert!(!c.surface.is_empty());
        for p in &c.surface {
            assert!(w.sdf(*p).abs() < 1e-5);
            assert!(p.x < 0.6);
        }
        for p in &c.free {
            assert!(w.sdf(*p) > 0.0);
        }
        // the central ray hits exactly once
        w.camera.rays = 1;
        assert_eq!(w.camera_observe().surface.len(), 1);
    }

    #[test]
    fn camera_missing_object_sees_only_free() {
        let mut w = world(Vec3::new(0.6, 0.3, 0.0), Config::new(0.05, 0.3, 0.0, 0.0));
        w.camera = Camera { position: [0.2, 0.0, 0.0], yaw: 0.0, fov: 0.2, rays: 21, range: 1.0 };
        let c = w.camera_observe();
        assert!(c.surface.is_empty() && !c.free.is_empty());
    }

    #[test]
    fn occluder_hides_object() {
        let mut w = world(Vec3::new(0.6, 0.0, 0.0), Config::new(0.05, 0.3, 0.0, 0.0));
        w.camera = Camera { position: [0.2, 0.0, 0.0], yaw: 0.0, fov: 0.3, rays: 31, range: 1.0 };
        w.occluders.push(Occluder { min: [0.35, -0.3, -0.1], max: [0.4, 0.3, 0.1] });
        let c = w.camera_observe();
        assert!(c.surface.is_empty());
        assert!(c.free.iter().all(|p| p.x < 0.35));
    }
}
