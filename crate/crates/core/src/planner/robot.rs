use crate::geometry::Vec3;

/// Planar action `(dx, dy, dθ)`, each component in `[-1, 1]`.
pub type Action = [f64; 3];

pub fn clamp_action(u: Action) -> Action {
    u.map(|v| v.clamp(-1.0, 1.0))
}

/// End-effector configuration: position of the gripper's front face center
/// and its heading about z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    pub position: Vec3<f64>,
    pub yaw: f64,
}

impl Config {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { position: Vec3::new(x, y, z), yaw }
    }

    pub fn heading(&self) -> Vec3<f64> {
        Vec3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }
}

/// Flat pusher: a rectangle of sample points whose front row (the face the
/// robot senses with) sits at the configuration position and whose body
/// extends backward along the heading.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanarGripper {
    /// Lateral extent of the front face, meters.
    pub width: f64,
    /// Extent of the body behind the front face, meters.
    pub depth: f64,
    /// Point spacing, meters.
    pub spacing: f64,
    /// Physical translation for an action component of 1, meters.
    pub translation_scale: f64,
    /// Physical rotation for an action component of 1, radians.
    pub rotation_scale: f64,
    /// Reachable xy box for the front face center.
    pub bounds_min: [f64; 2],
    pub bounds_max: [f64; 2],
}

impl Default for PlanarGripper {
    fn default() -> Self {
        Self {
            width: 0.04,
            depth: 0.015,
            spacing: 0.005,
            translation_scale: 0.08,
            rotation_scale: 0.5,
            bounds_min: [0.0, -0.4],
            bounds_max: [0.8, 0.4],
        }
    }
}

impl PlanarGripper {
    fn lateral_count(&self) -> usize {
        (self.width / self.spacing + 1e-9).floor() as usize + 1
    }

    fn row_count(&self) -> usize {
        (self.depth / self.spacing + 1e-9).floor() as usize + 1
    }

    /// Offsets in the gripper frame (x forward, y left), front row first.
    fn local_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let nl = self.lateral_count();
        let half = (nl - 1) as f64 * self.spacing / 2.0;
        (0..self.row_count()).flat_map(move |r| (0..nl).map(move |l| (-(r as f64) * self.spacing, l as f64 * self.spacing - half)))
    }

    /// Number of leading points of [`Self::points`] that form the sensing face.
    pub fn info_count(&self) -> usize {
        self.lateral_count()
    }

    /// World positions inside or on the robot, in a fixed order.
    pub fn points(&self, q: &Config) -> Vec<Vec3<f64>> {
        let mut out = Vec::with_capacity(self.lateral_count() * self.row_count());
        self.points_into(q, &mut out);
        out
    }

    pub fn points_into(&self, q: &Config, out: &mut Vec<Vec3<f64>>) {
        out.clear();
        let (s, c) = q.yaw.sin_cos();
        for (fx, fy) in self.local_points() {
            out.push(q.position + Vec3::new(c * fx - s * fy, s * fx + c * fy, 0.0));
        }
    }

    /// The sensing subset of [`Self::points`].
    pub fn info_points(&self, q: &Config) -> Vec<Vec3<f64>> {
        let mut p = self.points(q);
        p.truncate(self.info_count());
        p
    }

    /// Free-space motion: scaled action applied in the world frame, clamped to
    /// the reachable box.
    pub fn free_step(&self, q: &Config, u: Action) -> Config {
        let u = clamp_action(u);
        let x = (q.position.x + u[0] * self.translation_scale).clamp(self.bounds_min[0], self.bounds_max[0]);
        let y = (q.position.y + u[1] * self.translation_scale).clamp(self.bounds_min[1], self.bounds_max[1]);
        Config { position: Vec3::new(x, y, q.position.z), yaw: q.yaw + u[2] * self.rotation_scale }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.spacing > 0.0) || !(self.width >= 0.0) || !(self.depth >= 0.0) {
            return Err(crate::Error::Config("gripper needs spacing > 0 and nonnegative extents".into()));
        }
        Ok(())
    }
}
