use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Axis-aligned box of query positions sampled on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Workspace<S> {
    pub min: Vec3<S>,
    pub max: Vec3<S>,
    pub resolution: S,
}

impl<S: Real> Workspace<S> {
    pub fn new(min: Vec3<S>, max: Vec3<S>, resolution: S) -> Result<Self> {
        if !(resolution > S::zero()) || !resolution.is_finite() {
            return Err(Error::Config(format!("workspace resolution must be positive, got {resolution}")));
        }
        for a in 0..3 {
            if max[a] < min[a] {
                return Err(Error::Config(format!("workspace axis {a} has max < min")));
            }
        }
        Ok(Self { min, max, resolution })
    }

    /// Planar workspace at fixed height `z`.
    pub fn planar(x: [S; 2], y: [S; 2], z: S, resolution: S) -> Result<Self> {
        Self::new(Vec3::new(x[0], y[0], z), Vec3::new(x[1], y[1], z), resolution)
    }

    /// Node count per axis: `floor(extent / res) + 1`.
    pub fn dims(&self) -> [usize; 3] {
        let mut d = [1usize; 3];
        for (a, n) in d.iter_mut().enumerate() {
            let ratio = ((self.max[a] - self.min[a]) / self.resolution).to_f64_lossy();
            // absorb representation error such as 0.8 / 0.01 = 79.99999999999999
            *n = (ratio + 1e-9).floor() as usize + 1;
        }
        d
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_planar(&self) -> bool {
        self.dims()[2] == 1
    }

    pub fn node(&self, idx: [usize; 3]) -> Vec3<S> {
        let r = self.resolution;
        Vec3::new(self.min.x + S::lit(idx[0] as f64) * r, self.min.y + S::lit(idx[1] as f64) * r, self.min.z + S::lit(idx[2] as f64) * r)
    }

    /// All grid positions, x slowest and z fastest. Both boundary planes included.
    pub fn enumerate(&self) -> Vec<Vec3<S>> {
        let [nx, ny, nz] = self.dims();
        let mut out = Vec::with_capacity(nx * ny * nz);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    out.push(self.node([i, j, k]));
                }
            }
        }
        out
    }

    pub fn contains(&self, p: Vec3<S>) -> bool {
        let planar = self.is_planar();
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && (planar || (p.z >= self.min.z && p.z <= self.max.z))
    }

    /// An empty field over this workspace's grid.
    pub fn field(&self, fill: S, outside_value: S) -> ScalarField<S> {
        let dims = self.dims();
        ScalarField { origin: self.min, resolution: self.resolution, dims, values: vec![fill; dims.iter().product()], outside_value }
    }
}

/// Dense scalar grid with multilinear interpolation.
///
/// Axes with a single node are treated as constant along that axis, so a
/// planar field answers queries at any height.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<S> {
    pub origin: Vec3<S>,
    pub resolution: S,
    pub dims: [usize; 3],
    pub values: Vec<S>,
    pub outside_value: S,
}

impl<S: Real> ScalarField<S> {
    pub fn new(origin: Vec3<S>, resolution: S, dims: [usize; 3], values: Vec<S>, outside_value: S) -> Result<Self> {
        if dims.iter().product::<usize>() != values.len() {
            return Err(Error::Config(format!("field dims {dims:?} do not match {} values", values.len())));
        }
        if !(resolution > S::zero()) {
            return Err(Error::Config("field resolution must be positive".into()));
        }
        Ok(Self { origin, resolution, dims, values, outside_value })
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    pub fn unravel(&self, linear: usize) -> [usize; 3] {
        let k = linear % self.dims[2];
        let rest = linear / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    #[inline]
    pub fn node_value(&self, idx: [usize; 3]) -> S {
        self.values[self.linear_index(idx)]
    }

    pub fn node_position(&self, idx: [usize; 3]) -> Vec3<S> {
        let r = self.resolution;
        Vec3::new(
            self.origin.x + S::lit(idx[0] as f64) * r,
            self.origin.y + S::lit(idx[1] as f64) * r,
            self.origin.z + S::lit(idx[2] as f64) * r,
        )
    }

    pub fn is_planar(&self) -> bool {
        self.dims[2] == 1
    }

    /// Multilinear interpolation inside the grid, `outside_value` beyond it.
    pub fn query(&self, x: Vec3<S>) -> S {
        if self.dims[2] == 1 && self.dims[0] > 1 && self.dims[1] > 1 {
            return self.query_planar(x);
        }
        let mut base = [0usize; 3];
        let mut frac = [S::zero(); 3];
        for a in 0..3 {
            let n = self.dims[a];
            if n == 1 {
                continue;
            }
            let c = (x[a] - self.origin[a]) / self.resolution;
            let upper = S::lit((n - 1) as f64);
            if !(c >= S::zero() && c <= upper) {
                return self.outside_value;
            }
            let i = c.floor().to_usize().unwrap_or(0).min(n - 2);
            base[a] = i;
            frac[a] = c - S::lit(i as f64);
        }
        let mut acc = S::zero();
        let one = S::one();
        let span = |a: usize| if self.dims[a] == 1 { 1 } else { 2 };
        for di in 0..span(0) {
            let wx = if di == 0 { one - frac[0] } else { frac[0] };
            for dj in 0..span(1) {
                let wy = if dj == 0 { one - frac[1] } else { frac[1] };
                for dk in 0..span(2) {
                    let wz = if dk == 0 { one - frac[2] } else { frac[2] };
                    let w = wx * wy * wz;
                    if w != S::zero() {
                        acc = acc + w * self.node_value([base[0] + di, base[1] + dj, base[2] + dk]);
                    }
                }
            }
        }
        acc
    }

    fn query_planar(&self, x: Vec3<S>) -> S {
        let [nx, ny, _] = self.dims;
        let cx = (x.x - self.origin.x) / self.resolution;
        let cy = (x.y - self.origin.y) / self.resolution;
        if !(cx >= S::zero() && cx <= S::lit((nx - 1) as f64) && cy >= S::zero() && cy <= S::lit((ny - 1) as f64)) {
            return self.outside_value;
        }
        let i = cx.floor().to_usize().unwrap_or(0).min(nx - 2);
        let j = cy.floor().to_usize().unwrap_or(0).min(ny - 2);
        let fx = cx - S::lit(i as f64);
        let fy = cy - S::lit(j as f64);
        let one = S::one();
        let k = i * ny + j;
        let mut acc = S::zero();
        for (w, v) in [((one - fx) * (one - fy), k), ((one - fx) * fy, k + 1), (fx * (one - fy), k + ny), (fx * fy, k + ny + 1)] {
            if w != S::zero() {
                acc = acc + w * self.values[v];
            }
        }
        acc
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min_value(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn sum(&self) -> S {
        self.values.iter().copied().sum()
    }

    pub fn scaled(&self, k: S) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v * k;
        }
        out.outside_value = out.outside_value * k;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_field() -> ScalarField<f64> {
        // 3x3 planar field, value = i + 10 j
        let mut values = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                values.push(i as f64 + 10.0 * j as f64);
            }
        }
        ScalarField::new(Vec3::zeros(), 0.1, [3, 3, 1], values, -1.0).unwrap()
    }

    #[test]
    fn node_queries_are_exact() {
        let mut f = ramp_field();
        f.values[4] = 0.7;
        assert_eq!(f.query(Vec3::new(0.1, 0.1, 0.0)), 0.7);
        assert_eq!(f.query(Vec3::new(0.2, 0.2, 0.0)), 22.0);
    }

    #[test]
    fn midpoint_is_average() {
        let mut f = Workspace::<f64>::planar([0.0, 0.01], [0.0, 0.0], 0.0, 0.01).unwrap().field(0.0, 0.0);
        f.values = vec![0.0, 1.0];
        assert!((f.query(Vec3::new(0.005, 0.0, 0.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outside_returns_outside_value() {
        let f = ramp_field();
        assert_eq!(f.query(Vec3::new(1.2, 0.1, 0.0)), -1.0);
        assert_eq!(f.query(Vec3::new(0.1, -1.0, 0.0)), -1.0);
    }

    #[test]
    fn planar_field_ignores_height() {
        let f = ramp_field();
        assert_eq!(f.query(Vec3::new(0.1, 0.1, 5.0)), f.query(Vec3::new(0.1, 0.1, 0.0)));
    }

    #[test]
    fn linear_between_nodes_along_axis() {
        let f = ramp_field();
        for t in [0.0, 0.25, 0.5, 0.9] {
            let v = f.query(Vec3::new(0.1 * t, 0.1, 0.0));
            assert!((v - (10.0 + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn workspace_counts() {
        let w = Workspace::new(Vec3::zeros(), Vec3::splat(0.02), 0.01).unwrap();
        assert_eq!(w.enumerate().len(), 27);
        let w = Workspace::planar([0.0, 0.8], [-0.4, 0.4], 0.0, 0.01).unwrap();
        assert_eq!(w.dims(), [81, 81, 1]);
        assert_eq!(w.enumerate().len(), 6561);
        let w = Workspace::new(Vec3::zeros(), Vec3::zeros(), 0.01).unwrap();
        assert_eq!(w.enumerate(), vec![Vec3::zeros()]);
    }

    #[test]
    fn enumeration_is_x_slowest() {
        let w = Workspace::new(Vec3::zeros(), Vec3::new(0.01, 0.01, 0.0), 0.01).unwrap();
        let pts = w.enumerate();
        assert_eq!(pts[1], Vec3::new(0.0, 0.01, 0.0));
        assert_eq!(pts[2], Vec3::new(0.01, 0.0, 0.0));
    }

    #[test]
    fn unravel_inverts_linear_index() {
        let f = Workspace::new(Vec3::zeros(), Vec3::new(0.03, 0.02, 0.01), 0.01).unwrap().field(0.0f64, 0.0);
        for l in 0..f.values.len() {
            assert_eq!(f.linear_index(f.unravel(l)), l);
        }
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(Workspace::planar([0.0, 1.0], [0.0, 1.0], 0.0, 0.0f64).is_err());
    }
}
