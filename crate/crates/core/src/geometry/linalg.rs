use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec3<S> {
    #[inline]
    pub const fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zeros() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    #[inline]
    pub fn splat(v: S) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn unit_x() -> Self {
        Self::new(S::one(), S::zero(), S::zero())
    }

    #[inline]
    pub fn unit_y() -> Self {
        Self::new(S::zero(), S::one(), S::zero())
    }

    #[inline]
    pub fn unit_z() -> Self {
        Self::new(S::zero(), S::zero(), S::one())
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(S::lit(v[0]), S::lit(v[1]), S::lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.to_f64_lossy(), self.y.to_f64_lossy(), self.z.to_f64_lossy()]
    }

    #[inline]
    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [S; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_squared(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero (or non-finite) vector.
    pub fn try_normalize(self) -> Option<Self> {
        let n = self.norm();
        if n > S::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn map(self, f: impl Fn(S) -> S) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    #[inline]
    pub fn zip_map(self, o: Self, f: impl Fn(S, S) -> S) -> Self {
        Self::new(f(self.x, o.x), f(self.y, o.y), f(self.z, o.z))
    }

    #[inline]
    pub fn abs(self) -> Self {
        self.map(S::abs)
    }

    #[inline]
    pub fn max_elem(self) -> S {
        self.x.max(self.y).max(self.z)
    }

    #[inline]
    pub fn min_elem(self) -> S {
        self.x.min(self.y).min(self.z)
    }

    #[inline]
    pub fn component_max(self, o: Self) -> Self {
        self.zip_map(o, S::max)
    }

    #[inline]
    pub fn component_min(self, o: Self) -> Self {
        self.zip_map(o, S::min)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Angle between two vectors in radians, `None` if either is zero.
    pub fn angle_to(self, o: Self) -> Option<S> {
        let a = self.try_normalize()?;
        let b = o.try_normalize()?;
        Some(a.dot(b).max(-S::one()).min(S::one()).acos())
    }

    pub fn distance(self, o: Self) -> S {
        (self - o).norm()
    }

    pub fn cast<T: Real>(self) -> Vec3<T> {
        Vec3::from_f64(self.to_f64())
    }
}

impl<S: Real> Index<usize> for Vec3<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<S: Real> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Real> AddAssign for Vec3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Real> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Real> SubAssign for Vec3<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Real> Mul<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, s: S) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<S: Real> Div<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn div(self, s: S) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<S: Real> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S> {
    pub rows: [[S; 3]; 3],
}

impl<S: Real> Mat3<S> {
    pub fn identity() -> Self {
        let (o, z) = (S::one(), S::zero());
        Self { rows: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    pub fn from_rows(rows: [[S; 3]; 3]) -> Self {
        Self { rows }
    }

    /// Rotation about the world z-axis.
    pub fn rot_z(yaw: S) -> Self {
        let (s, c) = yaw.sin_cos();
        let (o, z) = (S::one(), S::zero());
        Self { rows: [[c, -s, z], [s, c, z], [z, z, o]] }
    }

    /// Rodrigues formula for a rotation of `angle` about unit `axis`.
    pub fn from_axis_angle(axis: Vec3<S>, angle: S) -> Self {
        let Some(k) = axis.try_normalize() else {
            return Self::identity();
        };
        let (s, c) = angle.sin_cos();
        let t = S::one() - c;
        let (x, y, z) = (k.x, k.y, k.z);
        Self {
            rows: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    /// Exponential map of a rotation vector.
    pub fn from_rotation_vector(w: Vec3<S>) -> Self {
        let angle = w.norm();
        if angle == S::zero() {
            return Self::identity();
        }
        Self::from_axis_angle(w / angle, angle)
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<S>) -> Vec3<S> {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    /// `selfᵀ · v` without materializing the transpose.
    #[inline]
    pub fn transpose_mul_vec(&self, v: Vec3<S>) -> Vec3<S> {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z,
            r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z,
            r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut out = [[S::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.rows[i][0] * o.rows[0][j] + self.rows[i][1] * o.rows[1][j] + self.rows[i][2] * o.rows[2][j];
            }
        }
        Self { rows: out }
    }

    pub fn transpose(&self) -> Self {
        let r = &self.rows;
        Self { rows: [[r[0][0], r[1][0], r[2][0]], [r[0][1], r[1][1], r[2][1]], [r[0][2], r[1][2], r[2][2]]] }
    }

    pub fn determinant(&self) -> S {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    pub fn column(&self, j: usize) -> Vec3<S> {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn from_columns(a: Vec3<S>, b: Vec3<S>, c: Vec3<S>) -> Self {
        Self { rows: [[a.x, b.x, c.x], [a.y, b.y, c.y], [a.z, b.z, c.z]] }
    }

    /// Gram-Schmidt on the columns; restores a proper rotation after drift.
    pub fn orthonormalized(&self) -> Self {
        let a = self.column(0).try_normalize().unwrap_or_else(Vec3::unit_x);
        let b0 = self.column(1);
        let b = (b0 - a * a.dot(b0)).try_normalize().unwrap_or_else(|| any_orthogonal(a));
        let c = a.cross(b);
        Self::from_columns(a, b, c)
    }

    /// Rotation angle in `[0, π]`.
    pub fn rotation_angle(&self) -> S {
        let r = &self.rows;
        let two = S::lit(2.0);
        let c = (r[0][0] + r[1][1] + r[2][2] - S::one()) / two;
        c.max(-S::one()).min(S::one()).acos()
    }

    /// Yaw of the rotation's projection onto the xy-plane.
    pub fn yaw(&self) -> S {
        self.rows[1][0].atan2(self.rows[0][0])
    }

    /// Unit quaternion `(w, x, y, z)`.
    pub fn to_quaternion(&self) -> [S; 4] {
        let r = &self.rows;
        let one = S::one();
        let two = S::lit(2.0);
        let quarter = S::lit(0.25);
        let trace = r[0][0] + r[1][1] + r[2][2];
        let q = if trace > S::zero() {
            let s = (trace + one).sqrt() * two;
            [quarter * s, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s]
        } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
            let s = (one + r[0][0] - r[1][1] - r[2][2]).sqrt() * two;
            [(r[2][1] - r[1][2]) / s, quarter * s, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s]
        } else if r[1][1] > r[2][2] {
            let s = (one + r[1][1] - r[0][0] - r[2][2]).sqrt() * two;
            [(r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, quarter * s, (r[1][2] + r[2][1]) / s]
        } else {
            let s = (one + r[2][2] - r[0][0] - r[1][1]).sqrt() * two;
            [(r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, quarter * s]
        };
        // canonical sign: w >= 0
        if q[0] < S::zero() {
            [-q[0], -q[1], -q[2], -q[3]]
        } else {
            q
        }
    }

    pub fn from_quaternion(q: [S; 4]) -> Self {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        let one = S::one();
        let two = S::lit(2.0);
        Self {
            rows: [
                [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
                [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
            ],
        }
    }
}

fn any_orthogonal<S: Real>(a: Vec3<S>) -> Vec3<S> {
    let trial = if a.x.abs() < S::lit(0.9) { Vec3::unit_x() } else { Vec3::unit_y() };
    (trial - a * a.dot(trial)).try_normalize().unwrap_or_else(Vec3::unit_z)
}

impl<S: Real> Mul for Mat3<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.mul_mat(&o)
    }
}

impl<S: Real> Mul<Vec3<S>> for Mat3<S> {
    type Output = Vec3<S>;
    fn mul(self, v: Vec3<S>) -> Vec3<S> {
        self.mul_vec(v)
    }
}
