//! Signed distance descriptions of rigid objects.
//!
//! Primitives are exact Euclidean distance functions. CSG combinations use
//! `min` (union) and `max` (intersection) of child distances; those are sign
//! correct and exact on the surface, but only a bound on the true distance away
//! from it. Every consumer in this crate thresholds near the zero level set, so
//! that is sufficient.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{ScalarField, Vec3};
use crate::scalar::Real;

/// 2D cross-section for extruded shapes, in the object xy-plane.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile<S> {
    Circle { radius: S },
    Annulus { inner: S, outer: S },
    Rect { half_extents: [S; 2] },
}

impl<S: Real> Profile<S> {
    fn sdf_grad(&self, x: S, y: S) -> (S, [S; 2]) {
        match *self {
            Profile::Circle { radius } => {
                let r = (x * x + y * y).sqrt();
                (r - radius, radial(x, y, r))
            }
            Profile::Annulus { inner, outer } => {
                let r = (x * x + y * y).sqrt();
                let half = S::lit(0.5);
                let mid = (inner + outer) * half;
                let off = r - mid;
                let g = radial(x, y, r);
                let sign = if off >= S::zero() { S::one() } else { -S::one() };
                (off.abs() - (outer - inner) * half, [g[0] * sign, g[1] * sign])
            }
            Profile::Rect { half_extents } => {
                let (d, g) = box_sdf_grad(&[x, y], &half_extents);
                (d, [g[0], g[1]])
            }
        }
    }

    fn sdf(&self, x: S, y: S) -> S {
        match *self {
            Profile::Circle { radius } => (x * x + y * y).sqrt() - radius,
            Profile::Annulus { inner, outer } => {
                let half = S::lit(0.5);
                ((x * x + y * y).sqrt() - (inner + outer) * half).abs() - (outer - inner) * half
            }
            Profile::Rect { half_extents } => box_sdf(&[x, y], &half_extents),
        }
    }

    fn half_extent(&self) -> [S; 2] {
        match *self {
            Profile::Circle { radius } => [radius, radius],
            Profile::Annulus { outer, .. } => [outer, outer],
            Profile::Rect { half_extents } => half_extents,
        }
    }
}

fn radial<S: Real>(x: S, y: S, r: S) -> [S; 2] {
    if r > S::zero() {
        [x / r, y / r]
    } else {
        [S::one(), S::zero()]
    }
}

fn box_sdf<S: Real, const N: usize>(p: &[S; N], half: &[S; N]) -> S {
    let mut outside = S::zero();
    let mut inside = S::neg_infinity();
    for a in 0..N {
        let q = p[a].abs() - half[a];
        if q > S::zero() {
            outside = outside + q * q;
        }
        inside = inside.max(q);
    }
    if outside > S::zero() {
        outside.sqrt()
    } else {
        inside
    }
}

fn extrude_sdf<S: Real>(z: S, d2: S, half_height: S) -> S {
    let wz = z.abs() - half_height;
    if d2 <= S::zero() && wz <= S::zero() {
        d2.max(wz)
    } else {
        let a = d2.max(S::zero());
        let b = wz.max(S::zero());
        if b == S::zero() {
            a
        } else if a == S::zero() {
            b
        } else {
            (a * a + b * b).sqrt()
        }
    }
}

/// Exact box distance and its (sub)gradient in N dimensions.
fn box_sdf_grad<S: Real, const N: usize>(p: &[S; N], half: &[S; N]) -> (S, [S; N]) {
    let mut q = [S::zero(); N];
    let mut outside = S::zero();
    let mut any_out = false;
    for a in 0..N {
        q[a] = p[a].abs() - half[a];
        if q[a] > S::zero() {
            outside = outside + q[a] * q[a];
            any_out = true;
        }
    }
    let sign = |v: S| if v >= S::zero() { S::one() } else { -S::one() };
    let mut g = [S::zero(); N];
    if any_out {
        let d = outside.sqrt();
        for a in 0..N {
            if q[a] > S::zero() {
                g[a] = q[a] / d * sign(p[a]);
            }
        }
        (d, g)
    } else {
        let mut best = 0;
        for a in 1..N {
            if q[a] > q[best] {
                best = a;
            }
        }
        g[best] = sign(p[best]);
        (q[best], g)
    }
}

/// A signed distance function baked onto a voxel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelSdf<S> {
    pub field: ScalarField<S>,
}

impl<S: Real> VoxelSdf<S> {
    /// Samples `node` on a grid covering its bounds plus `padding`.
    pub fn bake(node: &SdfNode<S>, resolution: S, padding: S) -> Result<Self> {
        let bounds = node.bounds().ok_or_else(|| Error::Config("cannot voxelize an unbounded shape".into()))?;
        let min = bounds.min - Vec3::splat(padding);
        let max = bounds.max + Vec3::splat(padding);
        let ws = crate::geometry::Workspace::new(min, max, resolution)?;
        let mut field = ws.field(S::zero(), S::zero());
        for (slot, p) in field.values.iter_mut().zip(ws.enumerate()) {
            *slot = node.sdf(p);
        }
        // Outside the baked grid the distance is at least the padding.
        field.outside_value = padding;
        Ok(Self { field })
    }

    fn sdf(&self, p: Vec3<S>) -> S {
        self.field.query(p)
    }

    /// Central differences with step h = res / 2, normalized. At a flat spot the
    /// first axis with the largest one-sided difference decides.
    fn gradient(&self, p: Vec3<S>) -> Vec3<S> {
        let h = self.field.resolution * S::lit(0.5);
        let two_h = h + h;
        let axes = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
        let mut g = [S::zero(); 3];
        for a in 0..3 {
            if self.field.dims[a] > 1 {
                g[a] = (self.sdf(p + axes[a] * h) - self.sdf(p - axes[a] * h)) / two_h;
            }
        }
        if let Some(n) = Vec3::from_array(g).try_normalize() {
            return n;
        }
        let here = self.sdf(p);
        let mut best = (S::neg_infinity(), Vec3::unit_x());
        for (a, axis) in axes.iter().enumerate() {
            if self.field.dims[a] == 1 {
                continue;
            }
            let fwd = self.sdf(p + *axis * h) - here;
            let bwd = self.sdf(p - *axis * h) - here;
            if fwd > best.0 {
                best = (fwd, *axis);
            }
            if bwd > best.0 {
                best = (bwd, -*axis);
            }
        }
        best.1
    }
}

/// Expression tree describing a signed distance function in the object frame.
#[derive(Clone, Debug, PartialEq)]
pub enum SdfNode<S> {
    Sphere {
        radius: S,
    },
    Box {
        half_extents: Vec3<S>,
    },
    /// Cylinder along the object z-axis.
    Cylinder {
        radius: S,
        half_height: S,
    },
    /// A 2D profile extruded along z, centered at z = 0.
    Extruded {
        profile: Profile<S>,
        half_height: S,
    },
    Translate {
        offset: Vec3<S>,
        child: Box<SdfNode<S>>,
    },
    Union(Vec<SdfNode<S>>),
    Intersection(Vec<SdfNode<S>>),
    Complement(Box<SdfNode<S>>),
    Voxel(Arc<VoxelSdf<S>>),
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<S> {
    pub min: Vec3<S>,
    pub max: Vec3<S>,
}

impl<S: Real> Aabb<S> {
    pub fn diagonal(&self) -> S {
        (self.max - self.min).norm()
    }

    fn union(&self, o: &Self) -> Self {
        Self { min: self.min.component_min(o.min), max: self.max.component_max(o.max) }
    }

    fn intersection(&self, o: &Self) -> Self {
        Self { min: self.min.component_max(o.min), max: self.max.component_min(o.max) }
    }
}

impl<S: Real> SdfNode<S> {
    pub fn sdf(&self, p: Vec3<S>) -> S {
        match self {
            SdfNode::Sphere { radius } => p.norm() - *radius,
            SdfNode::Box { half_extents } => box_sdf(&p.to_array(), &half_extents.to_array()),
            SdfNode::Cylinder { radius, half_height } => extrude_sdf(p.z, (p.x * p.x + p.y * p.y).sqrt() - *radius, *half_height),
            SdfNode::Extruded { profile, half_height } => extrude_sdf(p.z, profile.sdf(p.x, p.y), *half_height),
            SdfNode::Translate { offset, child } => child.sdf(p - *offset),
            SdfNode::Union(children) => children.iter().map(|c| c.sdf(p)).fold(S::infinity(), S::min),
            SdfNode::Intersection(children) => children.iter().map(|c| c.sdf(p)).fold(S::neg_infinity(), S::max),
            SdfNode::Complement(child) => -child.sdf(p),
            SdfNode::Voxel(v) => v.sdf(p),
        }
    }

    /// Signed distance together with a unit gradient (a deterministic
    /// subgradient on the medial axis or at CSG creases).
    pub fn sdf_and_gradient(&self, p: Vec3<S>) -> (S, Vec3<S>) {
        match self {
            SdfNode::Sphere { radius } => {
                let r = p.norm();
                let g = if r > S::zero() { p / r } else { Vec3::unit_x() };
                (r - *radius, g)
            }
            SdfNode::Box { half_extents } => {
                let (d, g) = box_sdf_grad(&p.to_array(), &half_extents.to_array());
                (d, Vec3::from_array(g))
            }
            SdfNode::Cylinder { radius, half_height } => {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                extrude(p, (r - *radius, radial(p.x, p.y, r)), *half_height)
            }
            SdfNode::Extruded { profile, half_height } => extrude(p, profile.sdf_grad(p.x, p.y), *half_height),
            SdfNode::Translate { offset, child } => child.sdf_and_gradient(p - *offset),
            SdfNode::Union(children) => {
                let mut best: Option<(S, Vec3<S>)> = None;
                for c in children {
                    let r = c.sdf_and_gradient(p);
                    if best.is_none_or(|b| r.0 < b.0) {
                        best = Some(r);
                    }
                }
                best.unwrap_or((S::infinity(), Vec3::unit_x()))
            }
            SdfNode::Intersection(children) => {
                let mut best: Option<(S, Vec3<S>)> = None;
                for c in children {
                    let r = c.sdf_and_gradient(p);
                    if best.is_none_or(|b| r.0 > b.0) {
                        best = Some(r);
                    }
                }
                best.unwrap_or((S::neg_infinity(), Vec3::unit_x()))
            }
            SdfNode::Complement(child) => {
                let (d, g) = child.sdf_and_gradient(p);
                (-d, -g)
            }
            SdfNode::Voxel(v) => (v.sdf(p), v.gradient(p)),
        }
    }

    /// Bounding box, `None` when unbounded (a bare complement).
    pub fn bounds(&self) -> Option<Aabb<S>> {
        match self {
            SdfNode::Sphere { radius } => Some(Aabb { min: Vec3::splat(-*radius), max: Vec3::splat(*radius) }),
            SdfNode::Box { half_extents } => Some(Aabb { min: -*half_extents, max: *half_extents }),
            SdfNode::Cylinder { radius, half_height } => {
                let h = Vec3::new(*radius, *radius, *half_height);
                Some(Aabb { min: -h, max: h })
            }
            SdfNode::Extruded { profile, half_height } => {
                let [hx, hy] = profile.half_extent();
                let h = Vec3::new(hx, hy, *half_height);
                Some(Aabb { min: -h, max: h })
            }
            SdfNode::Translate { offset, child } => child.bounds().map(|b| Aabb { min: b.min + *offset, max: b.max + *offset }),
            SdfNode::Union(children) => {
                let mut acc: Option<Aabb<S>> = None;
                for c in children {
                    let b = c.bounds()?;
                    acc = Some(acc.map_or(b, |a| a.union(&b)));
                }
                acc
            }
            SdfNode::Intersection(children) => {
                let mut acc: Option<Aabb<S>> = None;
                for b in children.iter().filter_map(|c| c.bounds()) {
                    acc = Some(acc.map_or(b, |a| a.intersection(&b)));
                }
                acc
            }
            SdfNode::Complement(_) => None,
            SdfNode::Voxel(v) => {
                let f = &v.field;
                let last = [f.dims[0] - 1, f.dims[1] - 1, f.dims[2] - 1];
                Some(Aabb { min: f.origin, max: f.node_position(last) })
            }
        }
    }
}

fn extrude<S: Real>(p: Vec3<S>, profile: (S, [S; 2]), half_height: S) -> (S, Vec3<S>) {
    let (d2, g2) = profile;
    let wz = p.z.abs() - half_height;
    let zsign = if p.z >= S::zero() { S::one() } else { -S::one() };
    if d2 <= S::zero() && wz <= S::zero() {
        if d2 >= wz {
            (d2, Vec3::new(g2[0], g2[1], S::zero()))
        } else {
            (wz, Vec3::new(S::zero(), S::zero(), zsign))
        }
    } else {
        let a = d2.max(S::zero());
        let b = wz.max(S::zero());
        if b == S::zero() {
            return (a, Vec3::new(g2[0], g2[1], S::zero()));
        }
        if a == S::zero() {
            return (b, Vec3::new(S::zero(), S::zero(), zsign));
        }
        let d = (a * a + b * b).sqrt();
        let g = Vec3::new(g2[0] * a, g2[1] * a, zsign * b) / d;
        (d, g)
    }
}

/// A rigid object's signed distance function with its precomputed bounding
/// box and characteristic length (the bounding-box diagonal).
#[derive(Clone, Debug)]
pub struct Shape<S> {
    root: SdfNode<S>,
    bounds: Aabb<S>,
    characteristic_length: S,
}

impl<S: Real> Shape<S> {
    pub fn new(root: SdfNode<S>) -> Result<Self> {
        let bounds = root.bounds().ok_or_else(|| Error::Config("shape must be bounded".into()))?;
        let characteristic_length = bounds.diagonal();
        if !(characteristic_length > S::zero()) {
            return Err(Error::Config("shape has a degenerate bounding box".into()));
        }
        Ok(Self { root, bounds, characteristic_length })
    }

    pub fn sphere(radius: S) -> Self {
        Self::new(SdfNode::Sphere { radius }).expect("sphere is bounded")
    }

    pub fn cuboid(half_extents: Vec3<S>) -> Self {
        Self::new(SdfNode::Box { half_extents }).expect("box is bounded")
    }

    /// Upright mug: annular wall extruded along z with a solid box handle on +x.
    /// The handle overlaps the wall by 2 mm so the union has no gap.
    pub fn mug(outer: S, inner: S, height: S, handle: Vec3<S>) -> Self {
        let half = S::lit(0.5);
        let body = SdfNode::Extruded { profile: Profile::Annulus { inner, outer }, half_height: height * half };
        let overlap = S::lit(0.002);
        let handle = SdfNode::Translate {
            offset: Vec3::new(outer + handle.x * half - overlap, S::zero(), S::zero()),
            child: Box::new(SdfNode::Box { half_extents: handle * half }),
        };
        Self::new(SdfNode::Union(vec![body, handle])).expect("mug is bounded")
    }

    /// The default experiment mug: 50 mm outer radius, 42 mm inner radius,
    /// 80 mm tall, 20x15x50 mm handle.
    pub fn default_mug() -> Self {
        Self::mug(S::lit(0.05), S::lit(0.042), S::lit(0.08), Vec3::new(S::lit(0.02), S::lit(0.015), S::lit(0.05)))
    }

    pub fn root(&self) -> &SdfNode<S> {
        &self.root
    }

    pub fn bounds(&self) -> Aabb<S> {
        self.bounds
    }

    pub fn characteristic_length(&self) -> S {
        self.characteristic_length
    }

    #[inline]
    pub fn sdf(&self, p: Vec3<S>) -> S {
        self.root.sdf(p)
    }

    #[inline]
    pub fn gradient(&self, p: Vec3<S>) -> Vec3<S> {
        self.root.sdf_and_gradient(p).1
    }

    #[inline]
    pub fn sdf_and_gradient(&self, p: Vec3<S>) -> (S, Vec3<S>) {
        self.root.sdf_and_gradient(p)
    }

    /// Replaces the analytic tree with a voxel-baked copy.
    pub fn voxelized(&self, resolution: S) -> Result<Self> {
        let padding = resolution * S::lit(4.0);
        let baked = VoxelSdf::bake(&self.root, resolution, padding)?;
        Ok(Self { root: SdfNode::Voxel(Arc::new(baked)), bounds: self.bounds, characteristic_length: self.characteristic_length })
    }

    /// Approximately uniform samples on the zero level set, in the object frame.
    ///
    /// Points are drawn in a thin shell around the surface by rejection and then
    /// projected along the gradient. With `slice_z` set, sampling is restricted
    /// to the cross-section at that height (planar tasks).
    pub fn sample_surface<R: Rng + ?Sized>(&self, n: usize, slice_z: Option<S>, rng: &mut R) -> Vec<Vec3<S>> {
        let band = self.characteristic_length.to_f64_lossy() * 5e-3;
        let margin = band * 2.0;
        let lo = self.bounds.min.to_f64();
        let hi = self.bounds.max.to_f64();
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n {
            attempts += 1;
            assert!(attempts < 10_000_000, "surface sampling failed to converge");
            let mut c = [0.0f64; 3];
            for a in 0..3 {
                c[a] = rng.random_range((lo[a] - margin)..=(hi[a] + margin));
            }
            if let Some(z) = slice_z {
                c[2] = z.to_f64_lossy();
            }
            let mut p = Vec3::<S>::from_f64(c);
            if self.sdf(p).to_f64_lossy().abs() > band {
                continue;
            }
            for _ in 0..8 {
                let (d, g) = self.sdf_and_gradient(p);
                let mut step = g * d;
                if slice_z.is_some() {
                    step.z = S::zero();
                }
                p -= step;
                if d.abs() < S::lit(1e-12) {
                    break;
                }
            }
            if self.sdf(p).to_f64_lossy().abs() < 1e-7 {
                out.push(p);
            }
        }
        out
    }
}
