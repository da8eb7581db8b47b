//! Semantic point clouds, the contact sensor model and observation merging.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::geometry::{Pose, Shape, Vec3};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semantics {
    Free,
    Occupied,
    Surface,
}

impl Semantics {
    pub const ALL: [Semantics; 3] = [Semantics::Free, Semantics::Occupied, Semantics::Surface];

    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Free => "FREE",
            Semantics::Occupied => "OCCUPIED",
            Semantics::Surface => "SURFACE",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Semantics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "FREE" => Ok(Semantics::Free),
            "OCCUPIED" => Ok(Semantics::Occupied),
            "SURFACE" => Ok(Semantics::Surface),
            other => Err(format!("unknown semantics label {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemanticPoint<S> {
    pub position: Vec3<S>,
    pub semantics: Semantics,
}

impl<S> SemanticPoint<S> {
    pub fn new(position: Vec3<S>, semantics: Semantics) -> Self {
        Self { position, semantics }
    }
}

/// Observed points partitioned by semantics class.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticCloud<S> {
    pub free: Vec<Vec3<S>>,
    pub occupied: Vec<Vec3<S>>,
    pub surface: Vec<Vec3<S>>,
}

impl<S> Default for SemanticCloud<S> {
    fn default() -> Self {
        Self { free: Vec::new(), occupied: Vec::new(), surface: Vec::new() }
    }
}

impl<S: Real> SemanticCloud<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: impl IntoIterator<Item = SemanticPoint<S>>) -> Self {
        let mut c = Self::new();
        for p in points {
            c.push(p);
        }
        c
    }

    pub fn push(&mut self, p: SemanticPoint<S>) {
        self.class_mut(p.semantics).push(p.position);
    }

    pub fn class(&self, s: Semantics) -> &[Vec3<S>] {
        match s {
            Semantics::Free => &self.free,
            Semantics::Occupied => &self.occupied,
            Semantics::Surface => &self.surface,
        }
    }

    pub fn class_mut(&mut self, s: Semantics) -> &mut Vec<Vec3<S>> {
        match s {
            Semantics::Free => &mut self.free,
            Semantics::Occupied => &mut self.occupied,
            Semantics::Surface => &mut self.surface,
        }
    }

    pub fn len(&self) -> usize {
        self.free.len() + self.occupied.len() + self.surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, FREE first, then OCCUPIED, then SURFACE.
    pub fn iter(&self) -> impl Iterator<Item = SemanticPoint<S>> + '_ {
        Semantics::ALL.into_iter().flat_map(move |s| self.class(s).iter().map(move |&p| SemanticPoint::new(p, s)))
    }

    pub fn extend(&mut self, other: &Self) {
        for s in Semantics::ALL {
            self.class_mut(s).extend_from_slice(other.class(s));
        }
    }
}

/// Per-class probabilities of observing a position's semantics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassProbabilities<S> {
    pub free: S,
    pub occupied: S,
    pub surface: S,
}

impl<S: Real> ClassProbabilities<S> {
    pub fn get(&self, s: Semantics) -> S {
        match s {
            Semantics::Free => self.free,
            Semantics::Occupied => self.occupied,
            Semantics::Surface => self.surface,
        }
    }

    pub fn sum(&self) -> S {
        self.free + self.occupied + self.surface
    }

    /// The unanimous-FREE distribution.
    pub fn certainly_free() -> Self {
        Self { free: S::one(), occupied: S::zero(), surface: S::zero() }
    }
}

/// Probabilistic contact sensor: given the signed distance `v` of a query
/// position under some pose, how likely each semantics label is.
///
/// `zeta` widens the surface shell to model a sensor that over-reports
/// contact; `alpha` sets how quickly the surface probability decays with
/// distance beyond that shell.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorModel<S> {
    pub alpha: S,
    pub zeta: S,
}

impl<S: Real> Default for SensorModel<S> {
    fn default() -> Self {
        Self { alpha: S::lit(100.0), zeta: S::lit(0.003) }
    }
}

impl<S: Real> SensorModel<S> {
    pub fn probabilities(&self, v: S) -> ClassProbabilities<S> {
        let zero = S::zero();
        let one = S::one();
        let sign = if v > zero { one } else { -one };
        let shrunk = sign * (v.abs() - self.zeta).max(zero);
        ClassProbabilities {
            free: (one - (-self.alpha * shrunk).exp()).max(zero),
            occupied: (one - (self.alpha * shrunk).exp()).max(zero),
            surface: (-self.alpha * shrunk.abs()).exp(),
        }
    }
}

/// Snaps each class to its own voxel grid of side `r` and returns one point per
/// occupied cell.
///
/// Each class grid is anchored so that the minimum corner of that class's
/// points is a cell center; cells are emitted in grid scan order (x slowest).
/// Anchoring on a cell center makes the operation idempotent.
pub fn voxel_downsample<S: Real>(points: &[SemanticPoint<S>], r: S) -> Vec<SemanticPoint<S>> {
    let mut out = Vec::new();
    for s in Semantics::ALL {
        let class: Vec<Vec3<S>> = points.iter().filter(|p| p.semantics == s).map(|p| p.position).collect();
        out.extend(downsample_positions(&class, r).into_iter().map(|p| SemanticPoint::new(p, s)));
    }
    out
}

pub(crate) fn downsample_positions<S: Real>(points: &[Vec3<S>], r: S) -> Vec<Vec3<S>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let min = points.iter().fold(*first, |m, p| m.component_min(*p));
    let half = S::lit(0.5);
    let cells: BTreeSet<[i64; 3]> = points
        .iter()
        .map(|p| {
            let c = (*p - min) / r;
            [
                (c.x + half).floor().to_i64().unwrap_or(0),
                (c.y + half).floor().to_i64().unwrap_or(0),
                (c.z + half).floor().to_i64().unwrap_or(0),
            ]
        })
        .collect();
    cells
        .into_iter()
        .map(|[i, j, k]| Vec3::new(min.x + S::lit(i as f64) * r, min.y + S::lit(j as f64) * r, min.z + S::lit(k as f64) * r))
        .collect()
}

/// Downsamples a cloud with one resolution for FREE points and another for
/// SURFACE and OCCUPIED points.
pub fn downsample_cloud<S: Real>(cloud: &SemanticCloud<S>, r_free: S, r_surf: S) -> SemanticCloud<S> {
    SemanticCloud {
        free: downsample_positions(&cloud.free, r_free),
        occupied: downsample_positions(&cloud.occupied, r_surf),
        surface: downsample_positions(&cloud.surface, r_surf),
    }
}

/// Merges the accumulated cloud with a new observation after the object moved
/// by the world-frame motion `moved`.
///
/// Object-attached points (SURFACE, OCCUPIED) move with the object. FREE points
/// stay put but are dropped once any pose particle places them inside the
/// object.
pub fn merge_observations<S: Real>(
    prev: &SemanticCloud<S>,
    new: &SemanticCloud<S>,
    poses: &[Pose<S>],
    shape: &Shape<S>,
    moved: &Pose<S>,
    r_free: S,
    r_surf: S,
) -> SemanticCloud<S> {
    let mut merged = SemanticCloud::new();
    merged.occupied = prev.occupied.iter().map(|&x| moved.transform_point(x)).collect();
    merged.surface = prev.surface.iter().map(|&x| moved.transform_point(x)).collect();
    merged.free = prev.free.iter().copied().filter(|&x| poses.iter().all(|t| shape.sdf(t.transform_point(x)) > S::zero())).collect();
    merged.extend(new);
    downsample_cloud(&merged, r_free, r_surf)
}
