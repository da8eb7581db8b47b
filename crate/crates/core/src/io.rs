//! Artifact formats: per-step metrics, clouds, particles, fields, planner
//! traces, belief snapshots and planar heat maps.
//!
//! CSV schemas (header row first, one record per line):
//!
//! | file      | columns |
//! |-----------|---------|
//! | metrics   | `step,nll,chamfer,contact,action_x,action_y,action_yaw,object_x,object_y,object_yaw,reachability,executed` |
//! | cloud     | `label,x,y,z` with label `free`, `occupied` or `surface` |
//! | particles | `x,y,z,yaw,weight` (object origin in the world and object yaw) |
//! | field     | `x,y,z,value` over grid nodes |
//! | plan      | `step,index,action_x,action_y,action_yaw` |

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::{BeliefState, ParticleSet};
use crate::error::{Error, Result};
use crate::geometry::{Pose, ScalarField, Vec3};
use crate::planner::{Action, Config};
use crate::semantics::SemanticCloud;
use crate::sim::{Scenario, StepRecord};
use crate::stats::percentile;

pub const METRICS_HEADER: [&str; 12] = [
    "step",
    "nll",
    "chamfer",
    "contact",
    "action_x",
    "action_y",
    "action_yaw",
    "object_x",
    "object_y",
    "object_yaw",
    "reachability",
    "executed",
];

pub fn write_metrics<W: Write>(out: W, steps: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for s in steps {
        w.write_record([
            s.step.to_string(),
            s.nll.to_string(),
            s.chamfer.to_string(),
            (s.contact as u8).to_string(),
            s.action[0].to_string(),
            s.action[1].to_string(),
            s.action[2].to_string(),
            s.object[0].to_string(),
            s.object[1].to_string(),
            s.object[2].to_string(),
            s.reachability.to_string(),
            (s.executed as u8).to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn metrics_to_string(steps: &[StepRecord]) -> String {
    let mut buf = Vec::new();
    write_metrics(&mut buf, steps).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_metrics<R: Read>(input: R) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::Config(format!("unexpected metrics header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f =
            |i: usize| -> Result<f64> { rec[i].parse::<f64>().map_err(|e| Error::Config(format!("column {}: {e}", METRICS_HEADER[i]))) };
        let flag = |i: usize| -> Result<bool> {
            match &rec[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Config(format!("column {}: expected 0 or 1, got `{other}`", METRICS_HEADER[i]))),
            }
        };
        out.push(StepRecord {
            step: rec[0].parse().map_err(|e| Error::Config(format!("column step: {e}")))?,
            nll: f(1)?,
            chamfer: f(2)?,
            contact: flag(3)?,
            action: [f(4)?, f(5)?, f(6)?],
            object: [f(7)?, f(8)?, f(9)?],
            reachability: f(10)?,
            executed: flag(11)?,
        });
    }
    Ok(out)
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<StepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_metrics(file).map_err(|e| match e {
        Error::Config(message) | Error::Parse { message, .. } => Error::Parse { path: path.to_path_buf(), message },
        Error::Csv(c) => Error::Parse { path: path.to_path_buf(), message: c.to_string() },
        other => other,
    })
}

pub fn write_cloud<W: Write>(out: W, cloud: &SemanticCloud<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "x", "y", "z"])?;
    for (label, pts) in [("free", &cloud.free), ("occupied", &cloud.occupied), ("surface", &cloud.surface)] {
        for p in pts.iter() {
            w.write_record([label.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_particles<W: Write>(out: W, particles: &ParticleSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "yaw", "weight"])?;
    for (t, weight) in particles.iter() {
        let o = t.object_origin_in_world();
        w.write_record([o.x, o.y, o.z, t.object_yaw(), weight].map(|v| v.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_field<W: Write>(out: W, field: &ScalarField<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "value"])?;
    for (k, v) in field.values.iter().enumerate() {
        let x = field.node_position(field.unravel(k));
        w.write_record([x.x, x.y, x.z, *v].map(|v| v.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Planned action sequences, one block of rows per step.
pub fn write_plans<W: Write>(out: W, plans: &[(usize, Vec<Action>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "index", "action_x", "action_y", "action_yaw"])?;
    for (step, actions) in plans {
        for (i, u) in actions.iter().enumerate() {
            w.write_record([step.to_string(), i.to_string(), u[0].to_string(), u[1].to_string(), u[2].to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleRecord {
    pub position: [f64; 3],
    pub yaw: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudRecord {
    pub free: Vec<[f64; 3]>,
    pub occupied: Vec<[f64; 3]>,
    pub surface: Vec<[f64; 3]>,
}

/// Belief and robot state at one step, enough to rebuild the planning fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub step: usize,
    /// Robot x, y, z and yaw.
    pub robot: [f64; 4],
    pub particles: Vec<ParticleRecord>,
    pub cloud: CloudRecord,
    pub scenario: Scenario,
}

impl Snapshot {
    pub fn capture(scenario: &Scenario, step: usize, q: &Config, belief: &BeliefState) -> Self {
        let pts = |v: &[Vec3<f64>]| v.iter().map(|p| p.to_array()).collect();
        Self {
            step,
            robot: [q.position.x, q.position.y, q.position.z, q.yaw],
            particles: belief
                .particles
                .iter()
                .map(|(t, weight)| ParticleRecord { position: t.object_origin_in_world().to_array(), yaw: t.object_yaw(), weight })
                .collect(),
            cloud: CloudRecord {
                free: pts(&belief.cloud.free),
                occupied: pts(&belief.cloud.occupied),
                surface: pts(&belief.cloud.surface),
            },
            scenario: scenario.clone(),
        }
    }

    pub fn particles(&self) -> ParticleSet {
        ParticleSet {
            poses: self.particles.iter().map(|p| Pose::from_object_placement(Vec3::from_array(p.position), p.yaw)).collect(),
            weights: self.particles.iter().map(|p| p.weight).collect(),
        }
    }

    pub fn cloud(&self) -> SemanticCloud<f64> {
        let pts = |v: &[[f64; 3]]| v.iter().map(|&p| Vec3::from_array(p)).collect();
        SemanticCloud { free: pts(&self.cloud.free), occupied: pts(&self.cloud.occupied), surface: pts(&self.cloud.surface) }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("snapshot serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Self = toml::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        s.scenario.validate()?;
        if s.particles.is_empty() {
            return Err(Error::Parse { path: path.to_path_buf(), message: "snapshot has no particles".into() });
        }
        Ok(s)
    }
}

/// Values of the grid layer nearest to `slice_z`. Planar fields need no slice.
pub fn field_slice(field: &ScalarField<f64>, slice_z: Option<f64>) -> Result<Vec<f64>> {
    let [nx, ny, nz] = field.dims;
    let k = match (nz, slice_z) {
        (1, _) => 0,
        (_, None) => return Err(Error::Config("field is 3D; a z slice is required".into())),
        (_, Some(z)) => {
            let c = ((z - field.origin.z) / field.resolution).round();
            if !(c >= 0.0 && c < nz as f64) {
                return Err(Error::Config(format!("slice z = {z} is outside the field")));
            }
            c as usize
        }
    };
    Ok((0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).map(|(i, j)| field.node_value([i, j, k])).collect())
}

/// Heat map of a planar slice. Cells at or above the `cutoff` percentile of the
/// slice (and above its minimum) are drawn over a uniform background.
pub fn heatmap_svg(field: &ScalarField<f64>, slice_z: Option<f64>, cutoff: f64) -> Result<String> {
    if !(0.0..=100.0).contains(&cutoff) {
        return Err(Error::Config(format!("percentile cutoff {cutoff} is outside [0, 100]")));
    }
    let values = field_slice(field, slice_z)?;
    let [nx, ny, _] = field.dims;
    let cell = 8usize;
    let (w, h) = (nx * cell, ny * cell);
    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(svg, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#20242c"/>"##).unwrap();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = percentile(&values, cutoff).unwrap_or(hi);
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i * ny + j];
            if !(v > lo && v >= threshold) {
                continue;
            }
            let s = if hi > threshold { (v - threshold) / (hi - threshold) } else { 1.0 };
            let (r, g, b) = ramp(s);
            // y grows upward in the world, downward in the image
            let (x, y) = (i * cell, (ny - 1 - j) * cell);
            writeln!(svg, r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##).unwrap();
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn ramp(s: f64) -> (u8, u8, u8) {
    let s = s.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * s).round() as u8;
    (lerp(200.0, 255.0), lerp(60.0, 230.0), lerp(40.0, 80.0))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
