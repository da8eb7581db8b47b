use crate::geometry::Vec3;
use crate::planner::{Action, Config};

/// Sliding direction around the object, fixed for a whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlideDirection {
    CounterClockwise,
    Clockwise,
}

/// What the sliding baseline looks at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlideState {
    pub q: Config,
    /// Weighted mean of the particles' object origins.
    pub center: Vec3<f64>,
    /// Estimated outward surface normal at the contact, when in contact.
    pub contact_normal: Option<Vec3<f64>>,
    pub direction: SlideDirection,
    /// Physical translation of a unit action, meters.
    pub translation_scale: f64,
}

/// Baseline that slides along the estimated surface when touching it and
/// heads for the estimated object center otherwise.
pub fn slide_policy(state: &SlideState) -> Action {
    let dir = match state.contact_normal {
        Some(n) => {
            let t = Vec3::unit_z().cross(Vec3::new(n.x, n.y, 0.0));
            match state.direction {
                SlideDirection::CounterClockwise => t,
                SlideDirection::Clockwise => -t,
            }
            .try_normalize()
            .unwrap_or(Vec3::zeros())
        }
        None => {
            let d = state.center - state.q.position;
            let d = Vec3::new(d.x, d.y, 0.0) / state.translation_scale;
            if d.norm() > 1.0 {
                d / d.norm()
            } else {
                d
            }
        }
    };
    [dir.x, dir.y, 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(normal: Option<Vec3<f64>>, center: Vec3<f64>, direction: SlideDirection) -> SlideState {
        SlideState { q: Config::new(0.2, 0.1, 0.0, 0.0), center, contact_normal: normal, direction, translation_scale: 0.08 }
    }

    #[test]
    fn heads_to_center_with_unit_clamp() {
        let u = slide_policy(&state(None, Vec3::new(0.5, 0.5, 0.0), SlideDirection::Clockwise));
        assert!(((u[0] * u[0] + u[1] * u[1]).sqrt() - 1.0).abs() < 1e-12);
        assert!((u[1] / u[0] - 0.4 / 0.3).abs() < 1e-12);
        assert_eq!(u[2], 0.0);
        // close by: scaled, not clamped
        let u = slide_policy(&state(None, Vec3::new(0.24, 0.1, 0.0), SlideDirection::Clockwise));
        assert!((u[0] - 0.5).abs() < 1e-12 && u[1].abs() < 1e-12);
    }

    #[test]
    fn slides_along_tangent() {
        let u = slide_policy(&state(Some(Vec3::unit_x()), Vec3::zeros(), SlideDirection::CounterClockwise));
        assert!(u[0].abs() < 1e-15 && (u[1] - 1.0).abs() < 1e-15);
        let u = slide_policy(&state(Some(Vec3::unit_x()), Vec3::zeros(), SlideDirection::Clockwise));
        assert!((u[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_distance_gives_zero_action() {
        let s = state(None, Vec3::new(0.2, 0.1, 0.0), SlideDirection::CounterClockwise);
        assert_eq!(slide_policy(&s), [0.0, 0.0, 0.0]);
    }
}
