use crate::error::{Error, Result};

/// Kernel used to interpolate control points over the horizon.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-(a-b)^2 / (2 scale^2))`
    Rbf { scale: f64 },
    /// Cubic B-spline basis evaluated at `(a-b)/scale`, support `2 scale`.
    BSpline { scale: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Rbf { scale: 2.0 }
    }
}

impl Kernel {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match *self {
            Kernel::Rbf { scale } => (-(a - b).powi(2) / (2.0 * scale * scale)).exp(),
            Kernel::BSpline { scale } => {
                let r = ((a - b) / scale).abs();
                if r < 1.0 {
                    (4.0 - 6.0 * r * r + 3.0 * r * r * r) / 6.0
                } else if r < 2.0 {
                    (2.0 - r).powi(3) / 6.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Evenly spaced control times over `[0, horizon - 1]`.
pub fn control_times(horizon: usize, control_points: usize) -> Vec<f64> {
    if control_points == 1 {
        return vec![0.0];
    }
    let span = (horizon - 1) as f64;
    (0..control_points).map(|j| j as f64 * span / (control_points - 1) as f64).collect()
}

/// Solves `a x = b` for several right-hand sides by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`, `b` is `n × m`.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize, m: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, pivot * m + k);
            }
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            for k in 0..m {
                b[row * m + k] -= f * b[col * m + k];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..m {
            let mut v = b[col * m + k];
            for j in col + 1..n {
                v -= a[col * n + j] * b[j * m + k];
            }
            b[col * m + k] = v / a[col * n + col];
        }
    }
    Some(b)
}

/// Precomputed map from control points to a full-horizon action sequence:
/// `u = K(t, t_c) K(t_c, t_c)^{-1} θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelInterpolator {
    kernel: Kernel,
    horizon: usize,
    times: Vec<f64>,
    /// `K(t_c, t_c)^{-1}`, row-major.
    gram_inverse: Vec<f64>,
}

impl KernelInterpolator {
    pub fn new(kernel: Kernel, horizon: usize, control_points: usize) -> Result<Self> {
        if horizon == 0 || control_points == 0 || control_points > horizon {
            return Err(Error::Config(format!("need 1 <= control points ({control_points}) <= horizon ({horizon})")));
        }
        let times = control_times(horizon, control_points);
        let n = times.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = kernel.eval(times[i], times[j]);
            }
        }
        let mut identity = vec![0.0; n * n];
        for i in 0..n {
            identity[i * n + i] = 1.0;
        }
        let inverse = match solve(gram.clone(), identity.clone(), n, n) {
            Some(inv) => inv,
            None => {
                for i in 0..n {
                    gram[i * n + i] += 1e-9;
                }
                solve(gram, identity, n, n).ok_or(Error::SingularGram)?
            }
        };
        Ok(Self { kernel, horizon, times, gram_inverse: inverse })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn control_points(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Interpolation weights for time `t`: the row `K(t, t_c) K(t_c, t_c)^{-1}`.
    pub fn weights_at(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        let k: Vec<f64> = self.times.iter().map(|&tc| self.kernel.eval(t, tc)).collect();
        (0..n).map(|j| (0..n).map(|i| k[i] * self.gram_inverse[i * n + j]).sum()).collect()
    }

    /// Value of the interpolated trajectory at time `t`.
    pub fn evaluate<const D: usize>(&self, theta: &[[f64; D]], t: f64) -> [f64; D] {
        let w = self.weights_at(t);
        let mut out = [0.0; D];
        for (wj, row) in w.iter().zip(theta) {
            for d in 0..D {
                out[d] += wj * row[d];
            }
        }
        out
    }

    /// Full-horizon actions at integer times `0..horizon`.
    pub fn interpolate<const D: usize>(&self, theta: &[[f64; D]]) -> Vec<[f64; D]> {
        (0..self.horizon).map(|t| self.evaluate(theta, t as f64)).collect()
    }

    /// Control points of the trajectory advanced by one time step, with zero
    /// actions past the end of the horizon.
    pub fn shifted<const D: usize>(&self, theta: &[[f64; D]]) -> Vec<[f64; D]> {
        let last = (self.horizon - 1) as f64;
        self.times.iter().map(|&tc| if tc + 1.0 > last + 1e-12 { [0.0; D] } else { self.evaluate(theta, tc + 1.0) }).collect()
    }

    /// Dense interpolation matrix, `horizon × control_points`, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        (0..self.horizon).flat_map(|t| self.weights_at(t as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_control_points_reproduce_theta() {
        let k = KernelInterpolator::new(Kernel::default(), 6, 6).unwrap();
        let theta: Vec<[f64; 1]> = (0..6).map(|i| [(i as f64 * 0.7).sin()]).collect();
        let u = k.interpolate(&theta);
        for (a, b) in u.iter().zip(&theta) {
            assert!((a[0] - b[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn hand_solved_three_two_case() {
        let k = KernelInterpolator::new(Kernel::Rbf { scale: 2.0 }, 3, 2).unwrap();
        let u = k.interpolate(&[[0.0], [1.0]]);
        let expected = (-0.125f64).exp() / (1.0 + (-0.5f64).exp());
        assert!((u[1][0] - expected).abs() < 1e-12);
        assert!((u[1][0] - 0.5493).abs() < 1e-3);
    }

    #[test]
    fn single_control_point() {
        let k = KernelInterpolator::new(Kernel::default(), 4, 1).unwrap();
        assert_eq!(k.times(), &[0.0]);
        assert!((k.interpolate(&[[2.0]])[0][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_control_points() {
        assert!(KernelInterpolator::new(Kernel::default(), 3, 4).is_err());
    }

    #[test]
    fn shift_moves_trajectory_one_step() {
        let k = KernelInterpolator::new(Kernel::default(), 15, 15).unwrap();
        let theta: Vec<[f64; 1]> = (0..15).map(|i| [i as f64]).collect();
        let s = k.shifted(&theta);
        for (i, v) in s.iter().take(14).enumerate() {
            assert!((v[0] - (i + 1) as f64).abs() < 1e-8);
        }
        assert_eq!(s[14][0], 0.0);
    }

    #[test]
    fn bspline_kernel_interpolates() {
        let k = KernelInterpolator::new(Kernel::BSpline { scale: 3.0 }, 10, 4).unwrap();
        let theta = [[1.0], [-1.0], [0.5], [0.2]];
        for (j, &t) in k.times().iter().enumerate() {
            assert!((k.evaluate(&theta, t)[0] - theta[j][0]).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn exact_at_control_times(h in 5usize..=20, hc_frac in 0.0f64..1.0, seed in prop::array::uniform16(-1.0f64..1.0)) {
            let hc = 2 + ((h - 2) as f64 * hc_frac) as usize;
            let k = KernelInterpolator::new(Kernel::default(), h, hc).unwrap();
            let theta: Vec<[f64; 2]> = (0..hc).map(|j| [seed[j % 16], seed[(j + 5) % 16]]).collect();
            for (j, &t) in k.times().iter().enumerate() {
                let u = k.evaluate(&theta, t);
                prop_assert!((u[0] - theta[j][0]).abs() <= 1e-9 && (u[1] - theta[j][1]).abs() <= 1e-9);
            }
        }
    }
}
