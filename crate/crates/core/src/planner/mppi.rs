use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Result;

use super::kernel::{Kernel, KernelInterpolator};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MppiParams {
    pub horizon: usize,
    pub control_points: usize,
    pub kernel: Kernel,
    pub samples: usize,
    pub rollouts: usize,
    pub lambda: f64,
    /// Per-component variance of the control-point perturbations.
    pub noise_variance: f64,
    pub warm_start_iterations: usize,
    /// Actions executed between replans when not in contact.
    pub replan_interval: usize,
}

impl Default for MppiParams {
    fn default() -> Self {
        Self {
            horizon: 15,
            control_points: 8,
            kernel: Kernel::default(),
            samples: 500,
            rollouts: 5,
            lambda: 0.01,
            noise_variance: 1.5,
            warm_start_iterations: 5,
            replan_interval: 3,
        }
    }
}

impl MppiParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        if self.horizon == 0 || self.control_points == 0 || self.control_points > self.horizon {
            return bad("planner needs 1 <= control_points <= horizon");
        }
        if self.samples == 0 || self.rollouts == 0 || self.replan_interval == 0 {
            return bad("samples, rollouts and replan_interval must be at least 1");
        }
        if !(self.lambda > 0.0) || !(self.noise_variance >= 0.0) {
            return bad("lambda must be positive and noise variance nonnegative");
        }
        Ok(())
    }
}

/// Per-iteration record of the sampled costs and the resulting plan.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<const D: usize> {
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    pub first_action: [f64; D],
}

/// Softmax weights `e^{-(c - min c)/λ}`, normalized.
pub fn softmax_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = costs.iter().map(|&c| (-(c - min) / lambda).exp()).collect();
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        let n = costs.len();
        return vec![1.0 / n as f64; n];
    }
    raw.into_iter().map(|w| w / sum).collect()
}

/// Kernel-interpolated MPPI: perturbs a small set of control points, scores
/// their interpolated action sequences, and softmax-combines them.
#[derive(Clone, Debug)]
pub struct Kmppi<const D: usize> {
    params: MppiParams,
    interp: KernelInterpolator,
    nominal: Vec<[f64; D]>,
}

impl<const D: usize> Kmppi<D> {
    /// Nominal control points start as clamped Gaussian noise.
    pub fn new<R: Rng + ?Sized>(params: MppiParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let interp = KernelInterpolator::new(params.kernel, params.horizon, params.control_points)?;
        let std = params.noise_variance.sqrt();
        let nominal = (0..params.control_points)
            .map(|_| {
                std::array::from_fn(|_| {
                    let e: f64 = StandardNormal.sample(rng);
                    (std * e).clamp(-1.0, 1.0)
                })
            })
            .collect();
        Ok(Self { params, interp, nominal })
    }

    pub fn with_nominal(params: MppiParams, nominal: Vec<[f64; D]>) -> Result<Self> {
        params.validate()?;
        let interp = KernelInterpolator::new(params.kernel, params.horizon, params.control_points)?;
        if nominal.len() != params.control_points {
            return Err(crate::Error::Config("nominal length must equal the number of control points".into()));
        }
        Ok(Self { params, interp, nominal })
    }

    pub fn params(&self) -> &MppiParams {
        &self.params
    }

    pub fn nominal(&self) -> &[[f64; D]] {
        &self.nominal
    }

    /// Full-horizon actions of the current nominal, clamped to `[-1, 1]`.
    pub fn actions(&self) -> Vec<[f64; D]> {
        self.interp.interpolate(&self.nominal).into_iter().map(|u| u.map(|v| v.clamp(-1.0, 1.0))).collect()
    }

    /// One MPPI update of the nominal control points. `cost` scores a full
    /// action sequence and may draw from the per-sample generator it is given.
    pub fn iterate<R, F>(&mut self, cost: F, rng: &mut R) -> IterationTrace<D>
    where
        R: Rng + ?Sized,
        F: Fn(&[[f64; D]], &mut ChaCha8Rng) -> f64 + Sync,
    {
        let std = self.params.noise_variance.sqrt();
        let hc = self.params.control_points;
        let mut thetas: Vec<Vec<[f64; D]>> = Vec::with_capacity(self.params.samples);
        let mut seeds = Vec::with_capacity(self.params.samples);
        for _ in 0..self.params.samples {
            let theta: Vec<[f64; D]> = (0..hc)
                .map(|j| {
                    std::array::from_fn(|k| {
                        let e: f64 = StandardNormal.sample(rng);
                        (self.nominal[j][k] + std * e).clamp(-1.0, 1.0)
                    })
                })
                .collect();
            thetas.push(theta);
            seeds.push(rng.random::<u64>());
        }
        let costs: Vec<f64> = thetas
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(theta, &seed)| {
                let actions: Vec<[f64; D]> = self.interp.interpolate(theta).into_iter().map(|u| u.map(|v| v.clamp(-1.0, 1.0))).collect();
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                cost(&actions, &mut r)
            })
            .collect();
        let weights = softmax_weights(&costs, self.params.lambda);
        let mut combined = vec![[0.0; D]; hc];
        for (theta, &w) in thetas.iter().zip(&weights) {
            for j in 0..hc {
                for k in 0..D {
                    combined[j][k] += w * theta[j][k];
                }
            }
        }
        self.nominal = combined;
        IterationTrace { costs, weights, first_action: self.first_action() }
    }

    pub fn first_action(&self) -> [f64; D] {
        self.interp.evaluate(&self.nominal, 0.0).map(|v| v.clamp(-1.0, 1.0))
    }

    /// Returns the first action and advances the nominal by one step, with a
    /// zero action appended at the end of the horizon.
    pub fn advance(&mut self) -> [f64; D] {
        let u = self.first_action();
        self.nominal = self.interp.shifted(&self.nominal);
        u
    }

    /// One planning call: update, then take the first action.
    pub fn plan<R, F>(&mut self, cost: F, rng: &mut R) -> ([f64; D], IterationTrace<D>)
    where
        R: Rng + ?Sized,
        F: Fn(&[[f64; D]], &mut ChaCha8Rng) -> f64 + Sync,
    {
        let trace = self.iterate(cost, rng);
        (self.advance(), trace)
    }

    /// Runs the configured number of updates without executing anything.
    pub fn warm_start<R, F>(&mut self, cost: F, rng: &mut R)
    where
        R: Rng + ?Sized,
        F: Fn(&[[f64; D]], &mut ChaCha8Rng) -> f64 + Sync,
    {
        for _ in 0..self.params.warm_start_iterations {
            self.iterate(&cost, rng);
        }
    }
}

/// Mean squared second difference of an action sequence, averaged over components.
pub fn roughness<const D: usize>(actions: &[[f64; D]]) -> f64 {
    if actions.len() < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    for w in actions.windows(3) {
        for ((a, b), c) in w[0].iter().zip(&w[1]).zip(&w[2]) {
            sum += (c - 2.0 * b + a).powi(2);
        }
    }
    sum / ((actions.len() - 2) * D) as f64
}
