use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Moment buffers for one parameter set, laid out in visit order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, param_count: usize) -> Self {
        Self {
            config,
            step: 0,
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. A non-finite gradient aborts the step
    /// before anything is modified.
    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters<T> + ?Sized,
        G: Parameters<T> + ?Sized,
    {
        let g = grads.to_flat();
        if g.len() != self.m.len() {
            return Err(Error::dim("Adam gradient length", self.m.len(), g.len()));
        }
        if params.param_count() != self.m.len() {
            return Err(Error::dim("Adam parameter length", self.m.len(), params.param_count()));
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Training {
                epoch: self.step as usize + 1,
                message: format!("non-finite gradient at parameter {i}"),
            });
        }
        self.step += 1;
        let c = &self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let t = self.step as i32;
        let bc1 = T::one() - T::of(c.beta1.powi(t));
        let bc2 = T::one() - T::of(c.beta2.powi(t));
        let (lr, eps) = (T::of(c.lr), T::of(c.eps));
        let (m, v) = (&mut self.m, &mut self.v);
        let mut off = 0;
        params.visit_mut(&mut |slice| {
            for (k, theta) in slice.iter_mut().enumerate() {
                let i = off + k;
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            off += slice.len();
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat(Vec<f64>);

    impl Parameters<f64> for Flat {
        fn visit(&self, f: &mut dyn FnMut(&[f64])) {
            f(&self.0)
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
            f(&mut self.0)
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Flat(vec![1.0, -2.0, 3.0]);
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 3);
        s.step(&mut p, &Flat(vec![0.0; 3])).unwrap();
        assert_eq!(p.0, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // t = 1: m̂ = g, v̂ = g², so Δθ = -lr · g/(|g| + ε).
        let mut p = Flat(vec![0.0]);
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 1);
        s.step(&mut p, &Flat(vec![1.0])).unwrap();
        let want = -1e-3 / (1.0 + 1e-8);
        assert!((p.0[0] - want).abs() < 1e-15);
        assert!((p.0[0] + 1e-3).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_reports_epoch() {
        let mut p = Flat(vec![0.0, 0.0]);
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 2);
        s.step(&mut p, &Flat(vec![1.0, 1.0])).unwrap();
        let err = s.step(&mut p, &Flat(vec![f64::NAN, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Training { epoch: 2, .. }), "{err}");
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = Flat(vec![0.5, -0.25]);
            let mut s = AdamState::new(AdamConfig::with_lr(1e-2), 2);
            let mut traj = Vec::new();
            for k in 0..50 {
                let g = Flat(vec![p.0[0] * 2.0 - 1.0, (k as f64).sin() * p.0[1]]);
                s.step(&mut p, &g).unwrap();
                traj.extend(p.0.iter().map(|v| v.to_bits()));
            }
            traj
        };
        assert_eq!(run(), run());
    }
}
