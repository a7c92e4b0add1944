//! Gaussian random fields with the squared-exponential kernel
//! `k(x, x') = exp(−(x−x')²/(2l²))`, sampled through a Cholesky factor.
//!
//! Normal variates come from the ziggurat sampler of `rand_distr` driven by
//! a ChaCha8 stream; sample `i` of seed `s` always uses stream `i` of key
//! `s`, so samples can be drawn in any order or in parallel.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedFunction, SensorGrid};
use crate::error::{Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-12;
pub const DEFAULT_FINE_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub length_scale: f64,
    pub grid: SensorGrid,
    pub jitter: f64,
}

impl GrfSpec {
    pub fn new(length_scale: f64) -> Result<Self> {
        Self::with_grid(length_scale, SensorGrid::new(DEFAULT_FINE_POINTS)?, DEFAULT_JITTER)
    }

    pub fn with_grid(length_scale: f64, grid: SensorGrid, jitter: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::config("length_scale", "must be a positive finite number"));
        }
        if !(jitter >= 0.0) {
            return Err(Error::config("jitter", "must be non-negative"));
        }
        Ok(Self {
            length_scale,
            grid,
            jitter,
        })
    }

    pub fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        (-d * d / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

pub fn kernel_matrix(spec: &GrfSpec) -> Array2<f64> {
    let x = spec.grid.points();
    Array2::from_shape_fn((x.len(), x.len()), |(i, j)| spec.kernel(x[i], x[j]))
}

/// Lower-triangular `L` with `K + jitter·I = LLᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: Array2<f64>,
}

impl CholeskyFactor {
    pub fn compute(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim("Cholesky input", "square matrix", format!("{:?}", a.dim())));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = {
                    let ri = l.row(i);
                    let rj = l.row(j);
                    let (ri, rj) = (ri.as_slice().unwrap(), rj.as_slice().unwrap());
                    ri[..j].iter().zip(&rj[..j]).map(|(x, y)| x * y).sum()
                };
                let s = a[[i, j]] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "Cholesky pivot {i} is {s:e}; the smallest eigenvalue is at most {s:e}"
                        )));
                    }
                    l[[i, i]] = s.sqrt();
                } else {
                    l[[i, j]] = s / l[[j, j]];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.l
    }

    /// `L z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.l
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| row.as_slice().unwrap()[..=i].iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `‖LLᵀ − a‖∞` (max-abs entry).
    pub fn residual(&self, a: &Array2<f64>) -> f64 {
        let llt = self.l.dot(&self.l.t());
        llt.iter().zip(a.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// A kernel factorized once, shared by every draw.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    spec: GrfSpec,
    factor: CholeskyFactor,
}

impl GrfSampler {
    pub fn new(spec: GrfSpec) -> Result<Self> {
        let mut k = kernel_matrix(&spec);
        for i in 0..k.nrows() {
            k[[i, i]] += spec.jitter;
        }
        let factor = CholeskyFactor::compute(&k)?;
        Ok(Self { spec, factor })
    }

    pub fn spec(&self) -> &GrfSpec {
        &self.spec
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn draw(&self, seed: u64, index: u64) -> EncodedFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let z: Vec<f64> = (0..self.spec.grid.q()).map(|_| StandardNormal.sample(&mut rng)).collect();
        EncodedFunction::new(self.spec.grid.clone(), self.factor.apply(&z))
            .expect("finite draw from a valid factor")
    }

    /// Draws indices `0..count`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<EncodedFunction>> {
        if count == 0 {
            return Err(Error::config("count", "must be at least 1"));
        }
        Ok((0..count as u64).map(|i| self.draw(seed, i)).collect())
    }
}

/// Convenience wrapper: factorize `spec` and draw `count` samples.
pub fn sample(spec: &GrfSpec, seed: u64, count: usize) -> Result<Vec<EncodedFunction>> {
    GrfSampler::new(spec.clone())?.sample(seed, count)
}

/// `g(x) = f(sin²(πx))` on `out_grid`.
pub fn periodic_compose(f: &EncodedFunction, out_grid: &SensorGrid) -> Result<EncodedFunction> {
    let values = out_grid
        .points()
        .iter()
        .map(|&x| {
            let s = (std::f64::consts::PI * x).sin();
            f.sample_at((s * s).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    EncodedFunction::new(out_grid.clone(), values)
}

pub fn total_variation(f: &EncodedFunction) -> f64 {
    f.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_diagonal_and_symmetry() {
        let spec = GrfSpec::with_grid(0.2, SensorGrid::new(50).unwrap(), 0.0).unwrap();
        let k = kernel_matrix(&spec);
        for i in 0..50 {
            assert_eq!(k[[i, i]], 1.0);
            for j in 0..50 {
                assert_eq!(k[[i, j]], k[[j, i]]);
                if i != j {
                    assert!(k[[i, j]] < 1.0);
                }
            }
        }
    }

    #[test]
    fn kernel_at_one_length_scale() {
        // grid spacing 0.1, l = 0.2: points two cells apart are l apart
        let spec = GrfSpec::with_grid(0.2, SensorGrid::new(11).unwrap(), 0.0).unwrap();
        let k = kernel_matrix(&spec);
        assert!((k[[0, 2]] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((k[[0, 2]] - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn invalid_specs() {
        assert!(GrfSpec::new(0.0).is_err());
        assert!(GrfSpec::new(-1.0).is_err());
        assert!(GrfSpec::with_grid(0.2, SensorGrid::new(5).unwrap(), -1.0).is_err());
    }

    #[test]
    fn cholesky_residual_on_fine_grid() {
        let spec = GrfSpec::new(0.2).unwrap();
        let sampler = GrfSampler::new(spec.clone()).unwrap();
        let mut k = kernel_matrix(&spec);
        for i in 0..k.nrows() {
            k[[i, i]] += spec.jitter;
        }
        let l = sampler.factor().matrix();
        assert!((0..l.nrows()).all(|i| l[[i, i]] > 0.0 && (i + 1..l.ncols()).all(|j| l[[i, j]] == 0.0)));
        assert!(sampler.factor().residual(&k) < 1e-8);
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let a = ndarray::array![[1.0, 2.0], [2.0, 1.0]];
        let err = CholeskyFactor::compute(&a).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert!(err.to_string().contains("smallest eigenvalue"));
    }

    #[test]
    fn draws_are_deterministic_per_index() {
        let sampler = GrfSampler::new(GrfSpec::with_grid(0.3, SensorGrid::new(64).unwrap(), 1e-12).unwrap()).unwrap();
        assert_eq!(sampler.draw(7, 3), sampler.draw(7, 3));
        assert_ne!(sampler.draw(7, 3), sampler.draw(7, 4));
        assert_ne!(sampler.draw(7, 3), sampler.draw(8, 3));
        assert!(sampler.sample(7, 0).is_err());
    }

    #[test]
    fn periodic_compose_cases() {
        let out = SensorGrid::new(101).unwrap();
        let c = EncodedFunction::from_fn(SensorGrid::new(30).unwrap(), |_| 2.5).unwrap();
        assert!(periodic_compose(&c, &out).unwrap().values().iter().all(|&v| (v - 2.5).abs() < 1e-15));

        let f = EncodedFunction::from_fn(SensorGrid::new(1000).unwrap(), |x| (5.0 * x).sin() + x).unwrap();
        let g = periodic_compose(&f, &out).unwrap();
        let v = g.values();
        assert_eq!(v[0], f.values()[0]);
        assert_eq!(v[100], f.values()[0]);
        for i in 0..=100 {
            assert!((v[i] - v[100 - i]).abs() < 1e-12);
        }

        let id = EncodedFunction::from_fn(SensorGrid::new(1000).unwrap(), |x| x).unwrap();
        let g = periodic_compose(&id, &out).unwrap();
        for (x, v) in out.points().iter().zip(g.values()) {
            assert!((v - (std::f64::consts::PI * x).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn shorter_length_scale_is_rougher() {
        let grid = SensorGrid::new(200).unwrap();
        let mean_tv = |l: f64| {
            let s = sample(&GrfSpec::with_grid(l, grid.clone(), 1e-12).unwrap(), 5, 100).unwrap();
            s.iter().map(total_variation).sum::<f64>() / 100.0
        };
        assert!(mean_tv(0.2) > mean_tv(0.5));
    }
}
