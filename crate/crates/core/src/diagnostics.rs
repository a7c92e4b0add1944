//! Self-checks: finite-difference gradient agreement and GRF sample statistics.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{encode, SensorGrid};
use crate::error::Result;
use crate::grf::{GrfSampler, GrfSpec};
use crate::model::{Batch, BranchConfig, FeatureMap, MIONet, MIONetConfig, TrunkConfig, Variant};
use crate::nn::{Activation, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub model: String,
    pub parameters: usize,
    /// `max |fd − analytic| / max(1, |fd|, |analytic|)` over all parameters.
    pub max_rel_error: f64,
}

/// Compares the analytic gradient of `Σ c_r pred_r` with central differences of step `h`.
pub fn gradient_check(model: &MIONet<f64>, batch: Batch<f64>, c: &[f64], h: f64) -> Result<f64> {
    let prep = model.prepare(batch)?;
    let objective = |m: &MIONet<f64>| -> Result<f64> {
        let (p, _) = m.forward_batch(&prep)?;
        Ok(p.iter().zip(c).map(|(a, b)| a * b).sum())
    };
    let (_, cache) = model.forward_batch(&prep)?;
    let analytic = model.backward_batch(&prep, &cache, c)?.to_flat();
    let theta = model.to_flat();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut t = theta.clone();
    for k in 0..theta.len() {
        t[k] = theta[k] + h;
        probe.set_flat(&t);
        let up = objective(&probe)?;
        t[k] = theta[k] - h;
        probe.set_flat(&t);
        let down = objective(&probe)?;
        t[k] = theta[k];
        let fd = (up - down) / (2.0 * h);
        let scale = fd.abs().max(analytic[k].abs()).max(1.0);
        worst = worst.max((fd - analytic[k]).abs() / scale);
    }
    Ok(worst)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(lo..hi))
}

/// Small models of every variant with all parameters shifted off zero, so
/// that no ReLU sits on its kink.
pub fn gradcheck_models(seed: u64) -> Result<Vec<(String, MIONet<f64>)>> {
    let low = MIONetConfig::low_rank(vec![vec![6, 12, 10], vec![4, 12, 10]], vec![2, 12, 10]);
    let mut high = MIONetConfig::low_rank(vec![vec![6, 12, 3], vec![4, 12, 4]], vec![2, 12, 12]);
    high.variant = Variant::HighRank;
    let mut split = low.clone();
    split.branches[1] = BranchConfig::linear(4, 10);
    split.trunks = vec![
        TrunkConfig {
            inputs: vec![0],
            feature_map: FeatureMap::PeriodicK2 { coordinates: vec![0] },
            layers: vec![4, 12, 10],
        },
        TrunkConfig::mlp(vec![1], vec![1, 12, 10]),
    ];
    let image = MIONetConfig {
        variant: Variant::FiniteImage,
        branches: vec![BranchConfig::mlp(vec![6, 12, 3]), BranchConfig::mlp(vec![4, 12, 4])],
        trunks: vec![],
        trunk_input_dim: 1,
        activation: Activation::Relu,
        image_basis_size: Some(5),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [("low_rank", low), ("high_rank", high), ("low_rank_split_periodic", split), ("finite_image", image)]
        .into_iter()
        .enumerate()
        .map(|(k, (name, cfg))| {
            let mut model = MIONet::build(cfg, seed.wrapping_add(k as u64))?;
            let shifted: Vec<f64> = model.to_flat().iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
            model.set_flat(&shifted);
            Ok((name.to_string(), model))
        })
        .collect()
}

/// A random batch (with repeated functions and points) suited to `model`.
pub fn random_batch(model: &MIONet<f64>, seed: u64) -> Result<(Batch<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = model.config();
    let g = 4;
    let inputs = cfg.branches.iter().map(|b| random_matrix(&mut rng, g, b.input_dim(), -1.0, 1.0)).collect();
    let points = if cfg.variant == Variant::FiniteImage {
        let m = cfg.image_basis_size.unwrap_or(1);
        Array2::from_shape_fn((m, 1), |(j, _)| j as f64 / (m.max(2) - 1) as f64)
    } else {
        random_matrix(&mut rng, 5, cfg.trunk_input_dim, 0.0, 1.0)
    };
    let u = points.nrows() as u32;
    let records: Vec<(u32, u32)> = (0..9).map(|_| (rng.gen_range(0..g as u32), rng.gen_range(0..u))).collect();
    let c = (0..records.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok((Batch::new(inputs, points, records)?, c))
}

/// Gradient checks of every small variant on `batches` random batches each.
pub fn gradcheck_suite(seed: u64, batches: usize) -> Result<Vec<GradCheck>> {
    gradcheck_models(seed)?
        .into_iter()
        .map(|(name, model)| {
            let mut worst = 0.0f64;
            for b in 0..batches {
                let (batch, c) = random_batch(&model, seed.wrapping_mul(31).wrapping_add(b as u64))?;
                worst = worst.max(gradient_check(&model, batch, &c, 1e-6)?);
            }
            Ok(GradCheck {
                model: name,
                parameters: model.param_count(),
                max_rel_error: worst,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfStats {
    pub length_scale: f64,
    pub samples: usize,
    /// Points of the 100-sensor grid where moments are compared.
    pub points: usize,
    pub max_abs_mean: f64,
    pub max_cov_deviation: f64,
    /// `max |K_ii − 1|` of the analytic kernel on the sensor grid.
    pub max_kernel_diag_deviation: f64,
}

/// Empirical mean and covariance of `samples` draws, encoded on 100 sensors,
/// against the analytic kernel.
pub fn grf_statistics(length_scale: f64, samples: usize, seed: u64) -> Result<GrfStats> {
    let spec = GrfSpec::new(length_scale)?;
    let sampler = GrfSampler::new(spec.clone())?;
    let sensors = SensorGrid::new(100)?;
    let q = sensors.q();
    let mut z = Array2::<f64>::zeros((samples, q));
    for k in 0..samples {
        let v = encode(&sampler.draw(seed, k as u64), &sensors)?;
        z.row_mut(k).assign(&ndarray::aview1(v.values()));
    }
    let n = samples as f64;
    let mean = z.sum_axis(ndarray::Axis(0)) / n;
    let centered = &z - &mean;
    let cov = centered.t().dot(&centered) / (n - 1.0);
    let x = sensors.points();
    let mut dev = 0.0f64;
    let mut diag = 0.0f64;
    for i in 0..q {
        diag = diag.max((spec.kernel(x[i], x[i]) - 1.0).abs());
        for j in 0..q {
            dev = dev.max((cov[[i, j]] - spec.kernel(x[i], x[j])).abs());
        }
    }
    Ok(GrfStats {
        length_scale,
        samples,
        points: q,
        max_abs_mean: mean.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        max_cov_deviation: dev,
        max_kernel_diag_deviation: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradcheck_suite_passes() {
        for r in gradcheck_suite(1, 2).unwrap() {
            assert!(r.max_rel_error < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn grf_moments_at_moderate_sample_size() {
        let s = grf_statistics(0.2, 2000, 3).unwrap();
        assert_eq!(s.max_kernel_diag_deviation, 0.0);
        assert!(s.max_cov_deviation < 0.2, "{s:?}");
        assert!(s.max_abs_mean < 0.15, "{s:?}");
    }
}
