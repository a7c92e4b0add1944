use ndarray::Array2;

use super::*;
use crate::data::{DatasetRecord, Provenance};
use crate::model::{Batch, MIONetConfig};

fn toy_dataset(target: impl Fn(&[f64], f64) -> f64) -> Dataset {
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for g in 0..6 {
        let c = g as f64 / 5.0;
        let coords = vec![vec![c, 1.0 - c, c * c], vec![0.5 * c, 0.2]];
        for j in 0..5 {
            let t = j as f64 / 4.0;
            let s = target(&coords[0], t);
            records.push(DatasetRecord {
                branch_coords: coords.clone(),
                y: vec![t],
                s,
            });
            groups.push(g);
        }
    }
    Dataset::from_records(&records, &groups, Provenance::default()).unwrap()
}

fn toy_config() -> MIONetConfig {
    MIONetConfig::low_rank(vec![vec![3, 8, 6], vec![2, 8, 6]], vec![1, 8, 6])
}

fn mse_weights(data: &Dataset) -> Vec<f64> {
    record_weights(data.points(), data.pairs(), LossKind::Mse, Reduction::Mean).unwrap()
}

fn zero_branches(model: &mut MIONet<f64>) {
    for net in &mut model.branches {
        net.visit_mut(&mut |s| s.fill(0.0));
    }
}

#[test]
fn constant_model_has_unit_loss() {
    let data = toy_dataset(|_, _| 3.0);
    let mut model = MIONet::<f64>::build(toy_config(), 0).unwrap();
    zero_branches(&mut model);
    model.bias[0] = 2.0;
    let prep = prepare(&model, &data).unwrap();
    let (loss, _) = loss_and_gradient(&model, &prep, &data.targets_as(), &mse_weights(&data)).unwrap();
    assert!((loss - 1.0).abs() < 1e-15);
    model.bias[0] = 3.0;
    let (loss, _) = loss_and_gradient(&model, &prep, &data.targets_as(), &mse_weights(&data)).unwrap();
    assert_eq!(loss, 0.0);
}

#[test]
fn zero_model_loss_is_mean_square_target() {
    let data = toy_dataset(|c, t| c[0] * t - 0.3);
    let mut model = MIONet::<f64>::build(toy_config(), 0).unwrap();
    zero_branches(&mut model);
    let prep = prepare(&model, &data).unwrap();
    let (loss, grads) = loss_and_gradient(&model, &prep, &data.targets_as(), &mse_weights(&data)).unwrap();
    let want = data.targets().iter().map(|s| s * s).sum::<f64>() / data.len() as f64;
    assert!((loss - want).abs() < 1e-12 * want);
    // Zeroed branches annihilate each other's gradients.
    for g in &grads.branches {
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn bias_gradient_counts_records() {
    let data = toy_dataset(|_, _| 0.0);
    let model = MIONet::<f64>::build(toy_config(), 2).unwrap();
    let prep = prepare(&model, &data).unwrap();
    let (preds, cache) = model.forward_batch(&prep).unwrap();
    let ones = vec![1.0; preds.len()];
    let grads = model.backward_batch(&prep, &cache, &ones).unwrap();
    assert_eq!(grads.bias[0], data.len() as f64);
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let data = toy_dataset(|c, t| (c[0] + t).sin());
    let mut model = MIONet::<f64>::build(toy_config(), 3).unwrap();
    // Shift every parameter so no ReLU sits exactly on its kink.
    let shifted: Vec<f64> = model.to_flat().iter().enumerate().map(|(i, v)| v + 0.01 * ((i * 7) % 5) as f64 + 0.003).collect();
    model.set_flat(&shifted);
    let prep = prepare(&model, &data).unwrap();
    let targets = data.targets_as::<f64>();
    let w = mse_weights(&data);
    let (_, grads) = loss_and_gradient(&model, &prep, &targets, &w).unwrap();
    let analytic = grads.to_flat();
    let theta = model.to_flat();
    let mut probe = model.clone();
    let h = 1e-6;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] += h;
        probe.set_flat(&t);
        let up = loss_and_gradient(&probe, &prep, &targets, &w).unwrap().0;
        t[k] -= 2.0 * h;
        probe.set_flat(&t);
        let down = loss_and_gradient(&probe, &prep, &targets, &w).unwrap().0;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - analytic[k]).abs() <= 1e-5 * (1.0 + fd.abs()), "parameter {k}: {fd} vs {}", analytic[k]);
    }
}

#[test]
fn zero_epochs_is_rejected_and_one_epoch_is_one_step() {
    let data = toy_dataset(|c, t| c[1] * t);
    let mut model = MIONet::<f64>::build(toy_config(), 4).unwrap();
    let prep = prepare(&model, &data).unwrap();
    let targets = data.targets_as::<f64>();
    let w = mse_weights(&data);
    let err = train(&mut model, &prep, &targets, &w, &TrainConfig::new(1e-3, 0)).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));

    let (_, grads) = loss_and_gradient(&model, &prep, &targets, &w).unwrap();
    let mut expected = model.clone();
    let mut adam = AdamState::new(AdamConfig::with_lr(1e-3), expected.param_count());
    adam.step(&mut expected, &grads).unwrap();
    let out = train(&mut model, &prep, &targets, &w, &TrainConfig::new(1e-3, 1)).unwrap();
    assert_eq!(out.losses.len(), 1);
    assert_eq!(model, expected);
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let data = toy_dataset(|c, t| c[0] * (1.0 + t) + c[2]);
    let cfg = TrainConfig {
        eval_every: 50,
        ..TrainConfig::new(1e-2, 300)
    };
    let (a, out_a) = fit::<f64>(&toy_config(), &data, &cfg).unwrap();
    let (b, out_b) = fit::<f64>(&toy_config(), &data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(out_a, out_b);
    assert!(out_a.final_loss() < out_a.losses[0] / 10.0);
    assert_eq!(out_a.history.first().unwrap().0, 1);
    assert_eq!(out_a.history.last().unwrap().0, 300);
    assert_eq!(out_a.history.len(), 7);
}

#[test]
fn l2_error_examples() {
    let t = [1.0, -2.0, 3.0, 0.5, 0.5];
    let g = [0, 0, 1, 1, 1];
    assert_eq!(l2_relative_error(&t, &t, &g).unwrap().mean, 0.0);
    let scaled: Vec<f64> = t.iter().map(|v| 1.01 * v).collect();
    let r = l2_relative_error(&scaled, &t, &g).unwrap();
    assert!((r.mean - 0.01).abs() < 1e-14);

    let p = [1.0, -1.0, 3.0, 0.0, 0.5];
    let r = l2_relative_error(&p, &t, &g).unwrap();
    let e0 = (1.0f64 / 5.0).sqrt();
    let e1 = (0.25f64 / 9.5).sqrt();
    assert!((r.per_group[0].unwrap() - e0).abs() < 1e-15);
    assert!((r.per_group[1].unwrap() - e1).abs() < 1e-15);
    assert!((r.mean - (e0 + e1) / 2.0).abs() < 1e-15);

    let c = 7.5;
    let pc: Vec<f64> = p.iter().map(|v| c * v).collect();
    let tc: Vec<f64> = t.iter().map(|v| c * v).collect();
    let rc = l2_relative_error(&pc, &tc, &g).unwrap();
    for (a, b) in r.per_group.iter().zip(&rc.per_group) {
        assert!((a.unwrap() - b.unwrap()).abs() < 1e-12);
    }
}

#[test]
fn zero_truth_groups_are_excluded() {
    let r = l2_relative_error(&[1.0, 0.1, 2.0], &[0.0, 0.0, 2.0], &[0, 0, 1]).unwrap();
    assert_eq!(r.excluded, vec![0]);
    assert_eq!(r.per_group[0], None);
    assert_eq!(r.mean, 0.0);
}

#[test]
fn trial_statistics() {
    let data = toy_dataset(|_, _| 0.7);
    let cfg = TrainConfig::new(1e-2, 400);
    let one = run_trials::<f64>("m", &toy_config(), &cfg, &data, &data, 1, |_, _, _| Ok(())).unwrap();
    assert!(one.std.is_none());
    let three = run_trials::<f64>("m", &toy_config(), &cfg, &data, &data, 3, |_, _, _| Ok(())).unwrap();
    assert_eq!(three.seeds, vec![0, 1, 2]);
    assert!(three.std.is_some());
    assert!(three.mean < 0.02, "{}", three.mean);
    let again = run_trials::<f64>("m", &toy_config(), &cfg, &data, &data, 3, |_, _, _| Ok(())).unwrap();
    assert_eq!(serde_json::to_string(&three).unwrap(), serde_json::to_string(&again).unwrap());
    assert_eq!(three.to_csv().lines().count(), 4);
}

#[test]
fn single_branch_model_reads_concatenated_inputs() {
    let data = toy_dataset(|c, t| c[0] + t);
    let cfg = MIONetConfig::low_rank(vec![vec![5, 8, 6]], vec![1, 8, 6]);
    assert!(concatenates_inputs(&cfg, &data));
    let model = MIONet::<f64>::build(cfg, 0).unwrap();
    let prep = prepare(&model, &data).unwrap();
    assert_eq!(prep.batch.branch_inputs[0].ncols(), 5);
    evaluate(&model, &data).unwrap();
}

#[test]
fn grouped_inputs_fit_a_separable_function() {
    // Two scalar "input functions" x and y with a constant trunk input.
    let k = 20;
    let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let xs = Array2::from_shape_fn((k * k, 1), |(r, _)| grid[r / k]);
    let ys = Array2::from_shape_fn((k * k, 1), |(r, _)| grid[r % k]);
    let target = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * (1.0 + y * y);
    let targets: Vec<f64> = (0..k * k).map(|r| target(grid[r / k], grid[r % k])).collect();
    let batch = Batch::cartesian(vec![xs, ys], Array2::from_elem((1, 1), 1.0)).unwrap();
    let cfg = MIONetConfig::low_rank(vec![vec![1, 32, 32, 16], vec![1, 32, 32, 16]], vec![1, 16]);
    let mut model = MIONet::<f64>::build(cfg, 1).unwrap();
    let prep = model.prepare(batch).unwrap();
    let w = vec![1.0 / targets.len() as f64; targets.len()];
    train(&mut model, &prep, &targets, &w, &TrainConfig::new(1e-3, 3000)).unwrap();
    let (preds, _) = model.forward_batch(&prep).unwrap();
    let groups = vec![0u32; targets.len()];
    let err = l2_relative_error(&preds, &targets, &groups).unwrap().mean;
    assert!(err < 1e-2, "relative error {err}");
}
