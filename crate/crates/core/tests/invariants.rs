use approx::assert_relative_eq;
use ndarray::Array2;
use proptest::prelude::*;

use mionet::encoding::{encode, EncodedFunction, FaberProjection, SensorGrid};
use mionet::model::{MIONet, MIONetConfig};
use mionet::tensor::{contract_multilinear, cp_expand, hadamard_sum, CpFactors, Tensor};
use mionet::train::l2_relative_error;

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

/// Order `n` with side lengths in `1..=4` plus a matching tuple of vectors.
fn tensor_and_vectors() -> impl Strategy<Value = (Tensor<f64>, Vec<Vec<f64>>)> {
    prop::collection::vec(1usize..=4, 1..=3).prop_flat_map(|shape| {
        let size: usize = shape.iter().product();
        let vectors: Vec<_> = shape.iter().map(|&p| vec_of(p)).collect();
        (vec_of(size), vectors).prop_map(move |(data, vectors)| (Tensor::new(shape.clone(), data).unwrap(), vectors))
    })
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

proptest! {
    #[test]
    fn contraction_is_linear_in_each_slot(
        (u, alphas) in tensor_and_vectors(),
        slot in 0usize..3,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let slot = slot % alphas.len();
        let other: Vec<f64> = (0..alphas[slot].len()).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let mut mixed = alphas.clone();
        mixed[slot] = alphas[slot].iter().zip(&other).map(|(x, y)| a * x + b * y).collect();
        let mut swapped = alphas.clone();
        swapped[slot] = other;
        let lhs = contract_multilinear(&u, &refs(&mixed)).unwrap();
        let rhs = a * contract_multilinear(&u, &refs(&alphas)).unwrap() + b * contract_multilinear(&u, &refs(&swapped)).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9, max_relative = 1e-10);
    }

    #[test]
    fn delta_tensor_gives_hadamard_sum(n in 1usize..=4, p in 1usize..=5, seed in prop::collection::vec(-2.0f64..2.0, 20)) {
        let vectors: Vec<Vec<f64>> = (0..n).map(|k| (0..p).map(|i| seed[(k * p + i) % seed.len()] + k as f64 * 0.1).collect()).collect();
        let delta = Tensor::delta(n, p).unwrap();
        let lhs = contract_multilinear(&delta, &refs(&vectors)).unwrap();
        let rhs = hadamard_sum(&refs(&vectors)).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn cp_expansion_contracts_factorwise(
        shape in prop::collection::vec(1usize..=4, 1..=3),
        rank in 1usize..=3,
        values in prop::collection::vec(-1.5f64..1.5, 64),
    ) {
        let mut it = values.iter().cycle().copied();
        let factors: Vec<Array2<f64>> = shape.iter().map(|&p| Array2::from_shape_fn((p, rank), |_| it.next().unwrap())).collect();
        let alphas: Vec<Vec<f64>> = shape.iter().map(|&p| (0..p).map(|_| it.next().unwrap()).collect()).collect();
        let cp = CpFactors::new(factors.clone()).unwrap();
        let dense = cp_expand(&cp, &shape).unwrap();
        let lhs = contract_multilinear(&dense, &refs(&alphas)).unwrap();
        let rhs: f64 = (0..rank)
            .map(|j| factors.iter().zip(&alphas).map(|(f, a)| f.column(j).iter().zip(a).map(|(x, y)| x * y).sum::<f64>()).product::<f64>())
            .sum();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn faber_projection_is_idempotent_and_linear(
        k in 1usize..=6,
        f in vec_of(65),
        g in vec_of(65),
        a in -3.0f64..3.0,
    ) {
        let grid = SensorGrid::new(65).unwrap();
        let proj = FaberProjection::new((1 << k) + 1).unwrap();
        let f = EncodedFunction::new(grid.clone(), f).unwrap();
        let g = EncodedFunction::new(grid.clone(), g).unwrap();
        let pf = proj.apply(&f).unwrap();
        prop_assert!(proj.apply(&pf).unwrap().max_abs_diff(&pf).unwrap() < 1e-12);
        let combo = EncodedFunction::new(grid, f.values().iter().zip(g.values()).map(|(x, y)| a * x + y).collect()).unwrap();
        let pg = proj.apply(&g).unwrap();
        let lhs = proj.apply(&combo).unwrap();
        for ((l, x), y) in lhs.values().iter().zip(pf.values()).zip(pg.values()) {
            assert_relative_eq!(*l, a * x + y, epsilon = 1e-12);
        }
    }

    #[test]
    fn encoding_on_its_own_grid_is_identity(q in 2usize..40, values in vec_of(40)) {
        let grid = SensorGrid::new(q).unwrap();
        let f = EncodedFunction::new(grid.clone(), values[..q].to_vec()).unwrap();
        let e = encode(&f, &grid).unwrap();
        prop_assert_eq!(e.values(), f.values());
    }

    #[test]
    fn relative_error_is_scale_invariant(
        preds in vec_of(12),
        targets in prop::collection::vec(0.1f64..2.0, 12),
        c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
    ) {
        let groups: Vec<u32> = (0..12).map(|i| i / 4).collect();
        let base = l2_relative_error(&preds, &targets, &groups).unwrap();
        let sp: Vec<f64> = preds.iter().map(|p| c * p).collect();
        let st: Vec<f64> = targets.iter().map(|t| c * t).collect();
        let scaled = l2_relative_error(&sp, &st, &groups).unwrap();
        assert_relative_eq!(base.mean, scaled.mean, max_relative = 1e-12);
    }
}

fn small_model(branches: usize, p: usize, seed: u64) -> MIONet<f64> {
    let cfg = MIONetConfig::low_rank(vec![vec![3, 6, p]; branches], vec![2, 5, p]);
    let mut m = MIONet::build(cfg, seed).unwrap();
    // Non-zero biases so the output does not vanish at the origin.
    m.bias[0] = 0.3;
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn high_rank_embedding_reproduces_low_rank(
        n in 1usize..=3,
        seed in any::<u64>(),
        inputs in vec_of(9),
        y in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let low = small_model(n, 3, seed);
        let high = low.to_high_rank().unwrap();
        let coords: Vec<&[f64]> = (0..n).map(|k| &inputs[3 * k..3 * k + 3]).collect();
        let a = low.predict(&coords, &y).unwrap();
        let b = high.predict(&coords, &y).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12, max_relative = 1e-12);
    }
}
