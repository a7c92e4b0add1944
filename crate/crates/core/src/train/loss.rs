use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared error over all records.
    #[default]
    Mse,
    /// Squared residual integrated per function by the midpoint rule; each
    /// function's points must be the cell midpoints `(j+½)/m`.
    Rectangle,
    /// Squared residual integrated per function by the trapezoidal rule on
    /// uniform nodes `0 = x₀ < ⋯ < x_m = 1`.
    Trapezoid,
    /// Squared residual averaged over each function's sample points.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

/// Midpoint rule `(1/m) Σ f((x_{k−1}+x_k)/2)` on `m` uniform cells of `[0, 1]`.
pub fn rectangle_rule(f: impl Fn(f64) -> f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::config("m", "the rectangle rule needs at least one cell"));
    }
    Ok((0..m).map(|k| f((k as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64)
}

/// `(1/m) Σ (f(x_{k−1}) + f(x_k))/2` on `m` uniform cells of `[0, 1]`.
pub fn trapezoid_rule(f: impl Fn(f64) -> f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::config("m", "the trapezoidal rule needs at least 2 nodes"));
    }
    let x = |k: usize| k as f64 / m as f64;
    Ok((1..=m).map(|k| 0.5 * (f(x(k - 1)) + f(x(k)))).sum::<f64>() / m as f64)
}

/// `(1/m) Σ f(x_k)` with `x_k` uniform on `[0, 1]`.
pub fn monte_carlo_rule(f: impl Fn(f64) -> f64, m: usize, seed: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::config("m", "Monte Carlo integration needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| f(rng.gen::<f64>())).sum::<f64>() / m as f64)
}

const NODE_TOL: f64 = 1e-9;

/// Per-record weights `w` such that the loss is `Σ_r w_r (pred_r − s_r)²`.
///
/// `pairs` holds `(group, point row)` per record and `points` the point
/// table. With [`Reduction::Mean`] the per-function integrals are averaged
/// over functions (and [`LossKind::Mse`] over records); with
/// [`Reduction::Sum`] they are summed.
pub fn record_weights(points: &Array2<f64>, pairs: &[(u32, u32)], kind: LossKind, reduction: Reduction) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot weight an empty batch".into()));
    }
    if kind == LossKind::Mse {
        let w = match reduction {
            Reduction::Mean => 1.0 / pairs.len() as f64,
            Reduction::Sum => 1.0,
        };
        return Ok(vec![w; pairs.len()]);
    }
    if matches!(kind, LossKind::Rectangle | LossKind::Trapezoid) && points.ncols() != 1 {
        return Err(Error::config(
            "loss",
            format!("{kind:?} integration needs one-dimensional query points, got d = {}", points.ncols()),
        ));
    }
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (r, &(g, _)) in pairs.iter().enumerate() {
        members.entry(g).or_default().push(r);
    }
    let scale = match reduction {
        Reduction::Mean => 1.0 / members.len() as f64,
        Reduction::Sum => 1.0,
    };
    let mut w = vec![0.0; pairs.len()];
    for (g, mut rs) in members {
        let count = rs.len();
        if kind == LossKind::MonteCarlo {
            for r in rs {
                w[r] = scale / count as f64;
            }
            continue;
        }
        rs.sort_by(|&a, &b| points[[pairs[a].1 as usize, 0]].total_cmp(&points[[pairs[b].1 as usize, 0]]));
        let x = |j: usize| points[[pairs[rs[j]].1 as usize, 0]];
        if kind == LossKind::Trapezoid {
            if count < 2 {
                return Err(Error::config("loss", format!("trapezoidal rule needs >= 2 nodes, function {g} has {count}")));
            }
            let m = count - 1;
            if (0..count).any(|j| (x(j) - j as f64 / m as f64).abs() > NODE_TOL) {
                return Err(Error::config("loss", format!("function {g}: trapezoid nodes must be j/{m}")));
            }
            for (j, &r) in rs.iter().enumerate() {
                let end = j == 0 || j == m;
                w[r] = scale * if end { 0.5 } else { 1.0 } / m as f64;
            }
        } else {
            let m = count;
            if (0..count).any(|j| (x(j) - (j as f64 + 0.5) / m as f64).abs() > NODE_TOL) {
                return Err(Error::config("loss", format!("function {g}: rectangle nodes must be (j+1/2)/{m}")));
            }
            for &r in &rs {
                w[r] = scale / m as f64;
            }
        }
    }
    Ok(w)
}
