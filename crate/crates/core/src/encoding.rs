//! Sensor grids, point-evaluation encodings of input functions, and the
//! piecewise-linear (Faber–Schauder) canonical projections used to measure
//! how well finitely many coordinates represent a function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DOMAIN_SLACK: f64 = 1e-12;
const NODE_SNAP: f64 = 1e-9;

/// `q` equidistant points `j/(q−1)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGrid {
    points: Vec<f64>,
}

impl SensorGrid {
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::config("q", "a sensor grid needs at least 2 points"));
        }
        let h = 1.0 / (q - 1) as f64;
        let mut points: Vec<f64> = (0..q).map(|j| j as f64 * h).collect();
        points[q - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn q(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.q() - 1) as f64
    }

    /// Cell index `i` and weight `w` so that `x = (1−w)·xᵢ + w·xᵢ₊₁`.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) || x.is_nan() {
            return Err(Error::Domain(format!("point {x} lies outside [0, 1]")));
        }
        let cells = self.q() - 1;
        let s = x.clamp(0.0, 1.0) * cells as f64;
        // Points within rounding distance of a node evaluate exactly there.
        let nearest = s.round();
        if (s - nearest).abs() < NODE_SNAP {
            let node = nearest as usize;
            return Ok(if node == cells { (cells - 1, 1.0) } else { (node, 0.0) });
        }
        let i = (s.floor() as usize).min(cells - 1);
        Ok((i, s - i as f64))
    }
}

/// Function samples on a sensor grid: the coordinate vector fed to a branch net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFunction {
    grid: SensorGrid,
    values: Vec<f64>,
}

impl EncodedFunction {
    pub fn new(grid: SensorGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.q() {
            return Err(Error::dim("encoded function values", grid.q(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite function sample at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SensorGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SensorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear evaluation; exact at grid points.
    pub fn sample_at(&self, x: f64) -> Result<f64> {
        let (i, w) = self.grid.locate(x)?;
        if w == 0.0 {
            return Ok(self.values[i]);
        }
        if w == 1.0 {
            return Ok(self.values[i + 1]);
        }
        Ok((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }

    /// Applies `f` pointwise to the samples.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid.q() != other.grid.q() {
            return Err(Error::dim("grid size", self.grid.q(), other.grid.q()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Re-samples a finely resolved function onto a (coarser) sensor grid.
pub fn encode(fine: &EncodedFunction, target: &SensorGrid) -> Result<EncodedFunction> {
    if fine.grid.q() < target.q() {
        return Err(Error::config(
            "target",
            format!("target grid ({}) is finer than the source grid ({})", target.q(), fine.grid.q()),
        ));
    }
    let values = target
        .points()
        .iter()
        .map(|&x| fine.sample_at(x))
        .collect::<Result<Vec<_>>>()?;
    EncodedFunction::new(target.clone(), values)
}

/// The projection onto piecewise-linear functions with `coarse_n`
/// equidistant knots, using nodal values as coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaberProjection {
    coarse_n: usize,
}

impl FaberProjection {
    pub fn new(coarse_n: usize) -> Result<Self> {
        if coarse_n < 2 {
            return Err(Error::config("n", "a Faber projection needs at least 2 knots"));
        }
        Ok(Self { coarse_n })
    }

    pub fn coarse_n(&self) -> usize {
        self.coarse_n
    }

    pub fn knots(&self) -> SensorGrid {
        SensorGrid::new(self.coarse_n).expect("coarse_n >= 2")
    }

    /// Coordinates of `f`: its values at the knots.
    pub fn coordinates(&self, f: &EncodedFunction) -> Result<Vec<f64>> {
        self.knots().points().iter().map(|&x| f.sample_at(x)).collect()
    }

    /// Hat function of knot `i` evaluated at `x`.
    pub fn basis(&self, i: usize, x: f64) -> f64 {
        let mut d = (x * (self.coarse_n - 1) as f64 - i as f64).abs();
        if (d - d.round()).abs() < NODE_SNAP {
            d = d.round();
        }
        (1.0 - d).max(0.0)
    }

    /// `Σᵢ cᵢ eᵢ` sampled on `grid`.
    pub fn reconstruct(&self, coeffs: &[f64], grid: &SensorGrid) -> Result<EncodedFunction> {
        if coeffs.len() != self.coarse_n {
            return Err(Error::dim("Faber coefficients", self.coarse_n, coeffs.len()));
        }
        let nodal = EncodedFunction::new(self.knots(), coeffs.to_vec())?;
        let values = grid
            .points()
            .iter()
            .map(|&x| nodal.sample_at(x))
            .collect::<Result<Vec<_>>>()?;
        EncodedFunction::new(grid.clone(), values)
    }

    pub fn apply(&self, f: &EncodedFunction) -> Result<EncodedFunction> {
        self.reconstruct(&self.coordinates(f)?, f.grid())
    }
}

/// `Pₙ f` re-sampled on `f`'s grid.
pub fn faber_project(f: &EncodedFunction, n: usize) -> Result<EncodedFunction> {
    if n < 2 || n > f.grid().q() {
        return Err(Error::config(
            "n",
            format!("coarse size {n} must lie in [2, {}]", f.grid().q()),
        ));
    }
    FaberProjection::new(n)?.apply(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionProfile {
    pub sample_count: usize,
    /// `(n, sup over samples of ‖v − Pₙv‖∞)`.
    pub rows: Vec<(usize, f64)>,
}

impl ProjectionProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,sup_error\n");
        for (n, e) in &self.rows {
            s.push_str(&format!("{n},{e:e}\n"));
        }
        s
    }
}

pub fn projection_error_profile(samples: &[EncodedFunction], ns: &[usize]) -> Result<ProjectionProfile> {
    if samples.is_empty() {
        return Err(Error::Data("projection profile needs at least one sample".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut sup = 0.0f64;
        for v in samples {
            sup = sup.max(v.max_abs_diff(&faber_project(v, n)?)?);
        }
        rows.push((n, sup));
    }
    Ok(ProjectionProfile {
        sample_count: samples.len(),
        rows,
    })
}
