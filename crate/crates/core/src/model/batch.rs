use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Training or evaluation records over deduplicated inputs.
///
/// Every record pairs one input-function tuple (a row of each
/// `branch_inputs[i]`) with one query point (a row of `points`). Branch and
/// trunk nets then run once per distinct function and point rather than
/// once per record.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    /// Per branch, `G × qᵢ`.
    pub branch_inputs: Vec<Array2<T>>,
    /// `U × d` distinct query points.
    pub points: Array2<T>,
    /// `(function row, point row)` per record.
    pub records: Vec<(u32, u32)>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(branch_inputs: Vec<Array2<T>>, points: Array2<T>, records: Vec<(u32, u32)>) -> Result<Self> {
        let g = branch_inputs
            .first()
            .map(|b| b.nrows())
            .ok_or_else(|| Error::dim("batch branch inputs", ">= 1 branch", 0))?;
        if let Some(i) = branch_inputs.iter().position(|b| b.nrows() != g) {
            return Err(Error::dim(format!("batch branch {i} rows"), g, branch_inputs[i].nrows()));
        }
        let u = points.nrows();
        if let Some(r) = records.iter().position(|&(k, p)| k as usize >= g || p as usize >= u) {
            return Err(Error::Data(format!("record {r} points outside the batch tables")));
        }
        Ok(Self {
            branch_inputs,
            points,
            records,
        })
    }

    /// Every function evaluated at every point, function-major.
    pub fn cartesian(branch_inputs: Vec<Array2<T>>, points: Array2<T>) -> Result<Self> {
        let g = branch_inputs.first().map_or(0, |b| b.nrows()) as u32;
        let u = points.nrows() as u32;
        let records = (0..g).flat_map(|k| (0..u).map(move |p| (k, p))).collect();
        Self::new(branch_inputs, points, records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn function_count(&self) -> usize {
        self.branch_inputs[0].nrows()
    }

    pub fn is_cartesian(&self) -> bool {
        let u = self.points.nrows();
        self.records.len() == self.function_count() * u
            && self
                .records
                .iter()
                .enumerate()
                .all(|(r, &(k, p))| k as usize == r / u && p as usize == r % u)
    }

    /// Joins all branch inputs into one, as a single-branch model sees them.
    pub fn concatenated(&self) -> Self {
        let views: Vec<_> = self.branch_inputs.iter().map(|b| b.view()).collect();
        let joined = ndarray::concatenate(ndarray::Axis(1), &views).expect("equal row counts");
        Self {
            branch_inputs: vec![joined],
            points: self.points.clone(),
            records: self.records.clone(),
        }
    }
}
