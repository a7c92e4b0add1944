//! Datasets of `(branch coordinates…, y, s)` records and their on-disk form.
//!
//! In memory a dataset is factored: one row per input-function tuple, one
//! row per distinct query point, and per record a `(group, point)` pair plus
//! the target. The group id of a record is the row of its function tuple.
//!
//! A dataset directory holds `manifest.json`, `records.bin` and
//! `groups.bin` (`u32` LE group id per record). With the `records` layout
//! each record in `records.bin` is the LE `f64` sequence
//! `coords₁ … coordsₙ, y, s`. The `factored` layout stores the coordinates
//! once per group in `functions.bin` and only `y, s` per record.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedFunction;
use crate::error::{Error, Result};
use crate::model::{net_seed, Batch};
use crate::nn::checkpoint::read_f64s;
use crate::scalar::Scalar;
use crate::solvers::{Field2D, OdeSolution};

pub const DATASET_FORMAT: &str = "mionet-dataset/1";

/// Which output samples of each solution become records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplingPolicy {
    #[default]
    AllPoints,
    /// `count` distinct points per sample, drawn with a seed derived from
    /// `seed` and the sample index.
    RandomSubset { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Records,
    Factored,
}

/// Reference output of one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Ode(OdeSolution),
    Field(Field2D),
}

impl Solution {
    pub fn point_dim(&self) -> usize {
        match self {
            Solution::Ode(_) => 1,
            Solution::Field(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Solution::Ode(s) => s.u1.len(),
            Solution::Field(f) => f.values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point and value of the `idx`-th output sample; fields are x-major.
    pub fn sample(&self, idx: usize, y: &mut Vec<f64>) -> f64 {
        y.clear();
        match self {
            Solution::Ode(s) => {
                y.push(s.grid.points()[idx]);
                s.u1[idx]
            }
            Solution::Field(f) => {
                let nt = f.t.q();
                let (i, j) = (idx / nt, idx % nt);
                y.extend([f.x.points()[i], f.t.points()[j]]);
                f.values[[i, j]]
            }
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub system: String,
    pub seed: u64,
    pub length_scale: f64,
    /// Index of the first sample in the generator's stream.
    #[serde(default)]
    pub sample_offset: u64,
    #[serde(default)]
    pub policy: SamplingPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub n: usize,
    pub branch_dims: Vec<usize>,
    pub point_dim: usize,
    pub record_count: usize,
    pub group_count: usize,
    #[serde(flatten)]
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: String,
    layout: Layout,
    #[serde(flatten)]
    header: DatasetHeader,
}

/// One training atom: coordinates of every input function, a query point and the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub branch_coords: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    header: DatasetHeader,
    /// Per input function, `groups × qᵢ`.
    functions: Vec<Array2<f64>>,
    /// Distinct query points, `U × d`.
    points: Array2<f64>,
    /// `(group, point row)` per record.
    records: Vec<(u32, u32)>,
    targets: Vec<f64>,
}

struct PointTable {
    d: usize,
    index: HashMap<Vec<u64>, u32>,
    flat: Vec<f64>,
}

impl PointTable {
    fn new(d: usize) -> Self {
        Self {
            d,
            index: HashMap::new(),
            flat: Vec::new(),
        }
    }

    fn insert(&mut self, y: &[f64]) -> Result<u32> {
        if y.len() != self.d {
            return Err(Error::dim("query point", self.d, y.len()));
        }
        if let Some(c) = y.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Data(format!("query coordinate {c} lies outside [0, 1]")));
        }
        let key: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
        let next = self.index.len() as u32;
        Ok(*self.index.entry(key).or_insert_with(|| {
            self.flat.extend_from_slice(y);
            next
        }))
    }

    fn finish(self) -> Array2<f64> {
        let u = self.index.len();
        Array2::from_shape_vec((u, self.d), self.flat).expect("point table shape")
    }
}

/// Flattens aligned inputs and reference solutions into a dataset.
pub fn assemble_dataset(
    inputs: &[Vec<EncodedFunction>],
    solutions: &[Solution],
    policy: SamplingPolicy,
    mut provenance: Provenance,
) -> Result<Dataset> {
    if inputs.len() != solutions.len() {
        return Err(Error::Data(format!(
            "{} input tuples but {} solutions",
            inputs.len(),
            solutions.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::Data("a dataset needs at least one sample".into()));
    }
    let branch_dims: Vec<usize> = inputs[0].iter().map(|f| f.values().len()).collect();
    let d = solutions[0].point_dim();
    let g = inputs.len();
    let mut functions: Vec<Array2<f64>> = branch_dims.iter().map(|&q| Array2::zeros((g, q))).collect();
    let mut table = PointTable::new(d);
    let mut records = Vec::new();
    let mut targets = Vec::new();
    let mut y = Vec::with_capacity(d);
    for (k, (tuple, sol)) in inputs.iter().zip(solutions).enumerate() {
        let dims: Vec<usize> = tuple.iter().map(|f| f.values().len()).collect();
        if dims != branch_dims {
            return Err(Error::Data(format!("sample {k} has input sizes {dims:?}, expected {branch_dims:?}")));
        }
        if sol.point_dim() != d {
            return Err(Error::Data(format!("sample {k} has a different output domain")));
        }
        for (i, f) in tuple.iter().enumerate() {
            functions[i].row_mut(k).assign(&ndarray::aview1(f.values()));
        }
        let chosen: Vec<usize> = match policy {
            SamplingPolicy::AllPoints => (0..sol.len()).collect(),
            SamplingPolicy::RandomSubset { count, seed } => {
                if count == 0 || count > sol.len() {
                    return Err(Error::config("policy.count", format!("must lie in 1..={}", sol.len())));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(net_seed(seed, provenance.sample_offset + k as u64));
                let mut idx = index::sample(&mut rng, sol.len(), count).into_vec();
                idx.sort_unstable();
                idx
            }
        };
        for idx in chosen {
            let s = sol.sample(idx, &mut y);
            let p = table.insert(&y)?;
            records.push((k as u32, p));
            targets.push(s);
        }
    }
    provenance.policy = policy;
    let header = DatasetHeader {
        n: branch_dims.len(),
        branch_dims,
        point_dim: d,
        record_count: records.len(),
        group_count: g,
        provenance,
    };
    Ok(Dataset {
        header,
        functions,
        points: table.finish(),
        records,
        targets,
    })
}

impl Dataset {
    /// Builds a dataset from explicit records; `groups[r]` names the function
    /// tuple of record `r`, and records sharing a group must share coordinates.
    pub fn from_records(records: &[DatasetRecord], groups: &[u32], provenance: Provenance) -> Result<Self> {
        if records.len() != groups.len() {
            return Err(Error::Data(format!(
                "{} records but {} group ids",
                records.len(),
                groups.len()
            )));
        }
        let first = records.first().ok_or_else(|| Error::Data("no records".into()))?;
        let branch_dims: Vec<usize> = first.branch_coords.iter().map(Vec::len).collect();
        let d = first.y.len();
        let group_count = groups.iter().max().map_or(0, |&g| g as usize + 1);
        let mut rows: Vec<Option<&Vec<Vec<f64>>>> = vec![None; group_count];
        let mut table = PointTable::new(d);
        let mut pairs = Vec::with_capacity(records.len());
        for (r, (rec, &g)) in records.iter().zip(groups).enumerate() {
            let dims: Vec<usize> = rec.branch_coords.iter().map(Vec::len).collect();
            if dims != branch_dims {
                return Err(Error::Data(format!("record {r} has input sizes {dims:?}, expected {branch_dims:?}")));
            }
            match rows[g as usize] {
                None => rows[g as usize] = Some(&rec.branch_coords),
                Some(c) if c != &rec.branch_coords => {
                    return Err(Error::Data(format!("record {r} disagrees with the coordinates of group {g}")));
                }
                Some(_) => {}
            }
            pairs.push((g, table.insert(&rec.y)?));
        }
        if let Some(g) = rows.iter().position(Option::is_none) {
            return Err(Error::Data(format!("group {g} has no records")));
        }
        let functions = branch_dims
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let flat: Vec<f64> = rows.iter().flat_map(|c| c.unwrap()[i].iter().copied()).collect();
                Array2::from_shape_vec((group_count, q), flat).expect("function table shape")
            })
            .collect();
        Ok(Self {
            header: DatasetHeader {
                n: branch_dims.len(),
                branch_dims,
                point_dim: d,
                record_count: records.len(),
                group_count,
                provenance,
            },
            functions,
            points: table.finish(),
            records: pairs,
            targets: records.iter().map(|r| r.s).collect(),
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.header.group_count
    }

    pub fn functions(&self) -> &[Array2<f64>] {
        &self.functions
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    /// `(group, point row)` per record.
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.records
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Grouping index: the function tuple of each record.
    pub fn groups(&self) -> Vec<u32> {
        self.records.iter().map(|&(g, _)| g).collect()
    }

    pub fn record(&self, r: usize) -> DatasetRecord {
        let (g, p) = self.records[r];
        DatasetRecord {
            branch_coords: self.functions.iter().map(|f| f.row(g as usize).to_vec()).collect(),
            y: self.points.row(p as usize).to_vec(),
            s: self.targets[r],
        }
    }

    /// The first `count` groups and their records.
    pub fn take_groups(&self, count: usize) -> Result<Dataset> {
        if count == 0 || count > self.group_count() {
            return Err(Error::config("groups", format!("must lie in 1..={}", self.group_count())));
        }
        let functions: Vec<_> = self
            .functions
            .iter()
            .map(|f| f.slice(ndarray::s![..count, ..]).to_owned())
            .collect();
        let (records, targets): (Vec<_>, Vec<_>) = self
            .records
            .iter()
            .zip(&self.targets)
            .filter(|((g, _), _)| (*g as usize) < count)
            .map(|(&r, &s)| (r, s))
            .unzip();
        let mut header = self.header.clone();
        header.group_count = count;
        header.record_count = records.len();
        Ok(Dataset {
            header,
            functions,
            points: self.points.clone(),
            records,
            targets,
        })
    }

    /// Model-ready batch; `concatenate` joins all inputs into one branch input.
    pub fn batch<T: Scalar>(&self, concatenate: bool) -> Result<Batch<T>> {
        let cast = |a: &Array2<f64>| a.mapv(T::of);
        let batch = Batch::new(self.functions.iter().map(cast).collect(), cast(&self.points), self.records.clone())?;
        Ok(if concatenate { batch.concatenated() } else { batch })
    }

    pub fn targets_as<T: Scalar>(&self) -> Vec<T> {
        self.targets.iter().map(|&v| T::of(v)).collect()
    }

    pub fn write(&self, dir: &Path, layout: Layout) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format: DATASET_FORMAT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            layout,
            header: self.header.clone(),
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        let mut groups = BufWriter::new(File::create(dir.join("groups.bin"))?);
        for &(g, _) in &self.records {
            groups.write_all(&g.to_le_bytes())?;
        }
        groups.flush()?;
        let put = |out: &mut BufWriter<File>, vals: &[f64]| -> Result<()> {
            for v in vals {
                out.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        if layout == Layout::Factored {
            let mut out = BufWriter::new(File::create(dir.join("functions.bin"))?);
            for g in 0..self.group_count() {
                for f in &self.functions {
                    put(&mut out, f.row(g).as_slice().expect("standard layout"))?;
                }
            }
            out.flush()?;
        }
        let mut out = BufWriter::new(File::create(dir.join("records.bin"))?);
        for (&(g, p), &s) in self.records.iter().zip(&self.targets) {
            if layout == Layout::Records {
                for f in &self.functions {
                    put(&mut out, f.row(g as usize).as_slice().expect("standard layout"))?;
                }
            }
            put(&mut out, self.points.row(p as usize).as_slice().expect("standard layout"))?;
            put(&mut out, &[s])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Dataset> {
        let manifest: Manifest = serde_json::from_reader(BufReader::new(open(&dir.join("manifest.json"))?))?;
        if manifest.format != DATASET_FORMAT {
            return Err(Error::Data(format!("unsupported dataset format `{}`", manifest.format)));
        }
        let header = manifest.header;
        if header.branch_dims.len() != header.n {
            return Err(Error::Data("manifest branch_dims does not have n entries".into()));
        }
        let count = header.record_count;
        let mut bytes = Vec::new();
        open(&dir.join("groups.bin"))?.read_to_end(&mut bytes)?;
        if bytes.len() != 4 * count {
            return Err(Error::Data(format!(
                "groups.bin holds {} bytes, expected {}",
                bytes.len(),
                4 * count
            )));
        }
        let groups: Vec<u32> = bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        if let Some(r) = groups.iter().position(|&g| g as usize >= header.group_count) {
            return Err(Error::Data(format!("record {r} names a group beyond group_count")));
        }
        let q_total: usize = header.branch_dims.iter().sum();
        let d = header.point_dim;
        let g = header.group_count;
        let mut functions: Vec<Array2<f64>> = header.branch_dims.iter().map(|&q| Array2::zeros((g, q))).collect();
        let mut filled = vec![false; g];
        let fill_row = |functions: &mut Vec<Array2<f64>>, row: usize, coords: &[f64]| {
            let mut off = 0;
            for f in functions.iter_mut() {
                let q = f.ncols();
                f.row_mut(row).assign(&ndarray::aview1(&coords[off..off + q]));
                off += q;
            }
        };
        if manifest.layout == Layout::Factored {
            let mut input = BufReader::new(open(&dir.join("functions.bin"))?);
            for row in 0..g {
                fill_row(&mut functions, row, &read_f64s(&mut input, q_total)?);
            }
            filled.fill(true);
        }
        let per_record = if manifest.layout == Layout::Records { q_total } else { 0 } + d + 1;
        let mut input = BufReader::new(open(&dir.join("records.bin"))?);
        let mut table = PointTable::new(d);
        let mut records = Vec::with_capacity(count);
        let mut targets = Vec::with_capacity(count);
        for (r, &grp) in groups.iter().enumerate() {
            let vals = read_f64s(&mut input, per_record)?;
            let (coords, rest) = vals.split_at(per_record - d - 1);
            if manifest.layout == Layout::Records && !filled[grp as usize] {
                fill_row(&mut functions, grp as usize, coords);
                filled[grp as usize] = true;
            }
            let p = table.insert(&rest[..d])?;
            records.push((grp, p));
            targets.push(rest[d]);
            if !rest[d].is_finite() {
                return Err(Error::Data(format!("record {r} has a non-finite target")));
            }
        }
        if input.read(&mut [0u8])? != 0 {
            return Err(Error::Data("records.bin is longer than the manifest says".into()));
        }
        if let Some(k) = filled.iter().position(|f| !f) {
            return Err(Error::Data(format!("group {k} has no records")));
        }
        Ok(Dataset {
            header,
            functions,
            points: table.finish(),
            records,
            targets,
        })
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}
