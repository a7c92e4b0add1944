//! The multiple-input operator network and its structured variants.
//!
//! A model holds `n` branch nets (one per input function), zero or more
//! trunk nets over the query point, and a bias. The low-rank form combines
//! everything through a Hadamard product and a sum; the high-rank form
//! contracts a trunk-produced tensor against the branch outputs; the
//! finite-image form replaces the trunk by `m` learned tensors.

mod batch;
mod checkpoint;
mod config;

pub use batch::Batch;
pub use checkpoint::{read_model, write_model, MODEL_FORMAT};
pub use config::{BranchConfig, FeatureMap, MIONetConfig, TrunkConfig, Variant};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{DenseNet, ForwardCache, GradientBundle, Parameters};
use crate::scalar::Scalar;
use crate::tensor::{contract_except, contract_multilinear, hadamard_sum, outer_product, Tensor};

/// Seed of the `k`-th network of a model built from `seed` (splitmix64 mix).
pub fn net_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MIONet<T> {
    config: MIONetConfig,
    seed: u64,
    pub branches: Vec<DenseNet<T>>,
    pub trunks: Vec<DenseNet<T>>,
    /// `m × Πpᵢ` row-major, finite-image variant only.
    pub image_tensors: Option<Array2<T>>,
    /// One entry, or `m` for the finite-image variant.
    pub bias: Array1<T>,
}

/// Gradients laid out exactly like [`MIONet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads<T> {
    pub branches: Vec<GradientBundle<T>>,
    pub trunks: Vec<GradientBundle<T>>,
    pub image_tensors: Option<Array2<T>>,
    pub bias: Array1<T>,
}

/// A batch bound to a model's trunk layout.
#[derive(Debug, Clone)]
pub struct PreparedBatch<T> {
    pub batch: Batch<T>,
    /// Per trunk: features of its distinct coordinate tuples.
    trunk_features: Vec<Array2<T>>,
    /// Per trunk: point row → feature row.
    trunk_rows: Vec<Vec<u32>>,
    /// Finite-image only: point row → basis index.
    knot_index: Vec<u32>,
    cartesian: bool,
}

/// Intermediate values from [`MIONet::forward_batch`] needed by the backward pass.
#[derive(Debug, Clone)]
pub struct ModelCache<T> {
    branch: Vec<ForwardCache<T>>,
    trunk: Vec<ForwardCache<T>>,
    /// Low-rank: product of branch outputs (`G × p`).
    branch_product: Option<Array2<T>>,
    /// Low-rank: product of trunk outputs per point (`U × p`).
    point_trunk: Option<Array2<T>>,
}

fn periodic_features<T: Scalar>(x: T, out: &mut Vec<T>) {
    let tau = T::of(2.0 * std::f64::consts::PI);
    let two = T::of(2.0);
    out.extend([(tau * x).cos(), (tau * x).sin(), (two * tau * x).cos(), (two * tau * x).sin()]);
}

fn row<T>(a: &Array2<T>, i: usize) -> &[T] {
    let ncols = a.ncols();
    &a.as_slice().expect("standard layout")[i * ncols..(i + 1) * ncols]
}

fn row_mut<T>(a: &mut Array2<T>, i: usize) -> &mut [T] {
    let ncols = a.ncols();
    &mut a.as_slice_mut().expect("standard layout")[i * ncols..(i + 1) * ncols]
}

impl<T: Scalar> MIONet<T> {
    /// Glorot-initialized networks, zero bias.
    pub fn build(config: MIONetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut k = 0u64;
        let mut next_seed = || {
            k += 1;
            net_seed(seed, k - 1)
        };
        let branches = (0..config.n())
            .map(|i| DenseNet::init_glorot(config.branch_spec(i), next_seed()))
            .collect::<Result<Vec<_>>>()?;
        let trunks = (0..config.trunks.len())
            .map(|g| DenseNet::init_glorot(config.trunk_spec(g), next_seed()))
            .collect::<Result<Vec<_>>>()?;
        let (image_tensors, bias) = match config.variant {
            Variant::FiniteImage => {
                let m = config.image_basis_size.unwrap();
                let p: usize = config.branch_widths().iter().product();
                let limit = (6.0 / (p + m) as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(next_seed());
                let w = Array2::from_shape_simple_fn((m, p), || T::of(rng.gen_range(-limit..limit)));
                (Some(w), Array1::zeros(m))
            }
            _ => (None, Array1::zeros(1)),
        };
        Ok(Self {
            config,
            seed,
            branches,
            trunks,
            image_tensors,
            bias,
        })
    }

    /// Assembles a model from explicit parts, checking them against `config`.
    pub fn from_parts(
        config: MIONetConfig,
        seed: u64,
        branches: Vec<DenseNet<T>>,
        trunks: Vec<DenseNet<T>>,
        image_tensors: Option<Array2<T>>,
        bias: Array1<T>,
    ) -> Result<Self> {
        config.validate()?;
        if branches.len() != config.n() {
            return Err(Error::dim("branch count", config.n(), branches.len()));
        }
        for (i, b) in branches.iter().enumerate() {
            if b.spec() != &config.branch_spec(i) {
                return Err(Error::config(format!("branches[{i}]"), "network shape differs from config"));
            }
        }
        if trunks.len() != config.trunks.len() {
            return Err(Error::dim("trunk count", config.trunks.len(), trunks.len()));
        }
        for (g, t) in trunks.iter().enumerate() {
            if t.spec() != &config.trunk_spec(g) {
                return Err(Error::config(format!("trunks[{g}]"), "network shape differs from config"));
            }
        }
        let (want_bias, want_image) = match config.variant {
            Variant::FiniteImage => {
                let m = config.image_basis_size.unwrap();
                (m, Some((m, config.branch_widths().iter().product::<usize>())))
            }
            _ => (1, None),
        };
        if bias.len() != want_bias {
            return Err(Error::dim("bias length", want_bias, bias.len()));
        }
        if image_tensors.as_ref().map(|w| w.dim()) != want_image {
            return Err(Error::config("image_tensors", "shape differs from config"));
        }
        Ok(Self {
            config,
            seed,
            branches,
            trunks,
            image_tensors,
            bias,
        })
    }

    pub fn config(&self) -> &MIONetConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn cast<U: Scalar>(&self) -> MIONet<U> {
        MIONet {
            config: self.config.clone(),
            seed: self.seed,
            branches: self.branches.iter().map(DenseNet::cast).collect(),
            trunks: self.trunks.iter().map(DenseNet::cast).collect(),
            image_tensors: self.image_tensors.as_ref().map(|w| w.mapv(|v| U::of(v.as_f64()))),
            bias: self.bias.mapv(|v| U::of(v.as_f64())),
        }
    }

    fn check_coords(&self, coords: &[&[T]]) -> Result<()> {
        if coords.len() != self.config.n() {
            return Err(Error::dim("number of input functions", self.config.n(), coords.len()));
        }
        for (i, (c, b)) in coords.iter().zip(&self.config.branches).enumerate() {
            if c.len() != b.input_dim() {
                return Err(Error::dim(format!("input function {i} coordinates"), b.input_dim(), c.len()));
            }
        }
        Ok(())
    }

    fn check_point(&self, y: &[T]) -> Result<()> {
        if y.len() != self.config.trunk_input_dim {
            return Err(Error::dim("query point", self.config.trunk_input_dim, y.len()));
        }
        Ok(())
    }

    fn require(&self, variant: Variant) -> Result<()> {
        if self.config.variant != variant {
            return Err(Error::Usage(format!(
                "operation needs a {variant:?} model, this one is {:?}",
                self.config.variant
            )));
        }
        Ok(())
    }

    /// Input features of trunk `g` for the query point `y`.
    pub fn trunk_features(&self, g: usize, y: &[T]) -> Vec<T> {
        let t = &self.config.trunks[g];
        let mut out = Vec::with_capacity(t.feature_dim());
        for &c in &t.inputs {
            if t.feature_map.is_periodic(c) {
                periodic_features(y[c], &mut out);
            } else {
                out.push(y[c]);
            }
        }
        out
    }

    fn branch_outputs(&self, coords: &[&[T]]) -> Result<Vec<Vec<T>>> {
        self.branches.iter().zip(coords).map(|(net, c)| net.forward(c)).collect()
    }

    /// `S(g̃₁ ⊙ ⋯ ⊙ g̃ₙ ⊙ f̃(y)) + b`; with split trunks every trunk output joins the product.
    pub fn forward_lowrank(&self, coords: &[&[T]], y: &[T]) -> Result<T> {
        self.require(Variant::LowRank)?;
        self.check_coords(coords)?;
        self.check_point(y)?;
        let mut factors = self.branch_outputs(coords)?;
        for (g, net) in self.trunks.iter().enumerate() {
            factors.push(net.forward(&self.trunk_features(g, y))?);
        }
        let views: Vec<&[T]> = factors.iter().map(Vec::as_slice).collect();
        Ok(hadamard_sum(&views)? + self.bias[0])
    }

    /// `f̃(y)⟨g̃₁, …, g̃ₙ⟩ + b`.
    pub fn forward_highrank(&self, coords: &[&[T]], y: &[T]) -> Result<T> {
        self.require(Variant::HighRank)?;
        self.check_coords(coords)?;
        self.check_point(y)?;
        let outs = self.branch_outputs(coords)?;
        let trunk = self.trunks[0].forward(&self.trunk_features(0, y))?;
        let u = Tensor::new(self.config.branch_widths(), trunk)?;
        let views: Vec<&[T]> = outs.iter().map(Vec::as_slice).collect();
        Ok(contract_multilinear(&u, &views)? + self.bias[0])
    }

    /// The `m` coefficients `Wᵢ⟨g̃₁, …, g̃ₙ⟩ + bᵢ`.
    pub fn forward_finite_image(&self, coords: &[&[T]]) -> Result<Vec<T>> {
        self.require(Variant::FiniteImage)?;
        self.check_coords(coords)?;
        let outs = self.branch_outputs(coords)?;
        let views: Vec<&[T]> = outs.iter().map(Vec::as_slice).collect();
        let w = self.image_tensors.as_ref().unwrap();
        let shape = self.config.branch_widths();
        (0..w.nrows())
            .map(|i| {
                let wi = Tensor::new(shape.clone(), row(w, i).to_vec())?;
                Ok(contract_multilinear(&wi, &views)? + self.bias[i])
            })
            .collect()
    }

    /// Scalar prediction for the low- and high-rank variants.
    pub fn predict(&self, coords: &[&[T]], y: &[T]) -> Result<T> {
        match self.config.variant {
            Variant::LowRank => self.forward_lowrank(coords, y),
            Variant::HighRank => self.forward_highrank(coords, y),
            Variant::FiniteImage => Err(Error::Usage("finite-image models predict coefficient vectors".into())),
        }
    }

    /// Binds a batch to this model's layout, deduplicating trunk inputs.
    pub fn prepare(&self, batch: Batch<T>) -> Result<PreparedBatch<T>> {
        if batch.branch_inputs.len() != self.config.n() {
            return Err(Error::dim("batch branch count", self.config.n(), batch.branch_inputs.len()));
        }
        for (i, (b, cfg)) in batch.branch_inputs.iter().zip(&self.config.branches).enumerate() {
            if b.ncols() != cfg.input_dim() {
                return Err(Error::dim(format!("batch branch {i} width"), cfg.input_dim(), b.ncols()));
            }
        }
        let mut trunk_features = Vec::new();
        let mut trunk_rows = Vec::new();
        let mut knot_index = Vec::new();
        if self.config.variant == Variant::FiniteImage {
            let m = self.config.image_basis_size.unwrap();
            if batch.points.ncols() != 1 {
                return Err(Error::dim("finite-image query points", 1, batch.points.ncols()));
            }
            for (u, y) in batch.points.column(0).iter().enumerate() {
                let s = y.as_f64() * (m.max(2) - 1) as f64;
                let k = s.round();
                if (s - k).abs() > 1e-9 || k < 0.0 || k as usize >= m {
                    return Err(Error::Data(format!("point {u} ({y}) is not a node of the {m}-point output basis")));
                }
                knot_index.push(k as u32);
            }
        } else {
            if batch.points.ncols() != self.config.trunk_input_dim {
                return Err(Error::dim("batch query points", self.config.trunk_input_dim, batch.points.ncols()));
            }
            for (g, t) in self.config.trunks.iter().enumerate() {
                let mut index = std::collections::HashMap::<Vec<u64>, u32>::new();
                let mut rows = Vec::with_capacity(batch.points.nrows());
                let mut feats = Vec::new();
                for y in batch.points.rows() {
                    let key: Vec<u64> = t.inputs.iter().map(|&c| y[c].as_f64().to_bits()).collect();
                    let next = index.len() as u32;
                    let r = *index.entry(key).or_insert_with(|| {
                        feats.extend(self.trunk_features(g, y.as_slice().expect("standard layout")));
                        next
                    });
                    rows.push(r);
                }
                let width = t.feature_dim();
                trunk_features.push(Array2::from_shape_vec((index.len(), width), feats).expect("feature table shape"));
                trunk_rows.push(rows);
            }
        }
        let cartesian = batch.is_cartesian();
        Ok(PreparedBatch {
            batch,
            trunk_features,
            trunk_rows,
            knot_index,
            cartesian,
        })
    }

    /// Predictions for every record of a prepared batch.
    pub fn forward_batch(&self, prep: &PreparedBatch<T>) -> Result<(Vec<T>, ModelCache<T>)> {
        let branch = self
            .branches
            .iter()
            .zip(&prep.batch.branch_inputs)
            .map(|(net, x)| net.forward_cached(x.view()))
            .collect::<Result<Vec<_>>>()?;
        let trunk = self
            .trunks
            .iter()
            .zip(&prep.trunk_features)
            .map(|(net, x)| net.forward_cached(x.view()))
            .collect::<Result<Vec<_>>>()?;
        let records = &prep.batch.records;
        let mut cache = ModelCache {
            branch,
            trunk,
            branch_product: None,
            point_trunk: None,
        };
        let preds = match self.config.variant {
            Variant::LowRank => {
                let mut bp = cache.branch[0].output().clone();
                for c in &cache.branch[1..] {
                    bp *= c.output();
                }
                let u = prep.batch.points.nrows();
                let p = bp.ncols();
                let mut pt = Array2::<T>::ones((u, p));
                for (c, rows) in cache.trunk.iter().zip(&prep.trunk_rows) {
                    let out = c.output();
                    for (pu, &r) in rows.iter().enumerate() {
                        for (a, &b) in row_mut(&mut pt, pu).iter_mut().zip(row(out, r as usize)) {
                            *a *= b;
                        }
                    }
                }
                let b = self.bias[0];
                let preds = if prep.cartesian {
                    let full = bp.dot(&pt.t());
                    full.iter().map(|&v| v + b).collect()
                } else {
                    records
                        .iter()
                        .map(|&(k, pu)| {
                            let dot: T = row(&bp, k as usize)
                                .iter()
                                .zip(row(&pt, pu as usize))
                                .map(|(&x, &y)| x * y)
                                .sum();
                            dot + b
                        })
                        .collect()
                };
                cache.branch_product = Some(bp);
                cache.point_trunk = Some(pt);
                preds
            }
            Variant::HighRank => {
                let shape = self.config.branch_widths();
                let tout = cache.trunk[0].output();
                let rows = &prep.trunk_rows[0];
                let mut preds = Vec::with_capacity(records.len());
                for &(k, pu) in records {
                    let u = Tensor::new(shape.clone(), row(tout, rows[pu as usize] as usize).to_vec())?;
                    let views: Vec<&[T]> = cache.branch.iter().map(|c| row(c.output(), k as usize)).collect();
                    preds.push(contract_multilinear(&u, &views)? + self.bias[0]);
                }
                preds
            }
            Variant::FiniteImage => {
                let coeffs = self.image_coefficients(&cache)?;
                records
                    .iter()
                    .map(|&(k, pu)| coeffs[[k as usize, prep.knot_index[pu as usize] as usize]])
                    .collect()
            }
        };
        Ok((preds, cache))
    }

    fn image_coefficients(&self, cache: &ModelCache<T>) -> Result<Array2<T>> {
        let w = self.image_tensors.as_ref().unwrap();
        let shape = self.config.branch_widths();
        let g = cache.branch[0].output().nrows();
        let mut out = Array2::zeros((g, w.nrows()));
        for i in 0..w.nrows() {
            let wi = Tensor::new(shape.clone(), row(w, i).to_vec())?;
            for k in 0..g {
                let views: Vec<&[T]> = cache.branch.iter().map(|c| row(c.output(), k)).collect();
                out[[k, i]] = contract_multilinear(&wi, &views)? + self.bias[i];
            }
        }
        Ok(out)
    }

    /// Reverse pass through the combination layer and every network.
    /// `dpred[r]` is `∂L/∂prediction_r`.
    pub fn backward_batch(&self, prep: &PreparedBatch<T>, cache: &ModelCache<T>, dpred: &[T]) -> Result<ModelGrads<T>> {
        let records = &prep.batch.records;
        if dpred.len() != records.len() {
            return Err(Error::dim("prediction gradient length", records.len(), dpred.len()));
        }
        if records.is_empty() {
            return Err(Error::dim("batch size", ">= 1", 0));
        }
        let n = self.branches.len();
        let mut d_branch: Vec<Array2<T>> = cache.branch.iter().map(|c| Array2::zeros(c.output().dim())).collect();
        let mut d_trunk: Vec<Array2<T>> = cache.trunk.iter().map(|c| Array2::zeros(c.output().dim())).collect();
        let mut d_image = None;
        let mut d_bias = Array1::zeros(self.bias.len());
        match self.config.variant {
            Variant::LowRank => {
                d_bias[0] = dpred.iter().copied().sum();
                let bp = cache.branch_product.as_ref().unwrap();
                let pt = cache.point_trunk.as_ref().unwrap();
                let (d_bp, d_pt) = if prep.cartesian {
                    let e = ndarray::ArrayView2::from_shape((bp.nrows(), pt.nrows()), dpred).expect("cartesian shape");
                    (e.dot(pt), e.t().dot(bp))
                } else {
                    let mut d_bp = Array2::zeros(bp.dim());
                    let mut d_pt = Array2::zeros(pt.dim());
                    for (&(k, pu), &e) in records.iter().zip(dpred) {
                        let (k, pu) = (k as usize, pu as usize);
                        for (d, &t) in row_mut(&mut d_bp, k).iter_mut().zip(row(pt, pu)) {
                            *d += e * t;
                        }
                        for (d, &b) in row_mut(&mut d_pt, pu).iter_mut().zip(row(bp, k)) {
                            *d += e * b;
                        }
                    }
                    (d_bp, d_pt)
                };
                for i in 0..n {
                    let mut g = d_bp.clone();
                    for (j, c) in cache.branch.iter().enumerate() {
                        if j != i {
                            g *= c.output();
                        }
                    }
                    d_branch[i] = g;
                }
                for (g, rows) in prep.trunk_rows.iter().enumerate() {
                    for (pu, &r) in rows.iter().enumerate() {
                        let mut acc = row(&d_pt, pu).to_vec();
                        for (h, (c, hrows)) in cache.trunk.iter().zip(&prep.trunk_rows).enumerate() {
                            if h != g {
                                for (a, &v) in acc.iter_mut().zip(row(c.output(), hrows[pu] as usize)) {
                                    *a *= v;
                                }
                            }
                        }
                        for (d, a) in row_mut(&mut d_trunk[g], r as usize).iter_mut().zip(acc) {
                            *d += a;
                        }
                    }
                }
            }
            Variant::HighRank => {
                d_bias[0] = dpred.iter().copied().sum();
                let shape = self.config.branch_widths();
                let tout = cache.trunk[0].output();
                let rows = &prep.trunk_rows[0];
                for (&(k, pu), &e) in records.iter().zip(dpred) {
                    let r = rows[pu as usize] as usize;
                    let views: Vec<&[T]> = cache.branch.iter().map(|c| row(c.output(), k as usize)).collect();
                    for (d, o) in row_mut(&mut d_trunk[0], r).iter_mut().zip(outer_product(&views)) {
                        *d += e * o;
                    }
                    let u = Tensor::new(shape.clone(), row(tout, r).to_vec())?;
                    for i in 0..n {
                        let gi = contract_except(&u, &views, i)?;
                        for (d, v) in row_mut(&mut d_branch[i], k as usize).iter_mut().zip(gi) {
                            *d += e * v;
                        }
                    }
                }
            }
            Variant::FiniteImage => {
                let w = self.image_tensors.as_ref().unwrap();
                let m = w.nrows();
                let g = cache.branch[0].output().nrows();
                let mut d_coef = Array2::<T>::zeros((g, m));
                for (&(k, pu), &e) in records.iter().zip(dpred) {
                    d_coef[[k as usize, prep.knot_index[pu as usize] as usize]] += e;
                }
                d_bias = d_coef.sum_axis(Axis(0));
                let shape = self.config.branch_widths();
                let mut dw = Array2::zeros(w.dim());
                for i in 0..m {
                    let wi = Tensor::new(shape.clone(), row(w, i).to_vec())?;
                    for k in 0..g {
                        let e = d_coef[[k, i]];
                        if e == T::zero() {
                            continue;
                        }
                        let views: Vec<&[T]> = cache.branch.iter().map(|c| row(c.output(), k)).collect();
                        for (d, o) in row_mut(&mut dw, i).iter_mut().zip(outer_product(&views)) {
                            *d += e * o;
                        }
                        for j in 0..n {
                            let gj = contract_except(&wi, &views, j)?;
                            for (d, v) in row_mut(&mut d_branch[j], k).iter_mut().zip(gj) {
                                *d += e * v;
                            }
                        }
                    }
                }
                d_image = Some(dw);
            }
        }
        let branches = self
            .branches
            .iter()
            .zip(&cache.branch)
            .zip(&d_branch)
            .map(|((net, c), d)| net.backward(c, d.view(), false))
            .collect::<Result<Vec<_>>>()?;
        let trunks = self
            .trunks
            .iter()
            .zip(&cache.trunk)
            .zip(&d_trunk)
            .map(|((net, c), d)| net.backward(c, d.view(), false))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelGrads {
            branches,
            trunks,
            image_tensors: d_image,
            bias: d_bias,
        })
    }

    /// Equivalent high-rank model: the trunk's last layer is composed with
    /// the δ-embedding `ℝᵖ → ℝ^{p×⋯×p}`, so the trunk tensor is superdiagonal.
    pub fn to_high_rank(&self) -> Result<MIONet<T>> {
        self.require(Variant::LowRank)?;
        if self.trunks.len() != 1 {
            return Err(Error::Usage("only single-trunk models convert to high rank".into()));
        }
        let n = self.branches.len();
        let p = self.config.branches[0].output_dim();
        let big = p.pow(n as u32);
        let stride: usize = (0..n).map(|k| p.pow(k as u32)).sum();
        let trunk = &self.trunks[0];
        let last = trunk.depth() - 1;
        let mut layers = Vec::new();
        for k in 0..trunk.depth() {
            let (w, b) = if k == last {
                let w0 = trunk.weight(k);
                let mut w = Array2::zeros((big, w0.ncols()));
                let mut b = Array1::zeros(big);
                for j in 0..p {
                    w.row_mut(j * stride).assign(&w0.row(j));
                    b[j * stride] = trunk.bias(k).map_or(T::zero(), |b0| b0[j]);
                }
                (w, b)
            } else {
                (trunk.weight(k).clone(), trunk.bias(k).cloned().unwrap_or_else(|| Array1::zeros(trunk.weight(k).nrows())))
            };
            layers.push((w, Some(b)));
        }
        let mut config = self.config.clone();
        config.variant = Variant::HighRank;
        *config.trunks[0].layers.last_mut().unwrap() = big;
        let trunk = DenseNet::from_layers(config.trunk_spec(0), layers)?;
        MIONet::from_parts(config, self.seed, self.branches.clone(), vec![trunk], None, self.bias.clone())
    }
}

impl<T: Scalar> Parameters<T> for MIONet<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        for net in self.branches.iter().chain(&self.trunks) {
            net.visit(f);
        }
        if let Some(w) = &self.image_tensors {
            f(w.as_slice().expect("standard layout"));
        }
        f(self.bias.as_slice().expect("standard layout"));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for net in self.branches.iter_mut().chain(self.trunks.iter_mut()) {
            net.visit_mut(f);
        }
        if let Some(w) = &mut self.image_tensors {
            f(w.as_slice_mut().expect("standard layout"));
        }
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

impl<T: Scalar> Parameters<T> for ModelGrads<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        for g in self.branches.iter().chain(&self.trunks) {
            g.visit(f);
        }
        if let Some(w) = &self.image_tensors {
            f(w.as_slice().expect("standard layout"));
        }
        f(self.bias.as_slice().expect("standard layout"));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for g in self.branches.iter_mut().chain(self.trunks.iter_mut()) {
            g.visit_mut(f);
        }
        if let Some(w) = &mut self.image_tensors {
            f(w.as_slice_mut().expect("standard layout"));
        }
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}
