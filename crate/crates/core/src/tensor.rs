//! Dense row-major tensors and the multilinear contractions behind both
//! combination layers (Hadamard-sum and full tensor contraction).
//!
//! Everything here is generic over any commutative ring element that is
//! `Copy`, so the same code runs on `f64`, `f32` and exact rationals.

use ndarray::Array2;
use num_traits::{One, Zero};
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Element type accepted by the tensor routines.
pub trait Ring: Copy + Zero + One + Add<Output = Self> + Mul<Output = Self> {}
impl<T> Ring for T where T: Copy + Zero + One + Add<Output = T> + Mul<Output = T> {}

/// Dense n-way array, row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Ring> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::dim("tensor shape", "at least one axis", "0 axes"));
        }
        if let Some(axis) = shape.iter().position(|&p| p == 0) {
            return Err(Error::dim(format!("tensor shape axis {axis}"), ">= 1", 0));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::dim("tensor data length", len, data.len()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![T::zero(); len])
    }

    /// Tensor with entries `f(multi_index)`.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; t.shape.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            advance(&mut idx, &t.shape);
        }
        Ok(t)
    }

    /// The order-`order` Kronecker delta of side `size`: 1 iff all indices agree.
    pub fn delta(order: usize, size: usize) -> Result<Self> {
        Self::from_fn(vec![size; order], |idx| {
            if idx.iter().all(|&i| i == idx[0]) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn get(&self, idx: &[usize]) -> Option<T> {
        if idx.len() != self.shape.len() || idx.iter().zip(&self.shape).any(|(i, p)| i >= p) {
            return None;
        }
        let flat = idx.iter().zip(&self.shape).fold(0, |acc, (i, p)| acc * p + i);
        Some(self.data[flat])
    }

    /// Contracts axis `axis` against `alpha`, removing that axis.
    ///
    /// Contracting the only axis yields a shape-`[1]` tensor.
    pub fn contract_axis(&self, axis: usize, alpha: &[T]) -> Result<Self> {
        if axis >= self.shape.len() {
            return Err(Error::dim("contraction axis", format!("< {}", self.order()), axis));
        }
        let p = self.shape[axis];
        if alpha.len() != p {
            return Err(Error::dim(format!("contraction slot {axis}"), p, alpha.len()));
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (m, &a) in alpha.iter().enumerate() {
                let src = &self.data[(o * p + m) * inner..(o * p + m + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = *d + s * a;
                }
            }
        }
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Ok(Self { shape, data: out })
    }
}

fn advance(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn check_slots<T>(shape: &[usize], alphas: &[&[T]]) -> Result<()> {
    for (i, (a, &p)) in alphas.iter().zip(shape).enumerate() {
        if a.len() != p {
            return Err(Error::dim(format!("contraction slot {i}"), p, a.len()));
        }
    }
    Ok(())
}

/// `u⟨α₁,…,αₙ⟩ = Σ u_{j₁…jₙ} α¹_{j₁}⋯αⁿ_{jₙ}`, contracting slot by slot.
pub fn contract_multilinear<T: Ring>(u: &Tensor<T>, alphas: &[&[T]]) -> Result<T> {
    if alphas.len() != u.order() {
        return Err(Error::dim("number of contraction vectors", u.order(), alphas.len()));
    }
    check_slots(&u.shape, alphas)?;
    let mut cur = u.clone();
    for a in alphas {
        cur = cur.contract_axis(0, a)?;
    }
    Ok(cur.data[0])
}

/// Contracts the first `n` axes of `w` (shape `(p₁,…,pₙ,r)`), leaving a length-`r` vector.
pub fn contract_to_vector<T: Ring>(w: &Tensor<T>, alphas: &[&[T]]) -> Result<Vec<T>> {
    if alphas.len() + 1 != w.order() {
        return Err(Error::dim(
            "number of contraction vectors",
            w.order().saturating_sub(1),
            alphas.len(),
        ));
    }
    check_slots(&w.shape, alphas)?;
    let mut cur = w.clone();
    for a in alphas {
        cur = cur.contract_axis(0, a)?;
    }
    Ok(cur.data)
}

/// Contracts every slot except `slot`; this is the gradient of
/// `u⟨α₁,…,αₙ⟩` with respect to `α_slot`.
pub fn contract_except<T: Ring>(u: &Tensor<T>, alphas: &[&[T]], slot: usize) -> Result<Vec<T>> {
    if alphas.len() != u.order() {
        return Err(Error::dim("number of contraction vectors", u.order(), alphas.len()));
    }
    if slot >= alphas.len() {
        return Err(Error::dim("free slot", format!("< {}", alphas.len()), slot));
    }
    check_slots(&u.shape, alphas)?;
    let mut cur = u.clone();
    // Highest axes first so the free axis keeps its position until the end.
    for k in (0..alphas.len()).rev().filter(|&k| k != slot) {
        let axis = if k > slot { cur.order() - 1 } else { 0 };
        cur = cur.contract_axis(axis, alphas[k])?;
    }
    Ok(cur.data)
}

/// `S(v¹ ⊙ ⋯ ⊙ vᵏ) = Σⱼ Πᵢ vⁱⱼ`.
pub fn hadamard_sum<T: Ring>(vectors: &[&[T]]) -> Result<T> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::dim("hadamard_sum inputs", "at least one vector", 0))?;
    let p = first.len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != p {
            return Err(Error::dim(format!("hadamard_sum vector {i}"), p, v.len()));
        }
    }
    let mut acc = T::zero();
    for j in 0..p {
        acc = acc + vectors.iter().fold(T::one(), |prod, v| prod * v[j]);
    }
    Ok(acc)
}

/// Row-major outer product `v¹ ⊗ ⋯ ⊗ vᵏ`, flattened.
pub fn outer_product<T: Ring>(vectors: &[&[T]]) -> Vec<T> {
    let mut out = vec![T::one()];
    for v in vectors {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for &a in &out {
            next.extend(v.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

/// CP factors: `n + 1` matrices sharing the rank as column count.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors<T> {
    factors: Vec<Array2<T>>,
}

impl<T: Ring> CpFactors<T> {
    pub fn new(factors: Vec<Array2<T>>) -> Result<Self> {
        let rank = factors
            .first()
            .map(|f| f.ncols())
            .ok_or_else(|| Error::dim("CP factors", "at least one matrix", 0))?;
        if rank == 0 {
            return Err(Error::dim("CP rank", ">= 1", 0));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::dim(format!("CP factor {i} columns"), rank, f.ncols()));
            }
        }
        Ok(Self { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn factors(&self) -> &[Array2<T>] {
        &self.factors
    }
}

/// Dense tensor `Σⱼ a¹ⱼ ⊗ ⋯ ⊗ aᵏⱼ` from CP factors.
pub fn cp_expand<T: Ring>(f: &CpFactors<T>, shape: &[usize]) -> Result<Tensor<T>> {
    if shape.len() != f.factors.len() {
        return Err(Error::dim("CP expansion order", f.factors.len(), shape.len()));
    }
    for (i, (m, &p)) in f.factors.iter().zip(shape).enumerate() {
        if m.nrows() != p {
            return Err(Error::dim(format!("CP factor {i} rows"), p, m.nrows()));
        }
    }
    let rank = f.rank();
    Tensor::from_fn(shape.to_vec(), |idx| {
        let mut acc = T::zero();
        for j in 0..rank {
            acc = acc
                + f.factors
                    .iter()
                    .zip(idx)
                    .fold(T::one(), |prod, (m, &i)| prod * m[[i, j]]);
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn basis_vector_selects_entry() {
        let u = Tensor::new(vec![3], vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(contract_multilinear(&u, &[&[3.0, 5.0, 7.0]]).unwrap(), 3.0);
    }

    #[test]
    fn identity_matrix_is_dot_product() {
        let u = Tensor::<f64>::delta(2, 2).unwrap();
        let (a, b, c, d) = (2.0, -3.0, 0.5, 4.0);
        let v = contract_multilinear(&u, &[&[a, b], &[c, d]]).unwrap();
        assert_eq!(v, a * c + b * d);
    }

    #[test]
    fn mismatch_names_the_slot() {
        let u = Tensor::<f64>::zeros(vec![2, 3]).unwrap();
        let err = contract_multilinear(&u, &[&[1.0, 2.0], &[1.0, 2.0]]).unwrap_err();
        assert!(err.to_string().contains("slot 1"), "{err}");
    }

    #[test]
    fn all_ones_sums_everything() {
        let w = Tensor::new(vec![2, 2, 1], vec![1.0; 4]).unwrap();
        assert_eq!(contract_to_vector(&w, &[&[1.0, 1.0], &[1.0, 1.0]]).unwrap(), vec![4.0]);
    }

    #[test]
    fn delta_selects_diagonal_products() {
        let w = Tensor::<f64>::delta(3, 2).unwrap();
        let out = contract_to_vector(&w, &[&[2.0, 3.0], &[5.0, 7.0]]).unwrap();
        assert_eq!(out, vec![10.0, 21.0]);
    }

    #[test]
    fn hadamard_sum_small_cases() {
        assert_eq!(hadamard_sum(&[&[1.0, 2.0][..], &[3.0, 4.0]]).unwrap(), 11.0);
        assert_eq!(hadamard_sum(&[&[1.0, 2.0][..], &[0.0, 0.0], &[5.0, 6.0]]).unwrap(), 0.0);
        assert!(hadamard_sum::<f64>(&[]).is_err());
        assert!(hadamard_sum(&[&[1.0][..], &[1.0, 2.0]]).is_err());
    }

    #[test]
    fn rank_one_unit_factors() {
        let e1 = array![[1.0], [0.0]];
        let f = CpFactors::new(vec![e1.clone(), e1.clone(), e1]).unwrap();
        let t = cp_expand(&f, &[2, 2, 2]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), Some(1.0));
        assert_eq!(t.data().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn identity_factors_give_delta() {
        let eye = Array2::<f64>::eye(3);
        let f = CpFactors::new(vec![eye.clone(), eye.clone(), eye]).unwrap();
        assert_eq!(cp_expand(&f, &[3, 3, 3]).unwrap(), Tensor::delta(3, 3).unwrap());
    }

    #[test]
    fn cp_factor_shape_checks() {
        assert!(CpFactors::new(vec![Array2::<f64>::zeros((2, 2)), Array2::zeros((2, 3))]).is_err());
        let f = CpFactors::new(vec![Array2::<f64>::zeros((2, 2)), Array2::zeros((3, 2))]).unwrap();
        assert!(cp_expand(&f, &[2, 2]).is_err());
    }

    #[test]
    fn contract_except_middle_slot() {
        // u[i][j][k] = i + 10 j + 100 k on a 2x3x2 grid
        let u = Tensor::from_fn(vec![2, 3, 2], |i| (i[0] + 10 * i[1] + 100 * i[2]) as f64).unwrap();
        let a = [1.0, 2.0];
        let c = [3.0, -1.0];
        let g = contract_except(&u, &[&a, &[0.0; 3], &c], 1).unwrap();
        for (j, gj) in g.iter().enumerate() {
            let mut want = 0.0;
            for i in 0..2 {
                for k in 0..2 {
                    want += u.get(&[i, j, k]).unwrap() * a[i] * c[k];
                }
            }
            assert_eq!(*gj, want);
        }
    }

    #[test]
    fn exact_over_rationals() {
        use num_rational::Rational64 as Q;
        let q = |n: i64, d: i64| Q::new(n, d);
        let a = [q(1, 3), q(-2, 5), q(7, 2)];
        let b = [q(3, 4), q(1, 6), q(-1, 9)];
        let c = [q(2, 7), q(5, 3), q(1, 1)];
        let delta = Tensor::<Q>::delta(3, 3).unwrap();
        let want = (0..3).fold(Q::from_integer(0), |s, i| s + a[i] * b[i] * c[i]);
        assert_eq!(contract_multilinear(&delta, &[&a, &b, &c]).unwrap(), want);
        assert_eq!(hadamard_sum(&[&a, &b, &c]).unwrap(), want);

        let f = CpFactors::new(vec![
            Array2::from_shape_vec((3, 2), vec![q(1, 2), q(1, 1), q(0, 1), q(2, 3), q(-1, 4), q(1, 5)]).unwrap(),
            Array2::from_shape_vec((3, 2), vec![q(3, 1), q(-1, 2), q(1, 7), q(1, 1), q(2, 9), q(0, 1)]).unwrap(),
        ])
        .unwrap();
        let dense = cp_expand(&f, &[3, 3]).unwrap();
        let mut want = Q::from_integer(0);
        for j in 0..2 {
            let x = (0..3).fold(Q::from_integer(0), |s, i| s + f.factors()[0][[i, j]] * a[i]);
            let y = (0..3).fold(Q::from_integer(0), |s, i| s + f.factors()[1][[i, j]] * b[i]);
            want = want + x * y;
        }
        assert_eq!(contract_multilinear(&dense, &[&a, &b]).unwrap(), want);
    }
}
