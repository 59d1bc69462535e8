//! Row-major dense tensor of 64-bit floats.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major tensor. The data length always equals the product of the
/// shape; rank 0 (empty shape) is a scalar with one element.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, validating the shape/data-length invariant and that
    /// every entry is finite.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidValue {
                what: "tensor shape entry",
                value: 0.0,
            });
        }
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(Error::ShapeMismatch {
                op: "Tensor::from_vec",
                lhs: shape,
                rhs: vec![data.len()],
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "tensor data",
            });
        }
        Ok(Self { shape, data })
    }

    /// Internal constructor for op results; skips the finiteness scan.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self::from_raw(shape.to_vec(), vec![0.0; numel])
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Self::from_raw(shape.to_vec(), vec![value; numel])
    }

    pub fn scalar(value: f64) -> Self {
        Self::from_raw(Vec::new(), vec![value])
    }

    /// Identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Matrix filled with independent standard-normal draws.
    pub fn randn(shape: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let numel = shape.iter().product();
        let data = (0..numel).map(|_| rng::standard_normal(rng)).collect();
        Self::from_raw(shape.to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// The single element of a scalar (or 1-element) tensor.
    pub fn item(&self) -> Result<f64> {
        if self.numel() != 1 {
            return Err(Error::ShapeMismatch {
                op: "Tensor::item",
                lhs: self.shape.clone(),
                rhs: vec![1],
            });
        }
        Ok(self.data[0])
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::ShapeMismatch {
                op: "Tensor::dims2",
                lhs: self.shape.clone(),
                rhs: vec![0, 0],
            }),
        }
    }

    /// Element of a rank-2 tensor.
    pub fn get2(&self, i: usize, j: usize) -> f64 {
        let (_, c) = (self.shape[0], self.shape[1]);
        self.data[i * c + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.shape[1];
        &self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rank-2 transpose.
    pub fn transposed(&self) -> Result<Self> {
        let (r, c) = self.dims2()?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self::from_raw(vec![c, r], out))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        crate::fmath::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest absolute entry-wise difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: "Tensor::max_abs_diff",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| crate::fmath::abs(a - b))
            .fold(0.0, f64::max))
    }
}
