//! Dense tensors with hand-wired forward/backward passes for the layers the
//! reconstruction network needs, plus the ADAM optimizer.

pub mod adam;
pub mod conv;
pub mod ops;

use crate::error::{Error, Result};

/// Element type for all tensor math. Training runs in f32; gradient
/// verification instantiates the same code in f64.
pub trait Scalar:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Dense row-major tensor. Network activations use the 5-D layout
/// (batch, channels, depth, height, width).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// The five dims of an activation tensor.
    pub fn dims5(&self) -> Result<(usize, usize, usize, usize, usize)> {
        if self.shape.len() != 5 {
            return Err(Error::InvalidArgument(format!(
                "expected a 5-D tensor, got shape {:?}",
                self.shape
            )));
        }
        Ok((
            self.shape[0],
            self.shape[1],
            self.shape[2],
            self.shape[3],
            self.shape[4],
        ))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Convert element type (used to run f32 pipelines under f64 checks).
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(Scalar::to_f64(v))).collect(),
        }
    }
}

/// Fixed-order pairwise tree sum; reduction order is independent of how the
/// inputs were produced, which keeps reductions deterministic.
pub fn tree_sum<T: Scalar>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}
