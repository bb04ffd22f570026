//! A minimal dense 4-D tensor in `(batch, channel, height, width)` layout.
//!
//! Everything in the numeric reference runs on `f64`: the point of this code
//! is to be checkable against central finite differences at tight tolerances,
//! not to be fast, and double precision keeps difference quotients clean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::standard_normal_at;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero-sized tensor dimension in {shape:?}")));
        }
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {shape:?} (= {expected})",
                data.len()
            )));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        let len = shape.iter().product();
        Tensor4 {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor4::zeros(shape);
        for b in 0..shape[0] {
            for c in 0..shape[1] {
                for y in 0..shape[2] {
                    for x in 0..shape[3] {
                        let v = f(b, c, y, x);
                        t.set(b, c, y, x, v);
                    }
                }
            }
        }
        t
    }

    /// Deterministic standard-normal fill scaled by `std`, addressed by a
    /// counter-based stream so the same `key` always yields the same tensor.
    pub fn randn(shape: [usize; 4], key: u64, std: f64) -> Self {
        let len: usize = shape.iter().product();
        let data = (0..len)
            .map(|i| std * standard_normal_at(key, i as u64))
            .collect();
        Tensor4 { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    #[inline]
    pub fn b(&self) -> usize {
        self.shape[0]
    }

    #[inline]
    pub fn c(&self) -> usize {
        self.shape[1]
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    pub fn w(&self) -> usize {
        self.shape[3]
    }

    #[inline]
    fn idx(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(b < self.shape[0] && c < self.shape[1] && y < self.shape[2] && x < self.shape[3]);
        ((b * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.idx(b, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.idx(b, c, y, x);
        self.data[i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, b: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.idx(b, c, y, x);
        self.data[i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor4 {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn require_shape(&self, shape: [usize; 4], what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{what}: expected shape {shape:?}, got {:?}",
                self.shape
            )));
        }
        Ok(())
    }

    /// Elementwise sum of two same-shaped tensors.
    pub fn add(&self, other: &Tensor4) -> Result<Tensor4> {
        other.require_shape(self.shape, "tensor add")?;
        Ok(Tensor4 {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Tensor4) -> Result<f64> {
        other.require_shape(self.shape, "tensor compare")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Extract a single batch element as a `(1, C, H, W)` tensor.
    pub fn slice_batch(&self, b: usize) -> Tensor4 {
        let per = self.shape[1] * self.shape[2] * self.shape[3];
        Tensor4 {
            shape: [1, self.shape[1], self.shape[2], self.shape[3]],
            data: self.data[b * per..(b + 1) * per].to_vec(),
        }
    }
}
