use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Real;

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Entries drawn uniformly from `[-bound, bound)`.
    pub fn uniform<R: Rng>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                if bound > 0.0 {
                    T::of(rng.gen_range(-bound..bound))
                } else {
                    T::zero()
                }
            })
            .collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Row `r` of a 2-D tensor.
    pub fn row(&self, r: usize) -> &[T] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let cols = self.shape[1];
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::zero());
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| U::of(x.as_f64())).collect(),
        }
    }
}

/// `out = W x` for a `rows x cols` matrix.
pub(crate) fn matvec<T: Real>(w: &Tensor<T>, x: &[T], out: &mut [T]) {
    let cols = w.shape()[1];
    debug_assert_eq!(x.len(), cols);
    for (r, o) in out.iter_mut().enumerate() {
        *o = crate::num::dot(&w.as_slice()[r * cols..(r + 1) * cols], x);
    }
}

/// `out += W^T y`
pub(crate) fn matvec_t_acc<T: Real>(w: &Tensor<T>, y: &[T], out: &mut [T]) {
    for (r, &yr) in y.iter().enumerate() {
        if yr != T::zero() {
            crate::num::axpy(yr, w.row(r), out);
        }
    }
}

/// `G += y x^T`
pub(crate) fn outer_acc<T: Real>(g: &mut Tensor<T>, y: &[T], x: &[T]) {
    for (r, &yr) in y.iter().enumerate() {
        if yr != T::zero() {
            crate::num::axpy(yr, x, g.row_mut(r));
        }
    }
}
