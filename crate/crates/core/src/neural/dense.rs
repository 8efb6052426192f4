use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tensor::{matvec, matvec_t_acc, outer_acc, Tensor};
use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Identity, Activation::Relu, Activation::Sigmoid];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(T::zero()),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative<T: Real>(self, z: T, a: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => a * (T::one() - a),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" | "none" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            _ => Err(Error::InvalidConfig(format!("unknown activation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    /// `out x in`
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: Activation,
}

impl<T: Real> DenseParams<T> {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        Self {
            weights: Tensor::uniform(&[output, input], bound, rng),
            bias: Tensor::zeros(&[output]),
            activation,
        }
    }

    pub fn input(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn output(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn check(&self) -> Result<()> {
        if self.weights.shape().len() == 2
            && self.bias.shape() == [self.weights.shape()[0]]
        {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "dense weights {:?} with bias {:?}",
                self.weights.shape(),
                self.bias.shape()
            )))
        }
    }

    /// Returns `(z, a)`: pre-activation and activation.
    pub fn forward(&self, x: &[T]) -> (Vec<T>, Vec<T>) {
        let mut z = vec![T::zero(); self.output()];
        matvec(&self.weights, x, &mut z);
        for (zi, b) in z.iter_mut().zip(self.bias.as_slice()) {
            *zi += *b;
        }
        let a = z.iter().map(|&v| self.activation.apply(v)).collect();
        (z, a)
    }

    /// Accumulates parameter gradients into `grads` given `da` (gradient at
    /// the activation). Returns the gradient with respect to `x`.
    pub fn backward(&self, x: &[T], z: &[T], a: &[T], da: &[T], grads: &mut Self) -> Vec<T> {
        let dz: Vec<T> = da
            .iter()
            .zip(z.iter().zip(a))
            .map(|(&g, (&zi, &ai))| g * self.activation.derivative(zi, ai))
            .collect();
        self.backward_pre(x, &dz, grads)
    }

    /// Like [`DenseParams::backward`] but starting from the gradient at the
    /// pre-activation `z`.
    pub fn backward_pre(&self, x: &[T], dz: &[T], grads: &mut Self) -> Vec<T> {
        let dz = dz.to_vec();
        outer_acc(&mut grads.weights, &dz, x);
        for (b, d) in grads.bias.as_mut_slice().iter_mut().zip(&dz) {
            *b += *d;
        }
        let mut dx = vec![T::zero(); self.input()];
        matvec_t_acc(&self.weights, &dz, &mut dx);
        dx
    }

    pub fn tensors(&self) -> [&Tensor<T>; 2] {
        [&self.weights, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 2] {
        [&mut self.weights, &mut self.bias]
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.weights.add_assign(&other.weights);
        self.bias.add_assign(&other.bias);
    }

    pub fn cast<U: Real>(&self) -> DenseParams<U> {
        DenseParams {
            weights: self.weights.cast(),
            bias: self.bias.cast(),
            activation: self.activation,
        }
    }
}
