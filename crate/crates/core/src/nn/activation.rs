use serde::{Deserialize, Serialize};

use super::Tensor;

/// Element-wise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative at pre-activation `x`. Relu uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let y = x.tanh();
                1.0 - y * y
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn forward(self, input: &Tensor) -> Tensor {
        input.map(|x| self.apply(x))
    }

    /// Gradient w.r.t. the cached pre-activation `input`.
    pub fn backward(self, input: &Tensor, upstream: &Tensor) -> Tensor {
        let mut g = upstream.clone();
        for (g, &x) in g.data_mut().iter_mut().zip(input.data()) {
            *g *= self.derivative(x);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert_eq!(Activation::Relu.apply(2.0), 2.0);
    }

    #[test]
    fn tanh_slope_at_zero_matches_central_difference() {
        let h = 1e-6;
        let fd = (Activation::Tanh.apply(h) - Activation::Tanh.apply(-h)) / (2.0 * h);
        assert_eq!(Activation::Tanh.derivative(0.0), 1.0);
        assert!((fd - 1.0).abs() < 1e-8);
    }

    #[test]
    fn relu_subgradient_at_kink_is_zero() {
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        let g = Activation::Relu.backward(&Tensor::vector(&[-1.0, 0.0, 3.0]), &Tensor::vector(&[5.0, 5.0, 5.0]));
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }
}
