//! Simple (Elman) recurrent layer with full backpropagation through time.

use super::{Activation, NnError, Tensor};

/// Weights of a simple RNN: `h_t = g(W_xh x_t + W_hh h_{t-1} + b)`, `h_0 = 0`.
pub struct RnnWeights<'a> {
    pub w_xh: &'a Tensor,
    pub w_hh: &'a Tensor,
    pub bias: &'a Tensor,
    pub activation: Activation,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct RnnState {
    /// `(H x T)` hidden states, column `t` is `h_{t+1}`.
    pub hidden: Tensor,
    /// `(H x T)` pre-activations.
    pub pre: Tensor,
}

pub struct RnnGrads {
    pub input: Tensor,
    pub w_xh: Tensor,
    pub w_hh: Tensor,
    pub bias: Tensor,
}

impl RnnWeights<'_> {
    fn dims(&self, inputs: &Tensor) -> Result<(usize, usize, usize), NnError> {
        let (d_in, steps) = match inputs.shape() {
            [d, t] => (*d, *t),
            s => return Err(NnError::Dimension(format!("rnn inputs must be (d_in x T), got {s:?}"))),
        };
        let h = self.bias.len();
        if self.w_xh.shape() != [h, d_in] || self.w_hh.shape() != [h, h] || self.bias.shape() != [h] {
            return Err(NnError::Dimension(format!(
                "rnn weights W_xh {:?}, W_hh {:?}, b {:?} incompatible with inputs {:?}",
                self.w_xh.shape(),
                self.w_hh.shape(),
                self.bias.shape(),
                inputs.shape()
            )));
        }
        Ok((d_in, steps, h))
    }
}

pub fn rnn_forward(inputs: &Tensor, w: &RnnWeights<'_>) -> Result<RnnState, NnError> {
    let (d_in, steps, h) = w.dims(inputs)?;
    let x = inputs.data();
    let wx = w.w_xh.data();
    let wh = w.w_hh.data();
    let mut hidden = vec![0.0; h * steps];
    let mut pre = vec![0.0; h * steps];
    let mut prev = vec![0.0; h];
    let mut cur = vec![0.0; h];
    for t in 0..steps {
        for i in 0..h {
            let mut z = w.bias.data()[i];
            for j in 0..d_in {
                z += wx[i * d_in + j] * x[j * steps + t];
            }
            for j in 0..h {
                z += wh[i * h + j] * prev[j];
            }
            pre[i * steps + t] = z;
            cur[i] = w.activation.apply(z);
            hidden[i * steps + t] = cur[i];
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(RnnState {
        hidden: Tensor::new(vec![h, steps], hidden)?,
        pre: Tensor::new(vec![h, steps], pre)?,
    })
}

pub fn rnn_backward(
    inputs: &Tensor,
    w: &RnnWeights<'_>,
    state: &RnnState,
    upstream: &Tensor,
) -> Result<RnnGrads, NnError> {
    let (d_in, steps, h) = w.dims(inputs)?;
    upstream.expect_shape(&[h, steps])?;
    state.hidden.expect_shape(&[h, steps])?;
    let x = inputs.data();
    let wx = w.w_xh.data();
    let wh = w.w_hh.data();
    let hs = state.hidden.data();
    let pre = state.pre.data();
    let up = upstream.data();

    let mut gx = vec![0.0; d_in * steps];
    let mut gwx = vec![0.0; h * d_in];
    let mut gwh = vec![0.0; h * h];
    let mut gb = vec![0.0; h];
    // gradient flowing into h_t from step t+1
    let mut carry = vec![0.0; h];
    let mut dz = vec![0.0; h];
    for t in (0..steps).rev() {
        for i in 0..h {
            let dh = up[i * steps + t] + carry[i];
            dz[i] = dh * w.activation.derivative(pre[i * steps + t]);
        }
        carry.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..h {
            let g = dz[i];
            if g == 0.0 {
                continue;
            }
            gb[i] += g;
            for j in 0..d_in {
                gwx[i * d_in + j] += g * x[j * steps + t];
                gx[j * steps + t] += g * wx[i * d_in + j];
            }
            if t > 0 {
                for j in 0..h {
                    gwh[i * h + j] += g * hs[j * steps + t - 1];
                    carry[j] += g * wh[i * h + j];
                }
            }
        }
    }
    Ok(RnnGrads {
        input: Tensor::new(vec![d_in, steps], gx)?,
        w_xh: Tensor::new(vec![h, d_in], gwx)?,
        w_hh: Tensor::new(vec![h, h], gwh)?,
        bias: Tensor::new(vec![h], gb)?,
    })
}
