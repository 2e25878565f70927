use super::{NnError, Tensor};

fn check(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize), NnError> {
    let (m, n) = match weights.shape() {
        [m, n] => (*m, *n),
        s => return Err(NnError::Dimension(format!("dense weights must be 2-D, got {s:?}"))),
    };
    if input.len() != n || bias.shape() != [m] {
        return Err(NnError::Dimension(format!(
            "dense weights {:?} incompatible with input {:?} / bias {:?}",
            weights.shape(),
            input.shape(),
            bias.shape()
        )));
    }
    Ok((m, n))
}

/// `weights · input + bias`. The input is read flat, so any shape with `n` values works.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let (m, _) = check(input, weights, bias)?;
    let x = input.data();
    let out = (0..m)
        .map(|i| bias.data()[i] + weights.row(i).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect();
    Tensor::new(vec![m], out)
}

pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    upstream: &Tensor,
) -> Result<DenseGrads, NnError> {
    let (m, n) = check(input, weights, bias)?;
    upstream.expect_shape(&[m])?;
    let x = input.data();
    let g = upstream.data();
    let mut gx = vec![0.0; n];
    let mut gw = vec![0.0; m * n];
    for i in 0..m {
        let w = weights.row(i);
        for j in 0..n {
            gx[j] += g[i] * w[j];
            gw[i * n + j] = g[i] * x[j];
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(input.shape().to_vec(), gx)?,
        weights: Tensor::new(vec![m, n], gw)?,
        bias: upstream.clone(),
    })
}
