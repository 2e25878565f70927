//! Multi-channel 1-D wide convolution (cross-correlation) with symmetric zero padding.
//!
//! Padding is never materialized: positions that would read the zero margin are
//! skipped, which is exact because they contribute `w * 0`.

use super::{NnError, Tensor};

fn conv_dims(input: &Tensor, filters: &Tensor, pad: usize) -> Result<(usize, usize, usize, usize, usize), NnError> {
    if input.shape().len() != 2 || filters.shape().len() != 3 {
        return Err(NnError::Dimension(format!(
            "conv1d expects input (channels x length) and filters (out x in x width), got {:?} and {:?}",
            input.shape(),
            filters.shape()
        )));
    }
    let (c_in, len) = (input.shape()[0], input.shape()[1]);
    let (c_out, f_in, width) = (filters.shape()[0], filters.shape()[1], filters.shape()[2]);
    if f_in != c_in {
        return Err(NnError::Dimension(format!(
            "filters {:?} do not match input {:?}",
            filters.shape(),
            input.shape()
        )));
    }
    if width > len + 2 * pad {
        return Err(NnError::Dimension(format!(
            "filter width {width} exceeds padded length {} (input {:?}, filters {:?})",
            len + 2 * pad,
            input.shape(),
            filters.shape()
        )));
    }
    Ok((c_in, len, c_out, width, len + 2 * pad - width + 1))
}

/// Output length of a wide convolution.
pub fn conv_output_len(len: usize, width: usize, pad: usize) -> usize {
    len + 2 * pad + 1 - width
}

/// Output positions whose receptive field overlaps the unpadded input; all others are zero.
#[inline]
fn live_positions(pad: usize, len: usize, width: usize, out_len: usize) -> std::ops::Range<usize> {
    let lo = (pad + 1).saturating_sub(width);
    let hi = (pad + len).min(out_len);
    lo..hi.max(lo)
}

/// Gather the `c_in x width` receptive field of output position `t`, zeros for margin taps.
fn gather_column(x: &[f64], c_in: usize, len: usize, width: usize, pad: usize, t: usize, col: &mut [f64]) {
    for c in 0..c_in {
        let row = &x[c * len..(c + 1) * len];
        for k in 0..width {
            let p = t + k;
            col[c * width + k] = if p >= pad && p < pad + len { row[p - pad] } else { 0.0 };
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[o][t] = sum_{c,k} filters[o][c][k] * padded[c][t + k]`.
pub fn conv1d_wide(input: &Tensor, filters: &Tensor, pad: usize) -> Result<Tensor, NnError> {
    let (c_in, len, c_out, width, out_len) = conv_dims(input, filters, pad)?;
    let x = input.data();
    let f = filters.data();
    let fan = c_in * width;
    let mut col = vec![0.0; fan];
    let mut out = vec![0.0; c_out * out_len];
    for t in live_positions(pad, len, width, out_len) {
        gather_column(x, c_in, len, width, pad, t, &mut col);
        for o in 0..c_out {
            out[o * out_len + t] = dot(&f[o * fan..(o + 1) * fan], &col);
        }
    }
    Tensor::new(vec![c_out, out_len], out)
}

/// Adjoint of [`conv1d_wide`]: returns `(grad_input, grad_filters)`.
pub fn conv1d_backward(
    input: &Tensor,
    filters: &Tensor,
    pad: usize,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor), NnError> {
    let (c_in, len, c_out, width, out_len) = conv_dims(input, filters, pad)?;
    upstream.expect_shape(&[c_out, out_len])?;
    let x = input.data();
    let f = filters.data();
    let g = upstream.data();
    let fan = c_in * width;
    let mut col = vec![0.0; fan];
    let mut gcol = vec![0.0; fan];
    let mut gx = vec![0.0; c_in * len];
    let mut gf = vec![0.0; c_out * fan];
    for t in live_positions(pad, len, width, out_len) {
        // upstream is mostly zero after k-max pooling
        if (0..c_out).all(|o| g[o * out_len + t] == 0.0) {
            continue;
        }
        gather_column(x, c_in, len, width, pad, t, &mut col);
        gcol.fill(0.0);
        for o in 0..c_out {
            let up = g[o * out_len + t];
            if up != 0.0 {
                axpy(up, &col, &mut gf[o * fan..(o + 1) * fan]);
                axpy(up, &f[o * fan..(o + 1) * fan], &mut gcol);
            }
        }
        for c in 0..c_in {
            for k in 0..width {
                let p = t + k;
                if p >= pad && p < pad + len {
                    gx[c * len + p - pad] += gcol[c * width + k];
                }
            }
        }
    }
    Ok((
        Tensor::new(vec![c_in, len], gx)?,
        Tensor::new(vec![c_out, c_in, width], gf)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(values: &[f64]) -> Tensor {
        Tensor::new(vec![1, values.len()], values.to_vec()).unwrap()
    }

    fn kernel(values: &[f64]) -> Tensor {
        Tensor::new(vec![1, 1, values.len()], values.to_vec()).unwrap()
    }

    #[test]
    fn hand_convolution_with_padding() {
        let out = conv1d_wide(&single(&[1.0, 2.0, 3.0]), &kernel(&[1.0, 1.0]), 1).unwrap();
        assert_eq!(out.shape(), &[1, 4]);
        assert_eq!(out.data(), &[1.0, 3.0, 5.0, 3.0]);
    }

    #[test]
    fn unit_kernel_is_identity() {
        let x = single(&[0.5, -2.0, 7.0, 1.25]);
        let out = conv1d_wide(&x, &kernel(&[1.0]), 0).unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn zero_filter_gives_zero_output() {
        let out = conv1d_wide(&single(&[1.0, 2.0, 3.0]), &kernel(&[0.0, 0.0, 0.0]), 2).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_channels_name_both_shapes() {
        let x = Tensor::zeros(&[2, 5]);
        let f = Tensor::zeros(&[4, 3, 3]);
        let err = conv1d_wide(&x, &f, 1).unwrap_err().to_string();
        assert!(err.contains("[4, 3, 3]") && err.contains("[2, 5]"), "{err}");
    }

    #[test]
    fn too_wide_filter_is_rejected() {
        assert!(conv1d_wide(&single(&[1.0]), &kernel(&[1.0, 1.0, 1.0]), 0).is_err());
    }

    #[test]
    fn backward_of_unit_filter_passes_upstream_through() {
        let x = single(&[3.0, 1.0, 4.0]);
        let up = single(&[1.0, 1.0, 1.0]);
        let (gx, _) = conv1d_backward(&x, &kernel(&[1.0]), 0, &up).unwrap();
        assert_eq!(gx.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let x = single(&[3.0, 1.0, 4.0]);
        let up = Tensor::zeros(&[1, 5]);
        let (gx, gf) = conv1d_backward(&x, &kernel(&[0.3, -0.2, 0.9]), 2, &up).unwrap();
        assert!(gx.data().iter().chain(gf.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn filter_gradient_is_correlation_with_upstream() {
        // single channel: gf[k] = sum_t up[t] * padded[t + k]
        let x = single(&[1.0, 2.0, 3.0]);
        let up = single(&[0.5, -1.0, 2.0, 0.25]);
        let (_, gf) = conv1d_backward(&x, &kernel(&[0.7, -0.4]), 1, &up).unwrap();
        let padded = [0.0, 1.0, 2.0, 3.0, 0.0];
        for k in 0..2 {
            let expect: f64 = (0..4).map(|t| up.data()[t] * padded[t + k]).sum();
            assert!((gf.data()[k] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn upstream_shape_is_checked() {
        let x = single(&[1.0, 2.0, 3.0]);
        let up = single(&[1.0, 1.0]);
        assert!(conv1d_backward(&x, &kernel(&[1.0]), 0, &up).is_err());
    }
}
