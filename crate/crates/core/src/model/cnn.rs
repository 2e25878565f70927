//! Two-layer convolutional branch:
//! conv → k-max → g, then pad → conv → fold → k-max → g, flattened.

use super::config::CnnGeometry;
use crate::nn::{
    conv1d_backward, conv1d_wide, fold, fold_backward, kmax_backward, kmax_pool, Activation, KmaxSelection, NnError,
    Tensor,
};

pub(crate) struct CnnCache {
    input: Tensor,
    sel1: KmaxSelection,
    pooled1: Tensor,
    act1: Tensor,
    sel2: KmaxSelection,
    pooled2: Tensor,
}

/// Intermediate shapes, exposed for inspection in tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnnTrace {
    pub conv1: Vec<usize>,
    pub pooled1: Vec<usize>,
    pub conv2: Vec<usize>,
    pub folded: Vec<usize>,
    pub pooled2: Vec<usize>,
}

pub(crate) fn forward(
    input: Tensor,
    conv1: &Tensor,
    conv2: &Tensor,
    geo: &CnnGeometry,
    act: Activation,
) -> Result<(Tensor, CnnCache, CnnTrace), NnError> {
    let c1 = conv1d_wide(&input, conv1, geo.pad1)?;
    let (pooled1, sel1) = kmax_pool(&c1, geo.k1)?;
    let act1 = act.forward(&pooled1);
    let c2 = conv1d_wide(&act1, conv2, geo.pad2)?;
    let folded = fold(&c2)?;
    let (pooled2, sel2) = kmax_pool(&folded, geo.k2)?;
    let out = act.forward(&pooled2);
    let trace = CnnTrace {
        conv1: c1.shape().to_vec(),
        pooled1: pooled1.shape().to_vec(),
        conv2: c2.shape().to_vec(),
        folded: folded.shape().to_vec(),
        pooled2: pooled2.shape().to_vec(),
    };
    let flat_len = out.len();
    let flat = out.reshape(vec![flat_len])?;
    Ok((
        flat,
        CnnCache {
            input,
            sel1,
            pooled1,
            act1,
            sel2,
            pooled2,
        },
        trace,
    ))
}

pub(crate) struct CnnGrads {
    pub input: Tensor,
    pub conv1: Tensor,
    pub conv2: Tensor,
}

pub(crate) fn backward(
    cache: &CnnCache,
    conv1: &Tensor,
    conv2: &Tensor,
    geo: &CnnGeometry,
    act: Activation,
    upstream_flat: &[f64],
) -> Result<CnnGrads, NnError> {
    let g_out = Tensor::new(cache.pooled2.shape().to_vec(), upstream_flat.to_vec())?;
    let g_pooled2 = act.backward(&cache.pooled2, &g_out);
    let g_folded = kmax_backward(&cache.sel2, &g_pooled2, geo.conv2_len)?;
    let g_c2 = fold_backward(&g_folded)?;
    let (g_act1, g_conv2) = conv1d_backward(&cache.act1, conv2, geo.pad2, &g_c2)?;
    let g_pooled1 = act.backward(&cache.pooled1, &g_act1);
    let g_c1 = kmax_backward(&cache.sel1, &g_pooled1, geo.conv1_len)?;
    let (g_input, g_conv1) = conv1d_backward(&cache.input, conv1, geo.pad1, &g_c1)?;
    Ok(CnnGrads {
        input: g_input,
        conv1: g_conv1,
        conv2: g_conv2,
    })
}
