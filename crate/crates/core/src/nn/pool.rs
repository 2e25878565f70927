//! k-max pooling and folding over `(rows x length)` feature maps.

use super::{NnError, Tensor};

/// Column indices chosen by [`kmax_pool`], `k` per row, ascending within a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmaxSelection {
    pub rows: usize,
    pub k: usize,
    pub indices: Vec<usize>,
}

fn as_matrix(t: &Tensor) -> Result<(usize, usize), NnError> {
    match t.shape() {
        [r, l] => Ok((*r, *l)),
        s => Err(NnError::Dimension(format!("expected a (rows x length) map, got {s:?}"))),
    }
}

/// Per row, the `k` largest values kept in their original order.
///
/// Ties go to the smaller index.
pub fn kmax_pool(input: &Tensor, k: usize) -> Result<(Tensor, KmaxSelection), NnError> {
    let (rows, len) = as_matrix(input)?;
    if k == 0 || k > len {
        return Err(NnError::Pooling { k, length: len });
    }
    let mut out = Vec::with_capacity(rows * k);
    let mut indices = Vec::with_capacity(rows * k);
    let mut order: Vec<usize> = Vec::with_capacity(len);
    for r in 0..rows {
        let row = input.row(r);
        order.clear();
        order.extend(0..len);
        // total order: value descending, index ascending
        let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
        if k < len {
            order.select_nth_unstable_by(k - 1, cmp);
        }
        let chosen = &mut order[..k];
        chosen.sort_unstable();
        for &i in chosen.iter() {
            out.push(row[i]);
            indices.push(i);
        }
    }
    Ok((Tensor::new(vec![rows, k], out)?, KmaxSelection { rows, k, indices }))
}

/// Scatter the pooled gradient back to the selected positions.
pub fn kmax_backward(sel: &KmaxSelection, upstream: &Tensor, original_len: usize) -> Result<Tensor, NnError> {
    upstream.expect_shape(&[sel.rows, sel.k])?;
    let mut grad = vec![0.0; sel.rows * original_len];
    for r in 0..sel.rows {
        for j in 0..sel.k {
            let i = sel.indices[r * sel.k + j];
            if i >= original_len {
                return Err(NnError::Internal(format!(
                    "k-max index {i} out of range for length {original_len}"
                )));
            }
            grad[r * original_len + i] += upstream.data()[r * sel.k + j];
        }
    }
    Tensor::new(vec![sel.rows, original_len], grad)
}

/// Sum every adjacent pair of rows: `out[i] = in[2i] + in[2i+1]`.
pub fn fold(input: &Tensor) -> Result<Tensor, NnError> {
    let (rows, len) = as_matrix(input)?;
    if rows % 2 != 0 {
        return Err(NnError::Fold(rows));
    }
    let mut out = Vec::with_capacity(rows / 2 * len);
    for i in 0..rows / 2 {
        out.extend(input.row(2 * i).iter().zip(input.row(2 * i + 1)).map(|(a, b)| a + b));
    }
    Tensor::new(vec![rows / 2, len], out)
}

/// Each folded row's gradient is copied to both of its source rows.
pub fn fold_backward(upstream: &Tensor) -> Result<Tensor, NnError> {
    let (rows, len) = as_matrix(upstream)?;
    let mut out = Vec::with_capacity(rows * 2 * len);
    for i in 0..rows {
        out.extend_from_slice(upstream.row(i));
        out.extend_from_slice(upstream.row(i));
    }
    Tensor::new(vec![rows * 2, len], out)
}
