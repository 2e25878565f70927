use super::{NnError, Tensor};

/// Gather table rows into a `(d x len)` matrix: column `t` is `table[ids[t]]`.
pub fn embedding_lookup(ids: &[usize], table: &Tensor) -> Result<Tensor, NnError> {
    let (vocab, d) = match table.shape() {
        [v, d] => (*v, *d),
        s => return Err(NnError::Dimension(format!("embedding table must be 2-D, got {s:?}"))),
    };
    if ids.is_empty() {
        return Err(NnError::Dimension("empty id sequence".into()));
    }
    let len = ids.len();
    let mut out = vec![0.0; d * len];
    for (t, &id) in ids.iter().enumerate() {
        if id >= vocab {
            return Err(NnError::Lookup { id, vocab });
        }
        for (j, &v) in table.row(id).iter().enumerate() {
            out[j * len + t] = v;
        }
    }
    Tensor::new(vec![d, len], out)
}

/// Sparse table gradient: one `(id, row gradient)` pair per position, in sequence order.
pub fn embedding_backward(ids: &[usize], upstream: &Tensor) -> Result<Vec<(usize, Vec<f64>)>, NnError> {
    let len = ids.len();
    let d = match upstream.shape() {
        [d, l] if *l == len => *d,
        s => {
            return Err(NnError::Dimension(format!(
                "embedding upstream {s:?} does not match {len} ids"
            )))
        }
    };
    Ok(ids
        .iter()
        .enumerate()
        .map(|(t, &id)| (id, (0..d).map(|j| upstream.data()[j * len + t]).collect()))
        .collect())
}

/// Accumulate sparse rows into a dense gradient table. Repeated ids add up.
pub fn scatter_rows(grad_table: &mut Tensor, rows: &[(usize, Vec<f64>)], scale: f64) {
    for (id, g) in rows {
        for (a, b) in grad_table.row_mut(*id).iter_mut().zip(g) {
            *a += scale * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Tensor {
        Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap()
    }

    #[test]
    fn single_id_is_column_of_row() {
        let e = embedding_lookup(&[0], &table()).unwrap();
        assert_eq!(e.shape(), &[2, 1]);
        assert_eq!(e.data(), &[1.0, 2.0]);
    }

    #[test]
    fn columns_follow_ids() {
        let e = embedding_lookup(&[2, 0, 1], &table()).unwrap();
        assert_eq!(e.row(0), &[5.0, 1.0, 3.0]);
        assert_eq!(e.row(1), &[6.0, 2.0, 4.0]);
    }

    #[test]
    fn repeated_ids_accumulate() {
        let up = Tensor::from_rows(&[vec![1.0, 10.0], vec![2.0, 20.0]]).unwrap();
        let rows = embedding_backward(&[2, 2], &up).unwrap();
        let mut g = Tensor::zeros(&[3, 2]);
        scatter_rows(&mut g, &rows, 1.0);
        assert_eq!(g.row(2), &[11.0, 22.0]);
        assert_eq!(g.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn out_of_range_id() {
        assert!(matches!(
            embedding_lookup(&[3], &table()),
            Err(NnError::Lookup { id: 3, vocab: 3 })
        ));
    }

    #[test]
    fn paper_sized_lookup_shape() {
        let t = Tensor::zeros(&[50, 100]);
        let ids: Vec<usize> = (0..30).map(|i| i % 50).collect();
        assert_eq!(embedding_lookup(&ids, &t).unwrap().shape(), &[100, 30]);
    }
}
