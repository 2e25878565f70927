use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

/// Positions into the input sequence for each split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n`, partitioned by `ratios` (train, validation, test).
///
/// Validation and test get `floor(n * r / sum)`; the remainder goes to train.
pub fn split_dataset(n: usize, seed: u64, ratios: (u32, u32, u32)) -> Result<Split, DataError> {
    if n == 0 {
        return Err(DataError::Empty("cannot split zero records".into()));
    }
    let total = u64::from(ratios.0) + u64::from(ratios.1) + u64::from(ratios.2);
    if total == 0 {
        return Err(DataError::Config("split ratios sum to zero".into()));
    }
    let n_val = (n as u64 * u64::from(ratios.1) / total) as usize;
    let n_test = (n as u64 * u64::from(ratios.2) / total) as usize;
    let n_train = n - n_val - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train + n_val);
    let validation = order.split_off(n_train);
    Ok(Split {
        train: order,
        validation,
        test,
    })
}
