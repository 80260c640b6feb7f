use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::rng::{stream, Stream};

/// Disjoint train / validation / test node lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with the seeded split stream and cuts it into
/// `floor(fraction * n)`-sized pieces.
pub fn split_nodes(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Split, GraphError> {
    let (tr, va, te) = fractions;
    for f in [tr, va, te] {
        if !(f > 0.0 && f < 1.0) {
            return Err(GraphError::InvalidSplit(fractions, format!("{f} is outside (0, 1)")));
        }
    }
    if tr + va + te > 1.0 + 1e-9 {
        return Err(GraphError::InvalidSplit(fractions, "fractions sum above 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Split));
    let sizes = [tr, va, te].map(|f| (f * n as f64 + 1e-9).floor() as usize);
    let mut rest = order.into_iter();
    let train = rest.by_ref().take(sizes[0]).collect();
    let val = rest.by_ref().take(sizes[1]).collect();
    let test = rest.by_ref().take(sizes[2]).collect();
    Ok(Split { train, val, test })
}
