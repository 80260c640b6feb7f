use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DistillError;
use crate::autodiff::DenseMat;
use crate::rng::{stream, Stream};

/// Learnable extra attribute columns, one row per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyMatrix {
    pub values: DenseMat,
}

impl ProxyMatrix {
    pub fn new(values: DenseMat) -> Result<Self, DistillError> {
        if !values.is_finite() {
            return Err(DistillError::Precondition("proxy values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Zero-mean Gaussian entries with standard deviation `std`.
    pub fn random(n: usize, dim: usize, std: f64, seed: u64) -> Self {
        let mut rng = stream(seed, Stream::Proxy);
        let normal = Normal::new(0.0, std).expect("std is finite and non-negative");
        let data = (0..n * dim).map(|_| normal.sample(&mut rng)).collect();
        Self { values: DenseMat::from_vec(n, dim, data).expect("n x dim") }
    }

    /// Indicator columns `[s == 0, s == 1]`.
    pub fn one_hot(sensitive: &[u8]) -> Self {
        let mut values = DenseMat::zeros(sensitive.len(), 2);
        for (i, &s) in sensitive.iter().enumerate() {
            values.set(i, usize::from(s), 1.0);
        }
        Self { values }
    }

    pub fn node_count(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }
}

/// A single proxy row shared by every node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoProxy {
    pub row: DenseMat,
}

impl PseudoProxy {
    pub fn broadcast(&self, n: usize) -> DenseMat {
        self.row.broadcast_row(n)
    }
}

/// Column means of the proxy over all nodes.
pub fn pseudo_proxy(p: &ProxyMatrix) -> PseudoProxy {
    PseudoProxy { row: p.values.column_means() }
}

/// `[X | proxy]`, attribute columns first.
pub fn concat_proxy(x: &DenseMat, proxy: &DenseMat) -> Result<DenseMat, DistillError> {
    if x.rows() != proxy.rows() {
        return Err(DistillError::Precondition(format!(
            "attributes have {} rows but the proxy has {}",
            x.rows(),
            proxy.rows()
        )));
    }
    Ok(x.hconcat(proxy)?)
}
