use crate::autodiff::{DenseMat, SparseMat};

use super::GraphError;

/// Undirected attributed graph with node labels and a binary sensitive
/// attribute. The sensitive attribute is never part of `attributes` unless a
/// loader was asked to keep it.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    adjacency: SparseMat,
    attributes: DenseMat,
    attribute_names: Vec<String>,
    labels: Vec<usize>,
    sensitive: Vec<u8>,
    class_count: usize,
    names: Option<Vec<String>>,
}

impl AttributedGraph {
    pub fn new(
        adjacency: SparseMat,
        attributes: DenseMat,
        labels: Vec<usize>,
        sensitive: Vec<u8>,
        class_count: usize,
    ) -> Result<Self, GraphError> {
        let n = attributes.rows();
        if adjacency.rows() != n || adjacency.cols() != n {
            return Err(GraphError::Invalid(format!(
                "adjacency is {}x{} but there are {n} attribute rows",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        if labels.len() != n || sensitive.len() != n {
            return Err(GraphError::Invalid("labels and sensitive must have one entry per node".into()));
        }
        if !adjacency.is_symmetric(0.0) {
            return Err(GraphError::Invalid("adjacency is not symmetric".into()));
        }
        if adjacency.values().iter().any(|&v| v != 1.0) {
            return Err(GraphError::Invalid("adjacency is not binary".into()));
        }
        if (0..n).any(|i| adjacency.get(i, i) != 0.0) {
            return Err(GraphError::Invalid("adjacency has self-loops".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(GraphError::Invalid(format!("label {bad} outside [0, {class_count})")));
        }
        if sensitive.iter().any(|&s| s > 1) {
            return Err(GraphError::Invalid("sensitive attribute must be 0 or 1".into()));
        }
        if !sensitive.contains(&0) || !sensitive.contains(&1) {
            return Err(GraphError::Invalid("both sensitive groups must be nonempty".into()));
        }
        if !attributes.is_finite() {
            return Err(GraphError::Invalid("attributes contain non-finite values".into()));
        }
        let attribute_names = (0..attributes.cols()).map(|j| format!("x{j}")).collect();
        Ok(Self { adjacency, attributes, attribute_names, labels, sensitive, class_count, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.node_count() {
            return Err(GraphError::Invalid("one name per node required".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn with_attribute_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.attributes.cols() {
            return Err(GraphError::Invalid("one name per attribute column required".into()));
        }
        self.attribute_names = names;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.attributes.rows()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &SparseMat {
        &self.adjacency
    }

    pub fn attributes(&self) -> &DenseMat {
        &self.attributes
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.node_count() {
            let (cols, _) = self.adjacency.row(i);
            out.extend(cols.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Fraction of nodes in sensitive group 1.
    pub fn group_one_fraction(&self) -> f64 {
        self.sensitive.iter().filter(|&&s| s == 1).count() as f64 / self.node_count() as f64
    }

    /// Copy with every attribute column shifted and scaled to zero mean and
    /// unit variance over `reference` rows. Constant columns are only centered.
    pub fn standardized(&self, reference: &[usize]) -> Self {
        let x = &self.attributes;
        let (n, d) = x.shape();
        let m = reference.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for &r in reference {
            for (mu, v) in mean.iter_mut().zip(x.row(r)) {
                *mu += v;
            }
        }
        mean.iter_mut().for_each(|mu| *mu /= m);
        let mut var = vec![0.0; d];
        for &r in reference {
            for ((s, v), mu) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - mu) * (v - mu);
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|s| {
                let sd = (s / m).sqrt();
                if sd > 1e-12 { 1.0 / sd } else { 1.0 }
            })
            .collect();
        let mut out = DenseMat::zeros(n, d);
        for r in 0..n {
            for (j, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = (x.get(r, j) - mean[j]) * scale[j];
            }
        }
        let mut g = self.clone();
        g.attributes = out;
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SparseMat {
        SparseMat::from_triplets(3, 3, vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_single_group() {
        let err = AttributedGraph::new(path3(), DenseMat::zeros(3, 1), vec![0, 1, 0], vec![1, 1, 1], 2);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_asymmetric_adjacency() {
        let a = SparseMat::from_triplets(3, 3, vec![(0, 1, 1.0)]).unwrap();
        assert!(AttributedGraph::new(a, DenseMat::zeros(3, 1), vec![0, 1, 0], vec![0, 1, 1], 2).is_err());
    }

    #[test]
    fn standardization_uses_reference_rows() {
        let x = DenseMat::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![100.0, 5.0]]);
        let g = AttributedGraph::new(path3(), x, vec![0, 1, 0], vec![0, 1, 1], 2).unwrap();
        let s = g.standardized(&[0, 1]);
        assert_eq!(s.attributes().row(0), &[-1.0, 0.0]);
        assert_eq!(s.attributes().row(1), &[1.0, 0.0]);
        assert_eq!(s.edges(), vec![(0, 1), (1, 2)]);
    }
}
