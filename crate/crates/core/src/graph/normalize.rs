use crate::autodiff::SparseMat;

use super::AttributedGraph;

/// Symmetric GCN normalization `D^-1/2 (A + I) D^-1/2`, where degrees count
/// the added self-loop.
pub fn normalize_adjacency(g: &AttributedGraph) -> SparseMat {
    sym_normalize_with_self_loops(g.adjacency())
}

pub(crate) fn sym_normalize_with_self_loops(a: &SparseMat) -> SparseMat {
    let n = a.rows();
    let degree: Vec<f64> = (0..n)
        .map(|i| {
            let (cols, vals) = a.row(i);
            let off_diag: f64 = cols.iter().zip(vals).filter(|(&c, _)| c != i).map(|(_, v)| v).sum();
            off_diag + 1.0
        })
        .collect();
    let mut triplets = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                triplets.push((i, j, v / (degree[i] * degree[j]).sqrt()));
            }
        }
        triplets.push((i, i, 1.0 / degree[i]));
    }
    SparseMat::from_triplets(n, n, triplets).expect("normalization preserves the index range")
}

/// Neighbor-mean operator: every off-diagonal entry of row `i` becomes
/// `1/deg(i)`. Isolated nodes get an empty row. Works on either the raw
/// adjacency or its normalized form, since only the off-diagonal pattern is
/// read.
pub fn row_normalize_neighbors(a: &SparseMat) -> SparseMat {
    let n = a.rows();
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (cols, _) = a.row(i);
        let neighbors: Vec<usize> = cols.iter().copied().filter(|&j| j != i).collect();
        let w = 1.0 / neighbors.len().max(1) as f64;
        triplets.extend(neighbors.into_iter().map(|j| (i, j, w)));
    }
    SparseMat::from_triplets(n, a.cols(), triplets).expect("pattern stays in range")
}
