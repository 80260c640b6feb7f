use std::sync::Arc;

use fairdistill::autodiff::{gradient_check, Bindings, ExprGraph, SparseSource};
use fairdistill::{DenseMat, SparseMat};
use proptest::prelude::*;

fn mat(rows: usize, cols: usize) -> impl Strategy<Value = DenseMat> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| DenseMat::from_vec(rows, cols, v).unwrap())
}

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = SparseMat> {
    prop::collection::vec(prop::option::weighted(0.3, -2.0f64..2.0), rows * cols).prop_map(move |v| {
        let t = v.iter().enumerate().filter_map(|(k, x)| x.map(|x| (k / cols, k % cols, x))).collect();
        SparseMat::from_triplets(rows, cols, t).unwrap()
    })
}

/// Plain triple loop; the reference for both product paths.
fn naive_product(a: &DenseMat, b: &DenseMat) -> DenseMat {
    let mut out = DenseMat::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn softmax_rows_are_distributions(m in (1usize..20, 1usize..6).prop_flat_map(|(r, c)| mat(r, c))) {
        let p = m.row_softmax();
        for i in 0..p.rows() {
            let row = p.row(i);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            if row.len() > 1 {
                prop_assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }

    #[test]
    fn sparse_product_equals_dense_product(
        (s, x) in (1usize..50, 1usize..50, 1usize..8).prop_flat_map(|(n, m, k)| (sparse(n, m), mat(m, k)))
    ) {
        let fast = s.matmul_dense(&x).unwrap();
        prop_assert_eq!(&fast, &naive_product(&s.to_dense(), &x));
        prop_assert_eq!(&fast, &s.to_dense().matmul(&x).unwrap());
    }

    #[test]
    fn forward_is_pure((a, b) in (1usize..6, 1usize..5).prop_flat_map(|(r, c)| (mat(r, c), mat(c, 3)))) {
        let mut g = ExprGraph::new();
        let (x, w) = (g.input("a"), g.input("b"));
        let h = g.matmul(x, w);
        let h = g.relu(h);
        let p = g.log_softmax(h);
        let root = g.sum(p);
        g.set_root(root);
        let bind = Bindings::new().dense("a", &a).dense("b", &b);
        let first = g.forward(&bind).unwrap();
        let grads = g.backward(&bind).unwrap();
        prop_assert_eq!(&first, &g.forward(&bind).unwrap());
        prop_assert_eq!(grads.value, first.as_scalar().unwrap());
        prop_assert_eq!(grads.grads, g.backward(&bind).unwrap().grads);
    }

    #[test]
    fn composite_gradient_matches_finite_differences(
        (x, w1, w2, row, s) in (2usize..8, 1usize..5, 2usize..4)
            .prop_flat_map(|(n, d, c)| (mat(n, d), mat(d, 4), mat(4, c), mat(1, 4), sparse(n, n)))
    ) {
        let n = x.rows();
        let mut g = ExprGraph::new();
        let (xi, a, b, r) = (g.input("x"), g.input("w1"), g.input("w2"), g.input("row"));
        let p = g.spmm(SparseSource::Fixed(Arc::new(s)), xi);
        let h = g.matmul(p, a);
        let h = g.add_row(h, r);
        let h = g.scale(h, 0.5);
        let z = g.matmul(h, b);
        let probs = g.softmax(z);
        let logp = g.log_softmax(z);
        let m = g.mean_rows(probs, Arc::new((0..n).step_by(2).collect()));
        let ent = g.mul(probs, logp);
        let ent = g.sum(ent);
        let ms = g.sum(m);
        let root = g.sub(ms, ent);
        g.set_root(root);
        let bind = Bindings::new().dense("x", &x).dense("w1", &w1).dense("w2", &w2).dense("row", &row);
        let rep = gradient_check(&g, &bind, 1e-6, 1e-4).unwrap();
        prop_assert!(rep.passed, "{:?}", rep.max_rel_error);
    }
}

#[test]
fn root_gradient_is_one() {
    let mut g = ExprGraph::new();
    let a = g.input("a");
    let root = g.sum(a);
    g.set_root(root);
    let m = DenseMat::from_rows(&[vec![1.0, -2.0], vec![0.5, 4.0]]);
    let grads = g.backward(&Bindings::new().dense("a", &m)).unwrap();
    assert_eq!(grads.grads["a"], DenseMat::filled(2, 2, 1.0));
}
