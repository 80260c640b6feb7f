use fairdistill::graph::{
    generate_biased_graph, load_graph, normalize_adjacency, write_graph, AttributedGraph, LoadOptions, SynthSpec,
};
use fairdistill::{DenseMat, SparseMat};
use proptest::prelude::*;

fn spec(n: usize, bias: f64, homophily: f64, seed: u64) -> SynthSpec {
    SynthSpec { n, bias_strength: bias, homophily, seed, ..SynthSpec::default() }
}

/// Largest eigenvalue magnitude by power iteration.
fn spectral_radius(a: &SparseMat, steps: usize) -> f64 {
    let n = a.rows();
    let mut v = DenseMat::from_vec(n, 1, (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect()).unwrap();
    let mut estimate = 0.0;
    for _ in 0..steps {
        let w = a.matmul_dense(&v).unwrap();
        let norm = w.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        let prev = v.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        estimate = norm / prev;
        v = w.scale(1.0 / norm);
    }
    estimate
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalized_adjacency_is_symmetric_and_contractive(
        n in 5usize..200,
        degree in 1.0f64..4.0,
        homophily in 0.0f64..1.0,
        bias in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let g = generate_biased_graph(&SynthSpec { n, d: 4, avg_degree: degree, ..spec(n, bias, homophily, seed) }).unwrap();
        let a = normalize_adjacency(&g);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                prop_assert!((v - a.get(j, i)).abs() <= 1e-12);
            }
        }
        prop_assert!(spectral_radius(&a, 50) <= 1.0 + 1e-9);
    }

    #[test]
    fn generated_graphs_are_valid(n in 10usize..300, bias in 0.0f64..1.0, seed in 0u64..1000) {
        let g = generate_biased_graph(&SynthSpec { d: 4, avg_degree: 3.0, ..spec(n, bias, 0.8, seed) }).unwrap();
        prop_assert_eq!(g.labels().len(), n);
        prop_assert_eq!(g.sensitive().len(), n);
        prop_assert!((0..n).all(|i| g.adjacency().get(i, i) == 0.0));
        prop_assert!(g.adjacency().is_symmetric(0.0));
        prop_assert_eq!(g.sensitive().iter().filter(|&&s| s == 1).count(), (0.4 * n as f64).round() as usize);
    }
}

fn same_graph(a: &AttributedGraph, b: &AttributedGraph) {
    assert_eq!(a.node_count(), b.node_count());
    assert_eq!(a.edges(), b.edges());
    assert_eq!(a.attributes(), b.attributes());
    assert_eq!(a.labels(), b.labels());
    assert_eq!(a.sensitive(), b.sensitive());
    assert_eq!(a.class_count(), b.class_count());
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate_biased_graph(&SynthSpec { c: 3, ..spec(150, 0.6, 0.7, 4) }).unwrap();
    let (e, a) = (dir.path().join("edges.csv"), dir.path().join("nodes.csv"));
    write_graph(&g, &e, &a).unwrap();
    let loaded = load_graph(&e, &a, &LoadOptions::default()).unwrap();
    same_graph(&g, &loaded);

    let (e2, a2) = (dir.path().join("edges2.csv"), dir.path().join("nodes2.csv"));
    write_graph(&loaded, &e2, &a2).unwrap();
    same_graph(&loaded, &load_graph(&e2, &a2, &LoadOptions::default()).unwrap());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&a2).unwrap());
}

/// Plug-in mutual information, in nats, between two discrete variables.
fn mutual_information(x: &[usize], y: &[usize]) -> f64 {
    let kx = x.iter().max().unwrap() + 1;
    let ky = y.iter().max().unwrap() + 1;
    let n = x.len() as f64;
    let mut joint = vec![vec![0.0; ky]; kx];
    for (&a, &b) in x.iter().zip(y) {
        joint[a][b] += 1.0;
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let py: Vec<f64> = (0..ky).map(|b| joint.iter().map(|r| r[b]).sum::<f64>() / n).collect();
    let mut mi = 0.0;
    for a in 0..kx {
        for b in 0..ky {
            let p = joint[a][b] / n;
            if p > 0.0 {
                mi += p * (p / (px[a] * py[b])).ln();
            }
        }
    }
    mi
}

#[test]
fn unbiased_graph_has_independent_labels() {
    let g = generate_biased_graph(&spec(5000, 0.0, 0.8, 11)).unwrap();
    let s: Vec<usize> = g.sensitive().iter().map(|&s| s as usize).collect();
    let mi = mutual_information(g.labels(), &s);
    assert!(mi < 0.01, "{mi}");
}

#[test]
fn biased_graph_has_dependent_labels() {
    let g = generate_biased_graph(&spec(5000, 0.8, 0.8, 11)).unwrap();
    let s: Vec<usize> = g.sensitive().iter().map(|&s| s as usize).collect();
    let unbiased = generate_biased_graph(&spec(5000, 0.0, 0.8, 11)).unwrap();
    let s0: Vec<usize> = unbiased.sensitive().iter().map(|&s| s as usize).collect();
    assert!(mutual_information(g.labels(), &s) > mutual_information(unbiased.labels(), &s0));
}

#[test]
fn same_class_edge_fraction_tracks_homophily() {
    for (homophily, seed) in [(0.9, 1), (0.9, 2), (0.6, 3)] {
        let g = generate_biased_graph(&spec(2000, 0.8, homophily, seed)).unwrap();
        let edges = g.edges();
        let same = edges.iter().filter(|&&(u, v)| g.labels()[u] == g.labels()[v]).count() as f64;
        let frac = same / edges.len() as f64;
        assert!((frac - homophily).abs() <= 0.05, "homophily {homophily}: measured {frac}");
        let degree = 2.0 * edges.len() as f64 / 2000.0;
        assert!((degree - 10.0).abs() < 0.01, "{degree}");
    }
}

/// Test accuracy of a logistic regression on the attributes predicting the
/// sensitive group, trained by full-batch gradient descent on the first half.
fn group_predictability(g: &AttributedGraph) -> f64 {
    let x = g.attributes();
    let (n, d) = x.shape();
    let half = n / 2;
    let mut w = vec![0.0; d + 1];
    for _ in 0..300 {
        let mut grad = vec![0.0; d + 1];
        for i in 0..half {
            let z: f64 = w[d] + x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let err = 1.0 / (1.0 + (-z).exp()) - g.sensitive()[i] as f64;
            for j in 0..d {
                grad[j] += err * x.get(i, j);
            }
            grad[d] += err;
        }
        for j in 0..=d {
            w[j] -= 0.5 * grad[j] / half as f64;
        }
    }
    let hits = (half..n)
        .filter(|&i| {
            let z: f64 = w[d] + x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            u8::from(z > 0.0) == g.sensitive()[i]
        })
        .count();
    hits as f64 / (n - half) as f64
}

#[test]
fn strong_bias_makes_group_predictable() {
    for bias in [0.6, 0.8, 1.0] {
        let acc = group_predictability(&generate_biased_graph(&spec(2000, bias, 0.8, 5)).unwrap());
        assert!(acc > 0.7, "bias {bias}: {acc}");
    }
    let acc = group_predictability(&generate_biased_graph(&spec(2000, 0.0, 0.8, 5)).unwrap());
    assert!(acc < 0.65, "unbiased: {acc}");
}
