use fairdistill::fairness::{delta_eo, delta_sp, soft_bias_value, GroupIndex, Notion};
use fairdistill::DenseMat;
use proptest::prelude::*;

/// Predictions, labels, sensitive values, a probability matrix, class count
/// and a node permutation. Both groups are nonempty.
#[derive(Debug, Clone)]
struct Instance {
    pred: Vec<usize>,
    truth: Vec<usize>,
    sens: Vec<u8>,
    probs: DenseMat,
    c: usize,
    perm: Vec<usize>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..60, 2usize..5).prop_flat_map(|(n, c)| {
        (
            prop::collection::vec(0..c, n),
            prop::collection::vec(0..c, n),
            prop::collection::vec(0u8..2, n - 2),
            prop::collection::vec(0.01f64..1.0, n * c),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(pred, truth, mut sens, raw, perm)| {
                sens.extend([0, 1]);
                let mut probs = DenseMat::from_vec(n, c, raw).unwrap();
                for i in 0..n {
                    let s: f64 = probs.row(i).iter().sum();
                    probs.row_mut(i).iter_mut().for_each(|v| *v /= s);
                }
                Instance { pred, truth, sens, probs, c, perm }
            })
    })
}

fn all_nodes(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Relabels node `i` as `perm[i]`.
fn permuted(x: &Instance) -> Instance {
    let n = x.pred.len();
    let mut out = x.clone();
    let mut probs = DenseMat::zeros(n, x.c);
    for i in 0..n {
        let j = x.perm[i];
        out.pred[j] = x.pred[i];
        out.truth[j] = x.truth[i];
        out.sens[j] = x.sens[i];
        probs.row_mut(j).copy_from_slice(x.probs.row(i));
    }
    out.probs = probs;
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hard_gaps_are_bounded(x in instance()) {
        let groups = GroupIndex::from_sensitive(&x.sens, &all_nodes(x.pred.len())).unwrap();
        let sp = delta_sp(&x.pred, &groups, x.c).unwrap();
        prop_assert!((0.0..=1.0).contains(&sp.aggregate));
        prop_assert!(sp.per_class.iter().flatten().all(|g| (0.0..=1.0).contains(g)));
        if let Ok(eo) = delta_eo(&x.pred, &x.truth, &groups, x.c) {
            prop_assert!((0.0..=1.0).contains(&eo.aggregate));
        }
    }

    #[test]
    fn swapping_groups_changes_nothing(x in instance()) {
        let groups = GroupIndex::from_sensitive(&x.sens, &all_nodes(x.pred.len())).unwrap();
        let swapped = groups.swapped();
        prop_assert_eq!(delta_sp(&x.pred, &groups, x.c).unwrap(), delta_sp(&x.pred, &swapped, x.c).unwrap());
        prop_assert_eq!(
            delta_eo(&x.pred, &x.truth, &groups, x.c).ok(),
            delta_eo(&x.pred, &x.truth, &swapped, x.c).ok()
        );
        let a = soft_bias_value(&x.probs, &groups, Notion::Sp, None).unwrap();
        let b = soft_bias_value(&x.probs, &swapped, Notion::Sp, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn permuting_nodes_changes_nothing(x in instance()) {
        let n = x.pred.len();
        let y = permuted(&x);
        let gx = GroupIndex::from_sensitive(&x.sens, &all_nodes(n)).unwrap();
        let gy = GroupIndex::from_sensitive(&y.sens, &all_nodes(n)).unwrap();
        prop_assert_eq!(delta_sp(&x.pred, &gx, x.c).unwrap(), delta_sp(&y.pred, &gy, y.c).unwrap());
        prop_assert_eq!(
            delta_eo(&x.pred, &x.truth, &gx, x.c).ok(),
            delta_eo(&y.pred, &y.truth, &gy, y.c).ok()
        );
        for notion in [Notion::Sp, Notion::Eo] {
            let a = soft_bias_value(&x.probs, &gx, notion, Some(&x.truth));
            let b = soft_bias_value(&y.probs, &gy, notion, Some(&y.truth));
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12, "{notion:?}: {a} vs {b}"),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }

    #[test]
    fn one_hot_probabilities_give_summed_hard_gaps(x in instance()) {
        let n = x.pred.len();
        let mut probs = DenseMat::zeros(n, x.c);
        for (i, &k) in x.pred.iter().enumerate() {
            probs.set(i, k, 1.0);
        }
        let groups = GroupIndex::from_sensitive(&x.sens, &all_nodes(n)).unwrap();
        let soft = soft_bias_value(&probs, &groups, Notion::Sp, None).unwrap();
        let hard: f64 = delta_sp(&x.pred, &groups, x.c).unwrap().per_class.iter().flatten().sum();
        prop_assert!((soft - hard).abs() <= 1e-12, "{soft} vs {hard}");
    }
}
