use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AttributedGraph, GraphError};
use crate::autodiff::{DenseMat, SparseMat};
use crate::rng::{stream, Rng, Stream};

/// Distance between the means of any two classes, in noise units.
const CLASS_SEPARATION: f64 = 1.0;
/// Largest shift of the class prior towards the group's favored class.
const LABEL_SKEW: f64 = 0.15;
/// Group-1 attribute shift along the class-0 to class-1 axis, at full bias.
const SPURIOUS_SHIFT: f64 = 1.0;
/// Group-1 attribute shift along a direction orthogonal to every class mean.
const GROUP_SHIFT: f64 = 2.5;
/// Chance, at full bias, that an edge is redrawn inside the endpoint's group.
const GROUP_ASSORTATIVITY: f64 = 0.9;

/// Parameters of a synthetic graph with planted group bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "classes")]
    pub c: usize,
    pub group_fraction: f64,
    /// Probability that an edge joins two nodes of the same class.
    pub homophily: f64,
    /// Strength of the dependence of labels and attributes on the group.
    pub bias_strength: f64,
    pub avg_degree: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 16,
            c: 2,
            group_fraction: 0.4,
            homophily: 0.8,
            bias_strength: 0.8,
            avg_degree: 10.0,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidSpec(m));
        if self.c < 2 {
            return bad(format!("need at least 2 classes, got {}", self.c));
        }
        if self.d < self.c + 1 {
            return bad(format!("attribute dimension {} must exceed the class count {}", self.d, self.c));
        }
        if !(self.group_fraction > 0.0 && self.group_fraction < 1.0) {
            return bad(format!("group_fraction {} outside (0, 1)", self.group_fraction));
        }
        let ones = (self.group_fraction * self.n as f64).round() as usize;
        if ones == 0 || ones == self.n {
            return bad("group_fraction leaves one group empty".into());
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return bad(format!("homophily {} outside [0, 1]", self.homophily));
        }
        if !(0.0..=1.0).contains(&self.bias_strength) {
            return bad(format!("bias_strength {} outside [0, 1]", self.bias_strength));
        }
        if !(self.avg_degree > 0.0) {
            return bad(format!("avg_degree {} must be positive", self.avg_degree));
        }
        if self.avg_degree >= self.n as f64 {
            return bad(format!("avg_degree {} is infeasible for {} nodes", self.avg_degree, self.n));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `k` orthonormal vectors in `d` dimensions from Gram-Schmidt on Gaussians.
fn orthonormal(rng: &mut Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

fn sample_class(rng: &mut Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Samples a graph whose labels, attributes and (through class homophily)
/// structure depend on a binary sensitive attribute.
///
/// * Exactly `round(group_fraction * n)` nodes are in group 1.
/// * Group `s` draws its label from a prior tilted towards class `s`.
/// * Attributes are a class mean plus unit Gaussian noise; group-1 nodes are
///   additionally shifted along the class-0 to class-1 axis and along a
///   group-only direction, both scaled by `bias_strength`.
/// * Each of the `round(n * avg_degree / 2)` edges joins same-class nodes with
///   probability `homophily`. With probability proportional to
///   `bias_strength` its far endpoint is also drawn from the near endpoint's
///   group.
pub fn generate_biased_graph(spec: &SynthSpec) -> Result<AttributedGraph, GraphError> {
    spec.validate()?;
    let SynthSpec { n, d, c, bias_strength: beta, .. } = *spec;
    let mut rng = stream(spec.seed, Stream::Synth);

    let ones = (spec.group_fraction * n as f64).round() as usize;
    let mut sensitive: Vec<u8> = (0..n).map(|i| u8::from(i < ones)).collect();
    sensitive.shuffle(&mut rng);

    let basis = orthonormal(&mut rng, d, c + 1);
    let mean_scale = CLASS_SEPARATION / std::f64::consts::SQRT_2;
    let axis: Vec<f64> = basis[1].iter().zip(&basis[0]).map(|(a, b)| (a - b) / std::f64::consts::SQRT_2).collect();
    let shift: Vec<f64> = axis
        .iter()
        .zip(&basis[c])
        .map(|(a, g)| beta * (SPURIOUS_SHIFT * a + GROUP_SHIFT * g))
        .collect();

    let tilt = beta * LABEL_SKEW;
    let priors: [Vec<f64>; 2] = [0, 1].map(|s: usize| {
        (0..c).map(|k| (1.0 - tilt) / c as f64 + if k == s { tilt } else { 0.0 }).collect()
    });
    let labels: Vec<usize> = sensitive.iter().map(|&s| sample_class(&mut rng, &priors[s as usize])).collect();

    let mut attributes = DenseMat::zeros(n, d);
    for i in 0..n {
        let row = attributes.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            *x = mean_scale * basis[labels[i]][j] + gaussian(&mut rng);
            if sensitive[i] == 1 {
                *x += shift[j];
            }
        }
    }

    let edges = sample_edges(&mut rng, &labels, &sensitive, c, spec)?;
    let mut triplets = Vec::with_capacity(edges.len() * 2);
    for &(u, v) in &edges {
        triplets.push((u, v, 1.0));
        triplets.push((v, u, 1.0));
    }
    let adjacency = SparseMat::from_triplets(n, n, triplets).map_err(|e| GraphError::Invalid(e.to_string()))?;
    AttributedGraph::new(adjacency, attributes, labels, sensitive, c)
}

fn sample_edges(
    rng: &mut Rng,
    labels: &[usize],
    sensitive: &[u8],
    c: usize,
    spec: &SynthSpec,
) -> Result<Vec<(usize, usize)>, GraphError> {
    let n = labels.len();
    let target = (n as f64 * spec.avg_degree / 2.0).round() as usize;
    let assort = spec.bias_strength * GROUP_ASSORTATIVITY;
    // pools[same][class][group]
    let pools: [Vec<[Vec<usize>; 2]>; 2] = [false, true].map(|same| {
        (0..c)
            .map(|k| {
                [0u8, 1].map(|s| (0..n).filter(|&i| (labels[i] == k) == same && sensitive[i] == s).collect())
            })
            .collect()
    });

    let mut seen = HashSet::with_capacity(target * 2);
    let mut edges = Vec::with_capacity(target);
    let max_attempts = target.saturating_mul(50).max(1000);
    let mut attempts = 0;
    while edges.len() < target {
        attempts += 1;
        if attempts > max_attempts {
            return Err(GraphError::InvalidSpec(format!(
                "could only place {} of {target} edges; lower avg_degree or homophily",
                edges.len()
            )));
        }
        let u = rng.random_range(0..n);
        let same = rng.random::<f64>() < spec.homophily;
        let [g0, g1] = &pools[usize::from(same)][labels[u]];
        let v = if rng.random::<f64>() < assort {
            let own = if sensitive[u] == 0 { g0 } else { g1 };
            if own.is_empty() {
                continue;
            }
            own[rng.random_range(0..own.len())]
        } else {
            let total = g0.len() + g1.len();
            if total == 0 {
                continue;
            }
            let k = rng.random_range(0..total);
            if k < g0.len() { g0[k] } else { g1[k - g0.len()] }
        };
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> SynthSpec {
        SynthSpec { n, ..SynthSpec::default() }
    }

    #[test]
    fn exact_group_size() {
        let g = generate_biased_graph(&SynthSpec { n: 1000, group_fraction: 0.3, ..spec(1000) }).unwrap();
        assert_eq!(g.sensitive().iter().filter(|&&s| s == 1).count(), 300);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_biased_graph(&spec(300)).unwrap();
        let b = generate_biased_graph(&spec(300)).unwrap();
        assert_eq!(a, b);
        let c = generate_biased_graph(&SynthSpec { seed: 8, ..spec(300) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_degree_rejected() {
        assert!(generate_biased_graph(&SynthSpec { avg_degree: 50.0, ..spec(50) }).is_err());
    }

    #[test]
    fn edge_count_matches_degree() {
        let g = generate_biased_graph(&SynthSpec { avg_degree: 6.0, ..spec(500) }).unwrap();
        assert_eq!(g.edge_count(), 1500);
    }
}
