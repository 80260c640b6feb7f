use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    /// Statistical parity.
    Sp,
    /// Equal opportunity.
    Eo,
}

/// Node indices of the two sensitive groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupIndex {
    pub group0: Vec<usize>,
    pub group1: Vec<usize>,
}

impl GroupIndex {
    pub fn new(group0: Vec<usize>, group1: Vec<usize>) -> Result<Self, MetricError> {
        if group0.is_empty() {
            return Err(MetricError::EmptyGroup(0));
        }
        if group1.is_empty() {
            return Err(MetricError::EmptyGroup(1));
        }
        let zero: std::collections::HashSet<_> = group0.iter().collect();
        if let Some(&i) = group1.iter().find(|i| zero.contains(i)) {
            return Err(MetricError::Overlap(i));
        }
        Ok(Self { group0, group1 })
    }

    /// Splits `nodes` by their sensitive value.
    pub fn from_sensitive(sensitive: &[u8], nodes: &[usize]) -> Result<Self, MetricError> {
        let (g1, g0): (Vec<usize>, Vec<usize>) = nodes.iter().partition(|&&i| sensitive[i] == 1);
        Self::new(g0, g1)
    }

    pub fn groups(&self) -> [&[usize]; 2] {
        [&self.group0, &self.group1]
    }

    pub fn swapped(&self) -> Self {
        Self { group0: self.group1.clone(), group1: self.group0.clone() }
    }

    fn max_index(&self) -> usize {
        self.group0.iter().chain(&self.group1).copied().max().unwrap_or(0)
    }
}

/// Per-class group gaps and their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasValue {
    pub notion: Notion,
    /// Gap for each class; `None` where the class was skipped.
    pub per_class: Vec<Option<f64>>,
    pub aggregate: f64,
}

impl BiasValue {
    fn from_gaps(notion: Notion, per_class: Vec<Option<f64>>) -> Result<Self, MetricError> {
        let aggregate = per_class.iter().flatten().copied().reduce(f64::max).ok_or(MetricError::NoComputableClass)?;
        Ok(Self { notion, per_class, aggregate })
    }

    /// Classes left out because a conditional was undefined.
    pub fn skipped(&self) -> Vec<usize> {
        self.per_class.iter().enumerate().filter(|(_, g)| g.is_none()).map(|(k, _)| k).collect()
    }

    /// Mean over computed classes, for comparing against mean-aggregated
    /// multi-class numbers.
    pub fn mean_aggregate(&self) -> f64 {
        let gaps: Vec<f64> = self.per_class.iter().flatten().copied().collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

fn check_len(values: &[usize], groups: &GroupIndex, what: &str) -> Result<(), MetricError> {
    if groups.max_index() >= values.len() {
        return Err(MetricError::LengthMismatch(format!(
            "{what} has {} entries but groups index node {}",
            values.len(),
            groups.max_index()
        )));
    }
    Ok(())
}

/// Statistical parity: `|P(y_hat = k | s = 0) - P(y_hat = k | s = 1)|` per
/// class, maximized over classes. Predictions are indexed by node.
pub fn delta_sp(pred: &[usize], groups: &GroupIndex, class_count: usize) -> Result<BiasValue, MetricError> {
    check_len(pred, groups, "predictions")?;
    let rate = |nodes: &[usize], k: usize| nodes.iter().filter(|&&i| pred[i] == k).count() as f64 / nodes.len() as f64;
    let gaps = (0..class_count).map(|k| Some((rate(&groups.group0, k) - rate(&groups.group1, k)).abs())).collect();
    BiasValue::from_gaps(Notion::Sp, gaps)
}

/// Equal opportunity: true-positive-rate gap per class. Classes where either
/// group has no node of that true label are skipped.
pub fn delta_eo(
    pred: &[usize],
    truth: &[usize],
    groups: &GroupIndex,
    class_count: usize,
) -> Result<BiasValue, MetricError> {
    check_len(pred, groups, "predictions")?;
    check_len(truth, groups, "labels")?;
    let tpr = |nodes: &[usize], k: usize| {
        let (hits, total) = nodes
            .iter()
            .filter(|&&i| truth[i] == k)
            .fold((0usize, 0usize), |(h, t), &i| (h + usize::from(pred[i] == k), t + 1));
        (total > 0).then(|| hits as f64 / total as f64)
    };
    let gaps = (0..class_count)
        .map(|k| match (tpr(&groups.group0, k), tpr(&groups.group1, k)) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        })
        .collect();
    BiasValue::from_gaps(Notion::Eo, gaps)
}
