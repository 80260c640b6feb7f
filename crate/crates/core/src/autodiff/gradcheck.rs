use std::collections::BTreeMap;

use super::{AutodiffError, Bindings, DenseMat, ExprGraph};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(1, |numeric|)` per input.
    pub max_rel_error: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.max_rel_error.values().copied().fold(0.0, f64::max)
    }
}

/// Checks every dense input bound in `bindings` that the graph declares.
///
/// Evaluation failures while perturbing (for example a log pushed below zero)
/// count as an infinite error for that input rather than aborting.
pub fn gradient_check(
    expr: &ExprGraph,
    bindings: &Bindings<'_>,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, AutodiffError> {
    let analytic = expr.backward(bindings)?;
    let names: Vec<String> = expr.input_names().map(str::to_string).collect();
    let mut max_rel_error = BTreeMap::new();

    for name in names {
        let base = bindings.get_dense(&name).ok_or_else(|| AutodiffError::Unbound(name.clone()))?;
        let grad = &analytic.grads[&name];
        let mut worst: f64 = 0.0;
        let mut probe = base.clone();
        for k in 0..base.data().len() {
            let orig = base.data()[k];
            probe.data_mut()[k] = orig + epsilon;
            let plus = eval_scalar(expr, bindings, &name, &probe);
            probe.data_mut()[k] = orig - epsilon;
            let minus = eval_scalar(expr, bindings, &name, &probe);
            probe.data_mut()[k] = orig;
            let err = match (plus, minus) {
                (Some(p), Some(m)) => {
                    let numeric = (p - m) / (2.0 * epsilon);
                    (grad.data()[k] - numeric).abs() / numeric.abs().max(1.0)
                }
                _ => f64::INFINITY,
            };
            worst = worst.max(err);
        }
        max_rel_error.insert(name, worst);
    }

    let passed = max_rel_error.values().all(|&e| e < tolerance);
    Ok(GradCheckReport { max_rel_error, tolerance, passed })
}

fn eval_scalar(expr: &ExprGraph, bindings: &Bindings<'_>, name: &str, value: &DenseMat) -> Option<f64> {
    let mut b = bindings.clone();
    b.set_dense(name.to_string(), value);
    expr.forward(&b).ok().and_then(|v| v.as_scalar())
}
