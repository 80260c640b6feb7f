use std::collections::BTreeMap;

use crate::autodiff::DenseMat;

/// Adam with L2 weight decay folded into the gradient.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    step: i32,
    first: BTreeMap<String, DenseMat>,
    second: BTreeMap<String, DenseMat>,
}

impl Adam {
    pub fn new(learning_rate: f64, weight_decay: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            weight_decay,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// One update of every listed parameter. Counts as a single Adam step.
    pub fn step<'a, I>(&mut self, updates: I)
    where
        I: IntoIterator<Item = (String, &'a mut DenseMat, &'a DenseMat)>,
    {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (name, param, grad) in updates {
            let (rows, cols) = param.shape();
            let m = self.first.entry(name.clone()).or_insert_with(|| DenseMat::zeros(rows, cols));
            let v = self.second.entry(name).or_insert_with(|| DenseMat::zeros(rows, cols));
            let p = param.data_mut();
            for k in 0..p.len() {
                let g = grad.data()[k] + self.weight_decay * p[k];
                let mk = self.beta1 * m.data()[k] + (1.0 - self.beta1) * g;
                let vk = self.beta2 * v.data()[k] + (1.0 - self.beta2) * g * g;
                m.data_mut()[k] = mk;
                v.data_mut()[k] = vk;
                p[k] -= self.learning_rate * (mk / bc1) / ((vk / bc2).sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(0.1, 0.0, 0.9, 0.999, 1e-8);
        let mut p = DenseMat::row_vector(&[1.0, -1.0]);
        let g = DenseMat::row_vector(&[3.0, -0.5]);
        adam.step([("p".to_string(), &mut p, &g)]);
        assert!((p.data()[0] - 0.9).abs() < 1e-6);
        assert!((p.data()[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut adam = Adam::new(0.05, 0.0, 0.9, 0.999, 1e-8);
        let mut p = DenseMat::row_vector(&[4.0]);
        for _ in 0..500 {
            let g = p.scale(2.0);
            adam.step([("p".to_string(), &mut p, &g)]);
        }
        assert!(p.data()[0].abs() < 1e-2);
    }
}
