use crate::model::is_decay_exempt;
use crate::numerics::{ParamStore, Tensor2D};

/// Linearly decayed learning rate, `lr0 · (1 − step/total)`.
pub fn lr_at(step: usize, total_steps: usize, lr0: f64) -> f64 {
    if total_steps == 0 || step >= total_steps {
        return 0.0;
    }
    lr0 * (total_steps - step) as f64 / total_steps as f64
}

/// Adam with decoupled weight decay. Biases and layer-norm parameters are not decayed.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Tensor2D>,
    v: Vec<Tensor2D>,
    decay: Vec<bool>,
    t: i32,
}

impl AdamW {
    pub fn new(store: &ParamStore, weight_decay: f64) -> Self {
        let zeros = || store.iter().map(|p| Tensor2D::zeros(p.value.rows(), p.value.cols())).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: zeros(),
            v: zeros(),
            decay: store.iter().map(|p| !is_decay_exempt(&p.name)).collect(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    /// Applies one update from the gradients currently held in `store`.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) {
        assert_eq!(store.len(), self.m.len(), "optimizer built for a different store");
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (k, p) in store.iter_mut().enumerate() {
            let wd = if self.decay[k] { self.weight_decay } else { 0.0 };
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (((w, g), m), v) in p.value.data_mut().iter_mut().zip(p.grad.data()).zip(m).zip(v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let update = (*m / c1) / ((*v / c2).sqrt() + self.eps);
                *w -= lr * (update + wd * *w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_endpoints() {
        assert_eq!(lr_at(0, 10, 0.5), 0.5);
        assert_eq!(lr_at(5, 10, 0.5), 0.25);
        assert_eq!(lr_at(10, 10, 0.5), 0.0);
    }

    proptest! {
        #[test]
        fn schedule_is_monotone(total in 1usize..500, lr0 in 1e-6f64..1.0) {
            let mut prev = f64::INFINITY;
            for s in 0..=total {
                let lr = lr_at(s, total, lr0);
                prop_assert!(lr <= prev);
                prop_assert!(lr >= 0.0);
                prev = lr;
            }
            prop_assert_eq!(lr_at(total, total, lr0), 0.0);
        }
    }

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("a.weight", Tensor2D::from_vec(1, 2, vec![1.0, -2.0]).unwrap()).unwrap();
        s.add("a.bias", Tensor2D::from_vec(1, 1, vec![3.0]).unwrap()).unwrap();
        s
    }

    #[test]
    fn first_step_moves_by_lr_against_the_gradient() {
        let mut s = store();
        let mut opt = AdamW::new(&s, 0.0);
        s.grad_mut(s.find("a.weight").unwrap()).data_mut().copy_from_slice(&[0.5, -4.0]);
        s.grad_mut(s.find("a.bias").unwrap()).data_mut()[0] = 1e-3;
        opt.step(&mut s, 0.1);
        // bias-corrected first Adam step is lr · g/|g| (up to eps)
        let w = s.value(s.find("a.weight").unwrap()).data().to_vec();
        assert!((w[0] - 0.9).abs() < 1e-6 && (w[1] + 1.9).abs() < 1e-6);
        assert!((s.value(s.find("a.bias").unwrap()).data()[0] - 2.9).abs() < 1e-4);
    }

    #[test]
    fn decay_skips_biases() {
        let mut s = store();
        let mut opt = AdamW::new(&s, 0.5);
        opt.step(&mut s, 0.1);
        // zero gradients: only decay acts, w ← w − lr·wd·w
        assert_eq!(s.value(s.find("a.weight").unwrap()).data(), [0.95, -1.9]);
        assert_eq!(s.value(s.find("a.bias").unwrap()).data(), [3.0]);
        assert_eq!(opt.steps_taken(), 1);
    }
}
