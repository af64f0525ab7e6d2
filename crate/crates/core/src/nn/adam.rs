use crate::nn::params::{Grads, ParamId, ParamStore};

/// Adam with bias correction over a fixed subset of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    ids: Vec<ParamId>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(store: &ParamStore, ids: Vec<ParamId>, lr: f64) -> Self {
        let m: Vec<Vec<f64>> = ids
            .iter()
            .map(|&id| vec![0.0; store.get(id).len()])
            .collect();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            v: m.clone(),
            m,
            ids,
        }
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    /// One descent step along `grads`. Pass negated gradients to ascend.
    pub fn update(&mut self, store: &mut ParamStore, grads: &Grads) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (k, &id) in self.ids.iter().enumerate() {
            let g = &grads.get(id).data;
            let p = &mut store.get_mut(id).data;
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
