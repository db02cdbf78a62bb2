use crate::nn::Param;

/// AdamW: Adam moments with bias correction and decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: usize,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One update. `grads` must be parallel to `params`.
    pub fn step(&mut self, params: &mut [Param], grads: &[Vec<f64>]) {
        assert_eq!(params.len(), grads.len(), "AdamW: gradient list does not match parameters");
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.data.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (pi, p) in params.iter_mut().enumerate() {
            let g = &grads[pi];
            assert_eq!(g.len(), p.data.len(), "AdamW: gradient length mismatch for {}", p.name);
            let (m, v) = (&mut self.m[pi], &mut self.v[pi]);
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p.data[i] -= self.lr * mhat / (vhat.sqrt() + self.eps) + self.lr * self.weight_decay * p.data[i];
            }
        }
    }
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW::new(1e-3, 1e-4)
    }
}
