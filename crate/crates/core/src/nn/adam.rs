use crate::nn::{NnError, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ParameterSet,
    pub v: ParameterSet,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParameterSet, config: AdamConfig) -> Self {
        Self { config, m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    /// One bias-corrected update. Non-finite gradients leave everything untouched.
    pub fn step(&mut self, params: &mut ParameterSet, grads: &ParameterSet) -> Result<(), NnError> {
        if grads.shapes() != params.shapes() || params.shapes() != self.m.shapes() {
            return Err(NnError::Shape("gradient, parameter and moment shapes differ".into()));
        }
        if !grads.is_finite() {
            return Err(NnError::NonFinite("gradient"));
        }
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.tensors.iter_mut().zip(&grads.tensors).zip(&mut self.m.tensors).zip(&mut self.v.tensors) {
            for (((p, g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
