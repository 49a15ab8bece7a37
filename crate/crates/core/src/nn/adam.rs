use crate::error::{shape_err, Error, Result};
use crate::nn::Mlp;

/// Bias-corrected adaptive-moment optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Mlp,
    second: Mlp,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &Mlp) -> Self {
        Self {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One descent step along `grads`. Non-finite gradients are rejected before
    /// anything is modified.
    pub fn step(&mut self, params: &mut Mlp, grads: &Mlp, lr: f64) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(&self.first) {
            return Err(shape_err(
                format!("{:?}", params.spec()),
                format!("{:?}", grads.spec()),
            ));
        }
        if let Some(bad) = grads.params().find(|g| !g.is_finite()) {
            return Err(Error::Training(format!("non-finite gradient {bad}")));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let moments = self.first.params_mut().zip(self.second.params_mut());
        for ((p, g), (m, v)) in params.params_mut().zip(grads.params()).zip(moments) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Mlp, max_norm: f64) -> f64 {
    let norm = grads.params().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.params_mut().for_each(|g| *g *= s);
    }
    norm
}
