//! Adaptive-moment gradient update with bias correction.

use super::net::NetParams;

pub struct Adam {
    m: NetParams,
    v: NetParams,
    step: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(nodes: usize) -> Self {
        Self {
            m: NetParams::zeros(nodes),
            v: NetParams::zeros(nodes),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn update(&mut self, params: &mut NetParams, grad: &NetParams, lr: f64) {
        self.step += 1;
        let b1 = self.beta1;
        let b2 = self.beta2;
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        let eps = self.epsilon;
        params.visit_adam(grad, &mut self.m, &mut self.v, |p, g, m, v| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Adam on a convex quadratic drives the parameters to the minimum.
    #[test]
    fn minimizes_a_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = NetParams::glorot(3, &mut rng);
        let mut opt = Adam::new(3);
        for _ in 0..4000 {
            // loss = 0.5 * sum (p - 0.25)^2 over every coordinate
            let mut g = NetParams::zeros(3);
            let flat: Vec<f64> = p.to_flat().iter().map(|x| x - 0.25).collect();
            g.assign_from_flat(&flat);
            opt.update(&mut p, &g, 0.01);
        }
        for x in p.to_flat() {
            assert!((x - 0.25).abs() < 1e-6, "coordinate {x} not at the minimum");
        }
    }
}
