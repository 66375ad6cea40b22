use super::network::{LayerGrads, LayerParams};
use super::tensor::Tensor;

/// Adam with standard bias correction. The moment tensors mirror the
/// parameter layout of the network they update.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<LayerParams>,
    second_moment: Vec<LayerParams>,
}

impl AdamState {
    pub fn new(params: &[LayerParams], learning_rate: f64) -> AdamState {
        AdamState {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: params.iter().map(LayerParams::zeros_like).collect(),
            second_moment: params.iter().map(LayerParams::zeros_like).collect(),
        }
    }

    /// m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;
    /// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    pub fn step(&mut self, params: &mut [LayerParams], grads: &[LayerGrads]) {
        assert_eq!(params.len(), grads.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let cfg = (self.learning_rate, self.beta1, self.beta2, self.epsilon);
        for i in 0..params.len() {
            update_tensor(
                params[i].weight.as_mut(),
                grads[i].weight.as_ref(),
                self.first_moment[i].weight.as_mut(),
                self.second_moment[i].weight.as_mut(),
                cfg, bc1, bc2,
            );
            update_tensor(
                params[i].bias.as_mut(),
                grads[i].bias.as_ref(),
                self.first_moment[i].bias.as_mut(),
                self.second_moment[i].bias.as_mut(),
                cfg, bc1, bc2,
            );
        }
    }
}

fn update_tensor(
    param: Option<&mut Tensor>,
    grad: Option<&Tensor>,
    m: Option<&mut Tensor>,
    v: Option<&mut Tensor>,
    (lr, beta1, beta2, epsilon): (f64, f64, f64, f64),
    bc1: f64,
    bc2: f64,
) {
    let (Some(param), Some(grad), Some(m), Some(v)) = (param, grad, m, v) else {
        return;
    };
    for i in 0..param.data.len() {
        let g = grad.data[i];
        m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
        v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
        let m_hat = m.data[i] / bc1;
        let v_hat = v.data[i] / bc2;
        param.data[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}
