use super::{ModelParams, NnError};

/// Running mean of squared gradients, one accumulator per trainable value.
#[derive(Debug, Clone, PartialEq)]
pub struct RmspropState {
    accumulators: Vec<Vec<f64>>,
    pub rho: f64,
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl RmspropState {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
    pub const DEFAULT_RHO: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-7;

    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        Self::with_hyperparameters(
            params,
            learning_rate,
            Self::DEFAULT_RHO,
            Self::DEFAULT_EPSILON,
        )
    }

    pub fn with_hyperparameters(
        params: &ModelParams,
        learning_rate: f64,
        rho: f64,
        epsilon: f64,
    ) -> Self {
        Self {
            accumulators: params
                .trainable()
                .iter()
                .map(|s| vec![0.0; s.len()])
                .collect(),
            rho,
            learning_rate,
            epsilon,
        }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accumulators
    }
}

/// `acc <- rho*acc + (1-rho)*g^2; param <- param - lr*g/(sqrt(acc) + eps)`.
pub fn rmsprop_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut RmspropState,
) -> Result<(), NnError> {
    let grad_slices = grads.trainable();
    let shapes_match = {
        let p = params.trainable();
        p.len() == grad_slices.len()
            && p.len() == state.accumulators.len()
            && p.iter()
                .zip(&grad_slices)
                .zip(&state.accumulators)
                .all(|((a, b), c)| a.len() == b.len() && a.len() == c.len())
    };
    if !shapes_match {
        return Err(NnError::ShapeMismatch);
    }
    let (rho, lr, eps) = (state.rho, state.learning_rate, state.epsilon);
    for ((param, grad), acc) in params
        .trainable_mut()
        .into_iter()
        .zip(grad_slices)
        .zip(&mut state.accumulators)
    {
        for ((w, &g), a) in param.iter_mut().zip(grad).zip(acc.iter_mut()) {
            *a = rho * *a + (1.0 - rho) * g * g;
            *w -= lr * g / (a.sqrt() + eps);
        }
    }
    Ok(())
}
