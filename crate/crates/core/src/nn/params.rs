use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Architecture, NnError};

/// LSTM gate blocks, in the column order of the fused weight matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

impl BatchNormParams {
    pub const DEFAULT_EPSILON: f64 = 1e-5;
    pub const DEFAULT_MOMENTUM: f64 = 0.99;

    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
            epsilon: Self::DEFAULT_EPSILON,
            momentum: Self::DEFAULT_MOMENTUM,
        }
    }
}

/// One LSTM layer. The four gates are fused column-wise in
/// [`Gate`] order: `kernel` is `in x 4u`, `recurrent` is `u x 4u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub kernel: Array2<f64>,
    pub recurrent: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input: usize, units: usize) -> Self {
        Self {
            kernel: Array2::zeros((input, 4 * units)),
            recurrent: Array2::zeros((units, 4 * units)),
            bias: Array1::zeros(4 * units),
        }
    }

    pub fn units(&self) -> usize {
        self.recurrent.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.kernel.nrows()
    }

    /// `W_g`, `in x units`.
    pub fn input_weights(&self, gate: Gate) -> ArrayView2<'_, f64> {
        let u = self.units();
        let g = gate as usize;
        self.kernel.slice(s![.., g * u..(g + 1) * u])
    }

    /// `U_g`, `units x units`.
    pub fn recurrent_weights(&self, gate: Gate) -> ArrayView2<'_, f64> {
        let u = self.units();
        let g = gate as usize;
        self.recurrent.slice(s![.., g * u..(g + 1) * u])
    }

    /// `b_g`.
    pub fn gate_bias(&self, gate: Gate) -> ArrayView1<'_, f64> {
        let u = self.units();
        let g = gate as usize;
        self.bias.slice(s![g * u..(g + 1) * u])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
            activation,
        }
    }
}

/// Every tensor of the network. Also used as the container for gradients,
/// where the batchnorm running statistics stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub batchnorm: BatchNormParams,
    pub lstm: [LstmLayerParams; 3],
    pub trunk: DenseParams,
    pub heads: [DenseParams; 3],
}

impl ModelParams {
    /// All-zero weights with the batchnorm identity (gamma 1, running var 1).
    pub fn zeros(arch: &Architecture) -> Result<Self, NnError> {
        arch.validate()?;
        let lstm =
            [0, 1, 2].map(|l| LstmLayerParams::zeros(arch.lstm_input(l), arch.lstm_units[l]));
        Ok(Self {
            batchnorm: BatchNormParams::new(arch.input_dim),
            lstm,
            trunk: DenseParams::zeros(arch.lstm_units[2], arch.dense_units, Activation::Linear),
            heads: [0, 1, 2].map(|_| DenseParams::zeros(arch.dense_units, 1, Activation::Tanh)),
        })
    }

    /// Zero-filled container shaped like `self`, running statistics included.
    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(&self.architecture()).expect("valid architecture");
        z.batchnorm.gamma.fill(0.0);
        z.batchnorm.running_var.fill(0.0);
        z
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::new(
            self.batchnorm.gamma.len(),
            [0, 1, 2].map(|l| self.lstm[l].units()),
            self.trunk.bias.len(),
        )
    }

    /// Checks that every tensor matches the shapes implied by
    /// [`Self::architecture`].
    pub fn validate(&self) -> Result<(), NnError> {
        let arch = self.architecture();
        arch.validate()?;
        let reference = Self::zeros(&arch)?;
        for ((name, a), (_, b)) in self.named_tensors().iter().zip(reference.named_tensors()) {
            if a.len() != b.len() {
                return Err(NnError::DimensionMismatch(format!(
                    "{name}: {} values, expected {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        let bn = &self.batchnorm;
        if bn.epsilon <= 0.0 || !(0.0 < bn.momentum && bn.momentum < 1.0) {
            return Err(NnError::DimensionMismatch(
                "batchnorm epsilon must be > 0 and momentum in (0, 1)".into(),
            ));
        }
        for (l, layer) in self.lstm.iter().enumerate() {
            if layer.kernel.dim() != (arch.lstm_input(l), 4 * arch.lstm_units[l]) {
                return Err(NnError::DimensionMismatch(format!("lstm{} kernel", l + 1)));
            }
        }
        if self.trunk.activation != Activation::Linear
            || self.heads.iter().any(|h| h.activation != Activation::Tanh)
        {
            return Err(NnError::DimensionMismatch("unexpected activation".into()));
        }
        Ok(())
    }

    /// Trainable tensors in canonical order, each as a flat row-major slice.
    pub fn named_trainable(&self) -> Vec<(String, &[f64])> {
        fn flat1(a: &Array1<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        fn flat2(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        let mut out = vec![
            ("batchnorm.gamma".to_string(), flat1(&self.batchnorm.gamma)),
            ("batchnorm.beta".to_string(), flat1(&self.batchnorm.beta)),
        ];
        for (l, layer) in self.lstm.iter().enumerate() {
            out.push((format!("lstm{}.kernel", l + 1), flat2(&layer.kernel)));
            out.push((format!("lstm{}.recurrent", l + 1), flat2(&layer.recurrent)));
            out.push((format!("lstm{}.bias", l + 1), flat1(&layer.bias)));
        }
        out.push(("trunk.weights".to_string(), flat2(&self.trunk.weights)));
        out.push(("trunk.bias".to_string(), flat1(&self.trunk.bias)));
        for (name, head) in ["valence", "arousal", "dominance"].iter().zip(&self.heads) {
            out.push((format!("head.{name}.weights"), flat2(&head.weights)));
            out.push((format!("head.{name}.bias"), flat1(&head.bias)));
        }
        out
    }

    /// Trainable tensors plus the batchnorm running statistics.
    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = self.named_trainable();
        out.insert(
            2,
            (
                "batchnorm.running_mean".to_string(),
                self.batchnorm
                    .running_mean
                    .as_slice()
                    .expect("standard layout"),
            ),
        );
        out.insert(
            3,
            (
                "batchnorm.running_var".to_string(),
                self.batchnorm
                    .running_var
                    .as_slice()
                    .expect("standard layout"),
            ),
        );
        out
    }

    pub fn trainable(&self) -> Vec<&[f64]> {
        self.named_trainable().into_iter().map(|(_, s)| s).collect()
    }

    /// Mutable trainable tensors, same order as [`Self::trainable`].
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(17);
        out.push(
            self.batchnorm
                .gamma
                .as_slice_mut()
                .expect("standard layout"),
        );
        out.push(self.batchnorm.beta.as_slice_mut().expect("standard layout"));
        for layer in &mut self.lstm {
            out.push(layer.kernel.as_slice_mut().expect("standard layout"));
            out.push(layer.recurrent.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.trunk.weights.as_slice_mut().expect("standard layout"));
        out.push(self.trunk.bias.as_slice_mut().expect("standard layout"));
        for head in &mut self.heads {
            out.push(head.weights.as_slice_mut().expect("standard layout"));
            out.push(head.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable().iter().map(|s| s.len()).sum()
    }

    /// 64-bit FNV-1a over the bits of every trainable value.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for slice in self.trainable() {
            for v in slice {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn is_finite(&self) -> bool {
        self.trainable()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-limit..limit))
}

/// Glorot-uniform weights from a seeded ChaCha8 stream; forget-gate bias 1,
/// other biases 0, batchnorm identity.
pub fn init_params(arch: &Architecture, seed: u64) -> Result<ModelParams, NnError> {
    let mut p = ModelParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut p.lstm {
        let (input, four_u) = layer.kernel.dim();
        let u = four_u / 4;
        layer.kernel = glorot(&mut rng, input, four_u);
        layer.recurrent = glorot(&mut rng, u, four_u);
        layer
            .bias
            .slice_mut(s![
                Gate::Forget as usize * u..(Gate::Forget as usize + 1) * u
            ])
            .fill(1.0);
    }
    p.trunk.weights = glorot(&mut rng, arch.lstm_units[2], arch.dense_units);
    for head in &mut p.heads {
        head.weights = glorot(&mut rng, arch.dense_units, 1);
    }
    Ok(p)
}
