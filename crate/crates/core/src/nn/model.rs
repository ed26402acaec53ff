use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis, Zip};

use super::{ModelParams, NnError};
use crate::metrics::EmotionTriple;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct BatchNormCache {
    xhat: Array2<f64>,
    batch_mean: Array1<f64>,
    batch_var: Array1<f64>,
}

#[derive(Debug, Clone)]
struct LstmStep {
    input: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Activated gates, `n x 4u`, in `Gate` order.
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

#[derive(Debug, Clone)]
struct LstmCache {
    steps: Vec<LstmStep>,
}

/// Activations kept by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    training: bool,
    fingerprint: u64,
    batch: usize,
    steps: usize,
    bn: BatchNormCache,
    lstm: Vec<LstmCache>,
    trunk_in: Array2<f64>,
    trunk_out: Array2<f64>,
    heads_out: Array2<f64>,
}

impl ForwardCache {
    pub fn is_training(&self) -> bool {
        self.training
    }

    /// Per-feature mean and variance of the normalized batch (training mode)
    /// or the running statistics used (inference mode).
    pub fn batch_statistics(&self) -> (&Array1<f64>, &Array1<f64>) {
        (&self.bn.batch_mean, &self.bn.batch_var)
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `n x 3`: valence, arousal, dominance.
    pub predictions: Array2<f64>,
    pub cache: ForwardCache,
}

impl ForwardOutput {
    pub fn triples(&self) -> Vec<EmotionTriple> {
        self.predictions
            .rows()
            .into_iter()
            .map(|r| EmotionTriple::new(r[0], r[1], r[2]))
            .collect()
    }
}

/// Runs the network on `batch` (`n x T x d`).
///
/// In training mode batchnorm uses the batch statistics pooled over batch and
/// time; otherwise the running statistics. The parameters are not modified;
/// see [`ModelParams::update_running_stats`].
pub fn forward(
    p: &ModelParams,
    batch: &Array3<f64>,
    training: bool,
) -> Result<ForwardOutput, NnError> {
    let (n, t_len, d) = batch.dim();
    let arch = p.architecture();
    if d != arch.input_dim {
        return Err(NnError::DimensionMismatch(format!(
            "input has {d} features, model expects {}",
            arch.input_dim
        )));
    }
    if n == 0 || t_len == 0 {
        return Err(NnError::DimensionMismatch(format!(
            "empty batch ({n} sequences x {t_len} steps)"
        )));
    }

    // (n*T) x d, row index = i*T + t
    let flat = batch
        .to_shape((n * t_len, d))
        .map_err(|e| NnError::DimensionMismatch(e.to_string()))?
        .to_owned();
    let bn = &p.batchnorm;
    let (mean, var) = if training {
        let mean = flat.mean_axis(Axis(0)).expect("non-empty");
        let centered = &flat - &mean;
        let var = (&centered * &centered)
            .mean_axis(Axis(0))
            .expect("non-empty");
        (mean, var)
    } else {
        (bn.running_mean.clone(), bn.running_var.clone())
    };
    let inv_std = var.mapv(|v| 1.0 / (v + bn.epsilon).sqrt());
    let xhat = (&flat - &mean) * &inv_std;
    let normed = &xhat * &bn.gamma + &bn.beta;

    let mut seq: Vec<Array2<f64>> = (0..t_len)
        .map(|t| {
            let rows: Vec<usize> = (0..n).map(|i| i * t_len + t).collect();
            normed.select(Axis(0), &rows)
        })
        .collect();

    let mut lstm_caches = Vec::with_capacity(3);
    for layer in &p.lstm {
        let u = layer.units();
        let mut h = Array2::<f64>::zeros((n, u));
        let mut c = Array2::<f64>::zeros((n, u));
        let mut steps = Vec::with_capacity(t_len);
        let mut outputs = Vec::with_capacity(t_len);
        for (t, x_t) in seq.into_iter().enumerate() {
            let mut z = x_t.dot(&layer.kernel) + &layer.bias;
            if t > 0 {
                z += &h.dot(&layer.recurrent);
            }
            let mut gates = z;
            gates.slice_mut(s![.., 0..2 * u]).mapv_inplace(sigmoid);
            gates
                .slice_mut(s![.., 2 * u..3 * u])
                .mapv_inplace(f64::tanh);
            gates.slice_mut(s![.., 3 * u..]).mapv_inplace(sigmoid);
            let i_g = gates.slice(s![.., 0..u]);
            let f_g = gates.slice(s![.., u..2 * u]);
            let g_g = gates.slice(s![.., 2 * u..3 * u]);
            let o_g = gates.slice(s![.., 3 * u..]);
            let c_new = &f_g * &c + &i_g * &g_g;
            let tanh_c = c_new.mapv(f64::tanh);
            let h_new = &o_g * &tanh_c;
            steps.push(LstmStep {
                input: x_t,
                h_prev: h,
                c_prev: c,
                gates,
                tanh_c,
            });
            outputs.push(h_new.clone());
            h = h_new;
            c = c_new;
        }
        lstm_caches.push(LstmCache { steps });
        seq = outputs;
    }

    let trunk_in = seq.pop().expect("T >= 1");
    let trunk_out = trunk_in.dot(&p.trunk.weights) + &p.trunk.bias;
    let mut heads_out = Array2::zeros((n, 3));
    for (k, head) in p.heads.iter().enumerate() {
        let a = trunk_out.dot(&head.weights) + &head.bias;
        heads_out.column_mut(k).assign(&a.column(0).mapv(f64::tanh));
    }

    Ok(ForwardOutput {
        predictions: heads_out.clone(),
        cache: ForwardCache {
            training,
            fingerprint: if training { p.fingerprint() } else { 0 },
            batch: n,
            steps: t_len,
            bn: BatchNormCache {
                xhat,
                batch_mean: mean,
                batch_var: var,
            },
            lstm: lstm_caches,
            trunk_in,
            trunk_out,
            heads_out,
        },
    })
}

fn sum_rows(a: &Array2<f64>) -> Array1<f64> {
    a.sum_axis(Axis(0))
}

/// Gradients of the scalar loss whose derivative with respect to the
/// `n x 3` predictions is `dpred`. The returned container has the shapes of
/// `p`; its batchnorm running statistics are zero.
pub fn backward(
    p: &ModelParams,
    cache: &ForwardCache,
    dpred: ArrayView2<'_, f64>,
) -> Result<ModelParams, NnError> {
    if !cache.training {
        return Err(NnError::InferenceCache);
    }
    if cache.fingerprint != p.fingerprint() {
        return Err(NnError::StaleCache);
    }
    let n = cache.batch;
    let t_len = cache.steps;
    if dpred.dim() != (n, 3) {
        return Err(NnError::DimensionMismatch(format!(
            "dpred is {:?}, expected ({n}, 3)",
            dpred.dim()
        )));
    }
    let mut g = p.zeros_like();

    // heads
    let mut d_trunk_out = Array2::<f64>::zeros(cache.trunk_out.dim());
    for (k, head) in p.heads.iter().enumerate() {
        let y = cache.heads_out.column(k);
        let da = Zip::from(&dpred.column(k))
            .and(&y)
            .map_collect(|&dp, &y| dp * (1.0 - y * y))
            .insert_axis(Axis(1));
        g.heads[k].weights = cache.trunk_out.t().dot(&da);
        g.heads[k].bias = sum_rows(&da);
        d_trunk_out += &da.dot(&head.weights.t());
    }

    // trunk (linear)
    g.trunk.weights = cache.trunk_in.t().dot(&d_trunk_out);
    g.trunk.bias = sum_rows(&d_trunk_out);
    let d_last = d_trunk_out.dot(&p.trunk.weights.t());

    // LSTM stack, top to bottom. Only the top layer's final state feeds
    // the trunk; lower layers receive a gradient at every step.
    let top_units = p.lstm[2].units();
    let mut d_seq: Vec<Array2<f64>> = (0..t_len)
        .map(|t| {
            if t + 1 == t_len {
                d_last.clone()
            } else {
                Array2::zeros((n, top_units))
            }
        })
        .collect();
    for l in (0..3).rev() {
        let layer = &p.lstm[l];
        let lc = &cache.lstm[l];
        let u = layer.units();
        let mut dh_next = Array2::<f64>::zeros((n, u));
        let mut dc_next = Array2::<f64>::zeros((n, u));
        let mut d_inputs = vec![Array2::<f64>::zeros((n, layer.input_dim())); t_len];
        let gl = &mut g.lstm[l];
        for t in (0..t_len).rev() {
            let step = &lc.steps[t];
            let dh = &d_seq[t] + &dh_next;
            let i_g = step.gates.slice(s![.., 0..u]);
            let f_g = step.gates.slice(s![.., u..2 * u]);
            let g_g = step.gates.slice(s![.., 2 * u..3 * u]);
            let o_g = step.gates.slice(s![.., 3 * u..]);

            let d_o = &dh * &step.tanh_c;
            let dc = &dc_next + &(&dh * &o_g * &step.tanh_c.mapv(|v| 1.0 - v * v));

            let mut dz = Array2::<f64>::zeros((n, 4 * u));
            Zip::from(dz.slice_mut(s![.., 0..u]))
                .and(&dc)
                .and(&g_g)
                .and(&i_g)
                .for_each(|dz, &dc, &g, &i| *dz = dc * g * i * (1.0 - i));
            Zip::from(dz.slice_mut(s![.., u..2 * u]))
                .and(&dc)
                .and(&step.c_prev)
                .and(&f_g)
                .for_each(|dz, &dc, &cp, &f| *dz = dc * cp * f * (1.0 - f));
            Zip::from(dz.slice_mut(s![.., 2 * u..3 * u]))
                .and(&dc)
                .and(&i_g)
                .and(&g_g)
                .for_each(|dz, &dc, &i, &g| *dz = dc * i * (1.0 - g * g));
            Zip::from(dz.slice_mut(s![.., 3 * u..]))
                .and(&d_o)
                .and(&o_g)
                .for_each(|dz, &d, &o| *dz = d * o * (1.0 - o));

            gl.kernel += &step.input.t().dot(&dz);
            gl.bias += &sum_rows(&dz);
            if t > 0 {
                gl.recurrent += &step.h_prev.t().dot(&dz);
                dh_next = dz.dot(&layer.recurrent.t());
            }
            d_inputs[t] = dz.dot(&layer.kernel.t());
            dc_next = &dc * &f_g;
        }
        d_seq = d_inputs;
    }

    // batchnorm: only gamma and beta are trainable
    let d = p.architecture().input_dim;
    let mut d_normed = Array2::<f64>::zeros((n * t_len, d));
    for (t, dx) in d_seq.iter().enumerate() {
        for i in 0..n {
            d_normed.row_mut(i * t_len + t).assign(&dx.row(i));
        }
    }
    g.batchnorm.gamma = (&d_normed * &cache.bn.xhat).sum_axis(Axis(0));
    g.batchnorm.beta = d_normed.sum_axis(Axis(0));
    Ok(g)
}

impl ModelParams {
    /// Folds the batch statistics of a training-mode forward pass into the
    /// running statistics: `running = momentum * running + (1 - momentum) * batch`.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<(), NnError> {
        if !cache.training {
            return Err(NnError::InferenceCache);
        }
        let bn = &mut self.batchnorm;
        if cache.bn.batch_mean.len() != bn.running_mean.len() {
            return Err(NnError::ShapeMismatch);
        }
        let m = bn.momentum;
        Zip::from(&mut bn.running_mean)
            .and(&cache.bn.batch_mean)
            .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
        Zip::from(&mut bn.running_var)
            .and(&cache.bn.batch_var)
            .for_each(|r, &b| *r = m * *r + (1.0 - m) * b);
        Ok(())
    }
}
