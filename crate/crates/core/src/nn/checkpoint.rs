//! JSON checkpoints: a format version, the architecture, the batchnorm
//! scalars and every tensor as a row-major array.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Architecture, ModelParams, NnError};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    architecture: Architecture,
    batchnorm_epsilon: f64,
    batchnorm_momentum: f64,
    tensors: Vec<Tensor>,
}

fn shapes(p: &ModelParams) -> Vec<Vec<usize>> {
    let mut out = vec![
        vec![p.batchnorm.gamma.len()],
        vec![p.batchnorm.beta.len()],
        vec![p.batchnorm.running_mean.len()],
        vec![p.batchnorm.running_var.len()],
    ];
    for l in &p.lstm {
        out.push(l.kernel.shape().to_vec());
        out.push(l.recurrent.shape().to_vec());
        out.push(vec![l.bias.len()]);
    }
    out.push(p.trunk.weights.shape().to_vec());
    out.push(vec![p.trunk.bias.len()]);
    for h in &p.heads {
        out.push(h.weights.shape().to_vec());
        out.push(vec![h.bias.len()]);
    }
    out
}

pub fn checkpoint_json(p: &ModelParams) -> Result<String, NnError> {
    let tensors = p
        .named_tensors()
        .into_iter()
        .zip(shapes(p))
        .map(|((name, data), shape)| Tensor {
            name,
            shape,
            data: data.to_vec(),
        })
        .collect();
    let doc = CheckpointDoc {
        format_version: CHECKPOINT_FORMAT_VERSION,
        architecture: p.architecture(),
        batchnorm_epsilon: p.batchnorm.epsilon,
        batchnorm_momentum: p.batchnorm.momentum,
        tensors,
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn save_checkpoint(p: &ModelParams, path: impl AsRef<Path>) -> Result<(), NnError> {
    std::fs::write(path, checkpoint_json(p)?)?;
    Ok(())
}

fn take<'a>(tensors: &'a [Tensor], name: &str, shape: &[usize]) -> Result<&'a [f64], NnError> {
    let t = tensors
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {name}")))?;
    if t.shape != shape {
        return Err(NnError::Checkpoint(format!(
            "{name}: shape {:?}, architecture implies {shape:?}",
            t.shape
        )));
    }
    if t.data.len() != shape.iter().product::<usize>() {
        return Err(NnError::Checkpoint(format!(
            "{name}: {} values for shape {shape:?}",
            t.data.len()
        )));
    }
    if t.data.iter().any(|v| !v.is_finite()) {
        return Err(NnError::Checkpoint(format!("{name}: non-finite value")));
    }
    Ok(&t.data)
}

pub fn checkpoint_from_json(text: &str) -> Result<ModelParams, NnError> {
    let doc: CheckpointDoc = serde_json::from_str(text)?;
    if doc.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "format version {} is not supported",
            doc.format_version
        )));
    }
    let mut p =
        ModelParams::zeros(&doc.architecture).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    p.batchnorm.epsilon = doc.batchnorm_epsilon;
    p.batchnorm.momentum = doc.batchnorm_momentum;
    let expected: Vec<(String, Vec<usize>)> = p
        .named_tensors()
        .into_iter()
        .map(|(n, _)| n)
        .zip(shapes(&p))
        .collect();
    let mut loaded = Vec::with_capacity(expected.len());
    for (name, shape) in &expected {
        loaded.push(take(&doc.tensors, name, shape)?.to_vec());
    }
    let mut it = loaded.into_iter();
    let mut v1 = |a: &mut Array1<f64>| *a = Array1::from(it.next().expect("count"));
    v1(&mut p.batchnorm.gamma);
    v1(&mut p.batchnorm.beta);
    v1(&mut p.batchnorm.running_mean);
    v1(&mut p.batchnorm.running_var);
    let mut shaped = expected.iter().skip(4).map(|(_, s)| s.clone());
    let mut next = || (it.next().expect("count"), shaped.next().expect("count"));
    let m2 = |(data, shape): (Vec<f64>, Vec<usize>)| {
        Array2::from_shape_vec((shape[0], shape[1]), data).expect("validated shape")
    };
    for l in 0..3 {
        p.lstm[l].kernel = m2(next());
        p.lstm[l].recurrent = m2(next());
        p.lstm[l].bias = Array1::from(next().0);
    }
    p.trunk.weights = m2(next());
    p.trunk.bias = Array1::from(next().0);
    for h in 0..3 {
        p.heads[h].weights = m2(next());
        p.heads[h].bias = Array1::from(next().0);
    }
    p.validate()
        .map_err(|e| NnError::Checkpoint(e.to_string()))?;
    Ok(p)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams, NnError> {
    checkpoint_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;

    #[test]
    fn json_round_trip_is_exact() {
        let mut p = init_params(&Architecture::new(4, [3, 2, 3], 5), 11).unwrap();
        p.batchnorm.running_mean[1] = 0.1 + 0.2;
        let back = checkpoint_from_json(&checkpoint_json(&p).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn broken_chaining_rejected() {
        let p = init_params(&Architecture::new(4, [3, 2, 3], 5), 11).unwrap();
        let text = checkpoint_json(&p).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["architecture"]["lstm_units"][1] = serde_json::json!(4);
        let err = checkpoint_from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, NnError::Checkpoint(_)), "{err}");

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["format_version"] = serde_json::json!(99);
        assert!(checkpoint_from_json(&doc.to_string()).is_err());
        assert!(checkpoint_from_json("{}").is_err());
    }
}
