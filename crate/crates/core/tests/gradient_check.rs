//! Central finite differences against analytic gradients.

use dser_core::losses::loss_gradient;
use dser_core::nn::{backward, forward, init_params, ModelParams};
use dser_core::{Architecture, BatchPair, LossKind, MultitaskWeights};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Fourth-order central stencil: with h = 1e-3 both truncation and rounding
// error stay near 1e-13, so even 1e-8-sized gradients are resolved.
const H: f64 = 1e-3;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn central_difference(f: impl Fn(f64) -> f64) -> f64 {
    (8.0 * (f(H) - f(-H)) - (f(2.0 * H) - f(-2.0 * H))) / (12.0 * H)
}

struct Problem {
    batch: Array3<f64>,
    labels: Array2<f64>,
    weights: MultitaskWeights,
}

impl Problem {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            batch: Array3::from_shape_simple_fn((3, 2, 6), || rng.gen_range(-1.5..1.5)),
            labels: Array2::from_shape_simple_fn((3, 3), || rng.gen_range(-0.9..0.9)),
            weights: MultitaskWeights::from_alpha_beta(0.2, 0.5),
        }
    }

    fn loss(&self, p: &ModelParams, kind: LossKind) -> f64 {
        let pred = forward(p, &self.batch, true).unwrap().predictions;
        let w = self.weights.as_array();
        (0..3)
            .map(|k| {
                let x = pred.column(k).to_vec();
                let y = self.labels.column(k).to_vec();
                w[k] * kind.value(&BatchPair::new(&x, &y).unwrap())
            })
            .sum()
    }

    fn analytic(&self, p: &ModelParams, kind: LossKind) -> ModelParams {
        let out = forward(p, &self.batch, true).unwrap();
        let w = self.weights.as_array();
        let mut dpred = Array2::zeros((3, 3));
        for k in 0..3 {
            let x = out.predictions.column(k).to_vec();
            let y = self.labels.column(k).to_vec();
            let g = loss_gradient(kind, &BatchPair::new(&x, &y).unwrap()).unwrap();
            for (i, gi) in g.into_iter().enumerate() {
                dpred[[i, k]] = w[k] * gi;
            }
        }
        backward(p, &out.cache, dpred.view()).unwrap()
    }
}

fn check_model(kind: LossKind) {
    let arch = Architecture::new(6, [5, 5, 5], 5);
    let p = init_params(&arch, 17).unwrap();
    let prob = Problem::new(3);
    let grads = prob.analytic(&p, kind);
    let names: Vec<String> = p.named_trainable().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grads.trainable().into_iter().map(<[f64]>::to_vec).collect();

    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for (t, g_t) in analytic.iter().enumerate() {
        for (i, &g) in g_t.iter().enumerate() {
            let numeric = central_difference(|dh| {
                let mut q = p.clone();
                q.trainable_mut()[t][i] += dh;
                prob.loss(&q, kind)
            });
            let e = rel_err(g, numeric);
            if e > worst.0 {
                worst = (
                    e,
                    format!("{}[{i}]: analytic {g:e} numeric {numeric:e}", names[t]),
                );
            }
            checked += 1;
        }
    }
    assert_eq!(checked, p.trainable_count());
    assert!(
        worst.0 < TOL,
        "{kind}: worst relative error {:e} at {}",
        worst.0,
        worst.1
    );
}

#[test]
fn model_gradients_mse() {
    check_model(LossKind::Mse);
}

#[test]
fn model_gradients_mae() {
    check_model(LossKind::Mae);
}

#[test]
fn model_gradients_cccl() {
    check_model(LossKind::Cccl);
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-6;
    for _ in 0..100 {
        let n = rng.gen_range(2..=16);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for kind in LossKind::ALL {
            let g = loss_gradient(kind, &BatchPair::new(&x, &y).unwrap()).unwrap();
            for i in 0..n {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let numeric = (kind.value(&BatchPair::new(&xp, &y).unwrap())
                    - kind.value(&BatchPair::new(&xm, &y).unwrap()))
                    / (2.0 * h);
                let e = (g[i] - numeric).abs() / g[i].abs().max(numeric.abs()).max(1e-6);
                assert!(e < 1e-5, "{kind} n={n} i={i}: {} vs {numeric}", g[i]);
            }
        }
    }
}
