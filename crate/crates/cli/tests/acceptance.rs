//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any does.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dser_core::experiment::{
    loso_split, scale_labels, synthetic_corpus, train_observed, weight_lattice, Utterance,
};
use dser_core::features::{extract_paa_hsf, extract_paa_llds, pool_hsf, PAA_LLD_COUNT};
use dser_core::losses::{ccc, loss_gradient, multitask_total};
use dser_core::nn::{backward, forward, init_params, ModelParams};
use dser_core::{
    Architecture, BatchPair, EmotionTriple, FeatureSet, FeatureVector, FrameSpec, LossKind,
    MultitaskWeights, TrainConfig, Waveform,
};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

// `!cond` on purpose: a NaN comparison must fail the check
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-2.0..2.0)).collect()
}

fn pair<'a>(x: &'a [f64], y: &'a [f64]) -> BatchPair<'a> {
    BatchPair::new(x, y).expect("valid batch")
}

/// Two-pass population moments, written out independently of the library.
fn oracle_ccc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|v| (v - mx) * (v - mx)).sum::<f64>() / n;
    let vy = y.iter().map(|v| (v - my) * (v - my)).sum::<f64>() / n;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / n;
    2.0 * cov / (vx + vy + (mx - my) * (mx - my))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

fn criterion_1() -> Check {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.gen_range(2..=64);
        let x = random_vec(&mut r, n);
        let y = random_vec(&mut r, n);
        let got = ccc(&pair(&x, &y));
        let want = oracle_ccc(&x, &y);
        let rel = (got - want).abs() / want.abs();
        worst = worst.max(rel);
        ensure!(
            rel <= 1e-12,
            "n={n}: ccc {got} vs oracle {want} (rel {rel:e})"
        );
    }
    let worked = ccc(&pair(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]));
    ensure!(
        (worked - 8.0 / 22.0).abs() <= 1e-12 * (8.0 / 22.0),
        "ccc([1,2,3],[2,4,6]) = {worked}, expected 8/22"
    );
    Ok(format!(
        "1000 pairs, worst relative error {worst:.1e}; worked example = 8/22"
    ))
}

/// Fourth-order central difference of `f` at 0.
fn central_difference(h: f64, f: impl Fn(f64) -> f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn model_loss(
    p: &ModelParams,
    x: &Array3<f64>,
    y: &Array2<f64>,
    w: [f64; 3],
    kind: LossKind,
) -> f64 {
    let pred = forward(p, x, true).expect("forward").predictions;
    (0..3)
        .map(|k| {
            let (pk, yk) = (pred.column(k).to_vec(), y.column(k).to_vec());
            w[k] * kind.value(&pair(&pk, &yk))
        })
        .sum()
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst_loss: f64 = 0.0;
    for _ in 0..100 {
        let n = r.gen_range(2..=16);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        for kind in LossKind::ALL {
            let g = loss_gradient(kind, &pair(&x, &y)).map_err(|e| e.to_string())?;
            for i in 0..n {
                let numeric = central_difference(1e-4, |dh| {
                    let mut xp = x.clone();
                    xp[i] += dh;
                    kind.value(&pair(&xp, &y))
                });
                let e = rel_err(g[i], numeric, 1e-8);
                worst_loss = worst_loss.max(e);
                ensure!(
                    e < 1e-4,
                    "{kind} n={n} i={i}: analytic {} numeric {numeric}",
                    g[i]
                );
            }
        }
    }

    let arch = Architecture::new(6, [5, 5, 5], 5);
    let p = init_params(&arch, 17).map_err(|e| e.to_string())?;
    let x = Array3::from_shape_simple_fn((3, 2, 6), || r.gen_range(-1.5..1.5));
    let y = Array2::from_shape_simple_fn((3, 3), || r.gen_range(-0.9..0.9));
    let w = MultitaskWeights::from_alpha_beta(0.2, 0.5).as_array();
    let mut worst_model: f64 = 0.0;
    let mut checked = 0;
    for kind in LossKind::ALL {
        let out = forward(&p, &x, true).map_err(|e| e.to_string())?;
        let mut dpred = Array2::zeros((3, 3));
        for k in 0..3 {
            let (pk, yk) = (out.predictions.column(k).to_vec(), y.column(k).to_vec());
            let g = loss_gradient(kind, &pair(&pk, &yk)).map_err(|e| e.to_string())?;
            for (i, gi) in g.into_iter().enumerate() {
                dpred[[i, k]] = w[k] * gi;
            }
        }
        let grads = backward(&p, &out.cache, dpred.view()).map_err(|e| e.to_string())?;
        for (t, g_t) in grads.trainable().iter().enumerate() {
            for (i, &g) in g_t.iter().enumerate() {
                let numeric = central_difference(1e-3, |dh| {
                    let mut q = p.clone();
                    q.trainable_mut()[t][i] += dh;
                    model_loss(&q, &x, &y, w, kind)
                });
                let e = rel_err(g, numeric, 1e-8);
                worst_model = worst_model.max(e);
                ensure!(
                    e < 1e-4,
                    "{kind} tensor {t} index {i}: analytic {g:e} numeric {numeric:e}"
                );
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "losses worst rel {worst_loss:.1e}; model ({checked} partials) worst rel {worst_model:.1e}; {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Check {
    let mut r = rng(3);
    for trial in 0..100 {
        let n = r.gen_range(2..=64);
        let x = random_vec(&mut r, n);
        ensure!(x.iter().any(|v| *v != x[0]), "constant draw");
        let mut prev = f64::INFINITY;
        for step in 1..=10 {
            let c = f64::from(step) / 10.0;
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let score = ccc(&pair(&x, &shifted));
            ensure!(
                score < prev,
                "trial {trial}: ccc(x, x+{c}) = {score} not below {prev}"
            );
            prev = score;
        }
    }
    for _ in 0..1000 {
        let n = r.gen_range(2..=64);
        let x = random_vec(&mut r, n);
        let y: Vec<f64> = random_vec(&mut r, n)
            .iter()
            .map(|v| 0.5 * v + r.gen_range(-1.0..1.0))
            .collect();
        let (c, p) = (ccc(&pair(&x, &y)), pearson(&x, &y));
        ensure!(
            c.abs() <= p.abs() * (1.0 + 1e-12),
            "|ccc| {c} > |pearson| {p}"
        );
    }
    Ok("monotone in shift on 100 series; |ccc| <= |r| on 1000 pairs".into())
}

fn criterion_4() -> Check {
    let w = MultitaskWeights::from_alpha_beta(0.1, 0.5);
    let total = multitask_total(0.2, 0.4, 0.6, &w);
    ensure!(
        (total - 0.46).abs() < 1e-12,
        "weighted total {total}, expected 0.46"
    );
    let even = MultitaskWeights::default();
    let mean = multitask_total(0.2, 0.4, 0.6, &even);
    ensure!(
        (mean - 0.4).abs() < 1e-12,
        "equal weights give {mean}, expected the mean 0.4"
    );
    let sum = multitask_total(0.2, 0.4, 0.6, &MultitaskWeights::sum_form());
    ensure!(
        (sum - 3.0 * mean).abs() < 1e-12,
        "sum form {sum} inconsistent with mean {mean}"
    );
    let cells = weight_lattice().len();
    ensure!(cells == 66, "lattice has {cells} cells");
    Ok(format!(
        "total 0.46, mean-consistent identity, {cells} grid cells"
    ))
}

struct BenchRun {
    csv: String,
    elapsed: Duration,
}

fn run_synth_bench(out: &Path) -> Result<BenchRun, String> {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_dser"))
        .args(["synth-bench", "--seed", "0", "--repeats", "5", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !o.status.success() {
        return Err(format!(
            "synth-bench exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let csv = std::fs::read_to_string(out.join("synth_bench.csv")).map_err(|e| e.to_string())?;
    Ok(BenchRun { csv, elapsed })
}

fn criterion_5(run: &Result<BenchRun, String>) -> Check {
    let run = run.as_ref().map_err(Clone::clone)?;
    let lines: Vec<Vec<&str>> = run
        .csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let results: Vec<&Vec<&str>> = lines.iter().filter(|l| l[0] == "result").collect();
    ensure!(results.len() == 15, "{} result rows", results.len());
    let mean = |loss: &str| -> Result<f64, String> {
        let v: Vec<f64> = results
            .iter()
            .filter(|l| l[2] == loss)
            .map(|l| {
                l[6].parse::<f64>()
                    .map_err(|_| format!("{loss} row failed: {}", l.join(",")))
            })
            .collect::<Result<_, _>>()?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    };
    let (ccc_m, mse_m, mae_m) = (mean("CCCL")?, mean("MSE")?, mean("MAE")?);
    let summary = lines
        .iter()
        .find(|l| l[0] == "summary")
        .ok_or("no summary row")?;
    let tally: Vec<usize> = summary[9..15]
        .iter()
        .map(|v| v.parse().unwrap_or(0))
        .collect();
    let (wins_mse, wins_mae) = (tally[0], tally[3]);
    let line = format!(
        "mean ccc_mean CCCL {ccc_m:.3} / MSE {mse_m:.3} / MAE {mae_m:.3}; strict wins {wins_mse}/5 vs MSE, \
         {wins_mae}/5 vs MAE; {:.0}s",
        run.elapsed.as_secs_f64()
    );
    ensure!(ccc_m >= mse_m - 0.02, "{line}: CCCL below MSE - 0.02");
    ensure!(ccc_m >= mae_m - 0.02, "{line}: CCCL below MAE - 0.02");
    ensure!(wins_mse >= 3, "{line}: fewer than 3 wins vs MSE");
    ensure!(wins_mae >= 3, "{line}: fewer than 3 wins vs MAE");
    ensure!(
        run.elapsed < Duration::from_secs(600),
        "{line}: over 10 minutes"
    );
    Ok(line)
}

fn criterion_6() -> Check {
    // 10039 utterances, 2170 of them in the final session
    let fv = FeatureVector::new(vec![0.0; 4], FeatureSet::External).map_err(|e| e.to_string())?;
    let labels = EmotionTriple::new(3.0, 3.0, 3.0);
    let corpus: Vec<Utterance> = (0..10_039)
        .map(|i| {
            let session = if i < 7869 { (i % 4) as u32 + 1 } else { 5 };
            Utterance::new(format!("u{i:05}"), session, fv.clone(), labels).expect("valid")
        })
        .collect();
    let split = loso_split(&corpus, 5, 0.2, 0).map_err(|e| e.to_string())?;
    let rest = split.train.len() + split.validation.len();
    ensure!(
        rest == 7869 && split.test.len() == 2170,
        "{rest}/{}",
        split.test.len()
    );
    ensure!(
        split.validation.len() == 1573,
        "validation {}",
        split.validation.len()
    );

    let scaled = scale_labels(EmotionTriple::new(1.0, 3.0, 5.0)).map_err(|e| e.to_string())?;
    ensure!(
        scaled.as_array() == [-1.0, 0.0, 1.0],
        "scaled {:?}",
        scaled.as_array()
    );

    let corpus = synthetic_corpus(6, 500, 20).map_err(|e| e.to_string())?;
    let split = loso_split(&corpus, 5, 0.2, 6).map_err(|e| e.to_string())?;
    let test_ids: HashSet<String> = split.test.iter().map(|u| u.id.clone()).collect();
    let mut seen = 0usize;
    let mut leaked = Vec::new();
    let (_, result) = train_observed(&split, &TrainConfig::default(), |_, ids| {
        seen += ids.len();
        leaked.extend(
            ids.iter()
                .filter(|id| test_ids.contains(**id))
                .map(|id| id.to_string()),
        );
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        leaked.is_empty(),
        "test ids in training batches: {leaked:?}"
    );
    let epochs = result.history.len();
    ensure!(
        seen == epochs * split.train.len(),
        "observed {seen} ids over {epochs} epochs"
    );
    Ok(format!(
        "7869/2170 (val 1573); labels exact; {seen} training ids over {epochs} epochs, none from the test session"
    ))
}

fn criterion_7() -> Check {
    let sr = 16_000u32;
    let mut r = rng(7);
    let noise: Vec<f64> = (0..sr).map(|_| r.gen_range(-0.5..0.5)).collect();
    let wave = Waveform::new(noise, sr).map_err(|e| e.to_string())?;
    let spec = FrameSpec::default_for(sr).map_err(|e| e.to_string())?;
    let llds = extract_paa_llds(&wave, spec).map_err(|e| e.to_string())?;
    ensure!(
        llds.values().ncols() == PAA_LLD_COUNT,
        "{} LLD columns",
        llds.values().ncols()
    );
    let hsf = extract_paa_hsf(&wave, spec).map_err(|e| e.to_string())?;
    ensure!(hsf.len() == 68, "{} HSFs", hsf.len());

    let pooled = pool_hsf(&llds).map_err(|e| e.to_string())?;
    let m = llds.values();
    let frames = m.nrows() as f64;
    for c in 0..PAA_LLD_COUNT {
        let col = m.column(c);
        let mean = col.iter().sum::<f64>() / frames;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / frames).sqrt();
        let (pm, ps) = (pooled.means()[c], pooled.stds()[c]);
        ensure!(
            (pm - mean).abs() <= 1e-12 * mean.abs().max(1.0),
            "column {c} mean {pm} vs {mean}"
        );
        ensure!(
            (ps - std).abs() <= 1e-12 * std.max(1.0),
            "column {c} std {ps} vs {std}"
        );
    }

    let tone: Vec<f64> = (0..sr)
        .map(|i| (2.0 * PI * 1000.0 * f64::from(i) / f64::from(sr)).sin())
        .collect();
    let tone = Waveform::new(tone, sr).map_err(|e| e.to_string())?;
    let centroids = extract_paa_llds(&tone, spec)
        .map_err(|e| e.to_string())?
        .column("spectral_centroid")
        .ok_or("no centroid column")?;
    let bin = f64::from(sr) / spec.frame_length() as f64;
    let worst = centroids
        .iter()
        .map(|c| (c - 1000.0).abs())
        .fold(0.0, f64::max);
    ensure!(worst <= bin, "centroid off by {worst} Hz (bin {bin} Hz)");
    Ok(format!("34 LLDs, 68 HSFs, pooling exact to 1e-12, 1 kHz centroid within {worst:.2} Hz (bin {bin} Hz)"))
}

fn criterion_8(first: &Result<BenchRun, String>, second: &Result<BenchRun, String>) -> Check {
    let a = first.as_ref().map_err(Clone::clone)?;
    let b = second.as_ref().map_err(Clone::clone)?;
    ensure!(a.csv == b.csv, "synth-bench CSVs differ");
    Ok(format!(
        "two synth-bench runs, {} identical bytes",
        a.csv.len()
    ))
}

fn run(name: &str, f: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {name}: {why}");
            false
        }
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let first = run_synth_bench(&dir.path().join("a"));
    let second = run_synth_bench(&dir.path().join("b"));

    let results = [
        run("criterion 1 (CCC oracle)", criterion_1),
        run("criterion 2 (gradients)", criterion_2),
        run("criterion 3 (bias penalty)", criterion_3),
        run("criterion 4 (multitask weights)", criterion_4),
        run("criterion 5 (CCCL vs MSE/MAE)", || criterion_5(&first)),
        run("criterion 6 (protocol)", criterion_6),
        run("criterion 7 (features)", criterion_7),
        run("criterion 8 (determinism)", || criterion_8(&first, &second)),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
