mod args;
mod corpus;
mod scatter;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use dser_core::experiment::{
    grid_search_weights, loso_split, matrix_csv, predict, run_matrix, select_best, synth_bench,
    train, MatrixPart,
};
use dser_core::features::write_feature_csv;
use dser_core::metrics::{evaluate, REPORT_CSV_HEADER};
use dser_core::nn::{load_checkpoint, save_checkpoint};
use dser_core::{
    DatasetSplit, EmotionTriple, ExperimentError, FeatureSet, LossKind, MultitaskWeights,
    TrainConfig, Utterance,
};
use serde::Deserialize;

use args::{Cli, Command, DataArgs, TrainOpts};
use corpus::{load_corpus, read_manifest_file, wav_base, Corpus};
use scatter::{scatter_csv, scatter_svg, ScatterPoint};

/// Failure classes, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments or configuration: exit 2.
    Usage(String),
    /// Unusable data or a failed run: exit 1.
    Data(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(_) | ExperimentError::UnknownSession(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Whether some items (files, cells, rows) failed while the rest completed.
type Partial = bool;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::SynthBench(a) => cmd_synth_bench(a),
        Command::Scatter(a) => cmd_scatter(a),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn report_failures(failures: &[String]) -> Partial {
    for f in failures {
        eprintln!("skipped {f}");
    }
    !failures.is_empty()
}

fn load_config(path: Option<&Path>) -> Result<TrainConfig, CliError> {
    let Some(path) = path else {
        return Ok(TrainConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn weights_from(alpha: f64, beta: f64) -> Result<MultitaskWeights, CliError> {
    let ok = |w: f64| (0.0..=1.0).contains(&w);
    if !ok(alpha) || !ok(beta) || alpha + beta > 1.0 + 1e-12 {
        return Err(CliError::Usage(format!(
            "alpha={alpha}, beta={beta}: need alpha, beta >= 0 and alpha + beta <= 1"
        )));
    }
    Ok(MultitaskWeights::from_alpha_beta(alpha, beta))
}

fn train_config(opts: &TrainOpts) -> Result<TrainConfig, CliError> {
    let mut cfg = load_config(opts.config.as_deref())?;
    if let Some(loss) = opts.loss {
        cfg.loss = loss;
    }
    if let (Some(a), Some(b)) = (opts.alpha, opts.beta) {
        cfg.weights = weights_from(a, b)?;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn split_corpus(data: &DataArgs, seed: u64) -> Result<(DatasetSplit, Partial), CliError> {
    let Corpus {
        utterances,
        failures,
    } = load_corpus(&data.manifest, &data.features, data.wav_dir.as_deref())?;
    let partial = report_failures(&failures);
    let split = loso_split(&utterances, data.test_session, data.val_fraction, seed)?;
    Ok((split, partial))
}

fn feature_set_name(utts: &[Utterance]) -> &'static str {
    utts.first()
        .map_or(FeatureSet::External, |u| u.features.source())
        .name()
}

fn cmd_extract(a: args::ExtractArgs) -> Result<Partial, CliError> {
    let rows = read_manifest_file(&a.manifest)?;
    let base = wav_base(&a.manifest, a.wav_dir.as_deref());
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for row in &rows {
        match corpus::extract_row(row, &base, a.frame_ms, a.hop_ms) {
            Ok(fv) => out.push((row.id.clone(), fv)),
            Err(e) => failures.push(format!("{}: {e}", row.id)),
        }
    }
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &out, 2 * dser_core::features::PAA_LLD_COUNT)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let text = String::from_utf8(buf).expect("csv writer emits utf-8");
    let path = write_out(&a.out, "features.csv", &text)?;
    println!("{} rows -> {}", out.len(), path.display());
    Ok(report_failures(&failures))
}

fn cmd_train(a: args::TrainArgs) -> Result<Partial, CliError> {
    let cfg = train_config(&a.opts)?;
    let (split, partial) = split_corpus(&a.data, cfg.seed)?;
    let (params, result) = train(&split, &cfg)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::Data(e.to_string()))?;
    save_checkpoint(&params, a.out.join("checkpoint.json"))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let json = serde_json::to_string_pretty(&result).map_err(|e| CliError::Data(e.to_string()))?;
    write_out(&a.out, "result.json", &(json + "\n"))?;
    let fs_name = feature_set_name(&split.train);
    let csv = format!(
        "{REPORT_CSV_HEADER}\n{}\n",
        result.test.csv_row(fs_name, &cfg.loss.to_string())
    );
    write_out(&a.out, "report.csv", &csv)?;
    println!(
        "{} on {fs_name}: test ccc_mean {:.3} (best epoch {})",
        cfg.loss, result.test.ccc_mean, result.best_epoch
    );
    Ok(partial)
}

/// Test-partition predictions of a saved model.
fn checkpoint_predictions(
    checkpoint: &Path,
    data: &DataArgs,
    seed: u64,
) -> Result<(Vec<Utterance>, Vec<EmotionTriple>, Partial), CliError> {
    let params = load_checkpoint(checkpoint)
        .map_err(|e| CliError::Data(format!("checkpoint {}: {e}", checkpoint.display())))?;
    let (split, partial) = split_corpus(data, seed)?;
    let pred = predict(&params, &split.test)?;
    Ok((split.test, pred, partial))
}

fn cmd_eval(a: args::EvalArgs) -> Result<Partial, CliError> {
    let (test, pred, partial) = checkpoint_predictions(&a.checkpoint, &a.data, a.seed)?;
    let gold: Vec<EmotionTriple> = test.iter().map(Utterance::labels).collect();
    let report = evaluate(&pred, &gold).map_err(|e| CliError::Data(e.to_string()))?;
    let csv = format!(
        "{REPORT_CSV_HEADER}\n{}\n",
        report.csv_row(feature_set_name(&test), "-")
    );
    let path = write_out(&a.out, "eval.csv", &csv)?;
    println!("test ccc_mean {:.3} -> {}", report.ccc_mean, path.display());
    Ok(partial)
}

fn cmd_grid(a: args::GridArgs) -> Result<Partial, CliError> {
    let cfg = train_config(&a.opts)?;
    let (split, mut partial) = split_corpus(&a.data, cfg.seed)?;
    let (weights, cells) = grid_search_weights(&split, &cfg)?;
    let best = select_best(&cells);
    let mut csv = String::from("alpha,beta,val_ccc_mean,selected,error\n");
    for c in &cells {
        let selected = if Some((c.alpha, c.beta)) == best {
            "*"
        } else {
            ""
        };
        match &c.outcome {
            Ok(score) => {
                let _ = writeln!(csv, "{:.1},{:.1},{score:.3},{selected},", c.alpha, c.beta);
            }
            Err(e) => {
                partial = true;
                let _ = writeln!(
                    csv,
                    "{:.1},{:.1},,,{}",
                    c.alpha,
                    c.beta,
                    e.replace([',', '\n'], ";")
                );
            }
        }
    }
    write_out(&a.out, "grid.csv", &csv)?;
    println!(
        "alpha={:.1} beta={:.1} (dominance weight {:.1})",
        weights.valence, weights.arousal, weights.dominance
    );
    Ok(partial)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixPlan {
    #[serde(default)]
    train: TrainConfig,
    #[serde(default = "all_losses")]
    losses: Vec<LossKind>,
    parts: Vec<PlanPart>,
}

fn all_losses() -> Vec<LossKind> {
    LossKind::ALL.to_vec()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanPart {
    dataset: String,
    manifest: PathBuf,
    #[serde(default = "paa")]
    features: String,
    /// Column label; defaults to the detected feature set.
    feature_set: Option<String>,
    wav_dir: Option<PathBuf>,
    #[serde(default = "five")]
    test_session: u32,
    #[serde(default = "point_two")]
    val_fraction: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
}

fn paa() -> String {
    "paa".into()
}

fn five() -> u32 {
    5
}

fn point_two() -> f64 {
    0.2
}

fn cmd_matrix(a: args::MatrixArgs) -> Result<Partial, CliError> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| CliError::Usage(format!("plan {}: {e}", a.config.display())))?;
    let plan: MatrixPlan = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("plan {}: {e}", a.config.display())))?;
    let mut base = plan.train;
    if let Some(seed) = a.seed {
        base.seed = seed;
    }
    base.validate()?;
    let root = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut partial = false;
    let mut parts = Vec::new();
    for p in plan.parts {
        let weights = match (p.alpha, p.beta) {
            (Some(al), Some(be)) => weights_from(al, be)?,
            (None, None) => base.weights,
            _ => {
                return Err(CliError::Usage(format!(
                    "{}: give both alpha and beta",
                    p.dataset
                )))
            }
        };
        let features = match p.features.split_once(':') {
            Some((kind, path)) => format!("{kind}:{}", root.join(path).display()),
            None => p.features.clone(),
        };
        let corpus = load_corpus(
            &root.join(&p.manifest),
            &features,
            p.wav_dir.as_ref().map(|d| root.join(d)).as_deref(),
        )?;
        partial |= report_failures(&corpus.failures);
        let feature_set = p
            .feature_set
            .unwrap_or_else(|| feature_set_name(&corpus.utterances).to_string());
        parts.push(MatrixPart {
            dataset: p.dataset,
            feature_set,
            utterances: corpus.utterances,
            test_session: p.test_session,
            val_fraction: p.val_fraction,
            weights,
        });
    }
    let rows = run_matrix(&parts, &plan.losses, &base);
    for r in rows.iter().filter(|r| r.outcome.is_err()) {
        partial = true;
        eprintln!(
            "cell {}/{}/{} failed: {}",
            r.dataset,
            r.feature_set,
            r.loss,
            r.outcome.as_ref().expect_err("filtered")
        );
    }
    let path = write_out(&a.out, "matrix.csv", &matrix_csv(&rows))?;
    println!("{} cells -> {}", rows.len(), path.display());
    Ok(partial)
}

fn cmd_synth_bench(a: args::SynthBenchArgs) -> Result<Partial, CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be >= 1".into()));
    }
    let base = load_config(a.config.as_deref())?;
    let report = synth_bench(a.seed, a.repeats, &base)?;
    let path = write_out(&a.out, "synth_bench.csv", &report.to_csv())?;
    let mean = |k| {
        report
            .mean_ccc(k)
            .map_or("n/a".to_string(), |v| format!("{v:.3}"))
    };
    println!(
        "mean ccc_mean: MSE {} MAE {} CCCL {}; CCCL vs MSE {}/{}/{} vs MAE {}/{}/{} (win/tie/loss) -> {}",
        mean(LossKind::Mse),
        mean(LossKind::Mae),
        mean(LossKind::Cccl),
        report.vs_mse.wins,
        report.vs_mse.ties,
        report.vs_mse.losses,
        report.vs_mae.wins,
        report.vs_mae.ties,
        report.vs_mae.losses,
        path.display()
    );
    Ok(report.rows.iter().any(|r| r.outcome.is_err()))
}

fn cmd_scatter(a: args::ScatterArgs) -> Result<Partial, CliError> {
    let (test, pred, partial) = checkpoint_predictions(&a.checkpoint, &a.data, a.seed)?;
    let points: Vec<ScatterPoint> = test
        .iter()
        .zip(pred)
        .map(|(u, p)| ScatterPoint {
            id: u.id.clone(),
            gold: u.labels(),
            pred: p,
        })
        .collect();
    write_out(&a.out, "scatter.csv", &scatter_csv(&points))?;
    let path = write_out(&a.out, "scatter.svg", &scatter_svg(&points))?;
    println!("{} points -> {}", points.len(), path.display());
    Ok(partial)
}
