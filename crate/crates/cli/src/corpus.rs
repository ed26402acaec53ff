//! Manifest + feature loading shared by the data-driven commands.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use dser_core::experiment::{attach_features, read_manifest, ManifestRow};
use dser_core::features::{extract_paa_hsf, load_feature_csv_any, load_wav};
use dser_core::{FeatureVector, FrameSpec, Utterance};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSource {
    Paa,
    Csv(PathBuf),
}

impl FeatureSource {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("paa") {
            return Ok(Self::Paa);
        }
        match s.split_once(':') {
            Some((kind, path)) if kind.eq_ignore_ascii_case("csv") && !path.is_empty() => {
                Ok(Self::Csv(PathBuf::from(path)))
            }
            _ => Err(CliError::Usage(format!(
                "--features expects `paa` or `csv:PATH`, got {s:?}"
            ))),
        }
    }
}

/// Utterances that could be assembled, plus one message per row that could not.
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub failures: Vec<String>,
}

pub fn read_manifest_file(path: &Path) -> Result<Vec<ManifestRow>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open manifest {}: {e}", path.display())))?;
    read_manifest(file).map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
}

pub fn resolve_wav(row: &ManifestRow, base: &Path) -> Option<PathBuf> {
    row.wav_path.as_ref().map(|p| {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    })
}

pub fn wav_base(manifest: &Path, wav_dir: Option<&Path>) -> PathBuf {
    wav_dir
        .map(Path::to_path_buf)
        .or_else(|| manifest.parent().map(Path::to_path_buf))
        .unwrap_or_default()
}

/// pAA HSFs for one manifest row.
pub fn extract_row(
    row: &ManifestRow,
    base: &Path,
    frame_ms: f64,
    hop_ms: f64,
) -> Result<FeatureVector, String> {
    let path = resolve_wav(row, base).ok_or_else(|| "no WAV path".to_string())?;
    let wave = load_wav(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec =
        FrameSpec::from_millis(wave.sample_rate(), frame_ms, hop_ms).map_err(|e| e.to_string())?;
    extract_paa_hsf(&wave, spec).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn load_corpus(
    manifest: &Path,
    features: &str,
    wav_dir: Option<&Path>,
) -> Result<Corpus, CliError> {
    let source = FeatureSource::parse(features)?;
    let rows = read_manifest_file(manifest)?;
    let mut failures = Vec::new();
    let mut table: HashMap<String, FeatureVector> = HashMap::new();
    match source {
        FeatureSource::Paa => {
            let base = wav_base(manifest, wav_dir);
            for row in &rows {
                match extract_row(row, &base, 50.0, 25.0) {
                    Ok(fv) => {
                        table.insert(row.id.clone(), fv);
                    }
                    Err(e) => failures.push(format!("{}: {e}", row.id)),
                }
            }
        }
        FeatureSource::Csv(path) => {
            let (_, loaded) = load_feature_csv_any(&path)
                .map_err(|e| CliError::Usage(format!("feature csv {}: {e}", path.display())))?;
            table.extend(loaded);
            for row in rows.iter().filter(|r| !table.contains_key(&r.id)) {
                failures.push(format!("{}: no row in feature csv", row.id));
            }
        }
    }
    let usable: Vec<ManifestRow> = rows
        .into_iter()
        .filter(|r| table.contains_key(&r.id))
        .collect();
    let utterances = attach_features(&usable, &table).map_err(|e| CliError::Data(e.to_string()))?;
    let dims: Vec<usize> = utterances.iter().map(|u| u.features.len()).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Data("feature vectors differ in length".into()));
    }
    Ok(Corpus {
        utterances,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_flag() {
        assert_eq!(FeatureSource::parse("paa").unwrap(), FeatureSource::Paa);
        assert_eq!(
            FeatureSource::parse("csv:/tmp/x.csv").unwrap(),
            FeatureSource::Csv("/tmp/x.csv".into())
        );
        assert!(FeatureSource::parse("csv:").is_err());
        assert!(FeatureSource::parse("gemaps").is_err());
    }
}
