use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::features::FeatureVector;
use crate::metrics::EmotionTriple;

pub const LABEL_MIN: f64 = 1.0;
pub const LABEL_MAX: f64 = 5.0;

/// One labelled utterance. Labels are kept on the annotation scale [1, 5].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub session: u32,
    pub features: FeatureVector,
    pub labels_raw: EmotionTriple,
}

impl Utterance {
    pub fn new(
        id: impl Into<String>,
        session: u32,
        features: FeatureVector,
        labels_raw: EmotionTriple,
    ) -> Result<Self, ExperimentError> {
        for v in labels_raw.as_array() {
            if !(LABEL_MIN..=LABEL_MAX).contains(&v) {
                return Err(ExperimentError::LabelOutOfRange(v));
            }
        }
        Ok(Self {
            id: id.into(),
            session,
            features,
            labels_raw,
        })
    }

    /// Labels on the model scale [-1, 1].
    pub fn labels(&self) -> EmotionTriple {
        scale_labels(self.labels_raw).expect("validated on construction")
    }
}

/// `(l - 3) / 2` per component: [1, 5] onto [-1, 1].
pub fn scale_labels(raw: EmotionTriple) -> Result<EmotionTriple, ExperimentError> {
    for v in raw.as_array() {
        if !(LABEL_MIN..=LABEL_MAX).contains(&v) {
            return Err(ExperimentError::LabelOutOfRange(v));
        }
    }
    Ok(raw.map(|l| (l - 3.0) / 2.0))
}

/// Inverse of [`scale_labels`].
pub fn unscale_labels(scaled: EmotionTriple) -> EmotionTriple {
    scaled.map(|l| 2.0 * l + 3.0)
}

/// A corpus manifest row: `id,session,valence,arousal,dominance,wav_path_or_blank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub session: u32,
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    #[serde(rename = "wav_path_or_blank")]
    pub wav_path: Option<PathBuf>,
}

impl ManifestRow {
    pub fn labels_raw(&self) -> EmotionTriple {
        EmotionTriple::new(self.valence, self.arousal, self.dominance)
    }
}

pub fn read_manifest<R: Read>(reader: R) -> Result<Vec<ManifestRow>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for record in rdr.deserialize() {
        let mut row: ManifestRow = record?;
        if row
            .wav_path
            .as_ref()
            .is_some_and(|p| p.as_os_str().is_empty())
        {
            row.wav_path = None;
        }
        scale_labels(row.labels_raw())?;
        if !seen.insert(row.id.clone()) {
            return Err(ExperimentError::InvalidConfig(format!(
                "duplicate manifest id {:?}",
                row.id
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_manifest<W: Write>(writer: W, rows: &[ManifestRow]) -> Result<(), ExperimentError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Joins manifest rows with feature vectors keyed by id.
pub fn attach_features(
    rows: &[ManifestRow],
    features: &HashMap<String, FeatureVector>,
) -> Result<Vec<Utterance>, ExperimentError> {
    rows.iter()
        .map(|row| {
            let fv = features
                .get(&row.id)
                .ok_or_else(|| ExperimentError::MissingFeatures(row.id.clone()))?;
            Utterance::new(row.id.clone(), row.session, fv.clone(), row.labels_raw())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;

    #[test]
    fn label_scaling() {
        let s = scale_labels(EmotionTriple::new(1.0, 3.0, 5.0)).unwrap();
        assert_eq!(s.as_array(), [-1.0, 0.0, 1.0]);
        assert!(scale_labels(EmotionTriple::new(0.5, 3.0, 3.0)).is_err());
        assert!(scale_labels(EmotionTriple::new(3.0, 3.0, 5.01)).is_err());
    }

    #[test]
    fn label_round_trip() {
        for raw in [1.0, 1.37, 2.5, 3.0, 4.999, 5.0] {
            let t = EmotionTriple::new(raw, raw, raw);
            let back = unscale_labels(scale_labels(t).unwrap());
            assert!((back.valence - raw).abs() <= 1e-15);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let text = "id,session,valence,arousal,dominance,wav_path_or_blank\n\
                    a,1,2.5,3,4,a.wav\n\
                    b,2,1,5,3,\n";
        let rows = read_manifest(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(
            rows[0].wav_path.as_deref(),
            Some(std::path::Path::new("a.wav"))
        );
        assert_eq!(rows[1].wav_path, None);
        let mut buf = Vec::new();
        write_manifest(&mut buf, &rows).unwrap();
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn manifest_rejects_bad_rows() {
        let dup =
            "id,session,valence,arousal,dominance,wav_path_or_blank\na,1,2,2,2,\na,1,2,2,2,\n";
        assert!(read_manifest(dup.as_bytes()).is_err());
        let range = "id,session,valence,arousal,dominance,wav_path_or_blank\na,1,7,2,2,\n";
        assert!(matches!(
            read_manifest(range.as_bytes()),
            Err(ExperimentError::LabelOutOfRange(_))
        ));
    }

    #[test]
    fn missing_features_reported() {
        let rows = read_manifest(
            "id,session,valence,arousal,dominance,wav_path_or_blank\na,1,2,2,2,\n".as_bytes(),
        )
        .unwrap();
        let mut feats = HashMap::new();
        assert!(matches!(
            attach_features(&rows, &feats),
            Err(ExperimentError::MissingFeatures(_))
        ));
        feats.insert(
            "a".to_string(),
            FeatureVector::new(vec![1.0, 2.0], FeatureSet::External).unwrap(),
        );
        assert_eq!(attach_features(&rows, &feats).unwrap()[0].session, 1);
    }
}
