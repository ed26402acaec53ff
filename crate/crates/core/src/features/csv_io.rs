use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use super::{FeatureError, FeatureSet, FeatureVector};

/// Loads an `id,f1..fd` feature CSV. Rows keep file order.
pub fn load_feature_csv(
    path: impl AsRef<Path>,
    expected_dim: usize,
) -> Result<Vec<(String, FeatureVector)>, FeatureError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(FeatureError::MissingFile(path.to_path_buf()));
    }
    read_feature_csv(std::fs::File::open(path)?, expected_dim)
}

/// Like [`load_feature_csv`], taking the dimension from the header width.
pub fn load_feature_csv_any(
    path: impl AsRef<Path>,
) -> Result<(usize, Vec<(String, FeatureVector)>), FeatureError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(FeatureError::MissingFile(path.to_path_buf()));
    }
    let width = csv::Reader::from_path(path)?.headers()?.len();
    if width < 2 {
        return Err(FeatureError::DimensionMismatch {
            expected: 1,
            found: width.saturating_sub(1),
        });
    }
    let dim = width - 1;
    Ok((dim, load_feature_csv(path, dim)?))
}

pub fn read_feature_csv<R: Read>(
    reader: R,
    expected_dim: usize,
) -> Result<Vec<(String, FeatureVector)>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header_width = rdr.headers()?.len();
    if header_width != expected_dim + 1 {
        return Err(FeatureError::DimensionMismatch {
            expected: expected_dim,
            found: header_width.saturating_sub(1),
        });
    }
    let source = FeatureSet::for_dim(expected_dim);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != expected_dim + 1 {
            return Err(FeatureError::DimensionMismatch {
                expected: expected_dim,
                found: record.len().saturating_sub(1),
            });
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(FeatureError::DuplicateId(id));
        }
        let values = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(column, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| FeatureError::NonNumeric {
                        row: row + 1,
                        column,
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((id, FeatureVector::new(values, source)?));
    }
    Ok(out)
}

/// Writes rows in the layout [`read_feature_csv`] accepts.
pub fn write_feature_csv<W: Write>(
    writer: W,
    rows: &[(String, FeatureVector)],
    dim: usize,
) -> Result<(), FeatureError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((1..=dim).map(|i| format!("f{i}")));
    wtr.write_record(&header)?;
    for (id, fv) in rows {
        if fv.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                found: fv.len(),
            });
        }
        let mut record = vec![id.clone()];
        // `{:?}` prints the shortest representation that round-trips
        record.extend(fv.values().iter().map(|v| format!("{v:?}")));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
