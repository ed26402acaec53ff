use ndarray::Array2;

use super::{FeatureError, FeatureSet, FeatureVector, LldMatrix};

/// Per-column population mean and standard deviation (Welford update).
pub fn pool_columns(values: &Array2<f64>) -> Result<(Vec<f64>, Vec<f64>), FeatureError> {
    if values.nrows() == 0 || values.ncols() == 0 {
        return Err(FeatureError::EmptyMatrix);
    }
    let d = values.ncols();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for (i, row) in values.rows().into_iter().enumerate() {
        let count = (i + 1) as f64;
        for (j, &x) in row.iter().enumerate() {
            let delta = x - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (x - mean[j]);
        }
    }
    let n = values.nrows() as f64;
    let std = m2.iter().map(|s| (s / n).max(0.0).sqrt()).collect();
    Ok((mean, std))
}

/// Mean+Std pooling of a pAA descriptor matrix into 68 HSFs.
pub fn pool_hsf(llds: &LldMatrix) -> Result<FeatureVector, FeatureError> {
    let (mut values, std) = pool_columns(llds.values())?;
    values.extend(std);
    FeatureVector::new(values, FeatureSet::Paa)
}
