use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader};

use super::{FeatureError, Waveform};

/// Reads a RIFF/WAVE file as mono `f64` samples.
///
/// Accepts 16-bit integer PCM and 32-bit float. Integer samples are divided by
/// `2^(bits-1)`; multichannel frames are averaged.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform, FeatureError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(FeatureError::MissingFile(path.to_path_buf()));
    }
    let reader = WavReader::open(path).map_err(map_hound_error)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(FeatureError::Malformed("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            let scale = f64::from(1u32 << 15);
            reader
                .into_samples::<i16>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(map_hound_error)?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(map_hound_error)?,
        (format, bits) => {
            return Err(FeatureError::UnsupportedCodec(format!(
                "{bits}-bit {format:?}"
            )))
        }
    };

    if !interleaved.len().is_multiple_of(channels) {
        return Err(FeatureError::Truncated(format!(
            "{} samples do not fill {channels}-channel frames",
            interleaved.len()
        )));
    }
    let mono = downmix(&interleaved, channels);
    Waveform::new(mono, spec.sample_rate)
}

fn downmix(interleaved: &[f64], channels: usize) -> Vec<f64> {
    if channels == 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect()
}

fn map_hound_error(err: hound::Error) -> FeatureError {
    match err {
        // hound reports a short read as a custom `Other` error
        hound::Error::IoError(e)
            if e.kind() == ErrorKind::UnexpectedEof || e.to_string().contains("enough bytes") =>
        {
            FeatureError::Truncated(e.to_string())
        }
        hound::Error::IoError(e) => FeatureError::Io(e),
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat | hound::Error::TooWide => {
            FeatureError::UnsupportedCodec(err.to_string())
        }
        hound::Error::UnfinishedSample => FeatureError::Truncated(err.to_string()),
        hound::Error::FormatError(msg) => FeatureError::Malformed(msg.to_string()),
    }
}
