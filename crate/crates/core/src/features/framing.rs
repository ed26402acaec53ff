use super::{FeatureError, FrameSpec, Waveform};

/// Splits `w` into overlapping frames. A trailing partial frame is dropped.
pub fn frame_signal(w: &Waveform, spec: FrameSpec) -> Result<Vec<&[f64]>, FeatureError> {
    let len = w.len();
    let frame = spec.frame_length();
    if len < frame {
        return Err(FeatureError::SignalTooShort {
            len,
            frame_length: frame,
        });
    }
    let count = (len - frame) / spec.hop_length() + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * spec.hop_length();
            &w.samples()[start..start + frame]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(n: usize) -> Waveform {
        Waveform::new((0..n).map(|i| i as f64 / n as f64).collect(), 1000).unwrap()
    }

    #[test]
    fn frame_counts() {
        let spec = FrameSpec::new(50, 25).unwrap();
        assert_eq!(frame_signal(&wave(100), spec).unwrap().len(), 3);
        assert_eq!(frame_signal(&wave(50), spec).unwrap().len(), 1);
        assert_eq!(frame_signal(&wave(74), spec).unwrap().len(), 1);
        assert!(matches!(
            frame_signal(&wave(49), spec),
            Err(FeatureError::SignalTooShort { len: 49, .. })
        ));
    }

    #[test]
    fn frames_are_contiguous_windows() {
        let w = wave(100);
        let frames = frame_signal(&w, FrameSpec::new(50, 25).unwrap()).unwrap();
        assert_eq!(frames[1][0], w.samples()[25]);
        assert_eq!(frames[2][49], w.samples()[99]);
    }
}
