//! The 34 pAA short-term descriptors.
//!
//! Time-domain descriptors (ZCR, energy, energy entropy) use the raw frame.
//! Spectral descriptors use the magnitude spectrum of the Hamming-windowed
//! frame, bins `0..N/2`, scaled by `1/N`. Frequencies are reported in Hz.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{frame_signal, FeatureError, FrameSpec, LldMatrix, Waveform, PAA_LLD_COUNT};

const SUB_BLOCKS: usize = 10;
const ROLLOFF_FRACTION: f64 = 0.90;
const MEL_BANDS: usize = 40;
const MFCC_COUNT: usize = 13;
const LOG_FLOOR: f64 = 1e-10;
const CHROMA_REF_HZ: f64 = 440.0;
const CHROMA_MIN_HZ: f64 = 27.5;

/// Reusable per-(sample rate, frame length) state: FFT plan, window, mel
/// filterbank and pitch-class map.
pub struct PaaExtractor {
    frame_length: usize,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    bin_hz: Vec<f64>,
    mel_filters: Vec<Vec<(usize, f64)>>,
    chroma_class: Vec<Option<usize>>,
}

impl PaaExtractor {
    pub fn new(sample_rate: u32, frame_length: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(frame_length);
        let denom = (frame_length - 1) as f64;
        let window = (0..frame_length)
            .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / denom).cos())
            .collect();
        let sr = f64::from(sample_rate);
        let n_bins = frame_length / 2;
        let bin_hz: Vec<f64> = (0..n_bins)
            .map(|k| k as f64 * sr / frame_length as f64)
            .collect();
        let mel_filters = mel_filterbank(&bin_hz, sr / 2.0, MEL_BANDS);
        let chroma_class = bin_hz.iter().map(|&f| pitch_class(f)).collect();
        Self {
            frame_length,
            fft,
            window,
            bin_hz,
            mel_filters,
            chroma_class,
        }
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    /// Center frequency of each magnitude bin.
    pub fn bin_frequencies(&self) -> &[f64] {
        &self.bin_hz
    }

    /// Magnitude spectrum of the windowed frame, `N/2` bins scaled by `1/N`.
    pub fn magnitude_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        assert_eq!(frame.len(), self.frame_length, "frame length mismatch");
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let scale = self.frame_length as f64;
        buf[..self.bin_hz.len()]
            .iter()
            .map(|c| c.norm() / scale)
            .collect()
    }

    /// Descriptors of one frame. `prev_spectrum` feeds spectral flux; `None`
    /// yields a flux of 0.
    pub fn frame_descriptors(
        &self,
        frame: &[f64],
        prev_spectrum: Option<&[f64]>,
    ) -> ([f64; PAA_LLD_COUNT], Vec<f64>) {
        let spectrum = self.magnitude_spectrum(frame);
        let mut out = [0.0; PAA_LLD_COUNT];
        out[0] = zero_crossing_rate(frame);
        out[1] = energy(frame);
        out[2] = energy_entropy(frame, SUB_BLOCKS);
        let (centroid, spread) = centroid_spread(&spectrum, &self.bin_hz);
        out[3] = centroid;
        out[4] = spread;
        out[5] = spectral_entropy(&spectrum);
        out[6] = prev_spectrum.map_or(0.0, |prev| spectral_flux(&spectrum, prev));
        out[7] = spectral_rolloff(&spectrum, &self.bin_hz, ROLLOFF_FRACTION);
        out[8..8 + MFCC_COUNT].copy_from_slice(&self.mfcc(&spectrum));
        let chroma = self.chroma(&spectrum);
        out[21..33].copy_from_slice(&chroma);
        out[33] = population_std(&chroma);
        (out, spectrum)
    }

    fn mfcc(&self, spectrum: &[f64]) -> [f64; MFCC_COUNT] {
        let log_mel: Vec<f64> = self
            .mel_filters
            .iter()
            .map(|filter| {
                let e: f64 = filter.iter().map(|&(k, w)| w * spectrum[k]).sum();
                e.max(LOG_FLOOR).log10()
            })
            .collect();
        let mut out = [0.0; MFCC_COUNT];
        for (m, c) in out.iter_mut().enumerate() {
            *c = dct2_ortho_coefficient(&log_mel, m);
        }
        out
    }

    fn chroma(&self, spectrum: &[f64]) -> [f64; 12] {
        let mut chroma = [0.0; 12];
        let total: f64 = spectrum.iter().map(|x| x * x).sum();
        if total <= 0.0 {
            return chroma;
        }
        for (x, class) in spectrum.iter().zip(&self.chroma_class) {
            if let Some(c) = class {
                chroma[*c] += x * x;
            }
        }
        for c in &mut chroma {
            *c /= total;
        }
        chroma
    }

    /// Descriptor matrix over all frames of `w`.
    pub fn extract(&self, w: &Waveform, spec: FrameSpec) -> Result<LldMatrix, FeatureError> {
        if spec.frame_length() != self.frame_length {
            return Err(FeatureError::InvalidFrameSpec(format!(
                "extractor built for {} samples, spec asks for {}",
                self.frame_length,
                spec.frame_length()
            )));
        }
        let frames = frame_signal(w, spec)?;
        let mut values = Array2::zeros((frames.len(), PAA_LLD_COUNT));
        let mut prev: Option<Vec<f64>> = None;
        for (i, frame) in frames.iter().enumerate() {
            let (row, spectrum) = self.frame_descriptors(frame, prev.as_deref());
            values
                .row_mut(i)
                .iter_mut()
                .zip(row)
                .for_each(|(dst, v)| *dst = v);
            prev = Some(spectrum);
        }
        LldMatrix::new(values)
    }
}

/// Per-frame pAA descriptors of `w`.
pub fn extract_paa_llds(w: &Waveform, spec: FrameSpec) -> Result<LldMatrix, FeatureError> {
    PaaExtractor::new(w.sample_rate(), spec.frame_length()).extract(w, spec)
}

/// Sign changes per adjacent pair; a step through zero counts as half.
fn zero_crossing_rate(frame: &[f64]) -> f64 {
    let sign = |x: f64| -> f64 {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let changes: f64 = frame
        .windows(2)
        .map(|p| (sign(p[1]) - sign(p[0])).abs())
        .sum::<f64>()
        / 2.0;
    changes / (frame.len() - 1) as f64
}

fn energy(frame: &[f64]) -> f64 {
    frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64
}

fn entropy_of_groups(values: &[f64], groups: usize) -> f64 {
    let group_len = values.len() / groups;
    if group_len == 0 {
        return 0.0;
    }
    let energies: Vec<f64> = values[..group_len * groups]
        .chunks_exact(group_len)
        .map(|c| c.iter().map(|x| x * x).sum())
        .collect();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -energies
        .iter()
        .map(|e| e / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

fn energy_entropy(frame: &[f64], blocks: usize) -> f64 {
    entropy_of_groups(frame, blocks)
}

/// Entropy (bits) of the spectral energy distribution over 10 equal bin
/// groups. Flat spectrum gives `log2(10)`, a single occupied bin gives 0.
pub fn spectral_entropy(spectrum: &[f64]) -> f64 {
    entropy_of_groups(spectrum, SUB_BLOCKS)
}

fn centroid_spread(spectrum: &[f64], bin_hz: &[f64]) -> (f64, f64) {
    let mass: f64 = spectrum.iter().sum();
    if mass <= 0.0 {
        return (0.0, 0.0);
    }
    let centroid = spectrum.iter().zip(bin_hz).map(|(x, f)| x * f).sum::<f64>() / mass;
    let spread = (spectrum
        .iter()
        .zip(bin_hz)
        .map(|(x, f)| x * (f - centroid).powi(2))
        .sum::<f64>()
        / mass)
        .sqrt();
    (centroid, spread)
}

fn normalized(spectrum: &[f64]) -> Vec<f64> {
    let sum: f64 = spectrum.iter().sum();
    if sum <= 0.0 {
        vec![0.0; spectrum.len()]
    } else {
        spectrum.iter().map(|x| x / sum).collect()
    }
}

fn spectral_flux(spectrum: &[f64], prev: &[f64]) -> f64 {
    normalized(spectrum)
        .iter()
        .zip(normalized(prev))
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

fn spectral_rolloff(spectrum: &[f64], bin_hz: &[f64], fraction: f64) -> f64 {
    let total: f64 = spectrum.iter().map(|x| x * x).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let threshold = fraction * total;
    let mut acc = 0.0;
    for (x, f) in spectrum.iter().zip(bin_hz) {
        acc += x * x;
        if acc > threshold {
            return *f;
        }
    }
    *bin_hz.last().unwrap_or(&0.0)
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters with edges evenly spaced on the mel scale from 0 Hz to
/// `max_hz`. Stored sparsely as `(bin, weight)`.
fn mel_filterbank(bin_hz: &[f64], max_hz: f64, bands: usize) -> Vec<Vec<(usize, f64)>> {
    let top = hz_to_mel(max_hz);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect();
    edges
        .windows(3)
        .map(|e| {
            let (lo, center, hi) = (e[0], e[1], e[2]);
            bin_hz
                .iter()
                .enumerate()
                .filter_map(|(k, &f)| {
                    let w = if f >= lo && f <= center {
                        (f - lo) / (center - lo)
                    } else if f > center && f <= hi {
                        (hi - f) / (hi - center)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((k, w))
                })
                .collect()
        })
        .collect()
}

fn dct2_ortho_coefficient(x: &[f64], m: usize) -> f64 {
    let n = x.len() as f64;
    let scale = if m == 0 {
        (1.0 / n).sqrt()
    } else {
        (2.0 / n).sqrt()
    };
    scale
        * x.iter()
            .enumerate()
            .map(|(j, v)| v * (PI * m as f64 * (2.0 * j as f64 + 1.0) / (2.0 * n)).cos())
            .sum::<f64>()
}

/// Pitch class with C = 0, or `None` below the chroma floor.
fn pitch_class(f: f64) -> Option<usize> {
    if f < CHROMA_MIN_HZ {
        return None;
    }
    let semitones = (12.0 * (f / CHROMA_REF_HZ).log2()).round() as i64;
    Some((semitones + 9).rem_euclid(12) as usize)
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
