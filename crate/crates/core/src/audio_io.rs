//! Waveform container and WAV input/output.
//!
//! Reading accepts mono or multichannel PCM16 and IEEE-float32 files; only
//! channel 0 of a multichannel file is kept. Writing always produces mono
//! IEEE-float32, which round-trips `f32`-representable samples exactly.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// A real-valued discrete-time waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Same sample rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let read_err = |source| Error::Read {
        path: path.to_path_buf(),
        source,
    };
    let reader = WavReader::open(path).map_err(read_err)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels > 1 {
        log::warn!(
            "{}: {} channels, keeping channel 0 only",
            path.display(),
            channels
        );
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(read_err)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(read_err)?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{format:?} with {bits} bits per sample"
            )))
        }
    };

    let samples: Vec<f64> = interleaved.into_iter().step_by(channels.max(1)).collect();
    Signal::new(samples, spec.sample_rate)
}

pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let path = path.as_ref();
    let write_err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(write_err)?;
    for &s in &signal.samples {
        writer.write_sample(s as f32).map_err(write_err)?;
    }
    writer.finalize().map_err(write_err)
}

/// Scales the signal so that its peak absolute value is exactly 1.
pub fn peak_normalize(signal: &Signal) -> Result<Signal> {
    let peak = signal.peak();
    if peak == 0.0 {
        return Err(Error::InvalidSignal(
            "cannot normalize an all-zero signal".into(),
        ));
    }
    signal.with_samples(signal.samples.iter().map(|s| s / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec(), 16_000).unwrap()
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(Signal::new(vec![], 8000).is_err());
        assert!(Signal::new(vec![0.0, f64::NAN], 8000).is_err());
        assert!(Signal::new(vec![0.0, f64::INFINITY], 8000).is_err());
        assert!(Signal::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn pcm16_is_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(16384i16).unwrap();
        w.finalize().unwrap();
        let s = read_wav(&path).unwrap();
        assert_eq!(s.samples(), &[0.5]);
    }

    #[test]
    fn float32_reads_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        write_wav(&path, &sig(&[0.25, -0.75])).unwrap();
        assert_eq!(read_wav(&path).unwrap().samples(), &[0.25, -0.75]);
    }

    #[test]
    fn multichannel_keeps_channel_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for (l, r) in [(0.1f32, 0.9f32), (0.2, -0.9), (0.3, 0.5)] {
            w.write_sample(l).unwrap();
            w.write_sample(r).unwrap();
        }
        w.finalize().unwrap();
        let s = read_wav(&path).unwrap();
        let expect: Vec<f64> = [0.1f32, 0.2, 0.3].iter().map(|&v| f64::from(v)).collect();
        assert_eq!(s.samples(), expect.as_slice());
        assert_eq!(s.sample_rate(), 8000);
    }

    #[test]
    fn unsupported_encoding_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(1000i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(Error::UnsupportedEncoding(_))
        ));
        assert!(matches!(
            read_wav(dir.path().join("missing.wav")),
            Err(Error::Read { .. })
        ));
    }

    #[test]
    fn long_signal_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("long.wav");
        let samples: Vec<f64> = (0..80_000)
            .map(|n| f64::from((n as f32 * 0.01).sin()))
            .collect();
        let s = sig(&samples);
        write_wav(&path, &s).unwrap();
        assert_eq!(read_wav(&path).unwrap(), s);
        write_wav(&path, &sig(&[0.0])).unwrap();
        assert_eq!(read_wav(&path).unwrap().samples(), &[0.0]);
        write_wav(&path, &sig(&[1.0, -1.0])).unwrap();
        assert_eq!(read_wav(&path).unwrap().samples(), &[1.0, -1.0]);
        assert!(write_wav(dir.path().join("no/such/dir.wav"), &s).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            peak_normalize(&sig(&[0.5, -0.25])).unwrap().samples(),
            &[1.0, -0.5]
        );
        assert_eq!(peak_normalize(&sig(&[-2.0])).unwrap().samples(), &[-1.0]);
        assert_eq!(
            peak_normalize(&sig(&[1.0, -0.3])).unwrap().samples(),
            &[1.0, -0.3]
        );
        assert!(peak_normalize(&sig(&[0.0, 0.0])).is_err());
    }

    proptest! {
        #[test]
        fn float32_round_trip(v in prop::collection::vec(-1.0f32..1.0, 1..64)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.wav");
            let s = sig(&v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>());
            write_wav(&path, &s).unwrap();
            prop_assert_eq!(read_wav(&path).unwrap(), s);
        }

        #[test]
        fn normalize_is_idempotent_and_scale_invariant(
            v in prop::collection::vec(-10.0f64..10.0, 1..32),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let s = sig(&v);
            let once = peak_normalize(&s).unwrap();
            let twice = peak_normalize(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!((once.peak() - 1.0).abs() < 1e-15);
            let scaled = sig(&v.iter().map(|x| c * x).collect::<Vec<_>>());
            let ns = peak_normalize(&scaled).unwrap();
            for (a, b) in ns.samples().iter().zip(once.samples()) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }
    }
}
