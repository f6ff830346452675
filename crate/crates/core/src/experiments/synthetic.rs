//! Deterministic synthetic test signals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{peak_normalize, Signal};
use crate::error::{Error, Result};

/// Sinusoid frequencies are snapped to multiples of `sample_rate / SINE_GRID`.
pub const SINE_GRID: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// Stationary sum of `count` sinusoids with random amplitude and phase.
    SparseSines {
        count: usize,
        #[serde(default = "default_f_min")]
        f_min: f64,
        #[serde(default = "default_f_max")]
        f_max: f64,
    },
    /// Linear frequency sweep.
    Chirp { f_start: f64, f_end: f64 },
    /// Five sinusoids blended with white noise; `sparsity = 1` is pure tones,
    /// `0` pure noise.
    NoiseMix { sparsity: f64 },
}

fn default_f_min() -> f64 {
    50.0
}

fn default_f_max() -> f64 {
    4000.0
}

fn default_duration() -> f64 {
    5.0
}

fn default_rate() -> u32 {
    16_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
}

impl SyntheticSpec {
    pub fn new(generator: Generator) -> Self {
        Self {
            generator,
            duration_s: default_duration(),
            sample_rate: default_rate(),
        }
    }

    pub fn sparse_sines(count: usize) -> Self {
        Self::new(Generator::SparseSines {
            count,
            f_min: default_f_min(),
            f_max: default_f_max(),
        })
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn label(&self) -> String {
        match &self.generator {
            Generator::SparseSines { count, .. } => format!("sparse_sines{count}"),
            Generator::Chirp { .. } => "chirp".into(),
            Generator::NoiseMix { sparsity } => format!("noise_mix{sparsity}"),
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    /// Parses `sparse_sines`, `sparse_sines:COUNT`, `chirp`,
    /// `chirp:F0:F1`, `noise_mix` or `noise_mix:SPARSITY`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad generator argument '{p}'")))
            })
            .collect::<Result<_>>()?;
        let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
        match name {
            "sparse_sines" => Ok(Generator::SparseSines {
                count: arg(0, 5.0) as usize,
                f_min: arg(1, default_f_min()),
                f_max: arg(2, default_f_max()),
            }),
            "chirp" => Ok(Generator::Chirp {
                f_start: arg(0, 100.0),
                f_end: arg(1, 4000.0),
            }),
            "noise_mix" => Ok(Generator::NoiseMix {
                sparsity: arg(0, 0.8),
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown generator '{other}'"
            ))),
        }
    }
}

fn tones(
    rng: &mut ChaCha8Rng,
    len: usize,
    rate: u32,
    count: usize,
    f_min: f64,
    f_max: f64,
) -> Result<Vec<f64>> {
    let step = f64::from(rate) / SINE_GRID as f64;
    let lo = (f_min / step).ceil().max(1.0) as usize;
    let hi = ((f_max / step).floor() as usize).min(SINE_GRID / 2 - 1);
    if count == 0 || hi < lo || hi - lo + 1 < count {
        return Err(Error::InvalidParameter(format!(
            "cannot place {count} distinct tones between {f_min} and {f_max} Hz"
        )));
    }
    let mut bins: Vec<usize> = Vec::with_capacity(count);
    while bins.len() < count {
        let b = rng.random_range(lo..=hi);
        if !bins.contains(&b) {
            bins.push(b);
        }
    }
    let comps: Vec<(f64, f64, f64)> = bins
        .iter()
        .map(|&b| {
            (
                2.0 * PI * b as f64 / SINE_GRID as f64,
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    Ok((0..len)
        .map(|n| {
            comps
                .iter()
                .map(|(w, a, ph)| a * (w * n as f64 + ph).sin())
                .sum()
        })
        .collect())
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Generates a peak-normalized signal; identical `(spec, seed)` pairs give
/// bit-identical output.
pub fn make_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Signal> {
    let rate = spec.sample_rate;
    let len = (spec.duration_s * f64::from(rate)).round() as usize;
    if len == 0 || rate == 0 {
        return Err(Error::InvalidParameter(
            "synthetic signal would be empty".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match spec.generator {
        Generator::SparseSines {
            count,
            f_min,
            f_max,
        } => tones(&mut rng, len, rate, count, f_min, f_max)?,
        Generator::Chirp { f_start, f_end } => {
            let fs = f64::from(rate);
            let sweep = (f_end - f_start) / (len as f64 / fs);
            let phase0 = rng.random_range(0.0..2.0 * PI);
            (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    (2.0 * PI * (f_start * t + 0.5 * sweep * t * t) + phase0).sin()
                })
                .collect()
        }
        Generator::NoiseMix { sparsity } => {
            if !(0.0..=1.0).contains(&sparsity) {
                return Err(Error::InvalidParameter(format!(
                    "noise_mix sparsity must lie in [0, 1], got {sparsity}"
                )));
            }
            let tonal = tones(&mut rng, len, rate, 5, default_f_min(), default_f_max())?;
            let noise: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (rt, rn) = (rms(&tonal), rms(&noise));
            tonal
                .iter()
                .zip(&noise)
                .map(|(t, n)| sparsity * t / rt + (1.0 - sparsity) * n / rn)
                .collect()
        }
    };
    peak_normalize(&Signal::new(samples, rate)?)
}
