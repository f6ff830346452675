//! Parseval tight frames: analysis `A : R^L -> C^M` and synthesis
//! `D = A*` with `D D* = I`.
//!
//! The coefficient space is treated as a real vector space with the inner
//! product `Re <a, b>`, so the synthesis of arbitrary complex coefficients is
//! real-valued.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Complex frame coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefVector(pub Vec<Complex64>);

impl CoefVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for CoefVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for CoefVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for CoefVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

pub(crate) fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// A linear operator pair with `synthesize(analyze(x)) = x`.
///
/// Implementors write into caller-provided buffers of exactly
/// `signal_len()` / `coef_len()` elements; the free functions [`analysis`]
/// and [`synthesis`] add length checking.
pub trait Frame: Sync + Send {
    fn signal_len(&self) -> usize;
    fn coef_len(&self) -> usize;
    /// Length of one conjugate-symmetric coefficient block. Coefficient
    /// vectors are a concatenation of `coef_len() / channels()` such blocks.
    fn channels(&self) -> usize;
    fn analyze(&self, x: &[f64], out: &mut [Complex64]);
    fn synthesize(&self, z: &[Complex64], out: &mut [f64]);
}

pub fn analysis<F: Frame + ?Sized>(f: &F, x: &[f64]) -> Result<CoefVector> {
    if x.len() != f.signal_len() {
        return Err(Error::LengthMismatch {
            expected: f.signal_len(),
            actual: x.len(),
        });
    }
    let mut out = CoefVector::zeros(f.coef_len());
    f.analyze(x, &mut out);
    Ok(out)
}

pub fn synthesis<F: Frame + ?Sized>(f: &F, z: &[Complex64]) -> Result<Vec<f64>> {
    if z.len() != f.coef_len() {
        return Err(Error::LengthMismatch {
            expected: f.coef_len(),
            actual: z.len(),
        });
    }
    let mut out = vec![0.0; f.signal_len()];
    f.synthesize(z, &mut out);
    Ok(out)
}

/// Windowless oversampled DFT of one block: the block is zero-padded from
/// `block_len` to `channels` samples and transformed with a unitary DFT.
#[derive(Clone)]
pub struct FrameOperator {
    block_len: usize,
    channels: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for FrameOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameOperator")
            .field("block_len", &self.block_len)
            .field("channels", &self.channels)
            .finish()
    }
}

impl FrameOperator {
    pub fn new(block_len: usize, channels: usize) -> Result<Self> {
        if block_len == 0 || channels < block_len {
            return Err(Error::InvalidParameter(format!(
                "frame needs 1 <= block_len <= channels, got L={block_len}, M={channels}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            block_len,
            channels,
            forward: planner.plan_fft_forward(channels),
            inverse: planner.plan_fft_inverse(channels),
            scale: 1.0 / (channels as f64).sqrt(),
        })
    }

    pub fn with_redundancy(block_len: usize, redundancy: usize) -> Result<Self> {
        if redundancy == 0 {
            return Err(Error::InvalidParameter(
                "redundancy must be at least 1".into(),
            ));
        }
        Self::new(block_len, block_len * redundancy)
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn redundancy(&self) -> f64 {
        self.channels as f64 / self.block_len as f64
    }

    /// Synthesis without discarding the imaginary part. For conjugate-symmetric
    /// input the imaginary parts are rounding noise.
    pub fn synthesis_complex(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        if z.len() != self.channels {
            return Err(Error::LengthMismatch {
                expected: self.channels,
                actual: z.len(),
            });
        }
        let mut buf = z.to_vec();
        self.inverse.process(&mut buf);
        buf.truncate(self.block_len);
        buf.iter_mut().for_each(|c| *c *= self.scale);
        Ok(buf)
    }
}

impl Frame for FrameOperator {
    fn signal_len(&self) -> usize {
        self.block_len
    }

    fn coef_len(&self) -> usize {
        self.channels
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn analyze(&self, x: &[f64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.block_len);
        assert_eq!(out.len(), self.channels);
        for (o, &v) in out.iter_mut().zip(x) {
            *o = Complex64::new(v, 0.0);
        }
        out[self.block_len..].fill(Complex64::new(0.0, 0.0));
        self.forward.process(out);
        out.iter_mut().for_each(|c| *c *= self.scale);
    }

    fn synthesize(&self, z: &[Complex64], out: &mut [f64]) {
        assert_eq!(z.len(), self.channels);
        assert_eq!(out.len(), self.block_len);
        let mut buf = z.to_vec();
        self.inverse.process(&mut buf);
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re * self.scale;
        }
    }
}

/// Largest relative round-trip error `|D A x - x| / |x|` over random blocks.
pub fn verify_tight<F: Frame + ?Sized>(f: &F, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coefs = vec![Complex64::new(0.0, 0.0); f.coef_len()];
    let mut back = vec![0.0; f.signal_len()];
    (0..trials.max(1))
        .map(|_| {
            let x: Vec<f64> = (0..f.signal_len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            f.analyze(&x, &mut coefs);
            f.synthesize(&coefs, &mut back);
            let err: f64 = back
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                err
            } else {
                err / n
            }
        })
        .fold(0.0, f64::max)
}

/// A tight frame given by an explicit complex `L x M` matrix `W`:
/// `D z = Re(W z)` and `D* x = conj(W)^T x`.
///
/// Tightness holds when the real `L x 2M` matrix `[Re W, -Im W]` has
/// orthonormal rows. Used for validating projections against generic
/// (non-DFT) operators at small sizes.
#[derive(Debug, Clone)]
pub struct DenseFrame {
    rows: Vec<Vec<Complex64>>,
    coef_len: usize,
}

impl DenseFrame {
    pub fn new(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let coef_len = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || rows.iter().any(|r| r.len() != coef_len) || coef_len < rows.len() {
            return Err(Error::InvalidParameter(
                "dense frame needs L >= 1 equal-length rows with M >= L".into(),
            ));
        }
        Ok(Self { rows, coef_len })
    }

    /// Random tight frame from Gram-Schmidt orthonormalization of uniform
    /// random rows in `R^{2M}`.
    pub fn random_tight(signal_len: usize, coef_len: usize, rng: &mut impl Rng) -> Result<Self> {
        if signal_len == 0 || 2 * coef_len < signal_len {
            return Err(Error::InvalidParameter(format!(
                "cannot build tight frame with L={signal_len}, M={coef_len}"
            )));
        }
        let dim = 2 * coef_len;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(signal_len);
        while basis.len() < signal_len {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            // two passes of Gram-Schmidt keep orthogonality at machine precision
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(b).for_each(|(a, b)| *a -= d * b);
                }
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-6 {
                v.iter_mut().for_each(|a| *a /= n);
                basis.push(v);
            }
        }
        let rows = basis
            .into_iter()
            .map(|r| {
                (0..coef_len)
                    .map(|m| Complex64::new(r[m], -r[coef_len + m]))
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }
}

impl Frame for DenseFrame {
    fn signal_len(&self) -> usize {
        self.rows.len()
    }

    fn coef_len(&self) -> usize {
        self.coef_len
    }

    fn channels(&self) -> usize {
        self.coef_len
    }

    fn analyze(&self, x: &[f64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (row, &xn) in self.rows.iter().zip(x) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w.conj() * xn;
            }
        }
    }

    fn synthesize(&self, z: &[Complex64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(z).map(|(w, c)| (w * c).re).sum();
        }
    }
}

/// Naive `O(M^2)` DFT used by tests as an FFT-independent reference.
#[doc(hidden)]
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let m = x.len();
    (0..m)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, &v)| {
                    v * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / m as f64)
                })
                .sum()
        })
        .collect()
}
