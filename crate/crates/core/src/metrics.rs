//! Signal-to-distortion ratios.
//!
//! `SDR(u, v) = 10 log10(|u|^2 / |u - v|^2)` in dB, with `+inf` when
//! `u == v`. The improvement `ΔSDR = SDR(x, x̂) - SDR(x, y)` does not depend on
//! whether it is computed over all samples or only the clipped ones, as long
//! as the restoration keeps the reliable samples of `y`.

use serde::Serialize;

use crate::clip_model::{ClipMask, SampleClass};
use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: a,
            actual: b,
        })
    }
}

fn sdr_of<'a>(pairs: impl Iterator<Item = (&'a f64, &'a f64)>) -> Result<f64> {
    let (signal, error) = pairs.fold((0.0, 0.0), |(s, e), (&u, &v)| {
        (s + u * u, e + (u - v) * (u - v))
    });
    if signal == 0.0 {
        return Err(Error::InvalidSignal(
            "reference signal has zero energy".into(),
        ));
    }
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / error).log10())
}

pub fn sdr(u: &[f64], v: &[f64]) -> Result<f64> {
    check_lengths(u.len(), v.len())?;
    sdr_of(u.iter().zip(v))
}

/// SDR over the clipped samples (`H ∪ L`) only.
pub fn sdr_clipped_only(u: &[f64], v: &[f64], mask: &ClipMask) -> Result<f64> {
    check_lengths(u.len(), v.len())?;
    check_lengths(u.len(), mask.len())?;
    if !mask.has_clipped() {
        return Err(Error::InvalidParameter(
            "mask has no clipped samples".into(),
        ));
    }
    sdr_of(
        u.iter()
            .zip(v)
            .zip(mask.classes())
            .filter(|(_, &c)| c != SampleClass::Reliable)
            .map(|(p, _)| p),
    )
}

fn improvement(output: f64, input: f64) -> Result<f64> {
    if input.is_infinite() {
        return Err(Error::InvalidParameter(
            "clipped signal equals the original; improvement is undefined".into(),
        ));
    }
    Ok(output - input)
}

pub fn delta_sdr(x: &[f64], y: &[f64], xhat: &[f64]) -> Result<f64> {
    check_lengths(x.len(), xhat.len())?;
    improvement(sdr(x, xhat)?, sdr(x, y)?)
}

pub fn delta_sdr_clipped_only(x: &[f64], y: &[f64], xhat: &[f64], mask: &ClipMask) -> Result<f64> {
    improvement(
        sdr_clipped_only(x, xhat, mask)?,
        sdr_clipped_only(x, y, mask)?,
    )
}

/// Both ΔSDR variants, for a restoration that must agree with `y` on every
/// reliable sample.
pub fn delta_sdr_invariance_check(
    x: &[f64],
    y: &[f64],
    xhat: &[f64],
    mask: &ClipMask,
) -> Result<(f64, f64)> {
    check_lengths(y.len(), xhat.len())?;
    check_lengths(y.len(), mask.len())?;
    if let Some(index) = y
        .iter()
        .zip(xhat)
        .zip(mask.classes())
        .position(|((a, b), &c)| c == SampleClass::Reliable && a != b)
    {
        return Err(Error::Inconsistent { index });
    }
    Ok((
        delta_sdr(x, y, xhat)?,
        delta_sdr_clipped_only(x, y, xhat, mask)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockSdr {
    pub index: usize,
    pub start: usize,
    /// `None` when the reference block has zero energy.
    pub sdr_db: Option<f64>,
}

/// SDR on rectangular sliding blocks of `block_len` samples, `hop` apart.
/// A trailing partial block is dropped.
pub fn blockwise_sdr(
    x: &[f64],
    xhat: &[f64],
    block_len: usize,
    hop: usize,
) -> Result<Vec<BlockSdr>> {
    check_lengths(x.len(), xhat.len())?;
    if block_len == 0 || hop == 0 || block_len > x.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= block_len <= {} and hop >= 1 (got {block_len}, {hop})",
            x.len()
        )));
    }
    Ok((0..=(x.len() - block_len) / hop)
        .map(|index| {
            let start = index * hop;
            let range = start..start + block_len;
            BlockSdr {
                index,
                start,
                sdr_db: sdr(&x[range.clone()], &xhat[range]).ok(),
            }
        })
        .collect())
}

/// Arithmetic mean of dB values, or `None` if the slice is empty or holds a
/// non-finite value.
pub fn mean_db(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Formats a dB value for reports; infinities become `inf` / `-inf`.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.6}")
    }
}
