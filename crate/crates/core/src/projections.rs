//! Projections onto the consistency set.
//!
//! * [`proj_time`]: signal-domain clamp used by the analysis variant.
//! * [`proj_synthesis`]: coefficient-domain projection onto
//!   `{z : D z in [lower, upper]}`, evaluated in closed form as
//!   `v - D*(D v - clamp(D v))`. Exact for any frame with `D D* = I`.
//! * [`proj_oracle`]: slow reference for the same coefficient-domain problem,
//!   solved by Dykstra's alternating projections onto one slab per signal
//!   sample. It only probes `D` column by column and never uses `D D* = I`.

use num_complex::Complex64;

use crate::clip_model::Bounds;
use crate::error::{Error, Result};
use crate::frames::{CoefVector, Frame};

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

pub(crate) fn clamp_in_place(w: &mut [f64], b: &Bounds) {
    for (v, (&lo, &hi)) in w.iter_mut().zip(b.lower.iter().zip(&b.upper)) {
        *v = v.max(lo).min(hi);
    }
}

/// Elementwise `min(max(lower, w), upper)`.
pub fn proj_box(w: &[f64], b: &Bounds) -> Result<Vec<f64>> {
    check_len(b.len(), w.len())?;
    let mut out = w.to_vec();
    clamp_in_place(&mut out, b);
    Ok(out)
}

pub fn proj_time<F: Frame + ?Sized>(v: &[Complex64], f: &F, b: &Bounds) -> Result<Vec<f64>> {
    check_len(f.coef_len(), v.len())?;
    check_len(f.signal_len(), b.len())?;
    let mut out = vec![0.0; f.signal_len()];
    f.synthesize(v, &mut out);
    clamp_in_place(&mut out, b);
    Ok(out)
}

pub fn proj_synthesis<F: Frame + ?Sized>(v: &[Complex64], f: &F, b: &Bounds) -> Result<CoefVector> {
    check_len(f.coef_len(), v.len())?;
    check_len(f.signal_len(), b.len())?;
    let mut signal = vec![0.0; f.signal_len()];
    let mut correction = vec![Complex64::new(0.0, 0.0); f.coef_len()];
    let mut out = vec![Complex64::new(0.0, 0.0); f.coef_len()];
    project_coefficients(f, v, b, &mut signal, &mut correction, &mut out);
    Ok(CoefVector(out))
}

/// Buffer-reusing form of [`proj_synthesis`]. Costs one synthesis and one
/// analysis. On return `signal` holds `clamp(D v)`.
pub(crate) fn project_coefficients<F: Frame + ?Sized>(
    f: &F,
    v: &[Complex64],
    b: &Bounds,
    signal: &mut [f64],
    correction: &mut [Complex64],
    out: &mut [Complex64],
) {
    f.synthesize(v, signal);
    let residual: Vec<f64> = signal
        .iter_mut()
        .zip(b.lower.iter().zip(&b.upper))
        .map(|(s, (&lo, &hi))| {
            let clamped = s.max(lo).min(hi);
            let r = *s - clamped;
            *s = clamped;
            r
        })
        .collect();
    f.analyze(&residual, correction);
    for ((o, &vi), &ci) in out.iter_mut().zip(v).zip(correction.iter()) {
        *o = vi - ci;
    }
}

const ORACLE_MAX_SWEEPS: usize = 100_000;

/// Reference solution of `argmin |z - v|` subject to `D z in [lower, upper]`.
///
/// Intended for small problems (`L <= 16`, `M <= 32`). Iterates Dykstra
/// sweeps until the iterate moves by less than `tol` in one sweep.
pub fn proj_oracle<F: Frame + ?Sized>(
    v: &[Complex64],
    f: &F,
    b: &Bounds,
    tol: f64,
) -> Result<CoefVector> {
    let (l, m) = (f.signal_len(), f.coef_len());
    check_len(m, v.len())?;
    check_len(l, b.len())?;
    if l > 16 || m > 32 {
        return Err(Error::InvalidParameter(format!(
            "oracle is limited to L <= 16, M <= 32 (got L={l}, M={m})"
        )));
    }

    // rows of D as real functionals on [Re z, Im z]
    let dim = 2 * m;
    let mut rows = vec![vec![0.0; dim]; l];
    let mut unit = vec![Complex64::new(0.0, 0.0); m];
    let mut column = vec![0.0; l];
    for j in 0..dim {
        unit[j % m] = if j < m {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        f.synthesize(&unit, &mut column);
        for (row, &c) in rows.iter_mut().zip(&column) {
            row[j] = c;
        }
        unit[j % m] = Complex64::new(0.0, 0.0);
    }
    let row_norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|a| a * a).sum()).collect();

    let mut x: Vec<f64> = v
        .iter()
        .map(|c| c.re)
        .chain(v.iter().map(|c| c.im))
        .collect();
    let mut increments = vec![vec![0.0; dim]; l];
    let mut trial = vec![0.0; dim];
    for sweep in 0..ORACLE_MAX_SWEEPS {
        let mut moved = 0.0f64;
        for n in 0..l {
            for ((t, &xi), &qi) in trial.iter_mut().zip(&x).zip(&increments[n]) {
                *t = xi + qi;
            }
            let dot: f64 = rows[n].iter().zip(&trial).map(|(a, b)| a * b).sum();
            let excess = dot - dot.max(b.lower[n]).min(b.upper[n]);
            if row_norms[n] > 0.0 && excess != 0.0 {
                let scale = excess / row_norms[n];
                trial
                    .iter_mut()
                    .zip(&rows[n])
                    .for_each(|(t, r)| *t -= scale * r);
            }
            for ((q, &t), xi) in increments[n].iter_mut().zip(&trial).zip(x.iter_mut()) {
                moved = moved.max((t - *xi).abs());
                *q = *xi + *q - t;
                *xi = t;
            }
        }
        if sweep > 0 && moved < tol {
            let out = (0..m).map(|i| Complex64::new(x[i], x[m + i])).collect();
            return Ok(CoefVector(out));
        }
    }
    Err(Error::NoConvergence(ORACLE_MAX_SWEEPS))
}
