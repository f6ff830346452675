//! Analysis (A-SPADE) and synthesis (S-SPADE) declipping loops.
//!
//! Both variants alternate pair-coupled hard thresholding with an exact
//! projection onto the consistency set and a dual update, relaxing the
//! sparsity level `k` as they go. With a Parseval tight frame each iteration
//! of either variant costs one analysis and one synthesis; the call counts
//! are recorded in [`IterationStats`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clip_model::{is_consistent, Bounds};
use crate::error::{Error, Result};
use crate::frames::{CoefVector, Frame};
use crate::projections::{clamp_in_place, project_coefficients};
use crate::sparsity::{current_k, group_count, threshold_in_place, SpadeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Aspade,
    Sspade,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Aspade, Algorithm::Sspade];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Aspade => "aspade",
            Algorithm::Sspade => "sspade",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aspade" | "a-spade" => Ok(Algorithm::Aspade),
            "sspade" | "s-spade" => Ok(Algorithm::Sspade),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EpsilonReached,
    MaxIter,
    KSaturated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations: usize,
    pub final_k: usize,
    /// Termination-function value after every iteration.
    pub residual_trace: Vec<f64>,
    pub analysis_calls: usize,
    pub synthesis_calls: usize,
    pub terminated_by: Termination,
}

struct Relaxation {
    total_groups: usize,
    saturated_iters: usize,
    saturation_limit: usize,
}

impl Relaxation {
    fn new<F: Frame + ?Sized>(f: &F) -> Self {
        Self {
            total_groups: group_count(f.coef_len(), f.channels()),
            saturated_iters: 0,
            saturation_limit: f.signal_len(),
        }
    }

    fn k(&self, iter: usize, p: &SpadeParams) -> usize {
        current_k(iter, p).min(self.total_groups)
    }

    /// Records one more iteration at `k`; true once `k` has sat at the group
    /// count for `saturation_limit` iterations.
    fn exhausted(&mut self, k: usize) -> bool {
        if k >= self.total_groups {
            self.saturated_iters += 1;
        }
        self.saturated_iters >= self.saturation_limit
    }
}

fn check_inputs<F: Frame + ?Sized>(y: &[f64], b: &Bounds, f: &F, p: &SpadeParams) -> Result<()> {
    p.validate()?;
    for len in [y.len(), b.len()] {
        if len != f.signal_len() {
            return Err(Error::LengthMismatch {
                expected: f.signal_len(),
                actual: len,
            });
        }
    }
    if !is_consistent(y, b, 1e-9) {
        return Err(Error::InvalidParameter(
            "observed block lies outside its own bounds".into(),
        ));
    }
    Ok(())
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Analysis-model SPADE. Returns the restored block, which always lies in
/// the box `b` because the last step of every iteration is a clamp.
pub fn aspade<F: Frame + ?Sized>(
    y: &[f64],
    b: &Bounds,
    f: &F,
    p: &SpadeParams,
) -> Result<(Vec<f64>, IterationStats)> {
    check_inputs(y, b, f, p)?;
    let m = f.coef_len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = y.to_vec();
    let mut ax = vec![zero; m];
    let mut u = vec![zero; m];
    let mut zbar = vec![zero; m];
    let mut v = vec![zero; m];
    f.analyze(&x, &mut ax);
    let mut analysis_calls = 1;
    let mut synthesis_calls = 0;

    let mut relax = Relaxation::new(f);
    let mut trace = Vec::new();
    let mut iter = 0;
    let (k, terminated_by) = loop {
        iter += 1;
        let k = relax.k(iter, p);
        for ((z, &a), &ui) in zbar.iter_mut().zip(&ax).zip(&u) {
            *z = a + ui;
        }
        threshold_in_place(&mut zbar, f.channels(), k);
        for ((vi, &z), &ui) in v.iter_mut().zip(&zbar).zip(&u) {
            *vi = z - ui;
        }
        f.synthesize(&v, &mut x);
        synthesis_calls += 1;
        clamp_in_place(&mut x, b);
        f.analyze(&x, &mut ax);
        analysis_calls += 1;

        let residual = diff_norm(&ax, &zbar);
        if !residual.is_finite() {
            return Err(Error::NonFinite("A-SPADE residual"));
        }
        trace.push(residual);
        if residual <= p.epsilon {
            break (k, Termination::EpsilonReached);
        }
        for ((ui, &a), &z) in u.iter_mut().zip(&ax).zip(&zbar) {
            *ui += a - z;
        }
        if iter >= p.max_iter {
            break (k, Termination::MaxIter);
        }
        if relax.exhausted(k) {
            break (k, Termination::KSaturated);
        }
    };

    let stats = IterationStats {
        iterations: iter,
        final_k: k,
        residual_trace: trace,
        analysis_calls,
        synthesis_calls,
        terminated_by,
    };
    Ok((x, stats))
}

/// Synthesis-model SPADE with the closed-form coefficient projection.
/// Returns the restored block `D z`, the final coefficients `z`, and stats.
pub fn sspade<F: Frame + ?Sized>(
    y: &[f64],
    b: &Bounds,
    f: &F,
    p: &SpadeParams,
) -> Result<(Vec<f64>, CoefVector, IterationStats)> {
    check_inputs(y, b, f, p)?;
    let m = f.coef_len();
    let zero = Complex64::new(0.0, 0.0);
    let mut zhat = vec![zero; m];
    let mut u = vec![zero; m];
    let mut zbar = vec![zero; m];
    let mut v = vec![zero; m];
    let mut correction = vec![zero; m];
    let mut signal = vec![0.0; f.signal_len()];
    f.analyze(y, &mut zhat);
    let mut analysis_calls = 1;
    let mut synthesis_calls = 0;

    let mut relax = Relaxation::new(f);
    let mut trace = Vec::new();
    let mut iter = 0;
    let (k, terminated_by) = loop {
        iter += 1;
        let k = relax.k(iter, p);
        for ((z, &zh), &ui) in zbar.iter_mut().zip(&zhat).zip(&u) {
            *z = zh + ui;
        }
        threshold_in_place(&mut zbar, f.channels(), k);
        for ((vi, &z), &ui) in v.iter_mut().zip(&zbar).zip(&u) {
            *vi = z - ui;
        }
        project_coefficients(f, &v, b, &mut signal, &mut correction, &mut zhat);
        synthesis_calls += 1;
        analysis_calls += 1;

        let residual = diff_norm(&zhat, &zbar);
        if !residual.is_finite() {
            return Err(Error::NonFinite("S-SPADE residual"));
        }
        trace.push(residual);
        if residual <= p.epsilon {
            break (k, Termination::EpsilonReached);
        }
        for ((ui, &zh), &z) in u.iter_mut().zip(&zhat).zip(&zbar) {
            *ui += zh - z;
        }
        if iter >= p.max_iter {
            break (k, Termination::MaxIter);
        }
        if relax.exhausted(k) {
            break (k, Termination::KSaturated);
        }
    };

    f.synthesize(&zhat, &mut signal);
    synthesis_calls += 1;

    let stats = IterationStats {
        iterations: iter,
        final_k: k,
        residual_trace: trace,
        analysis_calls,
        synthesis_calls,
        terminated_by,
    };
    Ok((signal, CoefVector(zhat), stats))
}

/// Runs either variant and returns only the restored block and stats.
pub fn declip_block<F: Frame + ?Sized>(
    algo: Algorithm,
    y: &[f64],
    b: &Bounds,
    f: &F,
    p: &SpadeParams,
) -> Result<(Vec<f64>, IterationStats)> {
    match algo {
        Algorithm::Aspade => aspade(y, b, f, p),
        Algorithm::Sspade => sspade(y, b, f, p).map(|(x, _, s)| (x, s)),
    }
}
