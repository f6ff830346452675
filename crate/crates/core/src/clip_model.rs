//! Hard clipping, the reliable/high/low sample partition, and the
//! consistency set expressed as per-sample interval bounds.

use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleClass {
    Reliable,
    High,
    Low,
}

/// Partition of sample indices into reliable, clipped-high and clipped-low
/// sets, together with the clipping threshold.
///
/// Stored as one class per sample, so the three sets are disjoint and cover
/// every index by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipMask {
    classes: Vec<SampleClass>,
    theta_c: f64,
}

impl ClipMask {
    pub fn new(classes: Vec<SampleClass>, theta_c: f64) -> Result<Self> {
        check_threshold(theta_c)?;
        Ok(Self { classes, theta_c })
    }

    pub fn all_reliable(len: usize, theta_c: f64) -> Result<Self> {
        Self::new(vec![SampleClass::Reliable; len], theta_c)
    }

    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[SampleClass] {
        &self.classes
    }

    pub fn class(&self, n: usize) -> SampleClass {
        self.classes[n]
    }

    fn indices(&self, class: SampleClass) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter_map(|(n, &c)| (c == class).then_some(n))
            .collect()
    }

    pub fn reliable(&self) -> Vec<usize> {
        self.indices(SampleClass::Reliable)
    }

    pub fn high(&self) -> Vec<usize> {
        self.indices(SampleClass::High)
    }

    pub fn low(&self) -> Vec<usize> {
        self.indices(SampleClass::Low)
    }

    pub fn clipped_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|&&c| c != SampleClass::Reliable)
            .count()
    }

    pub fn has_clipped(&self) -> bool {
        self.classes.iter().any(|&c| c != SampleClass::Reliable)
    }

    /// Mask restricted to `start..start + len`; indices past the end are
    /// treated as reliable (zero padding).
    pub fn window(&self, start: isize, len: usize) -> ClipMask {
        let classes = (0..len)
            .map(|i| {
                let n = start + i as isize;
                if n >= 0 && (n as usize) < self.classes.len() {
                    self.classes[n as usize]
                } else {
                    SampleClass::Reliable
                }
            })
            .collect();
        ClipMask {
            classes,
            theta_c: self.theta_c,
        }
    }
}

fn check_threshold(theta_c: f64) -> Result<()> {
    if theta_c > 0.0 && theta_c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "clipping threshold must be positive and finite, got {theta_c}"
        )))
    }
}

/// Per-sample bounds of the consistency set. Unbounded sides are stored as
/// `±f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if let Some(n) = lower
            .iter()
            .zip(&upper)
            .position(|(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan())
        {
            return Err(Error::InvalidParameter(format!(
                "bounds at index {n} are empty: [{}, {}]",
                lower[n], upper[n]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Largest amount by which `x` leaves the box (0 when inside).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Clips `x` at `±theta_c`. Samples with `|x[n]| >= theta_c` are clipped.
pub fn hard_clip(x: &Signal, theta_c: f64) -> Result<(Signal, ClipMask)> {
    check_threshold(theta_c)?;
    let mut classes = Vec::with_capacity(x.len());
    let y = x
        .samples()
        .iter()
        .map(|&v| {
            if v >= theta_c {
                classes.push(SampleClass::High);
                theta_c
            } else if v <= -theta_c {
                classes.push(SampleClass::Low);
                -theta_c
            } else {
                classes.push(SampleClass::Reliable);
                v
            }
        })
        .collect();
    Ok((x.with_samples(y)?, ClipMask { classes, theta_c }))
}

/// Recovers the mask of a signal clipped at `theta_c`.
pub fn detect_mask(y: &Signal, theta_c: f64) -> Result<ClipMask> {
    check_threshold(theta_c)?;
    let classes = y
        .samples()
        .iter()
        .map(|&v| {
            if v >= theta_c {
                SampleClass::High
            } else if v <= -theta_c {
                SampleClass::Low
            } else {
                SampleClass::Reliable
            }
        })
        .collect();
    Ok(ClipMask { classes, theta_c })
}

pub fn make_bounds(y: &[f64], mask: &ClipMask) -> Result<Bounds> {
    make_windowed_bounds(y, mask, &vec![1.0; y.len()])
}

/// Bounds for a block that has been multiplied by `window`. The clipping
/// threshold is scaled by the window gain at every sample; `y_block` is the
/// already-windowed observation.
pub fn make_windowed_bounds(y_block: &[f64], mask: &ClipMask, window: &[f64]) -> Result<Bounds> {
    for len in [mask.len(), window.len()] {
        if len != y_block.len() {
            return Err(Error::LengthMismatch {
                expected: y_block.len(),
                actual: len,
            });
        }
    }
    if let Some(n) = window.iter().position(|&w| w < 0.0 || w.is_nan()) {
        return Err(Error::InvalidParameter(format!(
            "window gain at {n} is negative ({})",
            window[n]
        )));
    }
    let theta = mask.theta_c;
    let (lower, upper) = y_block
        .iter()
        .zip(&mask.classes)
        .zip(window)
        .map(|((&y, &class), &w)| match class {
            SampleClass::Reliable => (y, y),
            SampleClass::High => (w * theta, f64::INFINITY),
            SampleClass::Low => (f64::NEG_INFINITY, -w * theta),
        })
        .unzip();
    Ok(Bounds { lower, upper })
}

pub fn is_consistent(x: &[f64], bounds: &Bounds, tol: f64) -> bool {
    x.len() == bounds.len()
        && x.iter()
            .zip(bounds.lower.iter().zip(&bounds.upper))
            .all(|(&v, (&lo, &hi))| lo - tol <= v && v <= hi + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SampleClass::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec(), 16_000).unwrap()
    }

    #[test]
    fn clip_examples() {
        let (y, m) = hard_clip(&sig(&[0.5, -0.9, 0.2]), 0.6).unwrap();
        assert_eq!(y.samples(), &[0.5, -0.6, 0.2]);
        assert_eq!(m.reliable(), vec![0, 2]);
        assert_eq!(m.low(), vec![1]);
        assert!(m.high().is_empty());

        let x = sig(&[0.1, -0.2, 0.3]);
        let (y, m) = hard_clip(&x, 0.5).unwrap();
        assert_eq!(y, x);
        assert!(!m.has_clipped());

        let (y, m) = hard_clip(&sig(&[0.6]), 0.6).unwrap();
        assert_eq!(y.samples(), &[0.6]);
        assert_eq!(m.high(), vec![0]);

        assert!(hard_clip(&x, 0.0).is_err());
        assert!(hard_clip(&x, -1.0).is_err());
    }

    #[test]
    fn detect_examples() {
        let m = detect_mask(&sig(&[0.1, 0.6, -0.6]), 0.6).unwrap();
        assert_eq!(m.classes(), &[Reliable, High, Low]);
        let m = detect_mask(&sig(&[0.0]), 0.5).unwrap();
        assert_eq!(m.classes(), &[Reliable]);
    }

    #[test]
    fn bounds_examples() {
        let m = ClipMask::new(vec![Reliable, High, Low], 0.6).unwrap();
        let b = make_bounds(&[0.5, 0.6, -0.6], &m).unwrap();
        assert_eq!(b.lower, vec![0.5, 0.6, f64::NEG_INFINITY]);
        assert_eq!(b.upper, vec![0.5, f64::INFINITY, -0.6]);

        let m = ClipMask::all_reliable(1, 0.5).unwrap();
        let b = make_bounds(&[0.3], &m).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (0.3, 0.3));
    }

    #[test]
    fn windowed_bounds_examples() {
        let m = ClipMask::new(vec![Reliable, High, Low], 0.6).unwrap();
        let y = [0.5, 0.6, -0.6];
        assert_eq!(
            make_windowed_bounds(&y, &m, &[1.0; 3]).unwrap(),
            make_bounds(&y, &m).unwrap()
        );

        let m = ClipMask::all_reliable(1, 0.6).unwrap();
        let b = make_windowed_bounds(&[0.0], &m, &[0.0]).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (0.0, 0.0));

        let m = ClipMask::new(vec![High], 0.6).unwrap();
        let b = make_windowed_bounds(&[0.3], &m, &[0.5]).unwrap();
        assert_eq!(b.lower, vec![0.3]);
        assert_eq!(b.upper, vec![f64::INFINITY]);

        let m = ClipMask::new(vec![High, Low], 0.6).unwrap();
        let b = make_windowed_bounds(&[0.0, 0.0], &m, &[0.0, 0.0]).unwrap();
        assert_eq!(b.lower, vec![0.0, f64::NEG_INFINITY]);
        assert_eq!(b.upper, vec![f64::INFINITY, 0.0]);

        assert!(make_windowed_bounds(&[0.3], &m.window(0, 1), &[-0.1]).is_err());
        assert!(make_windowed_bounds(&[0.3, 0.1], &m, &[1.0]).is_err());
    }

    #[test]
    fn consistency_examples() {
        let (y, m) = hard_clip(&sig(&[0.5, 0.9, -0.9, 0.1]), 0.6).unwrap();
        let b = make_bounds(y.samples(), &m).unwrap();
        assert!(is_consistent(y.samples(), &b, 0.0));
        let mut p = y.samples().to_vec();
        p[0] += 1e-3;
        assert!(!is_consistent(&p, &b, 0.0));
        let mut p = y.samples().to_vec();
        p[1] = 0.6 + 5.0;
        assert!(is_consistent(&p, &b, 0.0));
    }

    #[test]
    fn window_pads_with_reliable() {
        let m = ClipMask::new(vec![High, Low], 0.5).unwrap();
        assert_eq!(m.window(-1, 4).classes(), &[Reliable, High, Low, Reliable]);
    }

    proptest! {
        #[test]
        fn clip_properties(v in prop::collection::vec(-2.0f64..2.0, 1..64), theta in 0.05f64..1.5) {
            let x = sig(&v);
            let (y, mask) = hard_clip(&x, theta).unwrap();
            let (yy, mask2) = hard_clip(&y, theta).unwrap();
            prop_assert_eq!(&yy, &y);
            prop_assert_eq!(&mask2, &mask);
            prop_assert_eq!(&detect_mask(&y, theta).unwrap(), &mask);
            let b = make_bounds(y.samples(), &mask).unwrap();
            prop_assert!(is_consistent(x.samples(), &b, 0.0));
            prop_assert!(is_consistent(y.samples(), &b, 0.0));
            let total = mask.reliable().len() + mask.high().len() + mask.low().len();
            prop_assert_eq!(total, v.len());
        }
    }
}
