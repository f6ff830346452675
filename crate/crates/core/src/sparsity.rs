//! Hard thresholding with conjugate-pair coupling, and the sparsity
//! relaxation schedule.
//!
//! Within a block of `M` DFT bins, bins `m` and `M - m` form one group (DC,
//! and Nyquist for even `M`, are groups of one). Thresholding keeps whole
//! groups so that the synthesized signal stays real. `k` always counts
//! groups.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::CoefVector;

/// Relaxation and termination settings shared by both SPADE variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpadeParams {
    /// Groups added at each relaxation step.
    pub s: usize,
    /// Iterations between relaxation steps.
    pub r: usize,
    /// Absolute l2 tolerance of the termination function.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for SpadeParams {
    fn default() -> Self {
        Self {
            s: 1,
            r: 1,
            epsilon: 0.1,
            max_iter: 3000,
        }
    }
}

impl SpadeParams {
    pub fn new(s: usize, r: usize, epsilon: f64, max_iter: usize) -> Result<Self> {
        let p = Self {
            s,
            r,
            epsilon,
            max_iter,
        };
        p.validate()?;
        Ok(p)
    }

    /// Defaults for processing a whole signal at once (`s = 100`).
    pub fn whole_signal() -> Self {
        Self {
            s: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0
            || self.r == 0
            || self.max_iter == 0
            || self.epsilon.is_nan()
            || self.epsilon <= 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "need s >= 1, r >= 1, epsilon > 0, max_iter >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Sparsity level in effect at 1-based iteration `iter`: starts at `s` and
/// grows by `s` after every `r` completed iterations.
pub fn current_k(iter: usize, p: &SpadeParams) -> usize {
    debug_assert!(iter >= 1);
    p.s * (1 + (iter.saturating_sub(1)) / p.r)
}

/// Number of conjugate-pair groups in one block of `channels` bins.
pub fn groups_per_block(channels: usize) -> usize {
    channels / 2 + 1
}

/// Total group count of a coefficient vector made of `len / channels` blocks.
pub fn group_count(len: usize, channels: usize) -> usize {
    (len / channels) * groups_per_block(channels)
}

/// Largest `|z[m] - conj(z[M - m])|` over all blocks.
pub fn symmetry_residual(z: &[Complex64], channels: usize) -> f64 {
    z.chunks(channels)
        .flat_map(|block| {
            let m = block.len();
            (0..m).map(move |i| (block[i] - block[(m - i) % m].conj()).norm())
        })
        .fold(0.0, f64::max)
}

/// Keeps the `k` largest conjugate-pair groups of a single-block vector.
pub fn hard_threshold(z: &CoefVector, k: usize) -> Result<CoefVector> {
    hard_threshold_blocks(z, z.len().max(1), k)
}

/// Keeps the `k` largest groups across all blocks of `channels` bins,
/// ranked jointly. Ties go to the lower (block, bin) index.
pub fn hard_threshold_blocks(z: &[Complex64], channels: usize, k: usize) -> Result<CoefVector> {
    if channels == 0 || !z.len().is_multiple_of(channels) {
        return Err(Error::LengthMismatch {
            expected: channels * (z.len() / channels.max(1) + 1),
            actual: z.len(),
        });
    }
    let peak = z.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let residual = symmetry_residual(z, channels);
    if residual > 1e-9 * peak.max(1.0) {
        return Err(Error::NotConjugateSymmetric(residual));
    }
    let mut out = z.to_vec();
    threshold_in_place(&mut out, channels, k);
    Ok(CoefVector(out))
}

fn rank(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Unchecked in-place thresholding used inside the iteration loops.
pub(crate) fn threshold_in_place(z: &mut [Complex64], channels: usize, k: usize) {
    let per_block = groups_per_block(channels);
    let total = group_count(z.len(), channels);
    if k >= total {
        return;
    }
    let zero = Complex64::new(0.0, 0.0);
    if k == 0 {
        z.fill(zero);
        return;
    }
    let mut groups: Vec<(f64, usize)> = (0..total)
        .map(|g| {
            let (block, bin) = (g / per_block, g % per_block);
            (z[block * channels + bin].norm(), g)
        })
        .collect();
    groups.select_nth_unstable_by(k - 1, rank);
    let mut keep = vec![false; total];
    for &(_, g) in &groups[..k] {
        keep[g] = true;
    }
    for (block_idx, block) in z.chunks_mut(channels).enumerate() {
        let kept = &keep[block_idx * per_block..(block_idx + 1) * per_block];
        for (bin, &kept) in kept.iter().enumerate() {
            if !kept {
                block[bin] = zero;
                block[(channels - bin) % channels] = zero;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{analysis, FrameOperator};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example() -> CoefVector {
        CoefVector(vec![c(0.5, 0.0), c(1.0, 1.0), c(3.0, 0.0), c(1.0, -1.0)])
    }

    #[test]
    fn enumerated_groups() {
        let z = example();
        assert_eq!(
            hard_threshold(&z, 1).unwrap().0,
            vec![c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)]
        );
        assert_eq!(
            hard_threshold(&z, 2).unwrap().0,
            vec![c(0.0, 0.0), c(1.0, 1.0), c(3.0, 0.0), c(1.0, -1.0)]
        );
        assert!(hard_threshold(&z, 0)
            .unwrap()
            .iter()
            .all(|v| v.norm() == 0.0));
        assert_eq!(hard_threshold(&z, 3).unwrap(), z);
        assert_eq!(hard_threshold(&z, 100).unwrap(), z);
    }

    #[test]
    fn ties_prefer_lower_bins() {
        let z = CoefVector(vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let out = hard_threshold(&z, 2).unwrap();
        assert_eq!(
            out.0,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
        );
    }

    #[test]
    fn odd_length_groups() {
        // M = 5: groups {0}, {1,4}, {2,3}
        assert_eq!(groups_per_block(5), 3);
        let z = CoefVector(vec![
            c(0.1, 0.0),
            c(0.0, 2.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, -2.0),
        ]);
        let out = hard_threshold(&z, 1).unwrap();
        assert_eq!(out.0[1], c(0.0, 2.0));
        assert_eq!(out.0[4], c(0.0, -2.0));
        assert_eq!(out.0[2], c(0.0, 0.0));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let z = CoefVector(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            hard_threshold(&z, 1),
            Err(Error::NotConjugateSymmetric(_))
        ));
    }

    #[test]
    fn joint_ranking_across_blocks() {
        // two blocks of 2 bins: groups {0},{1} each
        let z = vec![c(1.0, 0.0), c(4.0, 0.0), c(3.0, 0.0), c(2.0, 0.0)];
        let out = hard_threshold_blocks(&z, 2, 2).unwrap();
        assert_eq!(
            out.0,
            vec![c(0.0, 0.0), c(4.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn schedule() {
        let p = SpadeParams::default();
        assert_eq!(
            (1..=4).map(|i| current_k(i, &p)).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
        let p = SpadeParams { s: 100, ..p };
        assert_eq!(current_k(3, &p), 300);
        let p = SpadeParams { s: 2, r: 3, ..p };
        let ks: Vec<_> = (1..=7).map(|i| current_k(i, &p)).collect();
        assert_eq!(ks, vec![2, 2, 2, 4, 4, 4, 6]);
    }

    #[test]
    fn params_validation() {
        assert!(SpadeParams::new(0, 1, 0.1, 10).is_err());
        assert!(SpadeParams::new(1, 0, 0.1, 10).is_err());
        assert!(SpadeParams::new(1, 1, 0.0, 10).is_err());
        assert!(SpadeParams::new(1, 1, 0.1, 0).is_err());
        assert!(SpadeParams::new(1, 1, 0.1, 1).is_ok());
    }

    proptest! {
        #[test]
        fn threshold_properties(l in 2usize..24, red in 1usize..4, seed in any::<u64>()) {
            let f = FrameOperator::with_redundancy(l, red).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = analysis(&f, &x).unwrap();
            let total = groups_per_block(z.len());
            let mut last_err = f64::INFINITY;
            for k in 0..=total + 1 {
                let h = hard_threshold(&z, k).unwrap();
                let nonzero = h.iter().filter(|v| v.norm() > 0.0).count();
                prop_assert!(nonzero <= 2 * k);
                prop_assert_eq!(hard_threshold(&h, k).unwrap(), h.clone());
                prop_assert!(symmetry_residual(&h, h.len()) <= 1e-12);
                let err = crate::frames::norm(
                    &z.iter().zip(h.iter()).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                prop_assert!(err <= last_err + 1e-15);
                last_err = err;
                let synth = f.synthesis_complex(&h).unwrap();
                prop_assert!(synth.iter().all(|v| v.im.abs() <= 1e-12));
            }
        }
    }
}
