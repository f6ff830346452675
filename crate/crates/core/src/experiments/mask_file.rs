//! JSON sidecar describing a clipping mask.
//!
//! ```json
//! {"theta_c": 0.3, "length": 80000, "high": [[120, 4], ...], "low": [[300, 2], ...]}
//! ```
//!
//! `high` and `low` hold `[start, run_length]` pairs; every other index is
//! reliable.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clip_model::{ClipMask, SampleClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub theta_c: f64,
    pub length: usize,
    pub high: Vec<[usize; 2]>,
    pub low: Vec<[usize; 2]>,
}

fn runs(mask: &ClipMask, class: SampleClass) -> Vec<[usize; 2]> {
    let mut out: Vec<[usize; 2]> = Vec::new();
    for (n, &c) in mask.classes().iter().enumerate() {
        if c != class {
            continue;
        }
        match out.last_mut() {
            Some([start, len]) if *start + *len == n => *len += 1,
            _ => out.push([n, 1]),
        }
    }
    out
}

impl MaskFile {
    pub fn from_mask(mask: &ClipMask) -> Self {
        Self {
            theta_c: mask.theta_c(),
            length: mask.len(),
            high: runs(mask, SampleClass::High),
            low: runs(mask, SampleClass::Low),
        }
    }

    pub fn to_mask(&self) -> Result<ClipMask> {
        let mut classes = vec![SampleClass::Reliable; self.length];
        for (list, class) in [
            (&self.high, SampleClass::High),
            (&self.low, SampleClass::Low),
        ] {
            for &[start, len] in list {
                let end = start
                    .checked_add(len)
                    .filter(|&e| e <= self.length)
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "mask run [{start}, {len}] exceeds length {}",
                            self.length
                        ))
                    })?;
                for c in &mut classes[start..end] {
                    if *c != SampleClass::Reliable {
                        return Err(Error::InvalidParameter(format!(
                            "mask runs overlap inside [{start}, {end})"
                        )));
                    }
                    *c = class;
                }
            }
        }
        ClipMask::new(classes, self.theta_c)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ClipMask> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: MaskFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        file.to_mask()
    }

    pub fn write(mask: &ClipMask, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&Self::from_mask(mask)).expect("mask serializes");
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
