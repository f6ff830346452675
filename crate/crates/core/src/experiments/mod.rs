//! Batch experiments over signals, clipping thresholds, transform settings
//! and algorithms, with CSV reporting.
//!
//! Files written by [`ExperimentOutcome::write`]:
//!
//! * `results.csv`: one row per (signal, threshold, transform, algorithm).
//!   `wall_time_ms` is always the last column and is the only
//!   non-deterministic field.
//! * `summary.csv`: mean ΔSDR and iteration counts per cell, averaged over
//!   signals.
//! * `input_sdr.csv`: mean input SDR per threshold, whole signal and clipped
//!   samples only, one column per threshold.
//! * `blockwise.csv`: per-block SDR of both algorithms side by side (only
//!   when `blockwise_len` is set).
//! * `run.json`: the configuration that produced the run.

pub mod mask_file;
pub mod synthetic;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio_io::{peak_normalize, read_wav, Signal};
use crate::clip_model::{hard_clip, ClipMask};
use crate::error::{Error, Result};
use crate::metrics::{
    blockwise_sdr, delta_sdr_invariance_check, format_db, mean_db, sdr, sdr_clipped_only,
};
use crate::parallel::Execution;
use crate::segmentation::{declip, Mode, TransformConfig, WindowKind};
use crate::spade::Algorithm;
use crate::sparsity::SpadeParams;

pub use mask_file::MaskFile;
pub use synthetic::{make_synthetic, Generator, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusEntry {
    Wav {
        path: PathBuf,
    },
    Synthetic {
        #[serde(flatten)]
        spec: SyntheticSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformGrid {
    pub win_lens: Vec<usize>,
    pub overlaps: Vec<f64>,
    pub redundancies: Vec<usize>,
    #[serde(default = "default_window")]
    pub window: WindowKind,
    #[serde(default = "default_mode")]
    pub mode: Mode,
}

fn default_window() -> WindowKind {
    WindowKind::Hann
}

fn default_mode() -> Mode {
    Mode::Segmented
}

impl TransformGrid {
    pub fn points(&self) -> Vec<TransformConfig> {
        let mut out = Vec::new();
        for &win_len in &self.win_lens {
            for &overlap_fraction in &self.overlaps {
                for &redundancy in &self.redundancies {
                    out.push(TransformConfig {
                        win_len,
                        overlap_fraction,
                        window_kind: self.window,
                        redundancy,
                        mode: self.mode,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: Vec<CorpusEntry>,
    pub thresholds: Vec<f64>,
    pub transform: TransformGrid,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub params: SpadeParams,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Length of the rectangular blocks for per-block SDR; off when absent.
    #[serde(default)]
    pub blockwise_len: Option<usize>,
    /// Hop between per-block SDR blocks; defaults to `blockwise_len`.
    #[serde(default)]
    pub blockwise_hop: Option<usize>,
}

/// Clipping thresholds 0.1, 0.2, ..., 0.9.
pub fn standard_thresholds() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

/// Five 5-second sparse-sine signals.
pub fn synthetic_corpus() -> Vec<CorpusEntry> {
    (0..5)
        .map(|_| CorpusEntry::Synthetic {
            spec: SyntheticSpec::sparse_sines(5),
        })
        .collect()
}

impl ExperimentConfig {
    /// Named experiment layouts: `whole`, `segmented`, `window_length`,
    /// `overlap`. All use the synthetic corpus and the full threshold sweep.
    pub fn preset(name: &str) -> Result<Self> {
        let grid = |win_lens: Vec<usize>, overlaps: Vec<f64>, redundancies: Vec<usize>, mode| {
            TransformGrid {
                win_lens,
                overlaps,
                redundancies,
                window: WindowKind::Hann,
                mode,
            }
        };
        let (transform, params) = match name {
            "whole" => (
                grid(vec![1024], vec![0.75], vec![1, 2, 4], Mode::WholeSignal),
                SpadeParams::whole_signal(),
            ),
            "segmented" => (
                grid(vec![1024], vec![0.75], vec![1, 2, 4], Mode::Segmented),
                SpadeParams::default(),
            ),
            "window_length" => (
                grid(
                    vec![512, 1024, 2048, 4096],
                    vec![0.75],
                    vec![2],
                    Mode::Segmented,
                ),
                SpadeParams::default(),
            ),
            "overlap" => (
                grid(vec![1024], vec![0.25, 0.5, 0.75], vec![2], Mode::Segmented),
                SpadeParams::default(),
            ),
            other => return Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
        };
        Ok(Self {
            corpus: synthetic_corpus(),
            thresholds: standard_thresholds(),
            transform,
            algorithms: Algorithm::ALL.to_vec(),
            params,
            output_dir: PathBuf::from(format!("results/{name}")),
            seed: 0,
            blockwise_len: None,
            blockwise_hop: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_empty()
            || self.thresholds.is_empty()
            || self.algorithms.is_empty()
            || self.transform.points().is_empty()
        {
            return Err(Error::InvalidParameter(
                "experiment grids must be nonempty".into(),
            ));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "threshold {t} is outside (0, 1)"
            )));
        }
        for point in self.transform.points() {
            point.validate()?;
        }
        self.params.validate()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Seed for the `index`-th derived stream (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loads every corpus entry, peak-normalized, with its report label.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Vec<(String, Signal)>> {
    cfg.corpus
        .iter()
        .enumerate()
        .map(|(i, entry)| match entry {
            CorpusEntry::Wav { path } => {
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("signal{i}"));
                Ok((format!("{i}:{label}"), peak_normalize(&read_wav(path)?)?))
            }
            CorpusEntry::Synthetic { spec } => Ok((
                format!("{i}:{}", spec.label()),
                make_synthetic(spec, derive_seed(cfg.seed, i as u64))?,
            )),
        })
        .collect()
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub signal: String,
    pub theta_c: f64,
    pub transform: TransformConfig,
    pub algorithm: Algorithm,
    pub sdr_in_whole: f64,
    pub sdr_in_clipped: f64,
    pub sdr_out_whole: f64,
    pub sdr_out_clipped: f64,
    pub delta_sdr_whole: f64,
    pub delta_sdr_clipped: f64,
    pub iterations: usize,
    pub mean_block_iterations: f64,
    pub analysis_calls: usize,
    pub synthesis_calls: usize,
    pub max_call_gap: usize,
    pub max_gamma_residual: f64,
    pub clipped_bound_violations: usize,
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub theta_c: f64,
    pub transform: TransformConfig,
    pub algorithm: Algorithm,
    pub signals: usize,
    pub failed: usize,
    pub mean_delta_sdr_whole: Option<f64>,
    pub mean_delta_sdr_clipped: Option<f64>,
    pub mean_iterations: f64,
    pub mean_block_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSdrColumn {
    pub theta_c: f64,
    pub sdr_whole: Option<f64>,
    pub sdr_clipped: Option<f64>,
}

/// Per-block SDR of both algorithms for one (signal, threshold, transform).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub signal: String,
    pub theta_c: f64,
    pub transform: TransformConfig,
    pub block: usize,
    pub start: usize,
    pub sdr_aspade: Option<f64>,
    pub sdr_sspade: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub input_sdr: Vec<InputSdrColumn>,
    pub scatter: Vec<ScatterRow>,
}

struct Cell {
    signal: usize,
    theta: usize,
    transform: TransformConfig,
    algorithm: Algorithm,
}

struct CellResult {
    row: ResultRow,
    restored: Option<Vec<f64>>,
}

fn run_cell(
    (name, x): &(String, Signal),
    clipped: &(Signal, ClipMask),
    theta_c: f64,
    cell: &Cell,
    params: &SpadeParams,
    keep_output: bool,
    exec: Execution,
) -> CellResult {
    let (y, mask) = clipped;
    let mut row = ResultRow {
        signal: name.clone(),
        theta_c,
        transform: cell.transform,
        algorithm: cell.algorithm,
        sdr_in_whole: f64::NAN,
        sdr_in_clipped: f64::NAN,
        sdr_out_whole: f64::NAN,
        sdr_out_clipped: f64::NAN,
        delta_sdr_whole: f64::NAN,
        delta_sdr_clipped: f64::NAN,
        iterations: 0,
        mean_block_iterations: 0.0,
        analysis_calls: 0,
        synthesis_calls: 0,
        max_call_gap: 0,
        max_gamma_residual: 0.0,
        clipped_bound_violations: 0,
        error: None,
        wall_time_ms: 0.0,
    };
    let started = Instant::now();
    let outcome = (|| -> Result<Vec<f64>> {
        let out = declip(y, mask, &cell.transform, cell.algorithm, params, exec)?;
        let xs = x.samples();
        let restored = out.signal.samples();
        row.sdr_in_whole = sdr(xs, y.samples())?;
        row.sdr_in_clipped = sdr_clipped_only(xs, y.samples(), mask)?;
        row.sdr_out_whole = sdr(xs, restored)?;
        row.sdr_out_clipped = sdr_clipped_only(xs, restored, mask)?;
        let (whole, clipped) = delta_sdr_invariance_check(xs, y.samples(), restored, mask)?;
        row.delta_sdr_whole = whole;
        row.delta_sdr_clipped = clipped;
        let r = &out.report;
        row.iterations = r.iterations;
        row.mean_block_iterations = r.mean_iterations();
        row.analysis_calls = r.analysis_calls;
        row.synthesis_calls = r.synthesis_calls;
        row.max_call_gap = r.max_call_gap;
        row.max_gamma_residual = r.max_gamma_residual;
        row.clipped_bound_violations = r.clipped_bound_violations;
        Ok(out.signal.into_samples())
    })();
    row.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    let restored = match outcome {
        Ok(s) => keep_output.then_some(s),
        Err(e) => {
            log::warn!("{name} θ={theta_c} {}: {e}", cell.algorithm);
            row.error = Some(e.to_string());
            None
        }
    };
    CellResult { row, restored }
}

/// Runs every cell of the grid. Per-cell failures are recorded in the
/// row's `error` field; only corpus loading and config errors abort.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let clipped: Vec<Vec<(Signal, ClipMask)>> = corpus
        .iter()
        .map(|(_, x)| cfg.thresholds.iter().map(|&t| hard_clip(x, t)).collect())
        .collect::<Result<_>>()?;

    let points = cfg.transform.points();
    let mut cells = Vec::new();
    for signal in 0..corpus.len() {
        for theta in 0..cfg.thresholds.len() {
            for &transform in &points {
                for &algorithm in &cfg.algorithms {
                    cells.push(Cell {
                        signal,
                        theta,
                        transform,
                        algorithm,
                    });
                }
            }
        }
    }
    let keep = cfg.blockwise_len.is_some();
    let results = exec.map(&cells, |_, cell| {
        run_cell(
            &corpus[cell.signal],
            &clipped[cell.signal][cell.theta],
            cfg.thresholds[cell.theta],
            cell,
            &cfg.params,
            keep,
            exec,
        )
    });

    let scatter = match cfg.blockwise_len {
        Some(len) => scatter_rows(
            &corpus,
            &cells,
            &results,
            len,
            cfg.blockwise_hop.unwrap_or(len),
        )?,
        None => Vec::new(),
    };
    let rows: Vec<ResultRow> = results.into_iter().map(|r| r.row).collect();
    Ok(ExperimentOutcome {
        summary: summarize(&rows),
        input_sdr: input_sdr_table(cfg, &corpus, &clipped)?,
        scatter,
        rows,
        config: cfg.clone(),
    })
}

/// Runs the experiment and writes all reports into `cfg.output_dir`.
pub fn run_and_write(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutcome> {
    let outcome = run_experiment(cfg, exec)?;
    outcome.write(&cfg.output_dir)?;
    Ok(outcome)
}

fn scatter_rows(
    corpus: &[(String, Signal)],
    cells: &[Cell],
    results: &[CellResult],
    len: usize,
    hop: usize,
) -> Result<Vec<ScatterRow>> {
    type Key = (usize, usize, usize);
    let mut pairs: BTreeMap<Key, [Option<&Vec<f64>>; 2]> = BTreeMap::new();
    let transform_index =
        |t: &TransformConfig| cells.iter().position(|c| c.transform == *t).unwrap_or(0);
    for (cell, result) in cells.iter().zip(results) {
        let slot = match cell.algorithm {
            Algorithm::Aspade => 0,
            Algorithm::Sspade => 1,
        };
        let key = (cell.signal, cell.theta, transform_index(&cell.transform));
        pairs.entry(key).or_default()[slot] = result.restored.as_ref();
    }
    let mut out = Vec::new();
    for ((signal, theta, t), [a, s]) in pairs {
        let x = corpus[signal].1.samples();
        let series = |r: Option<&Vec<f64>>| r.map(|r| blockwise_sdr(x, r, len, hop)).transpose();
        let (sa, ss) = (series(a)?, series(s)?);
        let count = sa.as_ref().or(ss.as_ref()).map_or(0, Vec::len);
        let cell = &cells[t];
        let theta_c = results
            .iter()
            .zip(cells)
            .find(|(_, c)| c.theta == theta)
            .map_or(f64::NAN, |(r, _)| r.row.theta_c);
        for i in 0..count {
            let pick =
                |v: &Option<Vec<crate::metrics::BlockSdr>>| v.as_ref().and_then(|v| v[i].sdr_db);
            let start = sa.as_ref().or(ss.as_ref()).map_or(0, |v| v[i].start);
            out.push(ScatterRow {
                signal: corpus[signal].0.clone(),
                theta_c,
                transform: cell.transform,
                block: i,
                start,
                sdr_aspade: pick(&sa),
                sdr_sspade: pick(&ss),
            });
        }
    }
    Ok(out)
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(f64, TransformConfig, Algorithm)> = Vec::new();
    for r in rows {
        let key = (r.theta_c, r.transform, r.algorithm);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order
        .into_iter()
        .map(|(theta_c, transform, algorithm)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| {
                    r.theta_c == theta_c && r.transform == transform && r.algorithm == algorithm
                })
                .collect();
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| r.error.is_none()).collect();
            let mean = |f: &dyn Fn(&ResultRow) -> f64| {
                if ok.is_empty() {
                    0.0
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            SummaryRow {
                theta_c,
                transform,
                algorithm,
                signals: group.len(),
                failed: group.len() - ok.len(),
                mean_delta_sdr_whole: mean_db(
                    &ok.iter().map(|r| r.delta_sdr_whole).collect::<Vec<_>>(),
                ),
                mean_delta_sdr_clipped: mean_db(
                    &ok.iter().map(|r| r.delta_sdr_clipped).collect::<Vec<_>>(),
                ),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_block_iterations: mean(&|r| r.mean_block_iterations),
            }
        })
        .collect()
}

fn input_sdr_table(
    cfg: &ExperimentConfig,
    corpus: &[(String, Signal)],
    clipped: &[Vec<(Signal, ClipMask)>],
) -> Result<Vec<InputSdrColumn>> {
    cfg.thresholds
        .iter()
        .enumerate()
        .map(|(ti, &theta_c)| {
            let mut whole = Vec::new();
            let mut only = Vec::new();
            for ((_, x), per_theta) in corpus.iter().zip(clipped) {
                let (y, mask) = &per_theta[ti];
                whole.push(sdr(x.samples(), y.samples())?);
                if mask.has_clipped() {
                    only.push(sdr_clipped_only(x.samples(), y.samples(), mask)?);
                }
            }
            Ok(InputSdrColumn {
                theta_c,
                sdr_whole: mean_db(&whole),
                sdr_clipped: mean_db(&only),
            })
        })
        .collect()
}

fn opt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), format_db)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn transform_fields(t: &TransformConfig) -> [String; 5] {
    [
        t.win_len.to_string(),
        t.overlap_fraction.to_string(),
        t.redundancy.to_string(),
        t.window_kind.to_string(),
        t.mode.to_string(),
    ]
}

pub const RESULTS_HEADER: [&str; 23] = [
    "signal",
    "theta_c",
    "win_len",
    "overlap",
    "redundancy",
    "window",
    "mode",
    "algorithm",
    "sdr_in_whole",
    "sdr_in_clipped",
    "sdr_out_whole",
    "sdr_out_clipped",
    "delta_sdr_whole",
    "delta_sdr_clipped",
    "iterations",
    "mean_block_iterations",
    "analysis_calls",
    "synthesis_calls",
    "max_call_gap",
    "max_gamma_residual",
    "clipped_bound_violations",
    "error",
    "wall_time_ms",
];

impl ExperimentOutcome {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        self.write_results(&dir.join("results.csv"))?;
        self.write_summary(&dir.join("summary.csv"))?;
        self.write_input_sdr(&dir.join("input_sdr.csv"))?;
        if !self.scatter.is_empty() {
            self.write_scatter(&dir.join("blockwise.csv"))?;
        }
        let path = dir.join("run.json");
        let text = serde_json::to_string_pretty(&self.config).expect("config serializes");
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }

    fn write_results(&self, path: &Path) -> Result<()> {
        let err = csv_err(path);
        let mut w = csv::Writer::from_path(path).map_err(&err)?;
        w.write_record(RESULTS_HEADER).map_err(&err)?;
        for r in &self.rows {
            let mut rec = vec![r.signal.clone(), r.theta_c.to_string()];
            rec.extend(transform_fields(&r.transform));
            rec.push(r.algorithm.to_string());
            rec.extend(
                [
                    r.sdr_in_whole,
                    r.sdr_in_clipped,
                    r.sdr_out_whole,
                    r.sdr_out_clipped,
                    r.delta_sdr_whole,
                    r.delta_sdr_clipped,
                ]
                .map(format_db),
            );
            rec.push(r.iterations.to_string());
            rec.push(format!("{:.3}", r.mean_block_iterations));
            rec.push(r.analysis_calls.to_string());
            rec.push(r.synthesis_calls.to_string());
            rec.push(r.max_call_gap.to_string());
            rec.push(format!("{:e}", r.max_gamma_residual));
            rec.push(r.clipped_bound_violations.to_string());
            rec.push(r.error.clone().unwrap_or_default());
            rec.push(format!("{:.3}", r.wall_time_ms));
            w.write_record(&rec).map_err(&err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn write_summary(&self, path: &Path) -> Result<()> {
        let err = csv_err(path);
        let mut w = csv::Writer::from_path(path).map_err(&err)?;
        w.write_record([
            "theta_c",
            "win_len",
            "overlap",
            "redundancy",
            "window",
            "mode",
            "algorithm",
            "signals",
            "failed",
            "mean_delta_sdr_whole",
            "mean_delta_sdr_clipped",
            "mean_iterations",
            "mean_block_iterations",
        ])
        .map_err(&err)?;
        for s in &self.summary {
            let mut rec = vec![s.theta_c.to_string()];
            rec.extend(transform_fields(&s.transform));
            rec.push(s.algorithm.to_string());
            rec.push(s.signals.to_string());
            rec.push(s.failed.to_string());
            rec.push(opt_db(s.mean_delta_sdr_whole));
            rec.push(opt_db(s.mean_delta_sdr_clipped));
            rec.push(format!("{:.3}", s.mean_iterations));
            rec.push(format!("{:.3}", s.mean_block_iterations));
            w.write_record(&rec).map_err(&err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn write_input_sdr(&self, path: &Path) -> Result<()> {
        let err = csv_err(path);
        let mut w = csv::Writer::from_path(path).map_err(&err)?;
        let mut header = vec!["theta_c".to_string()];
        header.extend(self.input_sdr.iter().map(|c| c.theta_c.to_string()));
        w.write_record(&header).map_err(&err)?;
        let mut whole = vec!["sdr_whole_signal_db".to_string()];
        whole.extend(self.input_sdr.iter().map(|c| opt_db(c.sdr_whole)));
        w.write_record(&whole).map_err(&err)?;
        let mut clipped = vec!["sdr_clipped_samples_db".to_string()];
        clipped.extend(self.input_sdr.iter().map(|c| opt_db(c.sdr_clipped)));
        w.write_record(&clipped).map_err(&err)?;
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn write_scatter(&self, path: &Path) -> Result<()> {
        let err = csv_err(path);
        let mut w = csv::Writer::from_path(path).map_err(&err)?;
        let mut header = vec![
            "signal",
            "theta_c",
            "win_len",
            "overlap",
            "redundancy",
            "window",
            "mode",
        ];
        header.extend(["block", "start", "sdr_aspade", "sdr_sspade"]);
        w.write_record(&header).map_err(&err)?;
        for s in &self.scatter {
            let mut rec = vec![s.signal.clone(), s.theta_c.to_string()];
            rec.extend(transform_fields(&s.transform));
            rec.push(s.block.to_string());
            rec.push(s.start.to_string());
            rec.push(opt_db(s.sdr_aspade));
            rec.push(opt_db(s.sdr_sspade));
            w.write_record(&rec).map_err(&err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Drops the trailing `wall_time_ms` column from every line of a results
/// CSV, leaving only the deterministic fields.
pub fn strip_timing_column(results_csv: &str) -> String {
    results_csv
        .lines()
        .map(|line| line.rsplit_once(',').map_or(line, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            corpus: vec![CorpusEntry::Synthetic {
                spec: SyntheticSpec::sparse_sines(3).with_duration(0.25),
            }],
            thresholds: vec![0.4],
            transform: TransformGrid {
                win_lens: vec![256],
                overlaps: vec![0.75],
                redundancies: vec![1],
                window: WindowKind::Hann,
                mode: Mode::Segmented,
            },
            algorithms: Algorithm::ALL.to_vec(),
            params: SpadeParams::default(),
            output_dir: dir.to_path_buf(),
            seed: 42,
            blockwise_len: Some(1024),
            blockwise_hop: None,
        }
    }

    #[test]
    fn grid_cardinality_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let out = run_and_write(&cfg, Execution::Parallel).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.summary.len(), 2);
        for r in &out.rows {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!((r.delta_sdr_whole - r.delta_sdr_clipped).abs() <= 1e-9);
            assert!(r.max_call_gap <= 1);
        }
        for f in [
            "results.csv",
            "summary.csv",
            "input_sdr.csv",
            "blockwise.csv",
            "run.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let input = std::fs::read_to_string(dir.path().join("input_sdr.csv")).unwrap();
        assert!(input.starts_with("theta_c,0.4\nsdr_whole_signal_db,"));
        assert_eq!(out.scatter.len(), 4000 / 1024);
        let back: ExperimentConfig =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap())
                .unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path());
        cfg.blockwise_len = None;
        // hop equals the window length, leaving Hann's zero uncovered
        cfg.transform.overlaps = vec![0.001];
        let out = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.rows.iter().all(|r| r.error.is_some()));
        assert!(out
            .summary
            .iter()
            .all(|s| s.failed == 1 && s.mean_delta_sdr_whole.is_none()));
    }

    #[test]
    fn presets_and_validation() {
        for name in ["whole", "segmented", "window_length", "overlap"] {
            ExperimentConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("nope").is_err());
        let mut cfg = ExperimentConfig::preset("segmented").unwrap();
        cfg.thresholds = vec![1.0];
        assert!(cfg.validate().is_err());
        assert_eq!(standard_thresholds().len(), 9);
    }

    #[test]
    fn config_json_shape() {
        let json = r#"{
            "corpus": [{"kind": "synthetic", "generator": "sparse_sines", "count": 2, "duration_s": 0.1},
                       {"kind": "wav", "path": "a.wav"}],
            "thresholds": [0.3],
            "transform": {"win_lens": [512], "overlaps": [0.5], "redundancies": [2]},
            "algorithms": ["aspade"],
            "output_dir": "out"
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.params, SpadeParams::default());
        assert_eq!(cfg.transform.mode, Mode::Segmented);
        assert!(matches!(&cfg.corpus[1], CorpusEntry::Wav { path } if path == Path::new("a.wav")));
        assert!(
            matches!(&cfg.corpus[0], CorpusEntry::Synthetic { spec } if spec.duration_s == 0.1)
        );
    }

    #[test]
    fn timing_column_strip() {
        let text = "a,b,wall_time_ms\n1,2,3.5\n";
        assert_eq!(strip_timing_column(text), "a,b\n1,2");
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }
}
