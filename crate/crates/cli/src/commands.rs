use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use spade_core::experiments::{
    run_and_write, CorpusEntry, ExperimentConfig, MaskFile, SyntheticSpec,
};
use spade_core::metrics::format_db;
use spade_core::{
    blockwise_sdr, declip, delta_sdr, delta_sdr_clipped_only, detect_mask, hard_clip,
    peak_normalize, read_wav, sdr, sdr_clipped_only, write_wav, Algorithm, ClipMask, DeclipReport,
    Execution, IterationStats, Mode, SampleClass, SpadeParams, Termination, TransformConfig,
};

use crate::args::{ClipArgs, DeclipArgs, EvalArgs, ExperimentArgs, SynthArgs};
use crate::CliError;

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    spade_core::Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

pub fn clip(args: &ClipArgs) -> Result<(), CliError> {
    let x = peak_normalize(&read_wav(&args.input)?)?;
    let (y, mask) = hard_clip(&x, args.theta)?;
    write_wav(&args.out, &y)?;
    let mask_path = args
        .mask
        .clone()
        .unwrap_or_else(|| sidecar(&args.out, ".mask.json"));
    MaskFile::write(&mask, &mask_path)?;
    println!(
        "clipped {} of {} samples at theta {} -> {} (mask {})",
        mask.clipped_count(),
        mask.len(),
        args.theta,
        args.out.display(),
        mask_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct BlockStats<'a> {
    index: usize,
    start: isize,
    clipped: usize,
    gamma_residual: f64,
    iterations: usize,
    final_k: usize,
    analysis_calls: usize,
    synthesis_calls: usize,
    terminated_by: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_trace: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct DeclipStats<'a> {
    input: &'a Path,
    output: &'a Path,
    algorithm: Algorithm,
    mode: Mode,
    transform: TransformConfig,
    params: SpadeParams,
    execution: &'static str,
    samples: usize,
    clipped_samples: usize,
    coverage_min: f64,
    blocks_total: usize,
    blocks_processed: usize,
    iterations: usize,
    mean_block_iterations: f64,
    analysis_calls: usize,
    synthesis_calls: usize,
    max_call_gap: usize,
    max_gamma_residual: f64,
    clipped_bound_violations: usize,
    max_clipped_violation: f64,
    wall_time_ms: f64,
    blocks: Vec<BlockStats<'a>>,
}

fn block_stats(report: &DeclipReport, traces: bool) -> Vec<BlockStats<'_>> {
    report
        .processed_blocks()
        .map(|(b, s): (_, &IterationStats)| BlockStats {
            index: b.index,
            start: b.start,
            clipped: b.clipped,
            gamma_residual: b.gamma_residual,
            iterations: s.iterations,
            final_k: s.final_k,
            analysis_calls: s.analysis_calls,
            synthesis_calls: s.synthesis_calls,
            terminated_by: s.terminated_by,
            residual_trace: traces.then_some(s.residual_trace.as_slice()),
        })
        .collect()
}

pub fn declip_cmd(args: &DeclipArgs, exec: Execution) -> Result<(), CliError> {
    let y = read_wav(&args.input)?;
    let mask: ClipMask = match (&args.mask, args.theta) {
        (Some(path), _) => MaskFile::read(path)?,
        (None, Some(theta)) => detect_mask(&y, theta)?,
        (None, None) => {
            return Err(CliError::Usage(
                "either --mask or --theta is required".into(),
            ))
        }
    };
    let cfg = args.transform.config();
    let params = args.params.params(cfg.mode);
    let started = Instant::now();
    let out = declip(&y, &mask, &cfg, args.algo, &params, exec)?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    write_wav(&args.out, &out.signal)?;

    let r = &out.report;
    let stats = DeclipStats {
        input: &args.input,
        output: &args.out,
        algorithm: args.algo,
        mode: cfg.mode,
        transform: cfg,
        params,
        execution: match exec {
            Execution::Sequential => "sequential",
            Execution::Parallel => "parallel",
        },
        samples: y.len(),
        clipped_samples: mask.clipped_count(),
        coverage_min: r.coverage_min,
        blocks_total: r.blocks.len(),
        blocks_processed: r.processed_blocks().count(),
        iterations: r.iterations,
        mean_block_iterations: r.mean_iterations(),
        analysis_calls: r.analysis_calls,
        synthesis_calls: r.synthesis_calls,
        max_call_gap: r.max_call_gap,
        max_gamma_residual: r.max_gamma_residual,
        clipped_bound_violations: r.clipped_bound_violations,
        max_clipped_violation: r.max_clipped_violation,
        wall_time_ms,
        blocks: block_stats(r, args.traces),
    };
    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| sidecar(&args.out, ".stats.json"));
    let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    std::fs::write(&stats_path, text).map_err(|e| io_error(&stats_path, e))?;
    println!(
        "{}: {} blocks processed, {} iterations, {:.1} ms -> {}",
        args.algo,
        stats.blocks_processed,
        r.iterations,
        wall_time_ms,
        args.out.display()
    );
    Ok(())
}

const EVAL_HEADER: [&str; 10] = [
    "original",
    "restored",
    "theta_c",
    "clipped_samples",
    "sdr_in_whole",
    "sdr_in_clipped",
    "sdr_out_whole",
    "sdr_out_clipped",
    "delta_sdr_whole",
    "delta_sdr_clipped",
];

fn db_or_na(v: spade_core::Result<f64>) -> String {
    v.map_or_else(|_| "n/a".into(), format_db)
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let x = peak_normalize(&read_wav(&args.original)?)?;
    let y = read_wav(&args.clipped)?;
    let xhat = read_wav(&args.restored)?;
    let mask = MaskFile::read(&args.mask)?;
    for (name, len) in [
        ("clipped", y.len()),
        ("restored", xhat.len()),
        ("mask", mask.len()),
    ] {
        if len != x.len() {
            log::error!("{name} length differs from the original");
            return Err(spade_core::Error::LengthMismatch {
                expected: x.len(),
                actual: len,
            }
            .into());
        }
    }
    let (xs, ys, hs) = (x.samples(), y.samples(), xhat.samples());
    let values = [
        db_or_na(sdr(xs, ys)),
        db_or_na(sdr_clipped_only(xs, ys, &mask)),
        db_or_na(sdr(xs, hs)),
        db_or_na(sdr_clipped_only(xs, hs, &mask)),
        db_or_na(delta_sdr(xs, ys, hs)),
        db_or_na(delta_sdr_clipped_only(xs, ys, hs, &mask)),
    ];
    let consistent = mask
        .classes()
        .iter()
        .zip(ys.iter().zip(hs))
        .all(|(c, (a, b))| *c != SampleClass::Reliable || a == b);
    if !consistent {
        log::warn!("restored signal differs from the clipped one on reliable samples");
    }
    for (name, v) in EVAL_HEADER[4..].iter().zip(&values) {
        println!("{name:<18} {v}");
    }
    println!("{:<18} {consistent}", "consistent");

    if let Some(out) = &args.out {
        let fresh = !out.exists();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(out)
            .map_err(|e| io_error(out, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut row = vec![
            args.original.display().to_string(),
            args.restored.display().to_string(),
            mask.theta_c().to_string(),
            mask.clipped_count().to_string(),
        ];
        row.extend(values.iter().cloned());
        let write = |w: &mut csv::Writer<_>| -> csv::Result<()> {
            if fresh {
                w.write_record(EVAL_HEADER)?;
            }
            w.write_record(&row)?;
            w.flush()?;
            Ok(())
        };
        write(&mut w).map_err(|e| spade_core::Error::Format {
            path: out.clone(),
            message: e.to_string(),
        })?;
    }

    if let Some(len) = args.blockwise_len {
        let blocks = blockwise_sdr(xs, hs, len, args.blockwise_hop.unwrap_or(len))?;
        let path = args
            .blockwise_out
            .clone()
            .unwrap_or_else(|| sidecar(&args.restored, ".blockwise.csv"));
        let mut text = String::from("block,start,sdr_db\n");
        for b in blocks {
            let v = b.sdr_db.map_or_else(|| "n/a".into(), format_db);
            text.push_str(&format!("{},{},{v}\n", b.index, b.start));
        }
        let mut f = std::fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        f.write_all(text.as_bytes())
            .map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

pub fn experiment(args: &ExperimentArgs, exec: Execution) -> Result<(), CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::read(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => {
            return Err(CliError::Usage(
                "either --config or --preset is required".into(),
            ))
        }
    };
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(theta) = &args.theta {
        cfg.thresholds = theta.clone();
    }
    if let Some(algos) = &args.algo {
        cfg.algorithms = algos.clone();
    }
    if let Some(d) = args.duration {
        for entry in &mut cfg.corpus {
            if let CorpusEntry::Synthetic { spec } = entry {
                *spec = SyntheticSpec {
                    duration_s: d,
                    ..spec.clone()
                };
            }
        }
    }
    if args.blockwise_len.is_some() {
        cfg.blockwise_len = args.blockwise_len;
    }
    let started = Instant::now();
    let outcome = run_and_write(&cfg, exec)?;
    let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} cells failed; see results.csv",
            outcome.rows.len()
        );
    }
    println!("theta_c  win_len  overlap  red  algorithm  mean_dSDR  mean_iter");
    for s in &outcome.summary {
        println!(
            "{:<8} {:<8} {:<8} {:<4} {:<10} {:<10} {:.1}",
            s.theta_c,
            s.transform.win_len,
            s.transform.overlap_fraction,
            s.transform.redundancy,
            s.algorithm,
            s.mean_delta_sdr_whole
                .map_or_else(|| "n/a".into(), |v| format!("{v:.2}")),
            s.mean_iterations
        );
    }
    println!(
        "{} rows in {:.1} s -> {}",
        outcome.rows.len(),
        started.elapsed().as_secs_f64(),
        cfg.output_dir.display()
    );
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        generator: args.generator.parse()?,
        duration_s: args.duration,
        sample_rate: args.rate,
    };
    let x = spade_core::experiments::make_synthetic(&spec, args.seed)?;
    write_wav(&args.out, &x)?;
    println!("{} samples -> {}", x.len(), args.out.display());
    Ok(())
}
