//! Output artefacts of a detector run.

use crate::detector::DetectorRun;
use crate::error::Result;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

pub const RUNLENGTH_FILE: &str = "runlength.csv";
pub const CHANGEPOINTS_FILE: &str = "changepoints.json";
pub const TIMING_FILE: &str = "timing.json";
pub const MODAL_FILE: &str = "modal_runlength.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize)]
struct Timing<'a> {
    per_step_nanos: &'a [u64],
    total_ms: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    steps: usize,
    log_evidence: f64,
    omega: Option<f64>,
    calibration_objective: Option<f64>,
    calibration_at_boundary: Option<bool>,
    anchor: Option<&'a [f64]>,
    error: Option<&'a str>,
}

/// Writes every artefact into `dir`. All files except the timing report
/// are deterministic for a fixed config and seed.
pub fn write_outputs(dir: impl AsRef<Path>, run: &DetectorRun) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let res = &run.result;

    let mut rl = BufWriter::new(File::create(dir.join(RUNLENGTH_FILE))?);
    writeln!(rl, "t,r,log_prob")?;
    for (i, step) in res.runlength_trace.iter().enumerate() {
        for (r, lp) in step {
            writeln!(rl, "{},{},{:?}", i + 1, r, lp)?;
        }
    }
    rl.flush()?;

    let mut modal = BufWriter::new(File::create(dir.join(MODAL_FILE))?);
    writeln!(modal, "t,r")?;
    for (i, r) in res.modal_run_lengths.iter().enumerate() {
        writeln!(modal, "{},{}", i + 1, r)?;
    }
    modal.flush()?;

    fs::write(dir.join(CHANGEPOINTS_FILE), serde_json::to_string(&res.map_changepoints)?)?;
    fs::write(
        dir.join(TIMING_FILE),
        serde_json::to_string(&Timing { per_step_nanos: &res.per_step_nanos, total_ms: res.total_ms })?,
    )?;
    let summary = Summary {
        steps: res.len(),
        log_evidence: res.log_evidence,
        omega: run.omega,
        calibration_objective: run.calibration.as_ref().map(|c| c.objective),
        calibration_at_boundary: run.calibration.as_ref().map(|c| c.at_boundary),
        anchor: run.anchor.as_deref(),
        error: res.error.as_deref(),
    };
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
