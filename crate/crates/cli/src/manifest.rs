//! Trace directories and their manifests.
//!
//! A trace directory holds `step_NNNN.csv` for every snapshot, `merges.csv`,
//! `diagnostics.csv` and `manifest.toml`. The manifest records everything
//! needed to rerun the condensation; merge radii are recomputed from the
//! configuration and the recorded bandwidths.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use condensation::datasets::DatasetSpec;
use condensation::engine::rebuild_trace;
use condensation::geometry::hausdorff;
use condensation::io::{
    format_diagnostics, format_merges, format_snapshot, parse_diagnostics, parse_merges,
    parse_snapshot, DiagnosticsRow,
};
use condensation::spectral::spectral_report;
use condensation::{CondensationConfig, CondensationTrace, Termination};
use serde::{Deserialize, Serialize};

use crate::CliResult;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const MERGES_FILE: &str = "merges.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
/// Largest snapshot for which the diagnostics include a second eigenvalue.
pub const SPECTRUM_MAX_ROWS: usize = 1024;

/// Files `write_trace_dir` produces for a trace with `steps` steps.
pub fn artifact_files(steps: usize) -> Vec<String> {
    let mut files: Vec<String> = (0..=steps).map(snapshot_file).collect();
    files.extend([MERGES_FILE, DIAGNOSTICS_FILE].map(String::from));
    files
}

pub fn snapshot_file(t: usize) -> String {
    format!("step_{t:04}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub termination: String,
    pub steps: usize,
    pub final_rows: usize,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    /// Absolute path of the input cloud, when it was read from a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Whether diagnostics include the second eigenvalue.
    pub spectrum: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    pub config: CondensationConfig,
    pub result: RunSummary,
    /// Files of the trace directory, relative to it.
    #[serde(default)]
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self).context("serializing manifest")?)
    }
}

/// Accepts either a trace directory or a manifest file.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn diagnostics(
    trace: &CondensationTrace,
    config: &CondensationConfig,
    spectrum: bool,
) -> CliResult<Vec<DiagnosticsRow>> {
    let mut rows = Vec::with_capacity(trace.snapshots.len());
    for t in 0..trace.snapshots.len() {
        let snap = &trace.snapshots[t];
        let lambda2 = if spectrum && snap.len() >= 2 && snap.len() <= SPECTRUM_MAX_ROWS {
            Some(spectral_report(&trace.operator_at(t, config)?).lambda2)
        } else {
            None
        };
        let hausdorff_to_prev = if t > 0 {
            Some(hausdorff(&trace.snapshots[t - 1], snap)?)
        } else {
            None
        };
        rows.push(DiagnosticsRow {
            step: t,
            epsilon: trace.epsilons[t],
            diameter: trace.diameters[t],
            lambda2,
            hausdorff_to_prev,
        });
    }
    Ok(rows)
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_trace_dir(
    dir: &Path,
    trace: &CondensationTrace,
    manifest: &RunManifest,
) -> CliResult<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (t, snap) in trace.snapshots.iter().enumerate() {
        write(dir, &snapshot_file(t), &format_snapshot(snap))?;
    }
    write(dir, MERGES_FILE, &format_merges(&trace.merges))?;
    let rows = diagnostics(trace, &manifest.config, manifest.spectrum)?;
    write(dir, DIAGNOSTICS_FILE, &format_diagnostics(&rows))?;
    write(dir, MANIFEST_FILE, &manifest.to_toml()?)
}

fn read(dir: &Path, name: &str) -> CliResult<String> {
    let path = dir.join(name);
    Ok(fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?)
}

pub fn load_trace_dir(dir: &Path) -> CliResult<(RunManifest, CondensationTrace)> {
    let manifest = RunManifest::read(&dir.join(MANIFEST_FILE))?;
    let steps = manifest.result.steps;
    let snapshots = (0..=steps)
        .map(|t| Ok(parse_snapshot(&read(dir, &snapshot_file(t))?)?))
        .collect::<CliResult<Vec<_>>>()?;
    let diag = parse_diagnostics(&read(dir, DIAGNOSTICS_FILE)?)?;
    if diag.len() != snapshots.len() {
        return Err(anyhow!(
            "{DIAGNOSTICS_FILE} has {} rows for {} snapshots",
            diag.len(),
            snapshots.len()
        )
        .into());
    }
    let epsilons: Vec<f64> = diag.iter().map(|r| r.epsilon).collect();
    let zetas = epsilons[..steps]
        .iter()
        .map(|&e| manifest.config.zeta_for(e))
        .collect();
    let merges = parse_merges(&read(dir, MERGES_FILE)?)?;
    let termination: Termination = manifest.result.termination.parse()?;
    let trace = rebuild_trace(
        snapshots,
        epsilons,
        zetas,
        merges,
        termination,
        &manifest.config,
    )?;
    Ok((manifest, trace))
}
