//! Full runs: stage loop, snapshots, manifest and run digest.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::initial::{initial_macro_state, InitialConditionSpec};
use crate::micro_solver::MicroOperator;
use crate::params::{EcmMode, ParameterSet};
use crate::state::MacroState;

use super::io::{boundary_to_csv, decisions_to_csv, field_to_csv, field_to_pgm};
use super::metrics::{fingering_metric, interior_cv};
use super::stage::{run_stage, StageOutcome};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub stage: usize,
    pub area: f64,
    /// `None` for a one-node region.
    pub fingering: Option<f64>,
    pub interior_cv: f64,
    /// Tiles solved in the stage that produced this state.
    pub tiles: usize,
    pub moved: usize,
    pub repairs: usize,
    pub macro_clipped: usize,
    pub micro_clipped: usize,
}

impl StageMetrics {
    pub fn of(state: &MacroState, outcome: Option<&StageOutcome>) -> Self {
        StageMetrics {
            stage: state.stage_index,
            area: state.region.area(&state.grid),
            fingering: fingering_metric(&state.region, &state.grid).ok(),
            interior_cv: interior_cv(&state.c, &state.region.mask),
            tiles: outcome.map_or(0, |o| o.decisions.len()),
            moved: outcome.map_or(0, |o| o.rebuild.moved),
            repairs: outcome.map_or(0, |o| o.rebuild.repairs),
            macro_clipped: outcome.map_or(0, |o| o.macro_report.clipped),
            micro_clipped: outcome.map_or(0, |o| o.micro_clipped),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub grid_n: usize,
    pub h: f64,
    pub ecm_mode: EcmMode,
    pub n_stages: usize,
    pub completed_stages: usize,
    pub complete: bool,
    pub error: Option<String>,
    pub snapshot_stages: Vec<usize>,
    pub artifacts: Vec<ArtifactRecord>,
    /// SHA-256 over every CSV artifact, in write order.
    pub digest: String,
    pub metrics: Vec<StageMetrics>,
}

impl Manifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads for the tile solves; `None` lets rayon decide.
    pub threads: Option<usize>,
    /// Stages whose state is written out. The final stage always is.
    pub snapshot_stages: BTreeSet<usize>,
    pub pgm: bool,
}

impl RunOptions {
    pub fn from_params(params: &ParameterSet) -> Self {
        RunOptions {
            out_dir: params.output_dir.clone(),
            threads: None,
            snapshot_stages: params.snapshot_stages.iter().copied().collect(),
            pgm: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub final_state: MacroState,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

/// Runs `f` on a pool with `threads` workers (rayon's default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs `params.n_stages` stages in memory from the standard initial state,
/// calling `observe` on the initial state and after every stage.
pub fn simulate(
    params: &ParameterSet,
    mut observe: impl FnMut(&MacroState, Option<&StageOutcome>) -> Result<()>,
) -> Result<MacroState> {
    params.validate()?;
    let mut state = initial_macro_state(&InitialConditionSpec::standard(params.ecm_mode), params)?;
    let op = MicroOperator::new(params)?;
    observe(&state, None)?;
    for _ in 0..params.n_stages {
        let (next, outcome) = run_stage(&state, params, &op)?;
        observe(&next, Some(&outcome))?;
        state = next;
    }
    Ok(state)
}

struct ArtifactWriter {
    root: PathBuf,
    records: Vec<ArtifactRecord>,
    digest: Sha256,
}

impl ArtifactWriter {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        if rel.ends_with(".csv") {
            self.digest.update(rel.as_bytes());
            self.digest.update(b"\n");
            self.digest.update(bytes);
        }
        self.records.push(ArtifactRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn snapshot(&mut self, state: &MacroState, pgm: bool) -> Result<()> {
        let dir = format!("stage_{:04}", state.stage_index);
        for (name, field) in MacroState::FIELD_NAMES.iter().zip(state.fields()) {
            self.write(
                &format!("{dir}/{name}.csv"),
                field_to_csv(field, &state.grid).as_bytes(),
            )?;
        }
        self.write(
            &format!("{dir}/boundary.csv"),
            boundary_to_csv(&state.region.boundary.nodes, &state.grid).as_bytes(),
        )?;
        if pgm {
            self.write(&format!("{dir}/c.pgm"), &field_to_pgm(&state.c))?;
            self.write(&format!("{dir}/v.pgm"), &field_to_pgm(&state.v))?;
        }
        Ok(())
    }
}

fn metrics_csv(metrics: &[StageMetrics]) -> String {
    let mut out = String::from("stage,area,fingering,interior_cv,tiles,moved,repairs,macro_clipped,micro_clipped\n");
    for m in metrics {
        let fingering = m.fingering.map(|f| format!("{f:?}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{},{:?},{},{},{},{},{}\n",
            m.stage, m.area, fingering, m.interior_cv, m.tiles, m.moved, m.repairs, m.macro_clipped, m.micro_clipped
        ));
    }
    out
}

/// Runs a simulation and writes its artifacts under `opts.out_dir`.
///
/// On a solver failure the artifacts written so far are kept, the manifest
/// records the error, and the error is returned.
pub fn run(params: &ParameterSet, opts: &RunOptions) -> Result<RunSummary> {
    params.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let config = params.to_config_string();
    fs::write(opts.out_dir.join("config.txt"), &config)?;
    let grid = params.grid()?;
    let last = params.n_stages;
    let snapshot_stages: Vec<usize> = opts
        .snapshot_stages
        .iter()
        .copied()
        .filter(|&s| s <= last)
        .chain(std::iter::once(last))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut writer = ArtifactWriter {
        root: opts.out_dir.clone(),
        records: Vec::new(),
        digest: Sha256::new(),
    };
    let mut metrics = Vec::new();
    let result = with_threads(opts.threads, || {
        simulate(params, |state, outcome| {
            if let Some(o) = outcome {
                writer.write(
                    &format!("decisions/stage_{:04}.csv", o.stage),
                    decisions_to_csv(&o.decisions).as_bytes(),
                )?;
            }
            metrics.push(StageMetrics::of(state, outcome));
            if snapshot_stages.binary_search(&state.stage_index).is_ok() {
                writer.snapshot(state, opts.pgm)?;
            }
            Ok(())
        })
    })?;
    let error = result.as_ref().err().map(|e| e.to_string());
    if result.is_ok() {
        writer.write("metrics.csv", metrics_csv(&metrics).as_bytes())?;
    }
    let ArtifactWriter { records, digest, .. } = writer;
    let manifest = Manifest {
        config_sha256: sha256_hex(config.as_bytes()),
        grid_n: grid.n(),
        h: grid.h(),
        ecm_mode: params.ecm_mode,
        n_stages: params.n_stages,
        completed_stages: metrics.len().saturating_sub(1),
        complete: result.is_ok(),
        error,
        snapshot_stages,
        artifacts: records,
        digest: hex(&digest.finalize()),
        metrics,
    };
    fs::write(
        opts.out_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    let final_state = result?;
    Ok(RunSummary { manifest, final_state })
}
