//! Stage-by-stage comparison of two run directories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::region::mask_from_boundary;
use crate::state::MacroState;

use super::io::{boundary_from_csv, field_from_csv};
use super::run::Manifest;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDiff {
    /// Discrete L² norm of `b − a` for c, v, u, p, m.
    pub field_l2: [f64; 5],
    /// Nodes inside exactly one of the two tumour regions.
    pub boundary_symdiff: usize,
}

/// Differences are `b − a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageComparison {
    pub stage: usize,
    pub area_a: f64,
    pub area_b: f64,
    pub fingering_a: Option<f64>,
    pub fingering_b: Option<f64>,
    pub snapshot: Option<SnapshotDiff>,
}

impl StageComparison {
    pub fn d_area(&self) -> f64 {
        self.area_b - self.area_a
    }

    pub fn d_fingering(&self) -> Option<f64> {
        Some(self.fingering_b? - self.fingering_a?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub grid_n: usize,
    pub stages: Vec<StageComparison>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

impl ComparisonReport {
    /// True when no stage shows any difference.
    pub fn is_identical(&self) -> bool {
        self.stages.iter().all(|s| {
            s.d_area() == 0.0
                && s.fingering_a == s.fingering_b
                && s.snapshot
                    .as_ref()
                    .is_none_or(|d| d.boundary_symdiff == 0 && d.field_l2.iter().all(|&x| x == 0.0))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "stage,area_a,area_b,d_area,fingering_a,fingering_b,d_fingering,l2_c,l2_v,l2_u,l2_p,l2_m,boundary_symdiff\n",
        );
        for s in &self.stages {
            let snap = match &s.snapshot {
                Some(d) => {
                    let l2: Vec<String> = d.field_l2.iter().map(|x| format!("{x:?}")).collect();
                    format!("{},{}", l2.join(","), d.boundary_symdiff)
                }
                None => ",,,,,".to_string(),
            };
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{},{},{},{}",
                s.stage,
                s.area_a,
                s.area_b,
                s.d_area(),
                opt(s.fingering_a),
                opt(s.fingering_b),
                opt(s.d_fingering()),
                snap
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("comparison on a {0}x{0} grid (differences are b - a)\n", self.grid_n);
        let _ = writeln!(
            out,
            "{:>6} {:>12} {:>12} {:>12}",
            "stage", "d_area", "d_fingering", "symdiff"
        );
        for s in &self.stages {
            let symdiff = s
                .snapshot
                .as_ref()
                .map(|d| d.boundary_symdiff.to_string())
                .unwrap_or_else(|| "-".into());
            let df = s.d_fingering().map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:>6} {:>12.6} {:>12} {:>12}", s.stage, s.d_area(), df, symdiff);
            if let Some(d) = &s.snapshot {
                let l2: Vec<String> = MacroState::FIELD_NAMES
                    .iter()
                    .zip(d.field_l2)
                    .map(|(name, x)| format!("{name}={x:.3e}"))
                    .collect();
                let _ = writeln!(out, "       L2: {}", l2.join(" "));
            }
        }
        out
    }
}

fn read_field(dir: &Path, stage: usize, name: &str) -> Result<(Field, f64)> {
    let path = dir.join(format!("stage_{stage:04}/{name}.csv"));
    let text = fs::read_to_string(&path)?;
    field_from_csv(&text, &path)
}

fn snapshot_diff(a: &Path, b: &Path, stage: usize, n: usize) -> Result<SnapshotDiff> {
    let mut field_l2 = [0.0; 5];
    for (slot, name) in field_l2.iter_mut().zip(MacroState::FIELD_NAMES) {
        let (fa, h) = read_field(a, stage, name)?;
        let (fb, _) = read_field(b, stage, name)?;
        if fa.n() != n || fb.n() != n {
            return Err(Error::GridMismatch(format!(
                "stage {stage} field {name}: {}x{0} vs {}x{1}",
                fa.n(),
                fb.n()
            )));
        }
        let sum: f64 = fa.values().iter().zip(fb.values()).map(|(x, y)| (y - x).powi(2)).sum();
        *slot = (sum * h * h).sqrt();
    }
    let boundary = |dir: &Path| -> Result<_> {
        let path = dir.join(format!("stage_{stage:04}/boundary.csv"));
        let nodes = boundary_from_csv(&fs::read_to_string(&path)?, &path)?;
        if nodes.iter().any(|&(i, j)| i >= n || j >= n) {
            return Err(Error::GridMismatch(format!(
                "{} has nodes outside a {n}x{n} grid",
                path.display()
            )));
        }
        Ok(mask_from_boundary(n, &nodes))
    };
    let (ma, mb) = (boundary(a)?, boundary(b)?);
    let boundary_symdiff = ma.bits().iter().zip(mb.bits()).filter(|(x, y)| x != y).count();
    Ok(SnapshotDiff {
        field_l2,
        boundary_symdiff,
    })
}

/// Compares two run directories over the stages both reached. Snapshot
/// stages present in both runs also get field and region differences.
pub fn compare_runs(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<ComparisonReport> {
    let (a, b) = (a.as_ref(), b.as_ref());
    let (ma, mb) = (Manifest::load(a)?, Manifest::load(b)?);
    if ma.grid_n != mb.grid_n || ma.h != mb.h {
        return Err(Error::GridMismatch(format!(
            "{}x{} grid (h = {}) vs {}x{} grid (h = {})",
            ma.grid_n, ma.grid_n, ma.h, mb.grid_n, mb.grid_n, mb.h
        )));
    }
    let n = ma.grid_n;
    let mut stages = Vec::new();
    for sa in &ma.metrics {
        let Some(sb) = mb.metrics.iter().find(|m| m.stage == sa.stage) else {
            continue;
        };
        let both = ma.snapshot_stages.contains(&sa.stage) && mb.snapshot_stages.contains(&sa.stage);
        let snapshot = if both {
            Some(snapshot_diff(a, b, sa.stage, n)?)
        } else {
            None
        };
        stages.push(StageComparison {
            stage: sa.stage,
            area_a: sa.area,
            area_b: sb.area,
            fingering_a: sa.fingering,
            fingering_b: sb.fingering,
            snapshot,
        });
    }
    Ok(ComparisonReport { grid_n: n, stages })
}
