//! One macro–micro stage.

use rayon::prelude::*;

use crate::boundary::{decide, rebuild_boundary, reinitialize_macro, RebuildReport, RelocationDecision};
use crate::error::{Error, Result};
use crate::macro_solver::{advance_stage_report, MacroStageReport};
use crate::micro_solver::{assemble_sources, solve_micro_with, MicroOperator};
use crate::microdomain::build_microdomain_family;
use crate::params::ParameterSet;
use crate::state::MacroState;

/// Everything a stage produced besides the next state.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    /// Index of the stage that was run (the state's index before it).
    pub stage: usize,
    pub macro_report: MacroStageReport,
    /// Macro fields at the end of the stage, on the old region.
    pub post_macro: MacroState,
    pub decisions: Vec<RelocationDecision>,
    pub rebuild: RebuildReport,
    /// Plasmin values clipped across all micro solves.
    pub micro_clipped: usize,
}

/// Advances the macro fields, solves every boundary tile, moves the interface
/// and re-initialises the fields on the grown region.
///
/// Tiles are solved on the current rayon pool; results are merged in
/// boundary order, so the outcome does not depend on the worker count.
pub fn run_stage(state: &MacroState, params: &ParameterSet, op: &MicroOperator) -> Result<(MacroState, StageOutcome)> {
    let stage = state.stage_index;
    let wrap = |e: Error| Error::Stage {
        stage,
        source: Box::new(e),
    };
    let (post, macro_report) = advance_stage_report(state, params).map_err(wrap)?;
    let tiles = build_microdomain_family(&post.region, &post.grid, params).map_err(wrap)?;
    let solved: Vec<(RelocationDecision, usize)> = tiles
        .par_iter()
        .map(|md| {
            let sources = assemble_sources(md, &post);
            let sol = solve_micro_with(op, md, &sources, params)?;
            Ok((decide(md, &post, params, &sol), sol.clipped))
        })
        .collect::<Result<_>>()
        .map_err(wrap)?;
    let micro_clipped = solved.iter().map(|(_, c)| c).sum();
    let decisions: Vec<RelocationDecision> = solved.into_iter().map(|(d, _)| d).collect();
    let (region, rebuild) = rebuild_boundary(&decisions, &post.region).map_err(wrap)?;
    let next = reinitialize_macro(&post, region);
    Ok((
        next,
        StageOutcome {
            stage,
            macro_report,
            post_macro: post,
            decisions,
            rebuild,
            micro_clipped,
        },
    ))
}
