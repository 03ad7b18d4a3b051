//! Per-tile relocation decision.

use std::fmt;

use crate::grid::{Mask, Node, Vec2};
use crate::micro_solver::MicroSolution;
use crate::microdomain::MicroDomain;
use crate::params::ParameterSet;
use crate::state::MacroState;
use crate::threshold::{ecm_ratio, tissue_threshold};

use super::dyadic::dyadic_decompose;
use super::peaks::{relocation_vector, select_peaks, transitional_probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionReason {
    Moved,
    /// No outside pixel carries a significant plasmin peak.
    NoFront,
    /// Peaks pull in opposite directions and cancel.
    DegenerateDirection,
    /// Plasmin share below the tissue threshold.
    BelowThreshold,
    /// No exterior tile-edge node lies ahead of the centre.
    NoTarget,
}

impl DecisionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionReason::Moved => "moved",
            DecisionReason::NoFront => "no_front",
            DecisionReason::DegenerateDirection => "degenerate_direction",
            DecisionReason::BelowThreshold => "below_threshold",
            DecisionReason::NoTarget => "no_target",
        }
    }
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelocationDecision {
    pub boundary_index: usize,
    pub center_node: Node,
    pub x_star: Vec2,
    pub q_star: f64,
    pub omega: f64,
    /// ECM at the centre over its supremum on the interface.
    pub ratio: f64,
    pub moved: bool,
    pub direction: Option<Vec2>,
    pub magnitude: f64,
    /// Destination node; the centre node when staying.
    pub new_node: Node,
    pub new_position: Vec2,
    pub reason: DecisionReason,
    pub peaks: Vec<usize>,
}

/// Largest ECM density over the boundary nodes of the state's region.
pub fn boundary_ecm_supremum(state: &MacroState) -> f64 {
    state
        .region
        .boundary
        .nodes
        .iter()
        .map(|&(i, j)| state.v.at(i, j))
        .fold(0.0, f64::max)
}

/// Decision for one tile after its micro solve. `state` is the macro state at
/// the end of the stage.
pub fn decide(
    md: &MicroDomain,
    state: &MacroState,
    params: &ParameterSet,
    micro: &MicroSolution,
) -> RelocationDecision {
    let ratio = ecm_ratio(
        state.v.at(md.center_node.0, md.center_node.1),
        boundary_ecm_supremum(state),
    );
    decide_with_ratio(md, &state.region.mask, &micro.m, ratio, params.beta)
}

/// Decision given the ECM ratio directly.
pub fn decide_with_ratio(md: &MicroDomain, mask: &Mask, m: &[f64], ratio: f64, beta: f64) -> RelocationDecision {
    let decomp = dyadic_decompose(md, md.micro_spacing().powi(2));
    let q_star = transitional_probability(&decomp, m);
    let omega = tissue_threshold(ratio, beta);
    let peaks = select_peaks(md, &decomp, m);
    let (direction, magnitude) = if peaks.is_empty() {
        (None, 0.0)
    } else {
        relocation_vector(md, &decomp, &peaks, m)
    };
    let mut decision = RelocationDecision {
        boundary_index: md.boundary_index,
        center_node: md.center_node,
        x_star: md.center,
        q_star,
        omega,
        ratio,
        moved: false,
        direction,
        magnitude,
        new_node: md.center_node,
        new_position: md.center,
        reason: DecisionReason::NoFront,
        peaks,
    };
    if decision.peaks.is_empty() {
        return decision;
    }
    let Some(dir) = direction else {
        decision.reason = DecisionReason::DegenerateDirection;
        return decision;
    };
    if q_star < omega {
        decision.reason = DecisionReason::BelowThreshold;
        return decision;
    }
    match relocation_target(md, mask, dir) {
        Some(node) => {
            decision.moved = true;
            decision.new_node = node;
            decision.new_position = md.center + offset(md, node);
            decision.reason = DecisionReason::Moved;
        }
        None => decision.reason = DecisionReason::NoTarget,
    }
    decision
}

fn offset(md: &MicroDomain, node: Node) -> Vec2 {
    let h = md.h();
    Vec2::new(
        (node.0 as f64 - md.center_node.0 as f64) * h,
        (node.1 as f64 - md.center_node.1 as f64) * h,
    )
}

/// Unmasked tile-edge node closest to the centre in the open half-plane ahead
/// of `dir`. Nodes on the domain edge are never chosen. Ties go to the node
/// most aligned with `dir`, then to ring order (counter-clockwise from the
/// lower-left corner).
pub fn relocation_target(md: &MicroDomain, mask: &Mask, dir: Vec2) -> Option<Node> {
    let n = mask.n();
    let ring = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
    let mut best: Option<(Node, f64, f64)> = None;
    for (a, b) in ring {
        let node = md.anchor_node(a, b);
        if mask.get(node.0, node.1) || node.0 == 0 || node.1 == 0 || node.0 + 1 >= n || node.1 + 1 >= n {
            continue;
        }
        let rel = offset(md, node);
        let along = rel.dot(dir);
        if along <= 1e-12 * md.h() {
            continue;
        }
        let dist = rel.norm();
        let cos = along / dist;
        let better = match best {
            None => true,
            Some((_, bd, bc)) => {
                dist < bd - 1e-12 * md.h() || ((dist - bd).abs() <= 1e-12 * md.h() && cos > bc + 1e-12)
            }
        };
        if better {
            best = Some((node, dist, cos));
        }
    }
    best.map(|(node, _, _)| node)
}

#[cfg(test)]
mod tests {
    use super::super::dyadic::tests::{lower_half, tile};
    use super::*;

    fn mask_for(md: &MicroDomain) -> Mask {
        let mut mask = Mask::empty(32);
        for b in 0..3 {
            for a in 0..3 {
                let (i, j) = md.anchor_node(a, b);
                mask.set(i, j, md.anchor_masked[a][b]);
            }
        }
        mask
    }

    /// Plasmin concentrated on the upper-right micro nodes.
    fn front() -> Vec<f64> {
        let mut m = vec![0.0; 81];
        for l in 6..9 {
            for k in 6..9 {
                m[l * 9 + k] = 1.0;
            }
        }
        m
    }

    #[test]
    fn no_plasmin_stays() {
        let md = tile(lower_half());
        let d = decide_with_ratio(&md, &mask_for(&md), &[0.0; 81], 0.775, 0.775);
        assert_eq!(d.q_star, 0.0);
        assert!(!d.moved);
        assert_eq!(d.reason, DecisionReason::NoFront);
        assert_eq!(d.new_node, md.center_node);
    }

    #[test]
    fn full_share_at_zero_threshold_moves_to_exterior_edge_node() {
        let md = tile(lower_half());
        let d = decide_with_ratio(&md, &mask_for(&md), &front(), 0.775, 0.775);
        assert_eq!(d.omega, 0.0);
        assert!((d.q_star - 1.0).abs() < 1e-15);
        assert!(d.moved);
        assert_eq!(d.reason, DecisionReason::Moved);
        // the closest exterior node ahead of the up-right direction is straight up
        assert_eq!(d.new_node, (10, 11));
        assert_eq!(d.new_position, md.center + Vec2::new(0.0, md.h()));
    }

    #[test]
    fn below_threshold_stays() {
        let md = tile(lower_half());
        let d = decide_with_ratio(&md, &mask_for(&md), &front(), 0.0, 0.775);
        assert_eq!(d.omega, 1.0);
        let mut m = front();
        m[0] = 1.0;
        let d = decide_with_ratio(&md, &mask_for(&md), &m, 0.0, 0.775);
        assert!(d.q_star < 1.0);
        assert!(!d.moved);
        assert_eq!(d.reason, DecisionReason::BelowThreshold);
    }

    #[test]
    fn domain_edge_is_never_a_target() {
        let mut md = tile(lower_half());
        md.center_node = (10, 30);
        md.center = Vec2::new(10.0 * md.h(), 30.0 * md.h());
        let mask = mask_for(&md);
        assert_eq!(relocation_target(&md, &mask, Vec2::new(0.0, 1.0)), None);
        let d = decide_with_ratio(&md, &mask, &front(), 0.775, 0.775);
        assert_eq!(d.reason, DecisionReason::NoTarget);
        assert!(!d.moved);
    }

    #[test]
    fn target_tie_breaks_on_alignment() {
        let md = tile(lower_half());
        let mask = mask_for(&md);
        // straight up and the two upper corners: up is closest
        assert_eq!(
            relocation_target(&md, &mask, Vec2::new(0.2, 1.0).normalized().unwrap()),
            Some((10, 11))
        );
        // direction pointing into the tumour has no exterior node ahead
        assert_eq!(relocation_target(&md, &mask, Vec2::new(0.0, -1.0)), None);
    }
}
