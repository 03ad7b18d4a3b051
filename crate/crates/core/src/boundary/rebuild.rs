//! New interface from the relocation decisions, and the macro state carried
//! onto the grown region.

use crate::error::Result;
use crate::grid::{Mask, Node, Vec2};
use crate::macro_solver::neighbours;
use crate::region::{border_nodes, flood, TumourRegion};
use crate::state::MacroState;

use super::decision::RelocationDecision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RebuildReport {
    pub moved: usize,
    /// Proper self-crossings of the relocated polyline, resolved by the fill.
    pub repairs: usize,
}

/// Grows `region` so that it encloses the relocated boundary points.
///
/// The relocated polyline is drawn on the grid as 4-connected node paths on
/// top of the old mask; everything the grid border cannot reach around that
/// wall becomes tumour. Holes are therefore filled and the result stays one
/// 4-connected component containing the old mask.
pub fn rebuild_boundary(
    decisions: &[RelocationDecision],
    region: &TumourRegion,
) -> Result<(TumourRegion, RebuildReport)> {
    let old = &region.mask;
    let n = old.n();
    let mut points: Vec<Node> = region.boundary.nodes.clone();
    let mut moves = Vec::new();
    for d in decisions.iter().filter(|d| d.moved) {
        if let Some(slot) = points.get_mut(d.boundary_index) {
            *slot = d.new_node;
            moves.push((d.center_node, d.new_node));
        }
    }
    if moves.is_empty() {
        return Ok((region.clone(), RebuildReport::default()));
    }

    let mut wall = old.clone();
    let mut draw = |a: Node, b: Node| {
        for (i, j) in grid_path(a, b, old) {
            wall.set(i, j, true);
        }
    };
    for k in 0..points.len() {
        draw(points[k], points[(k + 1) % points.len()]);
    }
    for &(from, to) in &moves {
        draw(from, to);
    }

    let mut exterior = vec![false; n * n];
    let seeds: Vec<Node> = border_nodes(n).collect();
    flood(n, &mut exterior, &seeds, |i, j| !wall.get(i, j));
    let mut mask = Mask::empty(n);
    for j in 0..n {
        for i in 0..n {
            mask.set(i, j, !exterior[j * n + i]);
        }
    }
    let report = RebuildReport {
        moved: moves.len(),
        repairs: self_crossings(&points),
    };
    Ok((TumourRegion::from_mask(mask)?, report))
}

/// 4-connected node path from `a` to `b` (both included) that stays closest
/// to the straight segment. Ties prefer nodes already in `prefer`, then the
/// horizontal step.
pub fn grid_path(a: Node, b: Node, prefer: &Mask) -> Vec<Node> {
    let (ax, ay) = (a.0 as i64, a.1 as i64);
    let (bx, by) = (b.0 as i64, b.1 as i64);
    let (dx, dy) = (bx - ax, by - ay);
    let off_line = |x: i64, y: i64| ((x - ax) * dy - (y - ay) * dx).abs();
    let mut path = vec![a];
    let (mut x, mut y) = (ax, ay);
    while (x, y) != (bx, by) {
        let sx = (x + (bx - x).signum(), y);
        let sy = (x, y + (by - y).signum());
        let next = if x == bx {
            sy
        } else if y == by {
            sx
        } else {
            let (ex, ey) = (off_line(sx.0, sx.1), off_line(sy.0, sy.1));
            if ex != ey {
                if ex < ey {
                    sx
                } else {
                    sy
                }
            } else if !prefer.get(sx.0 as usize, sx.1 as usize) && prefer.get(sy.0 as usize, sy.1 as usize) {
                sy
            } else {
                sx
            }
        };
        (x, y) = next;
        path.push((x as usize, y as usize));
    }
    path
}

/// Number of pairs of non-adjacent segments of the closed polyline through
/// `points` that cross at an interior point of both.
pub fn self_crossings(points: &[Node]) -> usize {
    let len = points.len();
    if len < 4 {
        return 0;
    }
    let p = |k: usize| {
        let (i, j) = points[k % len];
        Vec2::new(i as f64, j as f64)
    };
    let mut count = 0;
    for s in 0..len {
        for t in s + 2..len {
            if s == 0 && t == len - 1 {
                continue;
            }
            if proper_crossing(p(s), p(s + 1), p(t), p(t + 1)) {
                count += 1;
            }
        }
    }
    count
}

fn proper_crossing(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Macro state on the grown region: annexed nodes take the mean cancer
/// density of their four neighbours, cancer density is zero off the region,
/// and the other fields carry over.
pub fn reinitialize_macro(state: &MacroState, new_region: TumourRegion) -> MacroState {
    let grid = state.grid;
    let n = grid.n();
    let old = &state.region.mask;
    let mut c = state.c.clone();
    for j in 0..n {
        for i in 0..n {
            let value = if !new_region.mask.get(i, j) {
                0.0
            } else if !old.get(i, j) {
                let values = state.c.values();
                neighbours(n, i, j).iter().map(|&k| values[k]).sum::<f64>() / 4.0
            } else {
                continue;
            };
            c.set(i, j, value);
        }
    }
    MacroState {
        grid,
        c,
        v: state.v.clone(),
        u: state.u.clone(),
        p: state.p.clone(),
        m: state.m.clone(),
        region: new_region,
        stage_index: state.stage_index + 1,
        time_in_stage: 0.0,
    }
}
