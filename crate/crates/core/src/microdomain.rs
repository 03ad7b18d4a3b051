//! Boundary tiles: ε-squares centred on boundary nodes.
//!
//! With `ε = 2h` every tile spans a 3×3 patch of macro nodes ("anchors"),
//! addressed locally as `(a, b)` with `a, b ∈ {0, 1, 2}` and the centre at
//! `(1, 1)`.

use crate::error::{Error, Result};
use crate::grid::{MacroGrid, Mask, Node, Vec2};
use crate::params::ParameterSet;
use crate::region::TumourRegion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    West,
    East,
    South,
    North,
}

impl Face {
    /// Tie-break order when several faces qualify.
    pub const ALL: [Face; 4] = [Face::West, Face::East, Face::South, Face::North];

    pub fn outward_normal(self) -> Vec2 {
        match self {
            Face::West => Vec2::new(-1.0, 0.0),
            Face::East => Vec2::new(1.0, 0.0),
            Face::South => Vec2::new(0.0, -1.0),
            Face::North => Vec2::new(0.0, 1.0),
        }
    }

    pub fn opposite(self) -> Face {
        match self {
            Face::West => Face::East,
            Face::East => Face::West,
            Face::South => Face::North,
            Face::North => Face::South,
        }
    }

    /// Local anchor coordinates of the three nodes on this face.
    pub fn anchors(self) -> [(usize, usize); 3] {
        match self {
            Face::West => [(0, 0), (0, 1), (0, 2)],
            Face::East => [(2, 0), (2, 1), (2, 2)],
            Face::South => [(0, 0), (1, 0), (2, 0)],
            Face::North => [(0, 2), (1, 2), (2, 2)],
        }
    }

    pub fn middle(self) -> (usize, usize) {
        self.anchors()[1]
    }

    /// Face reached by a quarter turn counter-clockwise.
    pub fn rotate90(self) -> Face {
        match self {
            Face::East => Face::North,
            Face::North => Face::West,
            Face::West => Face::South,
            Face::South => Face::East,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroDomain {
    /// Position of the centre node in the boundary polyline.
    pub boundary_index: usize,
    pub center_node: Node,
    pub center: Vec2,
    pub epsilon: f64,
    pub face_int: Face,
    /// Tumour mask at the 3×3 anchors, indexed `[a][b]`.
    pub anchor_masked: [[bool; 3]; 3],
    /// Anchors in the 4-connected masked component attached to `face_int`.
    pub inside: [[bool; 3]; 3],
    pub elements_per_axis: usize,
}

impl MicroDomain {
    pub fn h(&self) -> f64 {
        self.epsilon / 2.0
    }

    pub fn lower_left(&self) -> Vec2 {
        self.center - Vec2::new(self.h(), self.h())
    }

    pub fn anchor_node(&self, a: usize, b: usize) -> Node {
        (self.center_node.0 + a - 1, self.center_node.1 + b - 1)
    }

    pub fn anchor_nodes(&self) -> Vec<Node> {
        let mut out = Vec::with_capacity(9);
        for b in 0..3 {
            for a in 0..3 {
                out.push(self.anchor_node(a, b));
            }
        }
        out
    }

    pub fn inside_component(&self) -> Vec<Node> {
        let mut out = Vec::new();
        for b in 0..3 {
            for a in 0..3 {
                if self.inside[a][b] {
                    out.push(self.anchor_node(a, b));
                }
            }
        }
        out
    }

    pub fn micro_spacing(&self) -> f64 {
        self.epsilon / self.elements_per_axis as f64
    }

    /// Micro node `(k, l)` in tile-local coordinates, origin at the lower-left corner.
    pub fn local_node(&self, k: usize, l: usize) -> Vec2 {
        let hm = self.micro_spacing();
        Vec2::new(k as f64 * hm, l as f64 * hm)
    }

    pub fn tile_geometry(&self) -> TileGeometry {
        TileGeometry {
            anchor_masked: self.anchor_masked,
        }
    }
}

/// Row-major micro mesh nodes over the tile, lower-left first.
pub fn micro_mesh_nodes(md: &MicroDomain) -> Vec<Vec2> {
    let e = md.elements_per_axis;
    let origin = md.lower_left();
    let hm = md.micro_spacing();
    let mut out = Vec::with_capacity((e + 1) * (e + 1));
    for l in 0..=e {
        for k in 0..=e {
            out.push(origin + Vec2::new(k as f64 * hm, l as f64 * hm));
        }
    }
    out
}

/// Tumour-side part of a tile as seen from its anchors.
///
/// Each of the four anchor cells contributes its whole square when all four
/// corners are masked, the closed triangle of the three masked corners when
/// exactly three are, and nothing otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileGeometry {
    pub anchor_masked: [[bool; 3]; 3],
}

/// Interpolation weights of a point against up to four anchors.
pub type AnchorWeights = [((usize, usize), f64); 4];

impl TileGeometry {
    const EDGE_TOL: f64 = 1e-12;

    /// For a point in anchor units (`[0, 2]²`), interpolation weights from the
    /// first anchor cell whose tumour-side part contains it, scanning cells
    /// in row-major order. `None` when no cell claims the point.
    pub fn tumour_side_weights(&self, s: f64, t: f64) -> Option<AnchorWeights> {
        for cb in 0..2 {
            for ca in 0..2 {
                let (ls, lt) = (s - ca as f64, t - cb as f64);
                let tol = Self::EDGE_TOL;
                if ls < -tol || ls > 1.0 + tol || lt < -tol || lt > 1.0 + tol {
                    continue;
                }
                let (ls, lt) = (ls.clamp(0.0, 1.0), lt.clamp(0.0, 1.0));
                if let Some(w) = self.cell_weights(ca, cb, ls, lt) {
                    return Some(w);
                }
            }
        }
        None
    }

    fn cell_weights(&self, ca: usize, cb: usize, s: f64, t: f64) -> Option<AnchorWeights> {
        let corner = |dx: usize, dy: usize| (ca + dx, cb + dy);
        let masked = |dx: usize, dy: usize| self.anchor_masked[ca + dx][cb + dy];
        let corners = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let count = corners.iter().filter(|&&(x, y)| masked(x, y)).count();
        match count {
            4 => Some([
                (corner(0, 0), (1.0 - s) * (1.0 - t)),
                (corner(1, 0), s * (1.0 - t)),
                (corner(0, 1), (1.0 - s) * t),
                (corner(1, 1), s * t),
            ]),
            3 => {
                let &(mx, my) = corners.iter().find(|&&(x, y)| !masked(x, y))?;
                let (ox, oy) = (1 - mx, 1 - my);
                // distances from the right-angle corner opposite the missing one
                let sigma = (s - ox as f64).abs();
                let tau = (t - oy as f64).abs();
                if sigma + tau > 1.0 + Self::EDGE_TOL {
                    return None;
                }
                Some([
                    (corner(ox, oy), 1.0 - sigma - tau),
                    (corner(mx, oy), sigma),
                    (corner(ox, my), tau),
                    (corner(mx, my), 0.0),
                ])
            }
            _ => None,
        }
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        self.tumour_side_weights(s, t).is_some()
    }
}

fn patch(mask: &Mask, (i, j): Node) -> [[bool; 3]; 3] {
    let mut out = [[false; 3]; 3];
    for (a, col) in out.iter_mut().enumerate() {
        for (b, cell) in col.iter_mut().enumerate() {
            *cell = mask.get(i + a - 1, j + b - 1);
        }
    }
    out
}

fn inside_component(masked: &[[bool; 3]; 3], face: Face) -> [[bool; 3]; 3] {
    let mut seen = [[false; 3]; 3];
    let mut stack: Vec<(usize, usize)> = face.anchors().to_vec();
    for &(a, b) in &stack {
        seen[a][b] = true;
    }
    while let Some((a, b)) = stack.pop() {
        let mut push = |x: usize, y: usize| {
            if masked[x][y] && !seen[x][y] {
                seen[x][y] = true;
                stack.push((x, y));
            }
        };
        if a > 0 {
            push(a - 1, b);
        }
        if a < 2 {
            push(a + 1, b);
        }
        if b > 0 {
            push(a, b - 1);
        }
        if b < 2 {
            push(a, b + 1);
        }
    }
    seen
}

/// Faces that can serve as the interior face: all three face nodes masked
/// and the middle node of the parallel face outside the tumour.
pub fn candidate_faces(masked: &[[bool; 3]; 3]) -> Vec<Face> {
    Face::ALL
        .into_iter()
        .filter(|f| {
            let full = f.anchors().iter().all(|&(a, b)| masked[a][b]);
            let (pa, pb) = f.opposite().middle();
            full && !masked[pa][pb]
        })
        .collect()
}

const NORMAL_REACH: usize = 2;

/// Outward normal at boundary position `k`, from the polyline points
/// `NORMAL_REACH` steps either side, falling back to the open 4-neighbour
/// directions.
pub fn boundary_normal(region: &TumourRegion, grid: &MacroGrid, k: usize) -> Vec2 {
    let nodes = &region.boundary.nodes;
    let len = nodes.len();
    if len > 2 * NORMAL_REACH {
        let (pi, pj) = nodes[(k + len - NORMAL_REACH) % len];
        let (ni, nj) = nodes[(k + NORMAL_REACH) % len];
        let tangent = grid.point(ni, nj) - grid.point(pi, pj);
        if let Some(n) = Vec2::new(tangent.y, -tangent.x).normalized() {
            return n;
        }
    }
    let (i, j) = nodes[k];
    let mut open = Vec2::ZERO;
    for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
        if !region.mask.get_signed(i as i64 + di, j as i64 + dj) {
            open = open + Vec2::new(di as f64, dj as f64);
        }
    }
    open.normalized().unwrap_or(Vec2::ZERO)
}

/// Tile centred at boundary position `k`, if one is admissible there.
pub fn tile_at(region: &TumourRegion, grid: &MacroGrid, params: &ParameterSet, k: usize) -> Option<MicroDomain> {
    let (i, j) = region.boundary.nodes[k];
    let n = grid.n();
    if i == 0 || j == 0 || i + 1 >= n || j + 1 >= n {
        return None;
    }
    let masked = patch(&region.mask, (i, j));
    let candidates = candidate_faces(&masked);
    let face = match candidates.len() {
        0 => return None,
        1 => candidates[0],
        _ => {
            let normal = boundary_normal(region, grid, k);
            let mut best = candidates[0];
            let mut best_score = f64::INFINITY;
            for f in candidates {
                let score = f.outward_normal().dot(normal);
                if score < best_score - 1e-12 {
                    best = f;
                    best_score = score;
                }
            }
            best
        }
    };
    Some(MicroDomain {
        boundary_index: k,
        center_node: (i, j),
        center: grid.point(i, j),
        epsilon: params.epsilon,
        face_int: face,
        anchor_masked: masked,
        inside: inside_component(&masked, face),
        elements_per_axis: params.micro_elements_per_axis,
    })
}

/// One tile per boundary node that admits one, in boundary order. Boundary
/// nodes without a tile must lie inside some other tile's patch.
pub fn build_microdomain_family(
    region: &TumourRegion,
    grid: &MacroGrid,
    params: &ParameterSet,
) -> Result<Vec<MicroDomain>> {
    let tiles: Vec<MicroDomain> = (0..region.boundary.nodes.len())
        .filter_map(|k| tile_at(region, grid, params, k))
        .collect();
    let n = grid.n();
    let mut covered = vec![false; n * n];
    for t in &tiles {
        for (i, j) in t.anchor_nodes() {
            covered[j * n + i] = true;
        }
    }
    for &(i, j) in &region.boundary.nodes {
        if !covered[j * n + i] {
            let p = grid.point(i, j);
            return Err(Error::Coverage { i, j, x: p.x, y: p.y });
        }
    }
    Ok(tiles)
}
