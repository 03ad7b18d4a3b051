//! Tumour region on the macro grid: node mask plus the ordered boundary
//! polyline traced around it.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{MacroGrid, Mask, Node, Vec2};

/// A mask node is on the boundary when one of its 4-neighbours is unmasked
/// or lies off the grid.
pub fn is_boundary_node(mask: &Mask, i: usize, j: usize) -> bool {
    if !mask.get(i, j) {
        return false;
    }
    let (a, b) = (i as i64, j as i64);
    !(mask.get_signed(a + 1, b) && mask.get_signed(a - 1, b) && mask.get_signed(a, b + 1) && mask.get_signed(a, b - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    /// Boundary nodes in counter-clockwise order, each exactly once.
    pub nodes: Vec<Node>,
    /// Set for a one-node region, whose polyline encloses nothing.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TumourRegion {
    pub mask: Mask,
    pub boundary: Boundary,
}

impl TumourRegion {
    pub fn from_mask(mask: Mask) -> Result<Self> {
        let boundary = extract_boundary(&mask)?;
        Ok(TumourRegion { mask, boundary })
    }

    pub fn boundary_points(&self, grid: &MacroGrid) -> Vec<Vec2> {
        self.boundary.nodes.iter().map(|&(i, j)| grid.point(i, j)).collect()
    }

    /// Mask area as node count times cell area.
    pub fn area(&self, grid: &MacroGrid) -> f64 {
        self.mask.count() as f64 * grid.h() * grid.h()
    }
}

/// Number of 4-connected components of the masked nodes.
pub fn component_count(mask: &Mask) -> usize {
    let n = mask.n();
    let mut seen = vec![false; n * n];
    let mut count = 0;
    for (i, j) in mask.nodes().collect::<Vec<_>>() {
        if seen[j * n + i] {
            continue;
        }
        count += 1;
        flood(n, &mut seen, &[(i, j)], |a, b| mask.get(a, b));
    }
    count
}

/// Unmasked nodes that cannot be reached from the grid border through
/// unmasked 4-neighbours.
pub fn hole_mask(mask: &Mask) -> Mask {
    let n = mask.n();
    let mut seen = vec![false; n * n];
    let seeds: Vec<Node> = border_nodes(n).filter(|&(i, j)| !mask.get(i, j)).collect();
    flood(n, &mut seen, &seeds, |a, b| !mask.get(a, b));
    let mut holes = Mask::empty(n);
    for j in 0..n {
        for i in 0..n {
            if !mask.get(i, j) && !seen[j * n + i] {
                holes.set(i, j, true);
            }
        }
    }
    holes
}

pub(crate) fn border_nodes(n: usize) -> impl Iterator<Item = Node> {
    (0..n)
        .flat_map(move |j| (0..n).filter_map(move |i| (i == 0 || j == 0 || i == n - 1 || j == n - 1).then_some((i, j))))
}

/// Breadth-first 4-flood from `seeds` over nodes where `open` holds,
/// marking `seen`.
pub(crate) fn flood(n: usize, seen: &mut [bool], seeds: &[Node], open: impl Fn(usize, usize) -> bool) {
    let mut queue = VecDeque::new();
    for &(i, j) in seeds {
        if open(i, j) && !seen[j * n + i] {
            seen[j * n + i] = true;
            queue.push_back((i, j));
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let mut visit = |a: usize, b: usize| {
            if !seen[b * n + a] && open(a, b) {
                seen[b * n + a] = true;
                queue.push_back((a, b));
            }
        };
        if i + 1 < n {
            visit(i + 1, j);
        }
        if i > 0 {
            visit(i - 1, j);
        }
        if j + 1 < n {
            visit(i, j + 1);
        }
        if j > 0 {
            visit(i, j - 1);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    E,
    N,
    W,
    S,
}

impl Dir {
    fn left(self) -> Dir {
        match self {
            Dir::E => Dir::N,
            Dir::N => Dir::W,
            Dir::W => Dir::S,
            Dir::S => Dir::E,
        }
    }

    fn right(self) -> Dir {
        match self {
            Dir::E => Dir::S,
            Dir::S => Dir::W,
            Dir::W => Dir::N,
            Dir::N => Dir::E,
        }
    }

    fn step(self) -> (i64, i64) {
        match self {
            Dir::E => (1, 0),
            Dir::N => (0, 1),
            Dir::W => (-1, 0),
            Dir::S => (0, -1),
        }
    }

    /// Cells to the left and right of the crack leaving corner `(a, b)` in
    /// this direction. Corner `(a, b)` is the lower-left corner of cell `(a, b)`.
    fn sides(self, a: i64, b: i64) -> ((i64, i64), (i64, i64)) {
        match self {
            Dir::E => ((a, b), (a, b - 1)),
            Dir::N => ((a - 1, b), (a, b)),
            Dir::W => ((a - 1, b - 1), (a - 1, b)),
            Dir::S => ((a, b - 1), (a - 1, b - 1)),
        }
    }
}

/// Ordered boundary of a single 4-connected, hole-free mask.
///
/// Follows the cracks between masked and unmasked cells with the region on
/// the left, preferring left turns so diagonal-only contacts are not crossed.
/// The cell on the left of each crack is recorded at its first visit.
pub fn extract_boundary(mask: &Mask) -> Result<Boundary> {
    let n = mask.n();
    let start = mask
        .nodes()
        .next()
        .ok_or_else(|| Error::Topology("tumour mask is empty".into()))?;
    let components = component_count(mask);
    if components != 1 {
        return Err(Error::Topology(format!(
            "tumour mask has {components} 4-connected components, expected one"
        )));
    }
    let holes = hole_mask(mask).count();
    if holes > 0 {
        return Err(Error::Topology(format!("tumour mask encloses {holes} hole node(s)")));
    }
    if mask.count() == 1 {
        return Ok(Boundary {
            nodes: vec![start],
            degenerate: true,
        });
    }

    let inside = |c: (i64, i64)| mask.get_signed(c.0, c.1);
    let valid = |d: Dir, a: i64, b: i64| {
        let (l, r) = d.sides(a, b);
        inside(l) && !inside(r)
    };

    // the lowest, then leftmost, cell has open space below it
    let (mut a, mut b) = (start.0 as i64, start.1 as i64);
    let (a0, b0) = (a, b);
    let mut dir = Dir::E;
    let mut visited = vec![false; n * n];
    let mut nodes = Vec::new();
    let limit = 4 * n * n + 8;
    for _ in 0..limit {
        let (l, _) = dir.sides(a, b);
        let idx = l.1 as usize * n + l.0 as usize;
        if !visited[idx] {
            visited[idx] = true;
            nodes.push((l.0 as usize, l.1 as usize));
        }
        let (da, db) = dir.step();
        a += da;
        b += db;
        dir = [dir.left(), dir, dir.right()]
            .into_iter()
            .find(|&d| valid(d, a, b))
            .ok_or_else(|| Error::Topology("boundary trace reached a dead end".into()))?;
        if (a, b) == (a0, b0) && dir == Dir::E {
            let expected = mask.nodes().filter(|&(i, j)| is_boundary_node(mask, i, j)).count();
            if expected != nodes.len() {
                return Err(Error::Topology(format!(
                    "boundary trace found {} of {expected} boundary nodes",
                    nodes.len()
                )));
            }
            return Ok(Boundary {
                nodes,
                degenerate: false,
            });
        }
    }
    Err(Error::Topology("boundary trace did not close".into()))
}

/// Mask enclosed by a closed ring of boundary nodes: every node the grid
/// border cannot reach by 4-steps without crossing the ring.
pub fn mask_from_boundary(n: usize, boundary: &[Node]) -> Mask {
    let mut wall = vec![false; n * n];
    for &(i, j) in boundary {
        wall[j * n + i] = true;
    }
    let mut outside = vec![false; n * n];
    let seeds: Vec<Node> = border_nodes(n).collect();
    flood(n, &mut outside, &seeds, |i, j| !wall[j * n + i]);
    let mut mask = Mask::empty(n);
    for j in 0..n {
        for i in 0..n {
            mask.set(i, j, !outside[j * n + i]);
        }
    }
    mask
}

/// Length of the closed polyline through `points`.
pub fn closed_length(points: &[Vec2]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..points.len() {
        total += points[k].distance(points[(k + 1) % points.len()]);
    }
    total
}

/// Signed shoelace area of the closed polyline (positive when CCW).
pub fn signed_area(points: &[Vec2]) -> f64 {
    let mut twice = 0.0;
    for k in 0..points.len() {
        twice += points[k].cross(points[(k + 1) % points.len()]);
    }
    0.5 * twice
}
