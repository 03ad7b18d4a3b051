//! Uniform macro grid over the square tissue domain, plus the node-based
//! scalar fields and binary masks that live on it.
//!
//! Nodes are addressed by `(i, j)` with `i` along x and `j` along y; storage
//! is row-major in `j` (`index = j * n + i`).

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector, or `None` for a (numerically) zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Vec2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Grid node index `(i, j)`.
pub type Node = (usize, usize);

/// Square grid of `n × n` nodes with spacing `h` on `[0, 4]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroGrid {
    n: usize,
    h: f64,
}

impl MacroGrid {
    pub const EXTENT: f64 = 4.0;

    pub fn new(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::invalid(
                "macro_grid_n",
                format!("need at least 5 nodes per axis, got {n}"),
            ));
        }
        Ok(MacroGrid {
            n,
            h: Self::EXTENT / (n - 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn node_of(&self, index: usize) -> Node {
        (index % self.n, index / self.n)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.n && (j as usize) < self.n
    }

    /// Node closest to `p`, or `None` if `p` rounds to a node off the grid.
    pub fn nearest(&self, p: Vec2) -> Option<Node> {
        let i = (p.x / self.h).round();
        let j = (p.y / self.h).round();
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// In-grid 4-neighbours of a node.
    pub fn neighbors4(&self, i: usize, j: usize) -> impl Iterator<Item = Node> + '_ {
        const OFFSETS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        OFFSETS.iter().filter_map(move |&(di, dj)| {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            self.contains(a, b).then_some((a as usize, b as usize))
        })
    }

    /// Trapezoidal quadrature weight of node `(i, j)` (relative to `h²`).
    pub fn trapezoid_weight(&self, i: usize, j: usize) -> f64 {
        let w = |k: usize| if k == 0 || k == self.n - 1 { 0.5 } else { 1.0 };
        w(i) * w(j)
    }
}

/// Node-based scalar field on a [`MacroGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &MacroGrid) -> Self {
        Field {
            n: grid.n(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &MacroGrid, value: f64) -> Self {
        Field {
            n: grid.n(),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: &MacroGrid, f: impl Fn(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                values.push(f(grid.point(i, j)));
            }
        }
        Field { n: grid.n(), values }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {n}x{n} field, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Field { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[j * self.n + i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    /// Trapezoidal integral over the domain.
    pub fn integral(&self, grid: &MacroGrid) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n {
            for i in 0..self.n {
                total += grid.trapezoid_weight(i, j) * self.at(i, j);
            }
        }
        total * grid.h() * grid.h()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Binary node mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    n: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(n: usize) -> Self {
        Mask {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn full(n: usize) -> Self {
        Mask {
            n,
            bits: vec![true; n * n],
        }
    }

    pub fn from_fn(grid: &MacroGrid, f: impl Fn(usize, usize) -> bool) -> Self {
        let n = grid.n();
        let mut bits = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                bits.push(f(i, j));
            }
        }
        Mask { n, bits }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.n + i]
    }

    /// Signed lookup: off-grid nodes read as unmasked.
    #[inline]
    pub fn get_signed(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.n
            && (j as usize) < self.n
            && self.bits[j as usize * self.n + i as usize]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[j * self.n + i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k % self.n, k / self.n))
    }

    pub fn rotate90(&self) -> Mask {
        let n = self.n;
        let mut out = Mask::empty(n);
        for j in 0..n {
            for i in 0..n {
                if self.get(i, j) {
                    // (i, j) -> (n-1-j, i): counter-clockwise quarter turn
                    out.set(n - 1 - j, i, true);
                }
            }
        }
        out
    }
}
