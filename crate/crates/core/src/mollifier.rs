//! Standard unit-mass bump `ψ_γ` and smoothing of indicator functions.

use std::sync::OnceLock;

use crate::grid::{Field, MacroGrid, Mask, Vec2};

/// `∫_{|z|<1} exp(1/(|z|²-1)) dz` in the plane.
///
/// In polar form with `s = r²` this is `π ∫₀¹ exp(1/(s-1)) ds`; the integrand
/// is flat to all orders at `s = 1`, so composite Simpson converges fast.
pub fn unit_bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let intervals = 1 << 16;
        let step = 1.0 / intervals as f64;
        let f = |s: f64| if s < 1.0 { (1.0 / (s - 1.0)).exp() } else { 0.0 };
        let mut sum = f(0.0) + f(1.0);
        for k in 1..intervals {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(k as f64 * step);
        }
        std::f64::consts::PI * sum * step / 3.0
    })
}

/// `ψ_γ(x) = γ⁻² ψ(x/γ)`, supported on the open ball of radius `gamma`.
pub fn mollifier(x: Vec2, gamma: f64) -> f64 {
    let r2 = x.norm_squared() / (gamma * gamma);
    if r2 >= 1.0 {
        return 0.0;
    }
    (1.0 / (r2 - 1.0)).exp() / (unit_bump_mass() * gamma * gamma)
}

/// Fixed midpoint quadrature of `ψ_γ` on `[-γ, γ]²`, with weights normalised
/// to sum to one so constants are reproduced exactly.
#[derive(Debug, Clone)]
pub struct MollifierStencil {
    gamma: f64,
    taps: Vec<(Vec2, f64)>,
}

impl MollifierStencil {
    pub const DEFAULT_SAMPLES: usize = 64;

    pub fn new(gamma: f64, samples_per_axis: usize) -> Self {
        let step = 2.0 * gamma / samples_per_axis as f64;
        let mut taps = Vec::new();
        let mut total = 0.0;
        for b in 0..samples_per_axis {
            for a in 0..samples_per_axis {
                let d = Vec2::new(-gamma + (a as f64 + 0.5) * step, -gamma + (b as f64 + 0.5) * step);
                let w = mollifier(d, gamma);
                if w > 0.0 {
                    taps.push((d, w));
                    total += w;
                }
            }
        }
        for tap in &mut taps {
            tap.1 /= total;
        }
        MollifierStencil { gamma, taps }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(χ_A ∗ ψ_γ)(x)` for the set `A` given by `indicator`.
    pub fn smooth(&self, x: Vec2, indicator: impl Fn(Vec2) -> bool) -> f64 {
        let mut acc = 0.0;
        for &(d, w) in &self.taps {
            if indicator(x - d) {
                acc += w;
            }
        }
        acc.clamp(0.0, 1.0)
    }
}

/// Mollified indicator of a node mask, read as piecewise constant on the
/// `h × h` cell around each node.
pub fn mollified_indicator(mask: &Mask, grid: &MacroGrid, gamma: f64) -> Field {
    let stencil = MollifierStencil::new(gamma, MollifierStencil::DEFAULT_SAMPLES);
    mollified_indicator_with(mask, grid, &stencil)
}

pub fn mollified_indicator_with(mask: &Mask, grid: &MacroGrid, stencil: &MollifierStencil) -> Field {
    let lookup = |p: Vec2| match grid.nearest(p) {
        Some((i, j)) => mask.get(i, j),
        None => false,
    };
    let reach = (stencil.gamma() / grid.h()).ceil() as i64 + 1;
    let mut out = Field::zeros(grid);
    for j in 0..grid.n() {
        for i in 0..grid.n() {
            // shortcut: a node whose whole stencil neighbourhood agrees is exact
            let mut all_in = true;
            let mut all_out = true;
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let m = mask.get_signed(i as i64 + di, j as i64 + dj);
                    all_in &= m;
                    all_out &= !m;
                }
            }
            let value = if all_in {
                1.0
            } else if all_out {
                0.0
            } else {
                stencil.smooth(grid.point(i, j), lookup)
            };
            out.set(i, j, value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_mass_matches_high_precision_quadrature() {
        // mpmath, 30 digits
        assert!((unit_bump_mass() - 0.466_512_393_178_330_07).abs() < 1e-13);
    }

    #[test]
    fn zero_outside_support() {
        let g = 0.01;
        assert_eq!(mollifier(Vec2::new(g, 0.0), g), 0.0);
        assert_eq!(mollifier(Vec2::new(0.008, 0.008), g), 0.0);
        assert!(mollifier(Vec2::new(0.005, 0.0), g) > 0.0);
    }

    #[test]
    fn unit_mass_by_fine_midpoint_quadrature() {
        let gamma = 0.02;
        let n = 512;
        let step = 2.0 * gamma / n as f64;
        let mut total = 0.0;
        for b in 0..n {
            for a in 0..n {
                let x = Vec2::new(-gamma + (a as f64 + 0.5) * step, -gamma + (b as f64 + 0.5) * step);
                total += mollifier(x, gamma) * step * step;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "mass {total}");
    }

    #[test]
    fn radially_symmetric() {
        let gamma = 0.3;
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let x = Vec2::new(0.25 * t.cos() * (k as f64 / 50.0), 0.25 * t.sin() * (k as f64 / 50.0));
            assert_eq!(mollifier(x, gamma), mollifier(-x, gamma));
        }
    }

    #[test]
    fn constant_masks_are_reproduced() {
        let grid = MacroGrid::new(17).unwrap();
        let ones = mollified_indicator(&Mask::full(17), &grid, 0.1);
        assert!(ones.values().iter().all(|&v| v == 1.0));
        let zeros = mollified_indicator(&Mask::empty(17), &grid, 0.1);
        assert!(zeros.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_plane_far_interior_is_one() {
        // wide kernel so the stencil straddles several cells
        let grid = MacroGrid::new(33).unwrap();
        let mask = Mask::from_fn(&grid, |_, j| j <= 16);
        let gamma = 0.3;
        let field = mollified_indicator(&mask, &grid, gamma);
        // independent direct summation over the same cell-constant indicator
        let oracle = |x: Vec2| {
            let n = 400;
            let step = 2.0 * gamma / n as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for b in 0..n {
                for a in 0..n {
                    let d = Vec2::new(-gamma + (a as f64 + 0.5) * step, -gamma + (b as f64 + 0.5) * step);
                    let w = mollifier(d, gamma);
                    den += w;
                    let y = x - d;
                    let cell_j = (y.y / grid.h()).round();
                    if (0.0..=16.0).contains(&cell_j) {
                        num += w;
                    }
                }
            }
            num / den
        };
        // node 4h = 0.5 below the interface, farther than gamma from the complement
        let far = field.at(16, 8);
        assert!((far - 1.0).abs() < 1e-12);
        assert!((oracle(grid.point(16, 8)) - 1.0).abs() < 1e-12);
        // far exterior
        assert_eq!(field.at(16, 28), 0.0);
        // straddling node agrees with the fine oracle to quadrature accuracy
        let mid = field.at(16, 16);
        assert!(mid > 0.0 && mid < 1.0);
        assert!(
            (mid - oracle(grid.point(16, 16))).abs() < 2e-2,
            "{mid} vs {}",
            oracle(grid.point(16, 16))
        );
    }

    #[test]
    fn values_stay_in_unit_interval() {
        let grid = MacroGrid::new(21).unwrap();
        let mask = Mask::from_fn(&grid, |i, j| (i * 7 + j * 3) % 5 < 2);
        let f = mollified_indicator(&mask, &grid, 0.25);
        assert!(f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
