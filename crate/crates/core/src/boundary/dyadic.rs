//! Dyadic pixel decomposition of a tile and the element-level split into
//! tumour side and exterior.

use crate::grid::Vec2;
use crate::microdomain::MicroDomain;

#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    /// Row-major pixel index at its level.
    pub index: usize,
    pub col: usize,
    pub row: usize,
    /// Barycenter in absolute coordinates.
    pub barycenter: Vec2,
    /// Every element of the pixel lies outside the tumour.
    pub outside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicDecomposition {
    pub level: u32,
    pub pixels_per_axis: usize,
    pub pixel_size: f64,
    pub pixels: Vec<Pixel>,
    /// Outside area not covered by outside pixels.
    pub residual: f64,
    /// Micro elements per axis.
    pub elements_per_axis: usize,
    /// Per-element outside flag, row-major over elements.
    pub element_outside: Vec<bool>,
    pub element_area: f64,
}

/// Element `(k, l)` is outside when its centre is not in the tumour-side part
/// of the tile.
pub fn element_outside_flags(md: &MicroDomain) -> Vec<bool> {
    let e = md.elements_per_axis;
    let geo = md.tile_geometry();
    let mut out = Vec::with_capacity(e * e);
    for l in 0..e {
        for k in 0..e {
            let s = 2.0 * (k as f64 + 0.5) / e as f64;
            let t = 2.0 * (l as f64 + 0.5) / e as f64;
            out.push(!geo.contains(s, t));
        }
    }
    out
}

impl DyadicDecomposition {
    /// Decomposition into `2^level × 2^level` pixels. `level` must not exceed
    /// the micro mesh resolution.
    pub fn at_level(md: &MicroDomain, level: u32) -> Self {
        let flags = element_outside_flags(md);
        Self::from_flags(md, flags, level)
    }

    fn from_flags(md: &MicroDomain, element_outside: Vec<bool>, level: u32) -> Self {
        let e = md.elements_per_axis;
        let p = 1usize << level;
        assert!(p <= e, "pixel level {level} finer than the micro mesh");
        let span = e / p;
        let hm = md.micro_spacing();
        let pixel_size = hm * span as f64;
        let origin = md.lower_left();
        let mut pixels = Vec::with_capacity(p * p);
        let mut uncovered = 0usize;
        for row in 0..p {
            for col in 0..p {
                let mut all = true;
                let mut count = 0;
                for l in row * span..(row + 1) * span {
                    for k in col * span..(col + 1) * span {
                        if element_outside[l * e + k] {
                            count += 1;
                        } else {
                            all = false;
                        }
                    }
                }
                if !all {
                    uncovered += count;
                }
                pixels.push(Pixel {
                    index: row * p + col,
                    col,
                    row,
                    barycenter: origin + Vec2::new((col as f64 + 0.5) * pixel_size, (row as f64 + 0.5) * pixel_size),
                    outside: all,
                });
            }
        }
        DyadicDecomposition {
            level,
            pixels_per_axis: p,
            pixel_size,
            pixels,
            residual: uncovered as f64 * hm * hm,
            elements_per_axis: e,
            element_outside,
            element_area: hm * hm,
        }
    }

    /// Elements `(k, l)` belonging to pixel `index`.
    pub fn pixel_elements(&self, index: usize) -> impl Iterator<Item = (usize, usize)> {
        let span = self.elements_per_axis / self.pixels_per_axis;
        let (row, col) = (index / self.pixels_per_axis, index % self.pixels_per_axis);
        (row * span..(row + 1) * span).flat_map(move |l| (col * span..(col + 1) * span).map(move |k| (k, l)))
    }

    pub fn outside_area(&self) -> f64 {
        self.element_outside.iter().filter(|&&f| f).count() as f64 * self.element_area
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Pixel> {
        self.pixels.iter().filter(|p| p.outside)
    }
}

/// Coarsest dyadic level whose outside pixels cover the outside area up to
/// `delta_tol`; the micro mesh level always qualifies.
pub fn dyadic_decompose(md: &MicroDomain, delta_tol: f64) -> DyadicDecomposition {
    dyadic_decompose_flags(md, element_outside_flags(md), delta_tol)
}

/// As [`dyadic_decompose`], with the per-element outside flags given
/// (row-major, `elements_per_axis²` entries).
pub fn dyadic_decompose_flags(md: &MicroDomain, flags: Vec<bool>, delta_tol: f64) -> DyadicDecomposition {
    assert_eq!(
        flags.len(),
        md.elements_per_axis * md.elements_per_axis,
        "one flag per micro element"
    );
    let max_level = md.elements_per_axis.trailing_zeros();
    for level in 0..max_level {
        let d = DyadicDecomposition::from_flags(md, flags.clone(), level);
        if d.residual <= delta_tol {
            return d;
        }
    }
    DyadicDecomposition::from_flags(md, flags, max_level)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::microdomain::Face;

    pub(crate) fn tile(anchor_masked: [[bool; 3]; 3]) -> MicroDomain {
        MicroDomain {
            boundary_index: 0,
            center_node: (10, 10),
            center: Vec2::new(10.0 * 0.03125, 10.0 * 0.03125),
            epsilon: 0.0625,
            face_int: Face::South,
            anchor_masked,
            inside: anchor_masked,
            elements_per_axis: 8,
        }
    }

    pub(crate) fn lower_half() -> [[bool; 3]; 3] {
        [[true, true, false]; 3]
    }

    #[test]
    fn lower_half_tumour_flags_upper_half() {
        let md = tile(lower_half());
        let d = DyadicDecomposition::at_level(&md, 3);
        let flagged: Vec<usize> = d.flagged().map(|p| p.index).collect();
        assert_eq!(flagged, (32..64).collect::<Vec<_>>());
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn full_tile_tumour_flags_nothing() {
        let md = tile([[true; 3]; 3]);
        for level in 0..=3 {
            let d = DyadicDecomposition::at_level(&md, level);
            assert_eq!(d.flagged().count(), 0);
        }
        assert_eq!(dyadic_decompose(&md, 1e-6).outside_area(), 0.0);
    }

    #[test]
    fn coarsest_admissible_level() {
        let md = tile(lower_half());
        let d = dyadic_decompose(&md, md.micro_spacing().powi(2));
        assert_eq!(d.level, 1);
        assert_eq!(d.flagged().map(|p| p.index).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn quarter_disk_area_against_fine_sampling() {
        // tumour on a single corner anchor cell plus its triangle neighbours
        let mut m = [[false; 3]; 3];
        m[0][0] = true;
        m[1][0] = true;
        m[0][1] = true;
        m[1][1] = true;
        m[2][0] = true;
        m[0][2] = true;
        let md = tile(m);
        let geo = md.tile_geometry();
        let tol = md.micro_spacing().powi(2);
        let d = dyadic_decompose(&md, tol);
        let covered = d.flagged().count() as f64 * d.pixel_size * d.pixel_size;
        // fine-grid oracle of the exterior area
        let n = 128;
        let mut outside = 0usize;
        for b in 0..n {
            for a in 0..n {
                let s = 2.0 * (a as f64 + 0.5) / n as f64;
                let t = 2.0 * (b as f64 + 0.5) / n as f64;
                if !geo.contains(s, t) {
                    outside += 1;
                }
            }
        }
        let area = outside as f64 * (md.epsilon / n as f64).powi(2);
        assert!(
            (area - d.outside_area()).abs() <= 4.0 * tol,
            "{area} vs {}",
            d.outside_area()
        );
        assert!(d.outside_area() - covered <= tol + 1e-18);
    }
}
