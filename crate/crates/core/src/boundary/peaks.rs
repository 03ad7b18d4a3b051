//! Plasmin front detection on the outside pixels of a tile.

use crate::grid::Vec2;
use crate::microdomain::MicroDomain;

use super::dyadic::DyadicDecomposition;

/// Integral of `m` over each micro element (area times corner mean),
/// row-major over elements.
pub fn element_integrals(decomp: &DyadicDecomposition, m: &[f64]) -> Vec<f64> {
    let e = decomp.elements_per_axis;
    let id = |k: usize, l: usize| l * (e + 1) + k;
    let mut out = Vec::with_capacity(e * e);
    for l in 0..e {
        for k in 0..e {
            let corners = m[id(k, l)] + m[id(k + 1, l)] + m[id(k + 1, l + 1)] + m[id(k, l + 1)];
            out.push(decomp.element_area * corners / 4.0);
        }
    }
    out
}

pub fn pixel_integral(decomp: &DyadicDecomposition, elements: &[f64], index: usize) -> f64 {
    let e = decomp.elements_per_axis;
    decomp.pixel_elements(index).map(|(k, l)| elements[l * e + k]).sum()
}

/// Share of the tile's plasmin lying outside the tumour; zero when the tile
/// holds no plasmin.
pub fn transitional_probability(decomp: &DyadicDecomposition, m: &[f64]) -> f64 {
    let elements = element_integrals(decomp, m);
    let total: f64 = elements.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let outside: f64 = elements
        .iter()
        .zip(&decomp.element_outside)
        .filter(|(_, &o)| o)
        .map(|(x, _)| x)
        .sum();
    (outside / total).clamp(0.0, 1.0)
}

/// Mean plasmin over the outside part of the tile.
pub fn outside_mean(decomp: &DyadicDecomposition, elements: &[f64]) -> f64 {
    let area = decomp.outside_area();
    if area <= 0.0 {
        return 0.0;
    }
    let sum: f64 = elements
        .iter()
        .zip(&decomp.element_outside)
        .filter(|(_, &o)| o)
        .map(|(x, _)| x)
        .sum();
    sum / area
}

/// Distance from `y` to the half-line from `origin` along `dir` (unit).
fn distance_to_ray(y: Vec2, origin: Vec2, dir: Vec2) -> f64 {
    let rel = y - origin;
    let along = rel.dot(dir);
    if along <= 0.0 {
        rel.norm()
    } else {
        (rel - dir * along).norm()
    }
}

/// Mean plasmin on every pixel.
pub fn pixel_means(decomp: &DyadicDecomposition, m: &[f64]) -> Vec<f64> {
    let elements = element_integrals(decomp, m);
    let area = decomp.pixel_size * decomp.pixel_size;
    (0..decomp.pixels.len())
        .map(|index| pixel_integral(decomp, &elements, index) / area)
        .collect()
}

/// Outside pixels holding at least the outside mean plasmin, reduced to the
/// farthest one from the tile centre along each ray.
///
/// One ray leaves the centre through each outside pixel barycenter; a pixel
/// lies on a ray when its barycenter is within half a pixel diagonal of it.
/// Returns sorted pixel indices; empty when the outside holds no plasmin.
pub fn select_peaks(md: &MicroDomain, decomp: &DyadicDecomposition, m: &[f64]) -> Vec<usize> {
    let elements = element_integrals(decomp, m);
    let threshold = outside_mean(decomp, &elements);
    select_peaks_from_means(md, decomp, &pixel_means(decomp, m), threshold)
}

/// Peak selection from given pixel means and outside mean.
pub fn select_peaks_from_means(
    md: &MicroDomain,
    decomp: &DyadicDecomposition,
    means: &[f64],
    outside_mean: f64,
) -> Vec<usize> {
    if outside_mean <= 0.0 {
        return Vec::new();
    }
    let qualifying: Vec<usize> = decomp
        .flagged()
        .filter(|p| means[p.index] >= outside_mean)
        .map(|p| p.index)
        .collect();
    let mut chosen: Vec<usize> = decomp
        .flagged()
        .filter_map(|ray| peak_on_ray(md, decomp, &qualifying, ray.index))
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

/// Farthest of `candidates` on the ray from the tile centre through the
/// barycenter of pixel `ray`; ties keep the lower index.
pub fn peak_on_ray(md: &MicroDomain, decomp: &DyadicDecomposition, candidates: &[usize], ray: usize) -> Option<usize> {
    let x = md.center;
    let dir = (decomp.pixels[ray].barycenter - x).normalized()?;
    let reach = decomp.pixel_size * std::f64::consts::SQRT_2 / 2.0 * (1.0 + 1e-12);
    let mut best: Option<(usize, f64)> = None;
    for &index in candidates {
        let y = decomp.pixels[index].barycenter;
        if distance_to_ray(y, x, dir) > reach {
            continue;
        }
        let d = y.distance(x);
        if best.is_none_or(|(bi, bd)| d > bd || (d == bd && index < bi)) {
            best = Some((index, d));
        }
    }
    best.map(|(index, _)| index)
}

/// Plasmin-weighted mean direction from the tile centre to the peaks (unit,
/// `None` when the weighted offsets cancel) and weighted mean peak distance.
pub fn relocation_vector(
    md: &MicroDomain,
    decomp: &DyadicDecomposition,
    peaks: &[usize],
    m: &[f64],
) -> (Option<Vec2>, f64) {
    let elements = element_integrals(decomp, m);
    let weighted: Vec<(Vec2, f64)> = peaks
        .iter()
        .map(|&index| {
            (
                decomp.pixels[index].barycenter,
                pixel_integral(decomp, &elements, index),
            )
        })
        .collect();
    weighted_relocation(md.center, &weighted)
}

/// Direction and magnitude from `(point, weight)` pairs around `center`.
pub fn weighted_relocation(center: Vec2, weighted: &[(Vec2, f64)]) -> (Option<Vec2>, f64) {
    let mut resultant = Vec2::ZERO;
    let (mut weighted_distance, mut total) = (0.0, 0.0);
    for &(y, w) in weighted {
        let offset = y - center;
        resultant = resultant + offset * w;
        weighted_distance += w * offset.norm();
        total += w;
    }
    if total <= 0.0 {
        return (None, 0.0);
    }
    let direction = if resultant.norm() <= 1e-12 * weighted_distance {
        None
    } else {
        resultant.normalized()
    };
    (direction, weighted_distance / total)
}
