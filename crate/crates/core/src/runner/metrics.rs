//! Scalar summaries of a tumour region and its fields.

use crate::error::{Error, Result};
use crate::grid::{Field, MacroGrid, Mask};
use crate::region::{closed_length, is_boundary_node, signed_area, TumourRegion};

/// Boundary polyline length over the square root of its enclosed area.
/// Scale free; a disk gives `2√π`.
pub fn fingering_metric(region: &TumourRegion, grid: &MacroGrid) -> Result<f64> {
    if region.boundary.degenerate {
        return Err(Error::DegenerateRegion("one-node region has no enclosed area".into()));
    }
    let points = region.boundary_points(grid);
    let area = signed_area(&points).abs();
    if area <= 0.0 {
        return Err(Error::DegenerateRegion("boundary polyline encloses no area".into()));
    }
    Ok(closed_length(&points) / area.sqrt())
}

/// Coefficient of variation (population standard deviation over mean) of
/// `field` on the mask nodes that are not boundary nodes. Zero when the
/// interior is empty or the mean vanishes.
pub fn interior_cv(field: &Field, mask: &Mask) -> f64 {
    let values: Vec<f64> = mask
        .nodes()
        .filter(|&(i, j)| !is_boundary_node(mask, i, j))
        .map(|(i, j)| field.at(i, j))
        .collect();
    if values.is_empty() {
        return 0.0;
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if mean.abs() <= f64::MIN_POSITIVE {
        return 0.0;
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
    var.sqrt() / mean
}
