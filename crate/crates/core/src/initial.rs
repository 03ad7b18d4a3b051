//! Initial tumour and tissue configuration.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, MacroGrid, Mask, Vec2};
use crate::mollifier::MollifierStencil;
use crate::params::{EcmMode, ParameterSet};
use crate::region::TumourRegion;
use crate::state::MacroState;

/// Offset subtracted from the Gaussian so it is close to zero at the rim.
const GAUSSIAN_FLOOR_EXPONENT: f64 = -28.125;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionSpec {
    pub tumour_center: Vec2,
    pub tumour_radius: f64,
    pub ecm_mode: EcmMode,
}

impl InitialConditionSpec {
    pub fn standard(ecm_mode: EcmMode) -> Self {
        InitialConditionSpec {
            tumour_center: Vec2::new(2.0, 2.0),
            tumour_radius: 0.5,
            ecm_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.tumour_center;
        let r = self.tumour_radius;
        let e = MacroGrid::EXTENT;
        if r.is_nan() || r <= 0.0 || c.x - r <= 0.0 || c.y - r <= 0.0 || c.x + r >= e || c.y + r >= e {
            return Err(Error::invalid(
                "tumour_radius",
                format!(
                    "ball of radius {r} around ({}, {}) must lie strictly inside the domain",
                    c.x, c.y
                ),
            ));
        }
        Ok(())
    }
}

/// Raw oscillating ECM profile. It dips below zero in places, so the state
/// builder clamps it.
pub fn heterogeneous_ecm_profile(x: Vec2) -> f64 {
    let far = Vec2::new(4.0, 0.0) - x;
    (1.0 + 0.3 * (4.0 * PI * x.norm()).sin() + (4.0 * PI * far.norm()).sin()) / 2.0
}

/// Cancer cell density: a narrow Gaussian (width set by the grid spacing)
/// cut off smoothly just inside the tumour radius, halved.
pub fn initial_cancer_density(x: Vec2, ic: &InitialConditionSpec, h: f64, stencil: &MollifierStencil) -> f64 {
    let r2 = (x - ic.tumour_center).norm_squared();
    let inner = ic.tumour_radius - stencil.gamma();
    let dist = r2.sqrt();
    let cutoff = if dist >= inner + stencil.gamma() {
        0.0
    } else if dist < inner - stencil.gamma() {
        1.0
    } else {
        stencil.smooth(x, |y| (y - ic.tumour_center).norm() <= inner)
    };
    if cutoff == 0.0 {
        return 0.0;
    }
    let gaussian = (-r2 / h).exp() - GAUSSIAN_FLOOR_EXPONENT.exp();
    (gaussian * cutoff / 2.0).max(0.0)
}

pub fn initial_macro_state(ic: &InitialConditionSpec, params: &ParameterSet) -> Result<MacroState> {
    ic.validate()?;
    let grid = params.grid()?;
    let h = grid.h();
    let stencil = MollifierStencil::new(params.gamma, MollifierStencil::DEFAULT_SAMPLES);

    let c = Field::from_fn(&grid, |x| initial_cancer_density(x, ic, h, &stencil));
    let u = Field::from_values(grid.n(), c.values().iter().map(|&c| 1.0 - c / 2.0).collect())?;
    let p = Field::from_values(grid.n(), c.values().iter().map(|&c| c / 2.0).collect())?;
    let m = Field::from_values(grid.n(), c.values().iter().map(|&c| c / 20.0).collect())?;
    let v = match ic.ecm_mode {
        EcmMode::Homogeneous => Field::from_values(grid.n(), c.values().iter().map(|&c| 1.0 - c).collect())?,
        EcmMode::Heterogeneous => Field::from_fn(&grid, |x| heterogeneous_ecm_profile(x).max(0.0)),
    };

    let tol = 1e-9 * h;
    let mask = Mask::from_fn(&grid, |i, j| {
        grid.point(i, j).distance(ic.tumour_center) <= ic.tumour_radius + tol
    });
    let region = TumourRegion::from_mask(mask)?;

    Ok(MacroState {
        grid,
        c,
        v,
        u,
        p,
        m,
        region,
        stage_index: 0,
        time_in_stage: 0.0,
    })
}
