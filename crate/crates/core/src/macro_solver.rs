//! Tissue-scale five-species system on the macro grid.
//!
//! Spatial operators are written in flux form with central half-node
//! differences. The domain edge reflects: the ghost node beyond the edge
//! mirrors the first interior node, which keeps the stencil second order and
//! makes the operators telescope exactly under trapezoidal weights.
//! Time stepping is an explicit predictor followed by one trapezoidal
//! corrector.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, MacroGrid};
use crate::mollifier::mollified_indicator;
use crate::params::ParameterSet;
use crate::state::MacroState;

/// Undershoots below this are counted as significant clips.
pub const CLIP_TOLERANCE: f64 = 1e-12;

#[inline]
fn mirror(k: i64, n: usize) -> usize {
    let last = n as i64 - 1;
    if k < 0 {
        (-k) as usize
    } else if k > last {
        (2 * last - k) as usize
    } else {
        k as usize
    }
}

/// Flat indices of the east, west, north and south neighbours of `(i, j)`,
/// mirrored at the grid edge.
#[inline]
pub(crate) fn neighbours(n: usize, i: usize, j: usize) -> [usize; 4] {
    let (a, b) = (i as i64, j as i64);
    [
        b as usize * n + mirror(a + 1, n),
        b as usize * n + mirror(a - 1, n),
        mirror(b + 1, n) * n + i,
        mirror(b - 1, n) * n + i,
    ]
}

/// `∇·∇f` at node `(i, j)`.
pub fn diffusion_term(field: &Field, grid: &MacroGrid, i: usize, j: usize) -> f64 {
    diffusion_at(field.values(), grid.n(), grid.h(), i, j)
}

#[inline]
fn diffusion_at(f: &[f64], n: usize, h: f64, i: usize, j: usize) -> f64 {
    let c = f[j * n + i];
    let [e, w, no, so] = neighbours(n, i, j).map(|k| f[k]);
    ((e - c) - (c - w) + (no - c) - (c - so)) / (h * h)
}

/// `coeff · ∇·(carrier ∇potential)` at node `(i, j)`, with the carrier
/// averaged onto half nodes.
pub fn taxis_term(carrier: &Field, potential: &Field, coeff: f64, grid: &MacroGrid, i: usize, j: usize) -> f64 {
    coeff * taxis_at(carrier.values(), potential.values(), grid.n(), grid.h(), i, j)
}

#[inline]
fn taxis_at(c: &[f64], w: &[f64], n: usize, h: f64, i: usize, j: usize) -> f64 {
    let k = j * n + i;
    let [e, we, no, so] = neighbours(n, i, j);
    let flux = |nb: usize| 0.5 * (c[nb] + c[k]) * (w[nb] - w[k]);
    (flux(e) + flux(we) + flux(no) + flux(so)) / (h * h)
}

/// Diffusive and tactic flux divergence of the cancer cells at node `k`.
/// Faces towards nodes off the support carry no flux, so cells neither leave
/// nor enter the tumour region through its edge.
#[inline]
fn cancer_transport_at(
    f: [&[f64]; 5],
    support: &[bool],
    pr: &ParameterSet,
    n: usize,
    h: f64,
    i: usize,
    j: usize,
) -> f64 {
    let [c, v, u, p, _] = f;
    let k = j * n + i;
    let mut total = 0.0;
    for nb in neighbours(n, i, j) {
        if !support[nb] {
            continue;
        }
        let carrier = 0.5 * (c[nb] + c[k]);
        total += pr.d_c * (c[nb] - c[k])
            - carrier * (pr.chi_u * (u[nb] - u[k]) + pr.chi_p * (p[nb] - p[k]) + pr.chi_v * (v[nb] - v[k]));
    }
    total / (h * h)
}

/// Time derivatives of the five macro fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroRates {
    pub c: Field,
    pub v: Field,
    pub u: Field,
    pub p: Field,
    pub m: Field,
}

/// Right-hand side of the macro system. Cells only evolve on the tumour
/// support, and no cell flux crosses its edge.
pub fn macro_rhs(state: &MacroState, params: &ParameterSet) -> MacroRates {
    let support = tumour_support(state, params);
    let fields = [
        state.c.values(),
        state.v.values(),
        state.u.values(),
        state.p.values(),
        state.m.values(),
    ];
    let out = rhs(fields, &support, &state.grid, params);
    let n = state.grid.n();
    let [c, v, u, p, m] = out.map(|values| Field::from_values(n, values).expect("grid-sized"));
    MacroRates { c, v, u, p, m }
}

fn tumour_support(state: &MacroState, params: &ParameterSet) -> Vec<bool> {
    let smoothed = mollified_indicator(&state.region.mask, &state.grid, params.gamma);
    smoothed.values().iter().map(|&s| s > 0.0).collect()
}

fn rhs(f: [&[f64]; 5], support: &[bool], grid: &MacroGrid, pr: &ParameterSet) -> [Vec<f64>; 5] {
    let n = grid.n();
    let h = grid.h();
    let [c, v, u, p, m] = f;
    let mut out: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n * n]);
    let [dc, dv, du, dp, dm] = &mut out;
    dc.par_chunks_mut(n)
        .zip(dv.par_chunks_mut(n))
        .zip(du.par_chunks_mut(n))
        .zip(dp.par_chunks_mut(n))
        .zip(dm.par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, ((((dc, dv), du), dp), dm))| {
            for i in 0..n {
                let k = j * n + i;
                let (ck, vk, uk, pk, mk) = (c[k], v[k], u[k], p[k], m[k]);
                dc[i] = if support[k] {
                    cancer_transport_at(f, support, pr, n, h, i, j) + pr.mu1 * ck * (1.0 - ck)
                } else {
                    0.0
                };
                dv[i] = -pr.delta * vk * mk + pr.phi21 * uk * pk - pr.phi22 * vk * pk + pr.mu2 * vk * (1.0 - vk);
                du[i] =
                    pr.d_u * diffusion_at(u, n, h, i, j) - pr.phi31 * pk * uk - pr.phi33 * ck * uk + pr.alpha31 * ck;
                dp[i] =
                    pr.d_p * diffusion_at(p, n, h, i, j) - pr.phi41 * pk * uk - pr.phi42 * pk * vk + pr.alpha41 * mk;
                dm[i] = pr.d_m * diffusion_at(m, n, h, i, j) + pr.phi52 * pk * vk + pr.phi53 * ck * uk - pr.phi54 * mk;
            }
        });
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MacroStageReport {
    /// Negative `c` or `v` values reset to zero.
    pub clipped: usize,
    /// Of those, values below `-CLIP_TOLERANCE`.
    pub clipped_significant: usize,
}

pub fn advance_stage(state: &MacroState, params: &ParameterSet) -> Result<MacroState> {
    advance_stage_report(state, params).map(|(s, _)| s)
}

/// Runs `k_macro` predictor-corrector steps covering one stage.
pub fn advance_stage_report(state: &MacroState, params: &ParameterSet) -> Result<(MacroState, MacroStageReport)> {
    let grid = state.grid;
    let support = tumour_support(state, params);
    let dt = params.dt();
    let len = grid.len();

    let mut cur: [Vec<f64>; 5] = state.fields().map(|f| f.values().to_vec());
    let mut report = MacroStageReport::default();
    for step in 0..params.k_macro {
        let k1 = rhs(refs(&cur), &support, &grid, params);
        let mut pred: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; len]);
        for s in 0..5 {
            for k in 0..len {
                pred[s][k] = cur[s][k] + dt * k1[s][k];
            }
        }
        let k2 = rhs(refs(&pred), &support, &grid, params);
        for s in 0..5 {
            for k in 0..len {
                cur[s][k] += 0.5 * dt * (k1[s][k] + k2[s][k]);
            }
        }
        for s in [0, 1] {
            for x in cur[s].iter_mut() {
                if *x < 0.0 {
                    report.clipped += 1;
                    if *x < -CLIP_TOLERANCE {
                        report.clipped_significant += 1;
                    }
                    *x = 0.0;
                }
            }
        }
        check_finite(&cur, &grid, step)?;
    }

    let n = grid.n();
    let [c, v, u, p, m] = cur.map(|values| Field::from_values(n, values).expect("grid-sized"));
    let next = MacroState {
        grid,
        c,
        v,
        u,
        p,
        m,
        region: state.region.clone(),
        stage_index: state.stage_index,
        time_in_stage: state.time_in_stage + params.dt_macro,
    };
    Ok((next, report))
}

fn refs(f: &[Vec<f64>; 5]) -> [&[f64]; 5] {
    [&f[0], &f[1], &f[2], &f[3], &f[4]]
}

fn check_finite(f: &[Vec<f64>; 5], grid: &MacroGrid, step: usize) -> Result<()> {
    for (s, values) in f.iter().enumerate() {
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            let (i, j) = grid.node_of(k);
            return Err(Error::MacroDivergence {
                step,
                i,
                j,
                field: MacroState::FIELD_NAMES[s],
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Mask, Vec2};
    use crate::initial::{initial_macro_state, InitialConditionSpec};
    use crate::params::EcmMode;
    use crate::region::TumourRegion;

    fn uniform_state(grid: MacroGrid, vals: [f64; 5], mask: Mask) -> MacroState {
        let [c, v, u, p, m] = vals.map(|x| Field::constant(&grid, x));
        MacroState {
            grid,
            c,
            v,
            u,
            p,
            m,
            region: TumourRegion::from_mask(mask).unwrap(),
            stage_index: 0,
            time_in_stage: 0.0,
        }
    }

    fn centre_block(grid: &MacroGrid) -> Mask {
        let n = grid.n();
        Mask::from_fn(grid, |i, j| i > n / 4 && i < 3 * n / 4 && j > n / 4 && j < 3 * n / 4)
    }

    /// Reference Laplacian built on an explicitly padded array.
    fn padded_laplacian(f: &Field, h: f64) -> Vec<f64> {
        let n = f.n();
        let w = n + 2;
        let mut pad = vec![0.0; w * w];
        for j in 0..w {
            for i in 0..w {
                let src = |k: usize| -> usize {
                    if k == 0 {
                        1
                    } else if k == n + 1 {
                        n - 2
                    } else {
                        k - 1
                    }
                };
                pad[j * w + i] = f.at(src(i), src(j));
            }
        }
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let at = |a: usize, b: usize| pad[b * w + a];
                out[j * n + i] = (at(i + 2, j + 1) + at(i, j + 1) + at(i + 1, j + 2) + at(i + 1, j)
                    - 4.0 * at(i + 1, j + 1))
                    / (h * h);
            }
        }
        out
    }

    #[test]
    fn constant_field_has_no_diffusion() {
        let g = MacroGrid::new(17).unwrap();
        let f = Field::constant(&g, 3.7);
        for j in 0..17 {
            for i in 0..17 {
                assert_eq!(diffusion_term(&f, &g, i, j), 0.0);
            }
        }
    }

    #[test]
    fn quadratic_laplacian_is_four() {
        let g = MacroGrid::new(33).unwrap();
        let f = Field::from_fn(&g, |x| x.x * x.x + x.y * x.y);
        for (i, j) in [(5, 7), (16, 16), (30, 2)] {
            assert!((diffusion_term(&f, &g, i, j) - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reflected_edge_matches_padded_oracle() {
        let g = MacroGrid::new(17).unwrap();
        let f = Field::from_fn(&g, |x| (x.x * 1.3).sin() + x.y * x.y * 0.2 + x.x * x.y);
        let oracle = padded_laplacian(&f, g.h());
        for j in 0..17 {
            for i in 0..17 {
                let got = diffusion_term(&f, &g, i, j);
                assert!((got - oracle[j * 17 + i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn field_linear_along_edge_has_no_diffusion_there() {
        let g = MacroGrid::new(17).unwrap();
        let f = Field::from_fn(&g, |x| 2.0 * x.x + 1.0);
        // corners excluded: there the field is also normal to the other edge
        for i in 1..16 {
            assert!(diffusion_term(&f, &g, i, 0).abs() < 1e-10);
            assert!(diffusion_term(&f, &g, i, 16).abs() < 1e-10);
        }
    }

    #[test]
    fn taxis_special_cases() {
        let g = MacroGrid::new(33).unwrap();
        let ones = Field::constant(&g, 1.0);
        let bowl = Field::from_fn(&g, |x| x.x * x.x + x.y * x.y);
        let flat = Field::constant(&g, 0.4);
        let ramp = Field::from_fn(&g, |x| x.x);
        for (i, j) in [(4, 4), (16, 20), (28, 9)] {
            assert_eq!(taxis_term(&bowl, &flat, 2.0, &g, i, j), 0.0);
            assert!((taxis_term(&ones, &bowl, 1.0, &g, i, j) - diffusion_term(&bowl, &g, i, j)).abs() < 1e-9);
            assert!((taxis_term(&ones, &bowl, 1.0, &g, i, j) - 4.0).abs() < 1e-9);
            assert!((taxis_term(&ramp, &ramp, 1.0, &g, i, j) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rhs_zero_state() {
        let g = MacroGrid::new(17).unwrap();
        let s = uniform_state(g, [0.0; 5], centre_block(&g));
        let r = macro_rhs(&s, &ParameterSet::default().with_grid(17));
        for f in [&r.c, &r.v, &r.u, &r.p, &r.m] {
            assert!(f.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn rhs_uniform_cells_and_matrix() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let s = uniform_state(g, [1.0, 1.0, 0.0, 0.0, 0.0], centre_block(&g));
        let r = macro_rhs(&s, &p);
        for k in 0..g.len() {
            assert_eq!(r.c.values()[k], 0.0);
            assert_eq!(r.v.values()[k], 0.0);
            assert_eq!(r.u.values()[k], p.alpha31);
            assert_eq!(r.p.values()[k], 0.0);
            assert_eq!(r.m.values()[k], 0.0);
        }
    }

    #[test]
    fn rhs_uniform_plasmin() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let s = uniform_state(g, [0.0, 0.0, 0.0, 0.0, 1.0], centre_block(&g));
        let r = macro_rhs(&s, &p);
        for k in 0..g.len() {
            assert_eq!(r.v.values()[k], 0.0);
            assert_eq!(r.p.values()[k], p.alpha41);
            assert_eq!(r.m.values()[k], -p.phi54);
        }
    }

    fn zero_kinetics(p: &mut ParameterSet) {
        let keep = (p.d_c, p.d_u, p.d_p, p.d_m);
        let base = ParameterSet {
            d_c: keep.0,
            d_u: keep.1,
            d_p: keep.2,
            d_m: keep.3,
            chi_u: 0.0,
            chi_p: 0.0,
            chi_v: 0.0,
            mu1: 0.0,
            mu2: 0.0,
            delta: 0.0,
            phi21: 0.0,
            phi22: 0.0,
            phi31: 0.0,
            phi33: 0.0,
            phi41: 0.0,
            phi42: 0.0,
            phi52: 0.0,
            phi53: 0.0,
            phi54: 0.0,
            alpha31: 0.0,
            alpha41: 0.0,
            ..p.clone()
        };
        *p = base;
    }

    #[test]
    fn pure_diffusion_conserves_mass() {
        let mut p = ParameterSet::default().with_grid(33);
        zero_kinetics(&mut p);
        let g = p.grid().unwrap();
        let s0 = initial_macro_state(&InitialConditionSpec::standard(EcmMode::Homogeneous), &p).unwrap();
        let mut s = s0.clone();
        s.u = Field::from_fn(&g, |x| (x.x * 2.0).cos() + 2.0 + x.y * 0.1);
        let s1 = advance_stage(&s, &p).unwrap();
        for (a, b) in [(&s.u, &s1.u), (&s.p, &s1.p), (&s.m, &s1.m)] {
            let (ma, mb) = (a.integral(&g), b.integral(&g));
            assert!(((ma - mb) / ma).abs() < 1e-12, "{ma} {mb}");
        }
    }

    #[test]
    fn cells_do_not_cross_the_tumour_edge() {
        // transport only: diffusion and all three taxis terms
        let mut p = ParameterSet::default().with_grid(33);
        zero_kinetics(&mut p);
        p.d_c = 4.3e-3;
        p.chi_u = 3.05e-2;
        p.chi_p = 3.75e-2;
        p.chi_v = 2.85e-2;
        let g = p.grid().unwrap();
        let mut s = initial_macro_state(&InitialConditionSpec::standard(EcmMode::Heterogeneous), &p).unwrap();
        s.u = Field::from_fn(&g, |x| (x.x * 3.0).sin() + 1.5);
        s.p = Field::from_fn(&g, |x| (x.y * 2.0).cos() + 1.5);
        let mask = s.region.mask.clone();
        s.c = Field::from_values(
            33,
            (0..33 * 33)
                .map(|k| {
                    let (i, j) = g.node_of(k);
                    if mask.get(i, j) {
                        0.3 + 0.1 * (i as f64).cos()
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
        .unwrap();
        let (s1, rep) = advance_stage_report(&s, &p).unwrap();
        assert_eq!(rep.clipped, 0);
        let mass = |f: &Field| f.values().iter().sum::<f64>();
        assert!(((mass(&s1.c) - mass(&s.c)) / mass(&s.c)).abs() < 1e-12);
        for (i, j) in Mask::full(33).nodes() {
            if !s.region.mask.get(i, j) {
                assert_eq!(s1.c.at(i, j), 0.0);
            }
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let s = uniform_state(g, [0.0; 5], centre_block(&g));
        let s1 = advance_stage(&s, &p).unwrap();
        for f in s1.fields() {
            assert!(f.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn logistic_step_matches_scalar_heun() {
        let mut p = ParameterSet::default().with_grid(17);
        zero_kinetics(&mut p);
        p.d_c = 0.0;
        p.mu1 = 0.25;
        p.k_macro = 1;
        p.dt_macro = 0.05;
        let g = p.grid().unwrap();
        let s = uniform_state(g, [0.5, 0.0, 0.0, 0.0, 0.0], Mask::full(17));
        let s1 = advance_stage(&s, &p).unwrap();
        let f = |c: f64| p.mu1 * c * (1.0 - c);
        let dt = p.dt();
        let pred = 0.5 + dt * f(0.5);
        let expected = 0.5 + 0.5 * dt * (f(0.5) + f(pred));
        for &c in s1.c.values() {
            assert!((c - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_state_stays_uniform() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let s = uniform_state(g, [0.3, 0.6, 0.2, 0.1, 0.05], Mask::full(17));
        let s1 = advance_stage(&s, &p).unwrap();
        for f in s1.fields() {
            let first = f.values()[0];
            assert!(f.values().iter().all(|&x| x == first));
        }
    }

    #[test]
    fn cells_frozen_off_support() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let mask = centre_block(&g);
        let mut s = uniform_state(g, [0.0, 1.0, 0.5, 0.1, 0.1], mask.clone());
        s.c = Field::from_fn(&g, |x| (-(x - Vec2::new(2.0, 2.0)).norm_squared()).exp());
        let s1 = advance_stage(&s, &p).unwrap();
        for j in 0..17 {
            for i in 0..17 {
                if !mask.get(i, j) {
                    assert_eq!(s1.c.at(i, j), s.c.at(i, j));
                }
            }
        }
    }

    #[test]
    fn divergence_reports_step_and_node() {
        let g = MacroGrid::new(17).unwrap();
        let p = ParameterSet::default().with_grid(17);
        let mut s = uniform_state(g, [0.0, 1.0, 0.5, 0.1, 0.1], Mask::full(17));
        s.u.set(3, 4, f64::NAN);
        match advance_stage(&s, &p) {
            Err(Error::MacroDivergence { step, .. }) => assert_eq!(step, 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
