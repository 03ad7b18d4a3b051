//! Cell-scale uPA / PAI-1 / plasmin system on one boundary tile.
//!
//! Bilinear square elements on a uniform `E × E` mesh with a row-sum lumped
//! mass matrix and natural (zero-flux) boundaries. Each step is a trapezoidal
//! predictor-corrector in which reactions are explicit and diffusion is
//! averaged between the old and new levels; the tile is small enough that
//! treating diffusion explicitly at the macro step would be unstable. On
//! spatially uniform data the diffusion terms vanish and the scheme reduces
//! to Heun's method on the reaction ODE.

use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::grid::{Field, MacroGrid, Mask, Vec2};
use crate::microdomain::MicroDomain;
use crate::params::ParameterSet;
use crate::state::MacroState;

/// Mean of `field` over the grid nodes in the closed ball, optionally
/// restricted to `mask`. Zero when no node qualifies.
pub fn compute_macro_average(center: Vec2, radius: f64, field: &Field, grid: &MacroGrid, mask: Option<&Mask>) -> f64 {
    let h = grid.h();
    let n = grid.n() as i64;
    let reach = radius * (1.0 + 1e-12);
    let lo = |x: f64| (((x - reach) / h).floor() as i64).clamp(0, n - 1) as usize;
    let hi = |x: f64| (((x + reach) / h).ceil() as i64).clamp(0, n - 1) as usize;
    let (mut sum, mut count) = (0.0, 0usize);
    for j in lo(center.y)..=hi(center.y) {
        for i in lo(center.x)..=hi(center.x) {
            if grid.point(i, j).distance(center) > reach {
                continue;
            }
            if mask.is_some_and(|m| !m.get(i, j)) {
                continue;
            }
            sum += field.at(i, j);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Source fields at the micro nodes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroSources {
    /// Tumour-cell contribution, from macro `c`.
    pub f1: Vec<f64>,
    /// Matrix contribution, from macro `v`.
    pub f2: Vec<f64>,
}

impl MicroSources {
    pub fn uniform(nodes: usize, f1: f64, f2: f64) -> Self {
        MicroSources {
            f1: vec![f1; nodes],
            f2: vec![f2; nodes],
        }
    }
}

/// Anchor values of the two sources, indexed `[a][b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorSources {
    pub f1: [[f64; 3]; 3],
    pub f2: [[f64; 3]; 3],
}

pub fn anchor_sources(md: &MicroDomain, state: &MacroState) -> AnchorSources {
    let radius = 2.0 * md.epsilon;
    let mut f1 = [[0.0; 3]; 3];
    let mut f2 = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let (i, j) = md.anchor_node(a, b);
            let x = state.grid.point(i, j);
            if md.anchor_masked[a][b] {
                f1[a][b] = compute_macro_average(x, radius, &state.c, &state.grid, Some(&state.region.mask));
            }
            f2[a][b] = compute_macro_average(x, radius, &state.v, &state.grid, None);
        }
    }
    AnchorSources { f1, f2 }
}

/// Extends anchor values to the micro nodes: `f1` through the tumour-side
/// geometry of the tile (zero elsewhere), `f2` bilinearly everywhere.
pub fn extend_sources(md: &MicroDomain, anchors: &AnchorSources) -> MicroSources {
    let e = md.elements_per_axis;
    let geo = md.tile_geometry();
    let mut f1 = Vec::with_capacity((e + 1) * (e + 1));
    let mut f2 = Vec::with_capacity((e + 1) * (e + 1));
    for l in 0..=e {
        for k in 0..=e {
            let s = 2.0 * k as f64 / e as f64;
            let t = 2.0 * l as f64 / e as f64;
            let v1 = match geo.tumour_side_weights(s, t) {
                Some(w) => w.iter().map(|&((a, b), wt)| wt * anchors.f1[a][b]).sum(),
                None => 0.0,
            };
            f1.push(v1);
            f2.push(bilinear(&anchors.f2, s, t));
        }
    }
    MicroSources { f1, f2 }
}

fn bilinear(values: &[[f64; 3]; 3], s: f64, t: f64) -> f64 {
    let ca = (s.floor() as usize).min(1);
    let cb = (t.floor() as usize).min(1);
    let (ls, lt) = (s - ca as f64, t - cb as f64);
    (1.0 - ls) * (1.0 - lt) * values[ca][cb]
        + ls * (1.0 - lt) * values[ca + 1][cb]
        + (1.0 - ls) * lt * values[ca][cb + 1]
        + ls * lt * values[ca + 1][cb + 1]
}

pub fn assemble_sources(md: &MicroDomain, state: &MacroState) -> MicroSources {
    extend_sources(md, &anchor_sources(md, state))
}

/// Nodal values of the three micro species.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub m: Vec<f64>,
    /// Negative plasmin values reset to zero.
    pub clipped: usize,
}

impl MicroSolution {
    pub fn zeros(nodes: usize) -> Self {
        MicroSolution {
            u: vec![0.0; nodes],
            p: vec![0.0; nodes],
            m: vec![0.0; nodes],
            clipped: 0,
        }
    }
}

/// Reference 4-node stiffness matrix of a square bilinear element, times 6.
/// Local node order: (0,0), (1,0), (1,1), (0,1).
const STIFFNESS_X6: [[i32; 4]; 4] = [[4, -1, -2, -1], [-1, 4, -1, -2], [-2, -1, 4, -1], [-1, -2, -1, 4]];

/// Discrete operators shared by all tiles of a stage.
#[derive(Debug, Clone)]
pub struct MicroOperator {
    e: usize,
    dt: f64,
    steps: usize,
    /// Lumped mass per node.
    mass: Vec<f64>,
    /// Assembled stiffness times 6, as sparse integer rows.
    stiffness_x6: Vec<Vec<(usize, i64)>>,
    diffusion: [f64; 3],
    implicit: [BandedCholesky; 3],
}

impl MicroOperator {
    pub fn new(params: &ParameterSet) -> Result<Self> {
        Self::with_mesh(
            params.micro_elements_per_axis,
            params.epsilon,
            params.dt(),
            params.k_macro,
            [params.d_u, params.d_p, params.d_m],
        )
    }

    pub fn with_mesh(e: usize, epsilon: f64, dt: f64, steps: usize, diffusion: [f64; 3]) -> Result<Self> {
        let nodes = (e + 1) * (e + 1);
        let hm = epsilon / e as f64;
        let id = |k: usize, l: usize| l * (e + 1) + k;
        let mut mass = vec![0.0; nodes];
        let mut dense = vec![0i64; nodes * nodes];
        for l in 0..e {
            for k in 0..e {
                let local = [id(k, l), id(k + 1, l), id(k + 1, l + 1), id(k, l + 1)];
                for (r, &gr) in local.iter().enumerate() {
                    mass[gr] += hm * hm / 4.0;
                    for (c, &gc) in local.iter().enumerate() {
                        dense[gr * nodes + gc] += STIFFNESS_X6[r][c] as i64;
                    }
                }
            }
        }
        let stiffness_x6: Vec<Vec<(usize, i64)>> = (0..nodes)
            .map(|r| {
                (0..nodes)
                    .filter(|&c| dense[r * nodes + c] != 0)
                    .map(|c| (c, dense[r * nodes + c]))
                    .collect()
            })
            .collect();
        let bw = e + 2;
        let implicit = diffusion.map(|d| {
            BandedCholesky::factor(nodes, bw, |r, c| {
                let k = dense[r * nodes + c] as f64 / 6.0;
                let m = if r == c { mass[r] } else { 0.0 };
                m + 0.5 * dt * d * k
            })
        });
        let [a, b, c] = implicit;
        let (Some(a), Some(b), Some(c)) = (a, b, c) else {
            return Err(Error::invalid(
                "micro_elements_per_axis",
                "micro system matrix is not positive definite",
            ));
        };
        Ok(MicroOperator {
            e,
            dt,
            steps,
            mass,
            stiffness_x6,
            diffusion,
            implicit: [a, b, c],
        })
    }

    pub fn nodes(&self) -> usize {
        (self.e + 1) * (self.e + 1)
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.mass
    }

    /// `K x` for the assembled stiffness. Rows are summed with integer
    /// coefficients before scaling, so constants map to exactly zero.
    pub fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness_x6
            .iter()
            .map(|row| row.iter().map(|&(c, k)| k as f64 * x[c]).sum::<f64>() / 6.0)
            .collect()
    }

    /// Integrates from `initial` over `steps` steps. With `kinetics` off only
    /// diffusion acts.
    pub fn integrate(
        &self,
        initial: &MicroSolution,
        sources: &MicroSources,
        params: &ParameterSet,
        steps: usize,
        kinetics: bool,
        tile: usize,
    ) -> Result<MicroSolution> {
        let nodes = self.nodes();
        let dt = self.dt;
        let mut state = [initial.u.clone(), initial.p.clone(), initial.m.clone()];
        let mut clipped = initial.clipped;
        let zero = [vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]];
        for step in 0..steps {
            // B U^n = M U^n - (dt/2) D K U^n
            let explicit: [Vec<f64>; 3] = std::array::from_fn(|s| {
                let ku = self.apply_stiffness(&state[s]);
                (0..nodes)
                    .map(|i| self.mass[i] * state[s][i] - 0.5 * dt * self.diffusion[s] * ku[i])
                    .collect()
            });
            let r0 = if kinetics {
                reactions(&state, sources, params)
            } else {
                zero.clone()
            };
            let mut pred: [Vec<f64>; 3] = std::array::from_fn(|s| {
                (0..nodes)
                    .map(|i| explicit[s][i] + dt * self.mass[i] * r0[s][i])
                    .collect()
            });
            for (chol, rhs) in self.implicit.iter().zip(pred.iter_mut()) {
                chol.solve(rhs);
            }
            let r1 = if kinetics {
                reactions(&pred, sources, params)
            } else {
                zero.clone()
            };
            let mut next: [Vec<f64>; 3] = std::array::from_fn(|s| {
                (0..nodes)
                    .map(|i| explicit[s][i] + 0.5 * dt * self.mass[i] * (r0[s][i] + r1[s][i]))
                    .collect()
            });
            for (chol, rhs) in self.implicit.iter().zip(next.iter_mut()) {
                chol.solve(rhs);
            }
            for x in next[2].iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                    clipped += 1;
                }
            }
            if next.iter().any(|f| f.iter().any(|x| !x.is_finite())) {
                return Err(Error::MicroDivergence { tile, step });
            }
            state = next;
        }
        let [u, p, m] = state;
        Ok(MicroSolution { u, p, m, clipped })
    }
}

fn reactions(state: &[Vec<f64>; 3], src: &MicroSources, pr: &ParameterSet) -> [Vec<f64>; 3] {
    let [u, p, m] = state;
    let n = u.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (f1, f2) = (src.f1[i], src.f2[i]);
        out[0][i] = -pr.phi31 * p[i] * u[i] + (pr.alpha31 - pr.phi33 * u[i]) * f1;
        out[1][i] = -pr.phi41 * p[i] * u[i] - pr.phi42 * p[i] * f2 + pr.alpha41 * m[i];
        out[2][i] = pr.phi52 * p[i] * f2 + pr.phi53 * u[i] * f1 - pr.phi54 * m[i];
    }
    out
}

/// Solves from zero initial data over one stage (`k_macro` steps of the
/// macro time step).
pub fn solve_micro(md: &MicroDomain, sources: &MicroSources, params: &ParameterSet) -> Result<MicroSolution> {
    let op = MicroOperator::new(params)?;
    solve_micro_with(&op, md, sources, params)
}

pub fn solve_micro_with(
    op: &MicroOperator,
    md: &MicroDomain,
    sources: &MicroSources,
    params: &ParameterSet,
) -> Result<MicroSolution> {
    let start = MicroSolution::zeros(op.nodes());
    op.integrate(&start, sources, params, op.steps, true, md.boundary_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mask;
    use crate::microdomain::{build_microdomain_family, micro_mesh_nodes};
    use crate::region::TumourRegion;

    fn half_plane_tile(n: usize) -> (MicroDomain, MacroState, ParameterSet) {
        let params = ParameterSet::default().with_grid(n);
        let grid = params.grid().unwrap();
        let mask = Mask::from_fn(&grid, |i, j| j <= n / 2 && i >= 2 && i + 2 < n && j >= 2);
        let region = TumourRegion::from_mask(mask.clone()).unwrap();
        let tiles = build_microdomain_family(&region, &grid, &params).unwrap();
        let tile = tiles.into_iter().find(|t| t.center_node == (n / 2, n / 2)).unwrap();
        let c = Field::from_fn(&grid, |_| 1.0);
        let state = MacroState {
            grid,
            c: Field::from_values(
                n,
                c.values()
                    .iter()
                    .zip(mask.bits())
                    .map(|(&c, &m)| if m { c } else { 0.0 })
                    .collect(),
            )
            .unwrap(),
            v: Field::constant(&grid, 1.0),
            u: Field::zeros(&grid),
            p: Field::zeros(&grid),
            m: Field::zeros(&grid),
            region,
            stage_index: 0,
            time_in_stage: 0.0,
        };
        (tile, state, params)
    }

    #[test]
    fn average_of_constant_and_empty() {
        let g = MacroGrid::new(65).unwrap();
        let f = Field::constant(&g, 3.0);
        assert_eq!(
            compute_macro_average(Vec2::new(2.0, 2.0), 0.25, &f, &g, Some(&Mask::full(65))),
            3.0
        );
        assert_eq!(
            compute_macro_average(Vec2::new(2.0, 2.0), 0.25, &f, &g, Some(&Mask::empty(65))),
            0.0
        );
    }

    #[test]
    fn average_of_linear_field_is_centre() {
        let g = MacroGrid::new(129).unwrap();
        let f = Field::from_fn(&g, |x| x.x);
        let avg = compute_macro_average(Vec2::new(2.0, 2.0), 0.125, &f, &g, None);
        assert!((avg - 2.0).abs() < 1e-12);
    }

    #[test]
    fn average_oracle_by_enumeration() {
        let g = MacroGrid::new(33).unwrap();
        let f = Field::from_fn(&g, |x| (x.x * 3.0).sin() + x.y);
        let c = Vec2::new(1.3, 2.1);
        let r = 0.4;
        let mut vals = Vec::new();
        for j in 0..33 {
            for i in 0..33 {
                if g.point(i, j).distance(c) <= r {
                    vals.push(f.at(i, j));
                }
            }
        }
        let expected = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((compute_macro_average(c, r, &f, &g, None) - expected).abs() < 1e-14);
    }

    #[test]
    fn half_plane_sources() {
        let (tile, state, params) = half_plane_tile(33);
        let src = assemble_sources(&tile, &state);
        let e = params.micro_elements_per_axis;
        assert_eq!(src.f1.len(), 81);
        for l in 0..=e {
            for k in 0..=e {
                let f1 = src.f1[l * (e + 1) + k];
                if l <= e / 2 {
                    assert!((f1 - 1.0).abs() < 1e-14, "node ({k},{l}) = {f1}");
                } else {
                    assert_eq!(f1, 0.0);
                }
            }
        }
        assert!(src.f2.iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_cells_give_zero_source() {
        let (tile, mut state, _) = half_plane_tile(33);
        state.c = Field::zeros(&state.grid);
        let src = assemble_sources(&tile, &state);
        assert!(src.f1.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_sources_give_zero_solution() {
        let (tile, _, params) = half_plane_tile(33);
        let sol = solve_micro(&tile, &MicroSources::uniform(81, 0.0, 0.0), &params).unwrap();
        for f in [&sol.u, &sol.p, &sol.m] {
            assert!(f.iter().all(|&x| x == 0.0));
        }
    }

    fn ode_heun(params: &ParameterSet, f1: f64, f2: f64) -> [f64; 3] {
        let rhs = |y: [f64; 3]| {
            let [u, p, m] = y;
            [
                -params.phi31 * p * u + (params.alpha31 - params.phi33 * u) * f1,
                -params.phi41 * p * u - params.phi42 * p * f2 + params.alpha41 * m,
                params.phi52 * p * f2 + params.phi53 * u * f1 - params.phi54 * m,
            ]
        };
        let dt = params.dt();
        let mut y = [0.0; 3];
        for _ in 0..params.k_macro {
            let k1 = rhs(y);
            let pred = [y[0] + dt * k1[0], y[1] + dt * k1[1], y[2] + dt * k1[2]];
            let k2 = rhs(pred);
            for s in 0..3 {
                y[s] += 0.5 * dt * (k1[s] + k2[s]);
            }
            y[2] = y[2].max(0.0);
        }
        y
    }

    #[test]
    fn uniform_sources_match_ode() {
        let (tile, _, params) = half_plane_tile(33);
        for (f1, f2) in [(1.0, 0.0), (0.7, 0.4)] {
            let sol = solve_micro(&tile, &MicroSources::uniform(81, f1, f2), &params).unwrap();
            let y = ode_heun(&params, f1, f2);
            for (field, expected) in [(&sol.u, y[0]), (&sol.p, y[1]), (&sol.m, y[2])] {
                for &x in field.iter() {
                    assert!((x - expected).abs() < 1e-10, "{x} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn neumann_cosine_mode_decay_rate() {
        let params = ParameterSet::default();
        let op = MicroOperator::new(&params).unwrap();
        let e = params.micro_elements_per_axis;
        let eps = params.epsilon;
        let hm = eps / e as f64;
        let mut start = MicroSolution::zeros(op.nodes());
        for l in 0..=e {
            for k in 0..=e {
                // offset keeps the profile positive so clipping never acts
                start.m[l * (e + 1) + k] = 1.0 + (std::f64::consts::PI * k as f64 * hm / eps).cos();
            }
        }
        let steps = params.k_macro;
        let out = op
            .integrate(
                &start,
                &MicroSources::uniform(op.nodes(), 0.0, 0.0),
                &params,
                steps,
                false,
                0,
            )
            .unwrap();
        // mode amplitude: mass-weighted projection onto the initial profile
        let mass = op.lumped_mass();
        let mode: Vec<f64> = start.m.iter().map(|x| x - 1.0).collect();
        let proj = |f: &[f64]| -> f64 { (0..f.len()).map(|i| mass[i] * f[i] * mode[i]).sum() };
        let t = steps as f64 * params.dt();
        let measured = -(proj(&out.m) / proj(&start.m)).ln() / t;
        let analytic = params.d_m * (std::f64::consts::PI / eps).powi(2);
        assert!(
            ((measured - analytic) / analytic).abs() < 0.02,
            "{measured} vs {analytic}"
        );
    }

    #[test]
    fn stiffness_annihilates_constants_exactly() {
        let op = MicroOperator::new(&ParameterSet::default()).unwrap();
        let k = op.apply_stiffness(&vec![2.5; op.nodes()]);
        assert!(k.iter().all(|&x| x == 0.0));
        let total: f64 = op.lumped_mass().iter().sum();
        assert!((total - 0.0625f64.powi(2)).abs() < 1e-16);
    }

    #[test]
    fn translation_invariant_bit_exact() {
        let (tile, state, params) = half_plane_tile(33);
        let src = assemble_sources(&tile, &state);
        let mut moved = tile.clone();
        moved.center_node = (tile.center_node.0 + 3, tile.center_node.1 + 5);
        moved.center = state.grid.point(moved.center_node.0, moved.center_node.1);
        assert_ne!(micro_mesh_nodes(&moved), micro_mesh_nodes(&tile));
        let a = solve_micro(&tile, &src, &params).unwrap();
        let b = solve_micro(&moved, &src, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plasmin_nonnegative_and_monotone_in_production() {
        let (tile, state, params) = half_plane_tile(33);
        let src = assemble_sources(&tile, &state);
        let mut last = -1.0;
        for phi53 in [0.25, 0.75, 1.5] {
            let p = ParameterSet {
                phi53,
                ..params.clone()
            };
            let sol = solve_micro(&tile, &src, &p).unwrap();
            assert!(sol.m.iter().all(|&x| x >= 0.0));
            let total: f64 = sol.m.iter().sum();
            assert!(total > last);
            last = total;
        }
    }
}
