//! Model constants, scheme controls, and the flat `key = value` run
//! configuration format.
//!
//! Every key is optional; anything left unset takes its default. Lines are
//! `key = value`, `#` starts a comment, blank lines are ignored. Unknown keys
//! are rejected so typos do not silently fall back to defaults.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `D_c` (alias `D_n`) | 4.3e-3 | cancer cell diffusion |
//! | `D_u` | 2.5e-3 | uPA diffusion |
//! | `D_p` | 3.5e-3 | PAI-1 diffusion |
//! | `D_m` | 4.91e-3 | plasmin diffusion |
//! | `chi_u` | 3.05e-2 | chemotaxis to uPA |
//! | `chi_p` | 3.75e-2 | chemotaxis to PAI-1 |
//! | `chi_v` | 2.85e-2 | haptotaxis to ECM |
//! | `mu1` | 0.25 | cancer cell proliferation |
//! | `mu2` | 0.01 | ECM remodelling |
//! | `delta` | 1.5 | ECM degradation by plasmin (8.15 is a documented alternative) |
//! | `phi21` | 0.75 | uPA/PAI-1 binding feeding ECM |
//! | `phi22` | 0.55 | PAI-1/VN binding |
//! | `phi31` | 0.75 | uPA/PAI-1 binding |
//! | `phi33` | 0.3 | uPA/uPAR binding |
//! | `alpha31` | 0.215 | uPA production |
//! | `phi41` | 0.75 | uPA/PAI-1 binding |
//! | `phi42` | 0.55 | PAI-1/VN binding |
//! | `alpha41` | 0.5 | PAI-1 production |
//! | `phi52` | 0.11 | plasmin gain from PAI-1/VN |
//! | `phi53` | 0.75 | plasmin gain from uPA/uPAR |
//! | `phi54` | 0.5 | plasmin decay |
//! | `beta` | 0.775 | optimal ECM level of the tissue threshold, in (0, 1) |
//! | `gamma` | 3.125e-3 | mollifier radius, must be below `epsilon / 3` |
//! | `macro_grid_n` | 129 | nodes per axis on `[0, 4]` |
//! | `epsilon` | `2 h` | microdomain edge; must equal twice the grid spacing |
//! | `dt_macro` | 0.25 | stage duration Δt |
//! | `k_macro` | 20 | time steps per stage |
//! | `micro_elements_per_axis` | 8 | micro mesh resolution (power of two) |
//! | `n_stages` | 60 | number of macro-micro stages |
//! | `ecm_mode` | `homogeneous` | `homogeneous` or `heterogeneous` |
//! | `output_dir` | `output` | artifact directory |
//! | `snapshot_stages` | `0,20,40,60` | stages whose fields are written |
//!
//! The time step `dt_macro / k_macro` must satisfy
//! `dt <= 0.2 h² / max(D_c, D_u, D_p, D_m)`. The default Δt keeps that bound
//! for every diffusion coefficient up to 1.95e-2 on the default grid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MacroGrid;

/// Explicit-scheme stability factor: `dt <= STABILITY_FACTOR * h² / D_max`.
pub const STABILITY_FACTOR: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcmMode {
    Homogeneous,
    Heterogeneous,
}

impl fmt::Display for EcmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EcmMode::Homogeneous => f.write_str("homogeneous"),
            EcmMode::Heterogeneous => f.write_str("heterogeneous"),
        }
    }
}

impl FromStr for EcmMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "homogeneous" => Ok(EcmMode::Homogeneous),
            "heterogeneous" => Ok(EcmMode::Heterogeneous),
            other => Err(format!("expected `homogeneous` or `heterogeneous`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub d_c: f64,
    pub d_u: f64,
    pub d_p: f64,
    pub d_m: f64,
    pub chi_u: f64,
    pub chi_p: f64,
    pub chi_v: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub delta: f64,
    pub phi21: f64,
    pub phi22: f64,
    pub phi31: f64,
    pub phi33: f64,
    pub phi41: f64,
    pub phi42: f64,
    pub phi52: f64,
    pub phi53: f64,
    pub phi54: f64,
    pub alpha31: f64,
    pub alpha41: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub macro_grid_n: usize,
    pub dt_macro: f64,
    pub k_macro: usize,
    pub micro_elements_per_axis: usize,
    pub n_stages: usize,
    pub ecm_mode: EcmMode,
    pub output_dir: PathBuf,
    pub snapshot_stages: Vec<usize>,
}

impl Default for ParameterSet {
    fn default() -> Self {
        let macro_grid_n = 129;
        ParameterSet {
            d_c: 4.3e-3,
            d_u: 2.5e-3,
            d_p: 3.5e-3,
            d_m: 4.91e-3,
            chi_u: 3.05e-2,
            chi_p: 3.75e-2,
            chi_v: 2.85e-2,
            mu1: 0.25,
            mu2: 0.01,
            delta: 1.5,
            phi21: 0.75,
            phi22: 0.55,
            phi31: 0.75,
            phi33: 0.3,
            phi41: 0.75,
            phi42: 0.55,
            phi52: 0.11,
            phi53: 0.75,
            phi54: 0.5,
            alpha31: 0.215,
            alpha41: 0.5,
            beta: 0.775,
            gamma: 3.125e-3,
            epsilon: 2.0 * MacroGrid::EXTENT / (macro_grid_n - 1) as f64,
            macro_grid_n,
            dt_macro: 0.25,
            k_macro: 20,
            micro_elements_per_axis: 8,
            n_stages: 60,
            ecm_mode: EcmMode::Homogeneous,
            output_dir: PathBuf::from("output"),
            snapshot_stages: vec![0, 20, 40, 60],
        }
    }
}

impl ParameterSet {
    pub fn grid(&self) -> Result<MacroGrid> {
        MacroGrid::new(self.macro_grid_n)
    }

    pub fn h(&self) -> f64 {
        MacroGrid::EXTENT / (self.macro_grid_n - 1) as f64
    }

    /// Time step of both the macro scheme and the micro scheme.
    pub fn dt(&self) -> f64 {
        self.dt_macro / self.k_macro as f64
    }

    pub fn max_diffusion(&self) -> f64 {
        self.d_c.max(self.d_u).max(self.d_p).max(self.d_m)
    }

    /// Largest time step allowed by the explicit-scheme stability bound.
    pub fn stable_dt(&self) -> f64 {
        let h = self.h();
        let d = self.max_diffusion();
        if d > 0.0 {
            STABILITY_FACTOR * h * h / d
        } else {
            f64::INFINITY
        }
    }

    /// Changes the grid resolution and keeps `epsilon = 2 h` in step.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.macro_grid_n = n;
        self.epsilon = 2.0 * MacroGrid::EXTENT / (n.max(2) - 1) as f64;
        self
    }

    /// Levels of the dyadic pixel hierarchy available on the micro mesh.
    pub fn max_dyadic_level(&self) -> u32 {
        self.micro_elements_per_axis.trailing_zeros()
    }

    pub fn validate(&self) -> Result<()> {
        let rates: [(&str, f64); 21] = [
            ("D_c", self.d_c),
            ("D_u", self.d_u),
            ("D_p", self.d_p),
            ("D_m", self.d_m),
            ("chi_u", self.chi_u),
            ("chi_p", self.chi_p),
            ("chi_v", self.chi_v),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("delta", self.delta),
            ("phi21", self.phi21),
            ("phi22", self.phi22),
            ("phi31", self.phi31),
            ("phi33", self.phi33),
            ("phi41", self.phi41),
            ("phi42", self.phi42),
            ("phi52", self.phi52),
            ("phi53", self.phi53),
            ("phi54", self.phi54),
            ("alpha31", self.alpha31),
            ("alpha41", self.alpha41),
        ];
        for (key, value) in rates {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid(key, format!("must be finite and >= 0, got {value}")));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if self.macro_grid_n < 9 {
            return Err(Error::invalid(
                "macro_grid_n",
                format!("need at least 9 nodes per axis, got {}", self.macro_grid_n),
            ));
        }
        let h = self.h();
        if !self.epsilon.is_finite() || (self.epsilon - 2.0 * h).abs() > 1e-12 * h {
            return Err(Error::invalid(
                "epsilon",
                format!("must equal twice the grid spacing ({}), got {}", 2.0 * h, self.epsilon),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < self.epsilon / 3.0) {
            return Err(Error::invalid(
                "gamma",
                format!(
                    "must lie in (0, epsilon/3 = {}), got {}",
                    self.epsilon / 3.0,
                    self.gamma
                ),
            ));
        }
        let e = self.micro_elements_per_axis;
        if e < 2 || !e.is_power_of_two() {
            return Err(Error::invalid(
                "micro_elements_per_axis",
                format!("must be a power of two >= 2, got {e}"),
            ));
        }
        if self.k_macro == 0 {
            return Err(Error::invalid("k_macro", "must be at least 1"));
        }
        if !(self.dt_macro > 0.0 && self.dt_macro.is_finite()) {
            return Err(Error::invalid(
                "dt_macro",
                format!("must be positive, got {}", self.dt_macro),
            ));
        }
        let bound = self.stable_dt();
        if self.dt() > bound * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt_macro",
                format!(
                    "time step dt_macro/k_macro = {} exceeds the stability bound {bound}",
                    self.dt()
                ),
            ));
        }
        if self.snapshot_stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("snapshot_stages", "must be strictly increasing"));
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::invalid(key, format!("`{value}` is not a number ({e})")))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| Error::invalid(key, format!("`{value}` is not a count ({e})")))
        };
        match key {
            "D_c" | "D_n" => self.d_c = float()?,
            "D_u" => self.d_u = float()?,
            "D_p" => self.d_p = float()?,
            "D_m" => self.d_m = float()?,
            "chi_u" => self.chi_u = float()?,
            "chi_p" => self.chi_p = float()?,
            "chi_v" => self.chi_v = float()?,
            "mu1" => self.mu1 = float()?,
            "mu2" => self.mu2 = float()?,
            "delta" => self.delta = float()?,
            "phi21" => self.phi21 = float()?,
            "phi22" => self.phi22 = float()?,
            "phi31" => self.phi31 = float()?,
            "phi33" => self.phi33 = float()?,
            "phi41" => self.phi41 = float()?,
            "phi42" => self.phi42 = float()?,
            "phi52" => self.phi52 = float()?,
            "phi53" => self.phi53 = float()?,
            "phi54" => self.phi54 = float()?,
            "alpha31" => self.alpha31 = float()?,
            "alpha41" => self.alpha41 = float()?,
            "beta" => self.beta = float()?,
            "gamma" => self.gamma = float()?,
            "epsilon" => self.epsilon = float()?,
            "macro_grid_n" => self.macro_grid_n = count()?,
            "dt_macro" => self.dt_macro = float()?,
            "k_macro" => self.k_macro = count()?,
            "micro_elements_per_axis" => self.micro_elements_per_axis = count()?,
            "n_stages" => self.n_stages = count()?,
            "ecm_mode" => self.ecm_mode = value.parse().map_err(|e| Error::invalid(key, e))?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "snapshot_stages" => self.snapshot_stages = parse_stage_list(value).map_err(|e| Error::invalid(key, e))?,
            _ => return Err(Error::invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Renders the full parameter set in the config file format.
    pub fn to_config_string(&self) -> String {
        let stages: Vec<String> = self.snapshot_stages.iter().map(|s| s.to_string()).collect();
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("D_c", fmt_f64(self.d_c));
        line("D_u", fmt_f64(self.d_u));
        line("D_p", fmt_f64(self.d_p));
        line("D_m", fmt_f64(self.d_m));
        line("chi_u", fmt_f64(self.chi_u));
        line("chi_p", fmt_f64(self.chi_p));
        line("chi_v", fmt_f64(self.chi_v));
        line("mu1", fmt_f64(self.mu1));
        line("mu2", fmt_f64(self.mu2));
        line("delta", fmt_f64(self.delta));
        line("phi21", fmt_f64(self.phi21));
        line("phi22", fmt_f64(self.phi22));
        line("phi31", fmt_f64(self.phi31));
        line("phi33", fmt_f64(self.phi33));
        line("phi41", fmt_f64(self.phi41));
        line("phi42", fmt_f64(self.phi42));
        line("phi52", fmt_f64(self.phi52));
        line("phi53", fmt_f64(self.phi53));
        line("phi54", fmt_f64(self.phi54));
        line("alpha31", fmt_f64(self.alpha31));
        line("alpha41", fmt_f64(self.alpha41));
        line("beta", fmt_f64(self.beta));
        line("gamma", fmt_f64(self.gamma));
        line("epsilon", fmt_f64(self.epsilon));
        line("macro_grid_n", self.macro_grid_n.to_string());
        line("dt_macro", fmt_f64(self.dt_macro));
        line("k_macro", self.k_macro.to_string());
        line("micro_elements_per_axis", self.micro_elements_per_axis.to_string());
        line("n_stages", self.n_stages.to_string());
        line("ecm_mode", self.ecm_mode.to_string());
        line("output_dir", self.output_dir.display().to_string());
        line("snapshot_stages", stages.join(","));
        out
    }
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

fn parse_stage_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| format!("`{}` is not a stage index ({e})", s.trim()))
        })
        .collect()
}

/// Parses config text. `macro_grid_n` also re-derives `epsilon` unless the
/// text sets `epsilon` explicitly.
pub fn parse_config(text: &str) -> Result<ParameterSet> {
    let mut params = ParameterSet::default();
    let mut epsilon_set = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: lineno + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line: lineno + 1,
                message: "empty key".into(),
            });
        }
        if key == "epsilon" {
            epsilon_set = true;
        }
        params.set(key, value)?;
    }
    if !epsilon_set && params.macro_grid_n >= 2 {
        params.epsilon = 2.0 * params.h();
    }
    params.validate()?;
    Ok(params)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ParameterSet> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}
