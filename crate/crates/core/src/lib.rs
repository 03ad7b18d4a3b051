//! Two-scale moving-boundary simulation of tumour invasion driven by the
//! urokinase plasminogen activation system.
//!
//! A stage advances the tissue-scale fields on a fixed grid, solves the
//! cell-scale proteolysis problem on small tiles straddling the tumour
//! interface, moves interface points where enough plasmin has leaked out of
//! the tumour, and re-initialises the tissue fields on the grown region.

pub mod banded;
pub mod boundary;
pub mod error;
pub mod grid;
pub mod initial;
pub mod macro_solver;
pub mod micro_solver;
pub mod microdomain;
pub mod mollifier;
pub mod params;
pub mod region;
pub mod runner;
pub mod state;
pub mod threshold;

pub use error::{Error, Result};
pub use grid::{Field, MacroGrid, Mask, Node, Vec2};
pub use params::{EcmMode, ParameterSet};
pub use state::MacroState;
