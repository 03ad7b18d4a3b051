//! From micro plasmin fields to interface motion: pixel decomposition of each
//! tile, plasmin front detection, relocation decisions, boundary rebuild and
//! macro re-initialisation.

pub mod decision;
pub mod dyadic;
pub mod peaks;
pub mod rebuild;

pub use decision::{decide, DecisionReason, RelocationDecision};
pub use dyadic::{dyadic_decompose, DyadicDecomposition, Pixel};
pub use peaks::{relocation_vector, select_peaks, transitional_probability};
pub use rebuild::{rebuild_boundary, reinitialize_macro, RebuildReport};
