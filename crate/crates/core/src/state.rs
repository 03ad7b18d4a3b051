use crate::grid::{Field, MacroGrid};
use crate::region::TumourRegion;

/// Macro fields plus the tumour region they are defined on.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub grid: MacroGrid,
    /// Cancer cell density.
    pub c: Field,
    /// Extracellular matrix density.
    pub v: Field,
    /// uPA concentration.
    pub u: Field,
    /// PAI-1 concentration.
    pub p: Field,
    /// Plasmin concentration.
    pub m: Field,
    pub region: TumourRegion,
    pub stage_index: usize,
    pub time_in_stage: f64,
}

impl MacroState {
    pub const FIELD_NAMES: [&'static str; 5] = ["c", "v", "u", "p", "m"];

    pub fn fields(&self) -> [&Field; 5] {
        [&self.c, &self.v, &self.u, &self.p, &self.m]
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        match name {
            "c" => Some(&self.c),
            "v" => Some(&self.v),
            "u" => Some(&self.u),
            "p" => Some(&self.p),
            "m" => Some(&self.m),
            _ => None,
        }
    }
}
