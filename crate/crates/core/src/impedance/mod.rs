//! Reflection-coefficient algebra, matching ladders and the tag's modulation space.

mod gamma;
mod matching;
mod space;

pub use gamma::{gamma_from_impedance, impedance_from_gamma, Gamma, Impedance};
pub use matching::{apply_element, apply_matching, ElementKind, MatchingElement, MatchingNetwork};
pub use space::{
    boundary_space, effective_radius, optimize_matching, reachable_space, LogGrid, MatchingChoice, MatchingSearch,
    ModulationSpace, DEFAULT_BOUNDARY_SAMPLES,
};
