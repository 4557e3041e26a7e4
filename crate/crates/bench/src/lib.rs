//! Shared fixtures for the benchmarks.

use benney_core::{sample_field, FieldState, InitialData, TorusGrid};

/// A built-in preset sampled on `cells` cells.
pub fn preset_state(name: &str, cells: usize) -> FieldState {
    let spec = InitialData::preset(name).expect("built-in preset");
    sample_field(&spec, TorusGrid::new(cells).expect("valid grid")).expect("preset samples")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_sample_every_preset() {
        for name in benney_core::PRESETS {
            assert_eq!(preset_state(name, 16).u.len(), 16);
        }
    }
}
